import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ehcrn import ChannelRealization, SystemParams, constraint_residuals, jotpa_solve, oracle_solve
from ehcrn.model import hop_throughputs
from ehcrn.oracle import _best, optimal_e_given_tau, reduced_objective, reduced_supergradient

from conftest import instance


def test_no_harvest_time_means_no_energy():
    sys, chan = instance(hops=2)
    e = optimal_e_given_tau(np.array([0.0, 0.5, 0.5]), sys, chan)
    assert e[0] == 0.0


def test_interference_cap_binds_when_smaller():
    sys = SystemParams(pt_power=1e6, peak_interference=2.0)
    chan = ChannelRealization([1.0, 1.0], [4.0], [1.0])
    e = optimal_e_given_tau(np.array([0.5, 0.5]), sys, chan)
    assert e[0] == pytest.approx(2.0 * 0.5 / 4.0, rel=1e-15)


def test_unbounded_interference_budget_gives_the_harvest():
    sys = SystemParams(pt_power=10.0, peak_interference=1e300)
    chan = ChannelRealization([0.3, 0.2, 0.1], [1.0, 1.0], [1.0, 1.0])
    tau = np.array([0.2, 0.3, 0.5])
    e = optimal_e_given_tau(tau, sys, chan)
    np.testing.assert_array_equal(e, [8.0 * 0.3 * 0.2, 8.0 * 0.2 * 0.5])


def test_dead_interference_link_leaves_only_the_harvest_cap():
    sys = SystemParams(pt_power=10.0, peak_interference=1.0)
    chan = ChannelRealization([0.3, 0.2], [0.0], [1.0])
    e = optimal_e_given_tau(np.array([0.4, 0.6]), sys, chan)
    assert e[0] == pytest.approx(8.0 * 0.3 * 0.4)


def test_full_harvest_slot_gives_zero_rate():
    sys, chan = instance(hops=3)
    assert reduced_objective(np.array([1.0, 0.0, 0.0, 0.0]), sys, chan) == 0.0


def test_single_hop_half_split():
    sys = SystemParams(pt_power=2.5, harvest_efficiency=0.8, peak_interference=1e12)
    chan = ChannelRealization([1.0, 1.0], [1.0], [1.0])
    val = reduced_objective(np.array([0.5, 0.5]), sys, chan)
    assert val == pytest.approx(0.5 * math.log2(3.0), rel=1e-14)
    assert val == pytest.approx(0.7925, abs=5e-5)


def test_batched_objective_matches_single_calls(rng):
    sys, chan = instance(hops=3)
    taus = rng.dirichlet(np.ones(4), size=50)
    batch = reduced_objective(taus, sys, chan)
    np.testing.assert_array_equal(batch, [reduced_objective(t, sys, chan) for t in taus])


@pytest.mark.parametrize("k", [1, 2, 4])
def test_reduced_objective_is_concave(k, rng):
    sys, chan = instance(hops=k, seed=k)
    for _ in range(300):
        t1, t2 = rng.dirichlet(np.ones(k + 1), size=2)
        th = rng.uniform()
        mid = reduced_objective(th * t1 + (1 - th) * t2, sys, chan)
        chord = th * reduced_objective(t1, sys, chan) + (1 - th) * reduced_objective(t2, sys, chan)
        assert mid >= chord - 1e-9


@settings(max_examples=100)
@given(seed=st.integers(0, 1000), k=st.integers(1, 4), data=st.data())
def test_supergradient_inequality(seed, k, data):
    sys, chan = instance(hops=k, seed=seed)
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    x = rng.dirichlet(np.ones(k + 1))
    val, g = reduced_supergradient(x, sys, chan)
    assert val == pytest.approx(reduced_objective(x, sys, chan))
    for y in rng.dirichlet(np.ones(k + 1), size=10):
        assert reduced_objective(y, sys, chan) <= val + g @ (y - x) + 1e-9 * max(val, 1.0)


def test_ties_break_toward_the_lexicographically_smallest_times():
    taus = np.array([[0.5, 0.3, 0.2], [0.5, 0.2, 0.3], [0.6, 0.1, 0.3]])
    assert _best(taus, np.array([1.0, 1.0, 0.5])) == 1
    assert _best(taus, np.array([0.0, 1.0, 2.0])) == 2


def test_dead_data_links_give_zero():
    sys = SystemParams.from_db(40, 5)
    chan = ChannelRealization([1e-2] * 3, [1e-2] * 2, [0.0, 0.0])
    assert oracle_solve(sys, chan).r_star == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_grid_and_supergradient_agree_on_one_hop(seed):
    sys, chan = instance(hops=1, seed=seed)
    grid = oracle_solve(sys, chan, method="grid").r_star
    sub = oracle_solve(sys, chan, method="projected-subgradient").r_star
    assert sub == pytest.approx(grid, rel=1e-3)


@pytest.mark.parametrize("seed", range(4))
def test_plain_lattice_is_monotone_in_resolution(seed):
    sys, chan = instance(hops=2, seed=seed)
    prev = 0.0
    for n in (10, 20, 40, 80):
        r = oracle_solve(sys, chan, resolution=n, refine_tol=1.0, polish=False).r_star
        assert r >= prev - 1e-12
        prev = r


@pytest.mark.parametrize("seed", range(4))
def test_refined_grid_is_monotone_in_resolution(seed):
    sys, chan = instance(hops=2, seed=seed, ip_db=10.0)
    low = oracle_solve(sys, chan, resolution=50).r_star
    high = oracle_solve(sys, chan, resolution=100).r_star
    assert high >= low - 1e-12


@pytest.mark.parametrize("seed", range(4))
def test_two_hops_agree_with_jotpa(seed):
    sys, chan = instance(hops=2, seed=seed, ip_db=0.0)
    assert oracle_solve(sys, chan).r_star == pytest.approx(jotpa_solve(sys, chan).r_star, rel=0.02)


@pytest.mark.parametrize("k", [2, 3])
@pytest.mark.parametrize("seed", range(3))
def test_oracle_optimum_equalizes_hop_rates(k, seed):
    sys, chan = instance(hops=k, seed=seed, ip_db=10.0)
    res = oracle_solve(sys, chan)
    rates = hop_throughputs(res.allocation, chan)
    assert rates.max() - rates.min() <= 0.02 * res.r_star


@pytest.mark.parametrize("method", ["grid", "projected-subgradient"])
def test_oracle_witness_is_feasible(method):
    sys, chan = instance(hops=3, seed=4)
    res = oracle_solve(sys, chan, method=method, iterations=2000)
    assert constraint_residuals(res.allocation, sys, chan).max_relative() <= 0.0


def test_coarse_grid_warns():
    sys, chan = instance(hops=2)
    with pytest.warns(UserWarning, match="resolution"):
        res = oracle_solve(sys, chan, resolution=5)
    assert res.diagnostics["coarse"]


def test_default_grid_does_not_warn():
    sys, chan = instance(hops=1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        oracle_solve(sys, chan)


def test_grid_refuses_large_networks():
    sys, chan = instance(hops=4)
    with pytest.raises(ValueError):
        oracle_solve(sys, chan, method="grid")
    with pytest.raises(ValueError):
        oracle_solve(sys, chan, method="simplex")


@pytest.mark.parametrize("k", [1, 2, 3])
def test_conic_route_agrees_with_grid(k):
    pytest.importorskip("cvxpy")
    sys, chan = instance(hops=k, seed=17, ip_db=5.0)
    grid = oracle_solve(sys, chan).r_star
    assert oracle_solve(sys, chan, method="conic").r_star == pytest.approx(grid, rel=1e-4)
