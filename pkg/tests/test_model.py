import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ehcrn.model import (
    Allocation,
    ChannelRealization,
    SystemParams,
    Topology,
    channel_gain,
    constraint_residuals,
    db_to_linear,
    end_to_end_throughput,
    equal_throughput_allocation,
    harvested_energies,
    harvested_energy,
    hop_throughput,
    hop_throughputs,
    make_result,
)

pos = st.floats(1e-3, 1e3, allow_nan=False, allow_infinity=False)


def unit_channel(k, g_e=1.0, g_i=1.0, g_d=1.0):
    return ChannelRealization(np.full(k + 1, g_e), np.full(k, g_i), np.full(k, g_d))


@pytest.mark.parametrize("x,expected", [(0, 1.0), (40, 1e4), (10, 10.0)])
def test_db_to_linear(x, expected):
    assert db_to_linear(x) == pytest.approx(expected, rel=1e-15)


def test_db_to_linear_rejects_nonfinite():
    with pytest.raises(ValueError):
        db_to_linear(math.inf)


@pytest.mark.parametrize("args,expected", [((1, 1, 1, 2), 1.0), ((0.5, 10, 1, 2), 0.005), ((2, 20, 1, 2), 0.005)])
def test_channel_gain(args, expected):
    assert channel_gain(*args) == pytest.approx(expected, rel=1e-15)


def test_channel_gain_without_path_loss_is_raw_fading():
    h = np.array([0.3, 1.7])
    np.testing.assert_array_equal(channel_gain(h, np.array([5.0, 9.0]), 1.0, 0.0), h)


def test_channel_gain_rejects_nonpositive_distance():
    with pytest.raises(ValueError):
        channel_gain(1.0, 0.0)


def test_system_params_validation():
    with pytest.raises(ValueError):
        SystemParams(frame_duration=0)
    with pytest.raises(ValueError):
        SystemParams(harvest_efficiency=1.5)
    with pytest.raises(ValueError):
        SystemParams(peak_interference=-1)
    sys = SystemParams.from_db(40, 5)
    assert sys.pt_power == pytest.approx(1e4)
    assert sys.peak_interference == pytest.approx(10**0.5)
    assert sys.eps_tau == pytest.approx(1e-6)


def test_harvested_energy_direct_value():
    sys = SystemParams(pt_power=1e4, harvest_efficiency=0.8)
    chan = unit_channel(2, g_e=1e-3)
    tau = np.array([0.1, 0.15, 0.3])
    assert harvested_energy(sys, chan, tau, 2) == pytest.approx(2.0)


def test_harvested_energy_edge_cases():
    chan = unit_channel(2)
    assert harvested_energy(SystemParams(), chan, [0.0, 0.5, 0.5], 1) == 0.0
    assert harvested_energy(SystemParams(harvest_efficiency=0.0), chan, [0.3, 0.3, 0.4], 3) == 0.0
    with pytest.raises(IndexError):
        harvested_energy(SystemParams(), chan, [0.3, 0.3, 0.4], 4)
    with pytest.raises(IndexError):
        harvested_energy(SystemParams(), chan, [0.3, 0.3, 0.4], 0)


@given(st.lists(st.floats(0, 1), min_size=4, max_size=8))
def test_harvested_energy_nondecreasing_for_equal_gains(raw):
    tau = np.array(raw) / max(sum(raw), 1e-12)
    k = len(tau) - 1
    chan = unit_channel(k, g_e=0.01)
    e = [harvested_energy(SystemParams(), chan, tau, j) for j in range(1, k + 2)]
    assert all(b >= a for a, b in zip(e, e[1:]))


@pytest.mark.parametrize("args,expected", [((0.5, 0.5, 1), 0.5), ((0.3, 0.0, 2.0), 0.0), ((0.25, 0.75, 1), 0.5)])
def test_hop_throughput(args, expected):
    assert hop_throughput(*args) == pytest.approx(expected, rel=1e-15)


def test_hop_throughput_zero_time():
    assert hop_throughput(0.0, 0.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        hop_throughput(0.0, 1.0, 1.0)


@given(pos, pos, pos, st.floats(1e-3, 1e3))
def test_perspective_scaling(t, e, eta, theta):
    base = hop_throughput(t, e, eta)
    assert hop_throughput(theta * t, theta * e, eta) == pytest.approx(theta * base, rel=1e-12)


@given(pos, pos, pos, st.floats(1.001, 10))
def test_throughput_monotone_in_time_and_energy(t, e, eta, f):
    base = hop_throughput(t, e, eta)
    assert hop_throughput(t * f, e, eta) > base
    assert hop_throughput(t, e * f, eta) > base


def test_end_to_end_is_bottleneck():
    chan = ChannelRealization(np.ones(4), np.ones(3), np.ones(3))
    alloc = Allocation(np.array([0.1, 0.3, 0.3, 0.3]), np.array([0.9, 0.3, 0.6]))
    r = hop_throughputs(alloc, chan)
    assert end_to_end_throughput(alloc, chan) == pytest.approx(r.min())
    assert r.min() == pytest.approx(0.3)


def test_end_to_end_dimension_mismatch():
    chan = unit_channel(2)
    with pytest.raises(ValueError):
        end_to_end_throughput(Allocation(np.array([0.5, 0.5]), np.array([0.1])), chan)


def test_residuals_feasible_and_violations():
    sys = SystemParams()
    chan = unit_channel(3, g_e=1e-3, g_i=1e-3)
    tau = np.full(4, 0.25)
    ok = constraint_residuals(Allocation(tau, np.zeros(3)), sys, chan)
    assert ok.feasible() and ok.c3 == 0.0
    budget = harvested_energies(sys, chan, tau)
    bad = constraint_residuals(Allocation(tau, np.array([budget[0] * 1.1, 0.0, 0.0])), sys, chan)
    assert bad.c1[0] > 0 and not bad.feasible()


def test_channel_realization_validation():
    with pytest.raises(ValueError):
        ChannelRealization(np.ones(3), np.ones(3), np.ones(3))
    with pytest.raises(ValueError):
        ChannelRealization(np.ones(3), np.ones(2), -np.ones(2))
    chan = ChannelRealization(np.ones(3), np.ones(2), np.array([2.0, 4.0]), noise_power=2.0)
    np.testing.assert_array_equal(chan.eta, [1.0, 2.0])
    with pytest.raises(ValueError):
        chan.g_d[0] = 5.0


def test_topology_distances():
    topo = Topology((0.0, 10.0), (0.0, -10.0), ((-10.0, 0.0), (0.0, 0.0), (10.0, 0.0)))
    np.testing.assert_allclose(topo.energy_distances(), [math.sqrt(200), 10.0, math.sqrt(200)])
    np.testing.assert_allclose(topo.data_distances(), [10.0, 10.0])
    np.testing.assert_allclose(topo.interference_distances(), [math.sqrt(200), 10.0])


@given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=6), st.integers(0, 10_000))
def test_equal_throughput_allocation_is_feasible_and_balanced(powers, seed):
    rng = np.random.default_rng(seed)
    k = len(powers)
    chan = ChannelRealization(rng.exponential(size=k + 1) * 1e-2, rng.exponential(size=k) * 1e-2, rng.exponential(size=k) * 0.1)
    sys = SystemParams.from_db(40, 5)
    alloc = equal_throughput_allocation(powers, sys, chan)
    assert constraint_residuals(alloc, sys, chan).feasible()
    assert alloc.tau.sum() == pytest.approx(1.0, abs=1e-12)
    r = hop_throughputs(alloc, chan)
    assert r.max() - r.min() <= 1e-9 * max(r.max(), 1e-300)


def test_solve_result_consistency():
    sys = SystemParams()
    chan = unit_channel(2, g_e=1e-3)
    alloc = Allocation(np.array([0.5, 0.25, 0.25]), np.array([1.0, 1.5]))
    res = make_result(alloc, sys, chan, "manual")
    assert res.r_star == pytest.approx(end_to_end_throughput(alloc, chan), abs=1e-12)
    assert 0 <= res.utilization <= 1
    assert res.summary()["algorithm"] == "manual"
