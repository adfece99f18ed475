import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ehcrn import ScenarioId, SeededRng, SystemParams, build_topology, sample_channels
from ehcrn.model import channel_gain
from ehcrn.scenarios import LINK_ENERGY


def test_scenario_two_two_hops_positions():
    topo = build_topology(ScenarioId.S2, 2)
    assert topo.su_positions == ((-10.0, 0.0), (0.0, 0.0), (10.0, 0.0))
    assert topo.pt_position == (0.0, 10.0) and topo.pr_position == (0.0, -10.0)


def test_scenario_one_single_hop_positions():
    assert build_topology("S1", 1).su_positions == ((0.0, 0.0), (20.0, 0.0))


def test_scenario_three_endpoints():
    topo = build_topology(3, 4)
    assert topo.su_positions[0] == (-20.0, 0.0) and topo.su_positions[-1] == (0.0, 0.0)


def test_energy_distances_scenario_two():
    d = build_topology("S2", 2).energy_distances()
    assert d[1] == pytest.approx(10.0, rel=1e-15)
    assert d[0] == pytest.approx(math.sqrt(200.0), rel=1e-15)
    assert d[2] == pytest.approx(14.142, abs=5e-4)


@pytest.mark.parametrize("k", [1, 3, 6])
def test_relays_equally_spaced(k):
    d = build_topology("S1", k).data_distances()
    np.testing.assert_allclose(d, 20.0 / k, rtol=1e-14)


def test_scenario_parsing():
    for text in ("S2", "s2", "2", "Scenario2", 2, ScenarioId.S2):
        assert ScenarioId.parse(text) is ScenarioId.S2
    with pytest.raises(ValueError):
        ScenarioId.parse("S4")
    assert ScenarioId.S3.label == "S3"


def test_bad_hop_count():
    with pytest.raises(ValueError):
        build_topology("S1", 0)


def test_same_key_same_block():
    sys = SystemParams()
    topo = build_topology("S2", 5)
    a = sample_channels(topo, sys, SeededRng(42, 7))
    b = sample_channels(topo, sys, SeededRng(42, 7))
    for name in ("g_e", "g_i", "g_d"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()
    assert a.digest() == b.digest()
    c = sample_channels(topo, sys, SeededRng(42, 8))
    assert c.digest() != a.digest()


def test_blocks_do_not_depend_on_sampling_order():
    sys = SystemParams()
    topo = build_topology("S1", 3)
    forward = [sample_channels(topo, sys, SeededRng(5, r)).digest() for r in range(5)]
    backward = [sample_channels(topo, sys, SeededRng(5, r)).digest() for r in reversed(range(5))]
    assert forward == backward[::-1]


def test_exponential_mean():
    draws = SeededRng(2024, 0).exponentials(LINK_ENERGY, 100_000)
    assert draws.mean() == pytest.approx(1.0, abs=0.02)
    assert np.all(draws >= 0)


def test_exponential_distribution_shape():
    from scipy import stats

    draws = SeededRng(99, 3).exponentials(2, 20_000)
    assert stats.kstest(draws, "expon").pvalue > 1e-3


def test_no_path_loss_leaves_raw_fading():
    sys = SystemParams(path_loss_exponent=0.0)
    rng = SeededRng(11, 2)
    chan = sample_channels(build_topology("S3", 3), sys, rng)
    np.testing.assert_array_equal(chan.g_e, rng.exponentials(LINK_ENERGY, 4))


@pytest.mark.parametrize("k", [1, 2, 5, 6])
def test_scenario_two_mirror_symmetry(k):
    d = build_topology("S2", k).energy_distances()
    np.testing.assert_allclose(d, d[::-1], rtol=1e-14)


@pytest.mark.parametrize("k", [1, 3, 6])
def test_scenarios_one_and_three_are_mirror_images(k):
    d1 = build_topology("S1", k).energy_distances()
    d3 = build_topology("S3", k).energy_distances()
    np.testing.assert_allclose(d1, d3[::-1], rtol=1e-14)
    h = SeededRng(3, 0).exponentials(LINK_ENERGY, k + 1)
    np.testing.assert_allclose(channel_gain(h, d1), channel_gain(h[::-1], d3)[::-1], rtol=1e-14)


def test_mirror_energy_statistics():
    sys = SystemParams()
    k = 4
    s1 = np.array([sample_channels(build_topology("S1", k), sys, SeededRng(8, r)).g_e for r in range(4000)])
    s3 = np.array([sample_channels(build_topology("S3", k), sys, SeededRng(9, r)).g_e for r in range(4000)])
    # Mean gain is d^-2 with unit-mean fading; compare with a 5-sigma band.
    m1, m3 = s1.mean(axis=0), s3.mean(axis=0)[::-1]
    se = np.hypot(s1.std(axis=0), s3.std(axis=0)[::-1]) / math.sqrt(4000)
    assert np.all(np.abs(m1 - m3) <= 5 * se)


@given(
    scenario=st.sampled_from(list(ScenarioId)),
    k=st.integers(1, 8),
    seed=st.integers(0, 2**31),
    realization=st.integers(0, 10_000),
    alpha=st.floats(0.0, 5.0),
)
def test_gains_finite_and_nonnegative(scenario, k, seed, realization, alpha):
    sys = SystemParams(path_loss_exponent=alpha)
    chan = sample_channels(build_topology(scenario, k), sys, SeededRng(seed, realization))
    for arr in (chan.g_e, chan.g_i, chan.g_d):
        assert np.all(np.isfinite(arr)) and np.all(arr >= 0)
    np.testing.assert_array_equal(chan.eta, chan.g_d / sys.noise_power)


def test_rng_rejects_negative_keys():
    with pytest.raises(ValueError):
        SeededRng(-1)
    assert SeededRng(3).at(4) == SeededRng(3, 4)
