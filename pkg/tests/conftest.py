import hypothesis
import numpy as np
import pytest

from ehcrn import SeededRng, SystemParams, build_topology, sample_channels

hypothesis.settings.register_profile("default", deadline=None, max_examples=60)
hypothesis.settings.register_profile("ci", deadline=None, max_examples=25)
hypothesis.settings.load_profile("default")


def instance(scenario="S2", hops=3, pt_db=40.0, ip_db=5.0, seed=1, realization=0, **kw):
    sys = SystemParams.from_db(pt_db, ip_db, **kw)
    chan = sample_channels(build_topology(scenario, hops), sys, SeededRng(seed, realization))
    return sys, chan


@pytest.fixture
def make_instance():
    return instance


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
