"""Deployment geometries and seeded Rayleigh block fading."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import ChannelRealization, SystemParams, Topology, channel_gain

PT_POSITION = (0.0, 10.0)
PR_POSITION = (0.0, -10.0)

# Link families get fixed stream codes so their draws never shift each other.
LINK_ENERGY, LINK_INTERFERENCE, LINK_DATA = 1, 2, 3


class ScenarioId(enum.Enum):
    """SU line placement relative to the primary pair."""

    S1 = 1  # source under the PUs, destination to the right
    S2 = 2  # SUs symmetric around the PUs
    S3 = 3  # destination under the PUs, source to the left

    @classmethod
    def parse(cls, value) -> "ScenarioId":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower().removeprefix("scenario").removeprefix("s")
        return cls(int(text))

    @property
    def label(self) -> str:
        return f"S{self.value}"


ENDPOINTS = {
    ScenarioId.S1: ((0.0, 0.0), (20.0, 0.0)),
    ScenarioId.S2: ((-10.0, 0.0), (10.0, 0.0)),
    ScenarioId.S3: ((-20.0, 0.0), (0.0, 0.0)),
}


def build_topology(scenario, hops: int) -> Topology:
    """Source and destination at the scenario endpoints with K-1 equally spaced relays."""
    if hops < 1:
        raise ValueError(f"hop count must be at least 1, got {hops}")
    (x0, y0), (x1, y1) = ENDPOINTS[ScenarioId.parse(scenario)]
    s = np.linspace(0.0, 1.0, hops + 1)
    sus = tuple((float(x0 + (x1 - x0) * t), float(y0 + (y1 - y0) * t)) for t in s)
    return Topology(PT_POSITION, PR_POSITION, sus)


@dataclass(frozen=True)
class SeededRng:
    """Counter-style key for one fading block.

    The generator for a link family is rebuilt from ``(seed, realization, link)``,
    so a block depends only on its key, never on what was sampled before it.
    """

    seed: int
    realization: int = 0

    def __post_init__(self):
        if self.seed < 0 or self.realization < 0:
            raise ValueError("seed and realization index must be nonnegative")

    def uniforms(self, link: int, n: int) -> np.ndarray:
        return np.random.default_rng([self.seed, self.realization, link]).random(n)

    def exponentials(self, link: int, n: int) -> np.ndarray:
        """Unit-mean exponential draws by inverse CDF."""
        return -np.log1p(-self.uniforms(link, n))

    def at(self, realization: int) -> "SeededRng":
        return SeededRng(self.seed, realization)


def sample_channels(topo: Topology, sys: SystemParams, rng: SeededRng) -> ChannelRealization:
    """One block of independent Rayleigh fading on every energy, interference and data link."""
    k = topo.hop_count
    alpha, d0 = sys.path_loss_exponent, sys.reference_distance
    g_e = channel_gain(rng.exponentials(LINK_ENERGY, k + 1), topo.energy_distances(), d0, alpha)
    g_i = channel_gain(rng.exponentials(LINK_INTERFERENCE, k), topo.interference_distances(), d0, alpha)
    g_d = channel_gain(rng.exponentials(LINK_DATA, k), topo.data_distances(), d0, alpha)
    return ChannelRealization(g_e, g_i, g_d, sys.noise_power)
