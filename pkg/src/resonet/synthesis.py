"""Perfect-transfer coupling profiles, transfer timing and round-trip phase."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_int, check_scalar, check_site
from .model import (
    TWO_PI,
    CouplingSpec,
    Network,
    Segment,
    fixture_resonators,
)


@dataclass(frozen=True)
class PstProfile:
    n: int
    c0: float
    couplings: np.ndarray
    period: float

    def edges(self, sites=None):
        """Couplings as :class:`CouplingSpec` along ``sites`` (default R1..Rn)."""
        sites = tuple(range(1, self.n + 1)) if sites is None else tuple(sites)
        if len(sites) != self.n:
            raise ValueError(f"need {self.n} sites, got {len(sites)}")
        return tuple(CouplingSpec(a, b, float(c)) for a, b, c in zip(sites, sites[1:], self.couplings))


def pst_couplings(n, c0) -> PstProfile:
    """Mirror-periodic coupling profile ``C_j = (c0/2) sqrt(j (n - j))``, j = 1..n-1.

    The spectrum of the resulting chain is equidistant with spacing ``c0``,
    which makes the envelope evolution a mirror permutation after one
    period ``2*pi/c0``.
    """
    n = check_int(n, "n", min_val=2)
    c0 = check_scalar(c0, "c0", min_val=0.0, include_min=False)
    # j(n-j) is symmetric in j <-> n-j, so mirrored entries are bit-identical
    couplings = np.array([0.5 * c0 * math.sqrt(j * (n - j)) for j in range(1, n)])
    return PstProfile(n, c0, couplings, transfer_period(c0))


def transfer_period(c0):
    """One forward transfer time, ``2*pi/c0``."""
    c0 = check_scalar(c0, "c0", min_val=0.0, include_min=False)
    return TWO_PI / c0


def mirror_index(j, n):
    n = check_int(n, "n", min_val=1)
    j = check_site(j, n, "j")
    return n - j + 1


def parity_phase(n):
    """Phase picked up at the launch site after a forward-and-back cycle (0 or pi)."""
    n = check_int(n, "n", min_val=2)
    return math.pi if n % 2 == 0 else 0.0


def is_strong_coupling(coupling, gamma):
    return coupling > gamma


def pst_network(n, c0, sites=None, resonators=None, scale=1.0) -> Network:
    """Network whose chain (default R1..Rn) carries the perfect-transfer profile.

    Resonators default to the eight-resonator fixture; pass ``resonators`` to
    use measured values instead.
    """
    profile = pst_couplings(n, c0)
    sites = tuple(range(1, profile.n + 1)) if sites is None else tuple(int(s) for s in sites)
    if resonators is None:
        resonators = fixture_resonators(sites, scale=scale)
    return Network(tuple(resonators), profile.edges(sites), sites)


def pst_segment(n, c0, sites=None, duration=None) -> Segment:
    """Schedule segment with a perfect-transfer profile; lasts one period by default."""
    profile = pst_couplings(n, c0)
    sites = tuple(range(1, profile.n + 1)) if sites is None else tuple(sites)
    if duration is None:
        duration = profile.period
    return Segment(profile.edges(sites), float(duration))
