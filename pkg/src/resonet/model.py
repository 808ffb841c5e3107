"""Domain types for resonator networks and coupling schedules.

All resonator indices are 1-based labels (R1, R2, ...). Frequencies and
coupling strengths are angular (rad/s); ``from_hz`` constructors are there
for the common case of quoting values as 2*pi x (Hz).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import UnsupportedTopology

TWO_PI = 2.0 * math.pi

# Fixture convention: eight resonators spread uniformly over 860-902 kHz,
# all with the R1 linewidth. Only R1's values are measured device data.
FIXTURE_FREQS_HZ = tuple(860e3 + 6e3 * k for k in range(8))
FIXTURE_GAMMA_HZ = 8.17
NN_SITES = (1, 2, 3, 4, 5, 6, 7, 8)
NNN_SITES = (2, 4, 6, 8)

UNDERDAMPED_LIMIT = 1e-2


@dataclass(frozen=True)
class ResonatorSpec:
    index: int
    omega: float
    gamma: float = 0.0
    mass: float = 1.0

    @classmethod
    def from_hz(cls, index, freq_hz, gamma_hz=0.0, mass=1.0):
        return cls(int(index), TWO_PI * freq_hz, TWO_PI * gamma_hz, float(mass))

    @property
    def quality_factor(self):
        return math.inf if self.gamma == 0 else self.omega / self.gamma


@dataclass(frozen=True)
class CouplingSpec:
    """One parametric edge.

    ``pump_freq`` may be left as None, in which case it is derived from the
    endpoint eigenfrequencies by :meth:`Network.pump_frequency`.
    """

    a: int
    b: int
    strength: float
    pump_freq: Optional[float] = None

    @classmethod
    def from_hz(cls, a, b, strength_hz, pump_freq_hz=None):
        pump = None if pump_freq_hz is None else TWO_PI * pump_freq_hz
        return cls(int(a), int(b), TWO_PI * strength_hz, pump)

    @property
    def pair(self):
        return (min(self.a, self.b), max(self.a, self.b))


@dataclass(frozen=True)
class Network:
    resonators: tuple
    couplings: tuple = ()
    chain_order: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "resonators", tuple(self.resonators))
        object.__setattr__(self, "couplings", tuple(self.couplings))
        if self.chain_order is not None:
            object.__setattr__(self, "chain_order", tuple(int(i) for i in self.chain_order))

    def resonator(self, index):
        for r in self.resonators:
            if r.index == index:
                return r
        raise KeyError(f"no resonator R{index} in network")

    @property
    def indices(self):
        return tuple(r.index for r in self.resonators)

    def pump_frequency(self, coupling):
        if coupling.pump_freq is not None:
            return coupling.pump_freq
        return abs(self.resonator(coupling.a).omega - self.resonator(coupling.b).omega)

    def chain(self):
        """Logical 1-D ordering of the active resonators.

        Uses ``chain_order`` when given, otherwise derives the order from a
        path-shaped coupling graph (starting at its lower-labelled end).
        """
        if self.chain_order is not None:
            return self.chain_order
        return _path_order(self.indices, [c.pair for c in self.couplings])

    def with_couplings(self, couplings):
        return Network(self.resonators, tuple(couplings), self.chain_order)


def _path_order(indices, pairs):
    if not pairs:
        if len(indices) == 1:
            return tuple(indices)
        raise UnsupportedTopology(
            "network has no couplings and more than one resonator; give chain_order"
        )
    adj = {}
    for a, b in pairs:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    if any(len(v) > 2 for v in adj.values()) or len(set(pairs)) != len(adj) - 1:
        raise UnsupportedTopology("coupling graph is not a simple path; give chain_order")
    ends = sorted(k for k, v in adj.items() if len(v) == 1)
    if len(ends) != 2:
        raise UnsupportedTopology("coupling graph is not a simple path; give chain_order")
    order = [ends[0]]
    prev = None
    while len(order) < len(adj):
        nxt = [k for k in adj[order[-1]] if k != prev]
        prev = order[-1]
        order.append(nxt[0])
    if len(order) != len(adj):
        raise UnsupportedTopology("coupling graph is disconnected")
    return tuple(order)


@dataclass(frozen=True)
class Segment:
    couplings: tuple
    duration: float

    def __post_init__(self):
        object.__setattr__(self, "couplings", tuple(self.couplings))


@dataclass(frozen=True)
class Schedule:
    segments: tuple

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def total_duration(self):
        return float(sum(s.duration for s in self.segments))

    def boundaries(self):
        """Segment start times plus the final end time."""
        return np.concatenate([[0.0], np.cumsum([s.duration for s in self.segments])])


@dataclass(frozen=True)
class EnvelopeState:
    time: float
    amplitudes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", np.asarray(self.amplitudes, dtype=complex))

    @property
    def populations(self):
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class MechanicalState:
    time: float
    positions: np.ndarray
    velocities: np.ndarray


@dataclass(frozen=True)
class ExcitationPulse:
    """Rectangular-envelope resonant drive ``amplitude*cos(frequency*t)`` on one resonator."""

    target: int
    amplitude: float
    frequency: float
    duration: float = 2e-3
    start: float = 0.0

    @property
    def end(self):
        return self.start + self.duration


def fixture_resonators(sites: Sequence[int] = NN_SITES, scale=1.0, gamma_hz=FIXTURE_GAMMA_HZ, mass=1.0):
    """Default eight-resonator fixture, optionally frequency-scaled down by ``scale``.

    Scaling divides every eigenfrequency by the same factor (ratios kept);
    damping is left untouched.
    """
    out = []
    for s in sites:
        if not 1 <= s <= len(FIXTURE_FREQS_HZ):
            raise KeyError(f"fixture has resonators R1..R{len(FIXTURE_FREQS_HZ)}, got R{s}")
        out.append(ResonatorSpec.from_hz(s, FIXTURE_FREQS_HZ[s - 1] / scale, gamma_hz, mass))
    return tuple(out)


def validate_network(network: Network) -> list:
    """Return every problem that would stop downstream modules using ``network``.

    An empty list means the network is usable everywhere.
    """
    problems = []
    seen = set()
    for r in network.resonators:
        label = f"R{r.index}"
        if r.index in seen:
            problems.append(f"duplicate resonator index {r.index}")
        seen.add(r.index)
        if not (r.omega > 0 and math.isfinite(r.omega)):
            problems.append(f"{label}: omega must be positive, got {r.omega}")
        if not (r.gamma >= 0 and math.isfinite(r.gamma)):
            problems.append(f"{label}: gamma must be non-negative, got {r.gamma}")
        if not (r.mass > 0 and math.isfinite(r.mass)):
            problems.append(f"{label}: mass must be positive, got {r.mass}")
        if r.omega > 0 and r.gamma >= 0 and r.gamma / r.omega >= UNDERDAMPED_LIMIT:
            problems.append(
                f"{label}: gamma/omega = {r.gamma / r.omega:.3g} is not underdamped (< {UNDERDAMPED_LIMIT})"
            )

    by_omega = {}
    for r in network.resonators:
        by_omega.setdefault(r.omega, []).append(r.index)
    for omega, group in by_omega.items():
        if len(group) > 1:
            labels = ", ".join(f"R{i}" for i in group)
            problems.append(f"degenerate eigenfrequencies: {labels} share omega={omega}")

    pairs = set()
    for c in network.couplings:
        if c.a == c.b:
            problems.append(f"coupling ({c.a},{c.b}) connects a resonator to itself")
            continue
        missing = [i for i in (c.a, c.b) if i not in seen]
        if missing:
            problems.append(
                f"coupling ({c.a},{c.b}) references unknown resonator(s) "
                + ", ".join(f"R{i}" for i in missing)
            )
        if c.pair in pairs:
            problems.append(f"duplicate coupling for pair {c.pair}")
        pairs.add(c.pair)
        if not (c.strength >= 0 and math.isfinite(c.strength)):
            problems.append(f"coupling {c.pair}: strength must be non-negative, got {c.strength}")
        if c.pump_freq is not None and not missing:
            expected = abs(network.resonator(c.a).omega - network.resonator(c.b).omega)
            if not math.isclose(c.pump_freq, expected, rel_tol=1e-9, abs_tol=1e-9):
                problems.append(
                    f"coupling {c.pair}: pump_freq {c.pump_freq} != |omega_a - omega_b| = {expected}"
                )

    if network.chain_order is not None:
        chain = network.chain_order
        if len(set(chain)) != len(chain):
            problems.append("chain_order repeats an index")
        unknown = [i for i in chain if i not in seen]
        if unknown:
            problems.append("chain_order references unknown resonator(s) " + ", ".join(f"R{i}" for i in unknown))
        consecutive = {(min(a, b), max(a, b)) for a, b in zip(chain, chain[1:])}
        stray = sorted(pairs - consecutive)
        if stray:
            problems.append(f"couplings {stray} do not join consecutive chain_order entries")
        absent = sorted(consecutive - pairs)
        if absent:
            problems.append(f"chain_order neighbours {absent} have no coupling")
    elif not problems:
        try:
            network.chain()
        except UnsupportedTopology as exc:
            problems.append(str(exc))
    return problems
