"""Slow-envelope evolution of coupled resonators.

In the rotating frame each resonator is described by a complex amplitude
X_j with ``x_j = Re(X_j exp(i omega_j t))``. Resonant parametric pumping
reduces the mechanics to

    2i dX/dt = H X,

with H real symmetric and zero on the diagonal. Evolution over a
piecewise-constant schedule is exact: each segment is diagonalised once
and propagated spectrally with generator H/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import check_scalar, check_site, check_symmetric, check_vector
from .exceptions import (
    InvalidArgument,
    InvalidSchedule,
    InvalidState,
    OutOfRange,
    PhaseUndefined,
    UnsupportedTopology,
)
from .linalg import jacobi_eigh
from .model import EnvelopeState, Network, Schedule, Segment, _path_order, validate_network

PHASE_FLOOR = 1e-6


@dataclass(frozen=True)
class CouplingMatrix:
    """Real symmetric coupling matrix over a logical chain.

    ``sites[k]`` is the physical resonator label of logical site ``k + 1``.
    """

    entries: np.ndarray
    sites: tuple = ()

    def __post_init__(self):
        h = check_symmetric(self.entries, "coupling matrix")
        if np.any(np.diag(h) != 0):
            raise InvalidArgument("coupling matrix must have a zero diagonal (no detuning terms)")
        h = h.copy()
        h.setflags(write=False)
        object.__setattr__(self, "entries", h)
        sites = tuple(self.sites) if self.sites else tuple(range(1, h.shape[0] + 1))
        if len(sites) != h.shape[0]:
            raise InvalidArgument(f"{len(sites)} site labels for a {h.shape[0]}x{h.shape[0]} matrix")
        object.__setattr__(self, "sites", sites)

    @property
    def n(self):
        return self.entries.shape[0]

    @classmethod
    def tridiagonal(cls, couplings, sites=()):
        c = np.asarray(couplings, dtype=float)
        return cls(np.diag(c, 1) + np.diag(c, -1), sites)

    def logical(self, label):
        """Logical 1-based position of physical resonator ``label``."""
        try:
            return self.sites.index(label) + 1
        except ValueError:
            raise InvalidArgument(f"R{label} is not on this chain {self.sites}") from None


def _matrix_on_chain(chain, couplings):
    pos = {label: k for k, label in enumerate(chain)}
    h = np.zeros((len(chain), len(chain)))
    for c in couplings:
        if c.a not in pos or c.b not in pos:
            raise InvalidSchedule(f"coupling ({c.a},{c.b}) leaves the chain {tuple(chain)}")
        i, j = pos[c.a], pos[c.b]
        h[i, j] = h[j, i] = c.strength
    return CouplingMatrix(h, tuple(chain))


def build_coupling_matrix(network: Network) -> CouplingMatrix:
    """Coupling matrix of ``network`` in its chain ordering."""
    problems = validate_network(network)
    if problems:
        topo = [p for p in problems if "path" in p or "chain_order" in p]
        exc = UnsupportedTopology if topo and len(topo) == len(problems) else InvalidArgument
        raise exc("network is not valid: " + "; ".join(problems))
    return _matrix_on_chain(network.chain(), network.couplings)


class EnvelopePropagator(BaseEstimator):
    """Spectral propagator ``exp(-i H t / 2)`` for one coupling matrix.

    ``fit`` diagonalises H with cyclic Jacobi rotations; afterwards
    ``propagate`` maps initial amplitudes to any time (negative times run
    the evolution backwards).
    """

    def fit(self, h, y=None):
        if isinstance(h, CouplingMatrix):
            h = h.entries
        self.eigenvalues_, self.eigenvectors_ = jacobi_eigh(h)
        self.n_sites_ = self.eigenvalues_.size
        return self

    def _check(self):
        if not hasattr(self, "eigenvalues_"):
            raise NotFittedError("EnvelopePropagator is not fitted")

    def matrix(self, t):
        self._check()
        u = self.eigenvectors_
        return (u * np.exp(-0.5j * self.eigenvalues_ * t)) @ u.T

    def propagate(self, x0, t):
        """Amplitudes at time ``t``; ``t`` may be a scalar or 1-D array of times."""
        self._check()
        x0 = check_vector(x0, "x0", n=self.n_sites_)
        u = self.eigenvectors_
        coeffs = u.T @ x0
        t_arr = np.asarray(t, dtype=float)
        phases = np.exp(-0.5j * np.multiply.outer(t_arr, self.eigenvalues_))
        out = (phases * coeffs) @ u.T
        # the identity is exact at t = 0, not merely U U^T to rounding
        out[t_arr == 0] = x0
        return out


def _amplitudes(x0):
    return x0.amplitudes if isinstance(x0, EnvelopeState) else np.asarray(x0, dtype=complex)


def evolve_envelope(h: CouplingMatrix, x0, t) -> EnvelopeState:
    """Exact envelope evolution over time ``t`` under a constant coupling matrix."""
    t = check_scalar(t, "t")
    amps = check_vector(_amplitudes(x0), "x0", n=h.n)
    t0 = x0.time if isinstance(x0, EnvelopeState) else 0.0
    out = EnvelopePropagator().fit(h).propagate(amps, t)
    return EnvelopeState(t0 + t, out)


@dataclass(frozen=True)
class _Piece:
    start: float
    end: float
    propagator: EnvelopePropagator
    state: np.ndarray


@dataclass(frozen=True)
class EnvelopeTrajectory:
    """Envelope amplitudes sampled on a uniform grid starting at t = 0.

    ``amplitudes[k]`` is the state at ``times[k]``. Exact values at
    off-grid times come from :meth:`state_at`.
    """

    times: np.ndarray
    amplitudes: np.ndarray
    gamma_applied: float = 0.0
    sites: tuple = ()
    pieces: tuple = field(default=(), repr=False)

    @property
    def n(self):
        return self.amplitudes.shape[1]

    @property
    def duration(self):
        return self.pieces[-1].end if self.pieces else float(self.times[-1])

    @property
    def states(self):
        return [EnvelopeState(float(t), a) for t, a in zip(self.times, self.amplitudes)]

    def state_at(self, t) -> EnvelopeState:
        t = check_scalar(t, "t")
        if not -1e-15 <= t <= self.duration * (1 + 1e-12) + 1e-15:
            raise OutOfRange(f"t={t} outside trajectory span [0, {self.duration}]")
        if not self.pieces:
            k = int(np.argmin(np.abs(self.times - t)))
            return EnvelopeState(float(self.times[k]), self.amplitudes[k])
        piece = self.pieces[-1]
        for p in self.pieces:
            if t <= p.end:
                piece = p
                break
        amps = piece.propagator.propagate(piece.state, t - piece.start)
        if self.gamma_applied:
            amps = amps * math.exp(-0.5 * self.gamma_applied * t)
        return EnvelopeState(t, amps)


def evolve_schedule(schedule: Schedule, x0, sample_dt, chain=None) -> EnvelopeTrajectory:
    """Evolve through consecutive segments, sampling every ``sample_dt``.

    ``chain`` fixes the logical ordering (a sequence of resonator labels or a
    :class:`Network`); without it the ordering is read off the first
    segment's path-shaped coupling graph. Every segment must live on the
    same chain.
    """
    if isinstance(schedule, Segment):
        schedule = Schedule((schedule,))
    if not schedule.segments:
        raise InvalidSchedule("schedule has no segments")
    sample_dt = check_scalar(sample_dt, "sample_dt", min_val=0.0, include_min=False)
    for k, seg in enumerate(schedule.segments):
        if not seg.duration > 0:
            raise InvalidSchedule(f"segment {k} has non-positive duration {seg.duration}")

    if isinstance(chain, Network):
        chain = chain.chain()
    if chain is None:
        labels = {i for seg in schedule.segments for c in seg.couplings for i in (c.a, c.b)}
        orders = []
        for seg in schedule.segments:
            try:
                orders.append(_path_order(sorted(labels), [c.pair for c in seg.couplings]))
            except UnsupportedTopology as exc:
                raise InvalidSchedule(f"cannot infer chain: {exc}") from None
        if len({len(o) for o in orders}) != 1:
            raise InvalidSchedule("segments act on chains of different length: " + str(orders))
        chain = orders[0]
    chain = tuple(chain)

    amps = check_vector(_amplitudes(x0), "x0")
    if amps.size != len(chain):
        raise InvalidSchedule(f"x0 has {amps.size} sites, schedule chain has {len(chain)}")

    pieces = []
    state = amps
    start = 0.0
    for seg in schedule.segments:
        prop = EnvelopePropagator().fit(_matrix_on_chain(chain, seg.couplings))
        end = start + seg.duration
        pieces.append(_Piece(start, end, prop, state))
        state = prop.propagate(state, seg.duration)
        start = end

    total = schedule.total_duration
    count = int(math.floor(total / sample_dt * (1 + 1e-12))) + 1
    times = np.arange(count) * sample_dt
    out = np.empty((count, len(chain)), dtype=complex)
    for p in pieces:
        last = p is pieces[-1]
        mask = (times >= p.start) & ((times <= p.end) if last else (times < p.end))
        if np.any(mask):
            out[mask] = p.propagator.propagate(p.state, times[mask] - p.start)
    return EnvelopeTrajectory(times, out, 0.0, chain, tuple(pieces))


def apply_damping_envelope(traj: EnvelopeTrajectory, gamma) -> EnvelopeTrajectory:
    """Scale every sample by ``exp(-gamma t / 2)`` (uniform damping)."""
    gamma = check_scalar(gamma, "gamma", min_val=0.0)
    if traj.gamma_applied != 0.0:
        raise InvalidState(f"damping already applied (gamma={traj.gamma_applied})")
    scale = np.exp(-0.5 * gamma * traj.times)
    return replace(traj, amplitudes=traj.amplitudes * scale[:, None], gamma_applied=gamma)


def normalize_snapshot(state) -> EnvelopeState:
    amps = _amplitudes(state)
    norm = float(np.linalg.norm(amps))
    if norm == 0.0:
        raise ZeroDivisionError("cannot normalize an all-zero envelope state")
    t = state.time if isinstance(state, EnvelopeState) else 0.0
    return EnvelopeState(t, amps / norm)


def normalize_trajectory(traj: EnvelopeTrajectory) -> np.ndarray:
    """Per-sample normalized amplitudes, shape ``(n_times, n_sites)``."""
    norms = np.linalg.norm(traj.amplitudes, axis=1)
    if np.any(norms == 0):
        raise ZeroDivisionError("trajectory contains an all-zero sample")
    return traj.amplitudes / norms[:, None]


def transfer_fidelity(traj: EnvelopeTrajectory, source, target, t) -> float:
    """Population fraction at ``target`` at time ``t`` (logical 1-based sites).

    Normalising by the total population makes the value insensitive to
    uniform damping.
    """
    check_site(source, traj.n, "source")
    target = check_site(target, traj.n, "target")
    pops = traj.state_at(t).populations
    total = pops.sum()
    if total == 0:
        raise ZeroDivisionError("no population left at requested time")
    return float(pops[target - 1] / total)


def wrap_phase(phi):
    """Wrap to the half-open interval (-pi, pi]."""
    w = math.remainder(float(phi), 2.0 * math.pi)
    return math.pi if w <= -math.pi else w


def phase_at(traj: EnvelopeTrajectory, site, t) -> float:
    """Phase change of ``site`` between t = 0 and ``t``, wrapped to (-pi, pi].

    Raises :class:`PhaseUndefined` when the amplitude at either end is
    below ``1e-6`` of the initial state norm.
    """
    site = check_site(site, traj.n, "site")
    x_start = traj.state_at(0.0).amplitudes
    x_t = traj.state_at(t).amplitudes
    floor = PHASE_FLOOR * float(np.linalg.norm(x_start))
    for label, value in (("t=0", x_start[site - 1]), (f"t={t}", x_t[site - 1])):
        if abs(value) <= floor:
            raise PhaseUndefined(f"site {site} amplitude {abs(value):.3g} at {label} is below phase floor {floor:.3g}")
    return wrap_phase(np.angle(x_t[site - 1]) - np.angle(x_start[site - 1]))


def basis_state(n, site, amplitude=1.0) -> np.ndarray:
    site = check_site(site, n, "site")
    x = np.zeros(n, dtype=complex)
    x[site - 1] = amplitude
    return x
