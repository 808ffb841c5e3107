"""Full second-order mechanics of parametrically pumped resonators.

Each resonator obeys

    x_j'' + gamma_j x_j' + omega_j^2 x_j = sum_pumps P(t) (x_other - x_j) + pulse,

with ``P(t) = (c_mech / m) cos(pump_freq t + phase)`` while the pump is on.
The slowly varying envelope of this system follows the coupling-matrix
evolution in :mod:`resonet.rwa` when ``c_mech = 2 m sqrt(omega_a omega_b) C``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ._kernels import integrate
from ._validation import check_int, check_scalar
from .exceptions import InvalidArgument, NumericalOverflow
from .lockin import (
    DEFAULT_TIME_CONSTANT,
    TRANSIENT_TAUS,
    DemodChannel,
    LockInDemodulator,
    channel_phase_shift,
    lowpass,
)
from .model import TWO_PI, ExcitationPulse, Network, ResonatorSpec
from .rwa import EnvelopePropagator, _matrix_on_chain
from .spectrum import eigenvalues

DEFAULT_STEPS_PER_PERIOD = 50
MIN_STEPS_PER_PERIOD = 20


@dataclass(frozen=True)
class PumpTerm:
    a: int
    b: int
    c_mech: float
    pump_freq: float
    phase: float = 0.0
    t_on: float = 0.0
    t_off: float = math.inf


@dataclass(frozen=True)
class MechanicalTrajectory:
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    resonators: tuple
    pump_on: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def dt(self):
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    def column(self, label):
        for k, r in enumerate(self.resonators):
            if r.index == label:
                return k
        raise KeyError(f"R{label} not in trajectory")

    def energy(self):
        """Total mechanical energy ``sum m (v^2 + omega^2 x^2) / 2`` per sample."""
        m = np.array([r.mass for r in self.resonators])
        w = np.array([r.omega for r in self.resonators])
        return 0.5 * np.sum(m * (self.velocities ** 2 + (w * self.positions) ** 2), axis=1)


def lambda_from_rwa(c_rwa, mass, omega_a, omega_b):
    """Stiffness-modulation amplitude that yields envelope coupling ``c_rwa``."""
    c_rwa = check_scalar(c_rwa, "c_rwa", min_val=0.0)
    mass = check_scalar(mass, "mass", min_val=0.0, include_min=False)
    omega_a = check_scalar(omega_a, "omega_a", min_val=0.0, include_min=False)
    omega_b = check_scalar(omega_b, "omega_b", min_val=0.0, include_min=False)
    return 2.0 * mass * math.sqrt(omega_a * omega_b) * c_rwa


def default_dt(resonators, steps_per_period=DEFAULT_STEPS_PER_PERIOD):
    w_max = max(r.omega for r in resonators)
    return TWO_PI / (steps_per_period * w_max)


def evolve_full(
    resonators: Sequence[ResonatorSpec],
    pumps: Sequence[PumpTerm] = (),
    pulse: Optional[ExcitationPulse] = None,
    x0=None,
    v0=None,
    t_span=1e-3,
    dt=None,
    output_decimation=1,
    method="lawson",
    include_diagonal=True,
) -> MechanicalTrajectory:
    """Fixed-step integration of the pumped mechanical equations.

    ``t_span`` is a duration from t = 0 or a ``(start, stop)`` pair.
    ``method="lawson"`` (default) advances the free damped oscillators
    exactly and applies classical RK4 to the pump and pulse forcing;
    ``method="rk4"`` is plain classical RK4 on the whole system.
    ``include_diagonal=False`` drops the ``-P x_j`` reaction terms.
    """
    resonators = tuple(resonators)
    if not resonators:
        raise InvalidArgument("need at least one resonator")
    n = len(resonators)
    col = {r.index: k for k, r in enumerate(resonators)}
    if len(col) != n:
        raise InvalidArgument("duplicate resonator indices")
    omega = np.array([r.omega for r in resonators], dtype=float)
    gamma = np.array([r.gamma for r in resonators], dtype=float)
    mass = np.array([r.mass for r in resonators], dtype=float)
    if np.any(omega <= 0) or np.any(gamma < 0) or np.any(mass <= 0) or np.any(gamma >= 2 * omega):
        raise InvalidArgument("resonators need omega > 0, 0 <= gamma < 2 omega, mass > 0")

    if np.ndim(t_span) == 0:
        t_start, t_stop = 0.0, check_scalar(t_span, "t_span", min_val=0.0, include_min=False)
    else:
        t_start, t_stop = (float(v) for v in t_span)
        if not t_stop > t_start:
            raise InvalidArgument("t_span must have stop > start")
    limit = TWO_PI / (MIN_STEPS_PER_PERIOD * omega.max())
    if dt is None:
        dt = default_dt(resonators)
    dt = check_scalar(dt, "dt", min_val=0.0, include_min=False)
    if dt > limit * (1 + 1e-12):
        raise InvalidArgument(f"dt={dt:.3g} s too large; need dt <= 2*pi/(20*omega_max) = {limit:.3g} s")
    decim = check_int(output_decimation, "output_decimation", min_val=1)
    if method not in ("lawson", "rk4"):
        raise InvalidArgument(f"unknown method {method!r}")

    pa, pb, pk, pw, pph, pon, poff = [], [], [], [], [], [], []
    for p in pumps:
        if p.a not in col or p.b not in col or p.a == p.b:
            raise InvalidArgument(f"pump ({p.a},{p.b}) must join two distinct resonators of this network")
        if p.c_mech < 0:
            raise InvalidArgument(f"pump ({p.a},{p.b}) has negative c_mech")
        ia, ib = col[p.a], col[p.b]
        # one effective mass per edge: mean of the endpoints
        m_edge = 0.5 * (mass[ia] + mass[ib])
        pa.append(ia)
        pb.append(ib)
        pk.append(p.c_mech / m_edge)
        pw.append(p.pump_freq)
        pph.append(p.phase)
        pon.append(p.t_on)
        poff.append(p.t_off)

    if pulse is not None:
        if pulse.target not in col:
            raise InvalidArgument(f"pulse target R{pulse.target} not in network")
        p_target = col[pulse.target]
        p_acc = pulse.amplitude / mass[p_target]
        p_freq, p_start, p_end = pulse.frequency, pulse.start, pulse.end
    else:
        p_target, p_acc, p_freq, p_start, p_end = -1, 0.0, 0.0, 0.0, 0.0

    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    v0 = np.zeros(n) if v0 is None else np.asarray(v0, dtype=float).copy()
    if x0.shape != (n,) or v0.shape != (n,):
        raise InvalidArgument(f"x0 and v0 must have length {n}")

    nsteps = int(math.floor((t_stop - t_start) / dt * (1 + 1e-12)))
    xs, vs, bad = integrate(
        omega, gamma,
        np.array(pa, dtype=np.int64), np.array(pb, dtype=np.int64),
        np.array(pk, dtype=float), np.array(pw, dtype=float), np.array(pph, dtype=float),
        np.array(pon, dtype=float), np.array(poff, dtype=float), bool(include_diagonal),
        p_target, float(p_acc), float(p_freq), float(p_start), float(p_end),
        x0, v0, float(t_start), float(dt), nsteps, decim, method == "lawson",
    )
    if bad >= 0:
        raise NumericalOverflow("non-finite state during integration", time=t_start + bad * dt, step=bad)
    times = t_start + dt * decim * np.arange(xs.shape[0])
    pump_on = min(pon) if pon else math.inf
    return MechanicalTrajectory(times, xs, vs, resonators, pump_on, {"dt": dt, "method": method})


def step_halving_change(resonators, pumps=(), pulse=None, x0=None, v0=None, t_span=1e-3, dt=None,
                        method="lawson", include_diagonal=True):
    """Relative change in positions when the step is halved.

    Returns ``max|x(dt) - x(dt/2)| / max|x(dt/2)|`` over common samples;
    a small value means the step is adequately resolved.
    """
    if dt is None:
        dt = default_dt(resonators)
    kw = dict(pumps=pumps, pulse=pulse, x0=x0, v0=v0, t_span=t_span, method=method,
              include_diagonal=include_diagonal)
    coarse = evolve_full(resonators, dt=dt, **kw)
    fine = evolve_full(resonators, dt=dt / 2, output_decimation=2, **kw)
    k = min(coarse.times.size, fine.times.size)
    scale = np.max(np.abs(fine.positions[:k]))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(coarse.positions[:k] - fine.positions[:k])) / scale)


def pumps_for_network(network: Network, t_on=0.0, scale=1.0):
    """Pump terms realising every coupling of ``network`` (frequencies divided by ``scale``)."""
    pumps = []
    for c in network.couplings:
        ra, rb = network.resonator(c.a), network.resonator(c.b)
        wa, wb = ra.omega / scale, rb.omega / scale
        c_mech = lambda_from_rwa(c.strength, 0.5 * (ra.mass + rb.mass), wa, wb)
        pumps.append(PumpTerm(c.a, c.b, c_mech, abs(wa - wb), 0.0, t_on))
    return tuple(pumps)


def _pulse_ramp(pulse, resonator, elapsed):
    drive = -1j * pulse.amplitude / (2.0 * resonator.mass * resonator.omega)
    g = resonator.gamma
    if g == 0:
        return drive * elapsed
    return drive * -np.expm1(-0.5 * g * np.asarray(elapsed)) / (0.5 * g)


def pulse_envelope(pulse: ExcitationPulse, resonator: ResonatorSpec):
    """Envelope left on the target by a resonant rectangular pulse (from rest)."""
    return complex(_pulse_ramp(pulse, resonator, pulse.duration))


def chain_c0(network: Network):
    """Spectral spacing of the network's coupling matrix (c0 for a perfect-transfer chain)."""
    h = _matrix_on_chain(network.chain(), network.couplings)
    lam = eigenvalues(h)
    if lam.size < 2:
        raise InvalidArgument("need at least two sites to define c0")
    return float((lam[-1] - lam[0]) / (lam.size - 1))


def run_full_pst(
    network: Network,
    launch,
    scale=1.0,
    pulse_amplitude=1.0,
    pulse_duration=2e-3,
    duration=None,
    dt=None,
    output_decimation=1,
    method="lawson",
    include_diagonal=True,
    pumps_enabled=True,
) -> MechanicalTrajectory:
    """Resonant pulse on ``launch``, then every pump on, integrated over two periods.

    Eigenfrequencies are divided by ``scale`` (ratios kept, couplings
    unchanged). Only resonators on the network's chain take part.
    """
    scale = check_scalar(scale, "scale", min_val=1.0)
    chain = network.chain()
    if launch not in chain:
        raise InvalidArgument(f"launch site R{launch} is not on the chain {chain}")
    resonators = tuple(replace(network.resonator(i), omega=network.resonator(i).omega / scale) for i in chain)
    launch_res = resonators[chain.index(launch)]
    pulse = ExcitationPulse(launch, pulse_amplitude, launch_res.omega, pulse_duration, 0.0)
    c0 = chain_c0(network)
    period = TWO_PI / c0
    if duration is None:
        # room for a settled lock-in reading a full round trip after the pumps start
        duration = pulse.end + 2.0 * period + TRANSIENT_TAUS * DEFAULT_TIME_CONSTANT + 2e-3
    pumps = pumps_for_network(network, t_on=pulse.end, scale=scale) if pumps_enabled else ()
    traj = evolve_full(resonators, pumps, pulse, t_span=duration, dt=dt,
                       output_decimation=output_decimation, method=method,
                       include_diagonal=include_diagonal)
    meta = dict(traj.meta, launch=launch, scale=scale, c0=c0, period=period, pulse=pulse, chain=chain)
    return replace(traj, pump_on=pulse.end, meta=meta)


@dataclass(frozen=True)
class RwaComparison:
    """Demodulated full mechanics next to the filtered envelope prediction.

    Amplitudes are energy-normalised (``sqrt(omega_j / omega_launch) |X_j|``),
    the variable in which the reduced equations are exactly symmetric.
    """

    times: np.ndarray
    measured: np.ndarray
    predicted: np.ndarray
    transient_until: float
    peak: float
    time_constant: float = DEFAULT_TIME_CONSTANT

    @property
    def reliable(self):
        return self.times >= self.transient_until

    @property
    def max_error(self):
        """Largest amplitude mismatch after the transient, as a fraction of the peak."""
        m = self.reliable
        return float(np.max(np.abs(np.abs(self.measured[m]) - np.abs(self.predicted[m]))) / self.peak)


def compare_to_rwa(traj: MechanicalTrajectory, network: Network, time_constant=DEFAULT_TIME_CONSTANT) -> RwaComparison:
    """Lock-in demodulate ``traj`` and set it against the envelope model seen through the same filter."""
    chain = network.chain()
    launch = traj.meta["launch"]
    pulse = traj.meta["pulse"]
    omega = np.array([r.omega for r in traj.resonators])
    k_launch = traj.column(launch)
    norm = np.sqrt(omega / omega[k_launch])

    demod = LockInDemodulator(omega, time_constant, traj.dt, float(traj.times[0])).fit(traj.positions)
    measured = demod.transform(traj.positions) * norm

    h = _matrix_on_chain(chain, network.couplings)
    prop = EnvelopePropagator().fit(h)
    x_on = np.zeros(len(chain), dtype=complex)
    x_on[chain.index(launch)] = pulse_envelope(pulse, traj.resonators[k_launch])
    gamma_mean = float(np.mean([r.gamma for r in traj.resonators]))
    after = traj.times >= traj.pump_on
    ideal = np.zeros((traj.times.size, len(chain)), dtype=complex)
    ideal[after] = prop.propagate(x_on, traj.times[after] - traj.pump_on)
    ideal[after] *= np.exp(-0.5 * gamma_mean * (traj.times[after] - traj.pump_on))[:, None]
    during = (traj.times >= pulse.start) & ~after
    ideal[during, chain.index(launch)] = _pulse_ramp(pulse, traj.resonators[k_launch], traj.times[during] - pulse.start)
    cols = [traj.column(i) for i in chain]
    predicted = lowpass(ideal, traj.dt, time_constant)
    return RwaComparison(
        traj.times,
        measured[:, cols],
        predicted,
        float(traj.times[0]) + TRANSIENT_TAUS * time_constant,
        float(np.max(np.abs(ideal))),
        time_constant,
    )


def round_trip_samples(traj: MechanicalTrajectory, cmp: RwaComparison, cycles=(0, 1, 2)):
    """Sample indices at a settled reference time and whole periods after it.

    The reference is the first sample ``TRANSIENT_TAUS`` time constants
    after the pumps switch on; the others follow by ``m * period``.
    """
    period = traj.meta["period"]
    k_ref = int(np.searchsorted(traj.times, traj.pump_on + TRANSIENT_TAUS * cmp.time_constant))
    idx = [k_ref + int(round(m * period / traj.dt)) for m in cycles]
    if idx[-1] >= traj.times.size:
        raise InvalidArgument(
            f"trajectory ends at {traj.times[-1]:.6g} s, before the last reference time "
            f"{traj.times[0] + idx[-1] * traj.dt:.6g} s"
        )
    return idx


def round_trip_phase(traj: MechanicalTrajectory, cmp: RwaComparison, site=None) -> float:
    """Demodulated phase change of ``site`` (default: the launch site) over two periods."""
    site = traj.meta["launch"] if site is None else site
    k0, _, k2 = round_trip_samples(traj, cmp)
    col = traj.meta["chain"].index(site)
    ch = DemodChannel(cmp.times, cmp.measured[:, col], cmp.transient_until, cmp.time_constant)
    return channel_phase_shift(ch, cmp.times[k0], cmp.times[k2])
