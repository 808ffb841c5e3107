"""Software lock-in: mix with a reference tone, then a single-pole low-pass.

For a signal ``x(t) = Re(X(t) exp(i w t))`` the mixed product
``2 x(t) exp(-i w t) = X(t) + conj(X(t)) exp(-2i w t)``; the low-pass keeps
the slow envelope and suppresses the 2w image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ._validation import check_scalar
from .exceptions import InvalidArgument, PhaseUndefined, TransientRegion
from .model import TWO_PI
from .rwa import wrap_phase

DEFAULT_TIME_CONSTANT = 1.0 / (TWO_PI * 300.0)
TRANSIENT_TAUS = 5.0
MIN_SAMPLES_PER_PERIOD = 10
PHASE_FLOOR = 1e-6


@dataclass(frozen=True)
class LockInConfig:
    ref_freq: float
    time_constant: float = DEFAULT_TIME_CONSTANT
    sample_dt: float = 1e-6

    def __post_init__(self):
        check_scalar(self.ref_freq, "ref_freq", min_val=0.0)
        check_scalar(self.sample_dt, "sample_dt", min_val=0.0, include_min=False)
        tc = check_scalar(self.time_constant, "time_constant", min_val=0.0, include_min=False)
        if tc < 10 * self.sample_dt:
            raise InvalidArgument(
                f"time_constant {tc} must be at least 10 samples ({10 * self.sample_dt})"
            )


@dataclass(frozen=True)
class DemodChannel:
    times: np.ndarray
    envelope: np.ndarray
    transient_until: float
    time_constant: float = DEFAULT_TIME_CONSTANT

    @property
    def amplitude(self):
        return np.abs(self.envelope)

    @property
    def phase(self):
        return np.angle(self.envelope)

    def index_at(self, t):
        k = int(round((t - self.times[0]) / (self.times[1] - self.times[0]))) if self.times.size > 1 else 0
        if not 0 <= k < self.times.size:
            raise InvalidArgument(f"t={t} outside channel span [{self.times[0]}, {self.times[-1]}]")
        return k


def lowpass(series, sample_dt, time_constant, axis=0):
    """Single-pole recursive low-pass starting from rest (zero initial state)."""
    alpha = -math.expm1(-sample_dt / time_constant)
    return lfilter([alpha], [1.0, alpha - 1.0], series, axis=axis)


def demodulate(signal, cfg: LockInConfig, t0=0.0) -> DemodChannel:
    """Demodulate a uniformly sampled real signal whose first sample is at ``t0``."""
    signal = np.asarray(signal, dtype=float)
    if signal.ndim != 1:
        raise InvalidArgument("signal must be one-dimensional")
    if cfg.ref_freq > 0 and TWO_PI / (cfg.ref_freq * cfg.sample_dt) < MIN_SAMPLES_PER_PERIOD:
        raise InvalidArgument(
            f"undersampled: {TWO_PI / (cfg.ref_freq * cfg.sample_dt):.2f} samples per reference "
            f"period, need at least {MIN_SAMPLES_PER_PERIOD}"
        )
    times = t0 + cfg.sample_dt * np.arange(signal.size)
    mixed = 2.0 * signal * np.exp(-1j * cfg.ref_freq * times)
    z = lowpass(mixed, cfg.sample_dt, cfg.time_constant)
    return DemodChannel(times, z, t0 + TRANSIENT_TAUS * cfg.time_constant, cfg.time_constant)


def channel_phase_shift(ch: DemodChannel, t0, t1) -> float:
    """Wrapped phase change of the demodulated envelope from ``t0`` to ``t1``."""
    for label, t in (("t0", t0), ("t1", t1)):
        if t < ch.transient_until:
            raise TransientRegion(
                f"{label}={t} falls inside the demodulation transient (< {ch.transient_until})"
            )
    k0, k1 = ch.index_at(t0), ch.index_at(t1)
    floor = PHASE_FLOOR * float(np.max(np.abs(ch.envelope)))
    for label, k in (("t0", k0), ("t1", k1)):
        if abs(ch.envelope[k]) <= floor:
            raise PhaseUndefined(f"amplitude at {label} is below the phase floor {floor:.3g}")
    return wrap_phase(np.angle(ch.envelope[k1]) - np.angle(ch.envelope[k0]))


class LockInDemodulator(TransformerMixin, BaseEstimator):
    """Multi-channel lock-in as a transformer.

    ``transform`` takes real signals of shape ``(n_samples, n_channels)``
    and returns complex envelopes of the same shape; channel ``k`` is
    referenced to ``ref_freqs[k]``.
    """

    def __init__(self, ref_freqs=None, time_constant=DEFAULT_TIME_CONSTANT, sample_dt=1e-6, t0=0.0):
        self.ref_freqs = ref_freqs
        self.time_constant = time_constant
        self.sample_dt = sample_dt
        self.t0 = t0

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        freqs = np.broadcast_to(np.asarray(self.ref_freqs, dtype=float), (X.shape[1],)).copy()
        for f in freqs:
            LockInConfig(float(f), self.time_constant, self.sample_dt)
            if f > 0 and TWO_PI / (f * self.sample_dt) < MIN_SAMPLES_PER_PERIOD:
                raise InvalidArgument(f"undersampled for reference {f} rad/s")
        self.ref_freqs_ = freqs
        self.n_features_in_ = X.shape[1]
        self.transient_until_ = self.t0 + TRANSIENT_TAUS * self.time_constant
        return self

    def transform(self, X):
        if not hasattr(self, "ref_freqs_"):
            raise NotFittedError("LockInDemodulator is not fitted")
        X = np.asarray(X, dtype=float)
        squeeze = X.ndim == 1
        if squeeze:
            X = X[:, None]
        if X.shape[1] != self.n_features_in_:
            raise InvalidArgument(f"expected {self.n_features_in_} channels, got {X.shape[1]}")
        times = self.t0 + self.sample_dt * np.arange(X.shape[0])
        mixed = 2.0 * X * np.exp(-1j * np.outer(times, self.ref_freqs_))
        z = lowpass(mixed, self.sample_dt, self.time_constant)
        return z[:, 0] if squeeze else z

    def channels(self, X):
        z = self.transform(X)
        if z.ndim == 1:
            z = z[:, None]
        times = self.t0 + self.sample_dt * np.arange(z.shape[0])
        return [DemodChannel(times, z[:, k], self.transient_until_, self.time_constant) for k in range(z.shape[1])]
