"""Eigenvalues and rotating-frame frequency response of coupled networks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_scalar, check_site
from .exceptions import InvalidArgument
from .linalg import jacobi_eigvalsh
from .rwa import CouplingMatrix


@dataclass(frozen=True)
class ResponseCurve:
    """Complex steady-state response against detuning (rad/s) from the probed resonator."""

    detunings: np.ndarray
    complex_values: np.ndarray

    @property
    def magnitudes(self):
        return np.abs(self.complex_values)

    def lab_frequencies(self, omega_probe):
        return omega_probe + self.detunings


def eigenvalues(h) -> np.ndarray:
    """Ascending eigenvalues of H itself; response peaks sit at half these values."""
    entries = h.entries if isinstance(h, CouplingMatrix) else h
    return jacobi_eigvalsh(entries)


def frequency_response(h: CouplingMatrix, gamma, drive_site, probe_site, detunings, drive=1.0) -> ResponseCurve:
    """Steady-state response at ``probe_site`` to a unit drive at ``drive_site``.

    Solves ``(delta I - H/2 - i gamma/2) X = drive e_drive`` for every
    detuning ``delta``. ``gamma`` is a scalar or one value per site.
    """
    n = h.n
    drive_site = check_site(drive_site, n, "drive_site")
    probe_site = check_site(probe_site, n, "probe_site")
    detunings = np.asarray(detunings, dtype=float)
    if detunings.ndim != 1 or detunings.size == 0:
        raise InvalidArgument("detunings must be a non-empty 1-D grid")
    if detunings.size > 1 and np.any(np.diff(detunings) <= 0):
        raise InvalidArgument("detuning grid must be strictly increasing")
    g = np.broadcast_to(np.asarray(gamma, dtype=float), (n,)).copy()
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise InvalidArgument("gamma must be finite and non-negative")

    base = -0.5 * h.entries - 0.5j * np.diag(g)
    systems = detunings[:, None, None] * np.eye(n) + base
    rhs = np.zeros((detunings.size, n, 1), dtype=complex)
    rhs[:, drive_site - 1, 0] = drive
    try:
        sol = np.linalg.solve(systems, rhs)[:, :, 0]
    except np.linalg.LinAlgError:
        raise InvalidArgument("response system is singular (gamma = 0 at an eigenvalue)") from None
    if not np.all(np.isfinite(sol)):
        raise InvalidArgument("response system is singular (gamma = 0 at an eigenvalue)")
    return ResponseCurve(detunings, sol[:, probe_site - 1])


def peak_positions(curve: ResponseCurve) -> np.ndarray:
    """Local maxima of ``|response|``, refined by a parabola through three samples."""
    x = curve.detunings
    y = curve.magnitudes
    if y.size < 3:
        return np.array([])
    interior = np.arange(1, y.size - 1)
    is_peak = (y[interior] > y[interior - 1]) & (y[interior] >= y[interior + 1])
    peaks = []
    for i in interior[is_peak]:
        y0, y1, y2 = y[i - 1], y[i], y[i + 1]
        denom = y0 - 2 * y1 + y2
        shift = 0.0 if denom == 0 else 0.5 * (y0 - y2) / denom
        # linear interpolation of the local grid spacing handles non-uniform grids
        step = x[i + 1] - x[i] if shift > 0 else x[i] - x[i - 1]
        peaks.append(x[i] + shift * step)
    return np.array(peaks)


def detuning_grid(start, stop, step):
    start = check_scalar(start, "start")
    stop = check_scalar(stop, "stop")
    step = check_scalar(step, "step", min_val=0.0, include_min=False)
    if stop <= start:
        raise InvalidArgument("detuning grid needs stop > start")
    count = int(np.floor((stop - start) / step * (1 + 1e-12))) + 1
    return start + step * np.arange(count)
