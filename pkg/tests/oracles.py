"""Independent reference computations used only by the tests."""

import numpy as np
from numpy.polynomial import polynomial as P


def charpoly_faddeev(a):
    """Characteristic polynomial coefficients (highest power first) by Faddeev-LeVerrier."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    coeffs = [1.0]
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = a @ m + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(a @ m) / k)
    return np.array(coeffs)


def charpoly_tridiagonal(off):
    """Characteristic polynomial of a zero-diagonal symmetric tridiagonal matrix.

    Three-term recurrence p_k = x p_{k-1} - b_{k-1}^2 p_{k-2}, low power first.
    """
    p_prev, p = np.array([1.0]), np.array([0.0, 1.0])
    for b in off:
        p_prev, p = p, P.polysub(P.polymulx(p), b * b * p_prev)
    return p


def sorted_real_roots(coeffs_high_first):
    return np.sort(np.roots(coeffs_high_first).real)


def lorentzian_sum(h, gamma, drive, probe, detunings):
    """Steady-state response by modal expansion (numpy eigh), an alternative to elimination."""
    w, v = np.linalg.eigh(h)
    out = []
    for d in detunings:
        out.append(np.sum(v[probe] * v[drive] / (d - w / 2 - 0.5j * gamma)))
    return np.array(out)


def iir_loop(x, alpha):
    """Plain-loop single-pole filter y_k = y_{k-1} + alpha (x_k - y_{k-1}), y_{-1} = 0."""
    y = np.empty_like(np.asarray(x, dtype=complex))
    acc = 0.0
    for k, value in enumerate(x):
        acc = acc + alpha * (value - acc)
        y[k] = acc
    return y
