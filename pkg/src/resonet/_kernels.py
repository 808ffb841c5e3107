"""Compiled inner loops for the mechanical integrator."""

import math

import numba
import numpy as np


@numba.njit(cache=True)
def _free_propagator(omega, gamma, h, out):
    # exact step of x'' + gamma x' + omega^2 x = 0, as rows (e11, e12, e21, e22)
    for i in range(omega.size):
        w, g = omega[i], gamma[i]
        wd = math.sqrt(w * w - 0.25 * g * g)
        c = math.cos(wd * h)
        s = math.sin(wd * h)
        d = math.exp(-0.5 * g * h)
        out[i, 0] = d * (c + 0.5 * g / wd * s)
        out[i, 1] = d * s / wd
        out[i, 2] = -d * w * w / wd * s
        out[i, 3] = d * (c - 0.5 * g / wd * s)


@numba.njit(cache=True)
def _forcing(t, x, pa, pb, pk, pw, pph, pon, poff, diagonal,
             p_target, p_acc, p_freq, p_start, p_end, out):
    for i in range(x.size):
        out[i] = 0.0
    for e in range(pa.size):
        if pon[e] <= t < poff[e]:
            p = pk[e] * math.cos(pw[e] * t + pph[e])
            a, b = pa[e], pb[e]
            if diagonal:
                d = x[b] - x[a]
                out[a] += p * d
                out[b] -= p * d
            else:
                out[a] += p * x[b]
                out[b] += p * x[a]
    if p_target >= 0 and p_start <= t < p_end:
        out[p_target] += p_acc * math.cos(p_freq * t)


@numba.njit(cache=True)
def integrate(omega, gamma, pa, pb, pk, pw, pph, pon, poff, diagonal,
              p_target, p_acc, p_freq, p_start, p_end,
              x0, v0, t0, h, nsteps, decim, lawson):
    """Fixed-step integration; returns (xs, vs, bad) with bad = -1 when all finite.

    ``lawson`` selects the integrating-factor RK4 (free oscillators
    propagated exactly, RK4 stages on the forcing only); otherwise
    classical RK4 on the full first-order system.
    """
    n = omega.size
    nout = nsteps // decim + 1
    xs = np.empty((nout, n))
    vs = np.empty((nout, n))
    x = x0.copy()
    v = v0.copy()
    xs[0] = x
    vs[0] = v
    eh = np.empty((n, 4))
    eh2 = np.empty((n, 4))
    _free_propagator(omega, gamma, h, eh)
    _free_propagator(omega, gamma, 0.5 * h, eh2)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    xt = np.empty(n)
    vt = np.empty(n)
    fx = np.empty(n)
    fv = np.empty(n)
    hx = np.empty(n)
    hv = np.empty(n)
    w2 = omega * omega
    bad = -1
    for step in range(nsteps):
        t = t0 + step * h
        if lawson:
            _forcing(t, x, pa, pb, pk, pw, pph, pon, poff, diagonal, p_target, p_acc, p_freq, p_start, p_end, k1)
            # E(h/2) applied to the free state, reused by stages 2 and 3
            for i in range(n):
                hx[i] = eh2[i, 0] * x[i] + eh2[i, 1] * v[i]
                hv[i] = eh2[i, 2] * x[i] + eh2[i, 3] * v[i]
            for i in range(n):
                vv = v[i] + 0.5 * h * k1[i]
                xt[i] = eh2[i, 0] * x[i] + eh2[i, 1] * vv
            _forcing(t + 0.5 * h, xt, pa, pb, pk, pw, pph, pon, poff, diagonal, p_target, p_acc, p_freq, p_start, p_end, k2)
            for i in range(n):
                xt[i] = hx[i]
            _forcing(t + 0.5 * h, xt, pa, pb, pk, pw, pph, pon, poff, diagonal, p_target, p_acc, p_freq, p_start, p_end, k3)
            for i in range(n):
                xt[i] = eh[i, 0] * x[i] + eh[i, 1] * v[i] + h * eh2[i, 1] * k3[i]
            _forcing(t + h, xt, pa, pb, pk, pw, pph, pon, poff, diagonal, p_target, p_acc, p_freq, p_start, p_end, k4)
            for i in range(n):
                # stage forcings enter the velocity only; propagate (0, k) forward
                fx[i] = eh[i, 1] * k1[i] + 2.0 * eh2[i, 1] * (k2[i] + k3[i])
                fv[i] = eh[i, 3] * k1[i] + 2.0 * eh2[i, 3] * (k2[i] + k3[i]) + k4[i]
                xn = eh[i, 0] * x[i] + eh[i, 1] * v[i] + h / 6.0 * fx[i]
                vn = eh[i, 2] * x[i] + eh[i, 3] * v[i] + h / 6.0 * fv[i]
                x[i] = xn
                v[i] = vn
        else:
            _forcing(t, x, pa, pb, pk, pw, pph, pon, poff, diagonal, p_target, p_acc, p_freq, p_start, p_end, k1)
            for i in range(n):
                k1[i] += -w2[i] * x[i] - gamma[i] * v[i]
                fx[i] = v[i]
                xt[i] = x[i] + 0.5 * h * fx[i]
                vt[i] = v[i] + 0.5 * h * k1[i]
            _forcing(t + 0.5 * h, xt, pa, pb, pk, pw, pph, pon, poff, diagonal, p_target, p_acc, p_freq, p_start, p_end, k2)
            for i in range(n):
                k2[i] += -w2[i] * xt[i] - gamma[i] * vt[i]
                hx[i] = vt[i]
            for i in range(n):
                xt[i] = x[i] + 0.5 * h * hx[i]
                hv[i] = v[i] + 0.5 * h * k2[i]
            _forcing(t + 0.5 * h, xt, pa, pb, pk, pw, pph, pon, poff, diagonal, p_target, p_acc, p_freq, p_start, p_end, k3)
            for i in range(n):
                k3[i] += -w2[i] * xt[i] - gamma[i] * hv[i]
                fv[i] = hv[i]
            for i in range(n):
                xt[i] = x[i] + h * fv[i]
                vt[i] = v[i] + h * k3[i]
            _forcing(t + h, xt, pa, pb, pk, pw, pph, pon, poff, diagonal, p_target, p_acc, p_freq, p_start, p_end, k4)
            for i in range(n):
                k4[i] += -w2[i] * xt[i] - gamma[i] * vt[i]
                x[i] = x[i] + h / 6.0 * (fx[i] + 2.0 * hx[i] + 2.0 * fv[i] + vt[i])
                v[i] = v[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        if (step + 1) % decim == 0:
            j = (step + 1) // decim
            for i in range(n):
                xs[j, i] = x[i]
                vs[j, i] = v[i]
                if not (math.isfinite(x[i]) and math.isfinite(v[i])):
                    bad = step + 1
            if bad >= 0:
                return xs[: j + 1], vs[: j + 1], bad
    return xs, vs, bad
