"""Compiled inner loops.

Every orbit in the package runs through these functions so that two code
paths performing the same arithmetic produce the same bits.  Kernels never
raise; they return ``(value, status, index)`` and the Python wrappers turn a
non-zero status into an exception.
"""

import math

import numpy as np
from numba import njit

POLYNOMIAL = 0
MOBIUS = 1

OK = 0
POLE = 1
OVERFLOW = 2
NEWTON = 3

NAN = complex(math.nan, math.nan)


@njit(cache=True)
def finite(z):
    return math.isfinite(z.real) and math.isfinite(z.imag)


@njit(cache=True)
def mobius(t, n):
    return t / (1.0 + n * t)


@njit(cache=True)
def horner(c, z):
    d = c.shape[0] - 1
    r = c[d]
    for k in range(d - 1, -1, -1):
        r = r * z + c[k]
    return r


@njit(cache=True)
def horner_d(c, z):
    """Value and derivative of the polynomial with coefficients ``c``."""
    d = c.shape[0] - 1
    r = c[d]
    dr = 0j
    for k in range(d - 1, -1, -1):
        dr = dr * z + r
        r = r * z + c[k]
    return r, dr


@njit(cache=True)
def coeff_at(c2, k, t):
    dt = c2.shape[1] - 1
    a = c2[k, dt]
    for j in range(dt - 1, -1, -1):
        a = a * t + c2[k, j]
    return a


@njit(cache=True)
def specialize(c2, t):
    out = np.empty(c2.shape[0], dtype=np.complex128)
    for k in range(c2.shape[0]):
        out[k] = coeff_at(c2, k, t)
    return out


@njit(cache=True)
def horner_family(c2, t, z):
    dz = c2.shape[0] - 1
    r = coeff_at(c2, dz, t)
    for k in range(dz - 1, -1, -1):
        r = r * z + coeff_at(c2, k, t)
    return r


@njit(cache=True)
def mobius_step(z):
    """z/(1-z) written as 1/(1/z - 1): subtracting 1 from a large 1/z is
    nearly exact, so long orbits lose about five times fewer bits."""
    if z == 0:
        return z
    return 1.0 / (1.0 / z - 1.0)


@njit(cache=True)
def eval_1d(kind, c, z):
    if kind == MOBIUS:
        return mobius_step(z)
    return horner(c, z)


@njit(cache=True)
def deriv_1d(kind, c, z):
    if kind == MOBIUS:
        return 1.0 / ((1.0 - z) * (1.0 - z))
    return horner_d(c, z)[1]


@njit(cache=True)
def eval_fam(kind, c2, t, z):
    if kind == MOBIUS:
        return mobius_step(z)
    return horner_family(c2, t, z)


@njit(cache=True)
def iterate_1d(kind, c, z, n):
    """f^n(z) with pole/overflow detection."""
    for i in range(n):
        if kind == MOBIUS and z == 1.0:
            return NAN, POLE, i
        z = eval_1d(kind, c, z)
        if not finite(z):
            return z, OVERFLOW, i + 1
    return z, OK, n


@njit(cache=True)
def iterate_1d_d(kind, c, z, n):
    """f^n(z) together with (f^n)'(z)."""
    d = 1.0 + 0j
    for i in range(n):
        if kind == MOBIUS and z == 1.0:
            return NAN, NAN, POLE, i
        d = d * deriv_1d(kind, c, z)
        z = eval_1d(kind, c, z)
        if not (finite(z) and finite(d)):
            return z, d, OVERFLOW, i + 1
    return z, d, OK, n


@njit(cache=True)
def phi_n(kind, c, z, n):
    den = 1.0 + n * z
    if den == 0:
        return NAN, POLE, 0
    return iterate_1d(kind, c, z / den, n)


@njit(cache=True)
def skew_iterate(kind, c2, t, k0, z, steps):
    """Fiber coordinate of F^steps starting at base m_k0(t), fiber z.

    The base is always recomputed in closed form as m_{k0+k}(t).
    """
    for k in range(steps):
        den = 1.0 + (k0 + k) * t
        if den == 0:
            return NAN, POLE, k
        b = t / den
        if kind == MOBIUS and z == 1.0:
            return NAN, POLE, k
        z = eval_fam(kind, c2, b, z)
        if not finite(z):
            return z, OVERFLOW, k + 1
    return z, OK, steps


@njit(cache=True)
def skew_phi_n(kind, c2, t, n):
    den = 1.0 + n * t
    if den == 0:
        return NAN, POLE, 0
    return skew_iterate(kind, c2, t, n + 1, t / den, n)


@njit(cache=True)
def chart_1d(kind, c, w):
    return 1.0 / eval_1d(kind, c, 1.0 / w)


@njit(cache=True)
def chart_1d_d(kind, c, w):
    z = 1.0 / w
    if kind == MOBIUS:
        fz = z / (1.0 - z)
        dfz = 1.0 / ((1.0 - z) * (1.0 - z))
    else:
        fz, dfz = horner_d(c, z)
    return 1.0 / fz, dfz / (w * w * fz * fz)


@njit(cache=True)
def chart_fam(kind, c2, v, w):
    return 1.0 / eval_fam(kind, c2, 1.0 / v, 1.0 / w)


@njit(cache=True)
def psi_n(kind, c, w, n):
    x = w + n
    for i in range(n):
        x = chart_1d(kind, c, x)
        if not finite(x):
            return x, OVERFLOW, i + 1
    return x, OK, n


@njit(cache=True)
def chart_inverse(kind, c, u, rtol, maxit):
    """Solve g(x) = u by Newton from x = u + 1; returns (x, status, steps)."""
    x = u + 1.0
    scale = max(1.0, abs(u))
    for it in range(maxit):
        gx, dgx = chart_1d_d(kind, c, x)
        r = gx - u
        if abs(r) <= rtol * scale:
            return x, OK, it
        if dgx == 0 or not finite(dgx):
            return x, NEWTON, it
        x = x - r / dgx
        if not finite(x):
            return x, NEWTON, it
    gx = chart_1d(kind, c, x)
    if abs(gx - u) <= rtol * scale:
        return x, OK, maxit
    return x, NEWTON, maxit


@njit(cache=True)
def gamma_n(kind, c, u, n, rtol, maxit):
    x = u
    for i in range(n):
        x, st, _ = chart_inverse(kind, c, x, rtol, maxit)
        if st != OK:
            return x, st, i
    return x - n, OK, n


@njit(cache=True)
def lemma_orbit(kind, c2, u, n):
    """u_{n,i} = g_{u+n+i} o ... o g_{u+n+1}(u+n) for i = 0..n."""
    out = np.empty(n + 1, dtype=np.complex128)
    out[0] = u + n
    for i in range(1, n + 1):
        out[i] = chart_fam(kind, c2, u + n + i, out[i - 1])
    return out


@njit(cache=True)
def petal_counts(kind, c, zs, enter, escape, cap):
    """First index k with |f^k(z)| < enter; -1 on escape, cap if never."""
    res = np.empty(zs.shape[0], dtype=np.int64)
    for p in range(zs.shape[0]):
        z = zs[p]
        count = cap
        for k in range(cap):
            if abs(z) < enter:
                count = k
                break
            if abs(z) > escape or (kind == MOBIUS and z == 1.0):
                count = -1
                break
            z = eval_1d(kind, c, z)
            if not finite(z):
                count = -1
                break
        res[p] = count
    return res
