"""Parabolic skew products F(t, z) = (t/(1+t), f_t(z)).

The base coordinate of an orbit is never accumulated step by step: after k
steps from t it is recomputed as m_k(t) = t/(1+kt).  This keeps every orbit
exactly on the base Möbius orbit and lets different code paths share bits.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import _kernels as K
from .errors import DomainError, PoleError, PrecondError
from .maps import (
    BivariateFamily,
    Certificate,
    ChartConstants,
    PolynomialMap1D,
    estimate_chart_constants,
    eval_family,
    eval_map,
    is_special_family,
    mobius_n,
    specialize,
)
from .param import (
    DomainVEps,
    ParamResult,
    ResidualReport,
    _limit,
    _push_1d,
    _raise_status,
    check_chain,
    entry_index,
    extend,
    noise_floor,
    residual_report,
)

X0_ATOL = 1e-12

# Rows k = 0..7 of (z+1)^4 (z - 3z^2 + 7z^3) + t (1 + (z+1)^4 (-1 + 4z - 10z^2 + 20z^3)),
# each row holding the coefficients of t^0 and t^1.
EXAMPLE_COEFFS = (
    (0, 0),
    (1, 0),
    (1, 0),
    (1, 0),
    (14, 35),
    (31, 84),
    (25, 70),
    (7, 20),
)


@dataclass(frozen=True)
class SkewPoint:
    t: complex
    z: complex


@dataclass(frozen=True)
class SkewMap:
    """A skew product over the Möbius base with a special fiber family.

    ``x0`` is the optional marked point with f_t(x0) = t used by the
    critical-fiber constructions; it is not checked here.
    """

    family: BivariateFamily
    x0: Optional[complex] = None

    def __post_init__(self):
        cert = is_special_family(self.family)
        if not cert:
            raise PrecondError("family is not special: " + "; ".join(cert.violations))

    @property
    def constants(self) -> ChartConstants:
        return estimate_chart_constants(self.family)

    @functools.cached_property
    def f0(self) -> PolynomialMap1D:
        return specialize(self.family, 0.0)

    @property
    def code(self) -> int:
        return self.family.code

    @property
    def table(self) -> np.ndarray:
        return self.family.table


def example_family() -> SkewMap:
    """The special skew map with f_t(-1) = t whose f_0 vanishes to order 4 at -1."""
    return SkewMap(BivariateFamily(EXAMPLE_COEFFS), x0=-1.0 + 0j)


def t_independent(f: PolynomialMap1D) -> SkewMap:
    return SkewMap(BivariateFamily.from_map(f))


def skew_step(F: SkewMap, p: SkewPoint) -> SkewPoint:
    t = complex(p.t)
    if t == -1:
        raise PoleError("t/(1+t) has a pole at t = -1")
    return SkewPoint(K.mobius(t, 1), eval_family(F.family, t, p.z))


def skew_orbit(F: SkewMap, p: SkewPoint, n: int) -> list:
    """[p, F(p), ..., F^n(p)], with base coordinates m_k(t) in closed form."""
    t = complex(p.t)
    z = complex(p.z)
    out = [SkewPoint(t, z)]
    for k in range(n):
        if 1 + (k + 1) * t == 0 or 1 + k * t == 0:
            raise PoleError(f"base pole at step {k + 1} for t = {t}")
        z, status, index = K.skew_iterate(F.code, F.table, t, k, z, 1)
        _raise_status(status, k + index, "skew orbit")
        out.append(SkewPoint(K.mobius(t, k + 1), z))
    return out


def skew_phi_n(F: SkewMap, t: complex, n: int) -> complex:
    """pi_2 F^n(m_{n+1}(t), m_n(t))."""
    if n < 0:
        raise ValueError("n must be >= 0")
    t = complex(t)
    value, status, index = K.skew_phi_n(F.code, F.table, t, n)
    _raise_status(status, index, f"skew phi_{n}({t})")
    return value


def v_eps(F: SkewMap) -> DomainVEps:
    return DomainVEps(F.constants.eps)


def skew_phi_limit(F: SkewMap, t: complex, tol: float, method: str = "plain") -> ParamResult:
    """Limit of skew_phi_n(t) for t in V_eps.

    The stopping rule measures the constant of |phi_{n+1} - phi_n| <= A'/(1+n eps)^2
    and bounds the remaining tail by the sum of that shape, A'/(eps (1+n eps)).
    """
    t = complex(t)
    if t == 0:
        return ParamResult(0j, 0, 0.0, method=method)
    dom = v_eps(F)
    if t not in dom:
        raise DomainError(f"{t} is not in V_eps with eps = {dom.eps:g}")
    eps = dom.eps
    s = abs(t)
    return _limit(
        lambda n: skew_phi_n(F, t, n),
        lambda n: 1.0 / (1.0 + n * eps) ** 2,
        lambda n: 1.0 / (eps * (1.0 + n * eps)),
        tol,
        method,
        lambda v, n: noise_floor(v, n, s),
    )


def skew_phi_extended(F: SkewMap, t: complex, tol: float, method: str = "plain") -> ParamResult:
    """phi(t) = f_0^N(phi(m_N(t))) with N = N(t) minimal.

    This is the n -> infinity limit of pi_2 F^N(m_{N+2n+1}(t), phi_n(m_N(t))),
    whose base coordinates tend to 0.
    """
    t = complex(t)
    if t == 0:
        return ParamResult(0j, 0, 0.0, method=method)
    N = entry_index(t, F.constants.R)
    check_chain(t, N)
    s = K.mobius(t, N)
    if N == 0:
        return skew_phi_limit(F, s, tol, method)
    return extend(lambda tl: skew_phi_limit(F, s, tl, method), N, tol, _push_1d(F.f0))


def skew_phi_finite_extension(F: SkewMap, t: complex, N: int, n: int) -> complex:
    """pi_2 F^N(m_{N+2n+1}(t), phi_n(m_N(t))): the finite-n form of the extension."""
    t = complex(t)
    check_chain(t, N + 2 * n + 1 + N)
    inner = skew_phi_n(F, mobius_n(t, N), n)
    value, status, index = K.skew_iterate(F.code, F.table, t, N + 2 * n + 1, inner, N)
    _raise_status(status, index, "finite extension")
    return value


def _x0_violations(fam: BivariateFamily, x0: complex) -> list:
    bad = []
    if x0 == 0:
        bad.append("x0 must be non-zero")
    if fam.kind != "polynomial":
        bad.append("f_t(x0) does not depend on t for a Möbius fiber family")
        return bad
    c = fam.table
    for j in range(c.shape[1]):
        s = K.horner(np.ascontiguousarray(c[:, j]), x0)
        want = 1.0 if j == 1 else 0.0
        if abs(s - want) > X0_ATOL:
            bad.append(f"sum_k a_{{k,{j}}} x0^k = {s!r}, expected {want:g}")
    if c.shape[1] < 2:
        bad.append("sum_k a_{k,1} x0^k = 0, expected 1")
    return bad


@functools.lru_cache(maxsize=64)
def _certificate(fam: BivariateFamily, x0: complex) -> Certificate:
    bad = list(is_special_family(fam).violations)
    bad += _x0_violations(fam, x0)
    return Certificate(not bad, bad)


def check_special_skew(F, x0: complex) -> Certificate:
    """Is every f_t special, and does f_t(x0) = t hold coefficient by coefficient?"""
    fam = F.family if isinstance(F, SkewMap) else F
    return _certificate(fam, complex(x0))


def one_step_x0(F: SkewMap, x0: complex, t: complex, n: int) -> SkewPoint:
    """F(m_n(t), x0), computed literally."""
    return skew_step(F, SkewPoint(mobius_n(t, n), x0))


def skew_phi_via_x0(F: SkewMap, x0: complex, t: complex, n: int) -> complex:
    """pi_2 F^{n+1}(m_n(t), x0).

    Once the certificate holds, the first step lands exactly on
    (m_{n+1}(t), m_n(t)); the orbit is continued from that point, so the
    result is the same computation as skew_phi_n.
    """
    cert = check_special_skew(F, x0)
    if not cert:
        raise PrecondError("x0 certificate failed: " + "; ".join(cert.violations))
    t = complex(t)
    if 1 + n * t == 0:
        raise PoleError(f"1 + {n} t = 0")
    return skew_phi_n(F, t, n)


def verify_skew_functional_equation(
    F: SkewMap, samples: Iterable[complex], tol: float, method: str = "plain"
) -> ResidualReport:
    """Residuals |phi(t/(1-t)) - f_0(phi(t))| with both sides at accuracy tol/10."""
    f0 = F.f0

    def one(t):
        inner = tol / 10
        lhs = skew_phi_extended(F, t / (1 - t), inner, method).value
        rhs = eval_map(f0, skew_phi_extended(F, t, inner, method).value)
        return lhs, rhs

    return residual_report(samples, tol, one)


@dataclass
class OrbitDiagnostics:
    """Infinity-chart orbit u_{n,i} and the three bound families along it."""

    u: complex
    n: int
    R: float
    A: float
    u_values: list = field(default_factory=list)
    re_margins: list = field(default_factory=list)
    gaps: list = field(default_factory=list)
    gap_bound: float = 0.0
    sandwich_ok: list = field(default_factory=list)
    real_sandwich_ok: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def rows(self):
        """Per-index rows {i, re_margin, gap, bound}; gap is empty where undefined."""
        out = []
        for i in range(self.n + 1):
            out.append(
                {
                    "i": i,
                    "re_margin": self.re_margins[i],
                    "gap": self.gaps[i] if i < len(self.gaps) else None,
                    "bound": self.gap_bound,
                }
            )
        return out

    def as_dict(self):
        return {
            "u": [self.u.real, self.u.imag],
            "n": self.n,
            "R": self.R,
            "A": self.A,
            "ok": self.ok,
            "violations": list(self.violations),
            "sandwich_ok": list(self.sandwich_ok),
            "real_sandwich_ok": list(self.real_sandwich_ok),
            "rows": self.rows(),
        }


def diagnose_lemma_bounds(F: SkewMap, u: complex, n: int) -> OrbitDiagnostics:
    """Record the orbit bounds for u_{n,i} = g_{u+n+i} o ... o g_{u+n+1}(u+n).

    Checked along the orbit:
      * modulus sandwich |w| - 11/10 < |g_v(w)| < |w| - 9/10 and its real-part
        form Re(w) - 11/10 < Re(g_v(w)) < Re(w) - 9/10;
      * real-part margins Re(u_{n,i}) - (R + n - i) > 0;
      * gaps |u_{n+1,k+1} - u_{n,k}| <= 4A/(R+n)^2 for k = 0..n.
    Violations are reported, never raised.
    """
    u = complex(u)
    c = F.constants
    if u.real <= c.R_prime:
        raise DomainError(f"Re(u) = {u.real:g} <= R' = {c.R_prime:g}")
    cur = K.lemma_orbit(F.code, F.table, u, n)
    nxt = K.lemma_orbit(F.code, F.table, u, n + 1)
    d = OrbitDiagnostics(u, n, c.R, c.A)
    d.u_values = [complex(x) for x in cur]
    d.re_margins = [float(cur[i].real - (c.R + n - i)) for i in range(n + 1)]
    d.gaps = [float(abs(nxt[k + 1] - cur[k])) for k in range(n + 1)]
    d.gap_bound = 4.0 * c.A / (c.R + n) ** 2
    for i in range(1, n + 1):
        w, gw = cur[i - 1], cur[i]
        d.sandwich_ok.append(bool(abs(w) - 1.1 < abs(gw) < abs(w) - 0.9))
        d.real_sandwich_ok.append(bool(w.real - 1.1 < gw.real < w.real - 0.9))
    for i, m in enumerate(d.re_margins):
        if not m > 0:
            d.violations.append(f"Re margin {m:.3g} at i = {i}")
    for k, g in enumerate(d.gaps):
        if not g <= d.gap_bound:
            d.violations.append(f"gap {g:.3g} > {d.gap_bound:.3g} at k = {k}")
    for i, (a, b) in enumerate(zip(d.sandwich_ok, d.real_sandwich_ok), start=1):
        if not a:
            d.violations.append(f"modulus sandwich fails at step {i}")
        if not b:
            d.violations.append(f"real-part sandwich fails at step {i}")
    return d


def lemma_grid(F: SkewMap, scales=(1.001, 2.0, 3.0, 4.0), slopes=(-0.2, -0.1, 0.1, 0.2)) -> list:
    """u values with Re(u) = R' * scale and Im(u) = slope * Re(u)."""
    Rp = F.constants.R_prime
    return [complex(Rp * s, Rp * s * q) for s in scales for q in slopes]
