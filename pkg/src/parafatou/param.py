"""Iterative parametrization of the repelling direction of a special map.

The n-th approximant is phi_n(z) = f^n(z / (1 + n z)).  On the disk
V_eps = {|z - eps| < eps} the approximants form a Cauchy sequence with
|phi_{n+1} - phi_n| <= C |z|^2 / (1 + n|z|)^2, and the limit satisfies
phi(t/(1-t)) = f(phi(t)).  The same iteration seen in the chart w = 1/z is
psi_n(w) = g^n(w + n), and its inverse-direction companion
gamma_n(u) = h^n(u) - n converges to a solution of gamma(h(u)) = gamma(u) + 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from . import _kernels as K
from .errors import (
    DomainError,
    InsufficientData,
    NewtonFailure,
    NoConvergence,
    OrbitOverflow,
    PoleError,
)
from .maps import (
    PolynomialMap1D,
    estimate_chart_constants,
    eval_map,
    is_special_1d,
)

MAX_N = 10**7
WINDOW = 10
SAFETY = 4.0
MARGIN = 0.9
NEWTON_RTOL = 1e-13
NEWTON_MAXIT = 50
POLE_RTOL = 1e-14


@dataclass(frozen=True)
class DomainVEps:
    """Open disk {z : |z - eps| < eps}; in the chart w = 1/z this is Re(w) > 1/(2 eps)."""

    eps: float

    def __contains__(self, z) -> bool:
        return abs(complex(z) - self.eps) < self.eps

    def sample(self, rng: np.random.Generator, size: int, shrink: float = 0.98) -> np.ndarray:
        r = shrink * self.eps * np.sqrt(rng.uniform(size=size))
        a = rng.uniform(0.0, 2 * np.pi, size=size)
        return self.eps + r * np.exp(1j * a)


@dataclass
class ParamResult:
    value: complex
    n_used: int
    tail_bound: float
    history: list = field(default_factory=list)
    N: int = 0
    method: str = "plain"

    def as_dict(self):
        return {
            "phi": [self.value.real, self.value.imag],
            "n_used": self.n_used,
            "tail_bound": self.tail_bound,
            "N": self.N,
            "method": self.method,
        }


@dataclass
class DecayFit:
    exponent: float
    constant: float
    n_range: tuple
    residual: float
    ns: list = field(default_factory=list)
    diffs: list = field(default_factory=list)

    def as_dict(self):
        return {
            "exponent": self.exponent,
            "constant": self.constant,
            "n_range": list(self.n_range),
            "residual": self.residual,
            "ns": list(self.ns),
            "diffs": list(self.diffs),
        }


def _raise_status(status: int, index: int, what: str):
    if status == K.POLE:
        raise PoleError(f"{what}: pole after {index} steps")
    if status == K.OVERFLOW:
        raise OrbitOverflow(f"{what}: orbit left the finite range at step {index}", index)
    if status == K.NEWTON:
        raise NewtonFailure(f"{what}: inverse-chart Newton solve failed at step {index}")


def v_eps(f: PolynomialMap1D) -> DomainVEps:
    return DomainVEps(estimate_chart_constants(f).eps)


def phi_n(f: PolynomialMap1D, z: complex, n: int) -> complex:
    """f^n(z / (1 + n z))."""
    if n < 0:
        raise ValueError("n must be >= 0")
    z = complex(z)
    value, status, index = K.phi_n(f.code, f.table, z, n)
    _raise_status(status, index, f"phi_{n}({z})")
    return value


# -- limit engine shared with the skew product ---------------------------------


def limit_plain(
    seq: Callable[[int], complex],
    diff_shape: Callable[[int], float],
    tail_shape: Callable[[int], float],
    tol: float,
    noise: Optional[Callable[[complex, int], float]] = None,
    n0: int = 8,
    max_n: int = MAX_N,
) -> ParamResult:
    """Run ``seq`` at n = n0 * 2^k until the measured tail bound drops below tol.

    At each checkpoint the difference d = |seq(n+1) - seq(n)| gives a sample
    of the rate constant, C_k = d / diff_shape(n).  The bound uses SAFETY
    times the largest of the last WINDOW samples, multiplied by
    tail_shape(n), which must dominate the sum of diff_shape over k > n.

    Differences below ``noise(value, n)`` are rounding, not truncation; they
    are kept in the history but do not feed the constant.  The rounding level
    at the final n is added to the returned bound.
    """
    history = []
    samples = []
    n = n0
    while n <= max_n:
        a = seq(n)
        b = seq(n + 1)
        d = abs(b - a)
        history.append((n, d))
        floor = noise(b, n + 1) if noise is not None else 0.0
        if d > floor or not samples:
            samples.append(d / diff_shape(n))
        tail = SAFETY * max(samples[-WINDOW:]) * tail_shape(n) + floor
        if len(history) >= 3 and tail <= tol:
            return ParamResult(b, n + 1, tail, history)
        n *= 2
    raise NoConvergence(f"tail bound still above {tol:g} at n = {n // 2}")


def limit_richardson(
    seq: Callable[[int], complex],
    tol: float,
    n0: int = 256,
    levels: int = 14,
    order: int = 3,
    best_effort: bool = False,
) -> ParamResult:
    """Extrapolate seq(n) -> limit assuming an expansion in powers of 1/n.

    Uses n = n0 * 2^k and a Richardson table with up to ``order`` eliminated
    terms.  The reported bound is twice the change of the best column between
    the last two rows; it is an estimate, not a certificate.

    With ``best_effort`` the ladder stops once rounding makes the estimate
    grow for two consecutive levels, and the value with the smallest estimate
    is returned even if it is above tol.
    """
    rows = []
    history = []
    best = None
    rises = 0
    for k in range(levels):
        n = n0 * 2**k
        row = [seq(n)]
        for j in range(1, min(k, order) + 1):
            row.append(row[j - 1] + (row[j - 1] - rows[-1][j - 1]) / (2**j - 1))
        rows.append(row)
        if k < 2:
            continue
        err, jbest = min((abs(row[j] - rows[-2][j]), j) for j in range(1, min(k - 1, order) + 1))
        history.append((n, err))
        if best is None or err < best[0]:
            best = (err, row[jbest], n)
            rises = 0
        else:
            rises += 1
        if 2.0 * err <= tol:
            return ParamResult(row[jbest], n, 2.0 * err, history, method="richardson")
        if best_effort and rises >= 2:
            break
    if best_effort:
        return ParamResult(best[1], best[2], 2.0 * best[0], history, method="richardson_best")
    raise NoConvergence(f"Richardson estimate still above {tol:g} at n = {n0 * 2 ** (levels - 1)}")


def _limit(seq, diff_shape, tail_shape, tol, method, noise=None):
    if tol <= 0:
        raise ValueError("tol must be positive")
    if method == "plain":
        return limit_plain(seq, diff_shape, tail_shape, tol, noise)
    if method == "richardson":
        return limit_richardson(seq, tol)
    if method == "richardson_best":
        return limit_richardson(seq, tol, best_effort=True)
    raise ValueError(f"unknown limit method {method!r}")


def phi_limit(f: PolynomialMap1D, z: complex, tol: float, method: str = "plain") -> ParamResult:
    """Limit of phi_n(z) for z in V_eps, with a measured tail bound."""
    z = complex(z)
    if z == 0:
        return ParamResult(0j, 0, 0.0, method=method)
    dom = v_eps(f)
    if z not in dom:
        raise DomainError(f"{z} is not in V_eps with eps = {dom.eps:g}")
    s = abs(z)
    return _limit(
        lambda n: phi_n(f, z, n),
        lambda n: s * s / (1.0 + n * s) ** 2,
        lambda n: s / (1.0 + n * s),
        tol,
        method,
        lambda v, n: noise_floor(v, n, s),
    )


def entry_index(t: complex, R: float) -> int:
    """Least N >= 0 with Re(1/m_N(t)) >= R / MARGIN, i.e. m_N(t) well inside V_eps."""
    w = 1.0 / complex(t)
    target = R / MARGIN
    N = max(0, math.ceil(target - w.real))
    while (1.0 / K.mobius(complex(t), N)).real < target:
        N += 1
    return N


def check_chain(t: complex, N: int):
    """Raise PoleError if 1 + k t vanishes (relative 1e-14) for some k in 0..N."""
    w = 1.0 / t
    if w.real < 0 and abs(w.imag) <= POLE_RTOL * max(1.0, abs(w)):
        k = round(-w.real)
        if 1 <= k <= N and abs(1 + k * t) <= POLE_RTOL * max(1.0, abs(k * t)):
            raise PoleError(f"1 + {k} t = 0 along the extension chain of t = {t}")


def extend(inner, N: int, tol: float, push: Callable[[complex, int], tuple]) -> ParamResult:
    """Push the inner limit through N forward steps, tightening it by |(f^N)'|."""
    res = inner(tol)
    value, deriv = push(res.value, N)
    gain = abs(deriv)
    for _ in range(2):
        if res.tail_bound * gain <= tol or gain <= 1.0:
            break
        res = inner(tol / gain)
        value, deriv = push(res.value, N)
        gain = abs(deriv)
    return ParamResult(value, res.n_used, res.tail_bound * max(gain, 1e-300), res.history, N, res.method)


def _push_1d(f: PolynomialMap1D):
    def push(z, N):
        value, deriv, status, index = K.iterate_1d_d(f.code, f.table, complex(z), N)
        _raise_status(status, index, "forward extension")
        return value, deriv

    return push


def phi_extended(f: PolynomialMap1D, t: complex, tol: float, method: str = "plain") -> ParamResult:
    """phi(t) = f^N(phi(m_N(t))) with N = N(t) minimal."""
    t = complex(t)
    if t == 0:
        return ParamResult(0j, 0, 0.0, method=method)
    R = estimate_chart_constants(f).R
    N = entry_index(t, R)
    check_chain(t, N)
    s = K.mobius(t, N)
    if N == 0:
        res = phi_limit(f, s, tol, method)
        res.N = 0
        return res
    return extend(lambda tl: phi_limit(f, s, tl, method), N, tol, _push_1d(f))


def psi_n(f: PolynomialMap1D, w: complex, n: int) -> complex:
    """g^n(w + n) where g(w) = 1/f(1/w)."""
    w = complex(w)
    R = estimate_chart_constants(f).R
    if w.real <= R:
        raise DomainError(f"Re(w) = {w.real:g} <= R = {R:g}")
    value, status, index = K.psi_n(f.code, f.table, w, n)
    _raise_status(status, index, f"psi_{n}({w})")
    return value


def chart_inverse(f: PolynomialMap1D, u: complex) -> complex:
    """h(u): the solution x near u + 1 of g(x) = u."""
    x, status, steps = K.chart_inverse(f.code, f.table, complex(u), NEWTON_RTOL, NEWTON_MAXIT)
    _raise_status(status, 0, f"h({u})")
    return x


def gamma_n(f: PolynomialMap1D, u: complex, n: int) -> complex:
    """h^n(u) - n."""
    u = complex(u)
    c = estimate_chart_constants(f)
    if u.real <= c.R_prime:
        raise DomainError(f"Re(u) = {u.real:g} <= R' = {c.R_prime:g}")
    value, status, index = K.gamma_n(f.code, f.table, u, n, NEWTON_RTOL, NEWTON_MAXIT)
    _raise_status(status, index, f"gamma_{n}({u})")
    return value


@dataclass
class ResidualReport:
    max_residual: float
    passed: bool
    precondition_ok: bool
    tol: float
    samples: list = field(default_factory=list)
    note: str = ""

    def as_dict(self):
        return {
            "max_residual": self.max_residual,
            "passed": self.passed,
            "precondition_ok": self.precondition_ok,
            "tol": self.tol,
            "note": self.note,
            "samples": self.samples,
        }


def residual_report(samples: Iterable[complex], tol: float, one: Callable[[complex], tuple]) -> ResidualReport:
    rows = []
    worst = 0.0
    for t in samples:
        t = complex(t)
        try:
            lhs, rhs = one(t)
        except (PoleError, OrbitOverflow, NoConvergence, DomainError) as exc:
            rows.append({"t": [t.real, t.imag], "skipped": type(exc).__name__})
            continue
        r = abs(lhs - rhs)
        worst = max(worst, r)
        rows.append({"t": [t.real, t.imag], "residual": r})
    used = sum("residual" in row for row in rows)
    return ResidualReport(worst, used > 0 and worst < tol, True, tol, rows)


def verify_functional_equation(
    f: PolynomialMap1D, samples: Iterable[complex], tol: float, method: str = "plain"
) -> ResidualReport:
    """Residuals |phi(t/(1-t)) - f(phi(t))|, each side computed to tol/10."""
    cert = is_special_1d(f)
    if not cert:
        rows = [{"t": [complex(t).real, complex(t).imag], "skipped": "precondition"} for t in samples]
        return ResidualReport(math.nan, False, False, tol, rows, "precondition violated: " + "; ".join(cert.violations))

    def one(t):
        inner = tol / 10
        lhs = phi_extended(f, t / (1 - t), inner, method).value
        rhs = eval_map(f, phi_extended(f, t, inner, method).value)
        return lhs, rhs

    return residual_report(samples, tol, one)


def noise_floor(value: complex, n: int, z_abs: float) -> float:
    """Rounding level of phi_n: each step adds ~1 ulp of w = 1/z, carried to the end."""
    return float(16 * np.finfo(float).eps * abs(value) * (1.0 + n * z_abs))


def fit_log_log(ns, diffs, z_abs: float) -> DecayFit:
    ns = np.asarray(ns, dtype=float)
    diffs = np.asarray(diffs, dtype=float)
    x = np.log(ns)
    y = np.log(diffs)
    slope, icept = np.polyfit(x, y, 1)
    resid = float(np.sum((y - (slope * x + icept)) ** 2))
    shape = z_abs**2 / (1.0 + ns * z_abs) ** 2
    C = float(np.exp(np.mean(np.log(diffs / shape))))
    return DecayFit(float(-slope), C, (int(ns[0]), int(ns[-1])), resid, [int(v) for v in ns], [float(d) for d in diffs])


def decay_samples(n_range, points: int = 40) -> np.ndarray:
    lo, hi = n_range
    return np.unique(np.geomspace(lo, hi, points).astype(int))


def fit_decay(f: PolynomialMap1D, z: complex, n_range=(100, 5000), points: int = 40) -> DecayFit:
    """Fit |phi_{n+1}(z) - phi_n(z)| ~ K n^-p over n_range.

    ``exponent`` is p from the log-log regression.  ``constant`` is the
    geometric mean of d_n (1 + n|z|)^2 / |z|^2, the constant of the bound
    shape C |z|^2 / (1 + n|z|)^2.
    """
    z = complex(z)
    s = abs(z)
    ns, diffs = [], []
    for n in decay_samples(n_range, points):
        a = phi_n(f, z, int(n))
        b = phi_n(f, z, int(n) + 1)
        d = abs(b - a)
        if d > noise_floor(a, int(n), s):
            ns.append(int(n))
            diffs.append(d)
    if len(ns) < 10:
        raise InsufficientData(f"only {len(ns)} differences above rounding level over n in {tuple(n_range)}")
    return fit_log_log(ns, diffs, s)
