"""Parabolic maps, fiber families, the Möbius base and the infinity chart.

A one-variable map is stored by its Taylor coefficients ``a_1..a_d`` (there is
no constant term, so 0 is always fixed).  A fiber family stores the matrix
``a[k][j]`` of ``t**j * z**k``.  Both carry a ``kind`` so that the exactly
solvable map ``z/(1-z)`` can be used wherever a polynomial can.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _kernels as K
from .errors import DomainError, OrbitOverflow, PoleError, PrecondError, SearchFailure

POLYNOMIAL = "polynomial"
MOBIUS_SPECIAL = "mobius_special"
_KIND_CODE = {POLYNOMIAL: K.POLYNOMIAL, MOBIUS_SPECIAL: K.MOBIUS}

A_FLOOR = 1e-12
R_MAX = 1e6
THETA_CAP = 0.1
SAFETY = 2.0
NOISE_ULPS = 16


def _finite(z: complex) -> bool:
    return math.isfinite(z.real) and math.isfinite(z.imag)


def _check_finite(z: complex, what: str, index=None) -> complex:
    if not _finite(z):
        raise OrbitOverflow(f"{what} is not finite ({z!r})", index)
    return z


@dataclass(frozen=True)
class PolynomialMap1D:
    """f(z) = a_1 z + ... + a_d z^d, or z/(1-z) when kind is mobius_special."""

    coeffs: tuple = (1.0 + 0j,)
    kind: str = POLYNOMIAL

    def __post_init__(self):
        if self.kind not in _KIND_CODE:
            raise ValueError(f"unknown map kind {self.kind!r}")
        coeffs = tuple(complex(a) for a in self.coeffs)
        if self.kind == POLYNOMIAL and not coeffs:
            raise ValueError("a polynomial map needs at least a_1")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def mobius_special(cls) -> "PolynomialMap1D":
        return cls((1.0, 1.0, 1.0), MOBIUS_SPECIAL)

    @functools.cached_property
    def table(self) -> np.ndarray:
        """Coefficient array a_0..a_d with a_0 = 0, as used by the kernels."""
        return np.array((0j,) + self.coeffs, dtype=np.complex128)

    @property
    def code(self) -> int:
        return _KIND_CODE[self.kind]

    @property
    def degree(self) -> int:
        return len(self.coeffs)


@dataclass(frozen=True)
class BivariateFamily:
    """f_t(z) = sum_{k,j} a[k][j] t^j z^k (outer index k, inner index j).

    With kind mobius_special the family is the t-independent map z/(1-z).
    """

    coeffs: tuple = ((0j,), (1.0 + 0j,))
    kind: str = POLYNOMIAL

    def __post_init__(self):
        if self.kind not in _KIND_CODE:
            raise ValueError(f"unknown family kind {self.kind!r}")
        rows = [tuple(complex(a) for a in row) for row in self.coeffs]
        width = max((len(r) for r in rows), default=0)
        if self.kind == POLYNOMIAL and (not rows or width == 0):
            raise ValueError("empty coefficient matrix")
        rows = tuple(r + (0j,) * (width - len(r)) for r in rows)
        object.__setattr__(self, "coeffs", rows)

    @classmethod
    def from_map(cls, f: PolynomialMap1D) -> "BivariateFamily":
        """The t-independent family z -> f(z)."""
        if f.kind == MOBIUS_SPECIAL:
            return cls(((0j,), (1 + 0j,), (1 + 0j,), (1 + 0j,)), MOBIUS_SPECIAL)
        return cls(((0j,),) + tuple((a,) for a in f.coeffs))

    @classmethod
    def mobius_special(cls) -> "BivariateFamily":
        return cls.from_map(PolynomialMap1D.mobius_special())

    @functools.cached_property
    def table(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=np.complex128)

    @property
    def code(self) -> int:
        return _KIND_CODE[self.kind]


Mappish = Union[PolynomialMap1D, BivariateFamily]


@dataclass
class Certificate:
    """Outcome of a structural check: ``ok`` plus human-readable violations."""

    ok: bool
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.ok

    def as_dict(self):
        return {"ok": self.ok, "violations": list(self.violations)}


@dataclass(frozen=True)
class ChartConstants:
    R: float
    A: float
    eps: float
    R_prime: float


def eval_map(f: PolynomialMap1D, z: complex) -> complex:
    z = complex(z)
    if f.code == K.MOBIUS and z == 1:
        raise PoleError("z/(1-z) has a pole at z = 1")
    return _check_finite(K.eval_1d(f.code, f.table, z), "f(z)")


def eval_family(fam: BivariateFamily, t: complex, z: complex) -> complex:
    z = complex(z)
    if fam.code == K.MOBIUS and z == 1:
        raise PoleError("z/(1-z) has a pole at z = 1")
    return _check_finite(K.eval_fam(fam.code, fam.table, complex(t), z), "f_t(z)")


def specialize(fam: BivariateFamily, t: complex) -> PolynomialMap1D:
    if fam.kind == MOBIUS_SPECIAL:
        return PolynomialMap1D.mobius_special()
    c = K.specialize(fam.table, complex(t))
    return PolynomialMap1D(tuple(c[1:]))


def is_special_1d(f: PolynomialMap1D) -> Certificate:
    if f.kind == MOBIUS_SPECIAL:
        return Certificate(True)
    bad = []
    for k in (1, 2, 3):
        a = f.coeffs[k - 1] if k <= f.degree else 0j
        if a != 1:
            bad.append(f"a_{k} = {a!r}, expected 1")
    return Certificate(not bad, bad)


def is_special_family(fam: BivariateFamily) -> Certificate:
    if fam.kind == MOBIUS_SPECIAL:
        return Certificate(True)
    bad = []
    rows = fam.coeffs
    width = len(rows[0])
    for k in range(4):
        for j in range(width):
            a = rows[k][j] if k < len(rows) else 0j
            want = 1 if (k >= 1 and j == 0) else 0
            if a != want:
                bad.append(f"a_{{{k},{j}}} = {a!r}, expected {want}")
    return Certificate(not bad, bad)


def mobius_n(t: complex, n: int) -> complex:
    """m_n(t) = t / (1 + n t), the n-th iterate of t -> t/(1+t)."""
    t = complex(t)
    if 1 + n * t == 0:
        raise PoleError(f"1 + {n} t = 0 for t = {t!r}")
    return K.mobius(t, n)


def _theta_samples(R: float, n_radii: int = 16, n_angles: int = 256) -> np.ndarray:
    radii = np.geomspace(R, 100.0 * R, n_radii)
    ang = np.exp(2j * np.pi * np.arange(n_angles) / n_angles)
    return (radii[:, None] * ang[None, :]).ravel()


def _horner_np(c: np.ndarray, z):
    r = np.full(np.shape(z), c[-1], dtype=np.complex128)
    for a in c[-2::-1]:
        r = r * z + a
    return r


def _denoise(theta: np.ndarray, w) -> np.ndarray:
    # g(w) - w + 1 cancels about |w| ulps; anything below that is rounding.
    floor = NOISE_ULPS * np.finfo(float).eps * np.abs(w)
    return np.where(np.abs(theta) <= floor, 0.0, theta)


def _theta_1d(f: PolynomialMap1D, w: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        z = 1.0 / w
        fz = z / (1.0 - z) if f.code == K.MOBIUS else _horner_np(f.table, z)
        return _denoise(1.0 / fz - w + 1.0, w)


def _theta_family(fam: BivariateFamily, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        z = 1.0 / w
        if fam.code == K.MOBIUS:
            fz = np.broadcast_to(z / (1.0 - z), np.broadcast_shapes(u.shape, w.shape))
        else:
            t = 1.0 / u
            tab = fam.table
            fz = 0j
            for k in range(tab.shape[0] - 1, -1, -1):
                fz = fz * z + _horner_np(tab[k], t)
        return _denoise(1.0 / fz - w + 1.0, w)


def _fit_constants(theta_of, label: str) -> ChartConstants:
    R = 1.0
    while R <= R_MAX:
        w = _theta_samples(R)
        th = theta_of(R, w)
        mod = np.abs(th)
        if np.all(np.isfinite(mod)) and mod.max() * SAFETY <= THETA_CAP:
            w_abs = np.broadcast_to(np.abs(w), th.shape)
            A = max(SAFETY * float(np.max(mod * w_abs**2)), A_FLOOR)
            return ChartConstants(R, A, 1.0 / (2.0 * R), R + A / R)
        R *= 2.0
    raise SearchFailure(f"no chart radius R <= {R_MAX:g} found for {label}")


@functools.lru_cache(maxsize=64)
def estimate_chart_constants(obj: Mappish) -> ChartConstants:
    """Find (R, A, eps) such that |g(w) - w + 1| <= min(A/|w|^2, 1/10) for |w| >= R.

    R is doubled from 1 until the sampled remainder on 16 circles of radius
    R..100R (256 points each) stays below 1/10 with safety factor 2; A is
    twice the sampled maximum of |w|^2 |remainder|.  For a family the
    maximum also runs over 16 base parameters u with |u| in [R, 100R].
    """
    if isinstance(obj, PolynomialMap1D):
        cert = is_special_1d(obj)
        if not cert:
            raise PrecondError("map is not special: " + "; ".join(cert.violations))
        return _fit_constants(lambda R, w: _theta_1d(obj, w), "map")
    cert = is_special_family(obj)
    if not cert:
        raise PrecondError("family is not special: " + "; ".join(cert.violations))

    def theta(R, w):
        us = np.geomspace(R, 100.0 * R, 4)[:, None] * np.exp(0.5j * np.pi * np.arange(4))[None, :]
        return _theta_family(obj, us.ravel()[:, None], w[None, :])

    return _fit_constants(theta, "family")


def to_infinity(f: PolynomialMap1D, w: complex, R: float | None = None) -> complex:
    """g(w) = 1/f(1/w), the map seen in the chart w = 1/z."""
    w = complex(w)
    if R is None:
        R = estimate_chart_constants(f).R
    if abs(w) < R:
        raise DomainError(f"|w| = {abs(w):g} < R = {R:g}")
    return _check_finite(K.chart_1d(f.code, f.table, w), "g(w)")


def chart_family(fam: BivariateFamily, u: complex, w: complex) -> complex:
    """g_u(w) = 1/f_{1/u}(1/w)."""
    return _check_finite(K.chart_fam(fam.code, fam.table, complex(u), complex(w)), "g_u(w)")

