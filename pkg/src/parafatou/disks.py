"""Critical parameters, vertical disks on critical fibers, and their nesting.

For a skew map with marked point x0 (f_t(x0) = t) and a parameter t0 with
phi(t0) = x0, the disks D_n = {(m_n(t0), z) : |z - x0| < n^{-3/4}} are
expected to satisfy F^{n+1}(D_n) in D_{2n+1} once n is large.  This module
finds t0, builds the disks and measures how far that containment holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as K
from .errors import (
    DomainError,
    DynamicsError,
    NoRootFound,
    PrecondError,
)
from .maps import mobius_n
from .param import _raise_status, entry_index, limit_richardson
from .skew import SkewMap, check_special_skew, skew_phi_extended, v_eps

GRID = 64
NEWTON_STEPS = 200
FD_STEP = 1e-6
RADII = (0.5, 0.9, 0.999)
BASE_RTOL = 1e-10


@dataclass
class RootFindResult:
    t0: complex
    residual: float
    newton_steps: int
    seed: complex
    phi_error: float = math.nan
    recheck_residual: Optional[float] = None
    recheck_error: Optional[float] = None

    def as_dict(self):
        return {
            "t0": [self.t0.real, self.t0.imag],
            "residual": self.residual,
            "newton_steps": self.newton_steps,
            "seed": [self.seed.real, self.seed.imag],
            "phi_error": self.phi_error,
            "recheck_residual": self.recheck_residual,
            "recheck_error": self.recheck_error,
        }


@dataclass(frozen=True)
class FatouDisk:
    n: int
    center_z: complex
    radius: float
    base_t: complex


@dataclass
class NestingEntry:
    n: int
    max_image_distance: float
    target_radius: float
    margin: float
    center_distance: float
    base_ok: bool = True
    error: Optional[str] = None

    def as_dict(self):
        return {
            "n": self.n,
            "max_image_distance": self.max_image_distance,
            "target_radius": self.target_radius,
            "margin": self.margin,
            "center_distance": self.center_distance,
            "base_ok": self.base_ok,
            "error": self.error,
        }


@dataclass
class NestingReport:
    entries: list = field(default_factory=list)
    threshold_N0: Optional[int] = None
    samples_per_disk: int = 0
    persistent: bool = True
    ratio_nondecreasing: bool = False
    center_bound: float = math.nan
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return (
            self.error is None
            and self.threshold_N0 is not None
            and self.persistent
            and self.ratio_nondecreasing
            and all(e.base_ok for e in self.entries)
        )

    def as_dict(self):
        return {
            "ok": self.ok,
            "threshold_N0": self.threshold_N0,
            "samples_per_disk": self.samples_per_disk,
            "persistent": self.persistent,
            "ratio_nondecreasing": self.ratio_nondecreasing,
            "center_bound": self.center_bound,
            "error": self.error,
            "entries": [e.as_dict() for e in self.entries],
        }

    def csv_rows(self):
        return [(e.n, e.max_image_distance, e.target_radius, e.margin) for e in self.entries]


# -- root search --------------------------------------------------------------


def coarse_phi(F: SkewMap, t: complex, n0: int = 64, levels: int = 4) -> complex:
    """Cheap estimate of phi(t): fixed Richardson table pushed through f_0^N.

    Returns nan on poles or overflow.  Only used to rank grid cells.
    """
    try:
        N = entry_index(t, F.constants.R)
        s = K.mobius(t, N)
        rows = []
        for k in range(levels):
            v, st, _ = K.skew_phi_n(F.code, F.table, s, n0 * 2**k)
            if st != K.OK:
                return complex(math.nan, math.nan)
            row = [v]
            for j in range(1, k + 1):
                row.append(row[j - 1] + (row[j - 1] - rows[-1][j - 1]) / (2**j - 1))
            rows.append(row)
        z, st, _ = K.iterate_1d(F.f0.code, F.f0.table, rows[-1][-1], N)
        return z if st == K.OK else complex(math.nan, math.nan)
    except (ZeroDivisionError, OverflowError):
        return complex(math.nan, math.nan)


def _grid(box, size=GRID):
    x0, y0, x1, y1 = box
    xs = x0 + (np.arange(size) + 0.5) * (x1 - x0) / size
    ys = y0 + (np.arange(size) + 0.5) * (y1 - y0) / size
    return (xs[None, :] + 1j * ys[:, None]).ravel()


def _phi(F, t, tol, method):
    return skew_phi_extended(F, t, tol, method).value


def find_t0(
    F: SkewMap,
    x0: complex,
    box=(-4.0, -4.0, 4.0, 4.0),
    tol: float = 1e-8,
    exclude: float = 0.05,
    method: str = "richardson_best",
    starts: int = 16,
    check_x0: bool = True,
) -> RootFindResult:
    """Solve phi(t) = x0 inside ``box`` (x_min, y_min, x_max, y_max).

    A 64x64 grid of cell centres (minus the disk |t| < exclude) is ranked by
    |phi(t) - x0| using a cheap estimate.  From the best ``starts`` cells a
    damped Newton iteration with central differences (step 1e-6 * scale) runs
    for at most 200 steps, with phi evaluated to tol/10.  The first iterate
    with residual below tol is returned.
    """
    x0 = complex(x0)
    if check_x0:
        cert = check_special_skew(F, x0)
        if not cert:
            raise PrecondError("x0 certificate failed: " + "; ".join(cert.violations))
    xa, ya, xb, yb = box
    if not (xb > xa and yb > ya):
        raise ValueError("degenerate search box")
    pts = np.array([t for t in _grid(box) if abs(t) >= exclude])
    res = np.array([abs(coarse_phi(F, complex(t)) - x0) for t in pts])
    res = np.where(np.isfinite(res), res, np.inf)
    order = np.argsort(res, kind="stable")
    scale = max(xb - xa, yb - ya)
    inner = tol / 10

    def inside(t):
        return xa <= t.real <= xb and ya <= t.imag <= yb and abs(t) >= exclude

    best = (math.inf, None)
    for idx in order[:starts]:
        if not np.isfinite(res[idx]):
            break
        seed = complex(pts[idx])
        t = seed
        try:
            cur = skew_phi_extended(F, t, inner, method)
            r = cur.value - x0
        except DynamicsError:
            continue
        for step in range(NEWTON_STEPS + 1):
            if abs(r) < best[0]:
                best = (abs(r), t)
            if abs(r) < tol:
                return RootFindResult(t, abs(r), step, seed, cur.tail_bound)
            if step == NEWTON_STEPS:
                break
            try:
                h = FD_STEP * max(abs(t), 1e-3 * scale)
                d = (_phi(F, t + h, inner, method) - _phi(F, t - h, inner, method)) / (2 * h)
                if d == 0:
                    break
                delta = r / d
                lam = 1.0
                while lam > 1e-6:
                    cand = t - lam * delta
                    if inside(cand):
                        nxt = skew_phi_extended(F, cand, inner, method)
                        if abs(nxt.value - x0) < abs(r):
                            break
                    lam *= 0.5
                else:
                    break
                t, cur, r = cand, nxt, nxt.value - x0
            except DynamicsError:
                break
    raise NoRootFound(f"no root of phi(t) = {x0} found in {box}", best[1], best[0])


def recheck_root(F: SkewMap, x0: complex, root: RootFindResult, tol: float) -> float:
    """Re-evaluate |phi(t0) - x0| on a different Richardson ladder, aiming at tol/100.

    Stores the residual and the extrapolation error estimate on ``root``.
    """
    N = entry_index(root.t0, F.constants.R)
    s = K.mobius(root.t0, N)
    inner = limit_richardson(lambda n: _skew_n(F, s, n), tol / 100, n0=384, best_effort=True)
    value, deriv, status, index = K.iterate_1d_d(F.f0.code, F.f0.table, inner.value, N)
    _raise_status(status, index, "root recheck")
    root.recheck_residual = abs(value - complex(x0))
    root.recheck_error = inner.tail_bound * abs(deriv)
    return root.recheck_residual


def _skew_n(F, s, n):
    v, st, idx = K.skew_phi_n(F.code, F.table, s, n)
    _raise_status(st, idx, "skew phi_n")
    return v


# -- disks ----------------------------------------------------------------------


def disk_radius(n: int) -> float:
    return n ** -0.75


def make_disk(t0: complex, x0: complex, n: int) -> FatouDisk:
    if n < 1:
        raise ValueError("n must be >= 1")
    return FatouDisk(n, complex(x0), disk_radius(n), mobius_n(complex(t0), n))


def disk_samples(disk: FatouDisk, m_samples: int, radii=RADII) -> np.ndarray:
    ang = np.exp(2j * np.pi * np.arange(m_samples) / m_samples)
    ring = np.concatenate([disk.center_z + r * disk.radius * ang for r in radii])
    return np.concatenate([[disk.center_z], ring])


def _iterated_base(t: complex, start: int, steps: int) -> complex:
    b = K.mobius(t, start)
    for _ in range(steps):
        b = K.mobius(b, 1)
    return b


def verify_nesting(F: SkewMap, t0: complex, x0: complex, n: int, m_samples: int = 64) -> NestingEntry:
    """Push D_n forward n+1 steps and compare with the radius of D_{2n+1}.

    The centre and m_samples points on each of the circles of relative
    radius 0.5, 0.9, 0.999 are followed.  The image base coordinate is
    m_{2n+1}(t0); it is compared with n+1 steps of t -> t/(1+t) applied to
    m_n(t0).
    """
    if m_samples < 16:
        raise ValueError("m_samples must be >= 16")
    t0 = complex(t0)
    disk = make_disk(t0, x0, n)
    target = disk_radius(2 * n + 1)
    base_img = mobius_n(t0, 2 * n + 1)
    walked = _iterated_base(t0, n, n + 1)
    base_ok = abs(walked - base_img) <= BASE_RTOL * abs(base_img)
    worst = 0.0
    centre = math.nan
    for i, z in enumerate(disk_samples(disk, m_samples)):
        v, status, index = K.skew_iterate(F.code, F.table, t0, n, complex(z), n + 1)
        if status != K.OK:
            what = "pole" if status == K.POLE else "overflow"
            return NestingEntry(n, math.inf, target, -math.inf, centre if i else math.inf, base_ok, f"{what} at step {index}")
        d = abs(v - disk.center_z)
        if i == 0:
            centre = d
        worst = max(worst, d)
    return NestingEntry(n, worst, target, target - worst, centre, base_ok)


def nesting_sweep(F: SkewMap, t0: complex, x0: complex, n_min: int, n_max: int, m_samples: int = 64) -> NestingReport:
    report = NestingReport(samples_per_disk=1 + len(RADII) * m_samples)
    if n_min > n_max:
        report.error = "empty n range"
        return report
    report.entries = [verify_nesting(F, t0, x0, n, m_samples) for n in range(n_min, n_max + 1)]
    positive = [e.margin > 0 for e in report.entries]
    N0 = None
    for i in range(len(positive) - 1, -1, -1):
        if not positive[i]:
            break
        N0 = report.entries[i].n
    report.threshold_N0 = N0
    first_pos = next((i for i, p in enumerate(positive) if p), None)
    report.persistent = first_pos is None or all(positive[first_pos:])
    tail = [e for e in report.entries if N0 is not None and e.n >= N0]
    ratios = [e.margin / e.target_radius for e in tail]
    report.ratio_nondecreasing = bool(tail) and all(b >= a for a, b in zip(ratios, ratios[1:]))
    span = tail if tail else report.entries
    finite = [e.n * e.center_distance for e in span if math.isfinite(e.center_distance)]
    report.center_bound = max(finite) if finite else math.inf
    return report


@dataclass
class ChainLink:
    n: int
    iterates: int
    base_abs: float
    center: complex
    distance: float
    radius: float

    def as_dict(self):
        return {
            "n": self.n,
            "iterates": self.iterates,
            "base_abs": self.base_abs,
            "center": [self.center.real, self.center.imag],
            "distance": self.distance,
            "radius": self.radius,
        }


def disk_orbit_limit(F: SkewMap, t0: complex, x0: complex, n_start: int, chain_length: int) -> list:
    """Follow the centre of D_{n_start} along n -> 2n+1 -> 4n+3 -> ...

    Link k sits on fiber n_k = 2^k (n_start + 1) - 1 after
    l_k = (n_start + 1)(2^k - 1) iterates.
    """
    t0, x0 = complex(t0), complex(x0)
    n = n_start
    z = x0
    total = 0
    links = [ChainLink(n, 0, abs(mobius_n(t0, n)), z, 0.0, disk_radius(n))]
    for _ in range(chain_length):
        z, status, index = K.skew_iterate(F.code, F.table, t0, n, z, n + 1)
        _raise_status(status, total + index, "disk chain")
        total += n + 1
        n = 2 * n + 1
        links.append(ChainLink(n, total, abs(mobius_n(t0, n)), z, abs(z - x0), disk_radius(n)))
    return links


def chain_checks(links: list) -> dict:
    bases = [l.base_abs for l in links]
    dists = [l.distance for l in links]
    return {
        "base_strictly_decreasing": all(b < a for a, b in zip(bases, bases[1:])),
        "distance_within_radius": all(l.distance < l.radius for l in links[1:]),
        "distance_nonincreasing": all(b <= a for a, b in zip(dists[1:], dists[2:])),
    }


@dataclass
class DistortionFit:
    exponent: float
    constant: float
    ns: list = field(default_factory=list)
    values: list = field(default_factory=list)


def distortion_fit(F: SkewMap, t: complex, w: complex, n_range=(1, 100)) -> DistortionFit:
    """Growth of |pi_2 F^n(t, w)| against n^2 |w| for a small fiber offset w from 0."""
    t, w = complex(t), complex(w)
    lo, hi = n_range
    if t not in v_eps(F):
        raise DomainError(f"{t} is not in V_eps")
    if abs(w) * hi**3 >= 1:
        raise PrecondError(f"|w| = {abs(w):g} is not below 1/n^3 for n = {hi}")
    ns = list(range(max(lo, 1), hi + 1))
    if w == 0:
        return DistortionFit(0.0, 0.0, ns, [0.0] * len(ns))
    vals = []
    for n in ns:
        v, status, index = K.skew_iterate(F.code, F.table, t, 0, w, n)
        _raise_status(status, index, "distortion orbit")
        vals.append(abs(v))
    x = np.log(ns)
    y = np.log(np.array(vals) / abs(w))
    slope = float(np.polyfit(x, y, 1)[0]) if len(ns) > 1 else 0.0
    const = max(v / (n * n * abs(w)) for n, v in zip(ns, vals))
    return DistortionFit(slope, float(const), ns, vals)
