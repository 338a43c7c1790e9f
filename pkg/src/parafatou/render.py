"""Escape-time pictures of the attracting petals and of the parametrized curve."""

from __future__ import annotations

import math

import numpy as np

from . import _kernels as K
from .errors import DynamicsError
from .maps import PolynomialMap1D, estimate_chart_constants
from .param import phi_limit

ENTER = 1e-3
ESCAPE = 1e3
CAP = 10_000

ESCAPED = np.array([12, 12, 20], dtype=np.uint8)
CAPPED = np.array([70, 70, 70], dtype=np.uint8)
CURVE = np.array([255, 255, 255], dtype=np.uint8)


def pixel_centres(viewport, width: int, height: int) -> np.ndarray:
    """Row-major pixel centres; row 0 is the top edge (largest imaginary part)."""
    x0, y0, x1, y1 = viewport
    if width < 1 or height < 1:
        raise ValueError("resolution must be at least 1x1")
    if not (x1 > x0 and y1 > y0):
        raise ValueError("degenerate viewport")
    xs = x0 + (np.arange(width) + 0.5) * (x1 - x0) / width
    ys = y1 - (np.arange(height) + 0.5) * (y1 - y0) / height
    return xs[None, :] + 1j * ys[:, None]


def petal_counts(f: PolynomialMap1D, viewport, width: int, height: int) -> np.ndarray:
    """Iterations until |f^k(z)| < 1e-3; -1 if the orbit passes |z| > 1e3, CAP if neither."""
    zs = pixel_centres(viewport, width, height)
    counts = K.petal_counts(f.code, f.table, zs.ravel(), ENTER, ESCAPE, CAP)
    return counts.reshape(height, width)


def colorize(counts: np.ndarray) -> np.ndarray:
    """Map attraction counts to RGB with a logarithmic blue-to-yellow ramp."""
    h, w = counts.shape
    img = np.empty((h, w, 3), dtype=np.uint8)
    s = np.log1p(np.clip(counts, 0, CAP)) / math.log1p(CAP)
    img[..., 0] = np.round(255 * s).astype(np.uint8)
    img[..., 1] = np.round(200 * np.sqrt(s)).astype(np.uint8)
    img[..., 2] = np.round(255 * (1 - s)).astype(np.uint8)
    img[counts < 0] = ESCAPED
    img[counts >= CAP] = CAPPED
    return img


def param_curve(f: PolynomialMap1D, rays: int = 7, points: int = 120, tol: float = 1e-6) -> np.ndarray:
    """phi along rays t = s e^{ia} through V_eps, |a| < pi/2, 0 < s < 2 eps cos a."""
    eps = estimate_chart_constants(f).eps
    out = []
    for a in np.linspace(-0.4 * math.pi, 0.4 * math.pi, rays):
        smax = 2 * eps * math.cos(a)
        for s in np.linspace(0, smax, points + 2)[1:-1]:
            t = complex(s * math.cos(a), s * math.sin(a))
            try:
                out.append(phi_limit(f, t, tol).value)
            except DynamicsError:
                continue
    return np.array(out, dtype=np.complex128)


def overlay(img: np.ndarray, pts: np.ndarray, viewport) -> np.ndarray:
    h, w, _ = img.shape
    x0, y0, x1, y1 = viewport
    img = img.copy()
    for z in pts:
        i = int(math.floor((z.real - x0) / (x1 - x0) * w))
        j = int(math.floor((y1 - z.imag) / (y1 - y0) * h))
        if 0 <= i < w and 0 <= j < h:
            img[j, i] = CURVE
    return img


def render(f: PolynomialMap1D, mode: str, viewport, width: int, height: int) -> np.ndarray:
    img = colorize(petal_counts(f, viewport, width, height))
    if mode == "petal":
        return img
    if mode == "param":
        return overlay(img, param_curve(f), viewport)
    raise ValueError(f"unknown render mode {mode!r}")
