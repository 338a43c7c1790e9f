"""Map-file parsing and deterministic report writers (JSON, CSV, PPM)."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

from .maps import MOBIUS_SPECIAL, POLYNOMIAL, BivariateFamily, PolynomialMap1D


class InputError(ValueError):
    """A map file or a command-line value could not be understood."""


def _real(x) -> float:
    if isinstance(x, bool):
        raise InputError(f"not a number: {x!r}")
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str):
        try:
            return float(Fraction(x.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not a decimal number: {x!r}") from exc
    raise InputError(f"not a number: {x!r}")


def parse_coeff(x) -> complex:
    """A coefficient is a number, a decimal string, or a [re, im] pair of those."""
    if isinstance(x, list):
        if len(x) != 2:
            raise InputError(f"coefficient pair must have two entries: {x!r}")
        return complex(_real(x[0]), _real(x[1]))
    return complex(_real(x), 0.0)


def parse_map(doc):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise InputError('map file needs an object with a "kind" field')
    kind = doc["kind"]
    coeffs = doc.get("coeffs", [])
    if not isinstance(coeffs, list):
        raise InputError('"coeffs" must be a list')
    if kind == MOBIUS_SPECIAL:
        return PolynomialMap1D.mobius_special()
    if kind == POLYNOMIAL:
        if not coeffs:
            raise InputError("a polynomial needs at least one coefficient")
        return PolynomialMap1D(tuple(parse_coeff(c) for c in coeffs))
    if kind == "family":
        if not coeffs or not all(isinstance(r, list) and r for r in coeffs):
            raise InputError("a family needs a non-empty matrix of coefficients")
        return BivariateFamily(tuple(tuple(parse_coeff(c) for c in row) for row in coeffs))
    raise InputError(f"unknown kind {kind!r}")


def load_map(path):
    """Return (map or family, sha256 of the file bytes)."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc
    return parse_map(doc), hashlib.sha256(raw).hexdigest()


def parse_complex(text: str) -> complex:
    """Accept '0.1', '0.1+0.2j', '0.1,0.2' or '[0.1, 0.2]'."""
    s = text.strip().strip("[]()")
    try:
        if "," in s:
            re_, im = s.split(",")
            return complex(_real(re_), _real(im))
        return complex(s.replace(" ", ""))
    except (ValueError, InputError) as exc:
        raise InputError(f"cannot parse complex number {text!r}") from exc


def parse_box(text: str):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise InputError(f"cannot parse box {text!r}") from exc
    if len(vals) != 4 or not (vals[2] > vals[0] and vals[3] > vals[1]):
        raise InputError(f"box must be x0,y0,x1,y1 with x1 > x0 and y1 > y0: {text!r}")
    return tuple(vals)


def jsonable(obj):
    """Complex numbers become [re, im]; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(float(obj.real)), jsonable(float(obj.imag))]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _atomic_write(path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    text = json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False)
    _atomic_write(path, (text + "\n").encode("utf-8"))


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    _atomic_write(path, buf.getvalue().encode("utf-8"))


def write_ppm(path, rgb: np.ndarray):
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    h, w, _ = rgb.shape
    _atomic_write(path, f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes())


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise InputError("not a binary PPM")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)
