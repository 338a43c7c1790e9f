"""Command-line entry point.

Exit codes: 0 pass, 1 verification failure, 2 input error, 3 root search failed.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import disks, param, render, skew
from .errors import DynamicsError, InsufficientData, NoRootFound
from .maps import (
    BivariateFamily,
    estimate_chart_constants,
    eval_map,
    is_special_1d,
    is_special_family,
)
from .reports import (
    InputError,
    load_map,
    parse_box,
    parse_complex,
    write_csv,
    write_json,
    write_ppm,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NOROOT = 0, 1, 2, 3

RENDER_HELP = (
    "petal: colour each pixel by the first k with |f^k(z)| < 1e-3 "
    "(escape when |z| > 1e3, cap 1e4); param: petal picture plus phi along rays through V_eps"
)


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def _envelope(args, digest, body) -> dict:
    return {"config": _config(args), "map_sha256": digest, "result": body}


def _out(args, name) -> Path:
    return Path(args.out) / name


def _is_family(obj) -> bool:
    return isinstance(obj, BivariateFamily)


def _skewmap(obj) -> skew.SkewMap:
    fam = obj if _is_family(obj) else BivariateFamily.from_map(obj)
    return skew.SkewMap(fam)


def cmd_check(args, obj, digest) -> int:
    if _is_family(obj):
        cert = is_special_family(obj)
        body = {"special_family": cert.as_dict()}
        ok = cert.ok
        if args.x0 is not None:
            sk = skew.check_special_skew(obj, parse_complex(args.x0))
            body["special_skew"] = sk.as_dict()
            ok = ok and sk.ok
    else:
        cert = is_special_1d(obj)
        body = {"special_1d": cert.as_dict()}
        ok = cert.ok
        if args.x0 is not None:
            body["special_skew"] = {"ok": False, "violations": ["x0 applies to families only"]}
            ok = False
    body["ok"] = ok
    write_json(_out(args, "check.json"), _envelope(args, digest, body))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_param(args, obj, digest) -> int:
    t = parse_complex(args.t)
    if _is_family(obj):
        F = skew.SkewMap(obj)
        ext, f0 = skew.skew_phi_extended, F.f0
        target = F
    else:
        ext, f0, target = param.phi_extended, obj, obj
    body = {}
    try:
        res = ext(target, t, args.tol, args.method)
        body.update(res.as_dict())
        if t != 1:
            lhs = ext(target, t / (1 - t), args.tol, args.method).value
            body["feq_residual"] = abs(lhs - eval_map(f0, res.value))
        code = EXIT_OK
    except DynamicsError as exc:
        body["error"] = f"{type(exc).__name__}: {exc}"
        code = EXIT_FAIL
    write_json(_out(args, "param.json"), _envelope(args, digest, body))
    return code


def _verify_feq(args, obj, rng):
    if _is_family(obj):
        F = skew.SkewMap(obj)
        ts = skew.v_eps(F).sample(rng, args.samples)
        rep = skew.verify_skew_functional_equation(F, ts, args.tol, args.method)
    else:
        ts = param.v_eps(obj).sample(rng, args.samples)
        rep = param.verify_functional_equation(obj, ts, args.tol, args.method)
    return rep.passed, rep.as_dict(), [("t_re", "t_im", "residual")] + [
        (s["t"][0], s["t"][1], s.get("residual", math.nan)) for s in rep.samples
    ]


def _verify_lemmas(args, obj, rng):
    F = _skewmap(obj)
    n_max = args.n_max if args.n_max is not None else 200
    summary = []
    total = 0
    for u in skew.lemma_grid(F):
        bad = 0
        worst_margin = math.inf
        for n in range(n_max + 1):
            d = skew.diagnose_lemma_bounds(F, u, n)
            bad += len(d.violations)
            worst_margin = min(worst_margin, min(d.re_margins))
        total += bad
        summary.append({"u": u, "violations": bad, "min_re_margin": worst_margin})
    last = skew.diagnose_lemma_bounds(F, skew.lemma_grid(F)[0], n_max)
    rows = [("i", "re_margin", "gap", "bound")] + [
        (r["i"], r["re_margin"], r["gap"], r["bound"]) for r in last.rows()
    ]
    return total == 0, {"violations": total, "n_max": n_max, "grid": summary}, rows


def _verify_abel(args, obj, rng):
    if _is_family(obj):
        raise InputError("the abel suite needs a one-variable map")
    c = estimate_chart_constants(obj)
    n = args.n if args.n is not None else 10_000
    tol = args.tol
    rows = [("u_re", "u_im", "residual")]
    worst = 0.0
    for _ in range(args.samples):
        u = complex(rng.uniform(c.R_prime, 10 * c.R_prime), rng.uniform(-c.R_prime, c.R_prime))
        if u.real <= c.R_prime:
            continue
        r = abs(param.gamma_n(obj, param.chart_inverse(obj, u), n) - param.gamma_n(obj, u, n) - 1)
        worst = max(worst, r)
        rows.append((u.real, u.imag, r))
    return worst < tol, {"max_residual": worst, "n": n, "tol": tol}, rows


def _verify_decay(args, obj, rng):
    if _is_family(obj):
        raise InputError("the decay suite needs a one-variable map")
    z = parse_complex(args.z)
    lo = args.n_min if args.n_min is not None else 100
    hi = args.n_max if args.n_max is not None else 5000
    try:
        fit = param.fit_decay(obj, z, (lo, hi))
    except InsufficientData as exc:
        return True, {"status": "degenerate: differences ≈ 0", "detail": str(exc)}, [("n", "diff")]
    worst = max(
        max(d / model, model / d)
        for n, d in zip(fit.ns, fit.diffs)
        for model in [fit.constant * abs(z) ** 2 / (1 + n * abs(z)) ** 2]
    )
    ok = 1.8 <= fit.exponent <= 2.2 and worst <= 10
    body = fit.as_dict()
    body.update({"status": "fitted", "max_model_ratio": worst})
    return ok, body, [("n", "diff")] + list(zip(fit.ns, fit.diffs))


SUITES = {"feq": _verify_feq, "lemmas": _verify_lemmas, "abel": _verify_abel, "decay": _verify_decay}


def cmd_verify(args, obj, digest) -> int:
    rng = np.random.default_rng(args.seed)
    ok, body, rows = SUITES[args.suite](args, obj, rng)
    body["passed"] = ok
    write_json(_out(args, f"verify_{args.suite}.json"), _envelope(args, digest, body))
    write_csv(_out(args, f"verify_{args.suite}.csv"), rows[0], rows[1:])
    return EXIT_OK if ok else EXIT_FAIL


def cmd_disks(args, obj, digest) -> int:
    if not _is_family(obj):
        raise InputError("disks needs a family map file")
    F = skew.SkewMap(obj)
    x0 = parse_complex(args.x0)
    box = parse_box(args.box)
    n_min = args.n_min if args.n_min is not None else 4
    n_max = args.n_max if args.n_max is not None else 256
    try:
        root = disks.find_t0(F, x0, box, args.tol)
    except NoRootFound as exc:
        body = {"error": str(exc), "best": exc.best, "best_residual": exc.best_residual}
        write_json(_out(args, "disks.json"), _envelope(args, digest, body))
        return EXIT_NOROOT
    disks.recheck_root(F, x0, root, args.tol)
    report = disks.nesting_sweep(F, root.t0, x0, n_min, n_max, args.samples)
    body = {"root": root.as_dict(), "nesting": report.as_dict()}
    write_json(_out(args, "disks.json"), _envelope(args, digest, body))
    write_csv(
        _out(args, "disks.csv"),
        ("n", "max_image_distance", "target_radius", "margin"),
        report.csv_rows(),
    )
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_render(args, obj, digest) -> int:
    f = skew.SkewMap(obj).f0 if _is_family(obj) else obj
    vp = parse_box(args.viewport)
    w, h = _parse_res(args.res)
    img = render.render(f, args.mode, vp, w, h)
    write_ppm(_out(args, f"render_{args.mode}.ppm"), img)
    write_json(_out(args, f"render_{args.mode}.json"), _envelope(args, digest, {"width": w, "height": h}))
    return EXIT_OK


def _parse_res(text: str):
    try:
        parts = [int(v) for v in text.lower().split("x")]
    except ValueError as exc:
        raise InputError(f"cannot parse resolution {text!r}") from exc
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2 or min(parts) < 1:
        raise InputError(f"resolution must be WxH with W, H >= 1: {text!r}")
    return parts[0], parts[1]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="parafatou", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tol):
        sp.add_argument("--map", required=True, help="JSON map or family file")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--tol", type=float, default=tol)
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("check", help="specialness certificates")
    common(sp, 1e-12)
    sp.add_argument("--x0", help="marked point for the skew certificate")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("param", help="evaluate phi(t) with a tail bound")
    common(sp, 1e-8)
    sp.add_argument("--t", required=True)
    sp.add_argument("--method", choices=("plain", "richardson"), default="plain")
    sp.set_defaults(func=cmd_param)

    sp = sub.add_parser("verify", help="run a verification suite")
    common(sp, 1e-5)
    sp.add_argument("--suite", choices=sorted(SUITES), required=True)
    sp.add_argument("--samples", type=int, default=100)
    sp.add_argument("--method", choices=("plain", "richardson"), default="plain")
    sp.add_argument("--n", type=int, help="sequence index for the abel suite")
    sp.add_argument("--n-min", type=int)
    sp.add_argument("--n-max", type=int)
    sp.add_argument("--z", default="0.05", help="point for the decay suite")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("disks", help="find t0 and sweep disk nesting")
    common(sp, 1e-8)
    sp.add_argument("--x0", required=True)
    sp.add_argument("--box", default="-4,-4,4,4", help="x0,y0,x1,y1")
    sp.add_argument("--n-min", type=int)
    sp.add_argument("--n-max", type=int)
    sp.add_argument("--samples", type=int, default=64)
    sp.set_defaults(func=cmd_disks)

    sp = sub.add_parser("render", help="write a PPM picture", description=RENDER_HELP)
    common(sp, 1e-6)
    sp.add_argument("--mode", choices=("petal", "param"), default="petal", help=RENDER_HELP)
    sp.add_argument("--viewport", default="-1,-1,1,1", help="x0,y0,x1,y1")
    sp.add_argument("--res", default="256x256", help="WxH or N")
    sp.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        obj, digest = load_map(args.map)
        return args.func(args, obj, digest)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DynamicsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
