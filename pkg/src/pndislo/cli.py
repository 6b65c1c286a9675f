"""Command-line front end.

Subcommands: validate, region, symbol, kernel, solve, extend, verify.
Exit codes: 0 success, 1 validation/property failure, 2 numerical
non-convergence, 3 bad input.  Machine-readable JSON summaries go to
standard output; CSV files use shortest round-trip (.17g) formatting with a
header row.  A flat ``key = value`` config file can preload any flag of the
chosen subcommand; explicit flags override it, unknown keys are rejected.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NO_CONVERGENCE = 2
EXIT_BAD_INPUT = 3


def _fmt(x) -> str:
    return f"{float(x):.17g}"


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting (for exit-code control)."""

    def error(self, message):
        raise _ArgumentError(message)


def _add_material(p, need_delta=True):
    p.add_argument("--c11", type=float)
    p.add_argument("--c13", type=float)
    p.add_argument("--c33", type=float)
    p.add_argument("--c44", type=float)
    p.add_argument("--c66", type=float)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--nu", type=float, default=None)
    if need_delta:
        p.add_argument("--delta", type=float, default=None)


def _material_constants(args):
    from .moduli import ElasticConstants, perp_from_parameters, \
        perp_to_constants
    cs = [args.c11, args.c13, args.c33, args.c44, args.c66]
    if all(c is not None for c in cs):
        return ElasticConstants(*cs)
    if any(c is not None for c in cs):
        raise _ArgumentError("give all five constants or none")
    if args.nu is None:
        raise _ArgumentError("material missing: five constants or "
                             "--mu/--nu/--delta")
    mu = 1.0 if args.mu is None else args.mu
    delta = getattr(args, "delta", None)
    delta = 1.0 if delta is None else delta
    return perp_to_constants(perp_from_parameters(mu, args.nu, delta))


def _parse_range(spec: str):
    try:
        a, b, n = spec.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError as e:
        raise _ArgumentError(f"range must be 'start:stop:count', got "
                             f"{spec!r}") from e
    if n < 2:
        raise _ArgumentError("range count must be >= 2")
    return np.linspace(a, b, n)


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _emit(obj):
    print(json.dumps(obj, sort_keys=True))


# ---------------------------------------------------------------- subcommands

def _cmd_validate(args):
    from .moduli import check_special_condition, validate
    ec = _material_constants(args)
    rep = validate(ec)
    root, equal = check_special_condition(ec)
    _emit({"elliptic": rep.valid,
           "c66_window": rep.c66_window,
           "c13_bound": rep.c13_bound,
           "c44_positive": rep.c44_positive,
           "special_root": root, "special_equal": equal,
           "special": root and equal})
    return EXIT_OK if rep.valid else EXIT_INVALID


def _cmd_region(args):
    from . import regions
    if args.case in ("I", "II"):
        a1 = _parse_range(args.nu_range)
        a2 = _parse_range(args.delta_range)
    elif args.case == "III":
        a1 = _parse_range(args.mu_range or "0.5:2:20")
        a2 = _parse_range(args.nu_range)
    else:
        raise _ArgumentError(f"unknown case {args.case!r}")
    sc = regions.scan(args.case, a1, a2, n_theta=args.n_theta)
    if args.out:
        sc.to_csv(args.out)
    _emit({"case": args.case,
           "cells": int(sc.member.size),
           "members": int(np.count_nonzero(sc.member)),
           "boundary": int(np.count_nonzero(sc.boundary)),
           "out": args.out})
    return EXIT_OK


def _cmd_symbol(args):
    from .moduli import derive_parallel, derive_perp
    from . import symbols
    ec = _material_constants(args)
    if args.k1 == 0.0 and args.k2 == 0.0:
        raise _ArgumentError("k must be nonzero")
    out = {"case": args.case, "k1": args.k1, "k2": args.k2}
    if args.case in ("I", "II"):
        dp = derive_perp(ec)
        mat = symbols.dtn_perp(dp, args.k1, args.k2)
        fn = symbols.symbol_case1 if args.case == "I" else symbols.symbol_case2
        out["m"] = float(fn(dp, args.k1, args.k2))
        out["dtn"] = {"a11": mat.a11, "a12": mat.a12,
                      "a21": mat.a21, "a22": mat.a22, "det": mat.det}
    else:
        dpar = derive_parallel(ec)
        mat = symbols.dtn_parallel(dpar, args.k1, args.k2)
        out["m"] = float(symbols.symbol_case3(dpar, args.k1, args.k2))
        out["dtn"] = {"a11": mat.a11, "a12": mat.a12,
                      "a21": mat.a21, "a22": mat.a22, "det": mat.det}
    _emit(out)
    return EXIT_OK


def _cmd_kernel(args):
    from .moduli import derive_parallel, derive_perp
    from . import kernels
    ec = _material_constants(args)
    if args.case in ("I", "II"):
        params = derive_perp(ec)
    else:
        params = derive_parallel(ec)
    kf = kernels.build_kernel(args.case, params)
    th, kv = kernels.circle_profile(kf, n_theta=args.n_theta)
    tmin, kmin = kernels.circle_min(kf, params)
    if args.out:
        _write_csv(args.out, ["theta", "K"], zip(th, kv))
    _emit({"case": args.case, "min": kmin, "argmin_theta": tmin,
           "positive": bool(kmin > 0.0), "out": args.out})
    return EXIT_OK


def _cmd_solve(args):
    from .moduli import derive_parallel, derive_perp
    from . import solver
    ec = _material_constants(args)
    params = derive_perp(ec) if args.case in ("I", "II") \
        else derive_parallel(ec)
    pot = None
    if args.potential == "quartic":
        pot = solver.Potential.quartic(args.scale)
    elif args.potential != "cosine":
        raise _ArgumentError(f"unknown potential {args.potential!r}")
    try:
        sol = solver.solve_profile(args.case, params, potential=pot,
                                   theta=args.theta, X=args.X, N=args.N,
                                   method=args.method)
    except solver.SolverError as e:
        _emit({"error": str(e), "history": e.history[-5:]})
        return EXIT_NO_CONVERGENCE
    eigs = solver.check_stability(sol, n_eig=args.n_eig)
    if args.out:
        _write_csv(args.out, ["x", "psi"], zip(sol.x, sol.psi))
    _emit({"case": args.case, "theta": sol.theta, "m_e": sol.m_e,
           "residual": sol.residual, "lambda_min": sol.lambda_min,
           "eigenvalues": [float(v) for v in eigs],
           "in_region": sol.in_region, "X": sol.X, "N": sol.N,
           "out": args.out})
    return EXIT_OK


def _cmd_extend(args):
    from . import extension
    from .nonlocal_ops import GridField2D
    ec = _material_constants(args)
    L, n = args.L, args.n
    m1, m2 = args.m1, args.m2
    if m1 == 0 and m2 == 0:
        raise _ArgumentError("mode indices (m1, m2) must not both be 0")
    amp = args.amplitude

    def f_a(x, y):
        return amp * np.cos(2.0 * np.pi * (m1 * x + m2 * y) / L)

    ua = GridField2D.from_function(L, L, n, n, f_a)
    ub = GridField2D.from_function(L, L, n, n, lambda x, y: 0.0 * x * y)
    h = args.x2_max / args.n2
    xn = np.concatenate([-h * np.arange(1, args.n2 + 1)[::-1],
                         h * np.arange(0, args.n2 + 1)])
    fld = extension.extend(args.orientation, ec, ua, ub, xn)
    res = extension.interior_residual(fld)
    deep = fld.x_normal > 0.5 * args.x2_max
    amps = np.max(np.abs(fld.u[:, deep]), axis=(0, 2, 3))
    rate = -np.polyfit(fld.x_normal[deep], np.log(amps), 1)[0]
    if args.out:
        i0, j0 = 0, 0
        rows = [(x, fld.u[0, i, i0, j0], fld.u[1, i, i0, j0],
                 fld.u[2, i, i0, j0]) for i, x in enumerate(fld.x_normal)]
        _write_csv(args.out + ".csv", ["xn", "u1", "u2", "u3"], rows)
        fld.tofile(args.out + ".bin", args.out + ".json")
    _emit({"orientation": args.orientation, "interior_residual": res,
           "decay_rate": float(rate), "normal_samples": len(xn),
           "out": args.out})
    return EXIT_OK if res <= 1e-4 else EXIT_NO_CONVERGENCE


def _cmd_verify(args):
    from .moduli import derive_parallel, derive_perp, from_isotropic, \
        perp_from_parameters
    from . import kernels, regions, symbols
    from .nonlocal_ops import GridField2D, apply_kernel_quadrature, \
        apply_multiplier
    from . import extension

    rng = np.random.default_rng(args.seed)
    checks = {}

    dp = derive_perp(from_isotropic(1.0, 0.25))
    dpar = derive_parallel(from_isotropic(1.0, 0.25))

    # kernel PDE residuals on a few circle points
    th = np.linspace(0.05, np.pi / 2 - 0.05, 10)
    worst = 0.0
    for case, params in (("I_K1", dp), ("I_K2", dp), ("II", dp),
                         ("III", dpar)):
        for t in th:
            r = kernels.pde_residual(case, params, math.cos(t), math.sin(t))
            worst = max(worst, float(r))
    checks["kernel_pde_residual"] = worst
    ok = worst <= 1e-6

    # symbol consistency: case-I/II scalar symbols vs matrix entries
    ks = rng.standard_normal((2, 200))
    mat_err = 0.0
    for k1, k2 in ks.T:
        if k1 == 0 and k2 == 0:
            continue
        m = symbols.dtn_perp(dp, k1, k2)
        m1 = symbols.symbol_case1(dp, k1, k2)
        m2 = symbols.symbol_case2(dp, k1, k2)
        mat_err = max(mat_err,
                      abs(m.det / m.a22 - m1) / abs(m1),
                      abs(m.det / m.a11 - m2) / abs(m2))
    checks["symbol_vs_matrix"] = mat_err
    ok = ok and mat_err <= 1e-12

    # kernel-symbol duality at modest resolution
    f = GridField2D.from_function(30.0, 30.0, 128, 128,
                                  lambda x, y: np.exp(-(x * x + y * y) / 4))
    q = apply_kernel_quadrature(kernels.kernel_case2(dp), f)
    s = apply_multiplier(lambda a, b: symbols.symbol_case2(dp, a, b), f)
    dual = float(np.max(np.abs(q.values - s.values))
                 / np.max(np.abs(s.values)))
    checks["duality"] = dual
    ok = ok and dual <= 1e-3

    # region cross-check: closed form vs numeric minimum on random samples
    bad = 0
    for _ in range(50):
        nu = rng.uniform(-0.5, 0.49)
        delta = rng.uniform(0.1, 3.9)
        if not regions.in_ellipticity_strip(nu, delta):
            continue
        dpx = perp_from_parameters(1.0, nu, delta)
        _, kmin = kernels.circle_min(kernels.kernel_case1(dpx), dpx)
        member = regions.in_region_case1(nu, delta)
        if abs(kmin) > 1e-6 * (1 + abs(kmin)) and member != (kmin > 0):
            bad += 1
    checks["region_mismatches"] = bad
    ok = ok and bad == 0

    # extension identities at a random frequency
    ec = from_isotropic(1.0, 0.25)
    k1, k2 = float(rng.uniform(0.2, 2)), float(rng.uniform(0.2, 2))
    sys_ = extension.build_halfspace("perp", ec, k1, k2)
    e1 = float(np.max(np.abs(sys_.bplus(0.0) - np.eye(3))))
    e2 = float(np.max(np.abs(sys_.bminus(-1.3)
                             - np.conj(sys_.bplus(1.3)))))
    checks["extension_identity"] = max(e1, e2)
    ok = ok and max(e1, e2) <= 1e-12

    checks["ok"] = bool(ok)
    _emit(checks)
    return EXIT_OK if ok else EXIT_INVALID


# -------------------------------------------------------------------- driver

def _global_parser():
    g = _Parser(add_help=False)
    g.add_argument("--config", default=None,
                   help="flat key = value file preloading subcommand flags")
    g.add_argument("--threads", type=int, default=None,
                   help="cap BLAS/OpenMP thread pools")
    g.add_argument("--seed", type=int, default=12345,
                   help="seed for randomized property checks")
    return g


def _build_parser():
    p = _Parser(prog="pndislo", parents=[_global_parser()])
    sub = p.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("validate")
    _add_material(sp)
    sp.set_defaults(fn=_cmd_validate)

    sp = sub.add_parser("region")
    sp.add_argument("--case", required=True)
    sp.add_argument("--nu-range", dest="nu_range")
    sp.add_argument("--delta-range", dest="delta_range")
    sp.add_argument("--mu-range", dest="mu_range")
    sp.add_argument("--n-theta", dest="n_theta", type=int, default=512)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=_cmd_region)

    sp = sub.add_parser("symbol")
    sp.add_argument("--case", required=True)
    _add_material(sp)
    sp.add_argument("--k1", type=float, required=True)
    sp.add_argument("--k2", type=float, required=True)
    sp.set_defaults(fn=_cmd_symbol)

    sp = sub.add_parser("kernel")
    sp.add_argument("--case", required=True)
    _add_material(sp)
    sp.add_argument("--n-theta", dest="n_theta", type=int, default=512)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=_cmd_kernel)

    sp = sub.add_parser("solve")
    sp.add_argument("--case", required=True)
    _add_material(sp)
    sp.add_argument("--theta", type=float, default=0.0)
    sp.add_argument("--X", type=float, default=200.0)
    sp.add_argument("--N", type=int, default=4096)
    sp.add_argument("--method", default="newton",
                    choices=["newton", "gradient-flow"])
    sp.add_argument("--potential", default="cosine")
    sp.add_argument("--scale", type=float, default=1.0)
    sp.add_argument("--n-eig", dest="n_eig", type=int, default=6)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=_cmd_solve)

    sp = sub.add_parser("extend")
    sp.add_argument("--orientation", required=True,
                    choices=["perp", "parallel"])
    _add_material(sp)
    sp.add_argument("--L", type=float, default=2.0 * math.pi)
    sp.add_argument("--n", type=int, default=16)
    sp.add_argument("--m1", type=int, default=0)
    sp.add_argument("--m2", type=int, default=1)
    sp.add_argument("--amplitude", type=float, default=1.0)
    sp.add_argument("--x2-max", dest="x2_max", type=float, default=4.0)
    sp.add_argument("--n2", type=int, default=40)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=_cmd_extend)

    sp = sub.add_parser("verify")
    sp.set_defaults(fn=_cmd_verify)
    return p


def _load_config(path):
    pairs = []
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise _ArgumentError(f"{path}:{ln}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            pairs.append((key.replace("_", "-"), val))
    return pairs


def _cap_threads(n: int):
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ[var] = str(n)
    try:
        import threadpoolctl
        threadpoolctl.threadpool_limits(n)
    except ImportError:
        pass


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        # config values preload the subcommand: splice them right after the
        # subcommand token so explicit flags (parsed later) take precedence
        pre, _ = _global_parser().parse_known_args(argv)
        if pre.config:
            sub_names = {"validate", "region", "symbol", "kernel", "solve",
                         "extend", "verify"}
            idx = next((i for i, a in enumerate(argv) if a in sub_names),
                       None)
            if idx is None:
                raise _ArgumentError("config given without a subcommand")
            spliced = []
            for key, val in _load_config(pre.config):
                spliced.extend([f"--{key}", val])
            argv = argv[:idx + 1] + spliced + argv[idx + 1:]
        args = parser.parse_args(argv)
        if args.threads is not None:
            if args.threads < 1:
                raise _ArgumentError("--threads must be >= 1")
            _cap_threads(args.threads)
        return args.fn(args)
    except _ArgumentError as e:
        print(json.dumps({"error": str(e)}), file=sys.stderr)
        return EXIT_BAD_INPUT
    except (ValueError, OSError) as e:
        print(json.dumps({"error": str(e)}), file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
