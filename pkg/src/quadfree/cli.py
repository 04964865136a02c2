"""Command-line driver: ``poly``, ``scan``, ``weyl`` and ``simulate``.

Exit codes: 0 ok, 1 a checked property failed, 2 invalid input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import EmptyMajorMass, PreconditionFailed, QuadfreeError
from .expsums import TRIPLE_BUDGET, make_context, major_arc_approx, minor_arc_bound, sixth_moment, sixth_moment_bound, weyl_spectrum
from .fourier import ArcDecomposition
from .iteration import (
    IterationParams,
    SpectralInstance,
    blow_up,
    dumps,
    outer_iteration,
    seed_frequency_set,
)
from .polycore import AuxiliaryFamily, QuadraticPoly, content, factor_over_rationals, has_root_mod, is_intersective
from .rng import SplitMix64
from .setlab import IntegerSet, Vacuous, bound_evaluator, extremal_difference_free, greedy_difference_free, greedy_in_order

SCHEMAS = {
    "poly": "quadfree.poly/1",
    "scan": "quadfree.scan/1",
    "weyl": "quadfree.weylscan/1",
    "simulate": "quadfree.simulate/1",
}


class InvalidInput(Exception):
    pass


class PropertyViolation(Exception):
    pass


def parse_poly(text: str) -> QuadraticPoly:
    try:
        return QuadraticPoly.parse(text)
    except (ValueError, TypeError) as exc:
        raise InvalidInput(f"bad polynomial {text!r}: {exc}") from exc


def parse_range(text: str) -> list[int]:
    """``"a:b"`` (inclusive), ``"a:b:step"`` or a comma list."""
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                lo, hi, step = parts[0], parts[1], 1
            elif len(parts) == 3:
                lo, hi, step = parts
            else:
                raise ValueError(text)
            return list(range(lo, hi + 1, step))
        return [int(p) for p in text.split(",")]
    except ValueError as exc:
        raise InvalidInput(f"bad range {text!r}") from exc


def parse_set(spec: str, N: int, seed: int) -> IntegerSet:
    """Build a subset of ``[1, N]`` from a spec string.

    ``progression:u,step,len``; ``random:density[,seed]``; ``greedy:a2,a1,a0``
    (optionally ``;seed`` to visit ``[1, N]`` in shuffled order);
    ``scaled:k,<spec>`` for ``k`` times a set built in ``[1, N // k]``;
    anything else is a file of integers.
    """
    kind, _, rest = spec.partition(":")
    try:
        if kind == "progression":
            u, step, length = (int(p) for p in rest.split(","))
            return IntegerSet(N, tuple(u + m * step for m in range(length)))
        if kind == "random":
            parts = rest.split(",")
            density = float(parts[0])
            rng = SplitMix64(int(parts[1]) if len(parts) > 1 else seed)
            return IntegerSet(N, tuple(x for x in range(1, N + 1) if rng.random() < density))
        if kind == "greedy":
            poly_text, _, shuffle_seed = rest.partition(";")
            f = parse_poly(poly_text)
            if f.a2 < 0:
                f = f.negate()
            if shuffle_seed:
                order = list(range(1, N + 1))
                SplitMix64(int(shuffle_seed)).shuffle(order)
                return greedy_in_order(f, N, order)
            return greedy_difference_free(f, N)
        if kind == "scaled":
            k_text, _, inner = rest.partition(",")
            k = int(k_text)
            if k < 1:
                raise ValueError("scale must be positive")
            base = parse_set(inner, N // k, seed)
            return IntegerSet(N, tuple(k * x for x in base))
        path = Path(spec)
        if not path.exists():
            raise InvalidInput(f"unknown set spec {spec!r}")
        values = path.read_text().replace(",", " ").split()
        return IntegerSet(N, tuple(int(v) for v in values))
    except InvalidInput:
        raise
    except (ValueError, QuadfreeError) as exc:
        raise InvalidInput(f"bad set spec {spec!r}: {exc}") from exc


def _fmt(x) -> str:
    if isinstance(x, Vacuous):
        return "vacuous"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(schema: str, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: {schema}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _json(schema: str, body: dict) -> str:
    return dumps({"schema": schema, **body})


def params_from(args) -> IterationParams:
    try:
        kw = {"epsilon": args.epsilon, "Q": args.q_threshold, "c1": args.c1}
        if args.c0 is not None:
            kw["c0"] = Fraction(args.c0)
        return IterationParams(**kw)
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc


# ---------------------------------------------------------------- commands


def cmd_poly(args) -> int:
    f = parse_poly(args.poly)
    form = factor_over_rationals(f)
    res = is_intersective(f)
    report = {
        "poly": list(f.coefficients),
        "text": str(f),
        "form": type(form).__name__,
        "factorization": form.display(),
        "intersective": bool(res),
        "witness": res.witness,
        "witness_search_exhausted": res.exhausted,
    }
    rows = []
    ok = True
    if res:
        fam = AuxiliaryFamily(f)
        bound = fam.content_bound()
        report["content_bound"] = bound
        for d in range(1, args.d_max + 1):
            g = fam.poly(d)
            c = content(g)
            rooted = all(has_root_mod(g, q) for q in range(1, args.root_q + 1))
            ok &= c <= bound and rooted
            rows.append([d, fam.root(d), g.a2, g.a1, g.a0, c, c <= bound, rooted])
        report["table"] = [
            {"d": r[0], "r_d": r[1], "f_d": r[2:5], "content": r[5], "content_ok": r[6], "roots_ok": r[7]} for r in rows
        ]
    if args.format == "csv":
        text = _csv(SCHEMAS["poly"], ["d", "r_d", "a2", "a1", "a0", "content", "content_ok", "roots_ok"], rows)
    else:
        text = _json(SCHEMAS["poly"], report)
    _emit(text, args.out)
    return 0 if ok else 1


def cmd_scan(args) -> int:
    f = parse_poly(args.poly)
    if f.a2 < 0:
        f = f.negate()
    Ns = parse_range(args.n_range) if args.n_range else [args.n]
    rows, ok = [], True
    for N in Ns:
        if N < 1:
            raise InvalidInput("N must be positive")
        greedy = len(greedy_difference_free(f, N))
        if N <= args.exact_cap:
            ex = extremal_difference_free(f, N, budget=args.budget, exact_cap=args.exact_cap)
            exact_size, flag = ex.size, ex.exact
            ok &= greedy <= ex.size
        else:
            exact_size, flag = greedy, False
        rows.append(
            [N, f.text(), greedy, exact_size, flag, exact_size / N, bound_evaluator("ThmA", N), bound_evaluator("Thm1.1", N, epsilon=args.epsilon)]
        )
    header = ["N", "f", "greedy_size", "exact_size", "exact_flag", "density", "thmA_bound", "thm1.1_bound"]
    if args.format == "json":
        text = _json(SCHEMAS["scan"], {"rows": [dict(zip(header, [_fmt(x) for x in r])) for r in rows]})
    else:
        text = _csv(SCHEMAS["scan"], header, rows)
    _emit(text, args.out)
    return 0 if ok else 1


def cmd_weyl(args) -> int:
    h = parse_poly(args.poly)
    Ls = parse_range(args.n_range) if args.n_range else [args.n]
    rows, ok = [], True
    for L in Ls:
        try:
            ctx = make_context(h, L)
        except (ValueError, QuadfreeError) as exc:
            raise InvalidInput(str(exc)) from exc
        S = weyl_spectrum(ctx)
        s0 = ctx.s0_exact()
        moment = sixth_moment(ctx, S)
        bound = float(sixth_moment_bound(ctx)) if ctx.M**3 <= TRIPLE_BUDGET else None
        moment_ok = bound is None or moment <= bound * (1 + 1e-9)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            err_q1 = abs(S[0] - major_arc_approx(ctx, 1, 1, 0.0))
        K = max(1, ctx.M ** 0.1)
        arcs = ArcDecomposition(L, Fraction(K).limit_denominator(1000), max(1, math.floor(K)))
        minor = np.nonzero(arcs.minor_mask)[0]
        ratio = float(np.max(np.abs(S[minor])) / minor_arc_bound(ctx, 1)) if minor.size else 0.0
        ok &= s0 >= Fraction(1, 4) and moment_ok
        rows.append([L, ctx.j, ctx.M, float(s0), s0 >= Fraction(1, 4), moment, "" if bound is None else bound, moment_ok, err_q1, ratio])
    header = ["L", "j", "M", "S0", "S0_ge_quarter", "sixth_moment", "sixth_bound", "moment_ok", "main_term_error_q1", "max_minor_ratio"]
    if args.format == "json":
        text = _json(SCHEMAS["weyl"], {"poly": list(h.coefficients), "rows": [dict(zip(header, [_fmt(x) for x in r])) for r in rows]})
    else:
        text = _csv(SCHEMAS["weyl"], header, rows)
    _emit(text, args.out)
    return 0 if ok else 1


def cmd_simulate(args) -> int:
    f = parse_poly(args.poly)
    if args.n is None:
        raise InvalidInput("simulate needs --n")
    A = parse_set(args.set, args.n, args.seed)
    params = params_from(args)
    body = {
        "config": {"poly": list(f.coefficients), "N": args.n, "set": args.set, "seed": args.seed, "rounds": args.rounds},
        "version": __version__,
    }
    if args.inner_only:
        inst = SpectralInstance(A, f if f.a2 > 0 else f.negate())
        body["outer"] = None
    else:
        try:
            trace = outer_iteration(A, f, params)
        except PreconditionFailed as exc:
            body["error"] = str(exc)
            _emit(_json(SCHEMAS["simulate"], body), args.out)
            return 1
        body["outer"] = trace.to_json()
        inst = None
        if trace.terminal_kind == "Case2Data":
            case2 = trace.terminal
            inst = SpectralInstance(case2.B, case2.h)
    reports = []
    ok = True
    if inst is not None:
        P = seed_frequency_set()
        for _ in range(args.rounds):
            try:
                rep = blow_up(P, inst, params)
            except (EmptyMajorMass, QuadfreeError) as exc:
                reports.append({"stopped": type(exc).__name__, "detail": str(exc)})
                break
            reports.append(rep.to_json())
            ok &= rep.membership and rep.disjoint and rep.cr.holds
            P = rep.P_new
            if not P.P:
                break
    body["blowups"] = reports
    _emit(_json(SCHEMAS["simulate"], body), args.out)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadfree", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--poly", default="1,0,0", help="coefficients a2,a1,a0")
    common.add_argument("--n", type=int, default=None)
    common.add_argument("--n-range", default=None, help="lo:hi[:step] or a comma list")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--epsilon", type=float, default=0.05)
    common.add_argument("--q-threshold", type=float, default=4.0)
    common.add_argument("--c0", default=None, help="inner arc constant, e.g. 1/20")
    common.add_argument("--c1", type=float, default=1e-5)
    common.add_argument("--exact-cap", type=int, default=64)
    common.add_argument("--format", choices=["csv", "json"], default=None)
    common.add_argument("--out", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("poly", parents=[common], help="factorization, intersectivity and auxiliary polynomials")
    p.add_argument("--d-max", type=int, default=12)
    p.add_argument("--root-q", type=int, default=60)
    p.set_defaults(func=cmd_poly, default_format="json")

    p = sub.add_parser("scan", parents=[common], help="greedy and exact difference-free sizes over N")
    p.add_argument("--budget", type=int, default=2_000_000)
    p.set_defaults(func=cmd_scan, default_format="csv")

    p = sub.add_parser("weyl", parents=[common], help="Weyl sum diagnostics over L")
    p.set_defaults(func=cmd_weyl, default_format="csv")

    p = sub.add_parser("simulate", parents=[common], help="outer iteration then blow-up rounds")
    p.add_argument("--set", required=True, help="set spec")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--inner-only", action="store_true", help="treat the set as the inner-step input directly")
    p.set_defaults(func=cmd_simulate, default_format="json")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    if args.n is None and args.command in ("scan", "weyl") and not args.n_range:
        parser.error("--n or --n-range is required")
    try:
        return args.func(args)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PropertyViolation as exc:
        print(f"property violated: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
