"""Command-line entry point: ``hypocone <subcommand> --model FILE ...``.

Exit codes: 0 success, 1 usage error, 2 model/operator error,
3 solver non-convergence.  Tables go out as CSV, structured results as JSON.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from ._exact import format_scalar, is_exact, parse_scalar
from .cc_metric import NonConvergedError, SolverOptions, cc_distance, cone_convergence_check, horizontal_flow
from .estimates import REPORT_HEADER, TorusModel, growth_report
from .frame_model import SurjectivityError
from .grassmann import Subspace
from .model_io import ModelError, builtin_names, load_model, load_operator
from .symbols import Character, Schrodinger, UnclassifiedStratum, check_max_hypoelliptic, injectivity_margin, symbol
from .tangent_cones import ApproachPath, ConeSampling, cone_g0, covector_path_to, hn_residual, hn_sample_def1

EXIT_OK, EXIT_USAGE, EXIT_MODEL, EXIT_NONCONVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _num(v) -> str:
    """Deterministic text for a number."""
    if is_exact(v):
        return format_scalar(v)
    if isinstance(v, complex):
        return f"{_num(v.real)}{'+' if v.imag >= 0 else '-'}{_num(abs(v.imag))}i"
    v = float(v)
    if v == 0:
        return "0"
    return f"{v:.12g}"


def _point(text: str) -> tuple:
    try:
        return tuple(parse_scalar(p) for p in text.split(","))
    except ValueError as exc:
        raise UsageError(f"bad point {text!r}: {exc}") from exc


def _points(text: str) -> list[tuple]:
    return [_point(p) for p in text.split(";") if p.strip()]


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad integer list {text!r}") from exc


def _csv(rows: list[dict], header: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(r[h]) for h in header])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float, complex)) or is_exact(v):
        return _num(v)
    if isinstance(v, (list, tuple)):
        return " ".join(_cell(x) for x in v)
    return str(v)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _subspace_text(S: Subspace) -> str:
    if S.dim == 0:
        return "0"
    return ";".join(",".join(_num(v) for v in row) for row in S.rows())


def _options(args) -> SolverOptions:
    return SolverOptions(steps=args.steps, restarts=args.restarts, seed=args.seed,
                         endpoint_tol=args.tol if args.tol is not None else 1e-6)


# -- subcommands ------------------------------------------------------------------


def cmd_basis(args, F, doc) -> str:
    B = F.basis
    consts = []
    for (i, j), terms in sorted(B.table.items()):
        if i < j:
            for k, c in terms:
                consts.append({"i": i + 1, "j": j + 1, "k": k + 1, "c": format_scalar(c)})
    return _json({
        "n": B.n, "step": B.N, "dimension": B.dim,
        "graded_dimensions": list(B.graded_dimensions()),
        "words": [{"index": k + 1, "word": str(w), "degree": w.degree} for k, w in enumerate(B.words)],
        "structure_constants": consts,
    })


def cmd_brackets(args, F, doc) -> str:
    names = [f"x{i + 1}" for i in range(F.m)]
    rows = []
    for k, (w, a) in enumerate(zip(F.basis.words, F.anchors)):
        rows.append({"index": k + 1, "word": str(w), "degree": w.degree,
                     **{f"d/d{n}": c.pretty(names) for n, c in zip(names, a.components)}})
    return _csv(rows, ["index", "word", "degree"] + [f"d/d{n}" for n in names])


def _sampling(args) -> ConeSampling:
    kw = {"seed": args.seed}
    if args.tol is not None:
        kw["tol"] = args.tol
    return ConeSampling(**kw)


def cmd_cones(args, F, doc) -> str:
    x = _need_point(args)
    cone = cone_g0(F, x, _sampling(args))
    rows = []
    for k, mb in enumerate(cone.members):
        rows.append({"member": k + 1, "basis": _subspace_text(mb.subspace), "dimension": mb.subspace.dim,
                     "stratum": mb.stratum, "subalgebra": mb.subalgebra,
                     "adjoint_residual": mb.adjoint_residual, "approaches": ";".join(mb.approaches)})
    for rep in cone.divergent:
        rows.append({"member": "-", "basis": "-", "dimension": "-", "stratum": "divergent",
                     "subalgebra": "-", "adjoint_residual": "-", "approaches": f"{rep.label}: {rep.reason}"})
    return _csv(rows, ["member", "basis", "dimension", "stratum", "subalgebra", "adjoint_residual", "approaches"])


def cmd_hn(args, F, doc) -> str:
    x = _need_point(args)
    if not args.functional:
        raise UsageError("hn needs --functional")
    xi = _point(args.functional)
    if len(xi) != F.basis.dim:
        raise UsageError(f"functional has {len(xi)} entries, algebra has dimension {F.basis.dim}")
    tol = args.tol if args.tol is not None else 1e-6
    cone = cone_g0(F, x, _sampling(args))
    res = hn_residual(F, x, xi, cone=cone)
    attained = None
    for mb in cone.members:
        if mb.subspace.annihilation_residual([float(v) for v in xi]) > tol:
            continue
        label = mb.approaches[0]
        try:
            path = _path_from_label(F, x, label)
        except (ValueError, KeyError):
            continue
        lim = hn_sample_def1(F, covector_path_to(F, xi, path))
        if isinstance(lim, tuple):
            gap = float(np.linalg.norm(np.array(lim) - np.array([float(v) for v in xi])))
            if gap <= 10 * tol * max(1.0, float(np.linalg.norm([float(v) for v in xi]))):
                attained = {"approach": label, "limit": [_num(v) for v in lim], "gap": gap}
                break
    return _json({
        "point": [_num(v) for v in x],
        "functional": [_num(v) for v in xi],
        "member_def2": res <= tol,
        "def2_residual": res,
        "def1_attained": attained,
        "tol": tol,
    })


def _path_from_label(F, x, label: str) -> ApproachPath:
    if label == "fixed":
        return ApproachPath.fixed(x)
    kind, rest = label.split("(", 1)
    kv = dict(part.split("=") for part in rest.rstrip(")").split(","))
    axis = int(kv["axis"]) - 1
    if kind == "ray":
        return ApproachPath.ray(x, axis, float(kv["lambda"]), float(kv["power"]))
    return ApproachPath.sqrt_ray(x, axis, float(kv["sign"]))


def _rep(text: str, B):
    kind, _, params = text.partition(":")
    try:
        if kind == "character":
            mu = _point(params)
            return Character(mu)
        if kind == "schrodinger":
            vals = params.split(",") if params else ["1"]
            eps = int(vals[0])
            K = int(vals[1]) if len(vals) > 1 else 64
            scale = float(vals[2]) if len(vals) > 2 else 1.0
            return Schrodinger(eps, K, scale)
    except (ValueError, UsageError) as exc:
        raise UsageError(f"bad representation {text!r}: {exc}") from exc
    raise UsageError(f"unknown representation {text!r} (use character:a,b or schrodinger:eps[,K[,scale]])")


def cmd_symbol(args, F, doc) -> str:
    x = _need_point(args)
    if not args.op or not args.rep:
        raise UsageError("symbol needs --op and --rep")
    P = load_operator(args.op, F, doc)
    rep = _rep(args.rep, F.basis)
    S = symbol(P, x, rep, F.basis)
    if S.is_scalar:
        return _json({"representation": rep.label(), "symbol": _num(S.value),
                      "margin": injectivity_margin(S)})
    K = S.value.shape[0]
    k = max(1, K // 2)
    ev = np.linalg.eigvals(S.value[:k, :k])
    ev = sorted(ev, key=lambda z: (-round(z.real, 9), round(z.imag, 9)))
    rows = [{"index": i, "eigenvalue": complex(round(z.real, 12), round(z.imag, 12))} for i, z in enumerate(ev)]
    out = f"# representation {rep.label()}, interior block {k} of {K}, margin {_num(injectivity_margin(S))}\n"
    return out + _csv(rows, ["index", "eigenvalue"])


def _grid(args, doc) -> list[tuple]:
    if not args.grid:
        raise UsageError(f"{args.command} needs --grid (a grid name in the model or points 'x,y;x,y')")
    named = doc.get("grids", {})
    if args.grid in named:
        return [tuple(parse_scalar(v) for v in p) for p in named[args.grid]]
    return _points(args.grid)


def cmd_hypo_check(args, F, doc) -> str:
    if not args.op:
        raise UsageError("hypo-check needs --op")
    P = load_operator(args.op, F, doc)
    tol = args.tol if args.tol is not None else 1e-6
    rep = check_max_hypoelliptic(F, P, _grid(args, doc), tol=tol, sampling=_sampling(args))
    rows = [{"point": ",".join(_num(v) for v in p.point), "margin": p.margin, "worst_representation": p.worst,
             "cone_members": p.strata, "hypoelliptic": p.hypoelliptic} for p in rep.points]
    out = _csv(rows, ["point", "margin", "worst_representation", "cone_members", "hypoelliptic"])
    bad = rep.failing()
    if bad:
        where = "; ".join("(" + ",".join(_num(v) for v in p.point) + ")" for p in bad)
        verdict = f"verdict: NOT maximal hypoelliptic at {where}"
    else:
        verdict = "verdict: maximal hypoelliptic at every grid point"
    return out + f"# {verdict}\n"


def cmd_cc_dist(args, F, doc) -> str:
    if not args.from_ or not args.to:
        raise UsageError("cc-dist needs --from and --to")
    x, y = _point(args.from_), _point(args.to)
    est = cc_distance(F, x, y, _options(args))
    _, traj = horizontal_flow(F, x, est.path, substeps=1)
    header = (f"# upper-bound estimate d_CC = {_num(est.value)}, endpoint residual {_num(est.residual)}, "
              f"converged restarts {est.diagnostics.get('converged_restarts', 0)}/{est.restarts}\n")
    rows = []
    for s in range(est.path.steps + 1):
        u = est.path.controls[min(s, est.path.steps - 1)] if s < est.path.steps else [math.nan] * F.n
        rows.append({"s": s / est.path.steps, **{f"x{i + 1}": traj[s][i] for i in range(F.m)},
                     **{f"u{i + 1}": (u[i] if s < est.path.steps else "") for i in range(F.n)}})
    return header + _csv(rows, ["s"] + [f"x{i + 1}" for i in range(F.m)] + [f"u{i + 1}" for i in range(F.n)])


def cmd_cone_check(args, F, doc) -> str:
    points = [_need_point(args)] if args.point or not args.grid else _grid(args, doc)
    if args.directions:
        dirs = [[float(v) for v in p] for p in _points(args.directions)]
    else:
        dirs = [[1.0 if i == k else 0.0 for i in range(F.basis.dim)] for k in range(F.basis.dim)]
    ts = _floats(args.t) if args.t else [0.2, 0.1, 0.05]
    out = ["# distances are upper-bound estimates\n"]
    header = ["point", "H", "direction", "v", "t", "rescaled_distance", "model_distance", "residual",
              "endpoint_residual", "status", "decreasing"]
    rows = []
    for x in points:
        cone = cone_g0(F, x, _sampling(args))
        gen = [mb for mb in cone.members if mb.stratum == "generic"]
        H = (gen or cone.members)[0].subspace
        for r in cone_convergence_check(F, x, H, dirs, ts, _options(args)):
            rows.append({"point": ",".join(_num(v) for v in x), "H": _subspace_text(H), **r})
    return "".join(out) + _csv(rows, header)


def cmd_estimate(args, F, doc) -> str:
    if not args.op or not args.test:
        raise UsageError("estimate needs --op (the operator D) and --test (the operator P)")
    D = load_operator(args.op, F, doc)
    P = load_operator(args.test, F, doc)
    try:
        T = TorusModel(F)
    except ValueError as exc:
        raise ModelError(str(exc)) from exc
    Ks = _ints(args.K) if args.K else [8, 16, 24, 32]
    rep = growth_report(T, P, D, Ks)
    return f"# {REPORT_HEADER}\n" + _csv(rep.rows(), ["K", "C_K", "spillover", "slope", "classification"])


def _need_point(args) -> tuple:
    if not args.point:
        raise UsageError(f"{args.command} needs --point")
    return _point(args.point)


COMMANDS = {
    "basis": cmd_basis,
    "brackets": cmd_brackets,
    "cones": cmd_cones,
    "hn": cmd_hn,
    "symbol": cmd_symbol,
    "hypo-check": cmd_hypo_check,
    "cc-dist": cmd_cc_dist,
    "cone-check": cmd_cone_check,
    "estimate": cmd_estimate,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hypocone", description="Tangent cones, symbols and CC distances of polynomial frames.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--model", required=True,
                       help="model file, or a shipped example: " + ", ".join(builtin_names()))
        s.add_argument("--out", help="write the result here instead of stdout")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--tol", type=float)
        s.add_argument("--K", help="comma-separated Fourier cutoffs")
        s.add_argument("--steps", type=int, default=64)
        s.add_argument("--restarts", type=int, default=8)
        s.add_argument("--point")
        s.add_argument("--functional")
        s.add_argument("--op")
        s.add_argument("--test")
        s.add_argument("--rep")
        s.add_argument("--grid")
        s.add_argument("--from", dest="from_")
        s.add_argument("--to")
        s.add_argument("--directions", help="Lie elements 'v1,v2,...;...'")
        s.add_argument("--t", help="comma-separated dilation parameters")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
        if args.steps < 1 or args.restarts < 1:
            raise UsageError("--steps and --restarts must be positive")
        F, doc = load_model(args.model)
        text = COMMANDS[args.command](args, F, doc)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (SurjectivityError, UnclassifiedStratum) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except NonConvergedError as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
