"""Command-line interface.

Exit codes: 0 when every check passed, 1 when a violation was found, 2 for
usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict
from typing import Sequence

import numpy as np

from . import constants as C
from . import frechet as F
from . import geometry as G
from . import inequalities as I
from . import lemmas as LM
from . import transforms as T
from .errors import QuadIneqError
from .reporting import RunManifest, deterministic_timestamp, emit_report

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2
VERIFY_COLUMNS = (*G.COLUMNS, "lhs", "rhs", "margin", "holds")


class _Parser(argparse.ArgumentParser):
    """Argument errors raise instead of exiting so dispatch controls the code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: {message}")


class _UsageError(Exception):
    pass


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("transform")
    g.add_argument("--transform", choices=("power", "huber", "pseudo_huber", "log_cosh", "linear"))
    g.add_argument("--alpha", type=float, default=2.0)
    g.add_argument("--delta", type=float, default=1.0)
    g.add_argument("--transform-spec", help="JSON transform description, inline or a file path")
    o = p.add_argument_group("output")
    o.add_argument("--seed", type=int, default=42)
    o.add_argument("--tolerance", type=float, default=None)
    o.add_argument("--format", choices=("csv", "json"), default=None)
    o.add_argument("--output", default="-")
    o.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    o.add_argument("--stamp", default=None, help="timestamp recorded in the manifest")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="quadineq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", parents=[common], help="check an inequality on a batch of configurations")
    v.add_argument("--check", choices=("quadtran", "symmetric", "quad2", "power_sharp", "roundness"),
                   default="quadtran")
    v.add_argument("--corpus", choices=("euclidean", "parallelogram"), default="euclidean")
    v.add_argument("--input", help="CSV of yq,yp,zq,zp,qp,yz rows (overrides --corpus)")
    v.add_argument("--n", type=int, default=10_000)
    v.add_argument("--dim", type=int, default=3)
    v.add_argument("--L", type=float, default=2.0)

    c = sub.add_parser("constants", parents=[common], help="grid search and local refinement of a constant")
    c.add_argument("--kind", choices=("L", "K", "J"), default="L")
    c.add_argument("--normalization", choices=("dtran", "power"), default="dtran")
    c.add_argument("--resolution", type=int, default=17)
    c.add_argument("--scale", type=float, default=4.0)
    c.add_argument("--no-refine", action="store_true")
    c.add_argument("--iterations", type=int, default=200)

    w = sub.add_parser("witnesses", parents=[common], help="witness configurations and lower bounds")
    w.add_argument("--u", type=float, default=1.0)
    w.add_argument("--v", type=float, default=1.0)
    w.add_argument("--eps", type=float, default=1e-4)

    lm = sub.add_parser("lemmas", parents=[common], help="sampled checks of the auxiliary lemmas")
    lm.add_argument("--all", action="store_true", help="every registered lemma (default)")
    lm.add_argument("--lemma", action="append", default=[], choices=LM.LEMMA_IDS)
    lm.add_argument("--n", type=int, default=10_000)
    lm.add_argument("--scale", type=float, default=1.0)

    m = sub.add_parser("mollify", parents=[common], help="mollified transform on a grid")
    m.add_argument("--n", type=int, default=4, help="mollifier index")
    m.add_argument("--quadrature-order", type=int, default=64)
    m.add_argument("--points", type=int, default=41)
    m.add_argument("--lo", type=float, default=1e-2)
    m.add_argument("--hi", type=float, default=1e2)

    f = sub.add_parser("frechet", parents=[common], help="tau-Frechet mean of points in a CSV")
    f.add_argument("--input", required=True, help="CSV with one point per row")
    f.add_argument("--max-iter", type=int, default=10_000)

    r = sub.add_parser("rate", parents=[common], help="convergence-rate experiment for tau-Frechet means")
    r.add_argument("--dist", choices=F.DISTRIBUTIONS, default="gaussian")
    r.add_argument("--n-list", default="100,400,1600")
    r.add_argument("--reps", type=int, default=16)
    r.add_argument("--dim", type=int, default=2)
    return parser


def resolve_transform(args) -> T.Transform:
    if args.transform_spec:
        text = args.transform_spec
        if os.path.exists(text):
            with open(text) as fh:
                text = fh.read()
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise _UsageError(f"--transform-spec is not valid JSON: {exc}") from exc
        return T.from_spec(spec)
    kind = args.transform or "power"
    if kind == "power":
        return T.power(args.alpha)
    if kind in ("huber", "pseudo_huber"):
        return getattr(T, kind)(args.delta)
    return getattr(T, kind)()


def _manifest(args, argv, transform, tolerances=None) -> RunManifest:
    return RunManifest(
        command=args.command,
        argv=tuple(argv),
        transform=transform,
        seed=args.seed,
        tolerances=tolerances or {},
        output=args.output,
        timestamp=deterministic_timestamp(args.stamp),
    )


def _cmd_verify(args, argv) -> int:
    t = None if args.check in ("quad2", "power_sharp", "roundness") else resolve_transform(args)
    if args.input:
        D = G.read_config_csv(args.input)
    elif args.corpus == "euclidean":
        D = G.euclidean_configs(G.random_euclidean_points(args.n, args.dim, args.seed))
    else:
        D = G.euclidean_configs(G.random_parallelograms(args.n, args.seed))
    if args.check == "quadtran":
        res = I.check_quadtran(t, D, args.L)
    elif args.check == "symmetric":
        res = I.check_symmetric(t, D)
    elif args.check == "quad2":
        res = I.check_quad2(D)
    elif args.check == "power_sharp":
        res = I.check_power_sharp(args.alpha, D)
    else:
        res = I.check_roundness(D, args.alpha)
    if args.tolerance is not None:
        holds = res.margin >= -args.tolerance
    else:
        holds = res.holds
    rows = [
        dict(zip(G.COLUMNS, map(float, D[i])), lhs=float(res.lhs[i]), rhs=float(res.rhs[i]),
             margin=float(res.margin[i]), holds=bool(holds[i]))
        for i in range(D.shape[0])
    ]
    tspec = t.to_spec() if t is not None else {"kind": "power", "alpha": args.alpha}
    tol = {"margin": args.tolerance} if args.tolerance is not None else {"rel": I.REL_TOL, "abs": I.ABS_TOL}
    man = _manifest(args, argv, tspec, {**tol, "L": args.L})
    fmt = args.format or "csv"
    if fmt == "json":
        summary = {
            "check": args.check,
            "configurations": len(rows),
            "violations": int(np.sum(~np.asarray(holds))),
            "worst_margin": float(np.min(res.margin)),
            "rows": rows,
        }
        emit_report(summary, fmt, args.output, man)
    else:
        emit_report(rows, fmt, args.output, man, VERIFY_COLUMNS)
    return EXIT_OK if bool(np.all(holds)) else EXIT_VIOLATION


def _known_bound(spec: C.RatioSpec) -> float | None:
    """The proven value of the constant, when one is known."""
    if spec.kind != "L":
        return None
    t = spec.transform
    if spec.normalization == "power":
        a = spec.alpha
        return a * 2.0 ** (2.0 - a) if 1 <= a <= 2 else None
    return 2.0 if T.CLASS_S <= t.claims else None


def _cmd_constants(args, argv) -> int:
    t = resolve_transform(args)
    spec = C.RatioSpec(args.kind, args.normalization, t)
    rep = C.grid_search(spec, args.resolution, args.scale, args.seed, max(1, args.threads))
    if not args.no_refine:
        rep = C.refine_local(spec, rep, args.iterations)
    bound = _known_bound(spec)
    rel = args.tolerance if args.tolerance is not None else 1e-9
    out = rep.to_json()
    out["known_bound"] = bound
    ok = bound is None or rep.best_ratio <= bound * (1 + rel)
    out["within_bound"] = ok
    emit_report(out, args.format or "json", args.output, _manifest(args, argv, t.to_spec(), {"rel": rel}))
    return EXIT_OK if ok else EXIT_VIOLATION


def _cmd_witnesses(args, argv) -> int:
    t = resolve_transform(args)
    lb = C.lower_bound_witnesses(t, args.u, args.v, args.eps)
    out = {"lower_bounds": lb.to_json()}
    try:
        ub = C.unit_lower_bound(t, args.u)
        out["unit_bound"] = {"bound": ub.bound, "eps": list(ub.eps), "quotients": list(ub.quotients)}
    except QuadIneqError as exc:
        out["unit_bound"] = {"error": str(exc)}
    if "zero_at_zero" in t.claims:
        K, J = C.divergence_probe(t, args.eps)
        out["divergence_probe"] = {"eps": args.eps, "K": K, "J": J}
    emit_report(out, args.format or "json", args.output, _manifest(args, argv, t.to_spec()))
    return EXIT_OK


def _cmd_lemmas(args, argv) -> int:
    transforms = [resolve_transform(args)] if (args.transform or args.transform_spec) else LM.suite_transforms()
    ids = args.lemma or LM.LEMMA_IDS
    rows = []
    for lid in ids:
        for t in transforms:
            if not LM.applicable(lid, t):
                continue
            r = LM.sample_lemma(lid, t, args.n, args.seed, args.scale)
            rows.append({
                "lemma_id": r.lemma_id,
                "transform": r.transform,
                "n": r.n,
                "worst_residual": r.worst_residual,
                "worst_raw_residual": r.worst_raw_residual,
                "passed": r.worst_residual <= (args.tolerance or LM.RESIDUAL_TOL),
                "nonfinite": r.nonfinite,
                "worst_inputs": r.worst_inputs,
            })
    if not rows:
        raise _UsageError("no lemma is applicable to the selected transform")
    man = _manifest(args, argv, [t.to_spec() for t in transforms],
                    {"residual": args.tolerance or LM.RESIDUAL_TOL})
    emit_report(rows, args.format or "csv", args.output, man)
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_VIOLATION


def _cmd_mollify(args, argv) -> int:
    base = resolve_transform(args)
    m = T.mollify(base, args.n, args.quadrature_order)
    mem = T.check_membership(m)
    x = np.geomspace(args.lo, args.hi, args.points)
    vals = {
        "x": x,
        "base": base.eval(x),
        "mollified": m.eval(x),
        "d1": m.deriv(x, 1),
        "d2": m.deriv(x, 2),
        "d3": m.deriv(x, 3),
    }
    man = _manifest(args, argv, m.to_spec())
    fmt = args.format or "json"
    if fmt == "csv":
        rows = [{k: float(v[i]) for k, v in vals.items()} for i in range(len(x))]
        emit_report(rows, fmt, args.output, man)
    else:
        out = {
            "membership": {**asdict(mem), "ok": mem.ok},
            "sup_distance": float(np.max(np.abs(vals["mollified"] - vals["base"]))),
            "grid": {k: v for k, v in vals.items()},
        }
        emit_report(out, fmt, args.output, man)
    return EXIT_OK if mem.ok else EXIT_VIOLATION


def _read_points(path: str) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise _UsageError(f"{path}:{lineno}: not a numeric row") from None
    if not rows:
        raise _UsageError(f"{path}: no points")
    if len({len(r) for r in rows}) != 1:
        raise _UsageError(f"{path}: rows have different dimensions")
    return np.array(rows)


def _cmd_frechet(args, argv) -> int:
    t = resolve_transform(args)
    prob = F.FrechetProblem(_read_points(args.input), t, F.SolverOptions(max_iter=args.max_iter))
    sol = F.solve_mean(prob)
    emit_report(sol.to_json(), args.format or "json", args.output, _manifest(args, argv, t.to_spec()))
    return EXIT_OK if sol.converged else EXIT_VIOLATION


def _cmd_rate(args, argv) -> int:
    t = resolve_transform(args)
    try:
        n_list = [int(s) for s in args.n_list.split(",") if s.strip()]
    except ValueError as exc:
        raise _UsageError(f"--n-list: {exc}") from exc
    res = F.rate_experiment(t, args.dist, n_list, args.reps, args.seed, args.dim, max(1, args.threads))
    man = _manifest(args, argv, t.to_spec(), {"slope": res.slope})
    rows = [asdict(r) for r in res.rows]
    if (args.format or "csv") == "csv":
        emit_report(rows, "csv", args.output, man, ("n", "mean_error", "sd"))
    else:
        emit_report({"slope": res.slope, "rows": rows, "failures": res.failures, "runs": res.runs},
                    "json", args.output, man)
    return EXIT_OK


COMMANDS = {
    "verify": _cmd_verify,
    "constants": _cmd_constants,
    "witnesses": _cmd_witnesses,
    "lemmas": _cmd_lemmas,
    "mollify": _cmd_mollify,
    "frechet": _cmd_frechet,
    "rate": _cmd_rate,
}


def dispatch(argv: Sequence[str]) -> int:
    argv = list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args, argv)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (QuadIneqError, OSError, ValueError) as exc:
        print(f"quadineq: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
