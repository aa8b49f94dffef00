"""Command line interface.

Exit codes: 0 certified (or plain success), 2 uncertified, 3 stage failure,
1 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path


from . import __version__
from .approx import ApproximationFailure, approximate_to_tolerance, fit_polynomial, lipschitz_bound, sup_error
from .avoidance import (
    ShiftSearchFailure,
    shift_search_deterministic,
    shift_search_randomized,
    verify_avoidance,
)
from .dimension import DimensionError, estimate_box_dimension, loglog_svg, scale_ladder
from .generators import (
    COMPACT_SETS,
    ENUMERATIONS,
    compact_from_spec,
    enumeration_from_spec,
    parse_spec,
    target_from_spec,
)
from .geometry import SampledCompactSet
from .io import dump_points, dumps, read_points, read_poly
from .pipeline import DEMOS, RunConfig, run_demo, run_from_specs

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_UNCERTIFIED = 2
EXIT_FAILURE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


GLOBAL_DEFAULTS = {
    "eps": 1e-2,
    "n_forbidden": None,
    "max_degree": 12,
    "method": "det",
    "seed": 0,
    "out": None,
    "format": "json",
}


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    p.add_argument("--eps", type=float, default=S, help="approximation tolerance (shift budget for `avoid`)")
    p.add_argument("--n-forbidden", type=int, default=S, help="truncation N of the forbidden enumeration")
    p.add_argument("--max-degree", type=int, default=S, help="degree escalation limit")
    p.add_argument("--method", choices=["det", "rand"], default=S, help="shift search method")
    p.add_argument("--seed", type=int, default=S, help="seed for the randomized search")
    p.add_argument("--out", default=S, help="write the machine-readable result here instead of stdout")
    p.add_argument("--format", choices=["json", "csv"], default=S, help="point-set output format")
    return p


def _opt(args, name):
    return getattr(args, name, GLOBAL_DEFAULTS[name])


def _emit(args, text: str) -> None:
    out = _opt(args, "out")
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _say(msg: str = "") -> None:
    print(msg, file=sys.stderr)


def _load_set(args) -> SampledCompactSet:
    if getattr(args, "points", None):
        return read_points(args.points, getattr(args, "resolution_h", None))
    if getattr(args, "compact", None):
        return compact_from_spec(args.compact)
    raise UsageError("give a point-set file (--points) or a generator (--compact)")


def _load_enum(args):
    if not args.enum:
        raise UsageError("--enum is required")
    return enumeration_from_spec(args.enum, _opt(args, "n_forbidden"))


def _ledger_table(cert, limit: int = 12) -> str:
    lines = [f"{'j':>4} {'a_j':>26} {'delta_j':>11} {'eps_j':>11} {'realized':>11} {'margin':>11}"]
    r = cert.image_cover_radius
    for row in cert.ledger[:limit]:
        a = ", ".join(f"{v:.4g}" for v in row.a)
        lines.append(f"{row.j:>4} {('(' + a + ')'):>26} {row.delta:11.4e} {row.eps:11.4e} "
                     f"{row.realized:11.4e} {row.realized_margin(r):11.4e}")
    if len(cert.ledger) > limit:
        lines.append(f"  ... {len(cert.ledger) - limit} more rows")
    return "\n".join(lines)


def _cert_summary(cert) -> str:
    margins = cert.realized_margins()
    worst = f"{margins.min():.4e}" if margins.size else "n/a"
    return (f"method={cert.method} |xi|={cert.norm:.4e} budget={cert.eps_budget:.4e} "
            f"cover_radius={cert.image_cover_radius:.4e} rows={len(cert.ledger)} "
            f"min_margin={worst} certified={cert.certified()}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    name, _ = parse_spec(args.spec)
    if name in ENUMERATIONS:
        A = enumeration_from_spec(args.spec, _opt(args, "n_forbidden"))
        S = SampledCompactSet(A.points(), 0.0, A.spec_string()) if len(A) else None
        if S is None:
            raise UsageError("enumeration truncated at N=0 has no points to write")
    elif name in COMPACT_SETS:
        S = compact_from_spec(args.spec)
    else:
        raise UsageError(f"unknown generator {name!r}; compact sets: {sorted(COMPACT_SETS)}, "
                         f"enumerations: {list(ENUMERATIONS)}")
    _emit(args, dump_points(S, _opt(args, "format")))
    _say(f"{S.label}: {len(S)} points in R^{S.dim}, resolution_h={S.resolution_h:.6g}")
    return EXIT_OK


def cmd_fit(args) -> int:
    K = _load_set(args)
    f = target_from_spec(args.target)
    Y = f(K.points)
    if args.degree is not None:
        P = fit_polynomial(K.points, Y, args.degree, args.basis or "monomial")
        err = sup_error(P, K.points, Y)
    else:
        try:
            res = approximate_to_tolerance(f, K, _opt(args, "eps"), _opt(args, "max_degree"), args.basis)
        except ApproximationFailure as exc:
            _say(f"fit failed: {exc}")
            return EXIT_FAILURE
        P, err = res.poly, res.error
    d = P.to_dict()
    d["sup_error"] = err
    d["lipschitz_bound"] = lipschitz_bound(P, K.bounding_box())
    _emit(args, dumps(d))
    _say(f"basis={P.basis} degree={P.degree} sup_error={err:.6e} lipschitz_bound={d['lipschitz_bound']:.6g}")
    return EXIT_OK


def cmd_dim(args) -> int:
    S = _load_set(args)
    scales = None
    if args.kmin is not None and args.kmax is not None:
        scales = scale_ladder(args.kmin, args.kmax, args.base)
    try:
        est = estimate_box_dimension(S, scales, base=args.base)
    except DimensionError as exc:
        _say(f"dim failed: {exc}")
        return EXIT_FAILURE
    table = [f"{'scale':>14} {'count':>10}"]
    table += [f"{s:14.6e} {c:10d}" for s, c in zip(est.scales, est.counts)]
    table.append(f"slope={est.slope:.6f} r2={est.r2:.6f} (empirical box-counting estimate)")
    print("\n".join(table), file=sys.stderr)
    if args.svg:
        loglog_svg(est, args.svg)
    _emit(args, dumps(est.to_dict()))
    return EXIT_OK


def cmd_avoid(args) -> int:
    S = _load_set(args)
    A = _load_enum(args)
    budget = _opt(args, "eps")
    try:
        if _opt(args, "method") == "rand":
            cert = shift_search_randomized(S, A, budget, args.trials, _opt(args, "seed"))
        else:
            cert = shift_search_deterministic(S, A, budget)
    except ShiftSearchFailure as exc:
        _say(f"shift search failed: {exc}")
        return EXIT_FAILURE
    _emit(args, dumps(cert.to_dict()))
    _say(_cert_summary(cert))
    _say(_ledger_table(cert))
    return EXIT_OK if cert.certified() else EXIT_UNCERTIFIED


def cmd_verify(args) -> int:
    P = read_poly(args.poly)
    K = _load_set(args)
    A = _load_enum(args)
    L = args.lipschitz if args.lipschitz is not None else lipschitz_bound(P, K.bounding_box())
    report = verify_avoidance(P, K, A, L)
    d = report.to_dict()
    d["lipschitz"] = L
    _emit(args, dumps(d))
    _say(f"status={report.status} cover_radius={report.image_cover_radius:.4e} min_margin={report.min_margin:.4e}")
    return {"certified": EXIT_OK, "uncertified-positive": EXIT_UNCERTIFIED}.get(report.status, EXIT_FAILURE)


def _config(args, eps: float) -> RunConfig:
    return RunConfig(
        eps=eps,
        method=_opt(args, "method"),
        max_degree=_opt(args, "max_degree"),
        basis=getattr(args, "basis", None),
        split=getattr(args, "split", 0.5),
        reclaim=not getattr(args, "no_reclaim", False),
        trials=getattr(args, "trials", 64),
        seed=_opt(args, "seed"),
    )


def _finish_run(args, record) -> int:
    _emit(args, record.to_json())
    _say(f"verdict={record.verdict}")
    if record.q is not None:
        _say(f"q: basis={record.q.basis} degree={record.q.degree} fit_error={record.achieved_fit_error:.6e} "
             f"lipschitz_bound={record.lipschitz:.6g} cover_radius={record.image_cover_radius:.4e}")
    if record.certificate is not None:
        _say(_cert_summary(record.certificate))
        _say(f"final_sup_error={record.final_sup_error:.6e}")
    if record.error:
        _say(f"error: {record.error}")
    if record.verdict == "certified":
        return EXIT_OK
    if record.verdict == "uncertified":
        return EXIT_UNCERTIFIED
    return EXIT_FAILURE


def cmd_run(args) -> int:
    eps = _opt(args, "eps")
    record = run_from_specs(args.compact, args.target, args.enum, eps, _opt(args, "n_forbidden"), _config(args, eps))
    return _finish_run(args, record)


def cmd_demo(args) -> int:
    eps = DEMOS[args.name]["eps"]
    record = run_demo(args.name, _config(args, eps))
    return _finish_run(args, record)


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = _Parser(prog="avoidpoly", parents=[common],
                     description="Polynomial approximation whose values avoid a countable set.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_, description=help_)

    def set_inputs(p):
        p.add_argument("--points", help="point-set file (.csv or .json)")
        p.add_argument("--compact", help="compact-set generator, e.g. cantor:depth=8")
        p.add_argument("--resolution-h", type=float, help="override the covering radius of --points")

    p = add("gen", "write a generated point set or the first N points of an enumeration")
    p.add_argument("spec", help="e.g. cantor:depth=8, cantor-dust:depth=5, gaussian-rationals:N=50")
    p.set_defaults(func=cmd_gen)

    p = add("fit", "least-squares polynomial fit of a target on a point set")
    set_inputs(p)
    p.add_argument("--target", required=True, help="e.g. exp:d=2, sin-sum-product:d=2")
    p.add_argument("--degree", type=int, help="fixed degree (default: escalate until the sup error is below --eps)")
    p.add_argument("--basis", choices=["complex-monomial", "monomial", "chebyshev"])
    p.set_defaults(func=cmd_fit)

    p = add("dim", "box-counting dimension estimate")
    set_inputs(p)
    p.add_argument("--base", type=int, choices=[2, 3], default=2)
    p.add_argument("--kmin", type=int)
    p.add_argument("--kmax", type=int)
    p.add_argument("--svg", help="also write a log-log plot")
    p.set_defaults(func=cmd_dim)

    p = add("avoid", "shift a point set away from forbidden points (budget = --eps)")
    set_inputs(p)
    p.add_argument("--enum", help="forbidden enumeration, e.g. gaussian-rationals:N=200")
    p.add_argument("--trials", type=int, default=64)
    p.set_defaults(func=cmd_avoid)

    p = add("verify", "check a polynomial map's image against forbidden points")
    set_inputs(p)
    p.add_argument("--poly", required=True, help="PolynomialMap JSON (or a run record)")
    p.add_argument("--enum")
    p.add_argument("--lipschitz", type=float, help="Lipschitz bound to use (default: computed)")
    p.set_defaults(func=cmd_verify)

    p = add("run", "full pipeline: fit, shift, verify")
    p.add_argument("--compact", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--enum", required=True)
    p.add_argument("--basis", choices=["complex-monomial", "monomial", "chebyshev"])
    p.add_argument("--split", type=float, default=0.5, help="share of eps given to the fit")
    p.add_argument("--no-reclaim", action="store_true",
                   help="shift budget (1 - split) eps instead of eps minus the achieved fit error")
    p.add_argument("--trials", type=int, default=64)
    p.set_defaults(func=cmd_run)

    p = add("demo", "run a named scenario")
    p.add_argument("name", choices=sorted(DEMOS))
    p.add_argument("--trials", type=int, default=64)
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, FileNotFoundError) as exc:
        _say(f"avoidpoly {args.command}: error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
