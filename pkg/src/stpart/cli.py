"""Command-line front end: one subcommand per engine operation.

Every run prints one structured record {command, results, certificates}
(plus timing with --timing). Exit code 0 on success, 2 when a certificate is
violated, 1 on usage or resource errors.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Sequence

from flint import fmpq

from .cad import Budget, ResourceError
from .certificate import Certificate, CertificateError, check
from .formula import SAFormula
from .good_cells import (GoodCellError, cell_at, good_decomposition_Rn, good_decomposition_box,
                         normal_form_ind)
from .grammar import ParseError, parse_expression, parse_formula
from .st_operator import StError, st_set, strong_bound
from .topology_measure import (Density, IsoMap, IsomorphismError, check_isomorphism, closure_as_st,
                               contains_qbox, is_connected_st, measure_extension, measure_st,
                               st_derivative_commutes, volume_I)

DEFAULT_NAMES = ("x", "y", "z")


@dataclass
class Config:
    max_vars: int = 3
    max_degree: int = 4
    reparam_depth: int = 4
    quadrature_radius: float = 1e-9
    grid_depth: int = 12

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ValueError(f"config field {f.name} must be positive")
        if self.max_vars > 3:
            raise ValueError("max_vars is at most 3")

    @classmethod
    def load(cls, path: str | None) -> "Config":
        if not path:
            return cls()
        with open(path) as fh:
            data = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {', '.join(sorted(unknown))}")
        return cls(**data)

    def budget(self) -> Budget:
        return Budget(self.max_vars, self.max_degree)


@dataclass
class RunReport:
    command: list
    results: dict = field(default_factory=dict)
    certificates: list = field(default_factory=list)
    timing: dict | None = None

    def add(self, certs) -> None:
        for c in certs:
            self.certificates.append(c.record() if isinstance(c, Certificate) else c)

    def violated(self) -> bool:
        return any(c["verdict"] == "violated" for c in self.certificates)

    def exit_code(self) -> int:
        return 2 if self.violated() else 0

    def record(self) -> dict:
        out = {"command": self.command, "results": self.results, "certificates": self.certificates}
        if self.timing is not None:
            out["timing"] = self.timing
        return out

    def text(self) -> str:
        lines = [" ".join(self.command)]
        for k in sorted(self.results):
            v = self.results[k]
            lines.append(f"{k}: {v if isinstance(v, str) else json.dumps(v, sort_keys=True)}")
        for c in self.certificates:
            where = f"[{c['suite']}] {c['case']}: " if "suite" in c else ""
            lines.append(f"{c['verdict']:>12}  {where}{c['claim']} ({c['method']})")
        return "\n".join(lines) + "\n"


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors raised instead of exiting with status 2."""

    def error(self, message):
        raise UsageError(message)


def _variables(args, arity_hint: int | None = None) -> tuple:
    if args.var_order:
        vs = tuple(v.strip() for v in args.var_order.split(",") if v.strip())
        if args.vars is not None and args.vars != len(vs):
            raise UsageError("--vars does not match --var-order")
        return vs
    k = args.vars if args.vars is not None else arity_hint
    if k is None:
        raise UsageError("give --vars or --var-order")
    if not 1 <= k <= len(DEFAULT_NAMES):
        raise UsageError("--vars must be 1, 2 or 3")
    return DEFAULT_NAMES[:k]


def _formula(args, text: str) -> SAFormula:
    return parse_formula(text, _variables(args))


def _rational(text: str) -> fmpq:
    q = Fraction(text)
    return fmpq(q.numerator, q.denominator)


# ---------------------------------------------------------------------------
# subcommands


def cmd_st(args, cfg: Config, rep: RunReport) -> None:
    X = _formula(args, args.formula)
    S = st_set(X, cfg.budget())
    B = st_set(X, cfg.budget(), method="box")
    from .semialgebraic import sa_equal

    rep.results.update({"st": str(S.formula), "dim": S.dim()})
    if S.intervals is not None:
        rep.results["intervals"] = [str(p) for p in S.intervals]
    rep.add([check("st X computed by fibres equals st X computed by boxes", "sa_equal",
                   sa_equal(S.formula, B.formula, cfg.budget()))])


def cmd_decompose(args, cfg: Config, rep: RunReport) -> None:
    Xs = [_formula(args, t) for t in args.formulas]
    make = good_decomposition_box if args.ambient == "box" else good_decomposition_Rn
    dec = make(Xs, cfg.budget())
    rep.results["decomposition"] = dec.to_record()
    d = dec
    while d is not None:
        rep.add(d.certificates)
        d = d.base


def cmd_normal_form(args, cfg: Config, rep: RunReport) -> None:
    expr = parse_expression(args.expression, _variables(args, 3))
    pairs, cert = normal_form_ind(expr, cfg.budget(), shrink=args.shrink)
    rep.results["pairs"] = [[str(X), str(Y)] for X, Y in pairs]
    rep.add([cert])


def cmd_closure(args, cfg: Config, rep: RunReport) -> None:
    X = _formula(args, args.formula)
    dec = good_decomposition_box([X], cfg.budget(), certify=False)
    cells = dec.cells
    if args.point:
        cells = [cell_at(dec, [_rational(p) for p in args.point.split(",")])]
    out = []
    for C in cells:
        Y, cert = closure_as_st(C, cfg.budget())
        out.append({"cell": str(C.region), "type": list(C.itype), "X": str(Y)})
        rep.add([cert])
    rep.results["cells"] = out


def cmd_connected(args, cfg: Config, rep: RunReport) -> None:
    res = is_connected_st(_formula(args, args.formula), cfg.budget())
    rec = res.record()
    rep.add(rec.pop("certificates"))
    rep.results.update(rec)


def cmd_measure(args, cfg: Config, rep: RunReport) -> None:
    X = _formula(args, args.formula)
    if args.witness:
        if not args.image:
            raise UsageError("--witness needs --image")
        vs = X.free
        psi = IsoMap.parse(args.witness.split(","), vs)
        Y = parse_formula(args.image, vs)
        m = measure_extension(X, (psi, Y), cfg.quadrature_radius, cfg.budget())
    elif strong_bound(X, cfg.budget()) is None:
        m = measure_extension(X, None, cfg.quadrature_radius, cfg.budget())
    else:
        m = measure_st(X, cfg.quadrature_radius, cfg.budget())
    rep.results["measure"] = m.record()
    if m.value == float("inf"):
        rep.add([Certificate("measure of X", "no witness supplied", "conservative")])
    else:
        rep.add([check("quadrature radius within the configured budget", m.method,
                       m.radius <= cfg.quadrature_radius)])


def cmd_volume(args, cfg: Config, rep: RunReport) -> None:
    D = _formula(args, args.domain)
    f = Density.parse(args.term, D)
    refine = [_rational(p) for p in args.refine.split(",")] if args.refine else ()
    v = volume_I(f, refine, cfg.quadrature_radius, cfg.budget())
    rep.results["volume"] = v.record()
    rep.add([check("quadrature radius within the configured budget", v.method,
                   v.radius <= cfg.quadrature_radius)])


def cmd_iso_check(args, cfg: Config, rep: RunReport) -> None:
    vs = _variables(args)
    U = parse_formula(args.U, vs) if args.U else None
    V = parse_formula(args.V, vs) if args.V else None
    psi = IsoMap.parse(args.map.split(","), vs, U, V)
    f = Density.parse(args.f, parse_formula(args.f_on, vs))
    g = Density.parse(args.g, parse_formula(args.g_on, vs))
    res = check_isomorphism(psi, f, g, not args.no_volumes, cfg.budget())
    rec = res.record()
    rep.add(rec.pop("certificates"))
    rep.results.update(rec)
    rep.results["map"] = psi.record()


def cmd_deriv_check(args, cfg: Config, rep: RunReport) -> None:
    D = _formula(args, args.domain)
    dec = good_decomposition_box([D], cfg.budget(), certify=False)
    cell = cell_at(dec, [_rational(p) for p in args.point.split(",")])
    res = st_derivative_commutes(Density.parse(args.term, D), cell, args.points, _rational(args.step),
                                 args.tol, cfg.budget())
    rec = res.record()
    rep.add(rec.pop("certificates"))
    rep.results.update(rec)
    rep.results["cell"] = str(cell.region)


def cmd_qbox(args, cfg: Config, rep: RunReport) -> None:
    res = contains_qbox(_formula(args, args.formula), cfg.grid_depth, cfg.budget())
    rec = res.record()
    rep.add(rec.pop("certificates"))
    rep.results.update(rec)


def cmd_verify(args, cfg: Config, rep: RunReport) -> None:
    from .verify import run_suite

    try:
        recs = run_suite(args.suite, cfg.budget(), cfg.quadrature_radius, cfg.grid_depth, cfg.reparam_depth)
    except KeyError as err:
        raise UsageError(err.args[0]) from None
    rep.add(recs)
    counts: dict = {}
    for r in recs:
        counts[r["verdict"]] = counts.get(r["verdict"], 0) + 1
    rep.results.update({"suite": args.suite, "records": len(recs), "verdicts": counts})


def cmd_plot(args, cfg: Config, rep: RunReport) -> None:
    from .plot import Layer, decomposition_layers, svg

    Xs = [_formula(args, t) for t in args.formulas]
    n = Xs[0].arity if Xs else 0
    if n not in (1, 2):
        raise UsageError("plots are implemented for n = 1, 2")
    if args.decomposition:
        dec = good_decomposition_box(Xs, cfg.budget(), certify=False)
        layers = decomposition_layers(dec, dec.st_sets)
    else:
        layers = []
        for i, X in enumerate(Xs):
            S = st_set(X, cfg.budget()).formula
            layers.append(Layer(S, "#1f77b4", f"st set {i}"))
    rep.results["svg"] = svg(layers, n, args.box, args.step, title=" ; ".join(args.formulas))
    rep.results["layers"] = [layer.label for layer in layers]


COMMANDS = {
    "st": cmd_st, "decompose": cmd_decompose, "normal-form": cmd_normal_form, "closure": cmd_closure,
    "connected": cmd_connected, "measure": cmd_measure, "volume": cmd_volume, "iso-check": cmd_iso_check,
    "deriv-check": cmd_deriv_check, "qbox": cmd_qbox, "verify": cmd_verify, "plot": cmd_plot,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--vars", type=int, help="number of free variables (x, y, z)")
    common.add_argument("--var-order", help="comma-separated free variables, e.g. x,y")
    common.add_argument("--config", help="JSON file with Config fields")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("record", "text", "svg"), default="record")
    common.add_argument("--timing", action="store_true", help="add wall-clock timing to the report")

    p = _Parser(prog="stpart", description="Standard parts of semialgebraic sets over Q(eps).")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    add("st", "standard part of a set").add_argument("formula")
    d = add("decompose", "good decomposition of I^n or R^n partitioning st of the inputs")
    d.add_argument("formulas", nargs="+")
    d.add_argument("--ambient", choices=("box", "R"), default="box")
    nf = add("normal-form", "pairs (X_j, Y_j) with the set = union of st X_j minus st Y_j")
    nf.add_argument("expression", help='prefix expression, e.g. (minus (st "0 <= x & x <= 1") (st "x = eps"))')
    nf.add_argument("--shrink", action="store_true", help="use shrinking families instead of closures")
    c = add("closure", "X over Q(eps) with st X = closure of each good cell of a decomposition")
    c.add_argument("formula")
    c.add_argument("--point", help="only the cell containing this rational point, e.g. 1/2,0")
    add("connected", "connectedness of st X").add_argument("formula")
    m = add("measure", "measure of st X")
    m.add_argument("formula")
    m.add_argument("--witness", help="components of a map onto a strongly bounded set, comma-separated")
    m.add_argument("--image", help="the strongly bounded image of the witness")
    v = add("volume", "volume of a nonnegative function")
    v.add_argument("term")
    v.add_argument("domain")
    v.add_argument("--refine", help="extra rational split points, comma-separated")
    i = add("iso-check", "decide that a map is an isomorphism f -> g")
    i.add_argument("--map", required=True, help="components, comma-separated")
    i.add_argument("--f", required=True)
    i.add_argument("--f-on", required=True)
    i.add_argument("--g", required=True)
    i.add_argument("--g-on", required=True)
    i.add_argument("--U")
    i.add_argument("--V")
    i.add_argument("--no-volumes", action="store_true")
    dc = add("deriv-check", "derivatives commute with taking standard parts")
    dc.add_argument("term")
    dc.add_argument("domain")
    dc.add_argument("--point", required=True, help="rational point of the open cell, e.g. 1/2")
    dc.add_argument("--points", type=int, default=100)
    dc.add_argument("--step", default="1/1000")
    dc.add_argument("--tol", type=float, default=1e-4)
    add("qbox", "a rational box inside X and inside the interior of st X").add_argument("formula")
    ve = add("verify", "run the verification suites")
    ve.add_argument("--suite", default="all")
    pl = add("plot", "SVG drawing of st sets or of a good decomposition (n <= 2)")
    pl.add_argument("formulas", nargs="*")
    pl.add_argument("--decomposition", action="store_true")
    pl.add_argument("--box", type=float, default=1.5)
    pl.add_argument("--step", type=float, default=0.01)
    return p


def run(argv: Sequence[str]) -> tuple[RunReport, argparse.Namespace]:
    args = build_parser().parse_args(list(argv))
    cfg = Config.load(args.config)
    rep = RunReport(list(argv))
    t0 = time.perf_counter()
    COMMANDS[args.command](args, cfg, rep)
    if args.timing:
        rep.timing = {"seconds": round(time.perf_counter() - t0, 3)}
    return rep, args


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        rep, args = run(argv)
    except (CertificateError, IsomorphismError) as err:
        rep = RunReport(argv)
        if isinstance(err, CertificateError):
            rep.add([err.certificate])
        else:
            rep.add(err.report.certificates)
        _emit(json.dumps(rep.record(), sort_keys=True, indent=2) + "\n", None)
        return 2
    except (UsageError, ParseError, ResourceError, StError, GoodCellError, OSError, ValueError) as err:
        sys.stderr.write(f"stpart: error: {err}\n")
        return 1
    if args.format == "svg":
        if "svg" not in rep.results:
            sys.stderr.write("stpart: error: --format svg is only produced by plot\n")
            return 1
        _emit(rep.results["svg"], args.out)
    elif args.format == "text":
        _emit(rep.text(), args.out)
    else:
        _emit(json.dumps(rep.record(), sort_keys=True, indent=2) + "\n", args.out)
    return rep.exit_code()


if __name__ == "__main__":
    sys.exit(main())
