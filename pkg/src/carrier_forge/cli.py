"""Command-line front end: ``carrier-forge <command> [options]``.

Exit codes: 0 success, 1 input error, 2 relaxation did not converge,
3 a property suite or theorem scan failed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from carrier_forge import lemmas
from carrier_forge.bound import BoundDomainError, compute_l
from carrier_forge.formats import FormatError, fmt, read_decorated, read_graph, read_group, write_decorated, write_graph
from carrier_forge.graph import GraphError, Subgraph, collapse_tree
from carrier_forge.groups import SHIPPED, load_shipped
from carrier_forge.hyperbolic import TETRAHEDRAL_ANGLE, TWO_PI_3
from carrier_forge.relaxer import RelaxConfig, girth_radius, relax, scan_theorem
from carrier_forge.carrier import seed_graph
from carrier_forge.shortening import sh, sh_gain

OK, INPUT_ERROR, NOT_CONVERGED, SUITE_FAILED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(INPUT_ERROR, f"{self.prog}: error: {message}\n")


def _positive(kind):
    def conv(text):
        val = kind(text)
        if not val > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return val

    return conv


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _load_group(spec: str):
    if spec in SHIPPED:
        return load_shipped(spec)
    return read_group(_read(spec))


def _config(args) -> RelaxConfig:
    return RelaxConfig(
        step=args.step,
        tol_grad=args.tol_grad,
        max_iter=args.max_iter,
        allow_topology_moves=not args.no_topology_moves,
        seed=args.seed,
        angle_tol=args.angle_tol,
    )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_sh_table(args) -> int:
    if not 0 < args.c_min <= args.c_max:
        raise UsageError("need 0 < c-min <= c-max")
    if not 0 < args.phi_min <= args.phi_max <= TWO_PI_3 + 1e-12:
        raise UsageError("need 0 < phi-min <= phi-max <= 2pi/3")
    c = np.linspace(args.c_min, args.c_max, args.steps)
    phi = np.linspace(args.phi_min, min(args.phi_max, TWO_PI_3), args.steps)
    C, P = np.meshgrid(c, phi, indexing="ij")
    sol = sh_gain(C.ravel(), P.ravel())
    rows = ["c,phi,a,b,gain"]
    for row in zip(C.ravel(), P.ravel(), sol.a, sol.b, sol.gain):
        rows.append(",".join(fmt(x) for x in row))
    _emit("\n".join(rows) + "\n", args.out)
    return OK


def cmd_bound(args) -> int:
    if args.k < 2:
        raise UsageError(f"rank k = {args.k}: the bound assumes k > 1")
    try:
        cert = compute_l(args.r, args.k, args.phi0)
    except BoundDomainError as exc:
        raise UsageError(str(exc)) from None
    _emit(cert.to_json(), args.out)
    return OK if cert.verify() else SUITE_FAILED


def cmd_relax(args) -> int:
    group = _load_group(args.group)
    if args.graph:
        dg = read_decorated(_read(args.graph), group)
    else:
        try:
            dg = seed_graph(group, args.topology, args.seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    out, rep = relax(dg, _config(args))
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{prefix}.graph").write_text(write_decorated(out))
    Path(f"{prefix}.trace.csv").write_text(rep.trace_csv())
    Path(f"{prefix}.summary").write_text(rep.summary())
    sys.stdout.write(rep.summary())
    return OK if rep.certified else NOT_CONVERGED


def cmd_scan(args) -> int:
    group = _load_group(args.group)
    cfg = _config(args)
    r = args.r if args.r is not None else girth_radius(group, cfg)
    cert = compute_l(r, group.rank)
    report = scan_theorem(group, args.seeds, cert, cfg, workers=args.workers)
    counts = report.counts()
    summary = f"r {fmt(cert.r)}\nl {fmt(cert.l)}\n" + "".join(f"{k} {v}\n" for k, v in counts.items())
    if args.out:
        prefix = Path(args.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        Path(f"{prefix}.csv").write_text(report.csv())
        Path(f"{prefix}.summary").write_text(summary)
        if report.dump:
            Path(f"{prefix}.violation").write_text(report.dump)
    else:
        sys.stdout.write(report.csv())
    sys.stdout.write(summary)
    if report.dump:
        sys.stdout.write(report.dump)
    return SUITE_FAILED if counts["VIOLATION"] else OK


def _faulty_sh(c, phi):
    # a wiggle in c that breaks monotonicity; only reachable through a hidden flag
    return sh(c, phi) + 1e-3 * np.sin(40.0 * np.asarray(c))


def cmd_verify_lemmas(args) -> int:
    results = lemmas.run_all(args.grid_density, args.trials, args.seed, sh=_faulty_sh if args.inject_fault else None)
    text = "".join(r.line() + "\n" for r in results)
    passed = all(r.passed for r in results)
    text += "all suites passed\n" if passed else "FAILED\n"
    _emit(text, args.out)
    if args.out:
        sys.stdout.write(text)
    return OK if passed else SUITE_FAILED


def cmd_collapse(args) -> int:
    x = read_graph(_read(args.graph))
    tree = [t for t in args.tree.split(",") if t]
    missing = [t for t in tree if t not in x.edges]
    if missing:
        raise UsageError(f"unknown edges {missing}")
    p = None
    if args.point:
        eid, _, t = args.point.partition(":")
        try:
            p = (eid, float(t))
        except ValueError:
            raise UsageError("--point must look like EDGE:T") from None
    try:
        res = collapse_tree(x, Subgraph(x, set(tree)), p)
    except GraphError as exc:
        raise UsageError(str(exc)) from None
    lines = [
        f"len_X {fmt(x.total_length)}",
        f"len_S {fmt(res.s_length)}",
        f"len_Y {fmt(res.y.total_length)}",
        f"bound {fmt(x.total_length + (4 * x.rank - 5) * res.s_length)}",
        f"cone_valence {res.y.valence(res.cone_vertex)}",
    ]
    lines += [f"cone_edge {k} {fmt(v)}" for k, v in res.cone_edges.items()]
    problems = res.check(x)
    lines += [f"violation {p}" for p in problems]
    if args.out:
        Path(args.out).write_text(write_graph(res.y))
    else:
        sys.stdout.write(write_graph(res.y))
    sys.stdout.write("\n".join(lines) + "\n")
    return SUITE_FAILED if problems else OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _relax_flags(p):
    p.add_argument("--group", required=True, help=f"group file or one of {', '.join(SHIPPED)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=_positive(float), default=0.1)
    p.add_argument("--tol-grad", type=_positive(float), default=1e-8)
    p.add_argument("--max-iter", type=_positive(int), default=100_000)
    p.add_argument("--angle-tol", type=_positive(float), default=1e-3)
    p.add_argument("--no-topology-moves", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="carrier-forge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sh-table", help="tabulate the triod shortening gain as CSV")
    p.add_argument("--c-min", type=float, default=0.05)
    p.add_argument("--c-max", type=float, default=5.0)
    p.add_argument("--phi-min", type=float, default=0.05)
    p.add_argument("--phi-max", type=float, default=TWO_PI_3)
    p.add_argument("--steps", type=_positive(int), default=20)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sh_table)

    p = sub.add_parser("bound", help="certificate for the edge-length lower bound l(r, k)")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--phi0", type=float, default=TETRAHEDRAL_ANGLE, help=argparse.SUPPRESS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("relax", help="relax a carrier graph toward a local length minimum")
    _relax_flags(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--graph", help="decorated-graph file to start from")
    src.add_argument("--topology", choices=("theta", "dumbbell", "random"), default="theta")
    p.add_argument("--out", default="relaxed", help="output prefix for .graph, .trace.csv and .summary")
    p.set_defaults(func=cmd_relax)

    p = sub.add_parser("scan", help="check the edge-length bound on relaxed graphs over many seeds")
    _relax_flags(p)
    p.add_argument("--seeds", type=_positive(int), default=50)
    p.add_argument("--r", type=_positive(float), default=None, help="circuit bound (default: half the seed-0 girth)")
    p.add_argument("--workers", type=_positive(int), default=None)
    p.add_argument("--out", help="output prefix for .csv and .summary")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("verify-lemmas", help="run the property suites")
    p.add_argument("--grid-density", type=_positive(int), default=200)
    p.add_argument("--trials", type=_positive(int), default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify_lemmas)

    p = sub.add_parser("collapse", help="collapse a tree of a trivalent graph onto a cone")
    p.add_argument("--graph", required=True)
    p.add_argument("--tree", required=True, help="comma-separated edge ids of the tree S")
    p.add_argument("--point", help="cone point as EDGE:T with 0 < T < 1")
    p.add_argument("--out")
    p.set_defaults(func=cmd_collapse)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, FormatError, ValueError) as exc:
        print(f"carrier-forge {args.command}: {exc}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
