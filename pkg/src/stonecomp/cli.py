"""Command-line front door.

Exit status: 0 on success, 1 when a check or construction fails, 2 on bad
input.  Reports go to stdout and depend only on the inputs and flags.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import verify
from .banach import (
    DenseSpanPresentation,
    default_budget,
    indicator_info,
    parse_cone_function,
    splits,
    stabilized_reconstruct,
)
from .categoricity import (
    dump_splitting_tree,
    format_std,
    homeo_apply,
    homeo_operator,
    inverse_apply,
    point_name,
)
from .coce import RemovalSchedule, parse_schedule, refine_schedule
from .errors import BudgetExceeded, ConstructionError, InsufficientName, StoneError
from .extract import dump_algebra, extract_algebra, format_name
from .metric import (
    MetricState,
    dump_distances,
    enumerate_covers,
    format_cover,
    limit_state,
    new_metric,
    strip_zeros,
)
from .trees import TaggedShapeTree, clopen_algebra, enumerate_trees, find_isomorphism, format_tree, parse_tree

FAILED = (BudgetExceeded, ConstructionError, InsufficientName)


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def _is_schedule(text: str) -> bool:
    return any(line.split()[:1] == ["remove"] for line in text.splitlines())


def load_schedule(path: str) -> RemovalSchedule:
    """A schedule file, or a tree file read as a schedule with no explicit removals."""
    text = _read(path)
    try:
        if _is_schedule(text):
            return parse_schedule(text)
        return refine_schedule([], parse_tree(text))
    except StoneError as exc:
        raise InputError(f"{path}: {exc}") from None


def load_tree(path: str) -> TaggedShapeTree:
    return load_schedule(path).baseline


def _limit_metric(sched: RemovalSchedule, points: int) -> MetricState:
    return limit_state(new_metric(sched, points))


# -- subcommands ----------------------------------------------------------------


def cmd_dualize(args, out) -> int:
    tree = load_tree(args.input)
    alg = clopen_algebra(tree)
    out.append(f"atoms {alg.n_atoms}, labeled-atoms {alg.labeled_atoms}")
    for k, (cell, label) in enumerate(zip(alg.atom_cells, alg.atom_label)):
        out.append(f"atom {k} cones={cell} label={'atom' if label else 'nonatom'}")
    return 0


def cmd_rce_build(args, out) -> int:
    sched = load_schedule(args.input)
    points = args.points or 16
    m = new_metric(sched, points)
    budget = m.presentation.limit_stage if args.budget is None else args.budget
    m = MetricState(m.presentation, budget)
    out.append(f"# points {points} stages 0..{budget}")
    for i, s in enumerate(m.presentation.strings):
        out.append(f"# point {i} starts at {s or '-'}")
    out.extend(dump_distances(m, range(budget + 1)))
    return 0


def cmd_covers(args, out) -> int:
    sched = load_schedule(args.input)
    points = args.points or 8
    m = new_metric(sched, points)
    stage = m.presentation.limit_stage if args.budget is None else args.budget
    size = 2 if args.depth is None else args.depth
    m = MetricState(m.presentation, stage)
    covers = [format_cover(c) for c in enumerate_covers(m, stage, size)]
    out.extend(covers)
    out.append(f"covers {len(covers)}")
    return 0


def cmd_extract(args, out) -> int:
    sched = load_schedule(args.input)
    budget = max(sched.baseline.depth, 1) if args.budget is None else args.budget
    points = args.points or 2 ** (budget + 3) - 1
    ex = extract_algebra(new_metric(sched, points), budget)
    out.extend(dump_algebra(ex))
    ref = clopen_algebra(sched.baseline.uniform(max(budget, sched.baseline.depth)))
    same = not ex.incomplete and find_isomorphism(ex.quotient, ref) is not None
    out.append(f"isomorphic {'yes' if same else 'no'} (ground truth has {ref.n_atoms} atoms)")
    return 0 if same else 1


def _homeo_for(sched: RemovalSchedule, points: int, depth: int, precision: int):
    atoms = sched.baseline.atom_paths()
    m = _limit_metric(sched, points)
    if not atoms:
        return homeo_operator(m, depth=depth, precision=precision)
    if len(atoms) > 1:
        raise InputError("only spaces with at most one isolated point are supported")
    path = strip_zeros(atoms[0])
    iso = next((i for i, r in enumerate(m.rep) if r == path), None)
    if iso is None:
        raise InputError("the isolated point is not among the special points; raise --points")
    radius = Fraction(9, 8) / 2 ** len(atoms[0])
    return homeo_operator(m, depth=depth, isolated=iso, R=radius, precision=precision)


def cmd_homeo(args, out) -> int:
    src, dst = load_schedule(args.source), load_schedule(args.target)
    if len(src.baseline.atom_paths()) != len(dst.baseline.atom_paths()):
        raise InputError("the two spaces have different numbers of isolated points")
    points = args.points or verify.HOMEO_POINTS
    depth = 1 if args.depth is None else args.depth
    precision = 3 if args.precision is None else args.precision
    a = _homeo_for(src, points, depth, precision)
    b = _homeo_for(dst, points, depth, precision)
    for label, op in (("source", a), ("target", b)):
        out.append(f"# {label} splitting tree ({op.variant})")
        out.extend(dump_splitting_tree(op))
    for i in range(min(points, 8)):
        y = homeo_apply(a, point_name(a.m, i, verify.NAME_LENGTH), 1)
        x = inverse_apply(b, y, precision)
        out.append(f"point {i}: image {format_std(y)}")
        out.append(f"point {i}: back {format_name(x)}")
    return 0


def cmd_banach(args, out) -> int:
    tree = load_tree(args.input)
    pres = DenseSpanPresentation(tree)
    budget = default_budget(pres) if args.budget is None else args.budget
    state, same = stabilized_reconstruct(pres, budget)
    out.append(f"atoms {len(state.atoms)} after {state.stage} stages")
    for k, (cell, label) in enumerate(zip(state.supports(), state.labels)):
        out.append(f"atom {k} support={cell} label={'atom' if label else 'nonatom'}")
    ref = clopen_algebra(tree.uniform(pres.depth))
    iso = find_isomorphism(state.algebra(), ref) is not None
    out.append(f"stabilized {'yes' if same else 'no'}")
    out.append(f"isomorphic {'yes' if iso else 'no'}")
    for path in args.functions:
        try:
            f = parse_cone_function(_read(path), tree)
        except StoneError as exc:
            raise InputError(f"{path}: {exc}") from None
        info = indicator_info(f)
        if not info.is_indicator:
            out.append(f"function {path}: not an indicator")
            continue
        verdict = "yes" if splits(f).splits else "no"
        out.append(f"function {path}: indicator of {info.support} splits {verdict}")
    return 0 if same and iso and not state.incomplete else 1


def cmd_verify(args, out) -> int:
    depth = 2 if args.depth is None else args.depth
    if args.inputs:
        cases = [(p, load_schedule(p)) for p in args.inputs]
    else:
        cases = [(format_tree(t).strip().replace("\n", "; "), verify.schedule_for(t)) for t in enumerate_trees(depth)]
    failed = 0
    for label, sched in cases:
        for res in verify.run_suites(sched, depth, args.seed):
            status = "ok" if res.ok else "FAIL"
            out.append(f"{label} {res.name}: {status} ({res.cases} cases)")
            out.extend(f"  {msg}" for msg in res.failures[:5])
            failed += not res.ok
    out.append(f"suites failed {failed}")
    return 1 if failed else 0


# -- entry point --------------------------------------------------------------


def _natural(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--budget", type=_natural, help="stage or search budget")
    common.add_argument("--depth", type=_natural, help="tree, cover-size or verification depth")
    common.add_argument("--precision", type=_natural, help="output precision exponent")
    common.add_argument("--points", type=_natural, help="number of special points")
    common.add_argument("--seed", type=int, default=0, help="seed for sampling falsifiers")

    parser = argparse.ArgumentParser(prog="stonecomp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("dualize", parents=[common], help="clopen algebra of a tree")
    p.add_argument("input")
    p.set_defaults(run=cmd_dualize)
    p = sub.add_parser("rce-build", parents=[common], help="distance upper bounds per stage")
    p.add_argument("input")
    p.set_defaults(run=cmd_rce_build)
    p = sub.add_parser("covers", parents=[common], help="accepted basic-ball covers")
    p.add_argument("input")
    p.set_defaults(run=cmd_covers)
    p = sub.add_parser("extract", parents=[common], help="recover the clopen algebra from the metric")
    p.add_argument("input")
    p.set_defaults(run=cmd_extract)
    p = sub.add_parser("homeo", parents=[common], help="homeomorphism between two presentations")
    p.add_argument("source")
    p.add_argument("target")
    p.set_defaults(run=cmd_homeo)
    p = sub.add_parser("banach-reconstruct", parents=[common], help="algebra from the dense span of C(X)")
    p.add_argument("input")
    p.add_argument("functions", nargs="*", help="cone function files to classify")
    p.set_defaults(run=cmd_banach)
    p = sub.add_parser("verify", parents=[common], help="run the invariant suites")
    p.add_argument("inputs", nargs="*")
    p.set_defaults(run=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    out: list[str] = []
    try:
        status = args.run(args, out)
    except InputError as exc:
        print(f"stonecomp: {exc}", file=sys.stderr)
        return 2
    except FAILED as exc:
        print("\n".join(out))
        print(f"stonecomp: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except StoneError as exc:
        print(f"stonecomp: {exc}", file=sys.stderr)
        return 2
    print("\n".join(out))
    return status


if __name__ == "__main__":
    sys.exit(main())
