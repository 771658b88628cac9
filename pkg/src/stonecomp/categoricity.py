"""Effective homeomorphisms onto the standard Cantor space.

A splitting tree carves the presented space into nested clopen cells, each
named by finitely many balls.  Sibling cells are formally disjoint and child
cells are formally included in their parent, so reading a name of a point
and checking formal inclusion into cells yields longer and longer prefixes of
the image path.  The image prefixes come from the encoding ``psi``: the
children of a node with ``k + 1`` children get ``0, 10, 110, ..., 1^k``.

With a single isolated point the target is the spine tree
``{0^n} U {1 sigma}``: the isolated point goes to ``0^w`` and the rest of the
space is split as usual below ``1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import BudgetExceeded, ConstructionError, InsufficientName, PreconditionError
from .metric import (
    BasicBall,
    MetricState,
    accepts_cover,
    ball_cone,
    ball_depth,
    cell_centers,
    formally_disjoint,
    formally_included,
    limit_state,
)
from .trees import FiniteBooleanAlgebra, canonicalize, cones_equal, is_prefix

THREE_QUARTERS = Fraction(3, 4)
ROOT, ISOLATED, REST = (), (0,), (1,)


@dataclass(frozen=True)
class StdBall:
    """Open ball of the standard presentation, centred at the path ``center0^w``."""

    center: str
    radius: Fraction

    @property
    def cone(self) -> str:
        return ball_cone(self.center, self.radius)


def cone_ball(s: str) -> StdBall:
    """A standard ball equal to ``cone(s)``."""
    return StdBall(s, Fraction(3, 2) / 2 ** len(s))


@dataclass
class SplitNode:
    cell: tuple[BasicBall, ...]
    hull: tuple[str, ...]
    children: list[tuple[int, ...]] = field(default_factory=list)


@dataclass
class SplittingTree:
    m: MetricState
    root_radius: Fraction
    nodes: dict[tuple[int, ...], SplitNode]
    isolated: int | None = None

    def branching(self, key: tuple[int, ...]) -> int:
        return len(self.nodes[key].children)

    @property
    def depth(self) -> int:
        return max(len(k) for k in self.nodes)


def _cone_cell(m: MetricState, cones: Sequence[str], level: int) -> tuple[BasicBall, ...]:
    """Balls of radius 3/4 * 2^-level, one per occupied level+1 cell below ``cones``."""
    centers = cell_centers(m.rep, level + 1)
    r = THREE_QUARTERS / 2**level
    return tuple(BasicBall(i, r) for p, i in centers.items() if any(p.startswith(c) for c in cones))


def _split(m: MetricState, node: SplitNode, depth: int, search: int) -> list[SplitNode]:
    """First level below the hull giving >= 2 formally valid child cells."""
    base = max(map(len, node.hull))
    bound = Fraction(1, 2**depth)
    for level in range(base + 1, base + 1 + search):
        prefixes = sorted({p[:level] for p in cell_centers(m.rep, level + 1)})
        cones = [p for p in prefixes if any(p.startswith(h) for h in node.hull)]
        if len(cones) < 2:
            continue
        kids = [SplitNode(_cone_cell(m, [c], level), (c,)) for c in cones]
        if any(b.radius > bound for k in kids for b in k.cell):
            continue
        if not all(formally_included(k.cell, node.cell, m) for k in kids):
            continue
        if not all(
            formally_disjoint(a.cell, b.cell, m) for i, a in enumerate(kids) for b in kids[i + 1:]
        ):
            continue
        tree = m.presentation.schedule.baseline
        if not cones_equal(cones, list(node.hull), tree):
            raise ConstructionError("special points miss a cell; use more points")
        return kids
    raise BudgetExceeded(f"no splitting found within {search} levels below {node.hull}")


def _grow(m: MetricState, nodes: dict, key: tuple[int, ...], depth: int, search: int, reach: int = 0) -> None:
    # split below ``depth`` and, past it, until the hull cones have length >= reach
    if len(key) >= depth and min(map(len, nodes[key].hull)) >= reach:
        return
    kids = _split(m, nodes[key], len(key) + 1, search)
    for i, kid in enumerate(kids):
        nodes[key + (i,)] = kid
        nodes[key].children.append(key + (i,))
        _grow(m, nodes, key + (i,), depth, search, reach)


def build_splitting_tree(
    m: MetricState, R: Fraction = Fraction(2), depth: int = 2, search: int = 8, reach: int = 0
) -> SplittingTree:
    m = limit_state(m)
    R = Fraction(R)
    if ball_depth(R) != 0:
        raise PreconditionError("the root ball must be the whole space (radius above 1)")
    nodes = {ROOT: SplitNode((BasicBall(0, R),), ("",))}
    _grow(m, nodes, ROOT, depth, search, reach)
    return SplittingTree(m, R, nodes)


def spine_variant_tree(
    m: MetricState, isolated: int, R: Fraction, depth: int = 2, search: int = 8, reach: int = 0
) -> SplittingTree:
    """Splitting tree for a space whose only isolated point is ``isolated``.

    ``R`` must isolate the point: ``B(alpha, R) = {alpha}``.  Node ``(0,)``
    holds the isolated point and node ``(1,)`` the rest of the space.
    """
    m = limit_state(m)
    R = Fraction(R)
    alpha = m.rep[isolated]
    home = ball_cone(alpha, R)
    below = [p for p in cell_centers(m.rep, len(home) + search) if p.startswith(home)]
    if len(below) > 1:
        raise PreconditionError(f"point {isolated} is not isolated by radius {R}")
    nodes = {ROOT: SplitNode((BasicBall(0, Fraction(2)),), ("",))}
    nodes[ISOLATED] = SplitNode((BasicBall(isolated, R),), (home,))
    nodes[ROOT].children.append(ISOLATED)
    n = len(home)
    others = [p for p in cell_centers(m.rep, n) if p != home]
    if depth >= 1 and others:
        # the coarsest level whose balls stay formally apart from the isolating ball
        for level in (n, n + 1):
            rest = SplitNode(_cone_cell(m, others, level), tuple(others))
            if formally_disjoint(rest.cell, nodes[ISOLATED].cell, m):
                break
        else:
            raise ConstructionError("the rest of the space is not formally apart from the isolated point")
        nodes[REST] = rest
        nodes[ROOT].children.append(REST)
        _grow(m, nodes, REST, depth, search, reach)
    return SplittingTree(m, R, nodes, isolated)


def psi_encode(t: SplittingTree) -> dict[tuple[int, ...], str]:
    psi = {ROOT: ""}
    for key in sorted(t.nodes, key=len):
        kids = t.nodes[key].children
        if t.isolated is not None and key == ROOT:
            psi[ISOLATED] = "0"
            if REST in t.nodes:
                psi[REST] = "1"
            continue
        k = len(kids) - 1
        for i, kid in enumerate(kids):
            psi[kid] = psi[key] + "1" * i + ("0" if i < k else "")
    return psi


@dataclass
class HomeoOperator:
    source: SplittingTree
    encoding: dict[tuple[int, ...], str]

    @property
    def variant(self) -> str:
        return "atomless" if self.source.isolated is None else "spine(1)"

    @property
    def m(self) -> MetricState:
        return self.source.m


def homeo_operator(
    m: MetricState,
    depth: int = 3,
    isolated: int | None = None,
    R: Fraction | None = None,
    precision: int | None = None,
) -> HomeoOperator:
    """Operator onto the standard space.

    With ``precision`` set, branches keep splitting past ``depth`` until the
    inverse can name points to radius ``2^-precision``.
    """
    reach = 0 if precision is None else precision + 1
    if isolated is None:
        t = build_splitting_tree(m, Fraction(2) if R is None else R, depth, reach=reach)
    else:
        if R is None:
            raise PreconditionError("the spine variant needs an isolating radius")
        t = spine_variant_tree(m, isolated, R, depth, reach=reach)
    return HomeoOperator(t, psi_encode(t))


def point_name(m: MetricState, i: int, length: int) -> tuple[BasicBall, ...]:
    """Balls of radius 2, 3/4, 3/8, ... around the special point ``i``."""
    return (BasicBall(i, Fraction(2)),) + tuple(BasicBall(i, THREE_QUARTERS / 2**k) for k in range(length))


def _finish(balls: set, precision: int) -> tuple:
    out = tuple(sorted(balls, key=lambda b: (-b.radius, str(b.center))))
    if not out or out[-1].radius > Fraction(1, 2**precision):
        raise InsufficientName(f"name too coarse for precision 2^-{precision}")
    return out


def homeo_apply(op: HomeoOperator, x: Sequence[BasicBall], precision: int) -> tuple[StdBall, ...]:
    """Name of the image point, from a name of the source point."""
    emitted: set[StdBall] = set()
    t, m = op.source, op.m
    for b in x:
        for key, node in t.nodes.items():
            if not formally_included((b,), node.cell, m):
                continue
            if key == ISOLATED and t.isolated is not None:
                emitted.update(StdBall("0" * (k + 1), Fraction(1, 2 ** (k + 2))) for k in range(precision + 1))
            else:
                emitted.add(cone_ball(op.encoding[key]))
    return _finish(emitted, precision)


def inverse_apply(op: HomeoOperator, y: Sequence[StdBall], precision: int) -> tuple[BasicBall, ...]:
    """Name of the source point, from a name of its image."""
    emitted: set[BasicBall] = set()
    t, m = op.source, op.m
    for b in y:
        cone = b.cone
        for key, node in t.nodes.items():
            if not is_prefix(op.encoding[key], cone) or len(node.hull) != 1:
                continue
            if key == ISOLATED and t.isolated is not None:
                emitted.add(node.cell[0])
                emitted.update(point_name(m, t.isolated, precision + 1)[2:])
                continue
            h = node.hull[0]
            centre = cell_centers(m.rep, len(h))[h] if h else 0
            emitted.add(BasicBall(centre, Fraction(3, 2) / 2 ** len(h)))
    return _finish(emitted, precision)


# -- induced isomorphism ------------------------------------------------------------


def _pullback_cells(
    src: HomeoOperator, dst: HomeoOperator, target: Sequence[BasicBall], level: int
) -> list[BasicBall]:
    """Shrunken cell balls of ``dst`` (nodes down to ``level``) whose preimage
    in ``src`` is formally inside ``target``."""
    out = []
    for key, node in dst.source.nodes.items():
        if len(key) > level:
            continue
        psi_c = dst.encoding[key]
        inside = False
        for skey, snode in src.source.nodes.items():
            if is_prefix(src.encoding[skey], psi_c) and formally_included(snode.cell, target, src.m):
                inside = True
                break
        if inside:
            out += [BasicBall(b.center, b.radius * THREE_QUARTERS) for b in node.cell]
    return out


def induced_algebra_iso(
    a: FiniteBooleanAlgebra, c: FiniteBooleanAlgebra, ops: tuple[HomeoOperator, HomeoOperator]
) -> dict[int, int]:
    """Element map ``a -> c`` induced by the homeomorphism ``dst^-1 o src``."""
    from .extract import cone_name

    src, dst = ops
    out = {0: 0, a.top: c.top}
    tree_c = dst.m.presentation.schedule.baseline
    for mask in a.elements():
        if mask in out:
            continue
        v = cone_name(a.element(mask), src.m)
        w = cone_name(a.element(a.complement(mask)), src.m)
        found = None
        for level in range(dst.source.depth + 1):
            cs = _pullback_cells(src, dst, v, level)
            ds = _pullback_cells(src, dst, w, level)
            if cs and ds and accepts_cover(dst.m, cs + ds, dst.m.stage):
                found = cs
                break
        if found is None:
            raise BudgetExceeded(f"no cover separates element {mask} within the splitting depth")
        cones = [ball_cone(dst.m.rep[b.center], b.radius) for b in found]
        d = c.locate(canonicalize(cones, tree_c))
        if d is None:
            raise ConstructionError(f"pulled-back set of element {mask} is not an element")
        out[mask] = d
    return out


# -- dumps ----------------------------------------------------------------------


def format_std(name: Sequence[StdBall]) -> str:
    return " ".join(f"({b.center or '-'},{b.radius.numerator}/{b.radius.denominator})" for b in name)


def dump_splitting_tree(op: HomeoOperator) -> list[str]:
    lines = []
    t = op.source

    def walk(key, indent):
        node = t.nodes[key]
        balls = " ".join(f"({b.center},{b.radius.numerator}/{b.radius.denominator})" for b in node.cell)
        label = ".".join(map(str, key)) or "root"
        lines.append(f"{'  ' * indent}{label} psi={op.encoding[key] or '-'} balls={balls}")
        for kid in node.children:
            walk(kid, indent + 1)

    walk(ROOT, 0)
    return lines
