"""Exact model of ``C(X; R)`` for tree-presented Stone spaces.

Functions are locally constant: a rational value on each cell of a finite
partition of ``X`` into tree cones.  That is enough to run the indicator
calculus (2-partitions, refining partitions of unity, ``splits``) exactly and
to rebuild the clopen algebra from a Banach presentation stage by stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import DomainError, ParseError, PreconditionError
from .trees import (
    ClopenSet,
    FiniteBooleanAlgebra,
    TaggedShapeTree,
    from_cells,
    is_prefix,
)

EPSILON = Fraction(1, 512)
P1_VALUE = Fraction(63, 64)
LOW, HIGH = Fraction(1, 4), Fraction(3, 4)
SLACK = Fraction(1, 32)


@dataclass(frozen=True)
class ConeFunction:
    """A function constant on each cell of a finite partition of ``[T]``."""

    tree: TaggedShapeTree
    values: tuple[tuple[str, Fraction], ...]

    def __post_init__(self) -> None:
        cells = [c for c, _ in self.values]
        for c in cells:
            if not self.tree.contains(c):
                raise DomainError(f"cell {c!r} is not a node of the tree")
        n = max([self.tree.depth, *map(len, cells)])
        covered = [x for c in cells for x in self.tree.level(n, c)]
        if len(covered) != len(set(covered)) or set(covered) != set(self.tree.level(n)):
            raise DomainError("cells must partition the space")

    @classmethod
    def _unchecked(cls, tree: TaggedShapeTree, values: tuple) -> "ConeFunction":
        # for cells already known to partition the space
        out = object.__new__(cls)
        object.__setattr__(out, "tree", tree)
        object.__setattr__(out, "values", values)
        return out

    @classmethod
    def of(cls, tree: TaggedShapeTree, values: Mapping[str, object]) -> "ConeFunction":
        return cls(tree, tuple(sorted((c, Fraction(v)) for c, v in values.items())))

    @classmethod
    def constant(cls, tree: TaggedShapeTree, value) -> "ConeFunction":
        return cls.of(tree, {"": value})

    @classmethod
    def indicator(cls, tree: TaggedShapeTree, cells: ClopenSet | Sequence[str], hi=1, lo=0) -> "ConeFunction":
        """``hi`` on the given cells, ``lo`` elsewhere."""
        cones = cells.cones if isinstance(cells, ClopenSet) else tuple(cells)
        n = max([tree.depth, *map(len, cones)])
        return cls.of(
            tree, {x: hi if any(is_prefix(c, x) for c in cones) else lo for x in tree.level(n)}
        )

    @cached_property
    def depth(self) -> int:
        return max([self.tree.depth, *(len(c) for c, _ in self.values)])

    def at_level(self, n: int) -> dict[str, Fraction]:
        """Values on the level-``n`` nodes (``n`` at least the cell depth)."""
        if n < self.depth:
            raise DomainError(f"level {n} is coarser than the cells")
        out = {}
        for c, v in self.values:
            for x in self.tree.level(n, c):
                out[x] = v
        return out

    def _binary(self, other: "ConeFunction", op) -> "ConeFunction":
        if other.tree != self.tree:
            raise DomainError("functions over different trees")
        n = max(self.depth, other.depth)
        a, b = self.at_level(n), other.at_level(n)
        return ConeFunction._unchecked(self.tree, tuple(sorted((x, op(a[x], b[x])) for x in a)))

    def __add__(self, other: "ConeFunction") -> "ConeFunction":
        return self._binary(other, lambda u, v: u + v)

    def __sub__(self, other: "ConeFunction") -> "ConeFunction":
        return self._binary(other, lambda u, v: u - v)

    def __neg__(self) -> "ConeFunction":
        return ConeFunction._unchecked(self.tree, tuple((c, -v) for c, v in self.values))

    def scale(self, k) -> "ConeFunction":
        k = Fraction(k)
        return ConeFunction._unchecked(self.tree, tuple((c, k * v) for c, v in self.values))

    def norm(self) -> Fraction:
        return max(abs(v) for _, v in self.values)

    def to_text(self) -> str:
        return "".join(f"cell {c or '-'} {v.numerator}/{v.denominator}\n" for c, v in self.values)


def sup_distance(f: ConeFunction, g: ConeFunction) -> Fraction:
    return (f - g).norm()


def zero(tree: TaggedShapeTree) -> ConeFunction:
    return ConeFunction.constant(tree, 0)


def p1(tree: TaggedShapeTree) -> ConeFunction:
    return ConeFunction.constant(tree, P1_VALUE)


def parse_cone_function(text: str, tree: TaggedShapeTree) -> ConeFunction:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] != "cell":
            raise ParseError(f"expected 'cell <bits> <num>/<den>', got {line!r}", lineno)
        bits = "" if parts[1] == "-" else parts[1]
        if any(ch not in "01" for ch in bits):
            raise ParseError(f"bad bit string {parts[1]!r}", lineno)
        try:
            values[bits] = Fraction(parts[2])
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"bad rational {parts[2]!r}", lineno) from None
    try:
        return ConeFunction.of(tree, values)
    except DomainError as exc:
        raise ParseError(str(exc)) from exc


# -- indicators -----------------------------------------------------------------


@dataclass(frozen=True)
class IndicatorInfo:
    is_indicator: bool
    support: ClopenSet | None = None
    trivial: bool | None = None


def indicator_info(f: ConeFunction) -> IndicatorInfo:
    vals = [v for _, v in f.values]
    ok = all(-SLACK <= v <= 1 + SLACK and (v < LOW or v > HIGH) for v in vals)
    if not ok:
        return IndicatorInfo(False)
    n = f.depth
    cells = [x for x, v in f.at_level(n).items() if v > Fraction(1, 2)]
    return IndicatorInfo(True, from_cells(f.tree, cells, n), f.norm() < LOW)


def support_cells(f: ConeFunction, n: int) -> frozenset[str]:
    return frozenset(x for x, v in f.at_level(n).items() if v > Fraction(1, 2))


# -- 2-partitions ---------------------------------------------------------------


def cellwise_condition4(f: ConeFunction, g: ConeFunction) -> bool:
    """Condition (4) of a 2-partition, reduced to single cells.

    Given conditions (1) and (2), a function ``q`` with ``d(0, q) > 1/64``
    keeping all four distances below ``1 + 1/128`` exists iff some cell has
    ``max(|f|, |g|) < 1 - 1/128``: restrict ``q`` to a cell where it exceeds
    ``1/64`` for one direction, and use a constant bump on such a cell for
    the other.
    """
    n = max(f.depth, g.depth)
    a, b = f.at_level(n), g.at_level(n)
    bound = 1 - Fraction(1, 128)
    return all(max(abs(a[x]), abs(b[x])) >= bound for x in a)


def condition4_violated_by(f: ConeFunction, g: ConeFunction, q: ConeFunction) -> bool:
    """Direct falsifier: does this particular ``q`` violate condition (4)?"""
    if q.norm() <= Fraction(1, 64):
        return False
    limit = 1 + Fraction(1, 128)
    return all((h + s).norm() < limit for h in (f, g) for s in (q, -q))


def violating_bump(f: ConeFunction, g: ConeFunction) -> ConeFunction | None:
    """A single-cell bump violating condition (4), if the cell criterion fails."""
    n = max(f.depth, g.depth)
    a, b = f.at_level(n), g.at_level(n)
    for x in sorted(a):
        worst = max(abs(a[x]), abs(b[x]))
        if worst < 1 - Fraction(1, 128):
            t = (Fraction(1, 64) + (1 - Fraction(1, 128) - worst) / 2)
            return ConeFunction.of(f.tree, {y: t if y == x else 0 for y in a})
    return None


def is_two_partition(f: ConeFunction, g: ConeFunction, p1_fn: ConeFunction | None = None) -> bool:
    one = p1(f.tree) if p1_fn is None else p1_fn
    if f.norm() > 1 or g.norm() > 1:
        return False
    if sup_distance(one, f) > 1 or sup_distance(one, g) > 1:
        return False
    if sup_distance(one, f + g) > SLACK:
        return False
    return cellwise_condition4(f, g)


# -- partitions of unity ----------------------------------------------------------


def _matrix(fns: Sequence[ConeFunction], n: int) -> tuple[list[str], list[list[Fraction]]]:
    cells = sorted(fns[0].tree.level(n)) if fns else []
    return cells, [[fn.at_level(n)[x] for x in cells] for fn in fns]


def _scaled(rows: list[list[Fraction]], extra: Sequence[Fraction]) -> tuple[np.ndarray, int]:
    dens = [v.denominator for row in rows for v in row] + [v.denominator for v in extra]
    scale = math.lcm(*dens) if dens else 1
    ints = [[int(v * scale) for v in row] for row in rows]
    big = max([abs(x) for row in ints for x in row] + [scale], default=1) * (len(rows) + 2)
    dtype = np.int64 if big < 2**62 else object
    return np.array(ints, dtype=dtype).reshape(len(rows), -1), scale


def all_splittings_are_partitions(h: Sequence[ConeFunction], p1_value: Fraction = P1_VALUE) -> bool:
    """Condition (1): every split of ``h`` into two sums is a 2-partition."""
    if not h:
        return False
    n = max(fn.depth for fn in h)
    _, rows = _matrix(h, n)
    consts = [p1_value, 1 - Fraction(1, 128), SLACK]
    vals, scale = _scaled(rows, consts)
    k = len(h)
    masks = (np.arange(2**k, dtype=np.int64)[:, None] >> np.arange(k)) & 1
    lam = masks.astype(vals.dtype) @ vals
    total = vals.sum(axis=0)
    gam = total[None, :] - lam
    one = int(p1_value * scale)
    if np.abs(one - total).max() > int(SLACK * scale):
        return False
    for side in (lam, gam):
        if np.abs(side).max() > scale or np.abs(one - side).max() > scale:
            return False
    # scale is a multiple of 128, so the bound is an exact integer
    bound = int((1 - Fraction(1, 128)) * scale)
    return bool((np.maximum(np.abs(lam), np.abs(gam)) >= bound).all())


def refines_partition_of_unity(
    h: Sequence[ConeFunction],
    f: Sequence[ConeFunction],
    g1: ConeFunction,
    g2: ConeFunction,
) -> bool:
    """``h = (h_1', h_1'', ..., h_n', h_n'')`` refines ``f`` by ``(g1, g2)``."""
    return refinement_distances_ok(h, f, g1, g2) and all_splittings_are_partitions(h)


def refinement_distances_ok(
    h: Sequence[ConeFunction],
    f: Sequence[ConeFunction],
    g1: ConeFunction,
    g2: ConeFunction,
) -> bool:
    """Conditions (2) and (3) of a refining partition of unity."""
    if len(h) != 2 * len(f):
        raise DomainError("need two refining functions per indicator")
    quarter = Fraction(1, 4)
    for i, fi in enumerate(f):
        if sup_distance(fi, h[2 * i] + h[2 * i + 1]) > quarter:
            return False
    tree = g1.tree
    primed = sum(h[0::2], zero(tree))
    doubled = sum(h[1::2], zero(tree))
    return sup_distance(g1, primed) <= quarter and sup_distance(g2, doubled) <= quarter


def construct_refinement(
    f: Sequence[ConeFunction], g: Sequence[ConeFunction], q: ConeFunction, r: ConeFunction
) -> list[ConeFunction]:
    """Refinement of atoms ``f`` (At) and ``g`` (not At) by the 2-partition ``(q, r)``.

    Each part is ``1 - 2 eps`` on its support and ``eps / (4N)`` elsewhere,
    with ``eps = 1/512`` and ``N`` the number of atoms.  Output order is
    ``f_1', f_1'', ..., g_1', g_1'', ...``.
    """
    if not is_two_partition(q, r):
        raise PreconditionError("(q, r) is not a 2-partition")
    atoms = list(f) + list(g)
    if not atoms:
        raise PreconditionError("no atoms to refine")
    tree = q.tree
    n = max(fn.depth for fn in atoms + [q, r])
    low = EPSILON / (4 * len(atoms))
    high = 1 - 2 * EPSILON
    xq, xr = support_cells(q, n), support_cells(r, n)
    out = []
    for a in atoms:
        xa = support_cells(a, n)
        for side in (xq, xr):
            part = xa & side
            vals = tuple((x, high if x in part else low) for x in sorted(tree.level(n)))
            out.append(ConeFunction._unchecked(tree, vals))
    return out


# -- splits ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitVerdict:
    splits: bool
    g: ConeFunction | None = None
    h: ConeFunction | None = None


def splits_witness_ok(f: ConeFunction, g: ConeFunction, h: ConeFunction) -> bool:
    """Conditions (1)-(3) of the splitting definition, checked exactly."""
    one = p1(f.tree)
    if not (sup_distance(one, g) < 1 and sup_distance(one, h) < 1):
        return False
    if not (HIGH < g.norm() < 1 and HIGH < h.norm() < 1):
        return False
    return sup_distance(f, g + h) < SLACK


def splits(f: ConeFunction) -> SplitVerdict:
    """Whether the indicator ``f`` splits, with a witness pair when it does.

    ``X_f`` is cut into two nonempty clopen pieces ``A`` and ``B``.  On ``A``
    the witness ``g`` follows ``f`` capped at ``63/64`` and ``h`` is
    ``1/128`` plus any excess of ``f`` over 1; on ``B`` the roles swap;
    off ``X_f`` both are half of ``max(f, -1/64)``.
    """
    info = indicator_info(f)
    if not info.is_indicator or info.trivial or info.support.point_count() < 2:
        return SplitVerdict(False)
    tree = f.tree
    n = f.depth
    cells = sorted(support_cells(f, n))
    if len(cells) == 1:
        n += 1
        cells = sorted(tree.level(n, cells[0]))
    a_cell = cells[0]
    vals = f.at_level(n)
    cap, tip = Fraction(63, 64), Fraction(1, 128)
    gv, hv = {}, {}
    for x, v in vals.items():
        if x in cells:
            big, small = min(v, cap), tip + max(Fraction(0), v - 1)
            gv[x], hv[x] = (big, small) if x == a_cell else (small, big)
        else:
            gv[x] = hv[x] = max(v, -Fraction(1, 64)) / 2
    g, h = ConeFunction.of(tree, gv), ConeFunction.of(tree, hv)
    if not splits_witness_ok(f, g, h):
        raise AssertionError("splitting witness failed its own check")
    return SplitVerdict(True, g, h)


# -- dense span presentation -----------------------------------------------------------


def signed_calkin_wilf(n: int) -> Fraction:
    """0, 1, -1, 1/2, -1/2, 2, -2, 1/3, ... : every rational exactly once."""
    if n == 0:
        return Fraction(0)
    j = (n + 1) // 2
    value = Fraction(_fusc(j), _fusc(j + 1))
    return value if n % 2 else -value


def _fusc(n: int) -> int:
    a, b = 1, 0
    while n:
        if n & 1:
            b += a
        else:
            a += b
        n >>= 1
    return b


def calkin_wilf_index(q: Fraction) -> int:
    """Inverse of :func:`signed_calkin_wilf`."""
    if q == 0:
        return 0
    p, r = abs(q.numerator), q.denominator
    bits = []
    while (p, r) != (1, 1):
        if p < r:
            r -= p
            bits.append(0)
        else:
            p -= r
            bits.append(1)
    j = 1
    for bit in reversed(bits):
        j = 2 * j + bit
    return 2 * j - 1 if q > 0 else 2 * j


def cantor_pair(a: int, b: int) -> int:
    return (a + b) * (a + b + 1) // 2 + b


def cantor_unpair(z: int) -> tuple[int, int]:
    w = (math.isqrt(8 * z + 1) - 1) // 2
    b = z - w * (w + 1) // 2
    return w - b, b


def _unpair_tuple(z: int, k: int) -> list[int]:
    out = []
    for _ in range(k - 1):
        a, z = cantor_unpair(z)
        out.append(a)
    out.append(z)
    return out


def _pair_tuple(xs: Sequence[int]) -> int:
    z = xs[-1]
    for a in reversed(xs[:-1]):
        z = cantor_pair(a, z)
    return z


class DenseSpanPresentation:
    """Computable Banach presentation: rational combinations of cell indicators.

    Index 0 is the zero function.  Then come the indicators of the cones of
    the tree in breadth-first order (the root first, giving the constant 1),
    each followed by the indicator of its complement, then the indicators of
    every other clopen set made of level-``depth`` cells.  After that the
    enumeration lists every rational vector over the cells.
    """

    def __init__(self, tree: TaggedShapeTree, depth: int | None = None):
        self.tree = tree
        self.depth = tree.depth if depth is None else depth
        if self.depth < tree.depth:
            raise DomainError("presentation depth must reach the tree depth")
        self.cells = tuple(sorted(tree.level(self.depth)))
        k = len(self.cells)
        seen: set[int] = set()
        order: list[int] = []

        def push(mask: int) -> None:
            if mask and mask not in seen:
                seen.add(mask)
                order.append(mask)

        nodes = sorted({x[:j] for x in self.cells for j in range(self.depth + 1)}, key=lambda s: (len(s), s))
        full = (1 << k) - 1
        for node in nodes:
            mask = sum(1 << i for i, x in enumerate(self.cells) if x.startswith(node))
            push(mask)
            push(full & ~mask)
        for mask in range(1, full + 1):
            push(mask)
        self.indicator_masks = tuple(order)
        self._mask_index = {m: i + 1 for i, m in enumerate(order)}
        self.tail_start = len(order) + 1

    def vector(self, n: int) -> tuple[Fraction, ...]:
        if n < 0:
            raise DomainError("negative index")
        k = len(self.cells)
        if n == 0:
            return (Fraction(0),) * k
        if n < self.tail_start:
            mask = self.indicator_masks[n - 1]
            return tuple(Fraction(mask >> i & 1) for i in range(k))
        return tuple(signed_calkin_wilf(c) for c in _unpair_tuple(n - self.tail_start, k))

    def point(self, n: int) -> ConeFunction:
        return ConeFunction._unchecked(self.tree, tuple(zip(self.cells, self.vector(n))))

    def index_of(self, f: ConeFunction) -> int:
        vals = f.at_level(self.depth)
        vec = tuple(vals[x] for x in self.cells)
        if all(v == 0 for v in vec):
            return 0
        if all(v in (0, 1) for v in vec):
            return self._mask_index[sum(1 << i for i, v in enumerate(vec) if v == 1)]
        return self.tail_start + _pair_tuple([calkin_wilf_index(v) for v in vec])

    def dist(self, m: int, n: int) -> Fraction:
        return sup_distance(self.point(m), self.point(n))

    def add(self, m: int, n: int) -> int:
        return self.index_of(self.point(m) + self.point(n))

    @property
    def p0(self) -> ConeFunction:
        return zero(self.tree)

    @property
    def p1(self) -> ConeFunction:
        return p1(self.tree)


def dense_span_enumerate(tree: TaggedShapeTree, n: int, depth: int | None = None) -> ConeFunction:
    return DenseSpanPresentation(tree, depth).point(n)


# -- the stage construction ---------------------------------------------------------------


@dataclass
class StageAlgebra:
    atoms: list[ConeFunction]
    labels: list[bool]
    incomplete: bool = False
    stage: int = 0

    def supports(self) -> list[ClopenSet]:
        return [indicator_info(a).support for a in self.atoms]

    def algebra(self) -> FiniteBooleanAlgebra:
        return FiniteBooleanAlgebra(tuple(self.supports()), tuple(self.labels))


def fair_pairs(limit: int) -> Iterator[tuple[int, int]]:
    """Pairs of indices in Cantor order: stage ``s`` handles ``unpair(s)``."""
    for s in range(limit):
        yield cantor_unpair(s)


def _run_stages(pres: DenseSpanPresentation, budget: int, checkpoints: Sequence[int]) -> dict[int, StageAlgebra]:
    tree = pres.tree
    one = pres.p1
    split_cache: dict[tuple, bool] = {}

    def atom_label(f: ConeFunction) -> bool:
        key = tuple(sorted(f.values))
        if key not in split_cache:
            split_cache[key] = not splits(f).splits
        return split_cache[key]

    state = StageAlgebra([one], [atom_label(one)])
    masks: dict[int, frozenset[str] | None] = {}
    pou_cache: dict[tuple, bool] = {}
    everything = frozenset(pres.cells)
    out = {}

    def support_of(i: int) -> frozenset[str] | None:
        # None marks a non-indicator; used as a quick filter only
        if i not in masks:
            vec = pres.vector(i)
            if all(-SLACK <= v <= 1 + SLACK and (v < LOW or v > HIGH) for v in vec):
                masks[i] = frozenset(x for x, v in zip(pres.cells, vec) if v > HIGH)
            else:
                masks[i] = None
        return masks[i]

    def snapshot(s: int) -> StageAlgebra:
        return StageAlgebra(list(state.atoms), list(state.labels), state.incomplete, s)

    if 0 in checkpoints:
        out[0] = snapshot(0)
    for s, (a, b) in enumerate(fair_pairs(budget), 1):
        xa, xb = support_of(a), support_of(b)
        if not (xa is None or xb is None or xa & xb or xa | xb != everything):
            q, r = pres.point(a), pres.point(b)
            if is_two_partition(q, r, one):
                fs = [x for x, lab in zip(state.atoms, state.labels) if lab]
                gs = [x for x, lab in zip(state.atoms, state.labels) if not lab]
                h = construct_refinement(fs, gs, q, r)
                key = tuple(sorted(tuple(sorted(fn.values)) for fn in h))
                if key not in pou_cache:
                    pou_cache[key] = all_splittings_are_partitions(h)
                if pou_cache[key] and refinement_distances_ok(h, fs + gs, q, r):
                    atoms, labels = list(fs), [True] * len(fs)
                    for part in h[2 * len(fs):]:
                        if indicator_info(part).trivial:
                            continue
                        atoms.append(part)
                        labels.append(atom_label(part))
                    state = StageAlgebra(atoms, labels, state.incomplete, s)
                else:
                    state.incomplete = True
        if s in checkpoints:
            out[s] = snapshot(s)
    return out


def delta2_reconstruct(pres: DenseSpanPresentation, budget: int) -> StageAlgebra:
    """Run ``budget`` stages of the reconstruction over a dense-span presentation."""
    if budget < 0:
        raise DomainError("budget must be nonnegative")
    return _run_stages(pres, budget, (budget,))[budget]


def stabilized_reconstruct(pres: DenseSpanPresentation, budget: int) -> tuple[StageAlgebra, bool]:
    """Reconstruct at ``budget`` and ``2 * budget``; report whether the atom sets agree."""
    if budget < 0:
        raise DomainError("budget must be nonnegative")
    states = _run_stages(pres, 2 * budget, (budget, 2 * budget))
    first, second = states[budget], states[2 * budget]
    return second, _atom_key(first) == _atom_key(second)


def _atom_key(state: StageAlgebra) -> list:
    return sorted(zip((c.cones for c in state.supports()), state.labels))


def default_budget(pres: DenseSpanPresentation) -> int:
    """Enough stages for every pair of cone indicators to be visited."""
    nodes = 2 * len({x[:j] for x in pres.cells for j in range(pres.depth + 1)}) + 1
    return cantor_pair(nodes, nodes) + 1
