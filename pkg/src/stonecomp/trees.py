"""Finite tagged binary trees presenting Stone spaces, and their clopen algebras.

A :class:`TaggedShapeTree` is a finite prefix-closed set of binary strings whose
leaves carry a tag.  An ``atom`` leaf ``s`` stands for the single path ``s0^w``;
a ``cantor`` leaf stands for the whole binary cone below it.  The *pruned tree*
``T`` presented this way is infinite, and every predicate about it is
decidable by looking at finitely many levels.

Strings are plain ``str`` objects over ``"0"``/``"1"``; the root is ``""``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import DomainError, ParseError

ATOM = "atom"
CANTOR = "cantor"
_TAGS = (ATOM, CANTOR)


def is_prefix(a: str, b: str) -> bool:
    return b.startswith(a)


def comparable(a: str, b: str) -> bool:
    return a.startswith(b) or b.startswith(a)


def check_bits(s: str) -> str:
    if any(c not in "01" for c in s):
        raise DomainError(f"not a binary string: {s!r}")
    return s


def all_strings(max_len: int) -> Iterator[str]:
    """All binary strings of length <= max_len in length-lexicographic order."""
    for n in range(max_len + 1):
        for bits in itertools.product("01", repeat=n):
            yield "".join(bits)


def string_at(index: int) -> str:
    """The ``index``-th binary string in length-lexicographic order."""
    n = (index + 1).bit_length() - 1
    offset = index + 1 - (1 << n)
    return format(offset, "b").zfill(n) if n else ""


@dataclass(frozen=True)
class TaggedShapeTree:
    leaves: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        if not self.leaves:
            raise DomainError("a tree needs at least one leaf")
        seen = [b for b, _ in self.leaves]
        for b, tag in self.leaves:
            check_bits(b)
            if tag not in _TAGS:
                raise DomainError(f"unknown tag {tag!r}")
        for a, b in itertools.combinations(seen, 2):
            if comparable(a, b):
                raise DomainError(f"leaves {a!r} and {b!r} are comparable")
        object.__setattr__(self, "leaves", tuple(sorted(self.leaves, key=lambda p: (len(p[0]), p[0]))))

    @classmethod
    def from_leaves(cls, tags: Mapping[str, str]) -> "TaggedShapeTree":
        return cls(tuple(tags.items()))

    @classmethod
    def full(cls, depth: int, tag: str = CANTOR) -> "TaggedShapeTree":
        return cls.from_leaves({s: tag for s in all_strings(depth) if len(s) == depth})

    # -- structure -------------------------------------------------------

    @cached_property
    def leaf_tag(self) -> dict[str, str]:
        return dict(self.leaves)

    @cached_property
    def nodes(self) -> frozenset[str]:
        return frozenset(b[:k] for b, _ in self.leaves for k in range(len(b) + 1))

    @cached_property
    def depth(self) -> int:
        return max(len(b) for b, _ in self.leaves)

    def leaf_above(self, s: str) -> str | None:
        """The leaf that is a prefix of ``s``, if any."""
        for k in range(min(len(s), self.depth) + 1):
            if s[:k] in self.leaf_tag:
                return s[:k]
        return None

    def contains(self, s: str) -> bool:
        """Membership of ``s`` in the (infinite) pruned tree presented."""
        if s in self.nodes:
            return True
        leaf = self.leaf_above(s)
        if leaf is None:
            return False
        if self.leaf_tag[leaf] == CANTOR:
            return True
        return set(s[len(leaf):]) <= {"0"}

    def children(self, s: str) -> list[str]:
        return [s + b for b in "01" if self.contains(s + b)]

    @cached_property
    def _levels(self) -> dict[tuple[int, str], tuple[str, ...]]:
        return {}

    def level(self, n: int, below: str = "") -> list[str]:
        """Strings of length ``n`` in the pruned tree extending ``below``."""
        key = (n, below)
        if key not in self._levels:
            out = [below] if len(below) <= n and self.contains(below) else []
            for _ in range(n - len(below)):
                out = [c for s in out for c in self.children(s)]
            self._levels[key] = tuple(out)
        return list(self._levels[key])

    def is_atom_string(self, s: str) -> bool:
        """True when ``s`` lies at or below an ``atom`` leaf."""
        leaf = self.leaf_above(s)
        return leaf is not None and self.leaf_tag[leaf] == ATOM and self.contains(s)

    def uniform(self, depth: int) -> "TaggedShapeTree":
        """Same space, with every leaf pushed down to exactly ``depth``."""
        if depth < self.depth:
            raise DomainError(f"cannot flatten a depth-{self.depth} tree to depth {depth}")
        return TaggedShapeTree.from_leaves(
            {s: ATOM if self.is_atom_string(s) else CANTOR for s in self.level(depth)}
        )

    def same_space(self, other: "TaggedShapeTree") -> bool:
        d = max(self.depth, other.depth)
        return self.uniform(d) == other.uniform(d)

    def atom_paths(self) -> list[str]:
        """Strings ``s`` whose path ``s0^w`` is an isolated point."""
        return [b for b, t in self.leaves if t == ATOM]

    def complement_cones(self, max_len: int) -> list[str]:
        """Minimal strings of length <= max_len outside the pruned tree."""
        out = []
        for s in all_strings(max_len):
            if not self.contains(s) and (s == "" or self.contains(s[:-1])):
                out.append(s)
        return out


# -- clopen sets ---------------------------------------------------------


@dataclass(frozen=True)
class ClopenSet:
    """A clopen subset of ``[T]`` in canonical antichain form."""

    tree: TaggedShapeTree
    cones: tuple[str, ...]

    def level_for(self, extra: Iterable[str] = ()) -> int:
        return max([self.tree.depth, *map(len, self.cones), *map(len, extra)])

    def cells(self, n: int | None = None) -> frozenset[str]:
        """Level-``n`` strings of the pruned tree lying in this set."""
        n = self.level_for() if n is None else n
        return frozenset(x for c in self.cones for x in self.tree.level(n, c))

    @property
    def is_empty(self) -> bool:
        return not self.cones

    @property
    def is_whole(self) -> bool:
        return self.cones == ("",)

    def __contains__(self, path: str) -> bool:
        """Membership of the point ``path0^w`` (``path`` must lie in the tree)."""
        padded = path + "0" * max(0, max(map(len, self.cones), default=0) - len(path))
        return any(padded.startswith(c) for c in self.cones)

    def same_paths(self, other: "ClopenSet") -> bool:
        n = max(self.level_for(), other.level_for())
        return self.cells(n) == other.cells(n)

    def point_count(self) -> int | float:
        """Number of points, with ``inf`` for sets meeting a cantor cone."""
        cells = self.cells()
        if any(not self.tree.is_atom_string(x) for x in cells):
            return float("inf")
        return len(cells)

    def __or__(self, other: "ClopenSet") -> "ClopenSet":
        return boolean_combine(self, other, "union", self.tree)

    def __and__(self, other: "ClopenSet") -> "ClopenSet":
        return boolean_combine(self, other, "intersect", self.tree)

    def __invert__(self) -> "ClopenSet":
        return complement(self)

    def __str__(self) -> str:
        return "{" + ", ".join(c or "-" for c in self.cones) + "}"


def _canonical(tree: TaggedShapeTree, cells: frozenset[str], n: int, s: str = "") -> list[str]:
    under = tree.level(n, s)
    if not under:
        return []
    inside = [x in cells for x in under]
    if all(inside):
        return [s]
    if not any(inside):
        return []
    return [c for child in tree.children(s) for c in _canonical(tree, cells, n, child)]


def from_cells(tree: TaggedShapeTree, cells: Iterable[str], n: int | None = None) -> ClopenSet:
    cells = frozenset(cells)
    if n is None:
        n = max([tree.depth, *map(len, cells)])
    return ClopenSet(tree, tuple(_canonical(tree, cells, n)))


def canonicalize(antichain: Iterable[str], tree: TaggedShapeTree) -> ClopenSet:
    """Canonical clopen set denoted by a finite set of tree strings."""
    strings = list(antichain)
    for s in strings:
        check_bits(s)
        if not tree.contains(s):
            raise DomainError(f"{s!r} is not a node of the tree")
    n = max([tree.depth, *map(len, strings)])
    return from_cells(tree, (x for s in strings for x in tree.level(n, s)), n)


def empty(tree: TaggedShapeTree) -> ClopenSet:
    return ClopenSet(tree, ())


def whole(tree: TaggedShapeTree) -> ClopenSet:
    return ClopenSet(tree, ("",))


def complement(a: ClopenSet) -> ClopenSet:
    n = a.level_for()
    return from_cells(a.tree, set(a.tree.level(n)) - a.cells(n), n)


def boolean_combine(a: ClopenSet, b: ClopenSet, op: str, tree: TaggedShapeTree) -> ClopenSet:
    if a.tree != tree or b.tree != tree:
        raise DomainError("clopen sets over different ambient trees")
    n = max(a.level_for(), b.level_for())
    ca, cb = a.cells(n), b.cells(n)
    if op == "union":
        cells = ca | cb
    elif op == "intersect":
        cells = ca & cb
    elif op == "complement":
        cells = set(tree.level(n)) - ca
    else:
        raise DomainError(f"unknown operation {op!r}")
    return from_cells(tree, cells, n)


def cones_equal(s: Sequence[str], t: Sequence[str], tree: TaggedShapeTree) -> bool:
    """Whether two finite tuples of strings go through the same paths.

    Both sides are pushed down to the longest string length and the resulting
    level sets compared; distinct strings of one level have disjoint,
    nonempty path sets, so this decides equality.
    """
    strings = [*s, *t]
    for x in strings:
        if not tree.contains(x):
            raise DomainError(f"{x!r} is not a node of the tree")
    n = max(map(len, strings), default=0)
    left = {x for a in s for x in tree.level(n, a)}
    right = {x for b in t for x in tree.level(n, b)}
    return left == right


def is_atom_cell(c: ClopenSet, tree: TaggedShapeTree) -> bool:
    return c.point_count() == 1


# -- the finite algebra -----------------------------------------------------


@dataclass(frozen=True)
class FiniteBooleanAlgebra:
    """Finite algebra given by its atoms; elements are bitmasks over them."""

    atom_cells: tuple[ClopenSet, ...]
    atom_label: tuple[bool, ...]

    @property
    def n_atoms(self) -> int:
        return len(self.atom_cells)

    @property
    def size(self) -> int:
        return 1 << self.n_atoms

    @property
    def top(self) -> int:
        return self.size - 1

    @property
    def labeled_atoms(self) -> int:
        return sum(self.atom_label)

    def elements(self) -> range:
        return range(self.size)

    def element(self, mask: int) -> ClopenSet:
        if not self.atom_cells:
            raise DomainError("the algebra has no atoms")
        tree = self.atom_cells[0].tree
        n = max(c.level_for() for c in self.atom_cells)
        cells = {x for i, c in enumerate(self.atom_cells) if mask >> i & 1 for x in c.cells(n)}
        return from_cells(tree, cells, n)

    def join(self, a: int, b: int) -> int:
        return a | b

    def meet(self, a: int, b: int) -> int:
        return a & b

    def complement(self, a: int) -> int:
        return self.top & ~a

    def locate(self, c: ClopenSet) -> int | None:
        """Mask of the element equal to ``c`` as a path set, if any."""
        n = max([c.level_for(), *(a.level_for() for a in self.atom_cells)])
        target = c.cells(n)
        mask, covered = 0, set()
        for i, a in enumerate(self.atom_cells):
            cells = a.cells(n)
            if cells <= target:
                mask |= 1 << i
                covered |= cells
            elif cells & target:
                return None
        return mask if covered == target else None


def clopen_algebra(tree: TaggedShapeTree) -> FiniteBooleanAlgebra:
    cells = tuple(canonicalize([leaf], tree) for leaf, _ in tree.leaves)
    return FiniteBooleanAlgebra(cells, tuple(is_atom_cell(c, tree) for c in cells))


def is_partition(cells: Sequence[ClopenSet], tree: TaggedShapeTree) -> bool:
    n = max([tree.depth, *(c.level_for() for c in cells)])
    seen: set[str] = set()
    for c in cells:
        here = c.cells(n)
        if not here or here & seen:
            return False
        seen |= here
    return seen == set(tree.level(n))


def find_isomorphism(a: FiniteBooleanAlgebra, b: FiniteBooleanAlgebra) -> tuple[int, ...] | None:
    """Label-preserving bijection between atoms, found by brute force.

    Returns ``perm`` with atom ``i`` of ``a`` sent to atom ``perm[i]`` of
    ``b``; the induced map on elements is then checked against every
    Boolean law before being returned.
    """
    if a.n_atoms != b.n_atoms:
        return None
    for perm in itertools.permutations(range(b.n_atoms)):
        if all(a.atom_label[i] == b.atom_label[perm[i]] for i in range(a.n_atoms)):
            if is_homomorphism(a, b, lambda m, p=perm: map_mask(m, p)):
                return perm
    return None


def map_mask(mask: int, perm: Sequence[int]) -> int:
    return sum(1 << perm[i] for i in range(len(perm)) if mask >> i & 1)


def is_homomorphism(a: FiniteBooleanAlgebra, b: FiniteBooleanAlgebra, g) -> bool:
    """Exhaustively check that ``g`` preserves 0, 1, joins, meets, complements
    and is a bijection."""
    table = np.array([g(x) for x in a.elements()], dtype=np.int64)
    if table[0] != 0 or table[a.top] != b.top:
        return False
    if a.size != b.size or len(set(table.tolist())) != a.size:
        return False
    xs = np.arange(a.size, dtype=np.int64)
    if not (table[a.top ^ xs] == b.top ^ table).all():
        return False
    joins = table[xs[:, None] | xs[None, :]] == (table[:, None] | table[None, :])
    meets = table[xs[:, None] & xs[None, :]] == (table[:, None] & table[None, :])
    return bool(joins.all() and meets.all())


# -- text format -------------------------------------------------------------


def parse_tree(text: str) -> TaggedShapeTree:
    nodes: dict[str, int] = {}
    tags: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "node" and len(parts) == 2:
            bits = _parse_bits(parts[1], lineno)
            nodes[bits] = lineno
        elif kind == "leaf" and len(parts) == 3:
            bits = _parse_bits(parts[1], lineno)
            if parts[2] not in _TAGS:
                raise ParseError(f"unknown tag {parts[2]!r}", lineno)
            if bits in tags:
                raise ParseError(f"duplicate leaf {parts[1]}", lineno)
            tags[bits] = parts[2]
        else:
            raise ParseError(f"cannot parse {line!r}", lineno)
    if not tags:
        raise ParseError("no leaves")
    try:
        tree = TaggedShapeTree.from_leaves(tags)
    except DomainError as exc:
        raise ParseError(str(exc)) from exc
    internal = tree.nodes - set(tags)
    for bits, lineno in nodes.items():
        if bits not in internal:
            raise ParseError(f"node {bits or '-'} is not an ancestor of any leaf", lineno)
    missing = sorted(internal - set(nodes), key=lambda s: (len(s), s))
    if missing:
        raise ParseError(f"missing node line for {missing[0] or '-'}")
    return tree


def _parse_bits(token: str, lineno: int) -> str:
    bits = "" if token == "-" else token
    if any(c not in "01" for c in bits):
        raise ParseError(f"bad bit string {token!r}", lineno)
    return bits


def format_tree(tree: TaggedShapeTree) -> str:
    lines = []
    for s in sorted(tree.nodes, key=lambda s: (len(s), s)):
        name = s or "-"
        if s in tree.leaf_tag:
            lines.append(f"leaf {name} {tree.leaf_tag[s]}")
        else:
            lines.append(f"node {name}")
    return "\n".join(lines) + "\n"


def enumerate_trees(max_depth: int, binary_only: bool = True) -> Iterator[TaggedShapeTree]:
    """Every tagged tree of depth <= max_depth.

    With ``binary_only`` the internal nodes all have two children, which
    already realizes every space up to the single-child padding.
    """

    def shapes(d: int, prefix: str) -> Iterator[dict[str, str]]:
        for tag in _TAGS:
            yield {prefix: tag}
        if d == 0:
            return
        for left in shapes(d - 1, prefix + "0"):
            for right in shapes(d - 1, prefix + "1"):
                yield {**left, **right}
        if not binary_only:
            for b in "01":
                yield from shapes(d - 1, prefix + b)

    for leaves in shapes(max_depth, ""):
        yield TaggedShapeTree.from_leaves(leaves)


def random_tree(max_depth: int, rng, binary_only: bool = False) -> TaggedShapeTree:
    """A random tagged tree of depth <= max_depth drawn with the generator ``rng``.

    Each node becomes a leaf with probability 1/3 (always at max_depth);
    otherwise it gets both children or, unless ``binary_only``, one of them.
    """
    leaves: dict[str, str] = {}

    def grow(prefix: str) -> None:
        if len(prefix) == max_depth or rng.random() < 1 / 3:
            leaves[prefix] = rng.choice(_TAGS)
            return
        kids = "01" if binary_only or rng.random() < 2 / 3 else rng.choice("01")
        for b in kids:
            grow(prefix + b)

    grow("")
    return TaggedShapeTree.from_leaves(leaves)
