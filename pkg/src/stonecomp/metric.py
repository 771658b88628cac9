"""Right-c.e. ultrametric presentation of the path space of a co-c.e. tree.

Special points are indexed by an initial segment of all binary strings; the
point ``i`` starts as the path ``sigma_i 0^w``.  Whenever a newly enumerated
complement cone swallows the current path of a point, the point is re-pointed
to the alive path nearest to it, so distance upper bounds only ever shrink.
Paths are stored as strings with trailing zeros stripped.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .coce import RemovalSchedule
from .errors import ConstructionError, DomainError
from .trees import all_strings, check_bits, is_prefix

ZERO = Fraction(0)


def strip_zeros(s: str) -> str:
    return s.rstrip("0")


def lcp_paths(x: str, y: str) -> int | None:
    """Length of the longest common prefix of ``x0^w`` and ``y0^w`` (None if equal)."""
    n = max(len(x), len(y))
    x, y = x.ljust(n, "0"), y.ljust(n, "0")
    for k in range(n):
        if x[k] != y[k]:
            return k
    return None


def ultrametric(x: str, y: str) -> Fraction:
    k = lcp_paths(check_bits(x), check_bits(y))
    return ZERO if k is None else Fraction(1, 2**k)


def kb_less(a: str, b: str) -> bool:
    """Kleene-Brouwer order: proper extensions first, then the smaller differing bit."""
    if a == b:
        return False
    if b.startswith(a):
        return False
    if a.startswith(b):
        return True
    k = next(i for i, (p, q) in enumerate(zip(a, b)) if p != q)
    return a[k] < b[k]


def ball_depth(radius: Fraction) -> int:
    """Least ``k`` with ``2^-k < radius``: an open ball of this radius is a depth-``k`` cone."""
    if radius <= 0:
        raise DomainError("radius must be positive")
    k = 0
    while Fraction(1, 2**k) >= radius:
        k += 1
    return k


def ball_cone(center_path: str, radius: Fraction) -> str:
    k = ball_depth(radius)
    return center_path.ljust(k, "0")[:k]


# -- cone arithmetic on finite sets of cones ---------------------------------


def _covered(x: str, cones: Sequence[str], horizon: int) -> bool:
    """Whether ``cone(x)`` lies inside the union of ``cones``."""
    if any(x.startswith(c) for c in cones):
        return True
    if len(x) >= horizon or not any(c.startswith(x) for c in cones):
        return False
    return _covered(x + "0", cones, horizon) and _covered(x + "1", cones, horizon)


def covered_by(x: str, cones: Sequence[str]) -> bool:
    return _covered(x, list(cones), max(map(len, cones), default=0))


def leftmost_alive(x: str, dead: Sequence[str]) -> str | None:
    """Leftmost path through ``x`` avoiding ``dead`` cones, as a stripped string."""
    dead = list(dead)
    if covered_by(x, dead):
        return None
    while any(c.startswith(x) and c != x for c in dead):
        x = x + "0" if not covered_by(x + "0", dead) else x + "1"
    return strip_zeros(x)


def nearest_alive(path: str, dead: Sequence[str]) -> str:
    """Alive path with the longest common prefix with ``path0^w``; leftmost among ties."""
    horizon = max([len(path)] + [len(c) for c in dead]) + 1
    padded = path.ljust(horizon, "0")
    if not any(padded.startswith(c) for c in dead):
        return strip_zeros(path)
    for k in range(horizon - 1, -1, -1):
        flip = padded[:k] + ("1" if padded[k] == "0" else "0")
        found = leftmost_alive(flip, dead)
        if found is not None:
            return found
    raise ConstructionError("no alive path remains; the tree is not pruned")


# -- presentation -----------------------------------------------------------


@dataclass(frozen=True)
class BasicBall:
    center: int
    radius: Fraction

    def __post_init__(self):
        object.__setattr__(self, "radius", Fraction(self.radius))
        if self.radius <= 0:
            raise DomainError("ball radius must be positive")


FinitaryName = tuple  # nonempty tuple of BasicBall


@dataclass(frozen=True)
class CoverRecord:
    name: tuple[BasicBall, ...]
    accepted_at: int


class Presentation:
    """The stage-by-stage history of special-point representatives."""

    def __init__(self, schedule: RemovalSchedule, n_points: int, order: Sequence[int] | None = None):
        if n_points < 1:
            raise DomainError("at least one special point is needed")
        self.schedule = schedule
        strings = list(itertools.islice(_length_lex(), n_points))
        if order is not None:
            if sorted(order) != list(range(n_points)):
                raise DomainError("order must be a permutation of the point indices")
            strings = [strings[k] for k in order]
        self.strings = tuple(strings)
        self.initial = tuple(strip_zeros(s) for s in strings)
        self.history: list[tuple[str, ...]] = [self._repoint(self.initial, 0)]
        self._limit: int | None = None

    @property
    def n_points(self) -> int:
        return len(self.initial)

    def _repoint(self, reps: tuple[str, ...], stage: int) -> tuple[str, ...]:
        dead = self.schedule.cones_by(stage)
        memo: dict[str, str] = {}
        out = []
        for r in reps:
            if r not in memo:
                padded_dead = any(r.ljust(len(c), "0").startswith(c) for c in dead)
                memo[r] = nearest_alive(r, dead) if padded_dead else r
            out.append(memo[r])
        return tuple(out)

    def reps(self, stage: int) -> tuple[str, ...]:
        if stage < 0:
            raise DomainError("negative stage")
        while len(self.history) <= stage:
            s = len(self.history)
            self.history.append(self._repoint(self.history[-1], s))
        return self.history[stage]

    @property
    def limit_stage(self) -> int:
        """A stage after which no representative changes again."""
        if self._limit is None:
            sched = self.schedule
            floor = max([t for t, _ in sched.announcements] + [sched.baseline.depth + 1])
            s = floor
            while s < max(len(r) for r in self.reps(s)):
                s += 1
            self._limit = s
        return self._limit

    def limit_reps(self) -> tuple[str, ...]:
        return self.reps(self.limit_stage)

    def index_of(self, s: str) -> int:
        try:
            return self.strings.index(check_bits(s))
        except ValueError:
            raise DomainError(f"no special point starts at {s!r}") from None


def _length_lex() -> Iterator[str]:
    n = 0
    while True:
        yield from ("".join(p) for p in itertools.product("01", repeat=n))
        n += 1


@dataclass(frozen=True)
class MetricState:
    presentation: Presentation
    stage: int = 0

    @property
    def rep(self) -> tuple[str, ...]:
        return self.presentation.reps(self.stage)


def new_metric(schedule: RemovalSchedule, n_points: int, order: Sequence[int] | None = None) -> MetricState:
    return MetricState(Presentation(schedule, n_points, order), 0)


def advance_stage(m: MetricState) -> MetricState:
    return MetricState(m.presentation, m.stage + 1)


def limit_state(m: MetricState) -> MetricState:
    return MetricState(m.presentation, max(m.stage, m.presentation.limit_stage))


def _check_index(m: MetricState, i: int) -> None:
    if not 0 <= i < m.presentation.n_points:
        raise DomainError(f"unknown point index {i}")


def distance_upper(m: MetricState, i: int, j: int, s: int) -> Fraction:
    _check_index(m, i)
    _check_index(m, j)
    if s > m.stage:
        raise DomainError(f"stage {s} is beyond the current stage {m.stage}")
    reps = m.presentation.reps(s)
    return ultrametric(reps[i], reps[j])


def exact_distance(m: MetricState, i: int, j: int) -> Fraction:
    _check_index(m, i)
    _check_index(m, j)
    reps = m.presentation.limit_reps()
    return ultrametric(reps[i], reps[j])


def cell_centers(reps: Sequence[str], depth: int) -> dict[str, int]:
    """Least point index for each depth-``depth`` prefix occupied by a representative."""
    out: dict[str, int] = {}
    for i, r in enumerate(reps):
        out.setdefault(r.ljust(depth, "0")[:depth], i)
    return dict(sorted(out.items()))


# -- covers -------------------------------------------------------------------


def name_cones(name: Sequence[BasicBall], reps: Sequence[str]) -> list[str]:
    return [ball_cone(reps[b.center], b.radius) for b in name]


def accepts_cover(m: MetricState, name: Sequence[BasicBall], s: int) -> bool:
    """Whether the balls cover every path still alive at stage ``s``."""
    if not name:
        return False
    for b in name:
        _check_index(m, b.center)
    reps = m.presentation.reps(s)
    cones = name_cones(name, reps) + m.presentation.schedule.cones_by(s)
    return covered_by("", cones)


def candidate_radii(size_bound: int) -> list[Fraction]:
    return [Fraction(2)] + [Fraction(1, 2**j) for j in range(size_bound + 1)]


def enumerate_covers(m: MetricState, s: int, size_bound: int) -> Iterator[CoverRecord]:
    """Covers of length <= size_bound with dyadic radii 2^-j, j <= size_bound.

    Tuples are generated as multisets of balls ordered by length, so the
    output is deterministic.
    """
    if s > m.stage:
        raise DomainError(f"stage {s} is beyond the current stage {m.stage}")
    balls = [BasicBall(i, r) for i in range(m.presentation.n_points) for r in candidate_radii(size_bound)]
    for length in range(1, size_bound + 1):
        for name in itertools.combinations(balls, length):
            if accepts_cover(m, name, s):
                yield CoverRecord(tuple(name), s)


# -- formal ball calculus -----------------------------------------------------


def intersection_witnesses(a: BasicBall, b: BasicBall, m: MetricState, budget: int) -> list[tuple[int, Fraction]]:
    """Pairs ``(k, t)`` with ``B(k, t)`` inside both balls, read from stage-``budget`` bounds."""
    reps = m.presentation.reps(budget)
    out = []
    for k in range(m.presentation.n_points):
        da = ultrametric(reps[a.center], reps[k])
        db = ultrametric(reps[b.center], reps[k])
        for j in range(budget + 1):
            t = Fraction(1, 2**j)
            if da < a.radius - t and db < b.radius - t:
                out.append((k, t))
    return out


def formally_disjoint(u: Sequence[BasicBall], v: Sequence[BasicBall], m: MetricState) -> bool:
    reps = m.presentation.limit_reps()
    return all(
        ultrametric(reps[b.center], reps[c.center]) > b.radius + c.radius for b in u for c in v
    )


def formally_included(u: Sequence[BasicBall], v: Sequence[BasicBall], m: MetricState) -> bool:
    reps = m.presentation.limit_reps()
    return all(
        any(ultrametric(reps[c.center], reps[b.center]) + b.radius < c.radius for c in v) for b in u
    )


def ball_points(ball: BasicBall, m: MetricState, depth: int) -> set[str]:
    """Depth-``depth`` cells of the limit space meeting the limit ball (cell oracle)."""
    reps = m.presentation.limit_reps()
    cone = ball_cone(reps[ball.center], ball.radius)
    sched = m.presentation.schedule
    return {
        x
        for x in all_strings(depth)
        if len(x) == depth and sched.baseline.contains(x) and (is_prefix(cone, x) or is_prefix(x, cone))
    }


# -- dumps ----------------------------------------------------------------------


def format_dyadic(q: Fraction) -> str:
    if q == 0:
        return "0/2^0"
    den = q.denominator
    if den & (den - 1):
        raise DomainError(f"{q} is not dyadic")
    return f"{q.numerator}/2^{den.bit_length() - 1}"


def dump_distances(m: MetricState, stages: Sequence[int]) -> list[str]:
    n = m.presentation.n_points
    lines = []
    for s in stages:
        for i in range(n):
            for j in range(i + 1, n):
                lines.append(f"d {i} {j} {s} {format_dyadic(distance_upper(m, i, j, s))}")
    return lines


def format_cover(c: CoverRecord) -> str:
    balls = " ".join(f"({b.center},{b.radius.numerator}/{b.radius.denominator})" for b in c.name)
    return f"cover@{c.accepted_at}: {balls}"
