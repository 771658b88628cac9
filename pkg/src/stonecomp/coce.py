"""Stagewise approximations of a co-c.e. pruned tree.

The complement of the limit tree is enumerated as cones.  Explicit removals
are read from a schedule (``remove 1 at 3``); when a baseline tree is
promised, its remaining complement cones are announced "just in time", at the
stage equal to their length, so they never enter any stage tree.

Stage trees obey two rules: a string present at stage ``s`` has length at
most ``s``, and at most one string leaves per stage.  Strings of a freshly
announced cone that are already present are queued and removed one per stage,
deepest first, so every stage tree stays prefix-closed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

from .errors import ParseError, ScheduleError
from .trees import (
    CANTOR,
    TaggedShapeTree,
    all_strings,
    check_bits,
    is_prefix,
    parse_tree,
    format_tree,
)

IN, OUT, PENDING = "in", "out", "pending"


def baseline_cones(tree: TaggedShapeTree, max_len: int) -> list[str]:
    """Minimal strings of length <= max_len outside the pruned tree, ordered by
    length then lexicographically."""
    out = []
    for x in tree.nodes:
        if x in tree.leaf_tag:
            continue
        kids = [x + b for b in "01" if x + b in tree.nodes]
        if len(kids) == 1:
            missing = x + ("1" if kids[0].endswith("0") else "0")
            if len(missing) <= max_len:
                out.append(missing)
    for leaf in tree.atom_paths():
        for k in range(max_len - len(leaf)):
            out.append(leaf + "0" * k + "1")
    return sorted(out, key=lambda s: (len(s), s))


def _pruned_limit(cones: list[str]) -> TaggedShapeTree:
    depth = max(map(len, cones), default=0)

    def dead(s: str) -> bool:
        return any(s.startswith(c) for c in cones)

    leaves = {s: CANTOR for s in all_strings(depth) if len(s) == depth and not dead(s)}
    if not leaves:
        raise ScheduleError("the schedule removes every path")
    tree = TaggedShapeTree.from_leaves(leaves)
    for s in all_strings(depth):
        if not dead(s) and not tree.contains(s):
            raise ScheduleError(f"limit tree is not pruned at {s or '-'}")
    return tree


def _extensions(c: str, max_len: int) -> list[str]:
    out, level = [], [c]
    while level and len(level[0]) <= max_len:
        out += level
        level = [x + b for x in level for b in "01"]
    return out


def _deepest_first(s: str) -> tuple[int, str]:
    return (-len(s), s)


@dataclass(frozen=True)
class RemovalSchedule:
    """Explicit cone announcements plus the promised limit tree.

    ``removals`` is the refined one-string-per-stage sequence of strings
    leaving the stage trees.
    """

    announcements: tuple[tuple[int, str], ...]
    baseline: TaggedShapeTree
    removals: tuple[tuple[int, str], ...] = ()
    auto: bool = True

    def explicit_by(self, s: int) -> list[str]:
        return [c for t, c in self.announcements if t <= s]

    def cones_by(self, s: int) -> list[str]:
        """Every cone of the complement enumerated by stage ``s``."""
        explicit = [c for _, c in self.announcements]
        out = self.explicit_by(s)
        if self.auto:
            out += [
                c
                for c in baseline_cones(self.baseline, s)
                if not any(is_prefix(e, c) for e in explicit)
            ]
        return out

    def is_dead(self, s: str, stage: int) -> bool:
        """Whether the string ``s`` lies in a cone enumerated by ``stage``."""
        return any(s.startswith(c) for c in self.cones_by(stage) if len(c) <= len(s))

    def path_dead(self, s: str, stage: int) -> bool:
        """Whether the path ``s0^w`` passes through a cone enumerated by ``stage``."""
        for c in self.cones_by(stage):
            padded = s + "0" * max(0, len(c) - len(s))
            if padded.startswith(c):
                return True
        return False

    @cached_property
    def last_event(self) -> int:
        """Stage after which no explicit announcement or queued removal happens."""
        stages = [t for t, _ in self.announcements] + [t for t, _ in self.removals]
        return max(stages, default=0)

    def to_text(self) -> str:
        lines = [f"remove {c or '-'} at {t}" for t, c in self.announcements]
        return "\n".join(lines) + "\n" + format_tree(self.baseline)


def refine_schedule(
    batches: Iterable[tuple[int, str]],
    baseline: TaggedShapeTree | None = None,
    auto: bool = True,
) -> RemovalSchedule:
    """Refine coarse cone batches into single-string removals.

    ``batches`` are ``(stage, cone)`` pairs.  A cone announced at stage ``t``
    removes, one per stage from ``t`` on, the strings of that cone already
    present in the stage-``t - 1`` tree; strings announced together are
    removed longest first, then lexicographically.
    """
    raw = sorted(((int(t), check_bits(c)) for t, c in batches), key=lambda p: (p[0], len(p[1]), p[1]))
    seen: set[str] = set()
    for t, c in raw:
        if t < 0:
            raise ScheduleError(f"negative stage for {c or '-'}")
        if c == "":
            raise ScheduleError("the root cannot be removed")
        if c in seen:
            raise ScheduleError(f"cone {c} is removed twice")
        seen.add(c)
    cones = [c for _, c in raw]
    if baseline is None:
        baseline = _pruned_limit(cones)
        auto = False
    for c in cones:
        if baseline.contains(c):
            raise ScheduleError(f"cone {c} meets the baseline tree")

    plain = RemovalSchedule(tuple(raw), baseline, (), auto)
    removals: list[tuple[int, str]] = []
    queue: list[str] = []
    queued: set[str] = set()
    stage = 0
    pending = list(raw)
    while pending or queue:
        batch = [c for t, c in pending if t <= stage]
        pending = [(t, c) for t, c in pending if t > stage]
        for c in batch:
            # strings of this cone present in the previous stage tree
            for x in _extensions(c, stage - 1):
                if x not in queued and not plain.is_dead(x, stage - 1):
                    queued.add(x)
                    queue.append(x)
        queue.sort(key=_deepest_first)
        if queue and stage > 0:
            removals.append((stage, queue.pop(0)))
        stage += 1
    return RemovalSchedule(tuple(raw), baseline, tuple(removals), auto)


@dataclass(frozen=True)
class StagewiseTree:
    schedule: RemovalSchedule
    current_stage: int = 0
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def current(self) -> frozenset[str]:
        return tree_at_stage(self, self.current_stage)

    def advance(self) -> "StagewiseTree":
        return StagewiseTree(self.schedule, self.current_stage + 1, self._cache)


def tree_at_stage(t: StagewiseTree, s: int, window: int | None = None) -> frozenset[str]:
    """The finite stage-``s`` tree, cut to strings of length <= ``window`` if given.

    The full stage tree can hold up to ``2^(s+1)`` strings.
    """
    if s < 0:
        raise ScheduleError("negative stage")
    top = s if window is None else min(s, window)
    if (s, top) in t._cache:
        return t._cache[s, top]
    sched = t.schedule
    removed = {x for stage, x in sched.removals if stage <= s}
    queued_later = {x for stage, x in sched.removals if stage > s}
    dead = set(sched.cones_by(s))
    # grow level by level; a dead or removed string cuts off its whole cone
    out, level = set(), [""]
    while level:
        keep = [
            x for x in level
            if x not in removed and (x in queued_later or not any(x[:k] in dead for k in range(len(x) + 1)))
        ]
        out.update(keep)
        level = [x + b for x in keep for b in "01" if len(x) < top]
    result = frozenset(out)
    t._cache[s, top] = result
    return result


def member_at_limit(sigma: str, t: StagewiseTree, budget: int, oracle: bool = True) -> str:
    """Verdict on ``sigma`` belonging to the limit tree after ``budget`` stages."""
    if budget < len(sigma):
        raise ScheduleError("budget must be at least the string length")
    if t.schedule.is_dead(sigma, budget):
        return OUT
    if oracle:
        return IN if t.schedule.baseline.contains(sigma) else OUT
    return PENDING


def stabilization_bound(sched: RemovalSchedule, depth: int) -> int:
    """A stage after which membership of every string of length <= depth is constant."""
    return max(sched.last_event, depth) + 1


# -- text format --------------------------------------------------------------


def parse_schedule(text: str) -> RemovalSchedule:
    batches = []
    tree_lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            tree_lines.append("")
            continue
        parts = line.split()
        if parts[0] == "remove":
            if len(parts) != 4 or parts[2] != "at" or not parts[3].isdigit():
                raise ParseError(f"expected 'remove <bits> at <stage>', got {line!r}", lineno)
            bits = "" if parts[1] == "-" else parts[1]
            if any(c not in "01" for c in bits):
                raise ParseError(f"bad bit string {parts[1]!r}", lineno)
            batches.append((int(parts[3]), bits))
            tree_lines.append("")
        elif parts[0] in ("node", "leaf"):
            tree_lines.append(line)
        else:
            raise ParseError(f"cannot parse {line!r}", lineno)
    baseline = parse_tree("\n".join(tree_lines)) if any(tree_lines) else None
    try:
        return refine_schedule(batches, baseline)
    except ScheduleError as exc:
        raise ParseError(str(exc)) from exc
