"""Invariant suites run by ``stonecomp verify`` and by the acceptance tests.

Each suite takes a removal schedule (its baseline is the ground truth) and
returns a :class:`SuiteResult`.  Everything is deterministic except the
condition-(4) falsifier, which samples from an explicitly seeded generator.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .banach import (
    ConeFunction,
    DenseSpanPresentation,
    cellwise_condition4,
    condition4_violated_by,
    default_budget,
    stabilized_reconstruct,
    violating_bump,
)
from .categoricity import homeo_apply, homeo_operator, induced_algebra_iso, inverse_apply, point_name
from .coce import RemovalSchedule, StagewiseTree, refine_schedule, stabilization_bound, tree_at_stage
from .errors import StoneError
from .extract import extract_algebra
from .metric import (
    ball_cone,
    distance_upper,
    exact_distance,
    limit_state,
    new_metric,
    strip_zeros,
)
from .trees import TaggedShapeTree, all_strings, clopen_algebra, find_isomorphism, is_homomorphism

HOMEO_POINTS = 127
HOMEO_SAMPLES = 20
HOMEO_PRECISION = 3
NAME_LENGTH = 10


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def check(self, cond: bool, message: str) -> None:
        self.cases += 1
        if not cond:
            self.failures.append(message)


def schedule_for(tree: TaggedShapeTree) -> RemovalSchedule:
    return refine_schedule([], tree)


# -- suites ----------------------------------------------------------------------


def suite_tree_algebra(sched: RemovalSchedule, depth: int) -> SuiteResult:
    res = SuiteResult("tree-algebra")
    tree = sched.baseline
    alg = clopen_algebra(tree.uniform(max(depth, tree.depth)))
    if alg.n_atoms <= 10:
        res.check(is_homomorphism(alg, alg, lambda x: x), "identity fails the homomorphism laws")
    for mask in range(min(alg.size, 256)):
        el = alg.element(mask)
        res.check(alg.locate(~el) == alg.complement(mask), f"complement of element {mask}")
        res.check(alg.locate(el | alg.element(1)) == mask | 1, f"join of element {mask} with atom 0")
    return res


def suite_coce(sched: RemovalSchedule, depth: int) -> SuiteResult:
    res = SuiteResult("coce-stages")
    t = StagewiseTree(sched)
    last = stabilization_bound(sched, depth)
    # strings past the longest announced cone add nothing but size
    window = max([depth] + [len(c) for _, c in sched.announcements]) + 1
    prev = None
    for s in range(last + 1):
        cur = tree_at_stage(t, s, window)
        res.check(all(len(x) <= s for x in cur), f"stage {s} holds a string longer than {s}")
        res.check(all(x[:-1] in cur for x in cur if x), f"stage {s} is not prefix-closed")
        if prev is not None:
            res.check(len(prev - cur) <= 1, f"more than one removal at stage {s}")
        prev = cur
    limit = tree_at_stage(t, last, window)
    for x in all_strings(depth):
        res.check((x in limit) == sched.baseline.contains(x), f"limit membership of {x or '-'}")
    return res


def suite_metric(sched: RemovalSchedule, depth: int, points: int = 16) -> SuiteResult:
    res = SuiteResult("metric-monotone")
    m = limit_state(new_metric(sched, points))
    for i in range(points):
        for j in range(i + 1, points):
            ds = [distance_upper(m, i, j, s) for s in range(m.stage + 1)]
            res.check(all(a >= b for a, b in zip(ds, ds[1:])), f"d({i},{j}) increases")
            res.check(ds[-1] == exact_distance(m, i, j), f"d({i},{j}) misses its limit")
    return res


def suite_extract(sched: RemovalSchedule, depth: int) -> SuiteResult:
    res = SuiteResult("extract")
    tree = sched.baseline
    budget = max(depth, tree.depth, 1)
    m = new_metric(sched, 2 ** (budget + 3) - 1)
    ex = extract_algebra(m, budget)
    ref = clopen_algebra(tree.uniform(budget))
    res.check(not ex.incomplete, "extraction reported incomplete")
    res.check(ex.quotient.n_atoms == ref.n_atoms, f"{ex.quotient.n_atoms} atoms, expected {ref.n_atoms}")
    res.check(find_isomorphism(ex.quotient, ref) is not None, "no label-preserving isomorphism")
    return res


def _operator(sched: RemovalSchedule, order: list[int] | None):
    tree = sched.baseline
    m = limit_state(new_metric(sched, HOMEO_POINTS, order))
    atoms = tree.atom_paths()
    if not atoms:
        return homeo_operator(m, depth=1, precision=HOMEO_PRECISION)
    path = strip_zeros(atoms[0])
    iso = next(i for i, r in enumerate(m.rep) if r == path)
    radius = Fraction(9, 8) / 2 ** len(atoms[0])
    return homeo_operator(m, depth=1, isolated=iso, R=radius, precision=HOMEO_PRECISION)


def suite_categoricity(sched: RemovalSchedule, depth: int, seed: int = 0) -> SuiteResult:
    """Two shuffled presentations of the same space, mapped into each other."""
    res = SuiteResult("categoricity")
    tree = sched.baseline
    if len(tree.atom_paths()) > 1:
        return res
    rng = random.Random(seed)
    orders = []
    for _ in range(2):
        order = list(range(HOMEO_POINTS))
        rng.shuffle(order)
        orders.append(order)
    try:
        a, b = (_operator(sched, o) for o in orders)
        for i in rng.sample(range(HOMEO_POINTS), HOMEO_SAMPLES):
            y = homeo_apply(a, point_name(a.m, i, NAME_LENGTH), 1)
            x = inverse_apply(b, y, HOMEO_PRECISION)
            path = a.m.rep[i]
            inside = all(
                ball_cone(b.m.rep[ball.center], ball.radius) == ball_cone(path, ball.radius) for ball in x
            )
            res.check(inside, f"point {i} re-named away from itself")
        alg = clopen_algebra(tree)
        if alg.size <= 16:
            g = induced_algebra_iso(alg, alg, (a, b))
            res.check(is_homomorphism(alg, alg, lambda e: g[e]), "induced map breaks the algebra laws")
    except StoneError as exc:
        res.check(False, f"{type(exc).__name__}: {exc}")
    return res


def suite_banach(sched: RemovalSchedule, depth: int) -> SuiteResult:
    res = SuiteResult("banach-reconstruct")
    tree = sched.baseline
    pres = DenseSpanPresentation(tree)
    state, same = stabilized_reconstruct(pres, default_budget(pres))
    ref = clopen_algebra(tree.uniform(pres.depth))
    res.check(same, "atoms changed between the two budgets")
    res.check(not state.incomplete, "a refinement search failed")
    res.check(find_isomorphism(state.algebra(), ref) is not None, "reconstructed algebra is not isomorphic")
    return res


def random_condition4_triple(tree: TaggedShapeTree, rng: random.Random, depth: int | None = None):
    """Random ``f, g`` with norms <= 1 and a random bump ``q`` on the cells of ``depth``."""
    n = tree.depth if depth is None else depth
    cells = tree.level(n)
    den = 256

    def near_edge() -> Fraction:
        k = rng.choice([rng.randint(-den, den), rng.randint(den - 4, den), -rng.randint(den - 4, den)])
        return Fraction(k, den)

    f = ConeFunction.of(tree, {x: near_edge() for x in cells})
    g = ConeFunction.of(tree, {x: near_edge() for x in cells})
    support = rng.sample(cells, rng.randint(1, len(cells)))
    q = ConeFunction.of(tree, {x: Fraction(rng.randint(-32, 32), 512) if x in support else 0 for x in cells})
    return f, g, q


def condition4_disagreement(f: ConeFunction, g: ConeFunction, q: ConeFunction) -> bool:
    """True when the cell criterion and direct falsification disagree on ``(f, g)``."""
    if cellwise_condition4(f, g):
        return condition4_violated_by(f, g, q)
    bump = violating_bump(f, g)
    return bump is None or not condition4_violated_by(f, g, bump)


def suite_condition4(sched: RemovalSchedule, depth: int, seed: int = 0, samples: int = 200) -> SuiteResult:
    res = SuiteResult("condition4")
    rng = random.Random(seed)
    tree = sched.baseline
    for k in range(samples):
        f, g, q = random_condition4_triple(tree, rng)
        res.check(not condition4_disagreement(f, g, q), f"sample {k}: criteria disagree")
    return res


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "tree-algebra": suite_tree_algebra,
    "coce-stages": suite_coce,
    "metric-monotone": suite_metric,
    "extract": suite_extract,
    "categoricity": suite_categoricity,
    "banach-reconstruct": suite_banach,
    "condition4": suite_condition4,
}
SEEDED = {"categoricity", "condition4"}


def run_suites(sched: RemovalSchedule, depth: int, seed: int = 0) -> list[SuiteResult]:
    out = []
    for name, fn in SUITES.items():
        out.append(fn(sched, depth, seed) if name in SEEDED else fn(sched, depth))
    return out
