"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line with its counts.  All
arithmetic is exact, so every tolerance below is zero; the other pinned
numbers are sample sizes, seeds and scales.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""

from __future__ import annotations

import itertools
import os
import random
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from stonecomp import verify
from stonecomp.banach import (
    HIGH,
    LOW,
    SLACK,
    ConeFunction,
    construct_refinement,
    indicator_info,
    is_two_partition,
    refines_partition_of_unity,
    sup_distance,
)
from stonecomp.cli import load_schedule
from stonecomp.coce import refine_schedule, stabilization_bound
from stonecomp.metric import (
    BasicBall,
    MetricState,
    accepts_cover,
    ball_cone,
    candidate_radii,
    enumerate_covers,
    limit_state,
    new_metric,
)
from stonecomp.trees import ATOM, TaggedShapeTree, enumerate_trees, random_tree

TOLERANCE = 0  # exact rationals throughout
SEED = 20240611
DEPTH3 = list(enumerate_trees(3))
DEPTH2 = list(enumerate_trees(2))
METRIC_POINTS = 16
DEPTH4_SAMPLES = 300
COVER_POINTS = 8
COVER_BALLS = 4
COVER_MIN_EXP = 4  # radii down to 2^-4
COVER_SAMPLES = 12
GRID_DEN = 2048
COND4_SAMPLES = 1000
DATA = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")

    return emit


def delayed(tree: TaggedShapeTree, delay: int = 2):
    """Every complement cone of the tree announced ``delay`` stages late."""
    cones = tree.complement_cones(tree.depth + 1)
    return refine_schedule([(len(c) + delay, c) for c in cones], tree)


def schedules(trees):
    for tree in trees:
        yield refine_schedule([], tree)
        yield delayed(tree)


def depth4_sample(n: int, seed: int) -> list[TaggedShapeTree]:
    rng = random.Random(seed)
    return [random_tree(4, rng) for _ in range(n)]


# -- 1 ---------------------------------------------------------------------------


def test_criterion_1_duality_round_trip(report):
    failures = []
    for tree in DEPTH3:
        res = verify.suite_extract(verify.schedule_for(tree), tree.depth)
        if not res.ok:
            failures.append((tree, res.failures))
    report(1, not failures, f"{len(DEPTH3) - len(failures)}/{len(DEPTH3)} trees of depth <= 3 round-trip, atom counts exact")
    assert not failures, failures[:3]


# -- 2 ---------------------------------------------------------------------------


def test_criterion_2_right_ce_monotone(report):
    scheds = list(schedules(DEPTH3)) + list(schedules(depth4_sample(DEPTH4_SAMPLES, SEED)))
    failures = []
    for sched in scheds:
        for res in (verify.suite_metric(sched, 4, METRIC_POINTS), verify.suite_coce(sched, 4)):
            if not res.ok:
                failures.append((sched.to_text(), res.name, res.failures[:2]))
    report(
        2,
        not failures,
        f"{len(scheds) - len(failures)}/{len(scheds)} schedules ({len(DEPTH3)} depth-3 trees exhaustive, "
        f"{DEPTH4_SAMPLES} depth-4 samples; just-in-time and delayed), {METRIC_POINTS} points",
    )
    assert not failures, failures[:3]


# -- 3 ---------------------------------------------------------------------------


def cover_audit(sched) -> tuple[int, list[str]]:
    """Persistence and completeness for every name of <= COVER_BALLS balls.

    Names whose balls have the same cone at every stage behave identically,
    so one representative per such class is checked.
    """
    m = limit_state(new_metric(sched, COVER_POINTS))
    top = max(m.stage, stabilization_bound(sched, COVER_MIN_EXP + 1))
    m = MetricState(m.presentation, top)
    tree = sched.baseline
    cells = tree.level(max(tree.depth, COVER_MIN_EXP + 1))
    classes: dict[tuple, BasicBall] = {}
    for i in range(COVER_POINTS):
        for r in candidate_radii(COVER_MIN_EXP):
            key = tuple(ball_cone(m.presentation.reps(s)[i], r) for s in range(top + 1))
            classes.setdefault(key, BasicBall(i, r))
    memo: dict = {}
    problems = []
    n = 0
    for k in range(1, COVER_BALLS + 1):
        for combo in itertools.combinations(classes, k):
            n += 1
            name = [classes[c] for c in combo]
            accepted = []
            for s in range(top + 1):
                key = (s, frozenset(c[s] for c in combo))
                if key not in memo:
                    memo[key] = accepts_cover(m, name, s)
                accepted.append(memo[key])
            truth = all(any(x.startswith(c[top]) for c in combo) for x in cells)
            if True in accepted and not all(accepted[accepted.index(True):]):
                problems.append(f"{name} stops being a cover")
            if accepted[top] != truth:
                problems.append(f"{name} accepted={accepted[top]} but cover={truth}")
    return n, problems


def test_criterion_3_covers(report):
    scheds = list(schedules(DEPTH2)) + list(schedules(depth4_sample(COVER_SAMPLES, SEED + 3)))
    names = 0
    failures = []
    for sched in scheds:
        n, problems = cover_audit(sched)
        names += n
        if problems:
            failures.append((sched.to_text(), problems[:2]))
    # the enumerator emits exactly the accepted names
    sched = delayed(TaggedShapeTree.from_leaves({"0": ATOM, "10": ATOM, "11": "cantor"}))
    m = limit_state(new_metric(sched, 4))
    balls = [BasicBall(i, r) for i in range(4) for r in candidate_radii(2)]
    brute = {c for k in (1, 2) for c in itertools.combinations(balls, k) if accepts_cover(m, c, m.stage)}
    same = brute == {c.name for c in enumerate_covers(m, m.stage, 2)}
    ok = not failures and same
    report(
        3,
        ok,
        f"{len(scheds) - len(failures)}/{len(scheds)} schedules, {names} names of <= {COVER_BALLS} balls "
        f"with radii >= 2^-{COVER_MIN_EXP} over {COVER_POINTS} points; enumerator matches brute force: {same}",
    )
    assert ok, failures[:3]


# -- 4 ---------------------------------------------------------------------------


def test_criterion_4_categoricity(report):
    trees = [t for t in DEPTH3 if len(t.atom_paths()) <= 1]
    failures = []
    samples = 0
    for k, tree in enumerate(trees):
        res = verify.suite_categoricity(verify.schedule_for(tree), tree.depth, SEED + k)
        samples += res.cases
        if not res.ok:
            failures.append((tree, res.failures[:2]))
    report(
        4,
        not failures,
        f"{len(trees) - len(failures)}/{len(trees)} spaces with <= 1 isolated point, {samples} checks "
        f"({verify.HOMEO_SAMPLES} points to 2^-{verify.HOMEO_PRECISION} each, homomorphism laws on <= 16 elements)",
    )
    assert not failures, failures[:3]


# -- 5 ---------------------------------------------------------------------------

ONE_CELL = TaggedShapeTree.full(0)


def grid(lo: Fraction, hi: Fraction) -> list[Fraction]:
    return [Fraction(k, GRID_DEN) for k in range(int(lo * GRID_DEN), int(hi * GRID_DEN) + 1)]


def close_indicators_single_cell() -> int:
    """Close indicator values lie on the same side of 1/2, for every grid pair."""
    values = grid(Fraction(-2), Fraction(2))
    infos = [indicator_info(ConeFunction.constant(ONE_CELL, v)) for v in values]
    ind = np.array([i.is_indicator for i in infos])
    side = np.array([bool(i.is_indicator and i.support.is_whole) for i in infos])
    num = np.array([v.numerator * (GRID_DEN // v.denominator) for v in values])
    close = np.abs(num[:, None] - num[None, :]) <= GRID_DEN // 4
    both = ind[:, None] & ind[None, :] & close
    bad = both & (side[:, None] != side[None, :])
    return int(both.sum()) if not bad.any() else -1


def two_partition_single_cell() -> tuple[int, list]:
    values = grid(Fraction(-1), Fraction(1))
    target = Fraction(63, 64)
    hits, bad = 0, []
    for v in values:
        for w in grid(max(Fraction(-1), target - SLACK - v), min(Fraction(1), target + SLACK - v)):
            f, g = ConeFunction.constant(ONE_CELL, v), ConeFunction.constant(ONE_CELL, w)
            if is_two_partition(f, g):
                hits += 1
                fi, gi = indicator_info(f), indicator_info(g)
                if not (fi.is_indicator and gi.is_indicator and fi.support.is_whole != gi.support.is_whole):
                    bad.append((v, w))
    return hits, bad


def multi_cell_checks(rng: random.Random) -> list:
    """Cellwise combinations of edge values on every depth <= 2 tree."""
    edges = [Fraction(k, GRID_DEN) for k in (-64, -1, 0, 1, 511, 512, 1535, 1536, 1537, 2016, 2047, 2048, 2112)]
    bad = []
    for tree in DEPTH2:
        cells = sorted(tree.level(tree.depth))
        for _ in range(60):
            f = ConeFunction.of(tree, {x: rng.choice(edges) for x in cells})
            g = ConeFunction.of(tree, {x: f.at_level(tree.depth)[x] + rng.choice([-1, 0, 1]) * rng.choice(edges) / 4 for x in cells})
            fi, gi = indicator_info(f), indicator_info(g)
            if fi.is_indicator and gi.is_indicator and sup_distance(f, g) <= Fraction(1, 4):
                if fi.support != gi.support:
                    bad.append(("eq", f, g))
            mirror = ConeFunction.of(tree, {x: Fraction(63, 64) - v for x, v in f.at_level(tree.depth).items()})
            if is_two_partition(f, mirror):
                mi = indicator_info(mirror)
                if not (fi.is_indicator and mi.is_indicator and (fi.support & mi.support).is_empty and (fi.support | mi.support).is_whole):
                    bad.append(("2-partition", f, mirror))
    return bad


def star_equalities(h: list[ConeFunction]) -> bool:
    """For every subset of ``h``: its sum is an indicator of the union of the supports."""
    n = max(fn.depth for fn in h)
    cells = sorted(h[0].tree.level(n))
    vals = np.array([[float(fn.at_level(n)[x]) for x in cells] for fn in h])
    k = len(h)
    masks = ((np.arange(2**k)[:, None] >> np.arange(k)) & 1).astype(float)
    sums = masks @ vals
    union = (masks @ (vals > 0.5).astype(float)) > 0
    # the parts are far from the 1/4 and 3/4 thresholds, so float sums decide exactly
    in_band = (sums >= -float(SLACK)) & (sums <= 1 + float(SLACK)) & ((sums < float(LOW)) | (sums > float(HIGH)))
    return bool(in_band.all() and ((sums > 0.5) == union).all())


def refinement_checks(rng: random.Random) -> tuple[int, list]:
    bad = []
    runs = 0
    for tree in DEPTH3:
        cells = sorted(tree.level(tree.depth))
        atoms = [ConeFunction.indicator(tree, [c]) for c in cells]
        fs = [a for a, c in zip(atoms, cells) if tree.leaf_tag.get(c) == ATOM]
        gs = [a for a, c in zip(atoms, cells) if tree.leaf_tag.get(c) != ATOM]
        side = [c for c in cells if rng.random() < 0.5]
        hi = Fraction(rng.randint(GRID_DEN - GRID_DEN // 128, GRID_DEN), GRID_DEN)  # condition (4) needs hi >= 1 - 1/128
        lo = Fraction(63, 64) - hi
        q = ConeFunction.indicator(tree, side, hi, lo)
        r = ConeFunction.indicator(tree, [c for c in cells if c not in side], hi, lo)
        if not is_two_partition(q, r):
            bad.append(("setup", tree, hi))
            continue
        h = construct_refinement(fs, gs, q, r)
        runs += 1
        if not refines_partition_of_unity(h, fs + gs, q, r):
            bad.append(("refines", tree, hi))
        if not star_equalities(h):
            bad.append(("star", tree, hi))
        for half, g in ((h[0::2], q), (h[1::2], r)):
            total = sum(half[1:], half[0])
            if indicator_info(total).support != indicator_info(g).support:
                bad.append(("primed", tree, hi))
    return runs, bad


def test_criterion_5_banach_calculus(report):
    rng = random.Random(SEED + 5)
    eq_pairs = close_indicators_single_cell()
    hits, partition_bad = two_partition_single_cell()
    multi_bad = multi_cell_checks(rng)
    runs, refine_bad = refinement_checks(rng)
    ok = eq_pairs >= 0 and not partition_bad and hits > 0 and not multi_bad and not refine_bad
    report(
        5,
        ok,
        f"single-cell grids at 1/{GRID_DEN}: {eq_pairs} close indicator pairs, {hits} 2-partitions; "
        f"{len(DEPTH2)} depth-2 trees of edge combinations ({len(multi_bad)} bad); "
        f"{runs} refinements over depth-3 trees ({len(refine_bad)} bad)",
    )
    assert ok, (partition_bad[:3], multi_bad[:3], refine_bad[:3])


# -- 6 ---------------------------------------------------------------------------


def test_criterion_6_condition4(report):
    rng = random.Random(SEED + 6)
    branches = {True: 0, False: 0}
    disagreements = []
    for k in range(COND4_SAMPLES):
        tree = random_tree(2, rng)
        f, g, q = verify.random_condition4_triple(tree, rng)
        branches[verify.cellwise_condition4(f, g)] += 1
        if verify.condition4_disagreement(f, g, q):
            disagreements.append(k)
    ok = not disagreements and all(branches.values())
    report(
        6,
        ok,
        f"{COND4_SAMPLES} seeded triples, {len(disagreements)} disagreements "
        f"(criterion held {branches[True]}, failed {branches[False]})",
    )
    assert ok, disagreements[:5]


# -- 7 ---------------------------------------------------------------------------


def test_criterion_7_banach_reconstruction(report):
    failures = []
    for tree in DEPTH3:
        res = verify.suite_banach(verify.schedule_for(tree), tree.depth)
        if not res.ok:
            failures.append((tree, res.failures))
    report(7, not failures, f"{len(DEPTH3) - len(failures)}/{len(DEPTH3)} trees of depth <= 3 reconstructed with matching labels")
    assert not failures, failures[:3]


# -- 8 ---------------------------------------------------------------------------


def cli_requests() -> list[list[str]]:
    out = []
    for path in sorted(DATA.iterdir()):
        if path.suffix == ".cf":
            continue
        name = path.name
        out += [
            ["dualize", name],
            ["rce-build", name, "--points", "8"],
            ["covers", name, "--points", "4", "--depth", "1"],
            ["extract", name],
            ["homeo", name, name] if len(load_schedule(str(path)).baseline.atom_paths()) <= 1 else None,
            ["banach-reconstruct", name, "cone0.cf"] if name == "cantor_depth2.tree" else ["banach-reconstruct", name],
            ["verify", name, "--depth", "2", "--seed", "3"],
        ]
    return [r for r in out if r is not None]


def test_criterion_8_cli_determinism(report):
    differ = []
    requests = cli_requests()
    for args in requests:
        outputs = []
        for seed in ("0", "12345"):
            env = {**os.environ, "PYTHONHASHSEED": seed}
            proc = subprocess.run([sys.executable, "-m", "stonecomp.cli", *args], cwd=DATA, env=env, capture_output=True)
            outputs.append((proc.returncode, proc.stdout))
        if outputs[0] != outputs[1]:
            differ.append(args)
    report(8, not differ, f"{len(requests) - len(differ)}/{len(requests)} requests byte-identical across two runs")
    assert not differ, differ


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
