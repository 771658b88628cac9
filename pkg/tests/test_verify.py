import random

import pytest

from stonecomp import verify
from stonecomp.banach import ConeFunction, cellwise_condition4
from stonecomp.coce import refine_schedule
from stonecomp.trees import ATOM, CANTOR, TaggedShapeTree, enumerate_trees

ATOM_CANTOR = TaggedShapeTree.from_leaves({"0": ATOM, "1": CANTOR})


def test_suite_result_counts():
    res = verify.SuiteResult("x")
    res.check(True, "fine")
    res.check(False, "broken")
    assert res.cases == 2 and res.failures == ["broken"] and not res.ok


@pytest.mark.parametrize("tree", list(enumerate_trees(1)), ids=str)
def test_all_suites_pass_on_small_trees(tree):
    for res in verify.run_suites(verify.schedule_for(tree), 2):
        assert res.ok, (res.name, res.failures)
        assert res.cases > 0 or res.name == "categoricity"


def test_suites_on_a_late_schedule():
    sched = refine_schedule([(4, "11"), (6, "011")], TaggedShapeTree.from_leaves({"00": CANTOR, "010": ATOM, "10": CANTOR}))
    assert all(res.ok for res in verify.run_suites(sched, 3))


def test_categoricity_skips_many_atoms():
    tree = TaggedShapeTree.full(1, ATOM)
    assert verify.suite_categoricity(verify.schedule_for(tree), 2).cases == 0


def test_condition4_falsifier_hits_both_branches():
    rng = random.Random(0)
    seen = set()
    for _ in range(300):
        f, g, q = verify.random_condition4_triple(ATOM_CANTOR, rng, 2)
        seen.add(cellwise_condition4(f, g))
        assert not verify.condition4_disagreement(f, g, q)
    assert seen == {True, False}


def test_disagreement_is_detected(monkeypatch):
    half = ConeFunction.constant(ATOM_CANTOR, "1/2")
    bump = ConeFunction.constant(ATOM_CANTOR, "1/32")
    assert not verify.condition4_disagreement(half, half, bump)
    # a criterion that wrongly accepts f = g = 1/2 is caught by the same bump
    monkeypatch.setattr(verify, "cellwise_condition4", lambda f, g: True)
    assert verify.condition4_disagreement(half, half, bump)
