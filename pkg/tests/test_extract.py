import itertools

import pytest

from stonecomp.coce import refine_schedule
from stonecomp.errors import DomainError
from stonecomp.extract import (
    EMPTY,
    NONEMPTY,
    PENDING,
    FormalTerm,
    congruent,
    dump_algebra,
    enumerate_clopen_pairs,
    extract_algebra,
    name_set,
    symm_diff_decompose,
    term_set,
    v_nonempty,
    v_sigma,
)
from stonecomp.metric import exact_distance, formally_disjoint, limit_state, new_metric
from stonecomp.trees import ATOM, CANTOR, TaggedShapeTree, clopen_algebra, find_isomorphism

FULL2 = TaggedShapeTree.full(2)
ATOM_CANTOR = TaggedShapeTree.from_leaves({"0": ATOM, "1": CANTOR})


def metric_for(tree, budget):
    return limit_state(new_metric(refine_schedule([], tree), 2 ** (budget + 3) - 1))


@pytest.fixture(scope="module")
def full_certs():
    m = metric_for(FULL2, 2)
    certs, missed = enumerate_clopen_pairs(m, 2)
    assert not missed
    return m, certs


def test_full_tree_emits_the_first_bit_pair(full_certs):
    m, certs = full_certs
    first = [c for c in certs if c.label in ("0", "1")]
    assert [name_set(c.u, m).cones for c in first] == [("0",), ("1",)]
    assert [name_set(c.v, m).cones for c in first] == [("1",), ("0",)]


def test_certificates_are_disjoint_covers(full_certs):
    m, certs = full_certs
    for c in certs:
        assert formally_disjoint(c.u, c.v, m)
        u, v = name_set(c.u, m), name_set(c.v, m)
        assert (u & v).is_empty and (u | v).is_whole


def test_v_sigma_examples(full_certs):
    _, certs = full_certs
    assert str(v_sigma("", certs)) == "M"
    assert str(v_sigma("1", certs)) == "U0"
    assert str(v_sigma("10", certs)) == "U0 & ~U1"
    with pytest.raises(DomainError):
        v_sigma("1" * (len(certs) + 1), certs)
    with pytest.raises(DomainError):
        v_sigma("12", certs)


def test_symm_diff_examples(full_certs):
    _, certs = full_certs
    assert symm_diff_decompose("1", "1", certs) == []
    assert symm_diff_decompose("1", "0", certs) == ["0", "1"]
    assert symm_diff_decompose("11", "10", certs) == ["10", "11"]


def test_v_nonempty_examples(full_certs):
    m, certs = full_certs
    whole = v_nonempty(FormalTerm(""), certs, m)
    assert whole.status == NONEMPTY and whole.witness == 0
    zero = v_nonempty(FormalTerm("1"), certs, m)
    assert zero.status == NONEMPTY and m.rep[zero.witness].ljust(1, "0").startswith("0")
    # a duplicated certificate lets a term contradict itself
    twice = [certs[0], certs[0]]
    assert v_nonempty(FormalTerm("10"), twice, m).status == EMPTY


def test_v_nonempty_pending_without_exact_distances(full_certs):
    m, certs = full_certs
    verdict = v_nonempty(FormalTerm("10"), [certs[0], certs[0]], m, budget=m.stage)
    assert verdict.status == PENDING


def test_witnesses_lie_in_their_terms(full_certs):
    m, certs = full_certs
    for bits in ("".join(p) for n in range(4) for p in itertools.product("01", repeat=n)):
        verdict = v_nonempty(FormalTerm(bits), certs, m)
        if verdict.status == NONEMPTY:
            i = verdict.witness
            for k, pos in FormalTerm(bits).literals:
                name = certs[k].u if pos else certs[k].v
                assert any(exact_distance(m, i, b.center) < b.radius for b in name)


def test_verdicts_form_a_congruence(full_certs):
    m, certs = full_certs
    terms = ["".join(p) for n in range(4) for p in itertools.product("01", repeat=n)]
    for bits in terms:
        empty = term_set(FormalTerm(bits), certs, m).is_empty
        assert (v_nonempty(FormalTerm(bits), certs, m).status == EMPTY) == empty
    for s, t in itertools.product(terms, repeat=2):
        same = term_set(FormalTerm(s), certs, m) == term_set(FormalTerm(t), certs, m)
        assert (congruent(s, t, certs, m) == "equal") == same


def test_extract_full_tree():
    ex = extract_algebra(metric_for(FULL2, 2), 2)
    assert not ex.incomplete
    assert ex.quotient.n_atoms == 4 and ex.quotient.labeled_atoms == 0
    assert find_isomorphism(ex.quotient, clopen_algebra(FULL2)) is not None


def test_extract_keeps_the_atom():
    ex = extract_algebra(metric_for(ATOM_CANTOR, 1), 1)
    assert ex.quotient.labeled_atoms == 1
    assert find_isomorphism(ex.quotient, clopen_algebra(ATOM_CANTOR)) is not None


def test_budget_zero_gives_two_elements():
    ex = extract_algebra(metric_for(FULL2, 0), 0)
    assert ex.quotient.size == 2 and ex.generators == []


def test_negative_budget():
    with pytest.raises(DomainError):
        extract_algebra(metric_for(FULL2, 0), -1)


def test_too_few_points_is_flagged():
    m = limit_state(new_metric(refine_schedule([], FULL2), 3))
    assert extract_algebra(m, 2).incomplete


def test_dump_format():
    lines = dump_algebra(extract_algebra(metric_for(ATOM_CANTOR, 1), 1))
    assert lines[0] == "atoms 2"
    assert lines[1].startswith("cell 0 label=atom name=(")
    assert lines[2].startswith("cell 1 label=nonatom name=(")
