"""Recovering the dual Boolean algebra from a compact metric presentation.

Clopen sets are certified by pairs of formally disjoint finitary names whose
shrunken balls form an accepted cover.  Certified sets ``U_0, U_1, ...`` give
formal terms ``V_sigma`` (bit 1 keeps ``U_k``, bit 0 takes its complement),
and the nonempty full-length terms are the atoms of the extracted algebra.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import DomainError
from .metric import (
    BasicBall,
    CoverRecord,
    MetricState,
    accepts_cover,
    ball_cone,
    cell_centers,
    distance_upper,
    exact_distance,
    formally_disjoint,
    formally_included,
    limit_state,
)
from .trees import ClopenSet, FiniteBooleanAlgebra, canonicalize, from_cells, whole

EMPTY, NONEMPTY, PENDING = "empty", "nonempty", "pending"


@dataclass(frozen=True)
class ClopenPairCertificate:
    u: tuple[BasicBall, ...]
    v: tuple[BasicBall, ...]
    cover_witness: CoverRecord
    label: str = ""


@dataclass(frozen=True)
class FormalTerm:
    """``bits[k] == '1'`` keeps ``U_k``; ``'0'`` takes its complement."""

    bits: str

    @property
    def literals(self) -> tuple[tuple[int, bool], ...]:
        return tuple((k, b == "1") for k, b in enumerate(self.bits))

    def __str__(self) -> str:
        if not self.bits:
            return "M"
        return " & ".join(f"U{k}" if pos else f"~U{k}" for k, pos in self.literals)


@dataclass(frozen=True)
class Verdict:
    status: str
    witness: int | None = None


@dataclass
class ExtractedAlgebra:
    generators: list[ClopenPairCertificate]
    quotient: FiniteBooleanAlgebra
    terms: list[FormalTerm]
    incomplete: bool = False
    names: list[tuple[BasicBall, ...]] = field(default_factory=list)


# -- certificates ---------------------------------------------------------------


def _certify(m: MetricState, u: tuple, v: tuple, stage: int) -> CoverRecord | None:
    if not u or not v or not formally_disjoint(u, v, m):
        return None
    shrunk = tuple(BasicBall(b.center, b.radius * Fraction(3, 4)) for b in u + v)
    if not formally_included(shrunk, u + v, m) or not accepts_cover(m, shrunk, stage):
        return None
    return CoverRecord(shrunk, stage)


def enumerate_clopen_pairs(m: MetricState, budget: int) -> tuple[list[ClopenPairCertificate], bool]:
    """Certificates for every cone of depth 1..budget visible to the special points.

    Returns the certificates and a flag that is True when some candidate
    failed its cover check (too few special points for this budget).
    """
    lim = limit_state(m)
    reps = lim.rep
    certs = []
    missed = False
    for k in range(1, budget + 1):
        radius = Fraction(1, 2 ** (k + 1))
        fine = cell_centers(reps, k + 2)
        cells = sorted({p[:k] for p in fine})
        if len(cells) < 2:
            continue
        for sigma in cells:
            u = tuple(BasicBall(i, radius) for p, i in fine.items() if p.startswith(sigma))
            v = tuple(BasicBall(i, radius) for p, i in fine.items() if not p.startswith(sigma))
            cover = _certify(lim, u, v, lim.stage)
            if cover is None:
                missed = True
                continue
            certs.append(ClopenPairCertificate(u, v, cover, sigma))
    return certs, missed


# -- formal terms -------------------------------------------------------------------


def v_sigma(sigma: str, certs: Sequence[ClopenPairCertificate]) -> FormalTerm:
    if len(sigma) > len(certs):
        raise DomainError(f"term {sigma!r} uses more than {len(certs)} certificates")
    if any(c not in "01" for c in sigma):
        raise DomainError(f"not a binary string: {sigma!r}")
    return FormalTerm(sigma)


def symm_diff_decompose(sigma: str, tau: str, certs: Sequence[ClopenPairCertificate]) -> list[str]:
    """Terms whose union is ``V_sigma`` symmetric-difference ``V_tau``."""
    v_sigma(sigma, certs)
    v_sigma(tau, certs)
    n = max(len(sigma), len(tau))
    out = []
    for x in range(2**n):
        xi = format(x, f"0{n}b") if n else ""
        if xi.startswith(sigma) != xi.startswith(tau):
            out.append(xi)
    return out


def name_set(name: Sequence[BasicBall], m: MetricState) -> ClopenSet:
    """The clopen set a finitary name denotes in the limit space."""
    reps = limit_state(m).rep
    tree = m.presentation.schedule.baseline
    return canonicalize([ball_cone(reps[b.center], b.radius) for b in name], tree)


def term_set(term: FormalTerm, certs: Sequence[ClopenPairCertificate], m: MetricState) -> ClopenSet:
    tree = m.presentation.schedule.baseline
    out = whole(tree)
    for k, positive in term.literals:
        u = name_set(certs[k].u, m)
        out = out & (u if positive else ~u)
    return out


def _in_name(i: int, name: Sequence[BasicBall], m: MetricState, budget: int | None) -> bool:
    if budget is None:
        return any(exact_distance(m, i, b.center) < b.radius for b in name)
    probe = MetricState(m.presentation, max(m.stage, budget))
    return any(distance_upper(probe, i, b.center, budget) < b.radius for b in name)


def membership_masks(
    certs: Sequence[ClopenPairCertificate], m: MetricState, budget: int | None = None
) -> list[tuple[int, int]]:
    """Per certificate, bitmasks of the special points inside ``u`` and inside ``v``."""
    n = m.presentation.n_points
    out = []
    for c in certs:
        um = sum(1 << i for i in range(n) if _in_name(i, c.u, m, budget))
        vm = sum(1 << i for i in range(n) if _in_name(i, c.v, m, budget))
        out.append((um, vm))
    return out


def v_nonempty(
    term: FormalTerm,
    certs: Sequence[ClopenPairCertificate],
    m: MetricState,
    budget: int | None = None,
    masks: Sequence[tuple[int, int]] | None = None,
    cells: "CellTable | None" = None,
) -> Verdict:
    """Decide whether ``V_sigma`` is nonempty.

    A special point inside the term is a witness.  Membership in a
    complemented literal is read off the certificate's complement name, so a
    witness is sound at any stage.  With ``budget=None`` distances are exact
    and an unwitnessed term is settled against the ground-truth tree.
    """
    v_sigma(term.bits, certs)
    if masks is None:
        masks = membership_masks(certs[: len(term.bits)], m, budget)
    inside = (1 << m.presentation.n_points) - 1
    for k, pos in term.literals:
        inside &= masks[k][0] if pos else masks[k][1]
    if inside:
        return Verdict(NONEMPTY, (inside & -inside).bit_length() - 1)
    if budget is None:
        if cells is None:
            cells = CellTable(certs[: len(term.bits)], m)
        if not cells.term_cells(term):
            return Verdict(EMPTY)
    return Verdict(PENDING)


class CellTable:
    """Each certified set as a set of cells at one common level of the limit tree."""

    def __init__(self, certs: Sequence[ClopenPairCertificate], m: MetricState):
        tree = m.presentation.schedule.baseline
        sets = [name_set(c.u, m) for c in certs]
        self.level = max([tree.depth] + [c.level_for() for c in sets])
        self.tree = tree
        self.whole = frozenset(tree.level(self.level))
        self.sets = [c.cells(self.level) for c in sets]

    def term_cells(self, term: FormalTerm) -> frozenset[str]:
        out = self.whole
        for k, pos in term.literals:
            out = out & self.sets[k] if pos else out - self.sets[k]
        return out


def congruent(sigma: str, tau: str, certs: Sequence[ClopenPairCertificate], m: MetricState) -> str:
    """Whether ``V_sigma`` and ``V_tau`` denote the same set (exact mode)."""
    statuses = {v_nonempty(FormalTerm(x), certs, m).status for x in symm_diff_decompose(sigma, tau, certs)}
    if NONEMPTY in statuses:
        return "different"
    return "pending" if PENDING in statuses else "equal"


# -- extraction ---------------------------------------------------------------


def cone_name(c: ClopenSet, m: MetricState) -> tuple[BasicBall, ...]:
    """Balls naming a clopen set, one per cone of its canonical form."""
    reps = limit_state(m).rep
    out = []
    for cone in c.cones:
        centre = next(i for i, r in enumerate(reps) if r.ljust(len(cone), "0").startswith(cone))
        out.append(BasicBall(centre, Fraction(2, 2 ** len(cone))))
    return tuple(out)


def extract_algebra(m: MetricState, budget: int) -> ExtractedAlgebra:
    """Quotient of the formal term algebra over certificates of depth <= budget."""
    if budget < 0:
        raise DomainError("budget must be nonnegative")
    certs, incomplete = enumerate_clopen_pairs(m, budget)
    masks = membership_masks(certs, m)
    table = CellTable(certs, m)
    terms = [""]
    for k in range(len(certs)):
        grown = []
        for t in terms:
            for bit in "10":
                verdict = v_nonempty(FormalTerm(t + bit), certs, m, masks=masks, cells=table)
                if verdict.status == PENDING:
                    incomplete = True
                if verdict.status != EMPTY:
                    grown.append(t + bit)
        terms = grown
    final = [FormalTerm(t) for t in terms]
    tree = m.presentation.schedule.baseline
    cells = tuple(from_cells(tree, table.term_cells(t), table.level) for t in final)
    labels = tuple(c.point_count() == 1 for c in cells)
    algebra = FiniteBooleanAlgebra(cells, labels)
    return ExtractedAlgebra(certs, algebra, final, incomplete, [cone_name(c, m) for c in cells])


def format_name(name: Sequence[BasicBall]) -> str:
    return ",".join(f"({b.center},{b.radius.numerator}/{b.radius.denominator})" for b in name)


def dump_algebra(ex: ExtractedAlgebra) -> list[str]:
    lines = [f"atoms {ex.quotient.n_atoms}"]
    for k, (name, label) in enumerate(zip(ex.names, ex.quotient.atom_label)):
        lines.append(f"cell {k} label={'atom' if label else 'nonatom'} name={format_name(name)}")
    if ex.incomplete:
        lines.append("incomplete")
    return lines
