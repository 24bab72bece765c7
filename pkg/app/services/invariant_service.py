"""Euler characteristic and curvature sequences, limit diagnostics and the check suites."""
from __future__ import annotations

import itertools
import logging
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from math import comb, prod
from typing import Callable, Iterable, Optional, Sequence

from app.core.config import settings
from app.core.exceptions import HypothesisError, IdentityError, ShapeMismatchError
from app.core.linalg import format_rational
from app.models.constructions import Construction
from app.models.fock import MultiDegree, Shape, leq
from app.models.invariants import (
    CheckRecord,
    CheckReport,
    InvariantSequence,
    LimitReport,
    SequenceEntry,
)
from app.models.polyball import Grading, PolyballTuple
from app.models.subspace import ComplementTensorSubspace, GradedSubspace
from app.services import fock_service, polyball_service, subspace_service

logger = logging.getLogger(__name__)

OPEN_PROBLEM_N1 = (
    "every factor needs at least two generators; existence of the Euler "
    "characteristic with some nᵢ = 1 is an open problem"
)


class InvariantSource(ABC):
    """Where the numerator of a truncation comes from."""

    label: str = "source"
    graded: bool = False

    def __init__(self, shape: Shape):
        self.shape = shape

    @abstractmethod
    def rank(self, q: MultiDegree) -> int:
        """Rank of the numerator 𝐊*(P_{≤q}⊗I)𝐊."""

    @abstractmethod
    def trace(self, q: MultiDegree) -> Fraction:
        """Trace of the numerator 𝐊*(P_{≤q}⊗I)𝐊."""

    @abstractmethod
    def permuted(self, order: Sequence[int]) -> "InvariantSource": ...

    def defect_rank(self) -> int:
        return self.rank(self.shape.zero())


class TupleSource(InvariantSource):
    label = "tuple"

    def __init__(self, T: PolyballTuple, grading: Optional[Grading] = None, cross_check: bool = True):
        super().__init__(T.shape)
        polyball_service.require_membership(T)
        self.T = T
        self.grading = grading
        self.cross_check = cross_check
        self.data = polyball_service.defect_data(T)
        if grading is not None:
            polyball_service.check_grading(T, grading)
            self.graded = True

    def rank(self, q: MultiDegree) -> int:
        value = polyball_service.power_numerator(self.T, q).rank()
        if self.cross_check:
            gram_rank = polyball_service.berezin_gram(self.T, q, self.data.delta).rank()
            orbit = polyball_service.span_dim(self.T, self.data.defect_basis, q)
            if not value == gram_rank == orbit:
                raise IdentityError(
                    f"rank formulas disagree at q={q}: power={value} gram={gram_rank} span={orbit}",
                    q,
                )
        return value

    def trace(self, q: MultiDegree) -> Fraction:
        return polyball_service.berezin_gram(self.T, q, self.data.delta).trace()

    def defect_rank(self) -> int:
        return self.data.delta_rank

    def permuted(self, order: Sequence[int]) -> "TupleSource":
        grading = None
        if self.grading is not None:
            grading = Grading(tuple(tuple(s[o] for o in order) for s in self.grading.degree_of))
        return TupleSource(self.T.permuted(order), grading, self.cross_check)


class CoinvariantSource(InvariantSource):
    """The compression P_{M⊥}(𝐒⊗I)|_{M⊥} of the universal model."""

    label = "coinvariant"
    graded = True

    def __init__(self, M: GradedSubspace):
        super().__init__(M.shape)
        self.M = M

    def rank(self, q: MultiDegree) -> int:
        return fock_service.dim_leq(self.shape, q) * self.M.mult_dim - self.M.dim_leq_sub(q)

    def trace(self, q: MultiDegree) -> Fraction:
        return fock_service.dim_leq(self.shape, q) * self.M.mult_dim - subspace_service.trace_leq(self.M, q)

    def permuted(self, order: Sequence[int]) -> "CoinvariantSource":
        return CoinvariantSource(self.M.permuted(order))


class RestrictionSource(InvariantSource):
    """The restriction (𝐒⊗I)|_M of the universal model to a Beurling type M."""

    label = "restriction"
    graded = True

    def __init__(self, M: GradedSubspace):
        super().__init__(M.shape)
        self.M = M
        self.data = subspace_service.restriction_data(M)

    def rank(self, q: MultiDegree) -> int:
        return subspace_service.restriction_rank(self.data, q)

    def trace(self, q: MultiDegree) -> Fraction:
        return subspace_service.restriction_trace(self.M, q)

    def permuted(self, order: Sequence[int]) -> "RestrictionSource":
        return RestrictionSource(self.M.permuted(order))


def mobius(table: dict[MultiDegree, Fraction], q: MultiDegree) -> Fraction:
    """Per-level value b(q) from box values a(q) = Σ_{s≤q} b(s)."""
    total = Fraction(0)
    for p in fock_service.unit_vectors(len(q)):
        if not leq(p, q):
            continue
        s = tuple(a - b for a, b in zip(q, p))
        total += (-1) ** sum(p) * table[s]
    return total


def limit_report(
    values: Sequence[Fraction],
    level_values: Sequence[Fraction] = (),
    closed_form: Optional[Fraction] = None,
    exact_expansion: Optional[bool] = None,
) -> LimitReport:
    """Diagnose a diagonal chain of exact values; never claims an uncertified limit."""
    run = settings.STABILIZATION_RUN
    values = list(values)
    last = values[-1] if values else None
    delta = values[-1] - values[-2] if len(values) > 1 else None
    deltas = [b - a for a, b in zip(values, values[1:])]
    if len(values) >= run and len(set(values[-run:])) == 1:
        status = "exact-stabilized"
    elif (
        len(deltas) >= 2
        and (all(d >= 0 for d in deltas) or all(d <= 0 for d in deltas))
        and abs(deltas[-1]) <= abs(deltas[-2])
    ):
        status = "monotone-converging"
    else:
        status = "inconclusive"
    level_values = list(level_values)
    level_stabilized = len(level_values) >= run and len(set(level_values[-run:])) == 1
    report = LimitReport(
        status=status,
        last_value=last,
        last_delta=delta,
        level_stabilized=level_stabilized,
        level_limit=level_values[-1] if level_stabilized else None,
        exact_expansion=exact_expansion,
    )
    if closed_form is not None and exact_expansion is not False:
        report.closed_form = closed_form
        report.closed_form_matches = level_stabilized and level_values[-1] == closed_form
    if status == "inconclusive":
        logger.warning("limit inconclusive after %d diagonal values", len(values))
    return report


class InvariantService:
    """Evaluates sequences over a box of truncations, optionally on a worker pool.

    Entries are produced with an order-preserving map, so reports are identical
    for any worker count.
    """

    def __init__(self, workers: Optional[int] = None):
        self.workers = workers or settings.WORKERS
        self._executor: Optional[ThreadPoolExecutor] = None

    @property
    def executor(self) -> ThreadPoolExecutor:
        if self._executor is None:
            self._executor = ThreadPoolExecutor(max_workers=self.workers)
        return self._executor

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self) -> "InvariantService":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _map(self, fn: Callable, items: Iterable) -> list:
        items = list(items)
        if self.workers == 1 or len(items) < 2:
            return [fn(x) for x in items]
        return list(self.executor.map(fn, items))

    # sequences

    def _check_q(self, src: InvariantSource, q_max: Sequence[int]) -> MultiDegree:
        if len(q_max) == 1 and src.shape.k > 1:
            q_max = tuple(q_max) * src.shape.k
        return src.shape.check_degree(q_max)

    def _require_chi_hypothesis(self, shape: Shape) -> None:
        if any(ni < 2 for ni in shape.n):
            raise HypothesisError(f"shape {shape.n} has a factor with one generator", OPEN_PROBLEM_N1)

    def _box(self, src: InvariantSource, q_max: MultiDegree, fn: Callable) -> dict[MultiDegree, Fraction]:
        qs = fock_service.multidegrees_leq(q_max)
        values = self._map(fn, qs)
        return {q: Fraction(v) for q, v in zip(qs, values)}

    def _sequence(
        self,
        kind: str,
        src: InvariantSource,
        q_max: MultiDegree,
        table: dict[MultiDegree, Fraction],
        construction: Optional[Construction] = None,
    ) -> InvariantSequence:
        shape = src.shape
        entries = []
        for q, a in table.items():
            den = fock_service.dim_leq(shape, q)
            level_num = mobius(table, q)
            level_den = fock_service.dim_level(shape, q)
            entries.append(
                SequenceEntry(
                    q=list(q),
                    numerator=a,
                    denominator=Fraction(den),
                    value=a / den,
                    level_numerator=level_num,
                    level_denominator=Fraction(level_den),
                    level_value=level_num / level_den,
                )
            )
        diagonal = [(m,) * shape.k for m in range(min(q_max) + 1)]
        by_q = {tuple(e.q): e for e in entries}
        report = limit_report(
            [by_q[q].value for q in diagonal],
            [by_q[q].level_value for q in diagonal],
            construction.closed_form if construction else None,
            construction.exact if construction else None,
        )
        logger.info("%s sequence of %s source up to %s: %s", kind, src.label, q_max, report.status)
        return InvariantSequence(
            kind=kind, source=src.label, shape=list(shape.n), entries=entries, limit_report=report
        )

    def chi_sequence(
        self,
        src: InvariantSource,
        q_max: Sequence[int],
        construction: Optional[Construction] = None,
        chain: Optional[Sequence[Sequence[int]]] = None,
    ) -> InvariantSequence:
        q_max = self._check_q(src, q_max)
        self._require_chi_hypothesis(src.shape)
        table = self._box(src, q_max, src.rank)
        sequence = self._sequence("chi", src, q_max, table, construction)
        if chain is not None:
            report = self.chain_check(src, chain, table)
            if not report.passed:
                failure = report.first_failure()
                raise IdentityError(f"cofinal chain disagrees with the box: {failure.detail}", tuple(failure.q))
        return sequence

    def curv_sequence(
        self, src: InvariantSource, q_max: Sequence[int], construction: Optional[Construction] = None
    ) -> InvariantSequence:
        q_max = self._check_q(src, q_max)
        table = self._box(src, q_max, src.trace)
        return self._sequence("curv", src, q_max, table, construction)

    def curv_simplex_sequence(self, src: InvariantSource, m_max: int) -> InvariantSequence:
        """(1/C(m+k,k)) Σ_{|s|≤m} trace[𝐊*(P_s⊗I)𝐊]/trace[P_s], from per-level traces."""
        k = src.shape.k
        box = (m_max,) * k
        table = self._box(src, box, src.trace)
        ratios = {
            s: mobius(table, s) / fock_service.dim_level(src.shape, s) for s in table
        }
        entries = []
        for m in range(m_max + 1):
            num = sum((r for s, r in ratios.items() if sum(s) <= m), Fraction(0))
            den = comb(m + k, k)
            entries.append(SequenceEntry(q=[m], numerator=num, denominator=Fraction(den), value=num / den))
        report = limit_report([e.value for e in entries])
        return InvariantSequence(
            kind="curv-simplex", source=src.label, shape=list(src.shape.n), entries=entries, limit_report=report
        )

    # checks

    def chain_check(
        self,
        src: InvariantSource,
        chain: Sequence[Sequence[int]],
        table: Optional[dict[MultiDegree, Fraction]] = None,
    ) -> CheckReport:
        """Values along a user cofinal chain agree with the box table where both exist."""
        chain = [src.shape.check_degree(q) for q in chain]
        records = []
        for a, b in zip(chain, chain[1:]):
            if not leq(a, b):
                records.append(CheckRecord(name="chain", passed=False, q=list(b), detail=f"{b} does not dominate {a}"))
        values = self._map(src.rank, chain)
        for q, v in zip(chain, values):
            if table is not None and q in table:
                ok = table[q] == v
                records.append(CheckRecord(name="chain", passed=ok, q=list(q), detail=f"rank {v} vs box {table[q]}"))
            else:
                records.append(CheckRecord(name="chain", passed=True, q=list(q), detail=f"rank {v}"))
        chain_values = [Fraction(v, fock_service.dim_leq(src.shape, q)) for q, v in zip(chain, values)]
        report = limit_report(chain_values)
        records.append(
            CheckRecord(name="chain-limit", passed=True, detail=f"{report.status}, last {report.last_value}")
        )
        return CheckReport.from_records("chain", records)

    def inequality_check(self, src: InvariantSource, q_max: Sequence[int]) -> CheckReport:
        """0 ≤ curv_q ≤ χ_q and span_dim ≤ dim H_{≤q}·rank Δ, with the rank nondecreasing."""
        q_max = self._check_q(src, q_max)
        qs = fock_service.multidegrees_leq(q_max)
        ranks = dict(zip(qs, self._map(src.rank, qs)))
        traces = dict(zip(qs, self._map(src.trace, qs)))
        delta_rank = src.defect_rank()
        records = []
        for q in qs:
            den = fock_service.dim_leq(src.shape, q)
            ok = 0 <= traces[q] <= ranks[q] <= den * delta_rank
            for i in range(src.shape.k):
                prev = tuple(x - (1 if l == i else 0) for l, x in enumerate(q))
                if prev in ranks:
                    ok = ok and ranks[prev] <= ranks[q]
            records.append(
                CheckRecord(
                    name="inequality",
                    passed=ok,
                    q=list(q),
                    detail=(
                        f"curv={format_rational(traces[q] / den)} chi={format_rational(Fraction(ranks[q], den))} "
                        f"rank_delta={delta_rank}"
                    ),
                )
            )
        return CheckReport.from_records("inequality", records)

    def additivity_check(self, T: PolyballTuple, S: PolyballTuple, q_max: Sequence[int]) -> CheckReport:
        total = TupleSource(polyball_service.direct_sum(T, S))
        left, right = TupleSource(T), TupleSource(S)
        q_max = self._check_q(total, q_max)
        records = [
            CheckRecord(
                name="defect-rank",
                passed=total.defect_rank() == left.defect_rank() + right.defect_rank(),
            )
        ]
        for q in fock_service.multidegrees_leq(q_max):
            a, b, c = total.rank(q), left.rank(q), right.rank(q)
            records.append(CheckRecord(name="additivity", passed=a == b + c, q=list(q), detail=f"{a} = {b} + {c}"))
        return CheckReport.from_records("additivity", records)

    def multiplicativity_check(self, Xs: Sequence[PolyballTuple], q_max: Sequence[Sequence[int]]) -> CheckReport:
        """χ_q of the ampliation at concatenated q equals ∏ χ_{qᵢ}(Xᵢ)."""
        sources = [TupleSource(X) for X in Xs]
        amp = TupleSource(polyball_service.ampliation(Xs))
        boxes = [fock_service.multidegrees_leq(src.shape.check_degree(q)) for src, q in zip(sources, q_max)]
        records = []
        for combo in itertools.product(*boxes):
            q = tuple(x for part in combo for x in part)
            value = Fraction(amp.rank(q), fock_service.dim_leq(amp.shape, q))
            expected = prod(
                (Fraction(src.rank(part), fock_service.dim_leq(src.shape, part)) for src, part in zip(sources, combo)),
                start=Fraction(1),
            )
            records.append(
                CheckRecord(
                    name="multiplicativity",
                    passed=value == expected,
                    q=list(q),
                    detail=f"{format_rational(value)} vs {format_rational(expected)}",
                )
            )
        return CheckReport.from_records("multiplicativity", records)

    def coinvariant_tensor_check(self, M: ComplementTensorSubspace, q_max: Sequence[int]) -> CheckReport:
        """χ_q((⊗Mᵢ⊥)) = ∏ χ_{qᵢ}(Mᵢ⊥), box and per level."""
        whole = CoinvariantSource(M)
        q_max = self._check_q(whole, q_max)
        parts = [CoinvariantSource(f) for f in M.factors]
        table = self._box(whole, q_max, whole.rank)
        records = []
        for q in fock_service.multidegrees_leq(q_max):
            value = table[q] / fock_service.dim_leq(whole.shape, q)
            expected = Fraction(M.mult_dim)
            level_expected = Fraction(M.mult_dim)
            for src, qi in zip(parts, q):
                expected *= Fraction(src.rank((qi,)), fock_service.dim_leq(src.shape, (qi,)))
                level = src.rank((qi,)) - (src.rank((qi - 1,)) if qi else 0)
                level_expected *= Fraction(level, src.shape.n[0] ** qi)
            level_value = mobius(table, q) / fock_service.dim_level(whole.shape, q)
            records.append(
                CheckRecord(
                    name="tensor-multiplicativity",
                    passed=value == expected and level_value == level_expected,
                    q=list(q),
                    detail=f"{format_rational(value)} vs {format_rational(expected)}; level {format_rational(level_value)}",
                )
            )
        return CheckReport.from_records("tensor-multiplicativity", records)

    def perturbation_check(
        self,
        T: PolyballTuple,
        basis: Sequence[Sequence[Fraction]],
        q_max: Sequence[int],
        co_invariant: bool = False,
    ) -> CheckReport:
        """Finite-rank perturbation bounds for T|_M (invariant M) or P_M T|_M (co-invariant M)."""
        src = TupleSource(T, cross_check=False)
        q_max = self._check_q(src, q_max)
        P = polyball_service.require_invariant(T, basis, co=co_invariant)
        codim = T.dim - P.rank()
        if not co_invariant:
            polyball_service.require_membership(T, start=P)
        records = []
        for q in fock_service.multidegrees_leq(q_max):
            full = src.rank(q)
            if co_invariant:
                part = polyball_service.compression_numerator(T, P, q).rank()
                bound = codim
            else:
                part = polyball_service.restriction_numerator(T, P, q).rank()
                bound = prod(1 + ni ** (qi + 1) for ni, qi in zip(T.shape.n, q)) * codim
            den = fock_service.dim_leq(T.shape, q)
            records.append(
                CheckRecord(
                    name="perturbation-coinvariant" if co_invariant else "perturbation-invariant",
                    passed=abs(full - part) <= bound,
                    q=list(q),
                    detail=(
                        f"|chi_T - chi_M| = {format_rational(Fraction(abs(full - part), den))} "
                        f"<= {format_rational(Fraction(bound, den))}"
                    ),
                )
            )
        return CheckReport.from_records("perturbation", records)

    def gbc_check(self, src: InvariantSource, q_max: Sequence[int]) -> CheckReport:
        """trace = rank of the numerator at every truncation, hence curv_q = χ_q."""
        if not src.graded:
            raise HypothesisError(
                "Gauss-Bonnet-Chern equality needs a graded source; compare the chi and curv "
                "sequences without an equality claim",
                "graded element (gauge covariance)",
            )
        records = []
        if isinstance(src, TupleSource) and src.grading is not None:
            split = polyball_service.grading_split(src.T, src.grading)
            if not split.restricted_in_polyball:
                raise HypothesisError(
                    "restriction to the cutoff subspace H0 leaves the polyball", "T|H0 in the polyball"
                )
            records.append(
                CheckRecord(
                    name="grading-split",
                    passed=True,
                    detail=f"c={list(split.c)} d={list(split.d)} dim H0={len(split.h0_basis)}",
                )
            )
            src = TupleSource(split.restricted)
        q_max = self._check_q(src, q_max)
        qs = fock_service.multidegrees_leq(q_max)
        ranks = self._map(src.rank, qs)
        traces = self._map(src.trace, qs)
        for q, r, t in zip(qs, ranks, traces):
            records.append(
                CheckRecord(name="trace=rank", passed=t == r, q=list(q), detail=f"trace={format_rational(t)} rank={r}")
            )
        report = CheckReport.from_records("gbc", records)
        logger.info("gbc check up to %s: %s", q_max, report.passed)
        return report

    def concordance_check(self, T: PolyballTuple, q_max: Sequence[int]) -> CheckReport:
        """span_dim = rank(berezin_gram) = rank(power numerator), three independent paths."""
        data = polyball_service.defect_data(T)
        q_max = T.shape.check_degree(tuple(q_max) * T.shape.k if len(q_max) == 1 else q_max)

        def one(q):
            a = polyball_service.span_dim(T, data.defect_basis, q)
            b = polyball_service.berezin_gram(T, q, data.delta).rank()
            c = polyball_service.power_numerator(T, q).rank()
            return CheckRecord(name="concordance", passed=a == b == c, q=list(q), detail=f"{a}/{b}/{c}")

        return CheckReport.from_records("concordance", self._map(one, fock_service.multidegrees_leq(q_max)))

    def permutation_check(self, src: InvariantSource, q_max: Sequence[int], order: Sequence[int]) -> CheckReport:
        """Reordering the factors (and q accordingly) leaves χ_q and curv_q unchanged."""
        q_max = self._check_q(src, q_max)
        if sorted(order) != list(range(src.shape.k)):
            raise ShapeMismatchError(f"{list(order)} is not a permutation of the factors")
        other = src.permuted(order)
        records = []
        for q in fock_service.multidegrees_leq(q_max):
            pq = tuple(q[o] for o in order)
            ok = src.rank(q) == other.rank(pq) and src.trace(q) == other.trace(pq)
            records.append(CheckRecord(name="permutation", passed=ok, q=list(q)))
        return CheckReport.from_records("permutation", records)

    def construction_check(self, construction: Construction, q_max: Sequence[int]) -> CheckReport:
        """Per-level χ of the coinvariant source equals the product of factor ratios."""
        src = CoinvariantSource(construction.subspace)
        sequence = self.chi_sequence(src, q_max, construction)
        records = [
            CheckRecord(
                name="level-value",
                passed=e.level_value == construction.level_value(e.q),
                q=e.q,
                detail=f"{format_rational(e.level_value)} vs {format_rational(construction.level_value(e.q))}",
            )
            for e in sequence.entries
        ]
        records.append(
            CheckRecord(
                name="rank-one",
                passed=src.defect_rank() == construction.multiplicity,
                detail=f"dim of the degree-zero complement block = {src.defect_rank()}",
            )
        )
        return CheckReport.from_records("construction", records)
