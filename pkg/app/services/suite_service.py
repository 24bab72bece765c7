"""Seeded random polyball tuples and the built-in verification suites."""
from __future__ import annotations

import logging
import random
from fractions import Fraction
from typing import Callable, Optional, Sequence

from app.core.config import settings
from app.core.exceptions import InputFormatError
from app.core.linalg import RationalMatrix
from app.models.fock import FockVector, Shape
from app.models.invariants import CheckRecord, CheckReport, SuiteReport
from app.models.polyball import Grading, PolyballTuple
from app.models.subspace import ComplementTensorSubspace, FullSubspace, GradedSubspace
from app.services import construction_service, fock_service, polyball_service, subspace_service
from app.services.invariant_service import (
    CoinvariantSource,
    InvariantService,
    RestrictionSource,
    TupleSource,
)

logger = logging.getLogger(__name__)

AMPLIATION_DIMS = [(1, 1), (1, 2), (2, 1), (2, 2), (1, 3), (3, 1)]
RANGE_VALUES = [Fraction(1, 2), Fraction(3, 8), Fraction(5, 8), Fraction(3, 4), Fraction(15, 16)]


# random tuples


def random_matrix(rng: random.Random, dim: int, scale: Fraction) -> RationalMatrix:
    return RationalMatrix.from_rows(
        [[Fraction(rng.randint(-4, 4), rng.randint(1, 6)) * scale for _ in range(dim)] for _ in range(dim)],
        dim,
    )


def _scaled_into_polyball(shape: Shape, dim: int, draft: Sequence[Sequence[RationalMatrix]]) -> PolyballTuple:
    # Φ shrinks like scale², so halving always ends inside the polyball
    scale = Fraction(1)
    while True:
        T = PolyballTuple(shape, dim, tuple(tuple(m.scale(scale) for m in row) for row in draft))
        if polyball_service.is_in_polyball(T).member:
            return T
        scale /= 2


def random_row_tuple(rng: random.Random, n: int, dim: int) -> PolyballTuple:
    """Single-factor tuple, rejection-sampled into the polyball by halving its scale."""
    draft = [random_matrix(rng, dim, Fraction(1)) for _ in range(n)]
    return _scaled_into_polyball(Shape(n=(n,)), dim, [draft])


def random_commuting_tuple(rng: random.Random, n: int, dim: int) -> PolyballTuple:
    """Two factors whose entries are random quadratics in one shared matrix A."""
    A = random_matrix(rng, dim, Fraction(1))
    powers = [RationalMatrix.identity(dim), A, A @ A]

    def quadratic() -> RationalMatrix:
        out = RationalMatrix.zeros(dim)
        for P in powers:
            out = out + P.scale(Fraction(rng.randint(-2, 2), rng.randint(1, 3)))
        return out

    draft = [[quadratic() for _ in range(n)] for _ in range(2)]
    return _scaled_into_polyball(Shape(n=(n, n)), dim, draft)


def random_tuple(rng: random.Random, k: int, n: int = 2) -> PolyballTuple:
    """k = 1: a random row of dim ≤ 3.

    k = 2: either the ampliation of two random rows (dim ≤ 4) or a coupled
    tuple of polynomials in one random matrix (dim 2 or 3), with equal odds.
    """
    if k == 1:
        return random_row_tuple(rng, n, rng.randint(1, 3))
    if k == 2:
        if rng.random() < 0.5:
            return random_commuting_tuple(rng, n, rng.randint(2, 3))
        a, b = rng.choice(AMPLIATION_DIMS)
        return polyball_service.ampliation([random_row_tuple(rng, n, a), random_row_tuple(rng, n, b)])
    raise InputFormatError(f"random tuples are generated for k ≤ 2, got k={k}")


def random_suite(size: Optional[int] = None, seed: Optional[int] = None) -> list[PolyballTuple]:
    size = size or settings.SUITE_SIZE
    rng = random.Random(settings.SUITE_SEED if seed is None else seed)
    return [random_tuple(rng, 1 + idx % 2) for idx in range(size)]


# fixed examples


def nilpotent_tuple() -> tuple[PolyballTuple, Grading]:
    """T₁ = [[0, 1/2], [0, 0]], T₂ = 0 on ℂ², graded by deg e₁ = 1, deg e₂ = 0."""
    T = PolyballTuple.from_rows(
        Shape(n=(2,)),
        2,
        [[[[0, Fraction(1, 2)], [0, 0]], [[0, 0], [0, 0]]]],
    )
    return T, Grading(((1,), (0,)))


def nilpotent_pair() -> tuple[PolyballTuple, Grading]:
    """T₁,₁ = T₁,₂ = [[0, 1/2], [0, 0]] on ℂ², same grading as the nilpotent tuple."""
    half = [[0, Fraction(1, 2)], [0, 0]]
    return PolyballTuple.from_rows(Shape(n=(2,)), 2, [[half, half]]), Grading(((1,), (0,)))


def graded_subspaces() -> list[tuple[str, GradedSubspace]]:
    two = Shape(n=(2, 2))
    diagonal = [
        FockVector.basis_vector(two, ((1,), (1,))),
        FockVector.basis_vector(two, ((2,), (2,))),
    ]
    return [
        ("M1(1/2)", construction_service.build_Mi(construction_service.expand(Fraction(1, 2), 2))),
        ("M(5/8)", construction_service.build_M_t(two, Fraction(5, 8)).subspace),
        ("M(1/2) x C^2", construction_service.build_M_t(two, Fraction(1, 2), multiplicity=2).subspace),
        ("two generators of degree (1,1)", subspace_service.from_generators(two, 1, diagonal)),
        ("M_omega(1/4)", construction_service.build_M_omega_t(two, Fraction(1, 4), Fraction(1, 2)).subspace),
    ]


def _box(shape: Shape, m: int) -> tuple[int, ...]:
    return (m,) * shape.k


def _merge(name: str, reports: Sequence[CheckReport]) -> CheckReport:
    records = [r for report in reports for r in report.records]
    return CheckReport.from_records(name, records)


# suites


def universal_model_suite(service: InvariantService, q_max: int = 6) -> CheckReport:
    """χ and curv of the restriction to the whole Fock space are identically 1."""
    src = RestrictionSource(FullSubspace(Shape(n=(2, 2)), 1))
    records = []
    for sequence in (service.chi_sequence(src, (q_max, q_max)), service.curv_sequence(src, (q_max, q_max))):
        for e in sequence.entries:
            records.append(
                CheckRecord(name=f"universal-{sequence.kind}", passed=e.value == 1, q=e.q, detail=str(e.value))
            )
    return CheckReport.from_records("universal-model", records)


def range_suite(service: InvariantService, q_max: int = 12) -> CheckReport:
    """Per-level coinvariant ratios of M(t) follow the staged partial sums; the box value nears t."""
    records = []
    for t in RANGE_VALUES:
        construction = construction_service.build_M_t(Shape(n=(2,)), t)
        report = service.construction_check(construction, (q_max,))
        records.extend(report.records)
        src = CoinvariantSource(construction.subspace)
        value = Fraction(src.rank((q_max,)), fock_service.dim_leq(src.shape, (q_max,)))
        records.append(
            CheckRecord(
                name="cumulative-tail",
                passed=abs(value - t) < Fraction(2, 2**q_max),
                q=[q_max],
                detail=f"t={t}: box value {value}",
            )
        )
    return CheckReport.from_records("range", records)


def kpk_suite(tuples: Sequence[PolyballTuple], q_max: int = 3) -> CheckReport:
    return _merge("kpk", [polyball_service.kpk_check(T, _box(T.shape, q_max)) for T in tuples])


def oracle_suite(service: InvariantService, tuples: Sequence[PolyballTuple], q_max: int = 3) -> CheckReport:
    return _merge("oracle-triangle", [service.concordance_check(T, _box(T.shape, q_max)) for T in tuples])


def inequality_suite(service: InvariantService, tuples: Sequence[PolyballTuple], q_max: int = 3) -> CheckReport:
    return _merge(
        "inequality",
        [service.inequality_check(TupleSource(T, cross_check=False), _box(T.shape, q_max)) for T in tuples],
    )


def gbc_suite(service: InvariantService, q_max: int = 6) -> CheckReport:
    reports = []
    for name, M in graded_subspaces():
        report = service.gbc_check(CoinvariantSource(M), _box(M.shape, q_max))
        logger.info("gbc on %s: %s", name, report.passed)
        reports.append(report)
    for T, grading in (nilpotent_tuple(), nilpotent_pair()):
        reports.append(service.gbc_check(TupleSource(T, grading), (q_max,)))
    return _merge("gbc", reports)


def algebra_suite(service: InvariantService, seed: Optional[int] = None, count: int = 5) -> CheckReport:
    """Additivity over direct sums, multiplicativity over ampliations and coinvariant tensors."""
    rng = random.Random((settings.SUITE_SEED if seed is None else seed) + 1)
    reports = []
    for idx in range(count):
        k = 1 + idx % 2
        T, S = random_tuple(rng, k), random_tuple(rng, k)
        reports.append(service.additivity_check(T, S, _box(T.shape, 2)))
    for _ in range(count):
        Xs = [random_row_tuple(rng, 2, rng.randint(1, 2)) for _ in range(2)]
        reports.append(service.multiplicativity_check(Xs, [(2,), (2,)]))
    for name, M in graded_subspaces():
        if isinstance(M, ComplementTensorSubspace):
            reports.append(service.coinvariant_tensor_check(M, _box(M.shape, 4)))
    return _merge("algebra", reports)


def perturbation_suite(service: InvariantService, seed: Optional[int] = None, q_max: int = 3) -> CheckReport:
    rng = random.Random((settings.SUITE_SEED if seed is None else seed) + 2)
    T, _ = nilpotent_tuple()
    reports = [
        service.perturbation_check(T, [[1, 0]], (q_max,)),
        service.perturbation_check(T, [[0, 1]], (q_max,), co_invariant=True),
    ]
    for _ in range(2):
        A, B = random_row_tuple(rng, 2, 2), random_row_tuple(rng, 2, 1)
        total = polyball_service.direct_sum(A, B)
        first = [[1 if c == r else 0 for c in range(total.dim)] for r in range(A.dim)]
        reports.append(service.perturbation_check(total, first, (q_max,)))
        reports.append(service.perturbation_check(total, first, (q_max,), co_invariant=True))
    return _merge("perturbation", reports)


def beurling_suite(service: InvariantService, q_max: int = 5) -> CheckReport:
    one = Shape(n=(2,))
    examples = [
        [FockVector.basis_vector(one, ((1,),))],
        [
            FockVector.basis_vector(one, ((1,),)) * Fraction(3, 5)
            + FockVector.basis_vector(one, ((2,),)) * Fraction(4, 5)
        ],
    ]
    reports = []
    for psis in examples:
        reports.append(subspace_service.beurling_verify(psis, (q_max,)))
        src = RestrictionSource(subspace_service.from_generators(one, 1, psis))
        records = [
            CheckRecord(
                name="classification",
                passed=Fraction(src.rank(q), fock_service.dim_leq(one, q)) == len(psis),
                q=list(q),
            )
            for q in fock_service.multidegrees_leq((q_max,))
        ]
        reports.append(CheckReport.from_records("classification", records))
    return _merge("beurling", reports)


def run_suites(
    names: Optional[Sequence[str]] = None,
    seed: Optional[int] = None,
    size: Optional[int] = None,
    workers: Optional[int] = None,
) -> SuiteReport:
    seed = settings.SUITE_SEED if seed is None else seed
    tuples = random_suite(size, seed)
    runners: dict[str, Callable[[InvariantService], CheckReport]] = {
        "universal-model": universal_model_suite,
        "range": range_suite,
        "kpk": lambda s: kpk_suite(tuples),
        "oracle-triangle": lambda s: oracle_suite(s, tuples),
        "inequality": lambda s: inequality_suite(s, tuples),
        "gbc": gbc_suite,
        "algebra": lambda s: algebra_suite(s, seed),
        "perturbation": lambda s: perturbation_suite(s, seed),
        "beurling": beurling_suite,
    }
    names = list(names or runners)
    unknown = [n for n in names if n not in runners]
    if unknown:
        raise InputFormatError(f"unknown suites {unknown}; available: {sorted(runners)}")
    reports = []
    with InvariantService(workers) as service:
        for name in names:
            report = runners[name](service)
            logger.info("suite %s: %s (%d records)", name, "pass" if report.passed else "FAIL", len(report.records))
            reports.append(report)
    return SuiteReport(seed=seed, passed=all(r.passed for r in reports), reports=reports)

