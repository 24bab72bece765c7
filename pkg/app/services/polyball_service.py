"""Finite-dimensional polyball tuples as rational matrices."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod
from pathlib import Path
from typing import Optional, Sequence, Union

from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import (
    GradingError,
    InputFormatError,
    InvarianceError,
    MembershipError,
    ShapeMismatchError,
)
from app.core.linalg import (
    RationalMatrix,
    block_diagonal,
    format_rational,
    kron,
    ldl_psd,
    orthogonal_projector,
    parse_rational,
    span_rank,
)
from app.models.fock import MultiDegree, Shape, leq
from app.models.invariants import CheckRecord, CheckReport
from app.models.polyball import DefectData, Grading, GradingSplit, PolyballTuple
from app.schemas.files import GradingFile, TupleFile
from app.services import fock_service

logger = logging.getLogger(__name__)


# completely positive maps


def phi_apply(T: PolyballTuple, i: int, Y: RationalMatrix) -> RationalMatrix:
    """Φ_{Tᵢ}(Y) = Σ_j T_{i,j} Y T_{i,j}ᵀ."""
    if Y.shape != (T.dim, T.dim):
        raise ShapeMismatchError(f"Φ acts on {T.dim}x{T.dim} matrices, got {Y.shape}")
    out = RationalMatrix.zeros(T.dim)
    for op in T.ops[i - 1]:
        out = out + op @ Y @ op.T
    return out


def phi_power(T: PolyballTuple, i: int, Y: RationalMatrix, power: int) -> RationalMatrix:
    for _ in range(power):
        Y = phi_apply(T, i, Y)
    return Y


def defect_map(T: PolyballTuple, p: Sequence[int], start: Optional[RationalMatrix] = None) -> RationalMatrix:
    """𝚫_T^p(start) = (id−Φ_{T₁})^{p₁}∘⋯∘(id−Φ_{T_k})^{p_k}(start), start = I by default."""
    if len(p) != T.shape.k or any(x not in (0, 1) for x in p):
        raise ShapeMismatchError(f"p must be a 0/1 vector of length {T.shape.k}, got {tuple(p)}")
    Y = T.identity() if start is None else start
    for i in reversed(range(1, T.shape.k + 1)):
        if p[i - 1]:
            Y = Y - phi_apply(T, i, Y)
    return Y


def defect_data(T: PolyballTuple) -> DefectData:
    delta = defect_map(T, (1,) * T.shape.k)
    basis = delta.column_basis()
    return DefectData(delta, len(basis), basis)


@dataclass
class Membership:
    member: bool
    p: Optional[MultiDegree] = None
    witness: Optional[list[Fraction]] = None
    value: Optional[Fraction] = None


def is_in_polyball(T: PolyballTuple, start: Optional[RationalMatrix] = None) -> Membership:
    """Exact PSD test of 𝚫_T^p(I) for every p ∈ {0,1}^k.

    With ``start`` the defect maps are taken at that operator instead of I,
    which tests the restriction of T to the range of a projection ``start``.
    """
    for p in fock_service.unit_vectors(T.shape.k):
        cert = ldl_psd(defect_map(T, p, start))
        if not cert.psd:
            logger.debug("tuple leaves the polyball at p=%s", p)
            return Membership(False, p, cert.witness, cert.witness_value)
    return Membership(True)


def require_membership(T: PolyballTuple, start: Optional[RationalMatrix] = None) -> None:
    result = is_in_polyball(T, start)
    if not result.member:
        raise MembershipError(
            f"defect map at p={result.p} is not positive: vᵀΔv = {format_rational(result.value)} "
            f"for v = [{', '.join(format_rational(x) for x in result.witness)}]",
            result.p,
            result.witness,
        )


# Berezin Gram matrices, three ways


def word_matrices(T: PolyballTuple, i: int, max_len: int) -> list[RationalMatrix]:
    """T_{i,β} for every word β over factor i with |β| ≤ max_len, length-lex."""
    current = [T.identity()]
    out = list(current)
    for _ in range(max_len):
        current = [prefix @ op for prefix in current for op in T.ops[i - 1]]
        out.extend(current)
    return out


def berezin_gram(T: PolyballTuple, q: MultiDegree, delta: Optional[RationalMatrix] = None) -> RationalMatrix:
    """𝐊*_T(P_{≤q}⊗I)𝐊_T = Σ_{|βᵢ|≤qᵢ} T_β Δ_T(I) T_βᵀ, built from explicit word products."""
    q = T.shape.check_degree(q)
    delta = defect_data(T).delta if delta is None else delta
    words = [word_matrices(T, i, qi) for i, qi in enumerate(q, start=1)]
    out = RationalMatrix.zeros(T.dim)
    for combo in _products(words):
        out = out + combo @ delta @ combo.T
    return out


def _products(words: list[list[RationalMatrix]]):
    acc = [None]
    for factor in words:
        acc = [m if a is None else a @ m for a in acc for m in factor]
    return acc


def power_numerator(T: PolyballTuple, q: MultiDegree, start: Optional[RationalMatrix] = None) -> RationalMatrix:
    """(id−Φ_{T₁}^{q₁+1})∘⋯∘(id−Φ_{T_k}^{q_k+1})(start)."""
    q = T.shape.check_degree(q)
    Y = T.identity() if start is None else start
    for i in reversed(range(1, T.shape.k + 1)):
        Y = Y - phi_power(T, i, Y, q[i - 1] + 1)
    return Y


def telescoping_gram(T: PolyballTuple, q: MultiDegree, delta: Optional[RationalMatrix] = None) -> RationalMatrix:
    """Σ_{s≤q} Φ_{T₁}^{s₁}∘⋯∘Φ_{T_k}^{s_k}(Δ_T(I)), accumulated factor by factor."""
    q = T.shape.check_degree(q)
    Y = defect_data(T).delta if delta is None else delta
    for i in reversed(range(1, T.shape.k + 1)):
        term, total = Y, Y
        for _ in range(q[i - 1]):
            term = phi_apply(T, i, term)
            total = total + term
        Y = total
    return Y


def span_dim(T: PolyballTuple, D: Sequence[Sequence[Fraction]], q: MultiDegree) -> int:
    """dim span{T_{1,α₁}⋯T_{k,α_k} h : |αᵢ| ≤ qᵢ, h ∈ D}, breadth-first per factor."""
    q = T.shape.check_degree(q)
    basis = _basis(D, T.dim)
    for i in reversed(range(1, T.shape.k + 1)):
        level, total = basis, basis
        for _ in range(q[i - 1]):
            if not level:
                break
            images = [op.power_apply(v) for v in level for op in T.ops[i - 1]]
            level = _basis(images, T.dim)
            total = _basis(total + level, T.dim)
        basis = total
    return len(basis)


def _basis(vectors: Sequence[Sequence[Fraction]], dim: int) -> list[list[Fraction]]:
    vectors = [list(v) for v in vectors if any(x != 0 for x in v)]
    if not vectors:
        return []
    return RationalMatrix.from_rows(vectors, dim).row_basis()


# purity


@dataclass
class PurityReport:
    max_power: int
    tol: Fraction
    traces: dict[int, list[Fraction]] = field(default_factory=dict)
    decayed: bool = False

    @property
    def verdict(self) -> str:
        return f"pure up to max_power={self.max_power}" if self.decayed else "not decayed"


def is_pure(
    T: PolyballTuple, tol: Optional[Fraction] = None, max_power: Optional[int] = None
) -> PurityReport:
    """Traces of Φ_{Tᵢ}^p(I), p = 1..max_power; a bounded-power diagnostic only."""
    tol = parse_rational(settings.PURITY_TOL) if tol is None else Fraction(tol)
    max_power = settings.PURITY_MAX_POWER if max_power is None else max_power
    if max_power < 1:
        raise InputFormatError(f"purity needs max_power >= 1, got {max_power}")
    report = PurityReport(max_power, tol)
    decayed = True
    for i in range(1, T.shape.k + 1):
        Y = T.identity()
        traces = []
        for _ in range(max_power):
            Y = phi_apply(T, i, Y)
            traces.append(Y.trace())
            if Y.is_zero():
                break
        report.traces[i] = traces
        decayed = decayed and traces[-1] < tol
    report.decayed = decayed
    return report


# constructions on tuples


def ampliation(Xs: Sequence[PolyballTuple]) -> PolyballTuple:
    """X̃ with X̃^{(i)}_{r,s} = I⊗⋯⊗X^{(i)}_{r,s}⊗⋯⊗I on H₁⊗⋯⊗H_m."""
    if not Xs:
        raise InputFormatError("ampliation of an empty family")
    if len(Xs) == 1:
        return Xs[0]
    dims = [X.dim for X in Xs]
    rows = []
    for idx, X in enumerate(Xs):
        left = RationalMatrix.identity(prod(dims[:idx]))
        right = RationalMatrix.identity(prod(dims[idx + 1 :]))
        for row in X.ops:
            rows.append(tuple(kron(kron(left, op), right) for op in row))
    shape = Shape(n=tuple(ni for X in Xs for ni in X.shape.n))
    return PolyballTuple(shape, prod(dims), tuple(rows))


def direct_sum(T: PolyballTuple, S: PolyballTuple) -> PolyballTuple:
    if T.shape != S.shape:
        raise ShapeMismatchError(f"direct sum of shapes {T.shape.n} and {S.shape.n}")
    if S.dim == 0:
        return T
    if T.dim == 0:
        return S
    ops = tuple(
        tuple(block_diagonal(a, b) for a, b in zip(row_t, row_s)) for row_t, row_s in zip(T.ops, S.ops)
    )
    return PolyballTuple(T.shape, T.dim + S.dim, ops)


# gradings


def check_grading(T: PolyballTuple, g: Grading) -> None:
    if len(g.degree_of) != T.dim:
        raise InputFormatError(f"grading lists {len(g.degree_of)} degrees for a {T.dim}-dimensional space")
    for b, s in enumerate(g.degree_of):
        if len(s) != T.shape.k:
            raise InputFormatError(f"degree {s} of basis vector {b} has the wrong length")
    for i in range(1, T.shape.k + 1):
        for j, op in enumerate(T.ops[i - 1], start=1):
            rows = op.to_list()
            for b, s in enumerate(g.degree_of):
                target = tuple(x + (1 if l == i - 1 else 0) for l, x in enumerate(s))
                if any(rows[a][b] != 0 and g.degree_of[a] != target for a in range(T.dim)):
                    raise GradingError(i, j, s)


def grading_split(T: PolyballTuple, g: Grading) -> GradingSplit:
    """Support window [c, d] of Δ_T(I) and the restriction of T to H₀ = ⊕_{s≥d} H_s."""
    check_grading(T, g)
    delta = defect_data(T).delta.to_list()
    support = sorted(
        {g.degree_of[b] for b in range(T.dim) if any(delta[a][b] != 0 for a in range(T.dim))}
    )
    if not support:
        raise InputFormatError("Δ_T(I) vanishes; there is no support window")
    k = T.shape.k
    c = tuple(min(s[i] for s in support) for i in range(k))
    d = tuple(max(s[i] for s in support) for i in range(k))
    h0 = [b for b, s in enumerate(g.degree_of) if leq(d, s)]
    restricted = PolyballTuple(
        T.shape,
        len(h0),
        tuple(tuple(op.submatrix(h0, h0) for op in row) for row in T.ops),
    )
    member = is_in_polyball(restricted).member if h0 else True
    logger.info("grading window c=%s d=%s, dim H0=%d", c, d, len(h0))
    return GradingSplit(c, d, h0, restricted, member)


def grading_commutation_check(T: PolyballTuple, g: Grading) -> CheckReport:
    """Δ_T(I) Q_s = Q_s Δ_T(I) for every degree s present."""
    check_grading(T, g)
    delta = defect_data(T).delta
    records = []
    for s in g.degrees():
        idx = set(g.indices_of(s))
        Q = RationalMatrix.diagonal([1 if b in idx else 0 for b in range(T.dim)])
        records.append(
            CheckRecord(name="grading-commutation", passed=delta @ Q == Q @ delta, q=list(s))
        )
    return CheckReport.from_records("grading-commutation", records)


# invariant subspaces of H and their projections


def invariance_witness(T: PolyballTuple, basis: Sequence[Sequence[Fraction]], co: bool = False):
    """A column b and operator (i, j) with T_{i,j} b (or T_{i,j}ᵀ b) outside span(basis)."""
    cols = _basis(basis, T.dim)
    rank = len(cols)
    for i in range(1, T.shape.k + 1):
        for j, op in enumerate(T.ops[i - 1], start=1):
            op = op.T if co else op
            for b in cols:
                image = op.power_apply(b)
                if span_rank(cols + [image], T.dim) > rank:
                    return (i, j), b, image
    return None


def require_invariant(T: PolyballTuple, basis, co: bool = False) -> RationalMatrix:
    witness = invariance_witness(T, basis, co)
    if witness is not None:
        (i, j), b, image = witness
        kind = "co-invariant" if co else "invariant"
        raise InvarianceError(
            f"subspace is not {kind}: T[{i},{j}]{'ᵀ' if co else ''} maps "
            f"[{', '.join(format_rational(x) for x in b)}] outside it",
            {"op": [i, j], "vector": [format_rational(x) for x in b]},
        )
    return orthogonal_projector(basis, T.dim)


def restriction_numerator(T: PolyballTuple, P: RationalMatrix, q: MultiDegree) -> RationalMatrix:
    """Numerator of T|_M written on H through P = P_M."""
    return power_numerator(T, q, start=P)


def compression_numerator(T: PolyballTuple, P: RationalMatrix, q: MultiDegree) -> RationalMatrix:
    """Numerator of P_M T|_M for co-invariant M: P_M[(id−Φ^{q+1})∘⋯(I)]P_M."""
    return P @ power_numerator(T, q) @ P


# identity checks


def kpk_check(T: PolyballTuple, q_max: MultiDegree) -> CheckReport:
    delta = defect_data(T).delta
    records = []
    for q in fock_service.multidegrees_leq(q_max):
        ok = berezin_gram(T, q, delta) == power_numerator(T, q)
        records.append(CheckRecord(name="kpk", passed=ok, q=list(q)))
    return CheckReport.from_records("kpk", records)


def telescoping_check(T: PolyballTuple, q_max: MultiDegree) -> CheckReport:
    delta = defect_data(T).delta
    records = []
    for q in fock_service.multidegrees_leq(q_max):
        ok = telescoping_gram(T, q, delta) == berezin_gram(T, q, delta)
        records.append(CheckRecord(name="telescoping", passed=ok, q=list(q)))
    return CheckReport.from_records("telescoping", records)


def range_identity_check(T: PolyballTuple, q_max: MultiDegree) -> CheckReport:
    data = defect_data(T)
    records = []
    for q in fock_service.multidegrees_leq(q_max):
        gram_rank = berezin_gram(T, q, data.delta).rank()
        orbit = span_dim(T, data.defect_basis, q)
        records.append(
            CheckRecord(
                name="range-identity",
                passed=gram_rank == orbit,
                q=list(q),
                detail=f"rank={gram_rank} span_dim={orbit}",
            )
        )
    return CheckReport.from_records("range-identity", records)


def psd_chain_check(T: PolyballTuple, q_max: MultiDegree) -> CheckReport:
    """0 ≼ G(q) ≼ G(q + eᵢ) ≼ I along the box, G the Berezin Gram matrix."""
    delta = defect_data(T).delta
    grams = {q: berezin_gram(T, q, delta) for q in fock_service.multidegrees_leq(q_max)}
    records = []
    for q, G in grams.items():
        ok = ldl_psd(G).psd and ldl_psd(T.identity() - G).psd
        for i in range(T.shape.k):
            nxt = tuple(x + (1 if l == i else 0) for l, x in enumerate(q))
            if nxt in grams:
                ok = ok and ldl_psd(grams[nxt] - G).psd
        records.append(CheckRecord(name="psd-chain", passed=ok, q=list(q)))
    # bounded-power decay is reported alongside, never used as a pass/fail certificate
    purity = is_pure(T)
    records.append(
        CheckRecord(
            name="purity",
            passed=True,
            detail=purity.verdict,
            witness={str(i): [format_rational(t) for t in traces] for i, traces in purity.traces.items()},
        )
    )
    return CheckReport.from_records("psd-chain", records)


def ampliation_defect_check(Xs: Sequence[PolyballTuple]) -> CheckReport:
    amp = ampliation(Xs)
    expected = defect_data(Xs[0]).delta
    for X in Xs[1:]:
        expected = kron(expected, defect_data(X).delta)
    actual = defect_data(amp).delta
    ranks = [defect_data(X).delta_rank for X in Xs]
    records = [
        CheckRecord(name="ampliation-defect", passed=actual == expected),
        CheckRecord(
            name="ampliation-rank",
            passed=actual.rank() == prod(ranks),
            detail=f"rank {actual.rank()} vs product {prod(ranks)}",
        ),
    ]
    return CheckReport.from_records("ampliation", records)


# files


def tuple_from_file(data: TupleFile) -> tuple[PolyballTuple, Optional[Grading]]:
    shape = Shape(n=tuple(data.shape))
    T = PolyballTuple.from_rows(shape, data.dim, data.ops)
    grading = None
    if data.grading is not None:
        grading = Grading(tuple(tuple(s) for s in data.grading.degrees))
    return T, grading


def tuple_to_file(T: PolyballTuple, grading: Optional[Grading] = None) -> TupleFile:
    return TupleFile(
        shape=list(T.shape.n),
        dim=T.dim,
        ops=[[op.to_list() for op in row] for row in T.ops],
        grading=GradingFile(degrees=[list(s) for s in grading.degree_of]) if grading else None,
    )


def load_tuple(path: Union[str, Path]) -> tuple[PolyballTuple, Optional[Grading]]:
    try:
        data = TupleFile.model_validate_json(Path(path).read_text())
    except (OSError, ValidationError) as e:
        raise InputFormatError(f"{path}: {e}") from e
    return tuple_from_file(data)
