"""Operations on graded invariant subspaces: defects, Beurling checks, numeric mode."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import (
    HypothesisError,
    InputFormatError,
    ShapeMismatchError,
)
from app.core.linalg import PsdCertificate, RationalMatrix, format_rational, ldl_psd
from app.models.fock import FockVector, MultiDegree, Shape, leq
from app.models.invariants import CheckRecord, CheckReport, NumericEntry, NumericReport
from app.models.subspace import (
    ComplementTensorSubspace,
    FullSubspace,
    GeneratedSubspace,
    GradedSubspace,
)
from app.schemas.files import SubspaceFile
from app.services import fock_service

logger = logging.getLogger(__name__)


def from_generators(shape: Shape, mult_dim: int, gens: Sequence[FockVector]) -> GeneratedSubspace:
    return GeneratedSubspace(shape, mult_dim, gens)


def zero_subspace(shape: Shape, mult_dim: int = 1) -> GeneratedSubspace:
    return GeneratedSubspace(shape, mult_dim, [])


def suffix_subspace(n: int, suffixes: Sequence[Sequence[int]]) -> GeneratedSubspace:
    """⊕_β F²(H_n)⊗e_β: all words ending in one of ``suffixes``."""
    shape = Shape(n=(n,))
    gens = [FockVector.basis_vector(shape, (tuple(beta),)) for beta in suffixes]
    return GeneratedSubspace(shape, 1, gens)


def block_dim(M: GradedSubspace, s: MultiDegree) -> int:
    return M.block_dim(s)


def dim_leq_sub(M: GradedSubspace, q: MultiDegree) -> int:
    return M.dim_leq_sub(q)


def project_block(M: GradedSubspace, s: MultiDegree, xi: FockVector) -> FockVector:
    return M.project_block(s, xi)


def trace_leq(M: GradedSubspace, q: MultiDegree) -> Fraction:
    """trace[P_M (P_{≤q} ⊗ I_E)] summed blockwise from Σ ⟨P b, b⟩."""
    return sum((M.block_trace(s) for s in fock_service.multidegrees_leq(q)), Fraction(0))


def defect_apply(M: GradedSubspace, xi: FockVector, depth: MultiDegree) -> FockVector:
    """Δ_M ξ = Σ_{p∈{0,1}^k} (−1)^{|p|} Σ_{|αᵢ|=pᵢ} 𝐒_α P_M 𝐒_α* ξ."""
    depth = M.shape.check_degree(depth)
    if xi.shape != M.shape or xi.mult_dim != M.mult_dim:
        raise ShapeMismatchError("vector and subspace live in different spaces")
    if not all(leq(d, depth) for d in xi.degrees()):
        raise ShapeMismatchError(f"vector has components beyond depth {depth}")
    parts = []
    for p in fock_service.unit_vectors(M.shape.k):
        sign = -1 if sum(p) % 2 else 1
        for alpha in fock_service.enumerate_basis(M.shape, p):
            v = xi
            for i, w in enumerate(alpha, start=1):
                for letter in w:
                    v = fock_service.apply_left_annihilation(i, letter, v)
            if v.is_zero():
                continue
            parts.append(fock_service.prepend(alpha, M.project(v)) * sign)
    return FockVector.sum(parts, M.shape, M.mult_dim)


def defect_block(M: GradedSubspace, s: MultiDegree) -> RationalMatrix:
    """Matrix of Δ_M on H_s ⊗ E (Δ_M is block diagonal in the grading)."""
    cache = M._defect_blocks
    if s in cache:
        return cache[s]
    size = M.ambient_block_dim(s)
    columns = [
        fock_service.to_block_coords(
            defect_apply(M, fock_service.block_unit(M.shape, M.mult_dim, s, idx), s), s
        )
        for idx in range(size)
    ]
    matrix = RationalMatrix.from_columns(columns, size) if size else RationalMatrix.zeros(0)
    cache[s] = matrix
    return matrix


def defect_window(M: GradedSubspace) -> dict[MultiDegree, RationalMatrix]:
    """Blocks of Δ_M inside the window; Δ_M vanishes on every other block."""
    return {s: defect_block(M, s) for s in fock_service.multidegrees_leq(M.window)}


def defect_trace(M: GradedSubspace) -> Fraction:
    return sum((block.trace() for block in defect_window(M).values()), Fraction(0))


def defect_rank(M: GradedSubspace) -> int:
    return sum(block.rank() for block in defect_window(M).values())


@dataclass
class BeurlingCertificate:
    beurling: bool
    block: Optional[MultiDegree] = None
    certificate: Optional[PsdCertificate] = None
    witness: Optional[FockVector] = None


def beurling_certificate(M: GradedSubspace) -> BeurlingCertificate:
    """Δ_M ≥ 0 blockwise; on failure a vector ξ with ⟨Δ_M ξ, ξ⟩ < 0."""
    for s, block in defect_window(M).items():
        cert = ldl_psd(block)
        if not cert.psd:
            witness = fock_service.from_block_coords(M.shape, M.mult_dim, s, cert.witness)
            return BeurlingCertificate(False, s, cert, witness)
    return BeurlingCertificate(True)


@dataclass
class RestrictionData:
    """Range of Δ_M per window block, and the spans W'(c, ℓ) of its shifts."""

    M: GradedSubspace
    ranges: dict[MultiDegree, list[FockVector]] = field(default_factory=dict)
    spans: dict[tuple[MultiDegree, MultiDegree], int] = field(default_factory=dict)


def restriction_data(M: GradedSubspace) -> RestrictionData:
    cert = beurling_certificate(M)
    if not cert.beurling:
        raise HypothesisError(
            f"defect of the subspace is not positive on block {cert.block} "
            f"(quadratic form {format_rational(cert.certificate.witness_value)} at {cert.witness})",
            "Beurling type invariant subspace (Δ_M ≥ 0)",
        )
    data = RestrictionData(M)
    for s, block in defect_window(M).items():
        data.ranges[s] = [
            fock_service.from_block_coords(M.shape, M.mult_dim, s, row) for row in block.row_basis()
        ]
    return data


def _shifted_span_dim(data: RestrictionData, c: MultiDegree, low: MultiDegree) -> int:
    key = (c, low)
    if key not in data.spans:
        M = data.M
        rows = []
        for s in fock_service.multidegrees_between(low, c):
            vectors = data.ranges.get(s, [])
            if not vectors:
                continue
            gap = tuple(a - b for a, b in zip(c, s))
            for gamma in fock_service.enumerate_basis(M.shape, gap):
                rows.extend(
                    fock_service.to_block_coords(fock_service.prepend(gamma, v), c) for v in vectors
                )
        size = M.ambient_block_dim(c)
        data.spans[key] = RationalMatrix.from_rows(rows, size).rank() if rows else 0
    return data.spans[key]


def restriction_rank(data: RestrictionData, q: MultiDegree) -> int:
    """dim span{𝐒_γ v : |γᵢ| ≤ qᵢ, v ∈ range Δ_M}, the rank of the restriction numerator."""
    M = data.M
    D = M.window
    top = tuple(a + b for a, b in zip(q, D))
    total = 0
    for u in fock_service.multidegrees_leq(top):
        c = tuple(min(a, b) for a, b in zip(u, D))
        low = tuple(max(0, a - b) for a, b in zip(u, q))
        dim = _shifted_span_dim(data, c, low)
        if dim:
            total += fock_service.dim_level(M.shape, tuple(a - b for a, b in zip(u, c))) * dim
    return total


def restriction_trace(M: GradedSubspace, q: MultiDegree) -> Fraction:
    # the restricted shifts are isometries, so every word contributes trace Δ_M
    return defect_trace(M) * fock_service.dim_leq(M.shape, q)


def check_invariance(M: GradedSubspace, s_max: MultiDegree) -> CheckReport:
    """Every 𝐒_{i,j} maps each cached block basis of M_s into M_{s+eᵢ}."""
    records = []
    for s in fock_service.multidegrees_leq(s_max):
        failure = None
        for b in M.block_basis(s):
            for i, ni in enumerate(M.shape.n, start=1):
                target = tuple(x + (1 if l == i - 1 else 0) for l, x in enumerate(s))
                for j in range(1, ni + 1):
                    image = fock_service.apply_left_creation(i, j, b)
                    if M.project_block(target, image) != image:
                        failure = f"S[{i},{j}] maps {b} outside the block {target}"
                        break
                if failure:
                    break
            if failure:
                break
        records.append(CheckRecord(name="invariance", passed=failure is None, q=list(s), detail=failure or ""))
    return CheckReport.from_records("invariance", records)


def beurling_verify(psis: Sequence[FockVector], q: MultiDegree) -> CheckReport:
    """Exact checks of the Beurling decomposition on H_{≤q}.

    (a) the right multipliers ψ̃_s(𝐑) are isometries with orthogonal ranges;
    (b) Σ ψ̃_s(𝐑)ψ̃_s(𝐑)* is the projection onto the generated subspace;
    (c) Δ_M ξ = Σ ⟨ξ, ψ_s⟩ ψ_s.
    Stops at the first failing stage.
    """
    if not psis:
        raise InputFormatError("Beurling check needs at least one symbol")
    shape, r = psis[0].shape, psis[0].mult_dim
    q = shape.check_degree(q)
    levels = fock_service.multidegrees_leq(q)

    stage_a = _isometry_records(psis, shape, levels)
    if not all(rec.passed for rec in stage_a):
        return CheckReport.from_records("beurling", stage_a)

    M = from_generators(shape, r, psis)
    records = list(stage_a)
    for s in levels:
        failure = None
        for idx in range(M.ambient_block_dim(s)):
            u = fock_service.block_unit(shape, r, s, idx)
            lhs = FockVector.sum(
                (
                    fock_service.right_multiplier(psi, fock_service.right_multiplier_adjoint(psi, u))
                    for psi in psis
                ),
                shape,
                r,
            )
            if lhs != M.project_block(s, u):
                failure = f"Σψ̃ψ̃* differs from the projection at {u}"
                break
        records.append(CheckRecord(name="reconstruction", passed=failure is None, q=list(s), detail=failure or ""))
    for s in levels:
        failure = None
        for idx in range(M.ambient_block_dim(s)):
            u = fock_service.block_unit(shape, r, s, idx)
            expected = FockVector.sum(
                (psi * fock_service.inner_product(u, psi) for psi in psis), shape, r
            )
            if defect_apply(M, u, q) != expected:
                failure = f"Δ_M differs from Σ⟨ξ,ψ⟩ψ at {u}"
                break
        records.append(CheckRecord(name="defect", passed=failure is None, q=list(s), detail=failure or ""))
    report = CheckReport.from_records("beurling", records)
    logger.info("beurling check on %d symbols up to %s: %s", len(psis), q, report.passed)
    return report


def _isometry_records(psis, shape: Shape, levels) -> list[CheckRecord]:
    images = []
    for s_idx, psi in enumerate(psis):
        for level in levels:
            for words in fock_service.enumerate_basis(shape, level):
                e = FockVector.basis_vector(shape, words)
                images.append((s_idx, words, fock_service.right_multiplier(psi, e)))
    by_key: dict = {}
    for pos, (_, _, image) in enumerate(images):
        for key in image.coeffs:
            by_key.setdefault(key, set()).add(pos)
    checked = set()
    for pos, (s_idx, words, image) in enumerate(images):
        partners = set().union(*(by_key[key] for key in image.coeffs)) if image.coeffs else set()
        partners.add(pos)
        for other in sorted(partners):
            pair = (min(pos, other), max(pos, other))
            if pair in checked:
                continue
            checked.add(pair)
            t_idx, other_words, other_image = images[other]
            expected = Fraction(1 if (s_idx == t_idx and words == other_words) else 0)
            value = fock_service.inner_product(image, other_image)
            if value != expected:
                return [
                    CheckRecord(
                        name="isometry",
                        passed=False,
                        q=[len(w) for w in words],
                        detail=(
                            f"<psi~_{s_idx + 1}(R){_label(words)}, psi~_{t_idx + 1}(R){_label(other_words)}> "
                            f"= {format_rational(value)}, expected {format_rational(expected)}"
                        ),
                        witness={"value": format_rational(value), "s": s_idx + 1, "t": t_idx + 1},
                    )
                ]
    return [CheckRecord(name="isometry", passed=True, detail=f"{len(images)} images checked")]


def _label(words) -> str:
    return "e[" + "|".join("".join(str(j) for j in w) or "1" for w in words) + "]"


def load_subspace(source: Union[str, Path, SubspaceFile]) -> GradedSubspace:
    """Build a subspace from a JSON file; non-homogeneous generators raise NotHomogeneousError."""
    data = source if isinstance(source, SubspaceFile) else _read_subspace_file(source)
    if data.kind == "complement_tensor":
        factors = [suffix_subspace(f.n, f.suffixes) for f in data.factors]
        return ComplementTensorSubspace(factors, data.mult_dim)
    shape = Shape(n=tuple(data.shape))
    if data.kind == "full":
        return FullSubspace(shape, data.mult_dim)
    gens = [fock_service.vector_from_file(g, shape, data.mult_dim) for g in data.generators]
    return from_generators(shape, data.mult_dim, gens)


def load_generators(source: Union[str, Path, SubspaceFile]) -> tuple[Shape, int, list[FockVector]]:
    data = source if isinstance(source, SubspaceFile) else _read_subspace_file(source)
    shape = Shape(n=tuple(data.shape))
    return shape, data.mult_dim, [fock_service.vector_from_file(g, shape, data.mult_dim) for g in data.generators]


def _read_subspace_file(path: Union[str, Path]) -> SubspaceFile:
    try:
        return SubspaceFile.model_validate_json(Path(path).read_text())
    except (OSError, ValidationError) as e:
        raise InputFormatError(f"{path}: {e}") from e


def numeric_mode_trace(
    gens: Sequence[FockVector],
    q: MultiDegree,
    inner_cutoff: MultiDegree,
    shape: Optional[Shape] = None,
    mult_dim: int = 1,
) -> NumericReport:
    """Floating-point trace[P_{M^{(Q)}} P_{≤q}] for growing inner cutoffs Q.

    M^{(Q)} = span{𝐒_α g : |αᵢ| + maxdegᵢ(g) ≤ Qᵢ}. Approximate only; exact
    paths never go through here.
    """
    if gens:
        shape, mult_dim = gens[0].shape, gens[0].mult_dim
    if shape is None:
        raise InputFormatError("numeric mode needs a shape when no generators are given")
    q = shape.check_degree(q)
    inner_cutoff = shape.check_degree(inner_cutoff)
    if not leq(q, inner_cutoff):
        raise InputFormatError(f"inner cutoff {inner_cutoff} must dominate q = {q}")

    cutoffs = []
    step = 0
    while True:
        cutoff = tuple(min(a + step, b) for a, b in zip(q, inner_cutoff))
        cutoffs.append(cutoff)
        if cutoff == inner_cutoff:
            break
        step += 1

    report = NumericReport(q=list(q))
    previous = None
    for cutoff in cutoffs:
        value, rank, cond = _numeric_value(gens, shape, mult_dim, q, cutoff)
        report.entries.append(NumericEntry(cutoff=list(cutoff), value=value, rank=rank, condition=cond))
        if cond > settings.NUMERIC_COND_LIMIT:
            report.ill_conditioned = True
            logger.warning("numeric mode: Gram system at cutoff %s has condition %.3g", cutoff, cond)
        if previous is not None:
            report.last_increment = value - previous
            if value < previous - 1e-9:
                report.monotone = False
        previous = value
    return report


def _numeric_value(gens, shape: Shape, r: int, q: MultiDegree, cutoff: MultiDegree):
    rows: dict = {}
    for level in fock_service.multidegrees_leq(cutoff):
        for words in fock_service.enumerate_basis(shape, level):
            for m in range(1, r + 1):
                rows[(words, m)] = len(rows)
    columns = []
    for g in gens:
        maxdeg = tuple(max(len(words[i]) for words, _ in g.coeffs) for i in range(shape.k))
        if not leq(maxdeg, cutoff):
            continue
        room = tuple(a - b for a, b in zip(cutoff, maxdeg))
        for level in fock_service.multidegrees_leq(room):
            for alpha in fock_service.enumerate_basis(shape, level):
                columns.append(fock_service.prepend(alpha, g))
    if not columns:
        return 0.0, 0, 1.0
    a = np.zeros((len(rows), len(columns)))
    for col, v in enumerate(columns):
        for key, c in v.coeffs.items():
            a[rows[key], col] = float(c)
    u, sing, _ = np.linalg.svd(a, full_matrices=False)
    rank = int(np.sum(sing > settings.NUMERIC_RANK_TOL * sing[0])) if sing.size and sing[0] > 0 else 0
    if rank == 0:
        return 0.0, 0, 1.0
    inside = [idx for key, idx in rows.items() if leq(tuple(len(w) for w in key[0]), q)]
    basis = u[:, :rank]
    value = float(np.sum(basis[inside, :] ** 2))
    return value, rank, float(sing[0] / sing[rank - 1])
