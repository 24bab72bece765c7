"""Base-n expansions and the subspace families M_i(t), M(t) and M^{(ω)}(t)."""
from __future__ import annotations

import logging
from fractions import Fraction
from math import floor
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import ExpansionError, InputFormatError, ShapeMismatchError
from app.models.constructions import (
    Construction,
    ConstructionReport,
    ExpansionSpec,
    ExpansionTerm,
    FactorSummary,
    LevelRow,
)
from app.models.fock import Shape, Word
from app.models.invariants import CheckRecord, CheckReport
from app.models.subspace import ComplementTensorSubspace, GeneratedSubspace
from app.schemas.files import ConstructionSpec
from app.services import subspace_service

logger = logging.getLogger(__name__)


def expand(t: Fraction, n: int, max_terms: Optional[int] = None) -> ExpansionSpec:
    """Greedy base-n digits of 1 − t, keeping the nonzero ones.

    The digit at every position is capped at n − 1, so x = 1 produces the
    repeating expansion 0.(n−1)(n−1)… and stays inexact; any x < 1 with a
    terminating expansion terminates.
    """
    t = Fraction(t)
    max_terms = max_terms or settings.EXPANSION_MAX_TERMS
    if not 0 <= t < 1:
        raise ExpansionError(f"t = {t} outside [0, 1)")
    if n < 2:
        raise ExpansionError(f"expansions need n >= 2, got {n}")
    x = 1 - t
    terms: list[ExpansionTerm] = []
    position = 0
    while x != 0 and len(terms) < max_terms:
        position += 1
        digit = min(floor(x * n), n - 1)
        x = x * n - digit
        if digit:
            terms.append(ExpansionTerm(k=position, d=digit))
    spec = ExpansionSpec(n=n, t=t, terms=terms, exact=x == 0)
    if not spec.exact:
        logger.info("expansion of 1 - %s in base %d truncated after %d terms", t, n, len(terms))
    return spec


def _full_expansion(n: int) -> ExpansionSpec:
    """t = 1: no digits, the factor subspace is zero."""
    return ExpansionSpec(n=n, t=Fraction(1), terms=[], exact=True)


def build_Ji(spec: ExpansionSpec) -> list[Word]:
    """∪ J_p: J₁ = {g_m^{k₁}}, J_p = {g_m^{k_p − k_{p−1}} g_n^{k_{p−1}}}, m ≤ d_p."""
    words: list[Word] = []
    previous = 0
    for term in spec.terms:
        for m in range(1, term.d + 1):
            words.append((m,) * (term.k - previous) + (spec.n,) * previous)
        previous = term.k
    return words


def suffix_free_check(words: Sequence[Word]) -> CheckReport:
    """No word of the set ends with another one (the suffix subspaces are then orthogonal)."""
    records = []
    for i, a in enumerate(words):
        for j, b in enumerate(words):
            if i != j and len(a) <= len(b) and tuple(b[len(b) - len(a):]) == tuple(a):
                records.append(
                    CheckRecord(name="suffix-free", passed=False, detail=f"{list(a)} is a suffix of {list(b)}")
                )
    if not records:
        records.append(CheckRecord(name="suffix-free", passed=True, detail=f"{len(words)} words"))
    return CheckReport.from_records("suffix-free", records)


def build_Mi(spec: ExpansionSpec) -> GeneratedSubspace:
    """⊕_{β∈∪J_p} F²(H_n)⊗e_β."""
    return subspace_service.suffix_subspace(spec.n, build_Ji(spec))


def _check_shape(shape: Shape) -> None:
    if any(ni < 2 for ni in shape.n):
        raise ShapeMismatchError(f"constructions need nᵢ >= 2, got {shape.n}")


def _zero_factors(shape: Shape, start: int) -> list[GeneratedSubspace]:
    return [subspace_service.zero_subspace(Shape(n=(ni,))) for ni in shape.n[start:]]


def build_M_t(
    shape: Shape, t: Fraction, max_terms: Optional[int] = None, multiplicity: int = 1
) -> Construction:
    """M(t) = (M₁(t)⊥ ⊗ F² ⊗ ⋯ ⊗ F² ⊗ ℂᵐ)⊥, with coinvariant χ = m·t."""
    _check_shape(shape)
    t = Fraction(t)
    n1 = shape.n[0]
    spec = _full_expansion(n1) if t == 1 else expand(t, n1, max_terms)
    factors = [build_Mi(spec)] + _zero_factors(shape, 1)
    return Construction(
        name="M(t)",
        subspace=ComplementTensorSubspace(factors, multiplicity),
        expansions=[spec],
        closed_form=multiplicity * t,
        multiplicity=multiplicity,
    )


def build_M_omega_t(
    shape: Shape,
    t: Fraction,
    omega: Fraction,
    max_terms: Optional[int] = None,
    multiplicity: int = 1,
) -> Construction:
    """M^{(ω)}(t) = (M₁(ω)⊥ ⊗ M₂(t/ω)⊥ ⊗ F² ⊗ ⋯)⊥; its factor-1 ratio is ω."""
    if shape.k < 2:
        raise ShapeMismatchError("the ω-family needs at least two tensor factors")
    _check_shape(shape)
    t, omega = Fraction(t), Fraction(omega)
    if not 0 < t < omega < 1:
        raise ExpansionError(f"need 0 < t < ω < 1, got t = {t}, ω = {omega}")
    first = expand(omega, shape.n[0], max_terms)
    second = expand(t / omega, shape.n[1], max_terms)
    factors = [build_Mi(first), build_Mi(second)] + _zero_factors(shape, 2)
    return Construction(
        name="M_omega(t)",
        subspace=ComplementTensorSubspace(factors, multiplicity),
        expansions=[first, second],
        closed_form=multiplicity * t,
        multiplicity=multiplicity,
    )


def build(spec: ConstructionSpec) -> Construction:
    shape = Shape(n=tuple(spec.shape))
    try:
        if spec.omega is None:
            return build_M_t(shape, spec.t, spec.max_terms, spec.multiplicity)
        return build_M_omega_t(shape, spec.t, spec.omega, spec.max_terms, spec.multiplicity)
    except ValidationError as e:
        raise ExpansionError(str(e)) from e


def parse_construct(text: str, shape: Optional[Sequence[int]] = None) -> ConstructionSpec:
    """``"t=5/8,omega=1/2,m=2"`` or ``"@spec.json"`` -> ConstructionSpec."""
    if text.startswith("@"):
        return load_construction(text[1:], shape)
    fields: dict = {}
    aliases = {"ω": "omega", "w": "omega", "m": "multiplicity", "N": "max_terms"}
    for part in filter(None, (p.strip() for p in text.split(","))):
        key, sep, value = part.partition("=")
        if not sep:
            raise ExpansionError(f"construction fields are key=value, got {part!r}")
        fields[aliases.get(key.strip(), key.strip())] = value.strip()
    if shape is not None:
        fields["shape"] = list(shape)
    try:
        return ConstructionSpec.model_validate(fields)
    except ValidationError as e:
        raise ExpansionError(f"bad construction {text!r}: {e}") from e


def load_construction(path: str, shape: Optional[Sequence[int]] = None) -> ConstructionSpec:
    try:
        spec = ConstructionSpec.model_validate_json(Path(path).read_text())
    except (OSError, ValidationError) as e:
        raise InputFormatError(f"{path}: {e}") from e
    if shape is not None:
        spec.shape = list(shape)
    return spec


def report(construction: Construction, q_max: int) -> ConstructionReport:
    M = construction.subspace
    factors = []
    for i, factor in enumerate(M.factors):
        spec = construction.expansions[i] if i < len(construction.expansions) else None
        n = factor.shape.n[0]
        levels = [
            LevelRow(
                q=q,
                block_dim=factor.block_dim((q,)),
                complement_ratio=Fraction(M.complement_dim(i, q), n**q),
            )
            for q in range(q_max + 1)
        ]
        suffixes = [list(w) for w in build_Ji(spec)] if spec is not None else []
        factors.append(FactorSummary(n=n, expansion=spec, suffixes=suffixes, levels=levels))
    return ConstructionReport(
        name=construction.name,
        shape=list(M.shape.n),
        multiplicity=construction.multiplicity,
        exact=construction.exact,
        closed_form=construction.closed_form,
        factors=factors,
    )
