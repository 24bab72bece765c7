"""Words, truncated Fock spaces and creation operators."""
from __future__ import annotations

import itertools
import logging
from fractions import Fraction
from functools import lru_cache
from math import prod
from typing import Literal, Optional, Sequence

from app.core.exceptions import InputFormatError, ShapeMismatchError
from app.models.fock import FockVector, MultiDegree, MultiWord, Shape, TermKey, Word
from app.schemas.files import FockTermFile, FockVectorFile

logger = logging.getLogger(__name__)


@lru_cache(maxsize=None)
def enumerate_words(n: int, length: int) -> tuple[Word, ...]:
    """All words of ``length`` letters over 1..n, lexicographic."""
    return tuple(itertools.product(range(1, n + 1), repeat=length))


@lru_cache(maxsize=None)
def enumerate_basis(shape: Shape, s: MultiDegree) -> tuple[MultiWord, ...]:
    s = shape.check_degree(s)
    return tuple(itertools.product(*(enumerate_words(ni, si) for ni, si in zip(shape.n, s))))


@lru_cache(maxsize=None)
def basis_index(shape: Shape, s: MultiDegree) -> dict[MultiWord, int]:
    return {words: idx for idx, words in enumerate(enumerate_basis(shape, s))}


def dim_level(shape: Shape, s: MultiDegree) -> int:
    """dim H_s = ∏ nᵢ^{sᵢ}."""
    return prod(ni**si for ni, si in zip(shape.n, s))


def dim_leq(shape: Shape, q: MultiDegree) -> int:
    """dim H_{≤q} = ∏ (1 + nᵢ + ⋯ + nᵢ^{qᵢ})."""
    q = shape.check_degree(q)
    return prod(sum(ni**j for j in range(qi + 1)) for ni, qi in zip(shape.n, q))


def multidegrees_leq(q: MultiDegree) -> list[MultiDegree]:
    return list(itertools.product(*(range(qi + 1) for qi in q)))


def multidegrees_between(low: MultiDegree, high: MultiDegree) -> list[MultiDegree]:
    return list(itertools.product(*(range(a, b + 1) for a, b in zip(low, high))))


def unit_vectors(p: int) -> list[MultiDegree]:
    return list(itertools.product((0, 1), repeat=p))


def _check_factor(shape: Shape, i: int, j: int) -> None:
    if not 1 <= i <= shape.k:
        raise ShapeMismatchError(f"factor {i} outside 1..{shape.k}")
    if not 1 <= j <= shape.n[i - 1]:
        raise ShapeMismatchError(f"letter {j} outside 1..{shape.n[i - 1]} for factor {i}")


def _rewrite(v: FockVector, fn) -> FockVector:
    out: dict[TermKey, Fraction] = {}
    for (words, m), c in v.coeffs.items():
        new_words = fn(words)
        if new_words is None:
            continue
        key = (new_words, m)
        out[key] = out.get(key, Fraction(0)) + c
    return FockVector(v.shape, v.mult_dim, out, validate=False)


def _replace(words: MultiWord, i: int, word: Word) -> MultiWord:
    return words[: i - 1] + (word,) + words[i:]


def apply_left_creation(i: int, j: int, v: FockVector) -> FockVector:
    """𝐒_{i,j}: prepend letter j to the i-th word."""
    _check_factor(v.shape, i, j)
    return _rewrite(v, lambda words: _replace(words, i, (j,) + words[i - 1]))


def apply_right_creation(i: int, j: int, v: FockVector) -> FockVector:
    """𝐑_{i,j}: append letter j to the i-th word."""
    _check_factor(v.shape, i, j)
    return _rewrite(v, lambda words: _replace(words, i, words[i - 1] + (j,)))


def apply_left_annihilation(i: int, j: int, v: FockVector) -> FockVector:
    """𝐒*_{i,j}: strip a leading letter j from the i-th word, kill the rest."""
    _check_factor(v.shape, i, j)

    def strip(words: MultiWord):
        w = words[i - 1]
        if w and w[0] == j:
            return _replace(words, i, w[1:])
        return None

    return _rewrite(v, strip)


def prepend(prefix: MultiWord, v: FockVector) -> FockVector:
    """𝐒_{1,α₁}⋯𝐒_{k,α_k} applied to ``v``."""
    return _rewrite(v, lambda words: tuple(a + w for a, w in zip(prefix, words)))


def append(suffix: MultiWord, v: FockVector) -> FockVector:
    return _rewrite(v, lambda words: tuple(w + b for w, b in zip(words, suffix)))


def strip_prefix(prefix_degree: MultiDegree, v: FockVector) -> dict[MultiWord, FockVector]:
    """Group ``v`` by the leading ``prefix_degree`` letters of every factor."""
    groups: dict[MultiWord, dict[TermKey, Fraction]] = {}
    for (words, m), c in v.coeffs.items():
        head = tuple(w[:p] for w, p in zip(words, prefix_degree))
        tail = tuple(w[p:] for w, p in zip(words, prefix_degree))
        groups.setdefault(head, {})[(tail, m)] = c
    return {
        head: FockVector(v.shape, v.mult_dim, coeffs, validate=False)
        for head, coeffs in sorted(groups.items())
    }


def poly_calculus(p: FockVector, side: Literal["left", "right"], v: FockVector) -> FockVector:
    """Evaluate the polynomial ``p`` at the left or right creation operators.

    ``side="left"`` gives Σ c_β 𝐒_β v (β prepended); ``side="right"`` gives
    ψ̃(𝐑)v, i.e. every word of ``v`` concatenated with β, so that ψ̃(𝐑)1 = ψ.
    """
    if p.mult_dim != 1:
        raise ShapeMismatchError("polynomial symbols must have multiplicity 1")
    if p.shape != v.shape:
        raise ShapeMismatchError(f"shape {p.shape.n} vs {v.shape.n}")
    if side not in ("left", "right"):
        raise InputFormatError(f"side must be 'left' or 'right', got {side!r}")
    shift = prepend if side == "left" else append
    parts = [shift(words, v) * c for words, _, c in p.terms()]
    return FockVector.sum(parts, v.shape, v.mult_dim)


def right_multiplier(psi: FockVector, v: FockVector) -> FockVector:
    """ψ̃(𝐑)v for a scalar-valued ``v`` and E-valued symbol ψ: each word α of v becomes αψ."""
    if v.mult_dim != 1:
        raise ShapeMismatchError("right multipliers act on the scalar Fock space")
    out: dict[TermKey, Fraction] = {}
    for words, _, c in v.terms():
        for pwords, m, d in psi.terms():
            key = (tuple(a + b for a, b in zip(words, pwords)), m)
            out[key] = out.get(key, Fraction(0)) + c * d
    return FockVector(psi.shape, psi.mult_dim, out, validate=False)


def right_multiplier_adjoint(psi: FockVector, xi: FockVector) -> FockVector:
    """ψ̃(𝐑)*ξ: Σ ψ[β,m]·e_α over the splits w = αβ of every term (w, m) of ξ."""
    out: dict[TermKey, Fraction] = {}
    psi_terms = list(psi.terms())
    for words, m, c in xi.terms():
        for pwords, pm, d in psi_terms:
            if pm != m:
                continue
            if all(len(w) >= len(b) and w[len(w) - len(b):] == b for w, b in zip(words, pwords)):
                head = tuple(w[: len(w) - len(b)] for w, b in zip(words, pwords))
                key = (head, 1)
                out[key] = out.get(key, Fraction(0)) + c * d
    return FockVector(xi.shape, 1, out, validate=False)


def inner_product(u: FockVector, v: FockVector) -> Fraction:
    if u.shape != v.shape or u.mult_dim != v.mult_dim:
        raise ShapeMismatchError(
            f"inner product of vectors in different spaces: {u.shape.n}/{u.mult_dim} "
            f"vs {v.shape.n}/{v.mult_dim}"
        )
    small, large = (u, v) if len(u.coeffs) <= len(v.coeffs) else (v, u)
    return sum(
        (c * large.coeffs[key] for key, c in small.coeffs.items() if key in large.coeffs),
        Fraction(0),
    )


def block_size(shape: Shape, mult_dim: int, s: MultiDegree) -> int:
    return dim_level(shape, s) * mult_dim


def to_block_coords(v: FockVector, s: MultiDegree) -> list[Fraction]:
    """Coordinates of a degree-``s`` vector; multiword-major, multiplicity-minor."""
    index = basis_index(v.shape, s)
    r = v.mult_dim
    coords = [Fraction(0)] * (len(index) * r)
    for (words, m), c in v.coeffs.items():
        pos = index.get(words)
        if pos is None:
            raise ShapeMismatchError(f"term {words} is not of multidegree {s}")
        coords[pos * r + (m - 1)] = c
    return coords


def from_block_coords(shape: Shape, mult_dim: int, s: MultiDegree, coords: Sequence[Fraction]) -> FockVector:
    basis = enumerate_basis(shape, s)
    coeffs = {
        (basis[idx // mult_dim], idx % mult_dim + 1): c
        for idx, c in enumerate(coords)
        if c != 0
    }
    return FockVector(shape, mult_dim, coeffs, validate=False)


def block_unit(shape: Shape, mult_dim: int, s: MultiDegree, idx: int) -> FockVector:
    basis = enumerate_basis(shape, s)
    return FockVector(shape, mult_dim, {(basis[idx // mult_dim], idx % mult_dim + 1): 1}, validate=False)


def permute_vector(v: FockVector, order: Sequence[int]) -> FockVector:
    """Reorder the tensor factors: factor ``order[i]`` of ``v`` becomes factor i."""
    shape = v.shape.permuted(order)
    coeffs = {
        (tuple(words[o] for o in order), m): c for (words, m), c in v.coeffs.items()
    }
    return FockVector(shape, v.mult_dim, coeffs, validate=False)


def vector_from_file(
    data: FockVectorFile, shape: Optional[Shape] = None, mult_dim: Optional[int] = None
) -> FockVector:
    if data.shape is not None:
        shape = Shape(n=tuple(data.shape))
    if shape is None:
        raise InputFormatError("Fock vector without a shape")
    r = data.mult_dim if data.mult_dim is not None else (mult_dim or 1)
    coeffs: dict[TermKey, Fraction] = {}
    for term in data.terms:
        key = (tuple(tuple(w) for w in term.words), term.mult)
        coeffs[key] = coeffs.get(key, Fraction(0)) + term.coeff
    try:
        return FockVector(shape, r, coeffs)
    except ShapeMismatchError as e:
        raise InputFormatError(str(e)) from e


def vector_to_file(v: FockVector) -> FockVectorFile:
    return FockVectorFile(
        shape=list(v.shape.n),
        mult_dim=v.mult_dim,
        terms=[
            FockTermFile(words=[list(w) for w in words], mult=m, coeff=c)
            for words, m, c in v.terms()
        ],
    )


def dump_vector(v: FockVector) -> str:
    return vector_to_file(v).model_dump_json(indent=2)
