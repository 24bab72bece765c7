"""Graded invariant subspaces of (⊗ᵢF²(H_{nᵢ}))⊗E.

A graded invariant subspace M splits into blocks M_s ⊆ H_s ⊗ E. Blocks are
computed lazily and memoized per multidegree; the cache is write-once per key
and two threads racing on one key store identical values.

For a subspace generated by multi-homogeneous vectors of degree at most D
(componentwise), every block beyond D is a direct sum of shifted copies of a
block inside the window:

    M_s = ⊕_{|αᵢ| = sᵢ − D'ᵢ} α·M_{D'},   D' = min(s, D)

so only blocks s ≤ D ever need elimination.
"""
from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Optional, Sequence

from app.core.exceptions import NotHomogeneousError, ShapeMismatchError
from app.core.linalg import RationalMatrix
from app.models.fock import FockVector, MultiDegree, MultiWord, Shape, TermKey
from app.services import fock_service

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BlockData:
    """Cached block M_s: either a row-reduced basis or, for monomial blocks, a coordinate support."""

    dim: int
    basis: tuple[tuple[Fraction, ...], ...] = ()
    projector: Optional[RationalMatrix] = None
    support: Optional[frozenset[int]] = None


class GradedSubspace(ABC):
    kind: str = "abstract"

    def __init__(self, shape: Shape, mult_dim: int = 1):
        if mult_dim < 1:
            raise ShapeMismatchError(f"multiplicity dimension must be >= 1, got {mult_dim}")
        self.shape = shape
        self.mult_dim = mult_dim
        self._block_cache: dict[MultiDegree, BlockData] = {}
        self._defect_blocks: dict[MultiDegree, RationalMatrix] = {}

    @property
    @abstractmethod
    def window(self) -> MultiDegree:
        """Componentwise bound D beyond which blocks are shifted copies."""

    @abstractmethod
    def block_dim(self, s: MultiDegree) -> int: ...

    @abstractmethod
    def block_trace(self, s: MultiDegree) -> Fraction:
        """Σ ⟨P b, b⟩ over the standard basis b of H_s ⊗ E."""

    @abstractmethod
    def project_block(self, s: MultiDegree, xi: FockVector) -> FockVector: ...

    @abstractmethod
    def permuted(self, order: Sequence[int]) -> "GradedSubspace": ...

    def ambient_block_dim(self, s: MultiDegree) -> int:
        return fock_service.dim_level(self.shape, s) * self.mult_dim

    def dim_leq_sub(self, q: MultiDegree) -> int:
        q = self.shape.check_degree(q)
        return sum(self.block_dim(s) for s in fock_service.multidegrees_leq(q))

    def project(self, xi: FockVector) -> FockVector:
        self._check_vector(xi)
        parts = [self.project_block(s, xi.component(s)) for s in sorted(xi.degrees())]
        return FockVector.sum(parts, self.shape, self.mult_dim)

    def contains(self, xi: FockVector) -> bool:
        return self.project(xi) == xi

    def block_basis(self, s: MultiDegree) -> list[FockVector]:
        """Row-reduced basis of M_s, as vectors."""
        s = self.shape.check_degree(s)
        block = self._block_cache.get(s)
        if block is None:
            block = self._generic_block(s)
            self._block_cache[s] = block
        return [
            fock_service.from_block_coords(self.shape, self.mult_dim, s, row) for row in block.basis
        ]

    def _generic_block(self, s: MultiDegree) -> BlockData:
        size = self.ambient_block_dim(s)
        rows = [
            fock_service.to_block_coords(
                self.project_block(s, fock_service.block_unit(self.shape, self.mult_dim, s, idx)), s
            )
            for idx in range(size)
        ]
        basis = RationalMatrix.from_rows(rows, size).row_basis() if rows else []
        return BlockData(len(basis), tuple(tuple(r) for r in basis))

    def _check_vector(self, xi: FockVector) -> None:
        if xi.shape != self.shape or xi.mult_dim != self.mult_dim:
            raise ShapeMismatchError(
                f"vector in shape {xi.shape.n}/r={xi.mult_dim} does not live in subspace "
                f"ambient {self.shape.n}/r={self.mult_dim}"
            )

    def _check_block_vector(self, s: MultiDegree, xi: FockVector) -> None:
        self._check_vector(xi)
        if xi.degrees() - {s}:
            raise ShapeMismatchError(f"vector has components outside multidegree {s}")


class GeneratedSubspace(GradedSubspace):
    """Closed span of all left shifts 𝐒_α ψ of multi-homogeneous generators ψ."""

    kind = "generated"

    def __init__(self, shape: Shape, mult_dim: int, generators: Sequence[FockVector]):
        super().__init__(shape, mult_dim)
        for idx, g in enumerate(generators):
            if g.shape != shape or g.mult_dim != mult_dim:
                raise ShapeMismatchError(
                    f"generator #{idx} lives in {g.shape.n}/r={g.mult_dim}, "
                    f"expected {shape.n}/r={mult_dim}"
                )
            if g.is_zero():
                raise NotHomogeneousError(idx, [])
            if not g.is_homogeneous():
                raise NotHomogeneousError(idx, g.degrees())
        self.generators = tuple(generators)
        self._monomial = all(g.is_monomial() for g in self.generators)
        if self.generators:
            self._window = tuple(
                max(g.degree[i] for g in self.generators) for i in range(shape.k)
            )
        else:
            self._window = shape.zero()

    @property
    def window(self) -> MultiDegree:
        return self._window

    def _reduce(self, s: MultiDegree) -> tuple[MultiDegree, MultiDegree]:
        inner = tuple(min(a, b) for a, b in zip(s, self._window))
        prefix = tuple(a - b for a, b in zip(s, inner))
        return inner, prefix

    def _shifts(self, s: MultiDegree) -> list[FockVector]:
        out = []
        for g in self.generators:
            d = g.degree
            if not all(a <= b for a, b in zip(d, s)):
                continue
            gap = tuple(b - a for a, b in zip(d, s))
            for alpha in fock_service.enumerate_basis(self.shape, gap):
                out.append(fock_service.prepend(alpha, g))
        return out

    def _window_block(self, s: MultiDegree) -> BlockData:
        block = self._block_cache.get(s)
        if block is not None:
            return block
        size = self.ambient_block_dim(s)
        shifts = self._shifts(s)
        if self._monomial:
            index = fock_service.basis_index(self.shape, s)
            support = frozenset(
                index[words] * self.mult_dim + m - 1 for v in shifts for words, m in v.coeffs
            )
            block = BlockData(len(support), support=support)
        else:
            rows = [fock_service.to_block_coords(v, s) for v in shifts]
            reduced = RationalMatrix.from_rows(rows, size).row_basis() if rows else []
            projector = None
            if reduced and len(reduced) < size:
                b = RationalMatrix.from_rows(reduced, size)
                projector = b.T @ (b @ b.T).solve(b)
            block = BlockData(len(reduced), tuple(tuple(r) for r in reduced), projector)
        logger.debug("block %s of generated subspace: dim %d of %d", s, block.dim, size)
        self._block_cache[s] = block
        return block

    def block_dim(self, s: MultiDegree) -> int:
        s = self.shape.check_degree(s)
        inner, prefix = self._reduce(s)
        return fock_service.dim_level(self.shape, prefix) * self._window_block(inner).dim

    def block_trace(self, s: MultiDegree) -> Fraction:
        s = self.shape.check_degree(s)
        inner, prefix = self._reduce(s)
        block = self._window_block(inner)
        size = self.ambient_block_dim(inner)
        if block.projector is not None:
            local = block.projector.trace()
        elif block.support is not None:
            local = Fraction(len(block.support))
        else:
            local = Fraction(size if block.dim == size else 0)
        return fock_service.dim_level(self.shape, prefix) * local

    def _project_window(self, s: MultiDegree, xi: FockVector) -> FockVector:
        block = self._window_block(s)
        size = self.ambient_block_dim(s)
        if block.dim == 0:
            return FockVector.zero(self.shape, self.mult_dim)
        if block.dim == size:
            return xi
        if block.support is not None:
            index = fock_service.basis_index(self.shape, s)
            kept = {
                (words, m): c
                for (words, m), c in xi.coeffs.items()
                if index[words] * self.mult_dim + m - 1 in block.support
            }
            return FockVector(self.shape, self.mult_dim, kept, validate=False)
        coords = fock_service.to_block_coords(xi, s)
        projected = block.projector.power_apply(coords)
        return fock_service.from_block_coords(self.shape, self.mult_dim, s, projected)

    def project_block(self, s: MultiDegree, xi: FockVector) -> FockVector:
        s = self.shape.check_degree(s)
        self._check_block_vector(s, xi)
        if xi.is_zero():
            return xi
        inner, prefix = self._reduce(s)
        parts = []
        for head, tail in fock_service.strip_prefix(prefix, xi).items():
            parts.append(fock_service.prepend(head, self._project_window(inner, tail)))
        return FockVector.sum(parts, self.shape, self.mult_dim)

    def block_basis(self, s: MultiDegree) -> list[FockVector]:
        s = self.shape.check_degree(s)
        inner, prefix = self._reduce(s)
        block = self._window_block(inner)
        if block.support is not None:
            local = [
                fock_service.block_unit(self.shape, self.mult_dim, inner, idx)
                for idx in sorted(block.support)
            ]
        else:
            local = [
                fock_service.from_block_coords(self.shape, self.mult_dim, inner, row)
                for row in block.basis
            ]
        return [
            fock_service.prepend(alpha, v)
            for alpha in fock_service.enumerate_basis(self.shape, prefix)
            for v in local
        ]

    def permuted(self, order: Sequence[int]) -> "GeneratedSubspace":
        return GeneratedSubspace(
            self.shape.permuted(order),
            self.mult_dim,
            [fock_service.permute_vector(g, order) for g in self.generators],
        )


class FullSubspace(GradedSubspace):
    kind = "full"

    @property
    def window(self) -> MultiDegree:
        return self.shape.zero()

    def block_dim(self, s: MultiDegree) -> int:
        return self.ambient_block_dim(self.shape.check_degree(s))

    def block_trace(self, s: MultiDegree) -> Fraction:
        return Fraction(self.block_dim(s))

    def project_block(self, s: MultiDegree, xi: FockVector) -> FockVector:
        self._check_block_vector(self.shape.check_degree(s), xi)
        return xi

    def block_basis(self, s: MultiDegree) -> list[FockVector]:
        return [
            fock_service.block_unit(self.shape, self.mult_dim, s, idx)
            for idx in range(self.block_dim(s))
        ]

    def permuted(self, order: Sequence[int]) -> "FullSubspace":
        return FullSubspace(self.shape.permuted(order), self.mult_dim)


class ComplementTensorSubspace(GradedSubspace):
    """M = (M₁⊥ ⊗ ⋯ ⊗ M_k⊥ ⊗ E)⊥ for single-factor graded subspaces Mᵢ.

    Dimensions come from per-factor complement tables only; the tensor basis
    is never built.
    """

    kind = "complement_tensor"

    def __init__(self, factors: Sequence[GradedSubspace], mult_dim: int = 1):
        for i, f in enumerate(factors, start=1):
            if f.shape.k != 1 or f.mult_dim != 1:
                raise ShapeMismatchError(f"tensor factor {i} must be a scalar single-factor subspace")
        super().__init__(Shape(n=tuple(f.shape.n[0] for f in factors)), mult_dim)
        self.factors = tuple(factors)
        self._complement_cache: dict[tuple[int, tuple[int, ...]], FockVector] = {}

    @property
    def window(self) -> MultiDegree:
        return tuple(f.window[0] for f in self.factors)

    def complement_dim(self, i: int, si: int) -> int:
        f = self.factors[i]
        return f.shape.n[0] ** si - f.block_dim((si,))

    def block_dim(self, s: MultiDegree) -> int:
        s = self.shape.check_degree(s)
        comp = prod(self.complement_dim(i, si) for i, si in enumerate(s))
        return self.mult_dim * (fock_service.dim_level(self.shape, s) - comp)

    def block_trace(self, s: MultiDegree) -> Fraction:
        s = self.shape.check_degree(s)
        comp = prod(
            (f.shape.n[0] ** si - f.block_trace((si,)) for f, si in zip(self.factors, s)),
            start=Fraction(1),
        )
        return self.mult_dim * (fock_service.dim_level(self.shape, s) - comp)

    def _factor_complement(self, i: int, word: tuple[int, ...]) -> FockVector:
        key = (i, word)
        cached = self._complement_cache.get(key)
        if cached is None:
            f = self.factors[i]
            e = FockVector.basis_vector(f.shape, (word,))
            cached = e - f.project_block((len(word),), e)
            self._complement_cache[key] = cached
        return cached

    def _complement_of_term(self, words: MultiWord, m: int) -> dict[TermKey, Fraction]:
        acc: dict[tuple, Fraction] = {(): Fraction(1)}
        for i, w in enumerate(words):
            factor = self._factor_complement(i, w)
            nxt: dict[tuple, Fraction] = {}
            for head, c in acc.items():
                for (fw, _), d in factor.coeffs.items():
                    key = head + (fw[0],)
                    nxt[key] = nxt.get(key, Fraction(0)) + c * d
            acc = {k: v for k, v in nxt.items() if v != 0}
        return {(key, m): c for key, c in acc.items()}

    def project_block(self, s: MultiDegree, xi: FockVector) -> FockVector:
        s = self.shape.check_degree(s)
        self._check_block_vector(s, xi)
        out: dict[TermKey, Fraction] = dict(xi.coeffs)
        for (words, m), c in xi.coeffs.items():
            for key, d in self._complement_of_term(words, m).items():
                out[key] = out.get(key, Fraction(0)) - c * d
        return FockVector(self.shape, self.mult_dim, out, validate=False)

    def permuted(self, order: Sequence[int]) -> "ComplementTensorSubspace":
        return ComplementTensorSubspace([self.factors[o] for o in order], self.mult_dim)
