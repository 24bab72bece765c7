from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from app.core.exceptions import InputFormatError, PolyballError, ShapeMismatchError
from app.core.linalg import RationalMatrix
from app.models.fock import MultiDegree, Shape


@dataclass(frozen=True)
class PolyballTuple:
    """k rows of rational dim×dim matrices, T_{i,j} = ``ops[i-1][j-1]``.

    Entries of different rows must commute; this is checked on construction.
    """

    shape: Shape
    dim: int
    ops: tuple[tuple[RationalMatrix, ...], ...]
    check_commutation: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if self.dim < 0:
            raise InputFormatError(f"dimension must be >= 0, got {self.dim}")
        if len(self.ops) != self.shape.k:
            raise ShapeMismatchError(f"{len(self.ops)} operator rows for shape {self.shape.n}")
        for i, (row, ni) in enumerate(zip(self.ops, self.shape.n), start=1):
            if len(row) != ni:
                raise ShapeMismatchError(f"factor {i} needs {ni} operators, got {len(row)}")
            for op in row:
                if op.shape != (self.dim, self.dim):
                    raise ShapeMismatchError(
                        f"factor {i} has a {op.shape} operator on a {self.dim}-dimensional space"
                    )
        if self.check_commutation:
            witness = self.commutation_failure()
            if witness is not None:
                i, j, s, t = witness
                raise PolyballError(
                    f"T[{i},{j}] and T[{s},{t}] do not commute; entries of different rows must"
                )

    @classmethod
    def from_rows(cls, shape: Shape, dim: int, ops: Sequence[Sequence[Sequence[Sequence]]]) -> "PolyballTuple":
        return cls(
            shape,
            dim,
            tuple(tuple(RationalMatrix.from_rows(m, dim) for m in row) for row in ops),
        )

    @classmethod
    def zero(cls, shape: Shape, dim: int) -> "PolyballTuple":
        z = RationalMatrix.zeros(dim)
        return cls(shape, dim, tuple(tuple(z for _ in range(ni)) for ni in shape.n))

    @classmethod
    def scalar(cls, shape: Shape, values: Sequence[Sequence[Fraction]]) -> "PolyballTuple":
        return cls.from_rows(shape, 1, [[[[v]] for v in row] for row in values])

    def op(self, i: int, j: int) -> RationalMatrix:
        return self.ops[i - 1][j - 1]

    def identity(self) -> RationalMatrix:
        return RationalMatrix.identity(self.dim)

    def commutation_failure(self) -> Optional[tuple[int, int, int, int]]:
        for i in range(self.shape.k):
            for s in range(i + 1, self.shape.k):
                for j, a in enumerate(self.ops[i], start=1):
                    for t, b in enumerate(self.ops[s], start=1):
                        if a @ b != b @ a:
                            return i + 1, j, s + 1, t
        return None

    def permuted(self, order: Sequence[int]) -> "PolyballTuple":
        return PolyballTuple(
            self.shape.permuted(order), self.dim, tuple(self.ops[o] for o in order), False
        )


@dataclass(frozen=True)
class DefectData:
    delta: RationalMatrix
    delta_rank: int
    defect_basis: list[list[Fraction]]


@dataclass(frozen=True)
class Grading:
    """Degree in ℤ^k of every standard basis vector of H."""

    degree_of: tuple[MultiDegree, ...]

    def indices_of(self, s: MultiDegree) -> list[int]:
        return [b for b, d in enumerate(self.degree_of) if d == s]

    def degrees(self) -> list[MultiDegree]:
        return sorted(set(self.degree_of))


@dataclass(frozen=True)
class GradingSplit:
    c: MultiDegree
    d: MultiDegree
    h0_basis: list[int]
    restricted: PolyballTuple
    restricted_in_polyball: bool
