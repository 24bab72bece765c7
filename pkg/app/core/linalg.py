"""Exact rational matrices.

Thin layer over sympy's ``DomainMatrix`` on ``QQ``. Entries go in and come out
as ``fractions.Fraction``; everything in between stays in the polynomial-domain
representation, so no expression simplification ever runs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from sympy import QQ
from sympy.polys.matrices import DomainMatrix

Scalar = Union[int, Fraction]


def to_qq(x: Scalar):
    x = Fraction(x)
    return QQ(int(x.numerator), int(x.denominator))


def from_qq(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


def parse_rational(text: Union[str, int, Fraction]) -> Fraction:
    """Parse ``"p/q"``, ``"p"`` or an int. Decimal strings are rejected."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, bool):
        raise ValueError(f"not a rational: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise ValueError(f"not a rational: {text!r}")
    s = text.strip()
    if not s or any(c in s for c in ".eE"):
        raise ValueError(f"rationals must be written as 'p/q', got {text!r}")
    return Fraction(s)


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


class RationalMatrix:
    """Immutable exact matrix over the rationals."""

    __slots__ = ("_dm",)

    def __init__(self, dm: DomainMatrix):
        self._dm = dm

    # construction

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Scalar]], ncols: Optional[int] = None) -> "RationalMatrix":
        nrows = len(rows)
        if ncols is None:
            ncols = len(rows[0]) if nrows else 0
        data = [[to_qq(x) for x in row] for row in rows]
        for row in data:
            if len(row) != ncols:
                raise ValueError("ragged matrix rows")
        return cls(DomainMatrix(data, (nrows, ncols), QQ))

    @classmethod
    def from_sparse_rows(cls, rows: Sequence[Mapping[int, Scalar]], ncols: int) -> "RationalMatrix":
        data = {
            i: {j: to_qq(v) for j, v in row.items() if v != 0}
            for i, row in enumerate(rows)
        }
        data = {i: row for i, row in data.items() if row}
        return cls(DomainMatrix(data, (len(rows), ncols), QQ))

    @classmethod
    def zeros(cls, nrows: int, ncols: Optional[int] = None) -> "RationalMatrix":
        ncols = nrows if ncols is None else ncols
        return cls(DomainMatrix.zeros((nrows, ncols), QQ).to_dense())

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls.from_rows([[1 if i == j else 0 for j in range(n)] for i in range(n)], n)

    @classmethod
    def diagonal(cls, values: Sequence[Scalar]) -> "RationalMatrix":
        n = len(values)
        return cls.from_rows([[values[i] if i == j else 0 for j in range(n)] for i in range(n)], n)

    @classmethod
    def column(cls, values: Sequence[Scalar]) -> "RationalMatrix":
        return cls.from_rows([[v] for v in values], 1)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[Scalar]], nrows: int) -> "RationalMatrix":
        return cls.from_rows(
            [[col[i] for col in columns] for i in range(nrows)], len(columns)
        )

    # structure

    @property
    def shape(self) -> tuple[int, int]:
        return self._dm.shape

    @property
    def nrows(self) -> int:
        return self._dm.shape[0]

    @property
    def ncols(self) -> int:
        return self._dm.shape[1]

    @property
    def domain_matrix(self) -> DomainMatrix:
        return self._dm

    def to_list(self) -> list[list[Fraction]]:
        nrows, ncols = self.shape
        if nrows == 0 or ncols == 0:
            return [[] for _ in range(nrows)]
        return [[from_qq(x) for x in row] for row in self._dm.to_dense().to_list()]

    def entry(self, i: int, j: int) -> Fraction:
        return self.to_list()[i][j]

    def columns(self) -> list[list[Fraction]]:
        rows = self.to_list()
        return [[rows[i][j] for i in range(self.nrows)] for j in range(self.ncols)]

    # arithmetic

    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        self._check_same(other)
        return RationalMatrix(self._dm.to_dense() + other._dm.to_dense())

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        self._check_same(other)
        return RationalMatrix(self._dm.to_dense() - other._dm.to_dense())

    def __neg__(self) -> "RationalMatrix":
        return RationalMatrix(-self._dm.to_dense())

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.ncols != other.nrows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        if self.nrows == 0 or other.ncols == 0 or self.ncols == 0:
            return RationalMatrix.zeros(self.nrows, other.ncols)
        return RationalMatrix(self._dm.to_dense().matmul(other._dm.to_dense()))

    def scale(self, c: Scalar) -> "RationalMatrix":
        return RationalMatrix.from_rows(
            [[c * x for x in row] for row in self.to_list()], self.ncols
        )

    @property
    def T(self) -> "RationalMatrix":
        return RationalMatrix(self._dm.transpose())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.shape == other.shape and self.to_list() == other.to_list()

    def __hash__(self) -> int:
        return hash((self.shape, tuple(tuple(r) for r in self.to_list())))

    def __repr__(self) -> str:
        rows = ", ".join("[" + ", ".join(format_rational(x) for x in r) + "]" for r in self.to_list())
        return f"RationalMatrix([{rows}])"

    def _check_same(self, other: "RationalMatrix") -> None:
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")

    # invariants

    def is_zero(self) -> bool:
        return all(x == 0 for row in self.to_list() for x in row)

    def is_symmetric(self) -> bool:
        return self.nrows == self.ncols and self == self.T

    def trace(self) -> Fraction:
        rows = self.to_list()
        return sum((rows[i][i] for i in range(min(self.shape))), Fraction(0))

    def rank(self) -> int:
        """Exact rank by fraction-free (Bareiss) elimination."""
        if self.nrows == 0 or self.ncols == 0:
            return 0
        _, _, pivots = self._dm.rref_den(method="FF")
        return len(pivots)

    def row_basis(self) -> list[list[Fraction]]:
        """Nonzero rows of the reduced row echelon form (deterministic)."""
        if self.nrows == 0 or self.ncols == 0:
            return []
        rref, pivots = self._dm.rref()
        rows = RationalMatrix(rref).to_list()
        return rows[: len(pivots)]

    def column_basis(self) -> list[list[Fraction]]:
        return self.T.row_basis()

    def inverse(self) -> "RationalMatrix":
        if self.nrows == 0:
            return self
        return RationalMatrix(self._dm.to_dense().inv())

    def solve(self, rhs: "RationalMatrix") -> "RationalMatrix":
        """Solve ``self @ X = rhs`` for square nonsingular ``self``."""
        if self.nrows == 0:
            return RationalMatrix.zeros(0, rhs.ncols)
        return RationalMatrix(self._dm.to_dense().lu_solve(rhs._dm.to_dense()))

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "RationalMatrix":
        data = self.to_list()
        return RationalMatrix.from_rows([[data[i][j] for j in cols] for i in rows], len(cols))

    def power_apply(self, vector: Sequence[Fraction]) -> list[Fraction]:
        rows = self.to_list()
        return [sum((a * b for a, b in zip(row, vector)), Fraction(0)) for row in rows]


def kron(a: RationalMatrix, b: RationalMatrix) -> RationalMatrix:
    ar, br = a.to_list(), b.to_list()
    rows = [
        [ar[i][j] * br[k][l] for j in range(a.ncols) for l in range(b.ncols)]
        for i in range(a.nrows)
        for k in range(b.nrows)
    ]
    return RationalMatrix.from_rows(rows, a.ncols * b.ncols)


def block_diagonal(a: RationalMatrix, b: RationalMatrix) -> RationalMatrix:
    ar, br = a.to_list(), b.to_list()
    ncols = a.ncols + b.ncols
    rows = [row + [Fraction(0)] * b.ncols for row in ar]
    rows += [[Fraction(0)] * a.ncols + row for row in br]
    return RationalMatrix.from_rows(rows, ncols)


def span_rank(vectors: Iterable[Sequence[Fraction]], dim: int) -> int:
    rows = [list(v) for v in vectors]
    if not rows:
        return 0
    return RationalMatrix.from_rows(rows, dim).rank()


def orthogonal_projector(columns: Sequence[Sequence[Fraction]], dim: int) -> RationalMatrix:
    """P = B (BᵀB)⁻¹ Bᵀ onto the span of ``columns`` (rational, no square roots)."""
    basis = RationalMatrix.from_rows(list(columns), dim).row_basis() if columns else []
    if not basis:
        return RationalMatrix.zeros(dim)
    b = RationalMatrix.from_columns(basis, dim)
    gram = b.T @ b
    return b @ gram.solve(b.T)


@dataclass
class PsdCertificate:
    """Outcome of the pivoted LDLᵀ test.

    ``pivots`` lists (index, positive pivot) in elimination order. When the
    matrix is indefinite ``witness`` is a rational vector v with vᵀAv < 0 and
    ``witness_value`` is that quadratic form.
    """

    psd: bool
    rank: int
    pivots: list[tuple[int, Fraction]] = field(default_factory=list)
    witness: Optional[list[Fraction]] = None
    witness_value: Optional[Fraction] = None


def quadratic_form(a: RationalMatrix, v: Sequence[Fraction]) -> Fraction:
    av = a.power_apply(v)
    return sum((x * y for x, y in zip(v, av)), Fraction(0))


def ldl_psd(a: RationalMatrix) -> PsdCertificate:
    """Exact positive-semidefiniteness test by symmetric pivoted elimination."""
    if not a.is_symmetric():
        raise ValueError("PSD test needs a symmetric matrix")
    n = a.nrows
    full = a.to_list()
    schur = {(i, j): full[i][j] for i in range(n) for j in range(n)}
    remaining = list(range(n))
    eliminated: list[int] = []
    pivots: list[tuple[int, Fraction]] = []

    while remaining:
        j = max(remaining, key=lambda idx: (schur[idx, idx], -idx))
        d = schur[j, j]
        if d > 0:
            rest = [idx for idx in remaining if idx != j]
            for r in rest:
                f = schur[r, j] / d
                if f == 0:
                    continue
                for c in rest:
                    schur[r, c] -= f * schur[j, c]
            remaining = rest
            eliminated.append(j)
            pivots.append((j, d))
            continue

        y = {idx: Fraction(0) for idx in remaining}
        negative = next((idx for idx in remaining if schur[idx, idx] < 0), None)
        if negative is not None:
            y[negative] = Fraction(1)
        else:
            # every remaining diagonal entry is zero
            off = next(
                ((r, c) for r in remaining for c in remaining if r != c and schur[r, c] != 0),
                None,
            )
            if off is None:
                return PsdCertificate(True, len(pivots), pivots)
            r, c = off
            # schur[r, r] == 0 here, so v = x e_r + e_c gives 2x s_rc + s_cc = -1
            y[r] = -(schur[c, c] + 1) / (2 * schur[r, c])
            y[c] = Fraction(1)
        witness = _lift_witness(full, eliminated, remaining, y, n)
        return PsdCertificate(False, len(pivots), pivots, witness, quadratic_form(a, witness))

    return PsdCertificate(True, len(pivots), pivots)


def _lift_witness(full, eliminated, remaining, y, n) -> list[Fraction]:
    # x = [z; y] with A_PP z = -A_PR y has xᵀAx = yᵀ S y for the Schur complement S
    x = [Fraction(0)] * n
    for idx, val in y.items():
        x[idx] = val
    if eliminated:
        a_pp = RationalMatrix.from_rows(
            [[full[p][q] for q in eliminated] for p in eliminated], len(eliminated)
        )
        rhs = RationalMatrix.column(
            [-sum((full[p][r] * y[r] for r in remaining), Fraction(0)) for p in eliminated]
        )
        z = a_pp.solve(rhs).to_list()
        for p, row in zip(eliminated, z):
            x[p] = row[0]
    return x
