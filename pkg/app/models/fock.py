from __future__ import annotations

from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Optional, Union

from pydantic import BaseModel, ConfigDict, field_validator

from app.core.exceptions import InputFormatError, ShapeMismatchError

Word = tuple[int, ...]
MultiWord = tuple[Word, ...]
MultiDegree = tuple[int, ...]
TermKey = tuple[MultiWord, int]


class Shape(BaseModel):
    """Generator counts (n₁,…,n_k) of the Fock factors."""

    model_config = ConfigDict(frozen=True)

    n: tuple[int, ...]

    @field_validator("n")
    @classmethod
    def validate_n(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if len(value) == 0:
            raise ValueError("shape needs at least one factor")
        if any(ni < 1 for ni in value):
            raise ValueError(f"every generator count must be >= 1, got {value}")
        return value

    @property
    def k(self) -> int:
        return len(self.n)

    def zero(self) -> MultiDegree:
        return (0,) * self.k

    def check_degree(self, s: Iterable[int]) -> MultiDegree:
        s = tuple(int(x) for x in s)
        if len(s) != self.k or any(x < 0 for x in s):
            raise ShapeMismatchError(f"multidegree {s} is not valid for shape {self.n}")
        return s

    def check_multiword(self, words: MultiWord) -> MultiWord:
        if len(words) != self.k:
            raise ShapeMismatchError(f"{len(words)} words given for {self.k} factors")
        for i, (w, ni) in enumerate(zip(words, self.n), start=1):
            if any(not 1 <= letter <= ni for letter in w):
                raise ShapeMismatchError(f"word {w} has letters outside 1..{ni} in factor {i}")
        return words

    def permuted(self, order: Iterable[int]) -> "Shape":
        return Shape(n=tuple(self.n[i] for i in order))

    def __str__(self) -> str:
        return ",".join(str(ni) for ni in self.n)


def leq(q: MultiDegree, p: MultiDegree) -> bool:
    return all(a <= b for a, b in zip(q, p))


def degree_of(words: MultiWord) -> MultiDegree:
    return tuple(len(w) for w in words)


class FockVector:
    """Finitely supported vector of (⊗F²(H_{nᵢ}))⊗E with rational coefficients.

    Keys are ``(multiword, m)`` with the multiplicity index ``m`` in 1..r.
    Zero coefficients are never stored, so structural equality is vector
    equality.
    """

    __slots__ = ("shape", "mult_dim", "_coeffs")

    def __init__(
        self,
        shape: Shape,
        mult_dim: int = 1,
        coeffs: Optional[Mapping[TermKey, Union[int, Fraction]]] = None,
        validate: bool = True,
    ):
        if mult_dim < 1:
            raise InputFormatError(f"multiplicity dimension must be >= 1, got {mult_dim}")
        self.shape = shape
        self.mult_dim = mult_dim
        clean: dict[TermKey, Fraction] = {}
        for (words, m), c in (coeffs or {}).items():
            c = Fraction(c)
            if c == 0:
                continue
            if validate:
                shape.check_multiword(words)
                if not 1 <= m <= mult_dim:
                    raise ShapeMismatchError(f"multiplicity index {m} outside 1..{mult_dim}")
            clean[(words, m)] = c
        self._coeffs = MappingProxyType(clean)

    @classmethod
    def vacuum(cls, shape: Shape, mult_dim: int = 1, m: int = 1) -> "FockVector":
        return cls(shape, mult_dim, {(tuple(() for _ in shape.n), m): 1})

    @classmethod
    def basis_vector(cls, shape: Shape, words: MultiWord, mult_dim: int = 1, m: int = 1) -> "FockVector":
        return cls(shape, mult_dim, {(tuple(tuple(w) for w in words), m): 1})

    @classmethod
    def zero(cls, shape: Shape, mult_dim: int = 1) -> "FockVector":
        return cls(shape, mult_dim)

    @property
    def coeffs(self) -> Mapping[TermKey, Fraction]:
        return self._coeffs

    def terms(self) -> Iterator[tuple[MultiWord, int, Fraction]]:
        for (words, m), c in sorted(self._coeffs.items()):
            yield words, m, c

    def is_zero(self) -> bool:
        return not self._coeffs

    def degrees(self) -> set[MultiDegree]:
        return {degree_of(words) for words, _ in self._coeffs}

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) == 1

    @property
    def degree(self) -> MultiDegree:
        degrees = self.degrees()
        if len(degrees) != 1:
            raise ValueError(f"vector is not multi-homogeneous: {sorted(degrees)}")
        return next(iter(degrees))

    def component(self, s: MultiDegree) -> "FockVector":
        return self._derive({key: c for key, c in self._coeffs.items() if degree_of(key[0]) == s})

    def is_monomial(self) -> bool:
        return len(self._coeffs) == 1

    def _derive(self, coeffs: Mapping[TermKey, Fraction]) -> "FockVector":
        return FockVector(self.shape, self.mult_dim, coeffs, validate=False)

    def _check_compatible(self, other: "FockVector") -> None:
        if self.shape != other.shape or self.mult_dim != other.mult_dim:
            raise ShapeMismatchError(
                f"vectors live in different spaces: shape {self.shape.n} r={self.mult_dim} "
                f"vs shape {other.shape.n} r={other.mult_dim}"
            )

    def __add__(self, other: "FockVector") -> "FockVector":
        self._check_compatible(other)
        out = dict(self._coeffs)
        for key, c in other._coeffs.items():
            out[key] = out.get(key, Fraction(0)) + c
        return self._derive(out)

    def __sub__(self, other: "FockVector") -> "FockVector":
        return self + (-other)

    def __neg__(self) -> "FockVector":
        return self._derive({key: -c for key, c in self._coeffs.items()})

    def __mul__(self, scalar: Union[int, Fraction]) -> "FockVector":
        scalar = Fraction(scalar)
        return self._derive({key: scalar * c for key, c in self._coeffs.items()})

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FockVector):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.mult_dim == other.mult_dim
            and dict(self._coeffs) == dict(other._coeffs)
        )

    def __hash__(self) -> int:
        return hash((self.shape.n, self.mult_dim, frozenset(self._coeffs.items())))

    def __repr__(self) -> str:
        if not self._coeffs:
            return "FockVector(0)"
        parts = []
        for words, m, c in self.terms():
            label = "⊗".join("".join(f"g{j}" for j in w) or "1" for w in words)
            suffix = f"⊗δ{m}" if self.mult_dim > 1 else ""
            parts.append(f"{c}·{label}{suffix}")
        return "FockVector(" + " + ".join(parts) + ")"

    @staticmethod
    def sum(vectors: Iterable["FockVector"], shape: Shape, mult_dim: int = 1) -> "FockVector":
        out: dict[TermKey, Fraction] = {}
        for v in vectors:
            for key, c in v._coeffs.items():
                out[key] = out.get(key, Fraction(0)) + c
        return FockVector(shape, mult_dim, out, validate=False)
