from fractions import Fraction
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.subspace import ComplementTensorSubspace
from app.schemas.types import Rational


class ExpansionTerm(BaseModel):
    k: int
    d: int


class ExpansionSpec(BaseModel):
    """Base-n digits of 1 − t: 1 − t = Σ d_p / n^{k_p} (when ``exact``)."""

    n: int
    t: Rational
    terms: list[ExpansionTerm] = Field(default_factory=list)
    exact: bool

    @model_validator(mode="after")
    def check_terms(self) -> "ExpansionSpec":
        if self.n < 2:
            raise ValueError("expansions need n >= 2")
        previous = 0
        for term in self.terms:
            if term.k <= previous:
                raise ValueError("positions k_p must be positive and strictly increasing")
            if not 1 <= term.d <= self.n - 1:
                raise ValueError(f"digit {term.d} outside 1..{self.n - 1}")
            previous = term.k
        total = self.partial_sum()
        if total > 1 - self.t or (self.exact and total != 1 - self.t):
            raise ValueError(f"digits sum to {total}, inconsistent with 1 - t = {1 - self.t}")
        return self

    def partial_sum(self, up_to: Optional[int] = None) -> Fraction:
        return sum(
            (Fraction(term.d, self.n**term.k) for term in self.terms if up_to is None or term.k <= up_to),
            Fraction(0),
        )

    def level_ratio(self, q: int) -> Fraction:
        """Complement ratio at level q: 1 − Σ_{k_p ≤ q} d_p / n^{k_p}."""
        return 1 - self.partial_sum(q)

    @property
    def achieved(self) -> Fraction:
        return 1 - self.partial_sum()


class Construction(BaseModel):
    """A built M(t) or M^{(ω)}(t) with the data needed to certify its limit."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str
    subspace: ComplementTensorSubspace
    expansions: list[ExpansionSpec]
    closed_form: Rational
    multiplicity: int = 1

    @property
    def exact(self) -> bool:
        return all(e.exact for e in self.expansions)

    def level_value(self, q) -> Fraction:
        """Per-level χ value at q predicted by the expansions."""
        value = Fraction(self.multiplicity)
        for spec, qi in zip(self.expansions, q):
            value *= spec.level_ratio(qi)
        return value


class LevelRow(BaseModel):
    q: int
    block_dim: int
    complement_ratio: Rational


class FactorSummary(BaseModel):
    n: int
    expansion: Optional[ExpansionSpec] = None
    suffixes: list[list[int]] = Field(default_factory=list)
    levels: list[LevelRow] = Field(default_factory=list)


class ConstructionReport(BaseModel):
    """What ``construct`` prints: expansions, suffix sets and per-factor level tables."""

    name: str
    shape: list[int]
    multiplicity: int
    exact: bool
    closed_form: Rational
    factors: list[FactorSummary]
