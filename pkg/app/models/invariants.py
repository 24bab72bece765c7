from typing import Any, Literal, Optional

from pydantic import BaseModel, Field

from app.schemas.types import Rational

SequenceKind = Literal["chi", "curv", "curv-simplex"]
LimitStatus = Literal["exact-stabilized", "monotone-converging", "inconclusive"]


class SequenceEntry(BaseModel):
    """One truncation q: box value numerator/denominator, plus the per-level value."""

    q: list[int]
    numerator: Rational
    denominator: Rational
    value: Rational
    level_numerator: Optional[Rational] = None
    level_denominator: Optional[Rational] = None
    level_value: Optional[Rational] = None


class LimitReport(BaseModel):
    status: LimitStatus
    last_value: Optional[Rational] = None
    last_delta: Optional[Rational] = None
    level_stabilized: bool = False
    level_limit: Optional[Rational] = None
    exact_expansion: Optional[bool] = None
    closed_form: Optional[Rational] = None
    closed_form_matches: Optional[bool] = None


class InvariantSequence(BaseModel):
    kind: SequenceKind
    source: str
    shape: list[int]
    entries: list[SequenceEntry] = Field(default_factory=list)
    limit_report: LimitReport

    def entry(self, q) -> SequenceEntry:
        q = list(q)
        for e in self.entries:
            if e.q == q:
                return e
        raise KeyError(f"no entry at q={q}")

    def values(self) -> dict[tuple[int, ...], Any]:
        return {tuple(e.q): e.value for e in self.entries}


class CheckRecord(BaseModel):
    name: str
    passed: bool
    q: Optional[list[int]] = None
    detail: str = ""
    witness: Optional[Any] = None


class CheckReport(BaseModel):
    check: str
    passed: bool
    records: list[CheckRecord] = Field(default_factory=list)

    @classmethod
    def from_records(cls, check: str, records: list[CheckRecord]) -> "CheckReport":
        return cls(check=check, passed=all(r.passed for r in records), records=records)

    def failures(self) -> list[CheckRecord]:
        return [r for r in self.records if not r.passed]

    def first_failure(self) -> Optional[CheckRecord]:
        failures = self.failures()
        return failures[0] if failures else None


class NumericEntry(BaseModel):
    cutoff: list[int]
    value: float
    rank: int
    condition: float


class NumericReport(BaseModel):
    """Approximate path: values of trace[P_M^{(Q)} P_{≤q}] at growing cutoffs Q."""

    approximate: Literal[True] = True
    q: list[int]
    entries: list[NumericEntry] = Field(default_factory=list)
    last_increment: Optional[float] = None
    monotone: bool = True
    ill_conditioned: bool = False


class SuiteReport(BaseModel):
    seed: int
    passed: bool
    reports: list[CheckReport] = Field(default_factory=list)

    def failures(self) -> list[CheckReport]:
        return [r for r in self.reports if not r.passed]
