from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from app.core.config import settings
from app.schemas.types import Rational


class FockTermFile(BaseModel):
    words: list[list[int]]
    mult: int = 1
    coeff: Rational


class FockVectorFile(BaseModel):
    """``{"shape": [...], "mult_dim": r, "terms": [...]}``.

    ``shape`` and ``mult_dim`` may be omitted for generators nested in a
    subspace file; they are inherited from the enclosing file.
    """

    shape: Optional[list[int]] = None
    mult_dim: Optional[int] = None
    terms: list[FockTermFile] = Field(default_factory=list)


class SuffixFactorFile(BaseModel):
    n: int
    suffixes: list[list[int]] = Field(default_factory=list)


class SubspaceFile(BaseModel):
    shape: Optional[list[int]] = None
    mult_dim: int = 1
    kind: Literal["generated", "complement_tensor", "full"] = "generated"
    generators: list[FockVectorFile] = Field(default_factory=list)
    factors: list[SuffixFactorFile] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_kind(self) -> "SubspaceFile":
        if self.kind == "complement_tensor":
            if not self.factors:
                raise ValueError("complement_tensor subspaces need 'factors'")
            if self.shape is None:
                self.shape = [f.n for f in self.factors]
            elif self.shape != [f.n for f in self.factors]:
                raise ValueError("factor generator counts disagree with 'shape'")
        elif self.shape is None:
            raise ValueError(f"{self.kind} subspaces need 'shape'")
        return self


class GradingFile(BaseModel):
    degrees: list[list[int]]


class TupleFile(BaseModel):
    shape: list[int]
    dim: int
    ops: list[list[list[list[Rational]]]]
    grading: Optional[GradingFile] = None

    @model_validator(mode="after")
    def check_dims(self) -> "TupleFile":
        if len(self.ops) != len(self.shape):
            raise ValueError(f"{len(self.ops)} operator rows for {len(self.shape)} factors")
        for i, (row, ni) in enumerate(zip(self.ops, self.shape), start=1):
            if len(row) != ni:
                raise ValueError(f"factor {i} needs {ni} matrices, got {len(row)}")
            for matrix in row:
                if len(matrix) != self.dim or any(len(r) != self.dim for r in matrix):
                    raise ValueError(f"factor {i} has a matrix that is not {self.dim}x{self.dim}")
        return self


class ConstructionSpec(BaseModel):
    """``{"t": "5/8", "omega": "1/2", "shape": [2, 2], "max_terms": 12}``."""

    t: Rational
    omega: Optional[Rational] = None
    shape: list[int] = Field(default_factory=lambda: [2, 2])
    max_terms: int = Field(default_factory=lambda: settings.EXPANSION_MAX_TERMS)
    multiplicity: int = 1

    @field_validator("max_terms", "multiplicity")
    @classmethod
    def positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be >= 1")
        return value


class RunConfig(BaseModel):
    command: Literal[
        "chi", "curv", "curv-simplex", "gbc-check", "verify-identities", "construct", "suite"
    ]
    tuple_path: Optional[str] = None
    subspace_path: Optional[str] = None
    construction: Optional[ConstructionSpec] = None
    source: Literal["coinvariant", "restriction"] = "coinvariant"
    q_max: list[int] = Field(default_factory=list)
    inner_cutoff: Optional[list[int]] = None
    chain: Optional[list[list[int]]] = None
    suites: list[str] = Field(default_factory=list)
    seed: Optional[int] = None
    size: Optional[int] = None
    output_format: Literal["csv", "json"] = Field(default_factory=lambda: settings.OUTPUT_FORMAT)
    out_dir: Optional[str] = None
    workers: int = Field(default_factory=lambda: settings.WORKERS)

    @field_validator("q_max")
    @classmethod
    def nonnegative(cls, value: list[int]) -> list[int]:
        if any(q < 0 for q in value):
            raise ValueError("q_max must be componentwise >= 0")
        return value

    @field_validator("workers")
    @classmethod
    def at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError("workers must be >= 1")
        return value
