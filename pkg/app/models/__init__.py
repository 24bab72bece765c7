from .fock import FockVector, MultiDegree, MultiWord, Shape, Word
from .polyball import DefectData, Grading, GradingSplit, PolyballTuple
from .subspace import (
    ComplementTensorSubspace,
    FullSubspace,
    GeneratedSubspace,
    GradedSubspace,
)
from .invariants import (
    CheckRecord,
    CheckReport,
    InvariantSequence,
    LimitReport,
    NumericReport,
    SequenceEntry,
    SuiteReport,
)
from .constructions import Construction, ExpansionSpec, ExpansionTerm
