from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from app.core.test_config import test_settings  # noqa: F401  (overrides settings for the test run)
from app.models import FockVector, PolyballTuple, Shape
from app.models.polyball import Grading

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def data_path(name: str) -> str:
    return str(DATA_DIR / name)


def create_shape(*n: int) -> Shape:
    return Shape(n=tuple(n))


def create_vector(shape: Shape, terms: Mapping[tuple, object], mult_dim: int = 1) -> FockVector:
    """``{((1,), (2, 1)): "1/2"}`` -> FockVector; keys may also be ``(multiword, m)``."""
    coeffs = {}
    for key, c in terms.items():
        if len(key) == 2 and isinstance(key[1], int):
            words, m = key
        else:
            words, m = key, 1
        coeffs[(tuple(tuple(w) for w in words), m)] = Fraction(c)
    return FockVector(shape, mult_dim, coeffs)


def create_nilpotent_tuple() -> tuple[PolyballTuple, Grading]:
    T = PolyballTuple.from_rows(
        create_shape(2),
        2,
        [[[[0, Fraction(1, 2)], [0, 0]], [[0, 0], [0, 0]]]],
    )
    return T, Grading(((1,), (0,)))


def create_scalar_tuple(values: Sequence[Sequence[object]]) -> PolyballTuple:
    shape = create_shape(*(len(row) for row in values))
    return PolyballTuple.scalar(shape, [[Fraction(v) for v in row] for row in values])


def create_commuting_pair() -> PolyballTuple:
    return create_scalar_tuple([["1/3", "1/3"], ["1/2", 0]])


def create_nilpotent_pair() -> tuple[PolyballTuple, Grading]:
    """Two equal nilpotent generators on ℂ², e2 of degree 0 and e1 of degree 1."""
    half = [[0, Fraction(1, 2)], [0, 0]]
    T = PolyballTuple.from_rows(create_shape(2), 2, [[half, half]])
    return T, Grading(((1,), (0,)))
