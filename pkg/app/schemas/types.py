from fractions import Fraction
from typing import Annotated, Any

from pydantic import PlainSerializer, PlainValidator

from app.core.linalg import format_rational, parse_rational


def _validate_rational(value: Any) -> Fraction:
    try:
        return parse_rational(value)
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(str(e)) from e


# Exact rational written as "p/q" on every wire format.
Rational = Annotated[
    Fraction,
    PlainValidator(_validate_rational),
    PlainSerializer(format_rational, return_type=str),
]
