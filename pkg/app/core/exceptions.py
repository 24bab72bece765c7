from typing import Any, Optional, Sequence


class PolyballError(ValueError):
    """Root of every error raised by the library."""


class ShapeMismatchError(PolyballError):
    pass


class InputFormatError(PolyballError):
    pass


class NotHomogeneousError(PolyballError):
    def __init__(self, index: int, degrees: Sequence[tuple[int, ...]]):
        self.index = index
        self.degrees = list(degrees)
        super().__init__(
            f"generator #{index} is not multi-homogeneous "
            f"(supported in multidegrees {sorted(self.degrees)}); "
            "use numeric mode for non-graded generators"
        )


class HypothesisError(PolyballError):
    """A hypothesis of the theorem behind the requested computation fails."""

    def __init__(self, message: str, hypothesis: str):
        self.hypothesis = hypothesis
        super().__init__(f"{message} [hypothesis: {hypothesis}]")


class MembershipError(HypothesisError):
    def __init__(self, message: str, p: Optional[tuple[int, ...]], witness: Any):
        self.p = p
        self.witness = witness
        super().__init__(message, "element of the regular polyball")


class InvarianceError(PolyballError):
    def __init__(self, message: str, witness: Any):
        self.witness = witness
        super().__init__(message)


class GradingError(PolyballError):
    def __init__(self, i: int, j: int, s: tuple[int, ...]):
        self.i, self.j, self.s = i, j, s
        super().__init__(
            f"T[{i},{j}] does not raise the degree of the basis vectors of degree "
            f"{s} by e_{i}"
        )


class ExpansionError(PolyballError):
    pass


class IdentityError(PolyballError):
    """Two exact code paths that must agree bit-for-bit did not."""

    def __init__(self, message: str, q: Optional[tuple[int, ...]] = None):
        self.q = q
        super().__init__(message)
