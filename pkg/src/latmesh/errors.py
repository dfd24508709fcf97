"""Exception hierarchy shared by every latmesh module.

The CLI maps these onto process exit codes: validation problems exit 2,
precision exhaustion exits 3 and guard violations exit 4.
"""


class LatmeshError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ValidationError(LatmeshError, ValueError):
    """An input violates a documented precondition."""

    exit_code = 2


class PoleError(ValidationError):
    """zeta evaluated at a ball that contains s = 1."""


class GabNotValidated(ValidationError):
    """The closed form for G_{a,b} was requested before it was validated."""


class PrecisionExhausted(LatmeshError, ArithmeticError):
    """A target radius could not be reached at the maximal precision."""

    exit_code = 3


class AmbiguousFloor(PrecisionExhausted):
    """A ball straddles an integer even at the maximal precision."""


class AmbiguousBoundary(PrecisionExhausted):
    """A lattice value cannot be separated from the counting bound x."""


class AmbiguousOrder(PrecisionExhausted):
    """Two distinct jump abscissae cannot be ordered."""


class AmbiguousTie(PrecisionExhausted):
    """Membership of a difference in a closed delta-band is undecidable."""


class GuardViolation(LatmeshError):
    """A resource guard (size, memory, term count) was exceeded."""

    exit_code = 4
    guard = "guard"

    def __init__(self, message: str):
        super().__init__(f"{self.guard}: {message}")


class TermCapExceeded(GuardViolation):
    guard = "TermCapExceeded"


class BoxTooLarge(GuardViolation):
    guard = "BoxTooLarge"


class MemoryGuard(GuardViolation):
    guard = "MemoryGuard"


class SizeGuard(GuardViolation):
    guard = "SizeGuard"
