"""Exception types shared by every module.

Class names double as the diagnostic names printed by the command line.
"""


class DomainError(ValueError):
    """Base class for all library errors."""


class EmptySet(DomainError):
    pass


class InvalidShape(DomainError):
    pass


class TrivialComponent(DomainError):
    pass


class InvalidParameter(DomainError):
    pass


class OverlappingComponents(DomainError):
    def __init__(self, first: str, second: str, distance: float):
        super().__init__(f"components {first!r} and {second!r} are {distance:.3g} apart")
        self.pair = (first, second)
        self.distance = distance


class UnboundedComplement(DomainError):
    pass


class ZeroDistance(DomainError):
    pass


class UnknownComponent(DomainError):
    pass


class InvalidR0(DomainError):
    pass


class NoSeparatingCycle(DomainError):
    pass


class InvalidWalk(DomainError):
    pass


class EmptyFamily(DomainError):
    pass


class MaxIterExceeded(DomainError):
    """Raised by the modulus solver; ``result`` holds the best bracket reached."""

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class NonSimpleCurve(DomainError):
    pass


class ConvergenceFailure(DomainError):
    def __init__(self, message: str, achieved: float = float("nan")):
        super().__init__(message)
        self.achieved = achieved


class MaxRoundsExceeded(DomainError):
    """Raised by the Koebe iteration; carries the best iterate and its trace."""

    def __init__(self, message: str, circle_domain=None, numeric_map=None, trace=None):
        super().__init__(message)
        self.circle_domain = circle_domain
        self.numeric_map = numeric_map
        self.trace = trace


class ComponentCollision(DomainError):
    pass


class OutsideDomain(DomainError):
    pass


class InsufficientStages(DomainError):
    pass
