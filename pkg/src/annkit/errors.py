"""Exception hierarchy shared by every annkit module."""


class AnnkitError(Exception):
    """Base class for all annkit errors."""


class ValidationError(AnnkitError, ValueError):
    """Malformed input: bad shapes, bad files, violated preconditions."""


class DimensionMismatch(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class EmptySet(ValidationError):
    pass


class PartitioningMismatch(ValidationError):
    pass


class NonConvexDomainRejected(ValidationError):
    pass


class NegativeInput(ValidationError):
    pass


class RepresentativeOutOfRange(ValidationError):
    pass


class PreconditionViolated(ValidationError):
    pass


class UnsupportedExactMembership(ValidationError):
    pass


class WivpUnsupportedActivation(ValidationError):
    pass


class NonMonotoneActivation(ValidationError):
    pass


class UnboundedActivation(ValidationError):
    pass


class InvalidBound(ValidationError):
    pass


class CarryUnsolvable(AnnkitError):
    pass


class NoConvergence(AnnkitError):
    pass


class BinaryEnumerationLimitExceeded(AnnkitError):
    def __init__(self, cap, count):
        super().__init__(f"{count} binary mergings exceed the enumeration cap {cap}")
        self.cap = cap
        self.count = count


class WitnessFailed(AnnkitError):
    def __init__(self, layer, reason):
        super().__init__(f"layer {layer}: {reason}")
        self.layer = layer
        self.reason = reason
