"""Exception hierarchy shared by every module of the package."""


class MxsEflError(Exception):
    """Base class for all errors raised by this package."""


class InvalidValuation(MxsEflError, ValueError):
    pass


class MissingTableEntry(MxsEflError, KeyError):
    pass


class EmptyCollection(MxsEflError, ValueError):
    pass


class EmptyBundle(MxsEflError, ValueError):
    pass


class DimensionMismatch(MxsEflError, ValueError):
    pass


class InvalidPartition(MxsEflError, ValueError):
    pass


class CyclicGraph(MxsEflError):
    """No chain reaches the requested bundle, which only happens when cycles block every path."""


class FreeInteriorVertex(MxsEflError, ValueError):
    pass


class InstanceTooLarge(MxsEflError):
    """An exhaustive enumeration would exceed the configured budget."""

    def __init__(self, needed: int, budget: int, what: str = "enumeration"):
        super().__init__(f"{what} needs {needed} assignments, budget is {budget}")
        self.needed = needed
        self.budget = budget


class NoFairAssociation(MxsEflError):
    pass


class IterationCapExceeded(MxsEflError):
    """A loop exceeded its tripwire. On valid input this indicates a bug."""


class InvariantViolation(MxsEflError):
    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class NotRestrictedMmsFeasible(MxsEflError):
    pass


class InvalidSpec(MxsEflError, ValueError):
    pass
