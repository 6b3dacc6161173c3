"""Exception types shared across the package."""


class PermauditError(Exception):
    """Base class for all package-specific errors."""


class DuplicateIndex(PermauditError, ValueError):
    """A permutation candidate repeats a value."""


class OutOfRange(PermauditError, ValueError):
    """A permutation candidate has a value or length outside the valid range."""


class TupleSpaceTooLarge(PermauditError, ValueError):
    """A k-tuple lift would exceed the addressable tuple-space cap."""


class TapeExhausted(PermauditError, RuntimeError):
    """An enumeration tape has no draws (or assignments) left."""


class ForkUnsupported(PermauditError, TypeError):
    """The source kind cannot produce child streams."""


class IncompatibleSource(PermauditError, TypeError):
    """The bit source cannot drive the requested shuffle algorithm."""


class SpaceTooLarge(PermauditError, ValueError):
    """Exact enumeration space exceeds the supported bound."""


class FactorialTooLarge(PermauditError, ValueError):
    """An N!-sized analysis was requested for too large an N."""


class EnumerationTooLarge(PermauditError, ValueError):
    """A k-tuple order check would exceed the enumeration step budget."""


class TooFewSamples(PermauditError, ValueError):
    """Not enough samples for the requested goodness-of-fit test."""


class BelowMinimumTrials(PermauditError, ValueError):
    """A case has fewer trials than the normal approximation allows."""


class NoUsableCases(PermauditError, ValueError):
    """Every case fell below the minimum-trials threshold."""


class SubsetTooSmall(PermauditError, ValueError):
    """Case reduction would leave fewer cases than the supported minimum."""


class DimensionMismatch(PermauditError, ValueError):
    """A permutation's size does not match the accumulator it is fed to."""
