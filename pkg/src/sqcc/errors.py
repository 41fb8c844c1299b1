"""Exception types shared across the package."""


class SQCCError(Exception):
    """Base class for all package errors."""


class DomainError(SQCCError, ValueError):
    """An argument lies outside the domain of a function."""


class NonPhysicalCovariance(SQCCError, ValueError):
    """A covariance matrix violates the uncertainty principle."""


class GainOutOfDomain(SQCCError, ValueError):
    """The amplified state is not a normalizable Gaussian state."""


class NumericUnderflow(SQCCError, ArithmeticError):
    """A probability underflowed to zero in double precision."""


class TruncationError(SQCCError, RuntimeError):
    """A Fock-space truncation lost more norm than allowed."""


class ZeroProbability(SQCCError, RuntimeError):
    """A heralding pattern has vanishing probability."""


class EmptyFeasibleSet(SQCCError, RuntimeError):
    """Every point of an optimizer grid failed to evaluate."""


class ConfigError(SQCCError, ValueError):
    """A run configuration failed validation."""
