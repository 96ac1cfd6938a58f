"""Exception hierarchy shared by all bsrd modules."""


class BsrdError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(BsrdError, ValueError):
    """A model parameter or an evaluated probability violates its constraint."""


class MissingParameterError(ParameterError):
    """A sequence-valued parameter has no entry at the requested index."""


class DomainError(BsrdError, ValueError):
    """An operation was called outside its valid argument domain."""


class DegenerateVarianceError(DomainError):
    """A normalizer is zero because every trial is deterministic."""


class DegenerateRegimeError(DomainError):
    """The process sits in the regime where the Gaussian limit is not expected."""


class UnsupportedFamilyError(BsrdError, TypeError):
    """The operation is only defined for the linear dependence family."""


class NumericIntegrityError(BsrdError, ArithmeticError):
    """An internal numeric consistency check failed (drift, bound, inversion)."""


class InsufficientDataError(BsrdError, ValueError):
    """Too few samples for the requested statistical test."""
