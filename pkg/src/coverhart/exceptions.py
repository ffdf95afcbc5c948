"""Exception hierarchy shared by every module."""


class CoverHartError(Exception):
    """Base class for all errors raised by :mod:`coverhart`."""


class SpaceMismatch(CoverHartError, ValueError):
    """A kernel, distribution or point does not live on the expected space."""


class InvalidParameter(CoverHartError, ValueError):
    """A numeric parameter is outside its admissible range."""


class TooManyPoints(CoverHartError, ValueError):
    """A certifier was handed more points than its exhaustive scan allows."""


class OptimizerDiverged(CoverHartError, ArithmeticError):
    """The Bayes-act objective evaluated to a non-finite value."""


class UncertifiedKernel(CoverHartError, ValueError):
    """An operation that needs a negative definite kernel got an uncertified one."""


class ConfigError(CoverHartError, ValueError):
    """An experiment config failed to parse or validate."""
