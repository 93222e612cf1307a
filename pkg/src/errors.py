class QuantizationError(Exception):
    """Base class for every error raised by this package"""


class ModelFormatError(QuantizationError, ValueError):
    """The model file is missing fields, has wrong types or cannot be parsed"""


class InvalidWordError(QuantizationError, ValueError):
    """A word uses an out-of-range vertex or a pair that is not an edge"""


class NoCycleError(QuantizationError, ValueError):
    """The requested scope has no edges, so Psi is identically zero"""


class NoRootError(QuantizationError, ValueError):
    """A monotone equation has no root in the searched range"""


class CapacityError(QuantizationError):
    """A word set exceeds the configured capacity and was not materialized"""


class InfeasibleLayoutError(QuantizationError, ValueError):
    """Children of some template do not fit into the unit interval"""


class UnsupportedOrderError(QuantizationError, ValueError):
    """Lloyd refinement is only defined for r >= 1"""


class ChainLengthError(QuantizationError, ValueError):
    """Requested chain length is outside 1..M_r"""
