"""Exception hierarchy shared across the package."""


class MMDFuseError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(MMDFuseError, ValueError):
    """Malformed arguments: wrong shapes, non-finite values, bad ranges."""


class DegenerateDataError(MMDFuseError, ValueError):
    """Data admits no meaningful test (e.g. all pairwise distances zero)."""


class DegenerateKernelError(MMDFuseError, ValueError):
    """A kernel in the bank has a zero normaliser and cannot be scaled."""


class InvalidConfigError(MMDFuseError, ValueError):
    """A configuration value violates a documented constraint."""


class DataFormatError(MMDFuseError, ValueError):
    """An input file could not be parsed into a numeric matrix."""
