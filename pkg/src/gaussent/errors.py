"""Exception types raised by gaussent."""


class GaussentError(Exception):
    """Base class for all package errors."""


class InputError(GaussentError, ValueError):
    """Malformed input: wrong shape, non-finite entries, asymmetry, bad partition."""


class NotPositiveDefiniteError(InputError):
    pass


class NotSymplecticError(InputError):
    pass


class NotUnitaryError(InputError):
    pass


class UnphysicalStateError(InputError):
    """The covariance matrix violates the uncertainty relation."""


class NumericalError(GaussentError, RuntimeError):
    """A decomposition or solve failed to meet its accuracy contract."""
