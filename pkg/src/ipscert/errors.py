"""Exception types shared across the package."""


class IpsError(Exception):
    """Base class for all package errors."""


class ZeroKernel(IpsError):
    pass


class NotSingleChange(IpsError):
    pass


class NotConservative(IpsError):
    pass


class StateSpaceTooLarge(IpsError):
    pass


class PhiOutOfRange(IpsError):
    pass


class PhiZero(IpsError):
    pass


class BadParams(IpsError):
    pass


class ModelFileError(IpsError):
    pass


class CouplingCycle(IpsError):
    """The lazy coupling evaluation hit a term that depends on itself."""


class OrderBroken(IpsError):
    """A coupled event left the lower configuration above the upper one."""

    def __init__(self, message, event=None, quadruple=None):
        super().__init__(message)
        self.event = event
        self.quadruple = quadruple


class ExplodingRate(IpsError):
    pass
