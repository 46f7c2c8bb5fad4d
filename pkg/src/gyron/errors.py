"""Exception types raised across the package."""


class GyronError(Exception):
    """Base class for all errors raised by :mod:`gyron`."""


class InputError(GyronError, ValueError):
    """Invalid user input (bad parameters, labels, files)."""


class NonCoprime(InputError):
    pass


class NonPositive(InputError):
    pass


class InvalidLabel(InputError):
    pass


class EntryOverflow(GyronError, OverflowError):
    """A matrix entry does not fit in double precision.

    ``index`` holds the offending ``(row, column)`` pair.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class CutoffTooSmall(GyronError):
    pass


class QuadratureNotConverged(GyronError):
    pass


class SingularAtPole(GyronError):
    pass


class NotHermitian(GyronError):
    pass


class MultiWell(GyronError):
    """The symbol has level sets with several components."""


class RootBracketFailure(GyronError):
    pass
