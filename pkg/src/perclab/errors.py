"""Exception hierarchy shared by all perclab modules."""


class PerclabError(Exception):
    """Base class for every error raised by perclab."""


class UsageError(PerclabError):
    """Bad command line or configuration input (exit code 2)."""


class UnknownFlag(UsageError):
    pass


class MissingSeed(UsageError):
    pass


class BadValue(UsageError):
    def __init__(self, token, reason=""):
        self.token = token
        msg = f"bad value {token!r}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class NumericError(PerclabError):
    """Numerical failure (exit code 3)."""


class NoConvergence(NumericError):
    def __init__(self, max_iter, residual):
        self.max_iter = max_iter
        self.residual = residual
        super().__init__(f"no convergence after {max_iter} iterations (residual {residual:.3e})")


class DataError(PerclabError):
    """Invalid data, geometry or configuration (exit code 4)."""


class NonPeriodicShift(DataError):
    pass


class NonPeriodic(DataError):
    pass


class NoArrival(DataError):
    pass


class EmptyCluster(DataError, UserWarning):
    """Issued as a warning: the giant cluster degenerates to one site."""


class EmptyShell(DataError):
    pass


class StartOffCluster(DataError):
    pass


class IsolatedStart(DataError):
    pass


class TooLarge(DataError):
    pass


class PathTooShort(DataError):
    pass


class DisconnectedInterior(DataError):
    pass


class NoSpanningCluster(DataError):
    pass


class NotPlanarDimension(DataError):
    pass


class CorruptHeader(DataError):
    pass


class VersionMismatch(DataError):
    pass
