"""Exception hierarchy shared by every module of the lab."""


class RosenauLabError(Exception):
    pass


class ConfigError(RosenauLabError, ValueError):
    """Invalid parameters, grid sizes or configuration documents."""


class DomainError(RosenauLabError, ValueError):
    """A requested space-time window is not covered by the available data."""


class QuadratureError(RosenauLabError, RuntimeError):
    pass


class BlowUpError(RosenauLabError, FloatingPointError):
    """The dispersive solver produced non-finite values.

    ``time`` is the simulation time of the failed step and ``trajectory``
    holds everything accepted before it.
    """

    def __init__(self, message, time=None, trajectory=None):
        super().__init__(message)
        self.time = time
        self.trajectory = trajectory


class SnapshotFormatError(RosenauLabError, IOError):
    pass


class SnapshotMagicError(SnapshotFormatError):
    pass


class SnapshotVersionError(SnapshotFormatError):
    pass


class SnapshotTruncatedError(SnapshotFormatError):
    pass
