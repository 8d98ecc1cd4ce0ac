"""Exception types shared across the runtime."""


class SimError(Exception):
    """Base class for all runtime errors."""


class ConfigError(SimError):
    """A config file is malformed; carries file/line diagnostics."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:" if line is None else f"{path}:{line}:"
        super().__init__(f"{where} {message}".strip())


class DuplicateAgent(SimError):
    pass


class UnknownAgent(SimError):
    pass


class RouteForbidden(SimError):
    pass


class EmptyText(SimError):
    pass


class NonFiniteGoal(SimError):
    pass


class OutOfRange(SimError):
    def __init__(self, field, message=None):
        self.field = field
        super().__init__(message or f"value for {field!r} outside permitted range")


class InvalidPriority(SimError):
    pass


class NotRunning(SimError):
    pass


class UnknownTask(SimError):
    pass


class ChecksumMismatch(SimError):
    pass


class DuplicateVersion(SimError):
    pass


class InvalidFsm(SimError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))
