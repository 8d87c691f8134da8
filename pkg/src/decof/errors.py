"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class DecofError(Exception):
    exit_code = 4


class ConfigError(DecofError):
    exit_code = 2


class ParameterError(ConfigError):
    pass


class DataError(DecofError):
    exit_code = 3


class ValidationError(DataError):
    """Manifest rule violations. ``offenders`` lists the offending ids."""

    def __init__(self, message, offenders=()):
        super().__init__(message)
        self.offenders = list(offenders)


class FormatError(DataError):
    """Malformed binary file; ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ProbeError(DataError):
    pass


class MetricError(DataError):
    pass


class DimensionError(DecofError):
    pass


class ConsistencyError(DecofError):
    pass


class ContractError(DecofError):
    pass


class DivergenceError(DecofError):
    def __init__(self, epoch, batch, loss):
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


class BackendError(DecofError):
    pass


class CapabilityError(BackendError):
    pass
