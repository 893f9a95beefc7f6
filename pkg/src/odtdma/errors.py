"""Exception hierarchy shared by the simulator modules."""


class OdtdmaError(Exception):
    pass


class ConfigError(OdtdmaError, ValueError):
    """Invalid radio setting, protocol parameter or experiment config."""


class DomainError(OdtdmaError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ProtocolViolation(OdtdmaError):
    """A node broke a protocol rule; the trial must abort."""


class TrialAborted(OdtdmaError):
    """Raised by run_trial when a protocol violation stops the event loop.

    ``trace_suffix`` holds the last trace records before the failure.
    """

    def __init__(self, message, trace_suffix=()):
        super().__init__(message)
        self.trace_suffix = list(trace_suffix)
