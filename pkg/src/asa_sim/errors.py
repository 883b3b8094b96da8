"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(SimulationError, ValueError):
    """A numeric argument violates its documented domain."""


class InfeasibleError(SimulationError, ValueError):
    """No channel assignment can satisfy the requested rates."""


class UnsupportedRegimeError(SimulationError, ValueError):
    """More users than channels; outside the supported regime."""


class InvalidActionError(SimulationError, ValueError):
    """A slot action refers to a channel that does not exist."""


class InsufficientDataError(SimulationError, ValueError):
    """Too few usable points for a fit."""


class InternalLogicError(SimulationError, RuntimeError):
    """The policy state machine was driven outside its contract."""


class ConfigError(SimulationError, ValueError):
    """An experiment configuration violates a constraint."""
