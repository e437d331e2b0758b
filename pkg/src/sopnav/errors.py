"""Exception types shared across the package."""


class SopnavError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(SopnavError):
    """Invalid configuration or parameter set."""


class ContractError(SopnavError):
    """A caller violated an operation's precondition."""


class InstanceTooLarge(ContractError):
    """Instance exceeds the exact solver's cluster limit; use the VNS solver."""


class NothingToPlan(SopnavError):
    """The planning instance carries no reward anywhere: the episode is exhausted."""
