"""Exception types shared across the package."""


class AbaError(Exception):
    """Base class for package errors."""


class ConfigError(AbaError):
    """Invalid parameters, domains, configurations, or scenario files."""


class BudgetExceededError(AbaError):
    """An enumeration or pairwise check exceeded the configured budget."""


class DomainMismatchError(ConfigError):
    """A validity property was evaluated against an incompatible domain."""


class SetupUnavailableError(AbaError):
    """A signature operation was requested without PKI setup."""


class CorruptionBudgetError(ConfigError):
    """An adversary script corrupts more parties than the mode allows."""


class ProtocolError(AbaError):
    """A protocol state machine violated its own contract."""


class MissingSigmaEntryError(ProtocolError):
    """An agreed core set has no entry in the similarity certificate.

    Must be impossible when the certificate was computed for the same
    parameters and domain; treated as a fatal consistency bug.
    """
