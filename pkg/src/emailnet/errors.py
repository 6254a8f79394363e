"""Exception hierarchy shared by every emailnet module."""


class EmailNetError(Exception):
    """Base class for all package errors."""


class ConfigurationError(EmailNetError):
    """Bad key material, weights or config files."""


class UsageError(EmailNetError, ValueError):
    """Caller passed arguments that violate an operation's preconditions."""


class UndefinedValueError(EmailNetError, ValueError):
    """A metric is undefined on the given input (empty or degenerate network)."""


class FitImpossibleError(UndefinedValueError):
    """A histogram cannot support a power-law fit."""
