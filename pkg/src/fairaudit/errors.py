"""Exception hierarchy shared by all fairaudit modules."""


class FairauditError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(FairauditError):
    """A spec, config file, or declared object violates its contract."""


class InputError(FairauditError, ValueError):
    """A function argument is malformed (wrong range, missing feature, bad shape)."""


class NotApplicableError(FairauditError):
    """A metric was requested for inputs where it is undefined (e.g. no proxy label declared)."""


class IOFailure(FairauditError):
    """A referenced file could not be read or written."""
