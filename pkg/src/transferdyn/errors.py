class UsageError(ValueError):
    """Bad arguments to a library call (index out of range, non-finite mu, ...)."""


class ConfigError(ValueError):
    """A scenario description is malformed or breaks a required hypothesis."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [message])
