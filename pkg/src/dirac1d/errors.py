"""Exception types shared across modules."""


class DomainError(ValueError):
    """A position or parameter lies outside the supported domain."""


class ConfigError(ValueError):
    """Invalid configuration value; the message names the offending field."""


class GapClosedError(RuntimeError):
    """A level reached zero energy, so the filled vacuum is ill-defined."""


class UnsupportedRegimeError(ValueError):
    """Requested parameters fall outside the regime a solver handles."""


class WindowError(ValueError):
    """Point-splitting distance outside the resolvable window."""
