"""Shared exception types.

Rule of thumb used across the package: misuse (bad configuration, values
outside the sensor's range, malformed wire data) raises; measurements that
are legitimately undefined for the given input (no contact, too few
samples) return None instead.
"""


class ConfigError(ValueError):
    """Invalid configuration: illegal obstacle height, bad bank size, etc."""


class SessionStateError(RuntimeError):
    """A session command arrived in a state that cannot accept it."""


class RecordingError(ValueError):
    """A persisted recording could not be parsed. Message names the offset."""
