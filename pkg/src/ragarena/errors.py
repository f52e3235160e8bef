"""Exception taxonomy shared across the package.

Each subclass maps to one diagnostic category surfaced by the CLI, so
callers can distinguish misconfiguration from bad data from flaky
endpoints without string-matching messages.
"""

from __future__ import annotations


class ArenaError(Exception):
    """Base class for all errors raised by this package."""

    category = "runtime"


class ConfigError(ArenaError):
    """Invalid run configuration: missing paths, bad profiles, bad flags."""

    category = "config"


class DataError(ArenaError):
    """Malformed or inconsistent input data (datasets, answers, labels)."""

    category = "data"


class TransportError(ArenaError):
    """A judge endpoint could not be reached after the configured retries."""

    category = "transport"


class JudgeProtocolError(ArenaError):
    """The judge replied, but not in the agreed shape (e.g. no logprobs)."""

    category = "protocol"


class PairingExhaustedError(ArenaError):
    """No legal perfect matching exists for the requested round."""

    category = "data"


class UndefinedKappaError(ArenaError):
    """Chance agreement is 1, so Cohen's kappa has no defined value."""

    category = "data"
