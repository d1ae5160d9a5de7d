"""Exception types shared across the package."""

from __future__ import annotations


class GroomingError(Exception):
    """Base class for all errors raised by this package."""


class InputError(GroomingError, ValueError):
    """A document could not be parsed or failed validation."""


class ChannelInfeasibleError(GroomingError):
    """A channel distance exceeds the reach of every modulation tier."""


class EnumerationLimitError(GroomingError):
    """An exhaustive enumeration would exceed its configured bound."""


class ModelSizeError(GroomingError):
    """The model is too large for the built-in solver."""


class PathExtractionError(GroomingError):
    """Solution flows do not decompose into simple service paths."""
