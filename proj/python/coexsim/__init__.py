"""Python bindings for the coexistence simulator."""

from ._core import (
    MAX_ERROR_LENGTH,
    ConfigError,
    Peak,
    TraceFormatError,
    classify,
    detect_peaks,
    first_overlap_free_channel,
    fixture_names,
    fixtures,
    replay,
    run,
)

__all__ = [
    "MAX_ERROR_LENGTH",
    "ConfigError",
    "Peak",
    "TraceFormatError",
    "classify",
    "detect_peaks",
    "first_overlap_free_channel",
    "fixture_names",
    "fixtures",
    "replay",
    "run",
]
