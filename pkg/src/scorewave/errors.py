"""Exception hierarchy shared across the toolkit.

The CLI maps these onto distinct exit codes: config errors exit 2,
I/O errors exit 3, numeric failures exit 4.
"""


class ScorewaveError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ScorewaveError, ValueError):
    """Invalid configuration: bad parameter values, unknown keys, dim mismatches."""


class AudioError(ScorewaveError):
    """Audio I/O failure: malformed files, unsupported encodings, bad rates."""


class NumericError(ScorewaveError):
    """Non-finite values or otherwise undefined numeric results."""


class MetricError(NumericError):
    """Metric undefined for the given inputs (e.g. silent reference)."""


class SamplingError(NumericError):
    """Sampler produced a non-finite iterate; carries the failing step index."""


class TrainingError(NumericError):
    """Training loss went non-finite; carries the failing iteration index."""
