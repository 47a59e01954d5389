"""Exception types shared across the package.

Every error raised deliberately by this package derives from ``BwedaError``
so callers can catch the package's failures without trapping programming
mistakes such as ``TypeError``.
"""
from __future__ import annotations


class BwedaError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(BwedaError, ValueError):
    """A configuration, scheme, or argument value violates its contract."""


class RateError(BwedaError, ValueError):
    """A waveform has an unsupported or mismatched sample rate."""


class WavFormatError(BwedaError, ValueError):
    """A WAV file is malformed or uses an unsupported encoding."""


class PairingError(BwedaError, ValueError):
    """Paired corpora or batches do not line up one-to-one."""


class BatchError(BwedaError, ValueError):
    """A training batch is empty, ragged, or otherwise unusable."""


class InputTooShortError(BwedaError, ValueError):
    """A signal is shorter than the model's minimum usable length."""


class CheckpointError(BwedaError, ValueError):
    """A checkpoint or container file is corrupt or incompatible."""


class TrainingDivergedError(BwedaError, RuntimeError):
    """A loss became non-finite during training."""


class SchemeError(ValidationError):
    """A training-scheme description is internally inconsistent."""


class ConfigError(ValidationError):
    """An experiment configuration is malformed."""
