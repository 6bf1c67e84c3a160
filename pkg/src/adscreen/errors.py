"""Exception and warning taxonomy shared across the package.

Every hard failure raised by library code derives from ``AdscreenError`` so
callers (notably the CLI) can map data problems to a stable exit code.
Recoverable oddities are reported through ``AdscreenWarning`` subclasses via
the standard ``warnings`` machinery.
"""


class AdscreenError(Exception):
    """Base class for all errors raised by this package."""


# --- transcript parsing ---

class MalformedHeader(AdscreenError):
    """File lacks the @Begin...@End envelope (strict mode only)."""


class NoParticipantSpeech(AdscreenError):
    """Transcript contains no non-empty participant utterance."""


# --- dataset / feature construction ---

class EmptyVocabulary(AdscreenError):
    """Every token was filtered away; nothing to build a vocabulary from."""


# --- model training ---

class SingleClass(AdscreenError):
    """Classification training data contains only one class."""


class NonFinite(AdscreenError):
    """Input contains NaN or infinite values."""


class UncalibratedModel(AdscreenError):
    """Probability output requested from a model without calibration."""


class DimensionMismatch(AdscreenError):
    """Feature dimensions disagree with what the model or file declares."""


class EmptySequence(AdscreenError):
    """A sequence model received an empty sequence."""


class UnknownId(AdscreenError):
    """Embedding ids do not line up with the dataset ids."""


# --- evaluation harness ---

class TooFewGroups(AdscreenError):
    """Requested more folds than there are groups to distribute."""


class ConfigError(AdscreenError):
    """Run configuration is invalid (reported before any work starts)."""


# --- warnings ---

class AdscreenWarning(UserWarning):
    """Base class for recoverable conditions."""


class ChatParseWarning(AdscreenWarning):
    """Unparseable metadata field, dropped utterance, lenient header, etc."""


class ConvergenceWarning(AdscreenWarning):
    """An iterative solver stopped on its iteration cap, not its tolerance."""


class DatasetWarning(AdscreenWarning):
    """Record skipped or degraded while building a dataset variant."""
