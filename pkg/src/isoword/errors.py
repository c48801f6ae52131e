"""Exception hierarchy shared by all isoword modules."""


class IsowordError(Exception):
    """Base class for every error this package raises deliberately."""


# audio ----------------------------------------------------------------------

class NotWav(IsowordError):
    """File is not a RIFF/WAVE container."""


class UnsupportedFormat(IsowordError):
    """WAV file is valid but not mono 16-bit PCM."""


class Truncated(IsowordError):
    """WAV file ends before a declared chunk is complete."""


class EmptyBuffer(IsowordError):
    """An operation received an audio buffer with no samples."""


class UnknownSyntheticKeyword(IsowordError):
    """Keyword is not part of the synthetic lexicon."""


# frontend -------------------------------------------------------------------

class EmptyInput(IsowordError):
    """Sample sequence is empty."""


class InsufficientSamples(IsowordError):
    """Signal is shorter than one analysis frame."""


class BadLength(IsowordError):
    """Window length below the minimum of 2."""


class LagTooLarge(IsowordError):
    """Requested autocorrelation lag is not shorter than the frame."""


class ZeroEnergy(IsowordError):
    """Frame energy at or below the silence floor; no LPC fit possible."""


class NoSpeech(IsowordError):
    """Endpoint detection found too few frames above the energy threshold."""


# quantizer ------------------------------------------------------------------

class TooFewVectors(IsowordError):
    """Fewer training vectors than requested codebook entries."""


class BadSize(IsowordError):
    """Codebook size is not a power of two."""


class DimMismatch(IsowordError):
    """Vector dimensionality does not match the model."""


# hmm ------------------------------------------------------------------------

class SymbolOutOfRange(IsowordError):
    """Observation symbol is outside [0, M)."""


class EmptyTrainingSet(IsowordError):
    """No training sequences, or a sequence with no symbols."""


# ann ------------------------------------------------------------------------

class MissingClass(IsowordError):
    """A class label has no training examples."""


# recognizer -----------------------------------------------------------------

class InsufficientExamples(IsowordError):
    """Training corpus violates the minimum utterance/speaker counts."""


class EmptyVocabulary(IsowordError):
    """Model set contains no keywords."""


class VersionMismatch(IsowordError):
    """Model file was written with an unsupported format version."""


class CorruptModel(IsowordError):
    """Model file failed to parse or violated an invariant on load."""


# retrieval ------------------------------------------------------------------

class EmptyKeyword(IsowordError):
    """Keyword is empty after normalization."""


class DuplicateId(IsowordError):
    """Record id already present in the store."""


class InvalidPictureRecord(IsowordError):
    """Picture record is missing its picture path or description."""


class CorruptStore(IsowordError):
    """Store file contains a malformed or invalid line."""
