"""Exception hierarchy for the toolkit."""


class AcfdError(Exception):
    """Base class for all toolkit errors."""


# --- audio_io ---

class NotWav(AcfdError):
    """File is not a RIFF/WAVE container."""


class UnsupportedEncoding(AcfdError):
    """WAV encoding other than 16-bit PCM mono/stereo."""


class Truncated(AcfdError):
    """File or tensor payload shorter than its header claims."""


class EmptyClip(AcfdError):
    """Operation requires a non-empty clip."""


class ParseError(AcfdError):
    """Malformed manifest line; message carries the line number."""


class UnknownLabel(ParseError):
    """Manifest label outside the three known classes."""


# --- dsp / spectrogram ---

class WrongSampleRate(AcfdError):
    """Clip sample rate differs from the canonical 16 kHz."""


class ClipTooShort(AcfdError):
    """Clip shorter than one analysis window."""


class ProfileLengthMismatch(AcfdError):
    """Noise profile bin count does not match the STFT configuration."""


class BadRange(AcfdError):
    """Invalid mel filterbank frequency range."""


# --- cnn ---

class ShapeMismatch(AcfdError):
    """Input or gradient shape inconsistent with the architecture."""


class BadChannelCount(AcfdError):
    """Architecture channel count outside {1, 3}."""


class BadMagic(AcfdError):
    """Model file does not start with the expected magic bytes."""


class VersionMismatch(AcfdError):
    """Model file version unsupported."""


# --- trainer ---

class ClassTooSmall(AcfdError):
    """A class has fewer than two examples; stratified split impossible."""


class EmptySet(AcfdError):
    """Training or validation set is empty."""


class MixedChannels(AcfdError):
    """Feature images disagree on channel count."""


class MaskLengthMismatch(AcfdError):
    """Freeze mask length differs from the number of parameterized layers."""


# --- monitor ---

class NoModel(AcfdError):
    """Monitor constructed or run without a loaded model."""
