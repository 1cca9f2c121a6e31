"""STFT, mel filterbank, and spectrogram image rendering.

The feature path is: power spectrogram -> 64-band mel pooling -> log10
-> per-image min-max normalization -> grayscale or colormapped pixels.
A canonical 33280-sample clip maps to a 64x64 image.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .audio_io import AudioClip, CANONICAL_SR
from .errors import BadRange, ClipTooShort

WINDOW_LEN = 1024
HOP = 512
N_BINS = WINDOW_LEN // 2 + 1  # 513
N_MEL = 64
F_MIN = 50.0
F_MAX = 2000.0
LOG_FLOOR = 1e-10
_OLA_FLOOR = 1e-8


def hann_periodic(n: int) -> np.ndarray:
    """Periodic Hann window: 0.5 - 0.5*cos(2*pi*k/n)."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


@dataclass(frozen=True)
class StftConfig:
    window_len: int = WINDOW_LEN
    hop: int = HOP

    @property
    def n_bins(self) -> int:
        return self.window_len // 2 + 1

    def window(self) -> np.ndarray:
        return hann_periodic(self.window_len)


DEFAULT_STFT = StftConfig()


def stft(clip: AudioClip, cfg: StftConfig = DEFAULT_STFT) -> np.ndarray:
    """Complex half-spectra, shape (frames, bins); frame t covers [t*H, t*H+W)."""
    x = clip.samples
    if len(x) < cfg.window_len:
        raise ClipTooShort(
            f"need at least {cfg.window_len} samples, got {len(x)}"
        )
    n_frames = (len(x) - cfg.window_len) // cfg.hop + 1
    frames = sliding_window_view(x, cfg.window_len)[:: cfg.hop][:n_frames]
    return np.fft.rfft(frames * cfg.window(), axis=1)


def synthesis_window(cfg: StftConfig = DEFAULT_STFT) -> np.ndarray:
    """Analysis window divided by the overlap-added sum of squared windows.

    The denominator is the periodic tiling of w^2 at the hop, so overlap-
    adding (w * frame) * w_synth reconstructs the fully-overlapped interior
    exactly and stays bounded near clip edges.
    """
    win = cfg.window()
    denom = np.zeros(cfg.window_len)
    for j in range(0, cfg.window_len, cfg.hop):
        denom += np.roll(win * win, j)
    return win / np.maximum(denom, _OLA_FLOOR)


def istft(spectra: np.ndarray, cfg: StftConfig = DEFAULT_STFT) -> AudioClip:
    """Weighted overlap-add inverse; synthesis window derived from analysis."""
    n_frames = spectra.shape[0]
    length = (n_frames - 1) * cfg.hop + cfg.window_len
    out = np.zeros(length)
    segments = np.fft.irfft(spectra, n=cfg.window_len, axis=1) * synthesis_window(cfg)
    for t in range(n_frames):
        start = t * cfg.hop
        out[start:start + cfg.window_len] += segments[t]
    return AudioClip(out, sample_rate_hz=CANONICAL_SR)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(
    n_mel: int = N_MEL,
    f_min: float = F_MIN,
    f_max: float = F_MAX,
    window_len: int = WINDOW_LEN,
    sr: int = CANONICAL_SR,
) -> np.ndarray:
    """Triangular mel filters, shape (n_mel, window_len//2+1), row max 1.0."""
    if not (0 <= f_min < f_max <= sr / 2):
        raise BadRange(f"bad mel range [{f_min}, {f_max}] at sr={sr}")
    edges = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mel + 2))
    bin_freqs = np.arange(window_len // 2 + 1) * sr / window_len
    fb = np.zeros((n_mel, len(bin_freqs)))
    for i in range(n_mel):
        lo, center, hi = edges[i], edges[i + 1], edges[i + 2]
        rising = (bin_freqs - lo) / (center - lo)
        falling = (hi - bin_freqs) / (hi - center)
        tri = np.maximum(0.0, np.minimum(rising, falling))
        peak = tri.max()
        if peak > 0:
            tri /= peak
        fb[i] = tri
    return fb


_MEL_FB_CACHE: dict[tuple, np.ndarray] = {}


def _default_filterbank() -> np.ndarray:
    key = (N_MEL, F_MIN, F_MAX, WINDOW_LEN, CANONICAL_SR)
    if key not in _MEL_FB_CACHE:
        _MEL_FB_CACHE[key] = mel_filterbank()
    return _MEL_FB_CACHE[key]


def mel_center_freqs(n_mel: int = N_MEL, f_min: float = F_MIN,
                     f_max: float = F_MAX) -> np.ndarray:
    """Center frequency (Hz) of each mel band."""
    edges = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mel + 2))
    return edges[1:-1]


def mel_spectrogram(clip: AudioClip) -> np.ndarray:
    """Normalized log-mel values, shape (n_mel, frames); row 0 = lowest band.

    All-zero (or otherwise constant) log-power images normalize to all zeros.
    """
    power = np.abs(stft(clip)) ** 2  # (frames, bins)
    mel_power = power @ _default_filterbank().T  # (frames, n_mel)
    logv = np.log10(mel_power + LOG_FLOOR).T  # (n_mel, frames)
    lo, hi = logv.min(), logv.max()
    if hi == lo:
        return np.zeros_like(logv)
    return (logv - lo) / (hi - lo)


# Fixed 5-point colormap (dark purple -> yellow) so colored rendering is
# bit-reproducible; control points at v = 0, 0.25, 0.5, 0.75, 1.
COLORMAP_STOPS = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
COLORMAP_RGB = np.array(
    [
        [0.267, 0.005, 0.329],
        [0.229, 0.322, 0.545],
        [0.127, 0.566, 0.551],
        [0.369, 0.789, 0.383],
        [0.993, 0.906, 0.144],
    ]
)


@dataclass(frozen=True)
class SpectrogramImage:
    """Normalized values plus rendered pixel planes (H, W, channels)."""

    values: np.ndarray
    pixels: np.ndarray
    channels: int

    def __post_init__(self):
        if self.pixels.shape != self.values.shape + (self.channels,):
            raise ValueError("pixel plane shape inconsistent with values")


def render(values: np.ndarray, colored: bool = False) -> SpectrogramImage:
    """Grayscale: pixel = value.  Colored: piecewise-linear 5-stop colormap."""
    values = np.asarray(values, dtype=np.float64)
    if colored:
        pixels = np.stack(
            [np.interp(values, COLORMAP_STOPS, COLORMAP_RGB[:, c]) for c in range(3)],
            axis=-1,
        )
        return SpectrogramImage(values, pixels, 3)
    return SpectrogramImage(values, values[..., None].copy(), 1)


def export_image(image: SpectrogramImage, path) -> None:
    """Write binary PGM (grayscale) or PPM (colored); top row = highest band."""
    h, w = image.values.shape
    magic = b"P5" if image.channels == 1 else b"P6"
    header = magic + f"\n{w} {h}\n255\n".encode("ascii")
    flipped = image.pixels[::-1]  # frequency increases upward in the file
    payload = np.rint(255.0 * flipped).astype(np.uint8).tobytes()
    Path(path).write_bytes(header + payload)
