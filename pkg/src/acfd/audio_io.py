"""WAV I/O, clip standardization, and dataset manifests.

Canonical clip format: mono, 16 kHz, 33280 samples (2.08 s) so the
downstream STFT (1024-sample window, 512 hop) yields exactly 64 frames.
"""

from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    EmptyClip,
    NotWav,
    ParseError,
    Truncated,
    UnknownLabel,
    UnsupportedEncoding,
)

CANONICAL_SR = 16000
CANONICAL_LEN = 33280  # (33280 - 1024) / 512 + 1 == 64 STFT frames

_PCM_SCALE = 32768.0


class Label(enum.IntEnum):
    AMBIENT = 0
    EXTRUDER_NORMAL = 1
    EXTRUDER_FAULT = 2

    @property
    def tag(self) -> str:
        return _LABEL_TAGS[self]

    @classmethod
    def from_tag(cls, tag: str) -> "Label":
        try:
            return _TAG_LABELS[tag.lower()]
        except KeyError:
            raise UnknownLabel(f"unknown label {tag!r}") from None


_LABEL_TAGS = {
    Label.AMBIENT: "ambient",
    Label.EXTRUDER_NORMAL: "extruder_normal",
    Label.EXTRUDER_FAULT: "extruder_fault",
}
_TAG_LABELS = {tag: label for label, tag in _LABEL_TAGS.items()}


class Split(enum.Enum):
    TRAIN = "train"
    TEST = "test"


@dataclass(frozen=True)
class AudioClip:
    """Mono PCM audio; samples are floats in [-1, 1] after standardization."""

    samples: np.ndarray
    sample_rate_hz: int = CANONICAL_SR

    def __post_init__(self):
        object.__setattr__(
            self, "samples", np.asarray(self.samples, dtype=np.float64)
        )
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


@dataclass(frozen=True)
class LabeledExample:
    clip_path: Path
    label: Label
    split: Split | None = None


def read_wav(path) -> AudioClip:
    """Read a 16-bit PCM RIFF/WAVE file (mono or stereo, averaged to mono)."""
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise NotWav(f"{path}: not a RIFF/WAVE file")

    fmt = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = pos + 8
        if chunk_id == b"fmt ":
            if chunk_size < 16 or body + 16 > len(data):
                raise Truncated(f"{path}: fmt chunk truncated")
            fmt = struct.unpack_from("<HHIIHH", data, body)
        elif chunk_id == b"data":
            if fmt is None:
                raise NotWav(f"{path}: data chunk before fmt chunk")
            audio_format, channels, sample_rate, _, _, bits = fmt
            if audio_format != 1 or bits != 16:
                raise UnsupportedEncoding(
                    f"{path}: need 16-bit PCM, got format={audio_format} bits={bits}"
                )
            if channels not in (1, 2):
                raise UnsupportedEncoding(f"{path}: {channels} channels unsupported")
            if body + chunk_size > len(data):
                raise Truncated(
                    f"{path}: data chunk claims {chunk_size} bytes, "
                    f"{len(data) - body} available"
                )
            pcm = np.frombuffer(data, dtype="<i2", count=chunk_size // 2, offset=body)
            samples = pcm.astype(np.float64)
            if channels == 2:
                samples = samples.reshape(-1, 2).mean(axis=1)
            return AudioClip(samples / _PCM_SCALE, sample_rate_hz=sample_rate)
        # chunks are word-aligned
        pos = body + chunk_size + (chunk_size & 1)
    raise NotWav(f"{path}: no data chunk found")


def write_wav(clip: AudioClip, path) -> None:
    """Write a clip as 16-bit PCM mono; overshoot beyond ±1 saturates."""
    pcm = np.clip(np.rint(clip.samples * _PCM_SCALE), -32768, 32767).astype("<i2")
    payload = pcm.tobytes()
    sr = clip.sample_rate_hz
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, sr, sr * 2, 2, 16)
    header += b"data" + struct.pack("<I", len(payload))
    Path(path).write_bytes(header + payload)


def standardize(clip: AudioClip, target_len: int = CANONICAL_LEN) -> AudioClip:
    """Resample to 16 kHz and force an exact length by padding/truncation."""
    if len(clip) == 0:
        raise EmptyClip("cannot standardize an empty clip")
    samples = clip.samples
    if clip.sample_rate_hz != CANONICAL_SR:
        ratio = CANONICAL_SR / clip.sample_rate_hz
        out_len = int(round(len(samples) * ratio))
        # positions in input-sample units; np.interp holds the last value
        positions = np.arange(out_len) / ratio
        samples = np.interp(positions, np.arange(len(samples)), samples)
    if len(samples) >= target_len:
        samples = samples[:target_len]
    else:
        samples = np.concatenate([samples, np.zeros(target_len - len(samples))])
    samples = np.clip(samples, -1.0, 1.0)
    return AudioClip(samples, sample_rate_hz=CANONICAL_SR)


def load_manifest(path) -> list[LabeledExample]:
    """Parse a JSONL manifest; relative clip paths resolve against its directory."""
    path = Path(path)
    base = path.parent
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            if not isinstance(obj, dict) or "path" not in obj or "label" not in obj:
                raise ParseError(f"{path}:{lineno}: need 'path' and 'label' keys")
            try:
                label = Label.from_tag(str(obj["label"]))
            except UnknownLabel as exc:
                raise UnknownLabel(f"{path}:{lineno}: {exc}") from None
            split = None
            if obj.get("split") is not None:
                try:
                    split = Split(str(obj["split"]).lower())
                except ValueError:
                    raise ParseError(
                        f"{path}:{lineno}: bad split {obj['split']!r}"
                    ) from None
            clip_path = Path(obj["path"])
            if not clip_path.is_absolute():
                clip_path = base / clip_path
            examples.append(LabeledExample(clip_path, label, split))
    return examples
