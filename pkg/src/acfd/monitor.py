"""Real-time sliding-window inference with EMA smoothing and hysteresis.

Incoming samples are bandpass-filtered incrementally through a persistent
cascade; every stride boundary past the first full window triggers one
classification of the trailing window.  Verdicts are a pure function of
the sample stream, independent of how it is chunked.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import cnn
from .audio_io import AudioClip, CANONICAL_LEN, CANONICAL_SR, Label, read_wav
from .dsp import design_bandpass
from .errors import NoModel
from .spectrogram import mel_spectrogram, render


@dataclass(frozen=True)
class MonitorConfig:
    window: int = CANONICAL_LEN
    stride: int = 8192  # 0.512 s
    ema_alpha: float = 0.6
    alarm_on: float = 0.8
    alarm_off: float = 0.5
    consecutive_k: int = 3

    def __post_init__(self):
        if not 0.0 < self.ema_alpha <= 1.0:
            raise ValueError("ema_alpha must be in (0, 1]")
        if not self.alarm_off < self.alarm_on:
            raise ValueError("alarm_off must be below alarm_on")


@dataclass(frozen=True)
class StreamVerdict:
    t_end: float
    probs: np.ndarray  # (ambient, extruder_normal, extruder_fault)
    smoothed_fault: float
    state: str  # "normal" | "alarm"

    def to_dict(self) -> dict:
        return {
            "t_end": self.t_end,
            "probs": {
                Label(i).tag: float(self.probs[i]) for i in range(len(self.probs))
            },
            "smoothed_fault": self.smoothed_fault,
            "state": self.state,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


class StreamMonitor:
    """Single-owner stateful monitor: ring buffer, filter state, EMA, alarm."""

    def __init__(self, model: cnn.Model, config: MonitorConfig = MonitorConfig()):
        if model is None:
            raise NoModel("monitor requires a loaded model")
        self.model = model
        self.config = config
        self._colored = model.arch.channels == 3
        self._cascade = design_bandpass()
        self._buffer = np.zeros(0)
        self._consumed = 0
        self._next_emit = config.window
        self._smoothed: float | None = None
        self._state = "normal"
        self._run_length = 0

    def _window_probs(self, window: np.ndarray) -> np.ndarray:
        clip = AudioClip(window, sample_rate_hz=CANONICAL_SR)
        image = render(mel_spectrogram(clip), colored=self._colored).pixels
        return cnn.predict(self.model, image.astype(np.float32))

    def _advance_alarm(self, p_fault: float) -> tuple[float, str]:
        cfg = self.config
        if self._smoothed is None:
            s = p_fault
        else:
            s = cfg.ema_alpha * p_fault + (1.0 - cfg.ema_alpha) * self._smoothed
        self._smoothed = s
        if self._state == "normal":
            if s >= cfg.alarm_on:
                self._run_length += 1
                if self._run_length >= cfg.consecutive_k:
                    self._state = "alarm"
            else:
                self._run_length = 0
        else:
            if s < cfg.alarm_off:
                self._state = "normal"
                self._run_length = 0
        return s, self._state

    def push_samples(self, samples) -> list[StreamVerdict]:
        """Feed a chunk at 16 kHz; returns verdicts completed by this chunk."""
        filtered = self._cascade.process(np.asarray(samples, dtype=np.float64))
        self._buffer = np.concatenate([self._buffer, filtered])
        self._consumed += len(filtered)
        verdicts = []
        cfg = self.config
        while self._next_emit <= self._consumed:
            # buffer covers [consumed - len(buffer), consumed)
            end = len(self._buffer) - (self._consumed - self._next_emit)
            window = self._buffer[end - cfg.window:end]
            probs = self._window_probs(window)
            p_fault = float(probs[int(Label.EXTRUDER_FAULT)])
            smoothed, state = self._advance_alarm(p_fault)
            verdicts.append(
                StreamVerdict(
                    t_end=self._next_emit / CANONICAL_SR,
                    probs=probs,
                    smoothed_fault=smoothed,
                    state=state,
                )
            )
            self._next_emit += cfg.stride
        # keep only what the next window needs
        needed = self._consumed - (self._next_emit - cfg.window)
        if 0 < needed < len(self._buffer):
            self._buffer = self._buffer[-needed:]
        return verdicts


def run_file(monitor: StreamMonitor, wav_path,
             chunk_size: int = 8192) -> list[StreamVerdict]:
    """Stream a WAV through the monitor; chunk size does not affect verdicts."""
    clip = read_wav(wav_path)
    samples = clip.samples
    verdicts = []
    for start in range(0, len(samples), chunk_size):
        verdicts.extend(monitor.push_samples(samples[start:start + chunk_size]))
    return verdicts
