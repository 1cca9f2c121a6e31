"""Deterministic synthetic generator for the three acoustic classes.

Recipes encode the physically motivated signatures of an FDM extruder:
steady stepper harmonics while feeding material, dropouts and broadband
clicks when starved, and low-frequency-weighted room noise for ambient.
Every clip is a pure function of (class, seed).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .audio_io import (
    AudioClip,
    CANONICAL_LEN,
    CANONICAL_SR,
    Label,
    write_wav,
)
from .prng import SplitMix64, combine_seed

DURATION_S = CANONICAL_LEN / CANONICAL_SR  # 2.08
PEAK = 0.8

_MAINS_HZ = 60.0
_MAINS_AMP = 0.1
_ONE_POLE = 0.95

_F0_LO, _F0_HI = 220.0, 280.0
_N_HARMONICS = 6
_FM_RATE_HZ = 0.5
_FM_DEPTH = 0.01
_NORMAL_SNR_DB = 10.0
_FAULT_SNR_DB = 5.0

_DROPOUT_RATE = 3.0  # events/s
_DROPOUT_LO_S, _DROPOUT_HI_S = 0.05, 0.15
_CLICK_RATE = 10.0  # events/s
_CLICK_TAU_S = 0.005
_CLICK_AMP = 0.6
_CLICK_LEN = 480  # 30 ms = 6 decay constants


def _room_noise(rng: SplitMix64, n: int) -> np.ndarray:
    """White Gaussian noise through y[n] = 0.95*y[n-1] + 0.05*x[n], unit peak,
    plus a 60 Hz mains hum at relative amplitude 0.1."""
    white = rng.gaussians(n)
    shaped = lfilter([1.0 - _ONE_POLE], [1.0, -_ONE_POLE], white)
    shaped /= np.max(np.abs(shaped))
    t = np.arange(n) / CANONICAL_SR
    return shaped + _MAINS_AMP * np.sin(2.0 * np.pi * _MAINS_HZ * t)


def _harmonic_stack(rng: SplitMix64, n: int) -> np.ndarray:
    """Six-harmonic stack, amplitudes 1/k, slow +-1% frequency modulation."""
    f0 = rng.uniform(_F0_LO, _F0_HI)
    t = np.arange(n) / CANONICAL_SR
    # phase integral of f0*(1 + depth*sin(2*pi*fm*t))
    mod = _FM_DEPTH * (1.0 - np.cos(2.0 * np.pi * _FM_RATE_HZ * t)) / (
        2.0 * np.pi * _FM_RATE_HZ
    )
    base_phase = 2.0 * np.pi * f0 * (t + mod)
    sig = np.zeros(n)
    for k in range(1, _N_HARMONICS + 1):
        sig += np.sin(k * base_phase) / k
    return sig


def _scaled_to_snr(noise: np.ndarray, signal: np.ndarray,
                   snr_db: float) -> np.ndarray:
    p_sig = np.mean(signal**2)
    p_noise = np.mean(noise**2)
    return noise * np.sqrt(p_sig / (p_noise * 10.0 ** (snr_db / 10.0)))


def _dropout_gate(rng: SplitMix64, n: int) -> np.ndarray:
    """Multiplicative gate: Poisson arrivals, uniform 50-150 ms closures."""
    gate = np.ones(n)
    t = 0.0
    while True:
        t += rng.exponential(_DROPOUT_RATE)
        if t >= DURATION_S:
            break
        dur = rng.uniform(_DROPOUT_LO_S, _DROPOUT_HI_S)
        start = int(t * CANONICAL_SR)
        stop = min(n, int((t + dur) * CANONICAL_SR))
        gate[start:stop] = 0.0
    return gate


def _clicks(rng: SplitMix64, n: int) -> np.ndarray:
    """Exponentially decaying white bursts at Poisson arrivals."""
    out = np.zeros(n)
    decay = np.exp(-np.arange(_CLICK_LEN) / (_CLICK_TAU_S * CANONICAL_SR))
    t = 0.0
    while True:
        t += rng.exponential(_CLICK_RATE)
        if t >= DURATION_S:
            break
        start = int(t * CANONICAL_SR)
        burst = rng.gaussians(_CLICK_LEN) * decay * _CLICK_AMP
        stop = min(n, start + _CLICK_LEN)
        out[start:stop] += burst[: stop - start]
    return out


def synth_clip(label: Label, seed: int) -> AudioClip:
    """Deterministic clip for one class; 33280 samples, peak 0.8."""
    rng = SplitMix64(seed)
    n = CANONICAL_LEN
    if label is Label.AMBIENT:
        x = _room_noise(rng, n)
    else:
        sig = _harmonic_stack(rng, n)
        noise = _room_noise(rng, n)
        snr = _NORMAL_SNR_DB if label is Label.EXTRUDER_NORMAL else _FAULT_SNR_DB
        noise = _scaled_to_snr(noise, sig, snr)
        if label is Label.EXTRUDER_FAULT:
            sig = sig * _dropout_gate(rng, n)
            sig = sig + _clicks(rng, n)
        x = sig + noise
    x *= PEAK / np.max(np.abs(x))
    return AudioClip(x, sample_rate_hz=CANONICAL_SR)


def class_counts(count: int) -> tuple[int, int, int]:
    """As-equal-as-possible split; remainder goes to Ambient, then Normal."""
    base, rem = divmod(count, 3)
    return (base + (rem >= 1), base + (rem >= 2), base)


def clip_seed(dataset_seed: int, index: int) -> int:
    return combine_seed(dataset_seed, index)


def synth_dataset(count: int, seed: int, out_dir) -> Path:
    """Write count WAVs plus a JSONL manifest; returns the manifest path."""
    if count < 3:
        raise ValueError("need at least 3 clips (one per class)")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_ambient, n_normal, n_fault = class_counts(count)
    labels = (
        [Label.AMBIENT] * n_ambient
        + [Label.EXTRUDER_NORMAL] * n_normal
        + [Label.EXTRUDER_FAULT] * n_fault
    )
    manifest_path = out_dir / "manifest.jsonl"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for index, label in enumerate(labels):
            name = f"clip_{index:04d}_{label.tag}.wav"
            write_wav(synth_clip(label, clip_seed(seed, index)), out_dir / name)
            fh.write(json.dumps({"path": name, "label": label.tag}) + "\n")
    return manifest_path
