"""Contactless acoustic fault detection for FDM 3D printers.

Pipeline: WAV ingestion -> 100-1200 Hz bandpass -> optional spectral
subtraction -> 64x64 log-mel spectrogram image -> small CNN -> per-window
fault probabilities with smoothing and alarm hysteresis.  A deterministic
synthetic generator provides the three acoustic classes for training and
verification without printer hardware.
"""

from .audio_io import (
    AudioClip,
    CANONICAL_LEN,
    CANONICAL_SR,
    Label,
    LabeledExample,
    Split,
    load_manifest,
    read_wav,
    standardize,
    write_wav,
)
from .cnn import Architecture, Model, grad_check, load_model, predict, save_model
from .dsp import (
    FilterCascade,
    NoiseProfile,
    apply_filter,
    design_bandpass,
    estimate_noise_profile,
    spectral_subtract,
)
from .estimators import FaultClassifier, SpectrogramFeaturizer
from .metrics import MetricsReport, confusion, metrics_from_confusion
from .monitor import MonitorConfig, StreamMonitor, StreamVerdict, run_file
from .spectrogram import (
    SpectrogramImage,
    StftConfig,
    export_image,
    istft,
    mel_filterbank,
    mel_spectrogram,
    render,
    stft,
)
from .synth import synth_clip, synth_dataset
from .trainer import TrainConfig, finetune, stratified_split, train

__version__ = "0.1.0"
