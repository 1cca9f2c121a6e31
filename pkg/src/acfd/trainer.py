"""Dataset splitting, feature precomputation, training, and fine-tuning.

Features (bandpass -> log-mel image -> grayscale/colored pixels) are
computed once per clip and cached in memory; the optimizer loop is
sequential and fully deterministic given the config seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cnn
from .audio_io import AudioClip, LabeledExample, Split, read_wav, standardize
from .dsp import apply_filter, design_bandpass
from .errors import ClassTooSmall, EmptySet, MaskLengthMismatch, MixedChannels
from .prng import SplitMix64, combine_seed
from .spectrogram import mel_spectrogram, render

N_CLASSES = 3

# Canonical fine-tuning mask: conv stack frozen, dense head retrained.
CANONICAL_FREEZE = (True, True, True, False, False)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 16
    lr: float = 1e-3
    seed: int = 0
    colored: bool = False
    early_stop_patience: int = 5

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def stratified_split(
    examples: list[LabeledExample],
    train_fraction: float = 0.8,
    seed: int = 0,
) -> tuple[list[LabeledExample], list[LabeledExample]]:
    """Per-class seeded shuffle and split; explicit split fields are honored."""
    by_class: dict[int, list[LabeledExample]] = {}
    for ex in examples:
        by_class.setdefault(int(ex.label), []).append(ex)
    for label, members in by_class.items():
        if len(members) < 2:
            raise ClassTooSmall(f"class {label} has only {len(members)} examples")
    train, test = [], []
    for label in sorted(by_class):
        members = by_class[label]
        pinned_train = [e for e in members if e.split is Split.TRAIN]
        pinned_test = [e for e in members if e.split is Split.TEST]
        free = [e for e in members if e.split is None]
        rng = SplitMix64(combine_seed(seed, label))
        rng.shuffle(free)
        n_train = _round_half_up(train_fraction * len(free))
        train += pinned_train + free[:n_train]
        test += pinned_test + free[n_train:]
    return train, test


def compute_features(clip: AudioClip, colored: bool) -> np.ndarray:
    """Bandpass -> log-mel -> rendered pixels, float32 (64, 64, C)."""
    cascade = design_bandpass()
    filtered = apply_filter(cascade, standardize(clip))
    values = mel_spectrogram(filtered)
    return render(values, colored=colored).pixels.astype(np.float32)


def load_features(
    examples: list[LabeledExample], colored: bool
) -> tuple[list[np.ndarray], np.ndarray]:
    """Read, standardize, and featurize every example."""
    images = [compute_features(read_wav(ex.clip_path), colored) for ex in examples]
    labels = np.array([int(ex.label) for ex in examples], dtype=int)
    return images, labels


def evaluate(model: cnn.Model, images, labels) -> tuple[float, float, np.ndarray]:
    """Mean cross-entropy, accuracy, and predicted labels."""
    losses = []
    preds = np.empty(len(images), dtype=int)
    for i, (image, label) in enumerate(zip(images, labels)):
        logits, _ = cnn.forward(model, image)
        loss, _ = cnn.loss_and_grad(logits, int(label))
        losses.append(loss)
        preds[i] = int(np.argmax(logits))
    accuracy = float(np.mean(preds == labels))
    return float(np.mean(losses)), accuracy, preds


def _freeze_names(mask) -> set[str]:
    if len(mask) != len(cnn.LAYER_NAMES):
        raise MaskLengthMismatch(
            f"mask length {len(mask)} != {len(cnn.LAYER_NAMES)} layers"
        )
    frozen = set()
    for layer, is_frozen in zip(cnn.LAYER_NAMES, mask):
        if is_frozen:
            frozen.add(f"{layer}_w")
            frozen.add(f"{layer}_b")
    return frozen


def fit_model(
    train_images,
    train_labels,
    val_images,
    val_labels,
    cfg: TrainConfig,
    base: cnn.Model | None = None,
    freeze_mask=None,
) -> tuple[cnn.Model, dict]:
    """Minibatch Adam with early stopping on validation loss.

    Gradients are accumulated in ascending position within each batch;
    the best-validation-loss parameters are restored at the end.
    """
    if len(train_images) == 0 or len(val_images) == 0:
        raise EmptySet("training and validation sets must be nonempty")
    shapes = {img.shape for img in list(train_images) + list(val_images)}
    if len(shapes) != 1:
        raise MixedChannels(f"inconsistent feature shapes: {sorted(shapes)}")
    channels = next(iter(shapes))[2]

    if base is not None:
        model = base.copy()
    else:
        model = cnn.init_model(cnn.Architecture(channels), cfg.seed)
    frozen = _freeze_names(freeze_mask) if freeze_mask is not None else set()

    state = cnn.adam_init(model)
    history = []
    best_loss = np.inf
    best_params = {k: v.copy() for k, v in model.params.items()}
    best_epoch = 0
    stale = 0

    n = len(train_images)
    for epoch in range(cfg.epochs):
        order = list(range(n))
        SplitMix64(combine_seed(cfg.seed, epoch)).shuffle(order)
        epoch_losses = []
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            grads = None
            for j in batch:
                logits, cache = cnn.forward(model, train_images[j])
                loss, dlogits = cnn.loss_and_grad(logits, int(train_labels[j]))
                g = cnn.backward(model, cache, dlogits)
                epoch_losses.append(loss)
                if grads is None:
                    grads = g
                else:
                    for name in grads:
                        grads[name] += g[name]
            scale = np.float32(1.0 / len(batch))
            for name in grads:
                grads[name] *= scale
            for name in frozen:
                grads[name][...] = 0.0
            cnn.adam_step(model, grads, state, lr=cfg.lr)
        val_loss, val_acc, _ = evaluate(model, val_images, val_labels)
        history.append(
            {
                "train_loss": float(np.mean(epoch_losses)),
                "val_loss": val_loss,
                "val_acc": val_acc,
            }
        )
        if val_loss < best_loss:
            best_loss = val_loss
            best_params = {k: v.copy() for k, v in model.params.items()}
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= cfg.early_stop_patience:
                break
    model.params = best_params
    return model, {"epochs": history, "best_epoch": best_epoch}


def train(
    train_examples: list[LabeledExample],
    test_examples: list[LabeledExample],
    cfg: TrainConfig,
) -> tuple[cnn.Model, dict]:
    """Featurize and train the canonical network from scratch."""
    train_images, train_labels = load_features(train_examples, cfg.colored)
    val_images, val_labels = load_features(test_examples, cfg.colored)
    return fit_model(train_images, train_labels, val_images, val_labels, cfg)


def finetune(
    base: cnn.Model,
    mask,
    train_examples: list[LabeledExample],
    test_examples: list[LabeledExample],
    cfg: TrainConfig,
) -> tuple[cnn.Model, dict]:
    """Warm-start training with frozen layers (gradients zeroed)."""
    train_images, train_labels = load_features(train_examples, cfg.colored)
    val_images, val_labels = load_features(test_examples, cfg.colored)
    return fit_model(
        train_images, train_labels, val_images, val_labels, cfg,
        base=base, freeze_mask=mask,
    )


def save_history(history: dict, path) -> None:
    Path(path).write_text(json.dumps(history, indent=2) + "\n", encoding="utf-8")
