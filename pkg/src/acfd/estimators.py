"""scikit-learn style wrappers around the feature and training pipeline.

These make the pipeline compose with sklearn tooling (Pipeline,
cross_val_score, GridSearchCV) while the functional modules stay the
source of truth for the math.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import cnn, trainer
from .audio_io import AudioClip, CANONICAL_SR


def as_clips(X) -> list[AudioClip]:
    """Validate input as a list of AudioClips or 1-D sample arrays."""
    clips = []
    for i, item in enumerate(X):
        if isinstance(item, AudioClip):
            clips.append(item)
            continue
        arr = np.asarray(item, dtype=np.float64)
        if arr.ndim != 1 or len(arr) == 0:
            raise ValueError(f"X[{i}]: expected a non-empty 1-D sample array")
        clips.append(AudioClip(arr, sample_rate_hz=CANONICAL_SR))
    if not clips:
        raise ValueError("X is empty")
    return clips


class SpectrogramFeaturizer(TransformerMixin, BaseEstimator):
    """Stateless transformer: audio clips -> (n, 64, 64, C) feature images."""

    def __init__(self, colored: bool = False):
        self.colored = colored

    def fit(self, X, y=None):
        as_clips(X)
        return self

    def transform(self, X) -> np.ndarray:
        clips = as_clips(X)
        return np.stack(
            [trainer.compute_features(clip, self.colored) for clip in clips]
        )


class FaultClassifier(ClassifierMixin, BaseEstimator):
    """CNN fault classifier with the standard fit/predict/predict_proba API.

    A stratified validation slice is held out from the training data for
    early stopping; everything is deterministic given `seed`.
    """

    def __init__(
        self,
        colored: bool = False,
        epochs: int = 30,
        batch_size: int = 16,
        lr: float = 1e-3,
        seed: int = 0,
        early_stop_patience: int = 5,
        validation_fraction: float = 0.2,
    ):
        self.colored = colored
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.seed = seed
        self.early_stop_patience = early_stop_patience
        self.validation_fraction = validation_fraction

    def _config(self) -> trainer.TrainConfig:
        return trainer.TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            seed=self.seed,
            colored=self.colored,
            early_stop_patience=self.early_stop_patience,
        )

    def fit(self, X, y):
        clips = as_clips(X)
        y = np.asarray(y, dtype=int)
        if len(y) != len(clips):
            raise ValueError("X and y length mismatch")
        images = [trainer.compute_features(c, self.colored) for c in clips]

        # per-class seeded holdout for early stopping
        from .prng import SplitMix64, combine_seed

        train_idx, val_idx = [], []
        for label in np.unique(y):
            members = list(np.flatnonzero(y == label))
            SplitMix64(combine_seed(self.seed, int(label))).shuffle(members)
            n_val = max(1, int(round(self.validation_fraction * len(members))))
            val_idx += members[:n_val]
            train_idx += members[n_val:]
        if not train_idx:
            raise ValueError("not enough examples to hold out a validation slice")

        self.model_, self.history_ = trainer.fit_model(
            [images[i] for i in train_idx],
            y[train_idx],
            [images[i] for i in val_idx],
            y[val_idx],
            self._config(),
        )
        self.classes_ = np.unique(y)
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before predict")

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        clips = as_clips(X)
        return np.stack(
            [
                cnn.predict(
                    self.model_, trainer.compute_features(c, self.colored)
                )
                for c in clips
            ]
        )

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)
