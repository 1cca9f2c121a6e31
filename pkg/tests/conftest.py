import numpy as np
import pytest

from acfd.audio_io import Label, load_manifest
from acfd.synth import synth_clip, synth_dataset
from acfd.trainer import TrainConfig, compute_features


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """30-clip synthetic dataset for fast end-to-end tests."""
    out = tmp_path_factory.mktemp("ds30")
    manifest = synth_dataset(30, 5, out)
    return manifest


@pytest.fixture(scope="session")
def small_examples(small_dataset):
    return load_manifest(small_dataset)


@pytest.fixture(scope="session")
def small_features():
    """Featurized synthetic clips, 8 per class, grayscale."""
    images, labels = [], []
    for label in Label:
        for i in range(8):
            clip = synth_clip(label, 1000 + 100 * int(label) + i)
            images.append(compute_features(clip, colored=False))
            labels.append(int(label))
    return images, np.array(labels)


@pytest.fixture(scope="session")
def quick_config():
    return TrainConfig(epochs=3, batch_size=8, seed=11, early_stop_patience=5)
