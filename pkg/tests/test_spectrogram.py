import numpy as np
import pytest

from acfd.audio_io import AudioClip, CANONICAL_LEN, CANONICAL_SR, Label
from acfd.errors import BadRange, ClipTooShort
from acfd.spectrogram import (
    COLORMAP_RGB,
    export_image,
    hann_periodic,
    hz_to_mel,
    istft,
    mel_center_freqs,
    mel_filterbank,
    mel_spectrogram,
    render,
    stft,
)
from acfd.synth import synth_clip


class TestStft:
    def test_zero_clip(self):
        spectra = stft(AudioClip(np.zeros(4096)))
        np.testing.assert_array_equal(spectra, 0.0)

    def test_impulse_at_zero_lands_on_window_zero(self):
        x = np.zeros(1024)
        x[0] = 1.0
        spectra = stft(AudioClip(x))
        np.testing.assert_allclose(np.abs(spectra[0]), 0.0, atol=1e-15)

    def test_canonical_clip_gives_64_frames(self):
        spectra = stft(AudioClip(np.zeros(CANONICAL_LEN)))
        assert spectra.shape == (64, 513)

    def test_too_short(self):
        with pytest.raises(ClipTooShort):
            stft(AudioClip(np.zeros(1023)))

    def test_cola_periodic_hann(self):
        w = hann_periodic(1024)
        acc = np.zeros(8192)
        for start in range(0, 8192 - 1024 + 1, 512):
            acc[start:start + 1024] += w
        interior = acc[1024:-1024]
        assert np.abs(interior - 1.0).max() < 1e-12

    def test_parseval_per_frame(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(1024)
        windowed = x * hann_periodic(1024)
        half = stft(AudioClip(x))[0]
        # full-spectrum extension: interior bins appear twice
        spec_energy = np.abs(half[0]) ** 2 + np.abs(half[-1]) ** 2
        spec_energy += 2.0 * np.sum(np.abs(half[1:-1]) ** 2)
        time_energy = 1024 * np.sum(windowed**2)
        np.testing.assert_allclose(spec_energy, time_energy, rtol=1e-9)


class TestIstft:
    def test_roundtrip_sine(self):
        t = np.arange(CANONICAL_LEN) / CANONICAL_SR
        clip = AudioClip(0.7 * np.sin(2 * np.pi * 600 * t))
        back = istft(stft(clip))
        interior = slice(1024, -1024)
        err = np.abs(back.samples[interior] - clip.samples[interior]).max()
        assert err <= 1e-6 * np.abs(clip.samples).max()

    def test_roundtrip_synth_clip(self):
        clip = synth_clip(Label.EXTRUDER_NORMAL, 3)
        back = istft(stft(clip))
        interior = slice(1024, -1024)
        err = np.abs(back.samples[interior] - clip.samples[interior]).max()
        assert err <= 1e-6 * np.abs(clip.samples).max()

    def test_zero_spectra(self):
        out = istft(np.zeros((8, 513), dtype=complex))
        np.testing.assert_array_equal(out.samples, 0.0)


class TestMelFilterbank:
    def test_mel_formula(self):
        assert hz_to_mel(0.0) == 0.0
        np.testing.assert_allclose(hz_to_mel(700.0), 2595.0 * np.log10(2.0))

    def test_rows_peak_normalized(self):
        fb = mel_filterbank()
        assert fb.shape == (64, 513)
        assert (fb >= 0).all()
        np.testing.assert_array_equal(fb.max(axis=1), 1.0)

    def test_bad_range(self):
        with pytest.raises(BadRange):
            mel_filterbank(f_min=3000, f_max=2000)
        with pytest.raises(BadRange):
            mel_filterbank(f_max=9000)


class TestMelSpectrogram:
    def test_zero_clip_all_zero(self):
        values = mel_spectrogram(AudioClip(np.zeros(CANONICAL_LEN)))
        np.testing.assert_array_equal(values, 0.0)

    def test_sine_peaks_in_nearest_mel_row(self):
        t = np.arange(CANONICAL_LEN) / CANONICAL_SR
        values = mel_spectrogram(AudioClip(np.sin(2 * np.pi * 600 * t)))
        row, _ = np.unravel_index(np.argmax(values), values.shape)
        assert row == np.argmin(np.abs(mel_center_freqs() - 600.0))
        assert values.max() == 1.0

    def test_shape_and_normalization(self):
        values = mel_spectrogram(synth_clip(Label.EXTRUDER_FAULT, 9))
        assert values.shape == (64, 64)
        assert values.min() == 0.0
        assert values.max() == 1.0

    def test_deterministic(self):
        clip = synth_clip(Label.AMBIENT, 4)
        a = mel_spectrogram(clip)
        b = mel_spectrogram(clip)
        np.testing.assert_array_equal(a, b)


class TestRender:
    def test_grayscale_is_identity(self):
        values = np.linspace(0, 1, 64 * 64).reshape(64, 64)
        image = render(values, colored=False)
        assert image.channels == 1
        np.testing.assert_array_equal(image.pixels[..., 0], values)

    def test_colormap_control_points(self):
        low = render(np.zeros((2, 2)), colored=True)
        high = render(np.ones((2, 2)), colored=True)
        np.testing.assert_allclose(low.pixels[0, 0], COLORMAP_RGB[0])
        np.testing.assert_allclose(high.pixels[0, 0], COLORMAP_RGB[-1])

    def test_red_channel_interpolation(self):
        image = render(np.full((1, 1), 0.125), colored=True)
        np.testing.assert_allclose(image.pixels[0, 0, 0], 0.248)

    def test_colored_is_pure_function_of_value(self):
        rng = np.random.default_rng(1)
        values = rng.uniform(0, 1, (8, 8))
        perm = rng.permutation(64)
        direct = render(values, colored=True).pixels.reshape(64, 3)
        permuted = render(values.reshape(-1)[perm].reshape(8, 8), colored=True)
        np.testing.assert_array_equal(permuted.pixels.reshape(64, 3), direct[perm])


class TestExportImage:
    def test_zero_grayscale_pgm(self, tmp_path):
        path = tmp_path / "z.pgm"
        export_image(render(np.zeros((64, 64))), path)
        data = path.read_bytes()
        assert data.startswith(b"P5\n64 64\n255\n")
        assert data[len(b"P5\n64 64\n255\n"):] == bytes(64 * 64)

    def test_ones_grayscale_pgm(self, tmp_path):
        path = tmp_path / "o.pgm"
        export_image(render(np.ones((64, 64))), path)
        assert path.read_bytes()[-64 * 64:] == bytes([255] * 64 * 64)

    def test_colored_ones_ppm_payload(self, tmp_path):
        path = tmp_path / "c.ppm"
        export_image(render(np.ones((64, 64)), colored=True), path)
        data = path.read_bytes()
        assert data.startswith(b"P6\n64 64\n255\n")
        payload = data[len(b"P6\n64 64\n255\n"):]
        assert payload == bytes([253, 231, 37]) * (64 * 64)

    def test_highest_band_on_top(self, tmp_path):
        values = np.zeros((64, 64))
        values[63] = 1.0  # highest mel band
        path = tmp_path / "t.pgm"
        export_image(render(values), path)
        payload = path.read_bytes()[len(b"P5\n64 64\n255\n"):]
        assert payload[:64] == bytes([255] * 64)
        assert payload[64:] == bytes(63 * 64)
