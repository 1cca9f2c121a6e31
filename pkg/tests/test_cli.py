import json

import numpy as np
import pytest

from acfd import cnn
from acfd.audio_io import Label, load_manifest, read_wav
from acfd.cli import main
from acfd.synth import synth_clip


def run(argv):
    try:
        return main(argv)
    except SystemExit as exc:  # usage errors raise through argparse
        return exc.code


@pytest.fixture()
def zero_model_path(tmp_path):
    arch = cnn.Architecture(1)
    params = {
        name: np.zeros(shape, dtype=np.float32)
        for name, shape in arch.param_shapes().items()
    }
    path = tmp_path / "zero.acfm"
    cnn.save_model(cnn.Model(arch, params), path)
    return path


class TestExitCodes:
    def test_unknown_subcommand(self):
        assert run(["frobnicate"]) == 1

    def test_unknown_flag(self):
        assert run(["synth", "--out", "/tmp/x", "--bogus"]) == 1

    def test_missing_required_flag(self):
        assert run(["synth"]) == 1

    def test_missing_input_file(self, tmp_path, zero_model_path):
        assert run(["classify", "--model", str(zero_model_path),
                    str(tmp_path / "absent.wav")]) == 2

    def test_corrupt_model(self, tmp_path):
        bad = tmp_path / "bad.acfm"
        bad.write_bytes(b"XXXX" + bytes(64))
        wav = tmp_path / "a.wav"
        from acfd.audio_io import write_wav

        write_wav(synth_clip(Label.AMBIENT, 1), wav)
        assert run(["classify", "--model", str(bad), str(wav)]) == 2

    def test_gradcheck_passes(self, capsys):
        assert run(["gradcheck", "--seed", "1"]) == 0
        assert "gradient error" in capsys.readouterr().out


class TestSynth:
    def test_writes_manifest_and_clips(self, tmp_path):
        out = tmp_path / "ds"
        assert run(["synth", "--out", str(out), "--count", "6",
                    "--seed", "2"]) == 0
        examples = load_manifest(out / "manifest.jsonl")
        assert len(examples) == 6
        for e in examples:
            assert len(read_wav(e.clip_path)) == 33280


class TestSpectrogram:
    def test_grayscale_and_color(self, tmp_path):
        from acfd.audio_io import write_wav

        wav = tmp_path / "n.wav"
        write_wav(synth_clip(Label.EXTRUDER_NORMAL, 3), wav)
        pgm = tmp_path / "n.pgm"
        assert run(["spectrogram", "--in", str(wav), "--out", str(pgm)]) == 0
        assert pgm.read_bytes().startswith(b"P5\n64 64\n255\n")
        ppm = tmp_path / "n.ppm"
        assert run(["spectrogram", "--in", str(wav), "--out", str(ppm),
                    "--color"]) == 0
        assert ppm.read_bytes().startswith(b"P6\n64 64\n255\n")

    def test_noise_profile_option(self, tmp_path):
        from acfd.audio_io import write_wav

        wav = tmp_path / "n.wav"
        amb = tmp_path / "a.wav"
        write_wav(synth_clip(Label.EXTRUDER_NORMAL, 3), wav)
        write_wav(synth_clip(Label.AMBIENT, 3), amb)
        out = tmp_path / "d.pgm"
        assert run(["spectrogram", "--in", str(wav), "--out", str(out),
                    "--noise-profile", str(amb)]) == 0
        assert out.exists()


class TestClassify:
    def test_zero_model_uniform_probs(self, tmp_path, zero_model_path, capsys):
        from acfd.audio_io import write_wav

        wav = tmp_path / "c.wav"
        write_wav(synth_clip(Label.AMBIENT, 4), wav)
        assert run(["classify", "--model", str(zero_model_path), str(wav)]) == 0
        probs = json.loads(capsys.readouterr().out)
        assert set(probs) == {"ambient", "extruder_normal", "extruder_fault"}
        for p in probs.values():
            assert p == pytest.approx(1 / 3)


class TestMonitor:
    def test_jsonl_verdicts(self, tmp_path, zero_model_path, capsys):
        from acfd.audio_io import AudioClip, write_wav

        wav = tmp_path / "s.wav"
        write_wav(AudioClip(np.zeros(33280 + 8192)), wav)
        assert run(["monitor", "--model", str(zero_model_path),
                    "--in", str(wav)]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 2
        first = json.loads(lines[0])
        assert first["t_end"] == pytest.approx(2.08)
        assert first["state"] in {"normal", "alarm"}


@pytest.fixture(scope="module")
def trained(tmp_path_factory, small_dataset):
    out = tmp_path_factory.mktemp("cli_train")
    model = out / "m.acfm"
    history = out / "h.json"
    code = run(["train", "--manifest", str(small_dataset),
                "--seed", "7", "--epochs", "2",
                "--out", str(model), "--history", str(history)])
    return code, model, history, small_dataset


class TestTrainEvalFinetune:
    def test_train_writes_model_and_history(self, trained):
        code, model, history, _ = trained
        assert code == 0
        loaded = cnn.load_model(model)
        assert loaded.arch.channels == 1
        payload = json.loads(history.read_text())
        assert "epochs" in payload and "best_epoch" in payload

    def test_eval_writes_report(self, trained, tmp_path):
        code, model, _, manifest = trained
        report = tmp_path / "r.json"
        assert run(["eval", "--manifest", str(manifest), "--model", str(model),
                    "--report", str(report), "--seed", "7"]) == 0
        payload = json.loads(report.read_text())
        assert 0.0 <= payload["accuracy"] <= 1.0
        assert np.array(payload["confusion"]).shape == (3, 3)

    def test_finetune_freezes_conv(self, trained, tmp_path):
        code, model, _, manifest = trained
        out = tmp_path / "ft.acfm"
        assert run(["finetune", "--base", str(model), "--freeze-conv",
                    "--manifest", str(manifest), "--seed", "7",
                    "--epochs", "1", "--out", str(out)]) == 0
        base = cnn.load_model(model)
        tuned = cnn.load_model(out)
        for layer in ("conv1", "conv2", "conv3"):
            np.testing.assert_array_equal(
                tuned.params[f"{layer}_w"], base.params[f"{layer}_w"]
            )
        assert not np.array_equal(tuned.params["fc2_w"], base.params["fc2_w"])
