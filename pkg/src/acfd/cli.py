"""Command-line front-end.

Machine-readable output (JSON / JSONL / PGM / PPM) goes to files or
stdout only; diagnostics go to stderr.  Exit codes: 0 success, 1 usage
error, 2 data error, 3 check failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import cnn, trainer
from .audio_io import Label, load_manifest, read_wav, standardize
from .dsp import apply_filter, design_bandpass, estimate_noise_profile, spectral_subtract
from .errors import AcfdError
from .metrics import confusion, metrics_from_confusion
from .monitor import StreamMonitor, run_file
from .spectrogram import export_image, mel_spectrogram, render
from .synth import synth_dataset
from .trainer import CANONICAL_FREEZE, TrainConfig, stratified_split

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CHECK = 3

GRADCHECK_TOLERANCE = 1e-4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="acfd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--count", type=int, default=256)
    p.add_argument("--seed", type=int, default=42)

    p = sub.add_parser("spectrogram", help="render one clip to PGM/PPM")
    p.add_argument("--in", dest="input", required=True, metavar="WAV")
    p.add_argument("--out", required=True, metavar="IMG")
    p.add_argument("--color", action="store_true")
    p.add_argument("--noise-profile", metavar="WAV",
                   help="ambient clip for spectral subtraction")

    p = sub.add_parser("train", help="train the classifier on a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--color", action="store_true")
    p.add_argument("--seed", type=int, default=42,
                   help="init, shuffle, and split seed")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--out", required=True, metavar="MODEL")
    p.add_argument("--history", metavar="JSON")

    p = sub.add_parser("finetune", help="warm-start with frozen conv layers")
    p.add_argument("--base", required=True, metavar="MODEL")
    p.add_argument("--freeze-conv", action="store_true",
                   help="freeze the conv stack, retrain the dense head")
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--out", required=True, metavar="MODEL")
    p.add_argument("--history", metavar="JSON")

    p = sub.add_parser("eval", help="evaluate a model on the test split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--report", required=True, metavar="JSON")
    p.add_argument("--seed", type=int, default=42,
                   help="split seed; must match training")
    p.add_argument("--split", choices=["train", "test", "all"], default="test")

    p = sub.add_parser("classify", help="classify one clip")
    p.add_argument("--model", required=True)
    p.add_argument("wav")

    p = sub.add_parser("monitor", help="stream a WAV, emit verdict JSONL")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True, metavar="WAV")

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--seed", type=int, default=1)

    return parser


def _cmd_synth(args) -> int:
    manifest = synth_dataset(args.count, args.seed, args.out)
    print(f"wrote {args.count} clips, manifest {manifest}", file=sys.stderr)
    return EXIT_OK


def _cmd_spectrogram(args) -> int:
    clip = standardize(read_wav(args.input))
    clip = apply_filter(design_bandpass(), clip)
    if args.noise_profile:
        noise = apply_filter(design_bandpass(), standardize(read_wav(args.noise_profile)))
        clip = spectral_subtract(clip, estimate_noise_profile(noise))
    image = render(mel_spectrogram(clip), colored=args.color)
    export_image(image, args.out)
    return EXIT_OK


def _load_split(manifest, seed):
    examples = load_manifest(manifest)
    return stratified_split(examples, 0.8, seed=seed)


def _cmd_train(args) -> int:
    train_ex, test_ex = _load_split(args.manifest, args.seed)
    cfg = TrainConfig(epochs=args.epochs, seed=args.seed, colored=args.color)
    model, history = trainer.train(train_ex, test_ex, cfg)
    cnn.save_model(model, args.out)
    if args.history:
        trainer.save_history(history, args.history)
    print(
        f"trained on {len(train_ex)}/{len(test_ex)} examples, "
        f"best epoch {history['best_epoch']}",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_finetune(args) -> int:
    base = cnn.load_model(args.base)
    mask = CANONICAL_FREEZE if args.freeze_conv else (False,) * 5
    train_ex, test_ex = _load_split(args.manifest, args.seed)
    colored = base.arch.channels == 3
    cfg = TrainConfig(epochs=args.epochs, seed=args.seed, colored=colored)
    model, history = trainer.finetune(base, mask, train_ex, test_ex, cfg)
    cnn.save_model(model, args.out)
    if args.history:
        trainer.save_history(history, args.history)
    return EXIT_OK


def _cmd_eval(args) -> int:
    model = cnn.load_model(args.model)
    colored = model.arch.channels == 3
    if args.split == "all":
        examples = load_manifest(args.manifest)
    else:
        train_ex, test_ex = _load_split(args.manifest, args.seed)
        examples = train_ex if args.split == "train" else test_ex
    images, labels = trainer.load_features(examples, colored)
    _, accuracy, preds = trainer.evaluate(model, images, labels)
    report = metrics_from_confusion(confusion(labels, preds))
    Path(args.report).write_text(
        json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    print(f"accuracy {accuracy:.4f} on {len(examples)} examples", file=sys.stderr)
    return EXIT_OK


def _cmd_classify(args) -> int:
    model = cnn.load_model(args.model)
    colored = model.arch.channels == 3
    image = trainer.compute_features(read_wav(args.wav), colored)
    probs = cnn.predict(model, image)
    print(json.dumps({Label(i).tag: float(p) for i, p in enumerate(probs)}))
    return EXIT_OK


def _cmd_monitor(args) -> int:
    model = cnn.load_model(args.model)
    for verdict in run_file(StreamMonitor(model), args.input):
        print(verdict.to_json())
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    worst = cnn.grad_check(args.seed)
    print(f"max relative gradient error: {worst:.3e}")
    return EXIT_OK if worst < GRADCHECK_TOLERANCE else EXIT_CHECK


_COMMANDS = {
    "synth": _cmd_synth,
    "spectrogram": _cmd_spectrogram,
    "train": _cmd_train,
    "finetune": _cmd_finetune,
    "eval": _cmd_eval,
    "classify": _cmd_classify,
    "monitor": _cmd_monitor,
    "gradcheck": _cmd_gradcheck,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except AcfdError as exc:
        print(f"acfd: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"acfd: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
