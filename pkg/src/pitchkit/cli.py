"""Command-line front door for every pipeline stage.

Precedence for options: explicit flag > --config JSON file > built-in
default, with PITCHKIT_SEED as the seed fallback between config and default.
Logs go to stderr; data goes to --out paths (reports also get a PNG sibling)
or, for --json modes, to stdout.

Exit codes: 0 success, 2 input error (unreadable/ill-formed data), 3
configuration or shape error (bad flags, arch mismatch), 4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import report
from .audio import AudioClip, AudioFormatError, read_wav, write_wav
from .baseline import LpeConfig, LpeTracker, lag_error_cents
from .evaluate import (
    ReferenceCorpus,
    ingest_ptdb_layout,
    pitch_histogram,
    snr_sweep,
    write_histogram_csv,
    write_report_csv,
)
from .features import (
    FeatureExtractor,
    FeatureFileError,
    TooShortError,
    extract_features,
    write_features,
)
from .nn.arch import ARCH_KINDS, arch_spec, flops_breakdown
from .nn.model import ModelRunner, NumericError, class_to_hz, pitch_decode
from .nn.weights import WeightFormatError, load_weights, save_weights
from .track import PitchTrack, write_track_binary, write_track_csv
from .train import (
    AugmentConfig,
    TrainConfig,
    load_corpus,
    save_corpus,
    synth_corpus,
    synth_noise_library,
    train,
    voiced_fraction,
)
from .train.backprop import forward_batch

log = logging.getLogger("pitchkit")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONFIG = 3
EXIT_NUMERIC = 4

# feature family each architecture consumes
ARCH_FEATURE_KIND = {"if": "if", "xcorr": "xcorr", "joint": "both"}

DNN_VOICING_THRESHOLD = 0.5


class ConfigError(ValueError):
    """Bad flags, bad config file, or incompatible shapes."""


class _Parser(argparse.ArgumentParser):
    # argparse would sys.exit(2); route through the exit-code taxonomy instead
    def error(self, message):
        raise ConfigError(message)


def _load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def _effective(args, defaults: dict) -> dict:
    """flag > config-file > default, echoed to the log."""
    cfg = _load_config_file(args.config) if getattr(args, "config", None) else {}
    for key in cfg:
        if key not in defaults:
            log.warning("config key %r not used by this command", key)
    out = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            out[key] = flag
        elif key in cfg:
            out[key] = cfg[key]
        else:
            out[key] = default
    if "seed" in out:
        out["seed"] = _resolve_seed(out["seed"])
    log.info("effective config: %s", json.dumps(out, sort_keys=True, default=str))
    return out


def _resolve_seed(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("PITCHKIT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"PITCHKIT_SEED must be an integer, got {env!r}")
    return 0


def _sample_chunks(samples, size: int = 16000):
    for i in range(0, len(samples), size):
        yield samples[i : i + size]


def _read_noise_dir(noise_dir) -> list[AudioClip]:
    paths = sorted(Path(noise_dir).glob("*.wav"))
    if not paths:
        raise ConfigError(f"no .wav files in noise directory {noise_dir}")
    return [read_wav(p) for p in paths]


def _parse_snr_list(text: str) -> list:
    out = []
    for token in text.split(","):
        token = token.strip()
        if token.lower() == "clean":
            out.append(None)
        else:
            try:
                out.append(float(token))
            except ValueError:
                raise ConfigError(f"bad SNR token {token!r} (use 'clean' or a number)")
    if not out:
        raise ConfigError("empty SNR list")
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_synth_data(args) -> int:
    opts = _effective(args, {"minutes": 1.0, "seed": None, "noise_count": 8,
                             "noise_seconds": 5.0})
    clips = synth_corpus(opts["seed"], float(opts["minutes"]))
    out_dir = Path(args.out)
    save_corpus(out_dir, clips, seed=opts["seed"])
    noise = synth_noise_library(opts["seed"] + 1, count=int(opts["noise_count"]),
                                seconds=float(opts["noise_seconds"]))
    noise_dir = out_dir / "noise"
    noise_dir.mkdir(parents=True, exist_ok=True)
    for i, clip in enumerate(noise):
        write_wav(noise_dir / f"noise_{i:02d}.wav", clip)
    log.info("wrote %d clips (%.1f%% voiced) and %d noise files to %s",
             len(clips), 100.0 * voiced_fraction(clips), len(noise), out_dir)
    return EXIT_OK


def cmd_features(args) -> int:
    opts = _effective(args, {"kind": "both"})
    clip = read_wav(args.input)
    xc, sf = extract_features(clip, opts["kind"])
    if opts["kind"] == "xcorr":
        data = xc
    elif opts["kind"] == "if":
        data = sf
    else:
        data = np.concatenate([xc, sf], axis=1)
    write_features(args.out, opts["kind"], data)
    log.info("wrote %d frames of %r features (%d dims) to %s",
             data.shape[0], opts["kind"], data.shape[1], args.out)
    return EXIT_OK


def cmd_estimate(args) -> int:
    opts = _effective(args, {"voicing_threshold": DNN_VOICING_THRESHOLD})
    if bool(args.weights) == bool(args.baseline):
        raise ConfigError("pass exactly one of --weights or --baseline")
    clip = read_wav(args.input)

    f0, conf, voiced = [], [], []
    if args.baseline:
        ex = FeatureExtractor(kind="xcorr")
        tracker = LpeTracker(LpeConfig())
        for chunk in _sample_chunks(clip.samples):
            for frame in ex.push(chunk):
                hz, v, strength = tracker.step(frame.xcorr)
                f0.append(hz)
                voiced.append(v)
                conf.append(min(max(strength, 0.0), 1.0))
    else:
        weights = load_weights(args.weights)
        ex = FeatureExtractor(kind=ARCH_FEATURE_KIND[weights.spec.kind])
        runner = ModelRunner(weights)
        threshold = float(opts["voicing_threshold"])
        for chunk in _sample_chunks(clip.samples):
            for frame in ex.push(chunk):
                dist = runner.step(xcorr=frame.xcorr, spectral=frame.spectral)
                hz, p = pitch_decode(dist)
                f0.append(hz)
                conf.append(p)
                voiced.append(int(p >= threshold))
    if not f0:
        raise TooShortError(f"{args.input}: no complete analysis frame")

    track = PitchTrack(np.array(f0), np.array(voiced), np.array(conf))
    if args.binary:
        write_track_binary(args.out, track)
    else:
        write_track_csv(args.out, track)
    v = track.voiced.astype(bool)
    log.info("wrote %d frames to %s (%.1f%% voiced, median voiced f0 %.1f Hz)",
             len(track), args.out, 100.0 * v.mean(),
             float(np.median(track.f0_hz[v])) if v.any() else float("nan"))
    return EXIT_OK


def cmd_train(args) -> int:
    opts = _effective(args, {
        "arch": "if", "epochs": 10, "seed": None, "batch_size": 256,
        "seq_len": 100, "learning_rate": 1e-3, "heldout_fraction": 0.2,
        "augment": True,
    })
    if opts["arch"] not in ARCH_KINDS:
        raise ConfigError(f"unknown arch {opts['arch']!r}")
    try:
        config = TrainConfig(batch_size=int(opts["batch_size"]),
                             seq_len=int(opts["seq_len"]),
                             learning_rate=float(opts["learning_rate"]),
                             epochs=int(opts["epochs"]), seed=opts["seed"])
    except ValueError as e:
        raise ConfigError(str(e))

    clips = load_corpus(args.corpus)
    frac = float(opts["heldout_fraction"])
    if not 0.0 <= frac < 1.0:
        raise ConfigError("heldout_fraction must lie in [0, 1)")
    n_held = round(frac * len(clips))
    heldout = clips[len(clips) - n_held :] if n_held else None
    train_clips = clips[: len(clips) - n_held]
    if not train_clips:
        raise ConfigError("heldout split leaves no training clips")

    noise = _read_noise_dir(args.noise_dir) if args.noise_dir else None
    augment_cfg = AugmentConfig() if opts["augment"] else None

    out = Path(args.out)
    log_path = Path(args.log) if args.log else out.with_suffix(".log.csv")
    weights, rows = train(opts["arch"], clips=train_clips, config=config,
                          augment_cfg=augment_cfg, noise_clips=noise,
                          heldout=heldout, log_path=log_path,
                          checkpoint_dir=args.checkpoint_dir)
    save_weights(out, weights)
    if rows:
        report.save_training_figure(rows, log_path.with_suffix(".png"))
    final_rca = next((r["heldout_rca"] for r in reversed(rows)
                      if r.get("heldout_rca", "") != ""), None)
    log.info("trained %s for %d epochs; weights -> %s, log -> %s%s",
             opts["arch"], config.epochs, out, log_path,
             f", final held-out RCA {final_rca:.4f}" if final_rca is not None else "")
    return EXIT_OK


def _load_reference_corpus(args) -> ReferenceCorpus:
    if bool(args.corpus) == bool(args.ptdb):
        raise ConfigError("pass exactly one of --corpus or --ptdb")
    if args.corpus:
        clips = load_corpus(args.corpus)
        return ReferenceCorpus(
            ids=[f"clip_{i:04d}" for i in range(len(clips))],
            clips=[c.audio for c in clips],
            refs=[PitchTrack(c.f0_hz, c.voiced) for c in clips],
            source="synthetic",
        )
    corpus = ingest_ptdb_layout(args.ptdb)
    for line in corpus.diagnostics:
        log.warning("ingest: %s", line)
    return corpus


def _make_dnn_estimator(weights):
    kind = ARCH_FEATURE_KIND[weights.spec.kind]

    def estimate(clip: AudioClip) -> PitchTrack:
        xc, sf = extract_features(clip, kind)
        probs, _ = forward_batch(weights,
                                 xcorr=None if xc is None else xc[None],
                                 spectral=None if sf is None else sf[None])
        cls = probs[0].argmax(axis=-1)
        conf = probs[0].max(axis=-1)
        return PitchTrack(class_to_hz(cls), conf >= DNN_VOICING_THRESHOLD, conf)

    return estimate


def _baseline_estimator(clip: AudioClip) -> PitchTrack:
    xc, _ = extract_features(clip, kind="xcorr")
    return LpeTracker(LpeConfig()).run(xc)


def cmd_eval(args) -> int:
    opts = _effective(args, {"snr": "clean,20,10,5,0", "seed": None})
    models = []
    for token in args.model or []:
        name, sep, path = token.partition("=")
        if not sep or not name or not path:
            raise ConfigError(f"--model wants NAME=WEIGHTS.pkw, got {token!r}")
        models.append((name, _make_dnn_estimator(load_weights(path))))
    if args.baseline:
        models.append(("lpe", _baseline_estimator))
    if not models:
        raise ConfigError("nothing to evaluate: pass --model and/or --baseline")

    corpus = _load_reference_corpus(args)
    if len(corpus) == 0:
        raise ValueError("reference corpus is empty")
    snr_list = _parse_snr_list(opts["snr"])
    noise = _read_noise_dir(args.noise_dir) if args.noise_dir else []

    result = snr_sweep(models, corpus, noise, snr_list, seed=opts["seed"],
                       corpus_id=str(args.corpus or args.ptdb))
    for line in result.failures:
        log.warning("eval: %s", line)
    if not result.rows:
        log.error("every evaluation condition failed")
        return EXIT_INPUT

    out = Path(args.out)
    write_report_csv(out, result)
    report.save_rca_figure(result.rows, out.with_suffix(".png"))
    log.info("wrote %d report rows to %s (+ %s)", len(result.rows), out,
             out.with_suffix(".png").name)
    if args.json:
        print(json.dumps(result.rows, indent=2))
    return EXIT_OK


def cmd_histogram(args) -> int:
    opts = _effective(args, {"bin_hz": 10.0})
    corpus = _load_reference_corpus(args)
    rows = pitch_histogram(corpus, bin_hz=float(opts["bin_hz"]))
    out = Path(args.out)
    write_histogram_csv(out, rows)
    report.save_histogram_figure(rows, out.with_suffix(".png"),
                                 bin_hz=float(opts["bin_hz"]))
    log.info("wrote %d histogram rows to %s (+ %s)", len(rows), out,
             out.with_suffix(".png").name)
    if args.json:
        print(json.dumps(rows, indent=2))
    return EXIT_OK


def cmd_flops(args) -> int:
    opts = _effective(args, {"arch": "joint", "window": 320})
    if opts["arch"] not in ARCH_KINDS:
        raise ConfigError(f"unknown arch {opts['arch']!r}")
    breakdown = flops_breakdown(arch_spec(opts["arch"]), window=int(opts["window"]))
    if args.json:
        print(json.dumps(breakdown, indent=2))
        return EXIT_OK
    print(f"complexity for arch {opts['arch']!r} in GFLOPS per second of audio")
    labels = {
        "features_spectral": "features: spectral (FFT)",
        "features_xcorr_window320": "features: correlation, 320-sample window",
        "features_xcorr_window160": "features: correlation, 160-sample window (alternate)",
        "features": "features total (320-sample accounting)",
        "dnn": "dnn",
        "total": "total",
    }
    for key, value in breakdown.items():
        print(f"  {labels[key]:<55} {value:.5f}")
    if "features_xcorr_window320" in breakdown:
        print("  note: both correlation-window figures are shown because the "
              "published budget matches the 160-sample accounting while the "
              "definition here uses the full 320-sample window")
    return EXIT_OK


def cmd_lag_curve(args) -> int:
    opts = _effective(args, {"f0_min": 62.5, "f0_max": 500.0, "points": 200})
    f0 = np.geomspace(float(opts["f0_min"]), float(opts["f0_max"]),
                      int(opts["points"]))
    cents = lag_error_cents(f0)
    out = Path(args.out)
    with open(out, "w", newline="") as f:
        f.write("f0_hz,worst_case_cents\n")
        for a, b in zip(f0, cents):
            f.write(f"{a:.4f},{b:.4f}\n")
    report.save_lag_error_figure(f0, cents, out.with_suffix(".png"))
    log.info("wrote lag-quantization curve to %s (+ %s)", out,
             out.with_suffix(".png").name)
    return EXIT_OK


# ---------------------------------------------------------------------------
# wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pitchkit",
                     description="pitch estimation toolkit: features, training, "
                                 "estimation, evaluation")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("--seed", type=int, default=None,
                       help="RNG seed (also PITCHKIT_SEED env; default 0)")
        p.add_argument("--config", default=None,
                       help="JSON file of option overrides (flags win)")

    p = sub.add_parser("synth-data", help="generate a labelled synthetic corpus")
    p.add_argument("--minutes", type=float, default=None)
    p.add_argument("--noise-count", type=int, default=None, dest="noise_count")
    p.add_argument("--noise-seconds", type=float, default=None, dest="noise_seconds")
    p.add_argument("--out", required=True, help="corpus output directory")
    common(p)
    p.set_defaults(func=cmd_synth_data)

    p = sub.add_parser("features", help="extract features from a WAV")
    p.add_argument("input", help="mono 16 kHz 16-bit WAV")
    p.add_argument("--kind", choices=["if", "xcorr", "both"], default=None)
    p.add_argument("--out", required=True, help="feature file to write")
    common(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("estimate", help="run an estimator over a WAV")
    p.add_argument("input")
    p.add_argument("--weights", default=None, help="trained weight file")
    p.add_argument("--baseline", action="store_true",
                   help="use the DSP tracker instead of weights")
    p.add_argument("--voicing-threshold", type=float, default=None,
                   dest="voicing_threshold")
    p.add_argument("--binary", action="store_true",
                   help="write the 9-byte-per-frame binary track format")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("train", help="train an architecture on a corpus")
    p.add_argument("--arch", choices=list(ARCH_KINDS), default=None)
    p.add_argument("--corpus", required=True, help="corpus directory (manifest.json)")
    p.add_argument("--noise-dir", default=None, dest="noise_dir")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None, dest="batch_size")
    p.add_argument("--seq-len", type=int, default=None, dest="seq_len")
    p.add_argument("--learning-rate", type=float, default=None, dest="learning_rate")
    p.add_argument("--heldout-fraction", type=float, default=None,
                   dest="heldout_fraction")
    p.add_argument("--no-augment", action="store_false", dest="augment",
                   default=None, help="train on clean clips only")
    p.add_argument("--log", default=None, help="training log CSV (default: beside --out)")
    p.add_argument("--checkpoint-dir", default=None, dest="checkpoint_dir")
    p.add_argument("--out", required=True, help="weight file to write")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="RCA over SNR conditions for one or more models")
    p.add_argument("--corpus", default=None, help="synthetic corpus directory")
    p.add_argument("--ptdb", default=None, help="reference-layout directory")
    p.add_argument("--model", action="append", default=None,
                   help="NAME=WEIGHTS.pkw (repeatable)")
    p.add_argument("--baseline", action="store_true", help="include the DSP tracker")
    p.add_argument("--noise-dir", default=None, dest="noise_dir")
    p.add_argument("--snr", default=None, help="comma list, e.g. clean,20,10,5,0")
    p.add_argument("--json", action="store_true", help="also print rows to stdout")
    p.add_argument("--out", required=True, help="report CSV (PNG written beside it)")
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("histogram", help="voiced reference pitch histogram by group")
    p.add_argument("--corpus", default=None)
    p.add_argument("--ptdb", default=None)
    p.add_argument("--bin-hz", type=float, default=None, dest="bin_hz")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("flops", help="analytic complexity budget for one arch")
    p.add_argument("--arch", choices=list(ARCH_KINDS), default=None)
    p.add_argument("--window", type=int, default=None,
                   help="correlation/FFT window for the feature accounting")
    p.add_argument("--json", action="store_true")
    common(p)
    p.set_defaults(func=cmd_flops)

    p = sub.add_parser("lag-curve", help="integer-lag quantization error curve")
    p.add_argument("--f0-min", type=float, default=None, dest="f0_min")
    p.add_argument("--f0-max", type=float, default=None, dest="f0_max")
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_lag_curve)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="pitchkit: %(levelname)s: %(message)s")
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            parser.print_help(sys.stderr)
            return EXIT_CONFIG
        return args.func(args)
    except ConfigError as e:
        log.error("%s", e)
        return EXIT_CONFIG
    except WeightFormatError as e:
        log.error("%s", e)
        return EXIT_CONFIG
    except NumericError as e:
        log.error("%s", e)
        return EXIT_NUMERIC
    except (AudioFormatError, FeatureFileError, TooShortError) as e:
        log.error("%s", e)
        return EXIT_INPUT
    except (FileNotFoundError, IsADirectoryError, NotADirectoryError,
            PermissionError) as e:
        log.error("%s", e)
        return EXIT_INPUT
    except (ValueError, KeyError) as e:
        log.error("%s", e)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
