"""Command-line interface.

Exit codes: 0 success/original, 1 I/O error, 2 usage error, 3 forged (or
recognition blocked by the gate), 4 indeterminate, 5 training did not reach
the error goal.
"""
from __future__ import annotations

import argparse
import glob
import os
import sys
from dataclasses import replace

import numpy as np

from . import authenticator as auth
from .bench import hidden_csv, hidden_sweep, subject_csv, subject_sweep
from .config import ConfigError, Settings
from .corpus import calibration_pairs, face_corpus, noise_image, write_face_corpus
from .neural import TrainingError
from .plots import atomic_write, emit_curve, emit_spectrum
from .raster import ImageIOError, load_image, save_image
from .recognizer import (ModelFormatError, evaluate, load_model, read_manifest, recognize,
                         save_model, train_pipeline)
from .resample import AffineParams, KernelSpec, bounding_size, centered, warp

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_FORGED, EXIT_INDETERMINATE, EXIT_TRAINING = range(6)


class UsageError(Exception):
    pass


def _verdict_line(v: auth.Verdict) -> str:
    return f"{v.label.upper()} score={v.score:.6g} threshold={v.threshold:.6g}"


def _verdict_exit(v: auth.Verdict) -> int:
    return {auth.ORIGINAL: EXIT_OK, auth.FORGED: EXIT_FORGED,
            auth.INDETERMINATE: EXIT_INDETERMINATE}[v.label]


def _detector(args, settings):
    cfg = settings.detector()
    if getattr(args, "threshold", None) is not None:
        cfg = replace(cfg, threshold=args.threshold)
    return cfg


def cmd_authenticate(args, settings):
    image = load_image(args.image)
    verdict = auth.authenticate(image, _detector(args, settings))
    print(_verdict_line(verdict))
    if args.spectrum:
        if verdict.report is None:
            print("no spectrum for an indeterminate image", file=sys.stderr)
        else:
            for path in emit_spectrum(verdict, args.spectrum):
                print(f"wrote {path}")
    return _verdict_exit(verdict)


def cmd_spectrum(args, settings):
    image = load_image(args.image)
    cfg = _detector(args, settings)
    if float(np.var(image.pixels)) < cfg.flat_floor:
        raise UsageError("image is flat; there is no spectrum to emit")
    report = auth.analyze(image, cfg)
    label = auth.FORGED if report.score > cfg.threshold else auth.ORIGINAL
    verdict = auth.Verdict(label, report.score, cfg.threshold, report)
    print(_verdict_line(verdict))
    for path in emit_spectrum(verdict, args.out):
        print(f"wrote {path}")
    return EXIT_OK


def _parse_size(text):
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"expected WxH, got {text!r}") from None
    if w < 1 or h < 1:
        raise UsageError(f"invalid size {text!r}")
    return w, h


def transform_for(args, in_size):
    """Map --scale/--rotate/--skew onto affine parameters and an output size."""
    chosen = [n for n in ("scale", "rotate", "skew") if getattr(args, n) is not None]
    if len(chosen) != 1:
        raise UsageError("give exactly one of --scale, --rotate, --skew")
    if args.scale is not None:
        if not args.scale > 0:
            raise UsageError("--scale must be positive")
        params = AffineParams.scaling(args.scale)
        out = (max(1, int(round(in_size[0] * args.scale))),
               max(1, int(round(in_size[1] * args.scale))))
        return params, out
    lin = AffineParams.rotation(args.rotate) if args.rotate is not None else AffineParams.shear(args.skew)
    out = bounding_size(lin, in_size)
    return centered(lin, in_size, out), out


def cmd_synthesize(args, settings):
    spec = KernelSpec(args.kernel, args.cubic_a)
    if args.noise:
        w, h = _parse_size(args.noise)
        print(f"seed={args.seed}")
        source = noise_image(np.random.default_rng(args.seed), w, h)
    elif args.source:
        source = load_image(args.source)
    else:
        raise UsageError("give a source image or --noise WxH")
    params, out_size = transform_for(args, (source.width, source.height))
    try:
        forged = warp(source, params, spec, out_size)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    save_image(forged, args.out)
    meta = [f"{name} = {value!r}" for name, value in zip(("a0", "a1", "a2", "b0", "b1", "b2"),
                                                          params.as_tuple())]
    meta += [f"kernel = {spec.kind}", f"cubic_a = {spec.cubic_a!r}",
             f"source_size = {source.width}x{source.height}",
             f"out_size = {out_size[0]}x{out_size[1]}"]
    atomic_write(args.out + ".meta", "\n".join(meta) + "\n")
    print(f"wrote {args.out} ({out_size[0]}x{out_size[1]}) and {args.out}.meta")
    return EXIT_OK


def read_meta(path) -> dict:
    """Parse a ``.meta`` sidecar back into a dict of strings."""
    out = {}
    with open(path) as fh:
        for line in fh:
            if "=" in line:
                k, v = (p.strip() for p in line.split("=", 1))
                out[k] = v
    return out


def _corpus_scores(corpus_dir, cfg):
    scores = {}
    for kind in ("pristine", "forged"):
        paths = sorted(glob.glob(os.path.join(corpus_dir, kind, "*.pgm"))
                       + glob.glob(os.path.join(corpus_dir, kind, "*.png")))
        scores[kind] = [auth.analyze(load_image(p), cfg).score for p in paths]
    return scores["pristine"], scores["forged"]


def calibration_scores(seed: int, trials: int, cfg: auth.DetectorConfig, size: int = 128):
    pristine, forged = [], []
    for p, f in calibration_pairs(seed, trials, size):
        pristine.append(auth.analyze(p, cfg).score)
        forged.append(auth.analyze(f, cfg).score)
    return pristine, forged


def cmd_calibrate(args, settings):
    cfg = settings.detector()
    if args.corpus:
        pristine, forged = _corpus_scores(args.corpus, cfg)
        if not pristine:
            raise UsageError(f"no pristine images under {args.corpus}/pristine")
    else:
        if args.trials < 1:
            raise UsageError("--trials must be at least 1")
        print(f"seed={args.seed} trials={args.trials} size={args.size}")
        pristine, forged = calibration_scores(args.seed, args.trials, cfg, args.size)
    cal = auth.calibrate(pristine, forged, args.percentile)
    os.makedirs(args.out_dir, exist_ok=True)
    roc = os.path.join(args.out_dir, "roc.csv")
    frag = os.path.join(args.out_dir, "threshold.conf")
    atomic_write(roc, cal.roc_csv())
    atomic_write(frag, f"# {args.percentile:g}th percentile of {len(pristine)} pristine scores\n"
                       f"detector.threshold = {cal.threshold!r}\n")
    tpr, fpr = cal.rates()
    print(f"threshold={cal.threshold!r} tpr={tpr:.4f} fpr={fpr:.4f}")
    print(f"wrote {roc} and {frag}")
    return EXIT_OK


def cmd_corpus(args, settings):
    os.makedirs(args.out_dir, exist_ok=True)
    print(f"seed={args.seed}")
    if args.kind == "faces":
        corpus = face_corpus(subjects=args.subjects, train_per_subject=args.train,
                             probes_per_subject=args.probes, noise_sigma=args.sigma,
                             seed=args.seed)
        for name, path in write_face_corpus(corpus, args.out_dir).items():
            print(f"{name}: {path}")
    else:
        for kind in ("pristine", "forged"):
            os.makedirs(os.path.join(args.out_dir, kind), exist_ok=True)
        for i, (p, f) in enumerate(calibration_pairs(args.seed, args.trials, args.size)):
            save_image(p, os.path.join(args.out_dir, "pristine", f"{i:04d}.pgm"))
            save_image(f, os.path.join(args.out_dir, "forged", f"{i:04d}.pgm"))
        print(f"wrote {args.trials} pristine/forged pairs under {args.out_dir}")
    return EXIT_OK


def cmd_train(args, settings):
    samples = read_manifest(args.manifest)
    validation = read_manifest(args.validation) if args.validation else []
    cfg = settings.pipeline()
    print(f"seed={cfg.train.seed}")
    curve_path = args.curve or os.path.splitext(args.model)[0] + ".curve.csv"
    try:
        model, curve = train_pipeline(samples, cfg, validation)
    except TrainingError as exc:
        emit_curve(exc.curve, curve_path)
        print(f"training failed: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    save_model(model, args.model)
    emit_curve(curve, curve_path)
    print(f"classes={len(model.classes)} pca_m={model.pca.m} epochs={curve.epochs} "
          f"mse={curve.mse[-1]:.6g} stop={curve.stop_reason}")
    print(f"wrote {args.model} and {curve_path}")
    return EXIT_OK


def _parse_rect(text):
    if text is None:
        return None
    try:
        rect = tuple(int(v) for v in text.split(","))
    except ValueError:
        rect = ()
    if len(rect) != 4:
        raise UsageError(f"--rect expects x0,y0,w,h, got {text!r}")
    return rect


def cmd_recognize(args, settings):
    model = load_model(args.model)
    image = load_image(args.image)
    gate = settings["recognizer.gate"] and not args.no_gate
    detector = _detector(args, settings) if args.threshold is not None else None
    res = recognize(image, model, gate, _parse_rect(args.rect), detector)
    gate_text = res.gate.label.upper() if res.gate else "OFF"
    if res.blocked:
        print(f"label=- confidence=- nn=- dist=- gate={gate_text} score={res.gate.score:.6g}")
        return EXIT_FORGED
    line = (f"label={res.label} confidence={res.network_confidence:.6g} nn={res.nn_label} "
            f"dist={res.nn_distance:.6g} gate={gate_text}")
    if res.secondary_label is not None:
        line += f" secondary={res.secondary_label} secondary_dist={res.secondary_distance:.6g}"
    print(line)
    return EXIT_OK


def cmd_evaluate(args, settings):
    model = load_model(args.model)
    samples = read_manifest(args.manifest)
    if not samples:
        raise UsageError("manifest lists no images")
    gate = settings["recognizer.gate"] and args.gate
    report = evaluate(model, samples, gate)
    out = args.out or os.path.splitext(args.manifest)[0] + ".eval.csv"
    atomic_write(out, report.to_csv())
    print(f"accuracy={report.accuracy:.6g} n={len(samples)} blocked={report.blocked} "
          f"mean_nn_distance={report.mean_nn_distance:.6g}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_bench(args, settings):
    os.makedirs(args.out_dir, exist_ok=True)
    cfg = settings.pipeline()
    print(f"seed={args.seed}")
    if args.sweep in ("hidden", "both"):
        rows = hidden_sweep(config=cfg, seed=args.seed)
        path = os.path.join(args.out_dir, "hidden_sweep.csv")
        atomic_write(path, hidden_csv(rows))
        print(f"wrote {path}")
    if args.sweep in ("subjects", "both"):
        rows = subject_sweep(config=cfg, seed=args.seed)
        path = os.path.join(args.out_dir, "subject_sweep.csv")
        atomic_write(path, subject_csv(rows))
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file (default: $VERIFYFACE_CONFIG)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key; repeatable")

    parser = argparse.ArgumentParser(prog="verifyface",
                                     description="Resampling-forgery detection and gated face recognition.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("authenticate", parents=[common], help="original/forged verdict for one image")
    p.add_argument("image")
    p.add_argument("--threshold", type=float)
    p.add_argument("--spectrum", metavar="CSV", help="also write the spectrum CSV (+ .svg)")
    p.set_defaults(func=cmd_authenticate)

    p = sub.add_parser("spectrum", parents=[common], help="write the best-angle spectrum CSV/SVG")
    p.add_argument("image")
    p.add_argument("out", metavar="CSV")
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("synthesize", parents=[common], help="apply an affine warp (forgery synthesizer)")
    p.add_argument("source", nargs="?")
    p.add_argument("out")
    p.add_argument("--noise", metavar="WxH", help="use seeded uniform noise as the source")
    p.add_argument("--scale", type=float)
    p.add_argument("--rotate", type=float, metavar="DEG")
    p.add_argument("--skew", type=float)
    p.add_argument("--kernel", choices=("nearest", "linear", "cubic"), default="linear")
    p.add_argument("--cubic-a", type=float, default=-0.5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("calibrate", parents=[common], help="pick the detector threshold")
    p.add_argument("--corpus", help="directory with pristine/ and forged/ images")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--percentile", type=float, default=99.0)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("corpus", parents=[common], help="write a synthetic corpus")
    p.add_argument("out_dir")
    p.add_argument("--kind", choices=("faces", "noise"), default="faces")
    p.add_argument("--subjects", type=int, default=10)
    p.add_argument("--train", type=int, default=5, help="training images per subject")
    p.add_argument("--probes", type=int, default=5, help="probe images per subject")
    p.add_argument("--sigma", type=float, default=4.0, help="pixel noise std of each sample")
    p.add_argument("--trials", type=int, default=200, help="noise pairs (--kind noise)")
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("train", parents=[common], help="train the recognition pipeline")
    p.add_argument("manifest")
    p.add_argument("--model", required=True)
    p.add_argument("--validation", help="manifest enrolled into the secondary gallery")
    p.add_argument("--curve", help="training-curve CSV path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("recognize", parents=[common], help="authenticate then recognize one image")
    p.add_argument("image")
    p.add_argument("--model", required=True)
    p.add_argument("--rect", help="face rectangle x0,y0,w,h")
    p.add_argument("--no-gate", action="store_true")
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_recognize)

    p = sub.add_parser("evaluate", parents=[common], help="accuracy report over a manifest")
    p.add_argument("manifest")
    p.add_argument("--model", required=True)
    p.add_argument("--out")
    p.add_argument("--gate", action="store_true", help="run the authentication gate per probe")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", parents=[common], help="hidden-size and subject-count sweeps")
    p.add_argument("--sweep", choices=("hidden", "subjects", "both"), default="both")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = Settings.load(args.config, args.set)
        return args.func(args, settings)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ImageIOError, ModelFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
