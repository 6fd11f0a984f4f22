"""Command-line entry point binding config files to harness operations.

Verbs: gen-data, train, eval, sweep, grid, denoise, crb, demo.  All verbs
share ``--config``, repeatable ``--set KEY=VALUE`` overrides, ``--seed``,
``--workers`` and ``--out``; results land in the configured output
directory.  Exit status: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from .arrays import ArrayConfig, TargetScene, draw_rcs, synthesize_block
from .harness import (
    CONFIG_KEYS,
    ExperimentConfig,
    Harness,
    SweepResult,
    config_from_items,
    parse_config_file,
    write_grid,
    write_results,
    write_rows,
)
from .music import hermitian_eig, music_spectrum, noise_subspace, pick_peaks, sample_covariance

VERBS = ("gen-data", "train", "eval", "sweep", "grid", "denoise", "crb", "demo")


def _build_parser() -> argparse.ArgumentParser:
    keys = ", ".join(sorted(CONFIG_KEYS))
    parser = argparse.ArgumentParser(
        prog="arrayemu",
        description="MIMO radar DOA estimation with neural emulation of large virtual arrays.",
        epilog=f"Config keys accepted by --config files and --set overrides: {keys}",
    )
    sub = parser.add_subparsers(dest="verb", metavar="|".join(VERBS))
    for verb in VERBS:
        p = sub.add_parser(verb)
        p.add_argument("--config", help="flat key=value experiment config file")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config key (repeatable)",
        )
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--workers", type=int, help="worker count for trial evaluation")
        p.add_argument("--out", help="override the output directory")
        if verb == "eval":
            p.add_argument("--train-set", default="M1", help="training set id to evaluate")
        if verb == "sweep":
            p.add_argument(
                "--case",
                default="matched_snr",
                help="mixed_M1 | matched_snr | best_of_all | raw_low | raw_high",
            )
        if verb == "denoise":
            p.add_argument(
                "--offsets",
                help="comma-separated SNR offsets in dB (default: config value)",
            )
    return parser


def _load_config(args) -> ExperimentConfig:
    overrides = {}
    for item in args.overrides:
        if "=" not in item:
            raise KeyError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    if args.config:
        cfg = parse_config_file(args.config, overrides)
    else:
        cfg = config_from_items(overrides)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    if args.out is not None:
        cfg = replace(cfg, output_dir=args.out)
    return cfg


def _results_dir(cfg: ExperimentConfig) -> str:
    d = os.path.join(cfg.output_dir, "results")
    os.makedirs(d, exist_ok=True)
    return d


def run_demo() -> int:
    """Noiseless two-target MUSIC round trip on a 4x4 virtual array."""
    cfg = ArrayConfig(2, 2)
    truth_deg = np.array([-10.0, 20.0])
    scene = TargetScene(
        angles_rad=np.deg2rad(truth_deg), rcs=draw_rcs(2, 32, rng=1234)
    )
    block = synthesize_block(scene, cfg, snr_db=300.0, rng=0)
    eig = hermitian_eig(sample_covariance(block))
    spec = music_spectrum(noise_subspace(eig, 2), cfg, (-30.0, 40.0, 0.1))
    angles, _ = pick_peaks(spec, 2)
    print("true angles (deg):     " + "  ".join(f"{a:7.2f}" for a in truth_deg))
    print("recovered angles (deg):" + "  ".join(f"{a:7.2f}" for a in angles))
    return 0


def dispatch(args) -> int:
    if args.verb == "demo":
        return run_demo()
    cfg = _load_config(args)
    harness = Harness(cfg)
    out = _results_dir(cfg)
    if args.verb == "gen-data":
        paths = harness.build_datasets()
        print(f"wrote {len(paths)} dataset files under {cfg.output_dir}/datasets")
    elif args.verb == "train":
        for r in range(len(cfg.angle_ranges_deg)):
            for sid in cfg.set_ids:
                harness.ensure_model(r, sid)
                print(f"trained {cfg.range_tag(r)}/{sid}")
    elif args.verb == "eval":
        rows = []
        for r in range(len(cfg.angle_ranges_deg)):
            harness.ensure_model(r, args.train_set, train_missing=False)
            for snr in cfg.snr_test_db:
                ev = harness.eval_model(r, args.train_set, snr)
                rows.append(harness._row(r, args.train_set, snr, ev["mse"], ev["r_e"], ev["r_offset"]))
        path = os.path.join(out, f"eval_{args.train_set}.csv")
        write_results(SweepResult(rows=rows), path)
        print(f"wrote {path}")
    elif args.verb == "sweep":
        result = harness.run_case_sweep(args.case)
        path = os.path.join(out, f"sweep_{args.case}.csv")
        write_results(result, path)
        print(f"wrote {path}")
    elif args.verb == "grid":
        path = os.path.join(out, "grid.csv")
        write_grid(harness.best_train_snr_grid(), path)
        print(f"wrote {path}")
    elif args.verb == "denoise":
        offsets = None
        if args.offsets:
            offsets = [float(p) for p in args.offsets.split(",")]
        path = os.path.join(out, "denoise.csv")
        write_rows(harness.denoise_analysis(offsets), path)
        print(f"wrote {path}")
    elif args.verb == "crb":
        path = os.path.join(out, "crb.csv")
        write_rows(harness.crb_table(), path)
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    if args.verb is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return dispatch(args)
    except KeyError as exc:
        print(f"arrayemu: usage error: {exc.args[0]}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"arrayemu: error: {exc}", file=sys.stderr)
        return 1


def entry_point():  # console-script shim
    raise SystemExit(main())


if __name__ == "__main__":
    entry_point()
