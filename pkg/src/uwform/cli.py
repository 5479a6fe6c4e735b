"""Command-line interface.

Subcommands: estimate, synthesize, enhance, evaluate, gap, wavelet, run.
Exit codes: 0 success, 2 bad input, 3 estimation infeasible.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import report, wavelet
from .estimation import EstimationConfig, EstimationInfeasibleError, estimate_with_diagnostics
from .formation import WaterParams
from .imgcore import LinearImage, load_image, load_range, save_image
from .pipeline import PresetLibrary, enhance, run_manifest, synthesize_dataset

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_INFEASIBLE = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uwform",
        description="Underwater image formation toolkit: estimate water "
        "parameters, synthesize degraded images from RGB-D input, restore "
        "them in closed form, and evaluate quality metrics.",
    )
    parser.add_argument("--seed", type=int, default=0, help="seed for all randomized steps")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for batch stages")
    parser.add_argument(
        "--range-scale", type=float, default=0.001,
        help="meters per unit for integer range maps (default: millimeters)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate water parameters from an image + range map")
    p.add_argument("--image", required=True)
    p.add_argument("--range", required=True)
    p.add_argument("--depth-m", type=float, default=0.0)
    p.add_argument("--linear", action="store_true", help="input is linear (skip sRGB decode)")
    p.add_argument("--out", required=True, help="output params JSON")

    p = sub.add_parser("synthesize", help="render a synthetic degraded dataset")
    p.add_argument("--in-air", required=True, help="directory of (image, range) pairs")
    p.add_argument("--presets", required=True, help="presets JSON file or directory")
    p.add_argument("--k-per-image", type=int, default=2)
    p.add_argument("--linear", action="store_true")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("enhance", help="closed-form restoration of one image")
    p.add_argument("--image", required=True)
    p.add_argument("--range", required=True)
    p.add_argument("--params", help="params JSON; estimated from the image when omitted")
    p.add_argument("--stretch", action="store_true", help="1-99 percentile stretch per channel")
    p.add_argument("--linear", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="score images and write a report")
    p.add_argument("--metric", required=True, choices=report.METRIC_NAMES)
    p.add_argument("--input", required=True, help="image file or directory")
    p.add_argument("--reference", help="reference file or directory (psnr/ssim)")
    p.add_argument("--mask", help="achromatic patch JSON (rgb-error)")
    p.add_argument("--linear", action="store_true")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out", required=True, help="results JSON (CSV and figure written alongside)")

    p = sub.add_parser("gap", help="domain-gap statistics between two image sets")
    p.add_argument("--set-a", required=True)
    p.add_argument("--set-b", required=True)
    p.add_argument("--grid", type=int, default=50)
    p.add_argument("--linear", action="store_true")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("wavelet", help="write one-level subband images")
    p.add_argument("--image", required=True)
    p.add_argument("--linear", action="store_true")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("run", help="run a staged config (manifest mode)")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="results JSON path")

    return parser


def _cmd_estimate(args) -> int:
    config = EstimationConfig(seed=args.seed, depth_m=args.depth_m)
    img = load_image(args.image, assume_srgb=not args.linear)
    z = load_range(args.range, scale=args.range_scale)
    params, _, diagnostics = estimate_with_diagnostics(img, z, config)
    report.dump_json({**params.to_json(), "diagnostics": diagnostics}, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_synthesize(args) -> int:
    presets = PresetLibrary.from_file(args.presets)
    records = synthesize_dataset(
        args.in_air,
        presets,
        args.k_per_image,
        args.seed,
        args.out_dir,
        range_scale=args.range_scale,
        assume_srgb=not args.linear,
        threads=args.threads,
    )
    print(f"wrote {len(records)} records to {Path(args.out_dir) / 'manifest.jsonl'}")
    return EXIT_OK


def _cmd_enhance(args) -> int:
    img = load_image(args.image, assume_srgb=not args.linear)
    z = load_range(args.range, scale=args.range_scale)
    params = None
    if args.params:
        params = WaterParams.from_json(json.loads(Path(args.params).read_text()))
    config = EstimationConfig(seed=args.seed)
    out = enhance(img, z, params=params, config=config,
                  stretch=(1.0, 99.0) if args.stretch else None)
    save_image(out, args.out, encode_srgb=not args.linear, bit_depth=16)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    inputs = report.list_images(args.input)
    references = report.list_images(args.reference) if args.reference else None
    mask = report.load_patch_mask(args.mask) if args.mask else None
    payload = report.evaluate_files(
        args.metric, inputs, references, mask, assume_srgb=not args.linear
    )
    report.write_evaluation_report(payload, args.out, figures=not args.no_figures)
    print(f"wrote {args.out} (mean {args.metric}: {payload['summary']['mean_score']})")
    return EXIT_OK


def _cmd_gap(args) -> int:
    files_a = report.list_images(args.set_a)
    files_b = report.list_images(args.set_b)
    payload, A, B = report.gap_report(files_a, files_b, args.grid, not args.linear)
    report.write_gap_report(payload, A, B, args.out, figures=not args.no_figures)
    print(f"wrote {args.out} (IR {payload['ir_percent']:.1f}%, CD {payload['cd']:.3f})")
    return EXIT_OK


def _cmd_wavelet(args) -> int:
    img = load_image(args.image, assume_srgb=not args.linear)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    bands_rgb = wavelet.dwt2_rgb(img)
    sidecar = {}
    for name in ("LL", "LH", "HL", "HH"):
        stacked = np.stack([getattr(bands_rgb[c], name).data for c in range(3)], axis=2)
        lo, hi = float(stacked.min()), float(stacked.max())
        scale = hi - lo if hi > lo else 1.0
        save_image(
            LinearImage((stacked - lo) / scale),
            out_dir / f"{name.lower()}.png",
            encode_srgb=False,
            bit_depth=16,
        )
        sidecar[name] = {"offset": lo, "scale": scale}
    report.dump_json(sidecar, out_dir / "wavelet.json")
    print(f"wrote subbands to {out_dir}")
    return EXIT_OK


def _cmd_run(args) -> int:
    config = json.loads(Path(args.config).read_text())
    if args.seed != 0 and "seed" not in config:
        config["seed"] = args.seed
    run_manifest(config, out_path=args.out, threads=args.threads)
    if args.out:
        print(f"wrote {args.out}")
    return EXIT_OK


_COMMANDS = {
    "estimate": _cmd_estimate,
    "synthesize": _cmd_synthesize,
    "enhance": _cmd_enhance,
    "evaluate": _cmd_evaluate,
    "gap": _cmd_gap,
    "wavelet": _cmd_wavelet,
    "run": _cmd_run,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except EstimationInfeasibleError as exc:
        print(f"error: estimation infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
