"""Batch evaluation and domain-gap reports.

Every report writes three artifacts next to each other: the results JSON
(the machine contract), a CSV with the same rows for spreadsheet use, and
a matplotlib figure rendered to PNG. Output bytes are deterministic:
keys are sorted, file lists are sorted, and figures carry fixed metadata.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import domaingap, metrics
from .imgcore import LinearImage, load_image

IMAGE_SUFFIXES = (".png", ".ppm")

_PNG_METADATA = {"Software": "uwform"}

METRIC_NAMES = ("psnr", "ssim", "uiqm", "uciqe", "rgb-error")


def list_images(path) -> list:
    """Sorted image files under a directory, or the single file itself."""
    path = Path(path)
    if path.is_file():
        return [path]
    if not path.is_dir():
        raise FileNotFoundError(f"no such file or directory: {path}")
    files = sorted(
        p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file()
    )
    if not files:
        raise ValueError(f"no images found in {path}")
    return files


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _json_score(v: float):
    if math.isinf(v):
        return "inf"
    return v


def load_patch_mask(path) -> metrics.PatchMask:
    obj = json.loads(Path(path).read_text())
    patches = obj["patches"] if isinstance(obj, dict) else obj
    return metrics.PatchMask(tuple(tuple(p) for p in patches))


def score_image(
    metric: str,
    img: LinearImage,
    reference: LinearImage | None = None,
    mask: metrics.PatchMask | None = None,
) -> dict:
    """One file's entry for the results JSON: score plus component breakdown."""
    if metric == "psnr":
        if reference is None:
            raise ValueError("psnr needs a reference image")
        return {"score": _json_score(metrics.psnr(img, reference))}
    if metric == "ssim":
        if reference is None:
            raise ValueError("ssim needs a reference image")
        return {"score": metrics.ssim(img, reference)}
    if metric == "uiqm":
        score, parts = metrics.uiqm(img)
        return {"score": score, **parts}
    if metric == "uciqe":
        score, parts = metrics.uciqe(img)
        return {"score": score, **parts}
    if metric == "rgb-error":
        if mask is None:
            raise ValueError("rgb-error needs a patch mask")
        return {"score": metrics.rgb_error(img, mask)}
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRIC_NAMES}")


def evaluate_files(
    metric: str,
    inputs,
    references=None,
    mask: metrics.PatchMask | None = None,
    assume_srgb: bool = True,
) -> dict:
    """Score each input file; returns {filename: {score, ...}, ...} plus a summary."""
    inputs = [Path(p) for p in inputs]
    ref_by_name = {}
    if references is not None:
        ref_by_name = {Path(p).name: Path(p) for p in references}
    results = {}
    for path in inputs:
        img = load_image(path, assume_srgb=assume_srgb)
        reference = None
        if metric in ("psnr", "ssim"):
            ref_path = ref_by_name.get(path.name)
            if ref_path is None:
                raise ValueError(f"no reference image paired with {path.name}")
            reference = load_image(ref_path, assume_srgb=assume_srgb)
        results[path.name] = score_image(metric, img, reference, mask)
    finite = [r["score"] for r in results.values() if not isinstance(r["score"], str)]
    summary = {"mean_score": float(np.mean(finite)) if finite else "inf", "count": len(results)}
    return {"metric": metric, "results": results, "summary": summary}


def write_evaluation_report(report: dict, out_json, figures: bool = True) -> list:
    """Write results JSON plus CSV and a score figure alongside it."""
    out_json = Path(out_json)
    dump_json(report, out_json)
    written = [out_json]

    rows = sorted(report["results"].items())
    component_keys = sorted({k for _, entry in rows for k in entry if k != "score"})
    out_csv = out_json.with_suffix(".csv")
    with open(out_csv, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["file", "score"] + component_keys)
        for name, entry in rows:
            writer.writerow([name, entry["score"]] + [entry.get(k, "") for k in component_keys])
    written.append(out_csv)

    if figures:
        out_png = out_json.with_suffix(".png")
        names = [name for name, _ in rows]
        scores = [
            entry["score"] if not isinstance(entry["score"], str) else np.nan
            for _, entry in rows
        ]
        fig, ax = plt.subplots(figsize=(max(4.0, 0.5 * len(names) + 2.0), 3.5))
        ax.bar(range(len(names)), scores, color="#3b7ea1")
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=60, ha="right", fontsize=7)
        ax.set_ylabel(report["metric"])
        ax.set_title(f"{report['metric']} over {len(names)} file(s)")
        fig.tight_layout()
        fig.savefig(out_png, dpi=100, metadata=_PNG_METADATA)
        plt.close(fig)
        written.append(out_png)
    return written


def gap_report(set_a_files, set_b_files, grid: int = 50, assume_srgb: bool = True) -> dict:
    """Embed both sets together and compute overlap statistics.

    The IR sensitivity to grid resolution is reported alongside the main
    figure at half and double resolution.
    """
    feats_a = [domaingap.extract_features(load_image(p, assume_srgb=assume_srgb)) for p in set_a_files]
    feats_b = [domaingap.extract_features(load_image(p, assume_srgb=assume_srgb)) for p in set_b_files]
    embedding = domaingap.embed_2d(feats_a + feats_b)
    A = domaingap.Embedding2D(embedding.points[: len(feats_a)])
    B = domaingap.Embedding2D(embedding.points[len(feats_a):])
    report = {
        "ir_percent": domaingap.intersection_ratio(A, B, grid),
        "cd": domaingap.center_distance(A, B),
        "n_a": len(A),
        "n_b": len(B),
        "method": "pca",
        "grid": grid,
        "ir_sensitivity": {
            "25": domaingap.intersection_ratio(A, B, 25),
            "100": domaingap.intersection_ratio(A, B, 100),
        },
    }
    return report, A, B


def write_gap_report(report: dict, A, B, out_json, figures: bool = True) -> list:
    out_json = Path(out_json)
    dump_json(report, out_json)
    written = [out_json]

    out_csv = out_json.with_suffix(".csv")
    with open(out_csv, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["set", "u", "v"])
        for u, v in A.points:
            writer.writerow(["a", repr(float(u)), repr(float(v))])
        for u, v in B.points:
            writer.writerow(["b", repr(float(u)), repr(float(v))])
    written.append(out_csv)

    if figures:
        out_png = out_json.with_suffix(".png")
        fig, ax = plt.subplots(figsize=(5.0, 4.5))
        ax.scatter(A.points[:, 0], A.points[:, 1], s=18, alpha=0.7, label=f"set A (n={len(A)})")
        ax.scatter(B.points[:, 0], B.points[:, 1], s=18, alpha=0.7, marker="^", label=f"set B (n={len(B)})")
        for pts, color in ((A.points, "C0"), (B.points, "C1")):
            cx, cy = pts.mean(axis=0)
            ax.plot(cx, cy, "x", color=color, markersize=12, markeredgewidth=3)
        ax.set_xlabel("component 1")
        ax.set_ylabel("component 2")
        ax.legend(fontsize=8)
        ax.set_title(f"IR {report['ir_percent']:.1f}%  CD {report['cd']:.3f}")
        fig.tight_layout()
        fig.savefig(out_png, dpi=100, metadata=_PNG_METADATA)
        plt.close(fig)
        written.append(out_png)
    return written
