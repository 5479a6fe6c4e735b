"""Batch orchestration: dataset synthesis, enhancement, and manifest runs.

A synthesis run pairs each in-air image with its range map (same filename
stem), samples k water presets without replacement, renders the degraded
image plus its component maps, and appends one JSON record per sample to a
JSON-lines manifest. Runs are deterministic for a fixed seed: records are
emitted in sorted order and every result file is written with sorted keys,
so reruns are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, report
from .estimation import EstimationConfig, estimate_water_params, estimate_with_diagnostics
from .formation import WaterParams, components_from_params, restore, synthesize
from .imgcore import LinearImage, RangeMap, load_image, load_range, save_image


@dataclass(frozen=True)
class PresetLibrary:
    """Named water conditions, typically produced by the estimator."""

    presets: tuple  # of (name, WaterParams), unique names, sorted by name

    def __post_init__(self):
        items = sorted(self.presets, key=lambda kv: kv[0])
        names = [name for name, _ in items]
        if not names:
            raise ValueError("preset library is empty")
        if len(set(names)) != len(names):
            raise ValueError("preset names must be unique")
        object.__setattr__(self, "presets", tuple(items))

    def __len__(self) -> int:
        return len(self.presets)

    @staticmethod
    def from_file(path) -> "PresetLibrary":
        """Load from a {"presets": {name: params}} JSON file or a directory
        of <name>.json files each holding one WaterParams object."""
        path = Path(path)
        if path.is_dir():
            items = [
                (p.stem, WaterParams.from_json(json.loads(p.read_text())))
                for p in sorted(path.glob("*.json"))
            ]
        else:
            obj = json.loads(path.read_text())
            items = [
                (name, WaterParams.from_json(entry))
                for name, entry in obj["presets"].items()
            ]
        return PresetLibrary(tuple(items))


def pair_images_with_ranges(in_air_dir) -> list:
    """(stem, image path, range path) triples for a directory.

    Range maps live next to the images as <stem>.pfm, <stem>_range.pfm or
    <stem>_range.png; a missing range map is an error.
    """
    in_air_dir = Path(in_air_dir)
    if not in_air_dir.is_dir():
        raise FileNotFoundError(f"no such directory: {in_air_dir}")
    pairs = []
    for img_path in sorted(in_air_dir.iterdir()):
        if img_path.suffix.lower() not in report.IMAGE_SUFFIXES:
            continue
        if img_path.stem.endswith("_range"):
            continue
        stem = img_path.stem
        for candidate in (f"{stem}.pfm", f"{stem}_range.pfm", f"{stem}_range.png"):
            range_path = in_air_dir / candidate
            if range_path.exists():
                break
        else:
            raise FileNotFoundError(f"no range map found for {img_path.name}")
        pairs.append((stem, img_path, range_path))
    if not pairs:
        raise ValueError(f"no (image, range) pairs found in {in_air_dir}")
    return pairs


def synthesize_dataset(
    in_air_dir,
    presets: PresetLibrary,
    k_per_image: int,
    seed: int,
    out_dir,
    range_scale: float = 0.001,
    assume_srgb: bool = True,
    threads: int = 1,
) -> list:
    """Render k preset variants of every in-air image; returns the records.

    Writes 16-bit linear PNGs for the degraded image, clear reference, and
    B/T component maps, plus <out_dir>/manifest.jsonl (one record per line)
    and provenance.json.
    """
    if k_per_image < 1:
        raise ValueError("k_per_image must be >= 1")
    if k_per_image > len(presets):
        raise ValueError(
            f"k_per_image={k_per_image} exceeds preset count {len(presets)}"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pairs = pair_images_with_ranges(in_air_dir)

    rng = np.random.default_rng(seed)
    jobs = []
    for stem, img_path, range_path in pairs:
        chosen = rng.choice(len(presets), size=k_per_image, replace=False)
        jobs.append((stem, img_path, range_path, [presets.presets[i] for i in chosen]))

    def render(job):
        # record paths are stored relative to the manifest directory so
        # reruns into any directory produce identical manifest bytes
        stem, img_path, range_path, chosen = job
        J = load_image(img_path, assume_srgb=assume_srgb)
        z = load_range(range_path, scale=range_scale)
        ref_name = f"{stem}__J.png"
        save_image(J, out_dir / ref_name, encode_srgb=False, bit_depth=16)
        records = []
        for name, params in chosen:
            degraded, comps = synthesize(J, z, params)
            recovered = restore(degraded, comps)
            roundtrip_err = float(np.abs(recovered.data - J.data).max())
            rec_id = f"{stem}__{name}"
            i_name = f"{rec_id}__I.png"
            b_name = f"{rec_id}__B.png"
            t_name = f"{rec_id}__T.png"
            save_image(degraded, out_dir / i_name, encode_srgb=False, bit_depth=16)
            save_image(comps.B, out_dir / b_name, encode_srgb=False, bit_depth=16)
            save_image(comps.T, out_dir / t_name, encode_srgb=False, bit_depth=16)
            records.append(
                {
                    "id": rec_id,
                    "image": i_name,
                    "reference": ref_name,
                    "backscatter": b_name,
                    "transmission": t_name,
                    "white_point": comps.W.tolist(),
                    "preset": name,
                    "params": params.to_json(),
                    "range": os.path.relpath(range_path, out_dir),
                    "roundtrip_max_err": roundtrip_err,
                }
            )
        return records

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_job = list(pool.map(render, jobs))
    else:
        per_job = [render(job) for job in jobs]

    records = sorted((r for rs in per_job for r in rs), key=lambda r: r["id"])
    manifest_path = out_dir / "manifest.jsonl"
    with open(manifest_path, "w") as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True) + "\n")
    provenance = {
        "version": __version__,
        "seed": seed,
        "k_per_image": k_per_image,
        "inputs": hash_files(
            [p for _, img, rng_path in pairs for p in (img, rng_path)]
        ),
        "records": len(records),
    }
    report.dump_json(provenance, out_dir / "provenance.json")
    return records


def enhance(
    I: LinearImage,
    z: RangeMap,
    params: WaterParams | None = None,
    config: EstimationConfig = EstimationConfig(),
    stretch: tuple | None = None,
) -> LinearImage:
    """Closed-form enhancement: restore with known or estimated parameters.

    The restored image is clamped to [0, 1]; an optional per-channel
    percentile stretch (lo, hi) can be applied afterwards (off by default).
    """
    if params is None:
        params, components = estimate_water_params(I, z, config)
    else:
        components = components_from_params(z, params)
    out = np.clip(restore(I, components).data, 0.0, 1.0)
    if stretch is not None:
        lo_pct, hi_pct = stretch
        for c in range(3):
            lo, hi = np.percentile(out[:, :, c], [lo_pct, hi_pct])
            if hi > lo:
                out[:, :, c] = np.clip((out[:, :, c] - lo) / (hi - lo), 0.0, 1.0)
    return LinearImage(out)


def hash_files(paths) -> dict:
    """Stable sha256 map used for provenance records."""
    out = {}
    for p in sorted({str(p) for p in paths}):
        digest = hashlib.sha256(Path(p).read_bytes()).hexdigest()
        out[p] = digest
    return out


def _stage_estimate(stage: dict, seed: int) -> dict:
    config = EstimationConfig(
        seed=int(stage.get("seed", seed)),
        depth_m=float(stage.get("depth_m", 0.0)),
    )
    img = load_image(stage["image"], assume_srgb=stage.get("assume_srgb", True))
    z = load_range(stage["range"], scale=float(stage.get("range_scale", 0.001)))
    params, _, diagnostics = estimate_with_diagnostics(img, z, config)
    payload = {**params.to_json(), "diagnostics": diagnostics}
    report.dump_json(payload, stage["out"])
    return {"outputs": [stage["out"]], "summary": {"depth_m": params.depth_m}}


def _stage_synthesize(stage: dict, seed: int, threads: int) -> dict:
    presets = PresetLibrary.from_file(stage["presets"])
    records = synthesize_dataset(
        stage["in_air"],
        presets,
        int(stage.get("k_per_image", 2)),
        int(stage.get("seed", seed)),
        stage["out_dir"],
        range_scale=float(stage.get("range_scale", 0.001)),
        assume_srgb=stage.get("assume_srgb", True),
        threads=threads,
    )
    manifest = str(Path(stage["out_dir"]) / "manifest.jsonl")
    return {
        "outputs": [manifest],
        "summary": {
            "records": len(records),
            "max_roundtrip_err": max(r["roundtrip_max_err"] for r in records),
        },
    }


def read_manifest(path) -> list:
    """Records from a JSON-lines manifest, paths resolved to absolute."""
    path = Path(path)
    base = path.parent
    records = []
    for line in path.read_text().splitlines():
        record = json.loads(line)
        for key in ("image", "reference", "backscatter", "transmission", "range"):
            p = Path(record[key])
            record[key] = str(p if p.is_absolute() else (base / p).resolve())
        records.append(record)
    return records


def _stage_enhance(stage: dict, seed: int) -> dict:
    stretch = tuple(stage["stretch"]) if stage.get("stretch") else None
    if "manifest" in stage:
        out_dir = Path(stage["out_dir"])
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs = []
        for record in read_manifest(stage["manifest"]):
            img = load_image(record["image"], assume_srgb=False)
            z = load_range(record["range"], scale=float(stage.get("range_scale", 0.001)))
            params = WaterParams.from_json(record["params"])
            out = enhance(img, z, params=params, stretch=stretch)
            out_path = out_dir / f"{record['id']}.png"
            save_image(out, out_path, encode_srgb=False, bit_depth=16)
            outputs.append(str(out_path))
        return {"outputs": sorted(outputs), "summary": {"count": len(outputs)}}
    img = load_image(stage["image"], assume_srgb=stage.get("assume_srgb", True))
    z = load_range(stage["range"], scale=float(stage.get("range_scale", 0.001)))
    params = None
    if stage.get("params"):
        params = WaterParams.from_json(json.loads(Path(stage["params"]).read_text()))
    config = EstimationConfig(seed=int(stage.get("seed", seed)))
    out = enhance(img, z, params=params, config=config, stretch=stretch)
    save_image(out, stage["out"], encode_srgb=stage.get("encode_srgb", True), bit_depth=16)
    return {"outputs": [stage["out"]], "summary": {"estimated": params is None}}


def _stage_evaluate(stage: dict) -> dict:
    metric = stage["metric"]
    mask = report.load_patch_mask(stage["mask"]) if stage.get("mask") else None
    assume_srgb = stage.get("assume_srgb", True)
    if "manifest" in stage:
        # pair enhanced outputs with the manifest's clear references
        inputs, references = [], []
        enhanced_dir = Path(stage["input"])
        for record in read_manifest(stage["manifest"]):
            inputs.append(enhanced_dir / f"{record['id']}.png")
            references.append(Path(record["reference"]))
        results = {}
        for inp, ref in zip(inputs, references):
            img = load_image(inp, assume_srgb=False)
            reference = load_image(ref, assume_srgb=False)
            results[inp.name] = report.score_image(metric, img, reference, mask)
        finite = [r["score"] for r in results.values() if not isinstance(r["score"], str)]
        payload = {
            "metric": metric,
            "results": results,
            "summary": {
                "mean_score": float(np.mean(finite)) if finite else "inf",
                "count": len(results),
            },
        }
    else:
        inputs = report.list_images(stage["input"])
        references = report.list_images(stage["reference"]) if stage.get("reference") else None
        payload = report.evaluate_files(metric, inputs, references, mask, assume_srgb)
    outputs = report.write_evaluation_report(
        payload, stage["out"], figures=stage.get("figures", True)
    )
    return {"outputs": sorted(str(p) for p in outputs), "summary": payload["summary"]}


def _stage_gap(stage: dict) -> dict:
    files_a = report.list_images(stage["set_a"])
    files_b = report.list_images(stage["set_b"])
    payload, A, B = report.gap_report(
        files_a, files_b, int(stage.get("grid", 50)), stage.get("assume_srgb", True)
    )
    outputs = report.write_gap_report(
        payload, A, B, stage["out"], figures=stage.get("figures", True)
    )
    summary = {"ir_percent": payload["ir_percent"], "cd": payload["cd"]}
    return {"outputs": sorted(str(p) for p in outputs), "summary": summary}


_STAGE_INPUT_KEYS = ("image", "range", "params", "presets", "mask", "manifest")


def run_manifest(config, out_path=None, threads: int = 1) -> dict:
    """Run the staged config; returns (and optionally writes) results JSON.

    Every stage entry records the sha256 of its file inputs, the seed in
    effect, and the package version, so identical configs and seeds yield
    byte-identical results.
    """
    if not isinstance(config, dict):
        config = json.loads(Path(config).read_text())
    seed = int(config.get("seed", 0))
    results = {"version": __version__, "seed": seed, "stages": []}
    for stage in config.get("stages", []):
        kind = stage.get("stage")
        if kind == "estimate":
            outcome = _stage_estimate(stage, seed)
        elif kind == "synthesize":
            outcome = _stage_synthesize(stage, seed, threads)
        elif kind == "enhance":
            outcome = _stage_enhance(stage, seed)
        elif kind == "evaluate":
            outcome = _stage_evaluate(stage)
        elif kind == "gap":
            outcome = _stage_gap(stage)
        else:
            raise ValueError(f"unknown stage {kind!r}")
        inputs = [stage[k] for k in _STAGE_INPUT_KEYS if isinstance(stage.get(k), str)]
        inputs = [p for p in inputs if Path(p).is_file()]
        results["stages"].append(
            {
                "stage": kind,
                "inputs": hash_files(inputs),
                "outputs": outcome["outputs"],
                "summary": outcome["summary"],
            }
        )
    if out_path is not None:
        report.dump_json(results, out_path)
    return results
