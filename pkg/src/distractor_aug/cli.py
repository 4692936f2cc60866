"""Command line entry point.

Stages are separate commands with on-disk caches between them::

    distractor-aug parse  --dataset D [--out O]          -> O/scenes/*.json
    distractor-aug edit   --dataset D [--out O] --seed N -> O/edits/<frame>/*.png|json
    distractor-aug eval ssim|fid|apa ...                 -> <out>/<kind>.csv
    distractor-aug report RUN_DIR                        -> figures + summary.csv

Exit codes: 0 success, 1 fatal config/IO error, 2 partial failure (see the
skip report).
"""

from __future__ import annotations

import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import reports
from .backends.base import BackendError
from .backends.registry import resolve_endpoints
from .backends.remote import RemoteFeatureExtractor
from .backends.stubs import ColorHistogramExtractor
from .config import ConfigError, PipelineConfig, load_config
from .dataset import DatasetError, OutputExistsError, load_dataset, read_rgb, save_edited
from .metrics import SsimParams, apa, fid, load_apa_samples, ssim
from .pipeline import edit_frame
from .scene import SceneGraph, TargetNotFound, build_scene_graph

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2

log = logging.getLogger("distractor_aug")


class Fatal(click.ClickException):
    exit_code = EXIT_FATAL


def _config(path, **overrides) -> PipelineConfig:
    try:
        cfg = load_config(path)
        for key, value in overrides.items():
            if value is not None:
                setattr(cfg, key, value)
        cfg.__post_init__()
        cfg.validate_paths()
    except ConfigError as exc:
        raise Fatal(str(exc))
    return cfg


def _dataset(path):
    try:
        return load_dataset(path)
    except DatasetError as exc:
        raise Fatal(str(exc))


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


config_opt = click.option("--config", "config_path", type=click.Path(dir_okay=False), help="YAML/JSON pipeline config.")
dataset_opt = click.option("--dataset", type=click.Path(file_okay=False), required=True, help="Dataset root.")
out_opt = click.option("--out", type=click.Path(file_okay=False), help="Output root (defaults to the dataset root).")
workers_opt = click.option("--workers", type=int, help="Frames processed in parallel.")
backends_opt = click.option("--backends", type=click.Choice(["stub", "remote"]), help="Backend family.")


@click.group()
@click.option("-v", "--verbose", is_flag=True)
def main(verbose):
    """Edit distractor objects in robot demonstration frames and evaluate the results."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")


def _scene_path(out: Path, frame_id: str) -> Path:
    return out / "scenes" / f"{frame_id}.json"


@main.command("parse")
@config_opt
@dataset_opt
@out_opt
@workers_opt
@backends_opt
def parse_cmd(config_path, dataset, out, workers, backends):
    """Decompose every frame into a cached scene graph."""
    cfg = _config(config_path, workers=workers, backends=backends)
    ds = _dataset(dataset)
    out = Path(out or dataset)
    try:
        bset = cfg.build_backends(dataset)
    except ConfigError as exc:
        raise Fatal(str(exc))
    skipped = [{"frame_id": e.frame_id, "reason": e.message} for e in ds.errors]

    def work(fid):
        try:
            scene = build_scene_graph(ds.frame(fid), bset.detector, bset.segmenter, cfg.size_threshold)
        except (TargetNotFound, DatasetError, BackendError) as exc:
            return {"frame_id": fid, "reason": f"{type(exc).__name__}: {exc}"}
        _write_json(_scene_path(out, fid), scene.to_dict())
        return None

    skipped += [s for s in _map(work, ds.frame_ids, cfg.workers) if s]
    skipped.sort(key=lambda s: s["frame_id"])
    _write_json(out / "scenes" / "skipped.json", {"skipped": skipped})
    click.echo(f"parsed {len(ds) - len([s for s in skipped if s['frame_id'] in ds.frame_ids])} frames, skipped {len(skipped)}")
    sys.exit(EXIT_PARTIAL if skipped else EXIT_OK)


@main.command("edit")
@config_opt
@dataset_opt
@out_opt
@click.option("--seed", type=int, help="Root seed (required here or in the config).")
@click.option("--ops", help="Comma-separated subset of remove,restyle,replace.")
@click.option("--variants", type=int, help="Variants per operation.")
@workers_opt
@backends_opt
def edit_cmd(config_path, dataset, out, seed, ops, variants, workers, backends):
    """Plan and apply edits to every frame, writing images plus manifests."""
    cfg = _config(config_path, workers=workers, backends=backends, seed=seed)
    if cfg.seed is None:
        raise Fatal("a seed is required for edit runs (--seed or config 'seed')")
    ds = _dataset(dataset)
    out = Path(out or dataset)
    try:
        textures = cfg.texture_store()
        operations = tuple(o.strip() for o in ops.split(",") if o.strip()) if ops else None
        planner = cfg.planner_config(textures, operations=operations, variants_per_operation=variants)
        bset = cfg.build_backends(dataset)
    except (ConfigError, ValueError, OSError) as exc:
        raise Fatal(str(exc))

    def work(fid):
        try:
            frame = ds.frame(fid)
            cached = _scene_path(out, fid)
            if cached.exists():
                scene = SceneGraph.from_dict(json.loads(cached.read_text(encoding="utf-8")))
            else:
                scene = build_scene_graph(frame, bset.detector, bset.segmenter, cfg.size_threshold)
            result = edit_frame(frame, scene, planner, cfg.seed, bset, textures)
            for edited in result.edited:
                save_edited(edited, out, overwrite=True)
        except (TargetNotFound, DatasetError, BackendError, OutputExistsError) as exc:
            return fid, None, f"{type(exc).__name__}: {exc}"
        return fid, result, None

    results = _map(work, ds.frame_ids, cfg.workers)
    skipped = [{"frame_id": e.frame_id, "reason": e.message} for e in ds.errors]
    skipped += [{"frame_id": fid, "reason": err} for fid, _, err in results if err]
    done = [r for _, r, _ in results if r is not None]
    failed = [{"frame_id": r.frame_id, "plan_hash": p.plan_hash, "reason": why} for r in done for p, why in r.failed]
    by_verdict: dict[str, int] = {}
    for r in done:
        for _, verdict in r.rejected:
            by_verdict[verdict] = by_verdict.get(verdict, 0) + 1
    summary = {
        "frames": len(done),
        "skipped_frames": len(skipped),
        "plans": sum(len(r.plans) for r in done),
        "edited": sum(len(r.edited) for r in done),
        "rejected_by_safety": by_verdict,
        "backend_failures": len(failed),
        "seed": cfg.seed,
        "operations": list(planner.operations),
        "variants_per_operation": planner.variants_per_operation,
    }
    _write_json(out / "edit_summary.json", summary)
    _write_json(out / "edit_skipped.json", {"skipped": sorted(skipped, key=lambda s: s["frame_id"]), "failed": failed})
    rows = [
        ("frames", summary["frames"]),
        ("skipped frames", summary["skipped_frames"]),
        ("plans", summary["plans"]),
        ("edited", summary["edited"]),
        ("rejected (safety)", sum(by_verdict.values())),
        ("backend failures", summary["backend_failures"]),
    ]
    for name, value in rows:
        click.echo(f"{name:<20}{value:>8}")
    sys.exit(EXIT_PARTIAL if skipped or failed else EXIT_OK)


@main.group("eval")
def eval_group():
    """Compute SSIM, FID or APA reports."""


@eval_group.command("ssim")
@click.option("--reference", type=click.Path(file_okay=False), required=True, help="Dataset root with ground truth frames.")
@click.option("--candidate", type=click.Path(file_okay=False), required=True, help="Dataset root with generated frames.")
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--window", type=int, default=11, show_default=True)
@click.option("--plot/--no-plot", default=False)
def eval_ssim(reference, candidate, out, window, plot):
    """SSIM between frames sharing a frame_id in two dataset roots."""
    ref, cand = _dataset(reference), _dataset(candidate)
    params = SsimParams(window=window)
    common = sorted(set(ref.frame_ids) & set(cand.frame_ids))
    if not common:
        raise Fatal("the two datasets share no frame ids")
    rows, values = [], []
    for fid in common:
        try:
            value = ssim(ref.frame(fid).image, cand.frame(fid).image, params)
        except (DatasetError, ValueError) as exc:
            raise Fatal(f"frame {fid}: {exc}")
        rows.append(("ssim", fid, value))
        values.append(value)
    rows += reports.summarize(values, "ssim_summary")
    rows.append(("ssim_param", "uniform_window", float(window)))
    path = reports.write_rows(Path(out) / "ssim.csv", rows)
    if plot:
        reports.plot_ssim_hist(values, Path(out) / "ssim_hist.png", window)
    click.echo(f"{len(values)} pairs, mean SSIM {np.mean(values):.4f} -> {path}")


def collect_images(root: Path, prefer_edits: bool = True) -> dict[str, list[Path]]:
    """Images under ``root`` grouped by edit operation when edit manifests exist."""
    groups: dict[str, list[Path]] = {}
    manifests = sorted(root.glob("edits/*/*.json")) if prefer_edits else []
    if manifests:
        for m in manifests:
            op = json.loads(m.read_text(encoding="utf-8"))["plan"]["operation"]
            groups.setdefault(op, []).append(m.with_suffix(".png"))
        groups["all"] = [p for m in manifests for p in [m.with_suffix(".png")]]
    elif (root / "meta.json").exists():
        groups["all"] = sorted(p for p in (root / "frames").glob("*.png"))
    else:
        groups["all"] = sorted(root.rglob("*.png"))
    return groups


@eval_group.command("fid")
@config_opt
@click.option("--real", type=click.Path(file_okay=False), required=True)
@click.option("--generated", type=click.Path(file_okay=False), required=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@backends_opt
@click.option("--plot/--no-plot", default=False)
def eval_fid(config_path, real, generated, out, backends, plot):
    """Fréchet distance between feature Gaussians of two image sets, per operation."""
    cfg = _config(config_path, backends=backends)
    if cfg.backends == "stub":
        extractor = ColorHistogramExtractor()
    else:
        url = resolve_endpoints(cfg.endpoints).get("feature_extractor")
        if not url:
            raise Fatal("no feature_extractor endpoint configured")
        extractor = RemoteFeatureExtractor(url, **cfg.backend_options)
    real_imgs = collect_images(Path(real), prefer_edits=False)["all"]
    gen_groups = collect_images(Path(generated))
    try:
        real_feats = extractor.embed([read_rgb(p) for p in real_imgs])
        scores = {}
        for group, paths in gen_groups.items():
            if len(paths) < 2:
                log.warning("group %s has %d image(s); need 2", group, len(paths))
                continue
            scores[group] = fid(real_feats, extractor.embed([read_rgb(p) for p in paths]))
    except (ValueError, BackendError, OSError) as exc:
        raise Fatal(str(exc))
    if not scores:
        raise Fatal("no image group had enough images for FID")
    rows = [("fid", g, v) for g, v in scores.items()]
    rows.append(("fid_param", "feature_dim", float(real_feats.shape[1])))
    path = reports.write_rows(Path(out) / "fid.csv", rows)
    if plot:
        reports.plot_fid_bar({g: v for g, v in scores.items() if g != "all"} or scores, Path(out) / "fid_bar.png")
    click.echo(" ".join(f"{g}={v:.4f}" for g, v in scores.items()) + f" -> {path}")


@eval_group.command("apa")
@click.option("--samples", type=click.Path(dir_okay=False), required=True, help="JSON-lines sample file.")
@click.option("--out", type=click.Path(file_okay=False), required=True)
def eval_apa(samples, out):
    """Affordance point accuracy per clutter level."""
    try:
        loaded = load_apa_samples(samples)
    except (OSError, ValueError, KeyError) as exc:
        raise Fatal(str(exc))
    scores = apa(loaded)
    rows = [("apa", level, value) for level, value in sorted(scores.items())]
    counts: dict[str, int] = {}
    for s in loaded:
        if s.predicted_points:
            counts[s.clutter_level.value] = counts.get(s.clutter_level.value, 0) + 1
    rows += [("apa_samples", level, float(n)) for level, n in sorted(counts.items())]
    path = reports.write_rows(Path(out) / "apa.csv", rows)
    click.echo(reports.apa_table(scores) + f"-> {path}")


@main.command("report")
@click.argument("run_dir", type=click.Path(file_okay=False))
def report_cmd(run_dir):
    """Render figures and a summary from the metric CSVs in RUN_DIR."""
    try:
        written = reports.build_report(run_dir)
    except FileNotFoundError as exc:
        raise Fatal(str(exc))
    for name, path in written.items():
        click.echo(f"{name}: {path}")


if __name__ == "__main__":
    main()
