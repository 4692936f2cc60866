"""Dataset loading, validation and persistence of edited frames.

Input layout::

    <root>/meta.json                    schema_version, episodes
    <root>/frames/<frame_id>.png        RGB observation
    <root>/frames/<frame_id>.json       instruction, target_phrase?, state/action (base64)
    <root>/footprints/<frame_id>.png    optional trajectory footprint, 0/255

Edited frames go to ``<root>/edits/<frame_id>/<op>_<plan_hash>_<variant>.png``
with a ``.json`` manifest next to each image.
"""

from __future__ import annotations

import base64
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .frames import DemonstrationFrame, EditedFrame
from .masks import read_mask_png, rle_decode, rle_encode
from .planner import EditPlan

SCHEMA_VERSION = "1.0"
LOSSLESS_FORMATS = frozenset({"png"})


class DatasetError(RuntimeError):
    pass


class FormatError(ValueError):
    pass


class OutputExistsError(FileExistsError):
    pass


@dataclass
class FrameRecord:
    frame_id: str
    episode_id: str
    instruction: str
    image_path: str
    image_size: tuple[int, int]
    target_phrase: str | None = None
    footprint_path: str | None = None
    footprint_size: tuple[int, int] | None = None
    state: str | None = None
    action: str | None = None


@dataclass
class EditRecord:
    source_frame_id: str
    operation: str
    plan_hash: str
    variant_index: int
    image_path: str
    manifest_path: str


@dataclass
class DatasetManifest:
    frames: list[FrameRecord] = field(default_factory=list)
    edits: list[EditRecord] = field(default_factory=list)
    schema_version: str = SCHEMA_VERSION


@dataclass
class LoadError:
    frame_id: str
    message: str


class Dataset:
    """A loaded manifest plus on-demand frame decoding."""

    def __init__(self, root: Path, manifest: DatasetManifest, errors: list[LoadError]):
        self.root = root
        self.manifest = manifest
        self.errors = errors
        self._by_id = {r.frame_id: r for r in manifest.frames}

    def __len__(self) -> int:
        return len(self.manifest.frames)

    @property
    def frame_ids(self) -> list[str]:
        return [r.frame_id for r in self.manifest.frames]

    def record(self, frame_id: str) -> FrameRecord:
        return self._by_id[frame_id]

    def frame(self, frame_id: str) -> DemonstrationFrame:
        rec = self._by_id[frame_id]
        try:
            image = read_rgb(self.root / rec.image_path)
            footprint = read_mask_png(self.root / rec.footprint_path) if rec.footprint_path else None
        except (OSError, ValueError) as exc:
            raise DatasetError(f"frame {frame_id}: cannot decode: {exc}") from exc
        return DemonstrationFrame(
            frame_id=rec.frame_id,
            image=image,
            instruction=rec.instruction,
            target_phrase=rec.target_phrase,
            trajectory_footprint=footprint,
            episode_id=rec.episode_id,
            state=_unb64(rec.state),
            action=_unb64(rec.action),
        )

    def __iter__(self):
        for frame_id in self.frame_ids:
            yield self.frame(frame_id)


def _unb64(value: str | None) -> bytes | None:
    return None if value is None else base64.b64decode(value)


def read_rgb(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB")).copy()


def _png_size(path: Path) -> tuple[int, int]:
    with Image.open(path) as im:
        if im.format != "PNG":
            raise ValueError(f"{path.name} is {im.format}, expected PNG")
        return im.height, im.width


def _episode_frames(meta: dict) -> list[tuple[str, str]]:
    pairs = []
    for ep in meta.get("episodes", []):
        for fid in ep.get("frames", []):
            pairs.append((ep.get("episode_id", ""), fid))
    return pairs


def load_dataset(root: str | Path) -> Dataset:
    """Read ``meta.json`` and every frame sidecar under ``root``.

    Images are only probed for their size here; pixels are decoded when a
    frame is requested. Broken frames land in ``Dataset.errors`` and are left
    out of the manifest. Nothing on disk is modified.
    """
    root = Path(root)
    meta_path = root / "meta.json"
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DatasetError(f"missing {meta_path}") from None
    except json.JSONDecodeError as exc:
        raise DatasetError(f"malformed {meta_path}: {exc}") from None
    manifest = DatasetManifest(schema_version=str(meta.get("schema_version", SCHEMA_VERSION)))
    errors: list[LoadError] = []
    for episode_id, fid in _episode_frames(meta):
        try:
            manifest.frames.append(_load_record(root, episode_id, fid))
        except (OSError, ValueError, KeyError) as exc:
            errors.append(LoadError(fid, f"{type(exc).__name__}: {exc}"))
    manifest.edits = _scan_edits(root)
    return Dataset(root, manifest, errors)


def _load_record(root: Path, episode_id: str, fid: str) -> FrameRecord:
    image_rel = f"frames/{fid}.png"
    sidecar = json.loads((root / "frames" / f"{fid}.json").read_text(encoding="utf-8"))
    size = _png_size(root / image_rel)
    rec = FrameRecord(
        frame_id=fid,
        episode_id=sidecar.get("episode_id", episode_id),
        instruction=sidecar["instruction"],
        image_path=image_rel,
        image_size=size,
        target_phrase=sidecar.get("target_phrase"),
        state=sidecar.get("state"),
        action=sidecar.get("action"),
    )
    fp = root / "footprints" / f"{fid}.png"
    if fp.exists():
        rec.footprint_path = f"footprints/{fid}.png"
        rec.footprint_size = _png_size(fp)
    return rec


def _scan_edits(root: Path) -> list[EditRecord]:
    edits = []
    for path in sorted((root / "edits").glob("*/*.json")):
        try:
            d = json.loads(path.read_text(encoding="utf-8"))
            plan = d["plan"]
            edits.append(
                EditRecord(
                    d["source_frame_id"],
                    plan["operation"],
                    plan["plan_hash"],
                    int(d["variant_index"]),
                    str(path.with_suffix(".png").relative_to(root)),
                    str(path.relative_to(root)),
                )
            )
        except (ValueError, KeyError):
            continue
    return edits


def validate_dataset(manifest: DatasetManifest, min_size: int = 64) -> list[str]:
    """Every invariant violation in ``manifest``; empty iff it is valid."""
    problems = []
    seen: set[str] = set()
    for rec in manifest.frames:
        if rec.frame_id in seen:
            problems.append(f"duplicate frame_id {rec.frame_id!r}")
        seen.add(rec.frame_id)
        h, w = rec.image_size
        if h < min_size or w < min_size:
            problems.append(f"frame {rec.frame_id!r}: image {h}x{w} smaller than {min_size}x{min_size}")
        if rec.footprint_size is not None and tuple(rec.footprint_size) != tuple(rec.image_size):
            fh, fw = rec.footprint_size
            problems.append(f"frame {rec.frame_id!r}: dimension mismatch, footprint {fh}x{fw} vs image {h}x{w}")
    for edit in manifest.edits:
        if edit.source_frame_id not in seen:
            problems.append(f"edit {edit.manifest_path!r} references unknown frame {edit.source_frame_id!r}")
    return problems


def _b64(value: bytes | None) -> str | None:
    return None if value is None else base64.b64encode(value).decode("ascii")


def edit_manifest(frame: EditedFrame) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "source_frame_id": frame.source_frame_id,
        "variant_index": frame.variant_index,
        "image_size": list(frame.image.shape[:2]),
        "plan": frame.plan.to_dict(),
        "edited_region_rle": rle_encode(frame.edited_region),
        "info": frame.info,
        "state": _b64(frame.state),
        "action": _b64(frame.action),
    }


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def save_edited(frame: EditedFrame, root: str | Path, *, overwrite: bool = False, image_format: str = "png") -> tuple[Path, Path]:
    """Write the edited image (PNG only) and its JSON manifest under ``root/edits``."""
    if image_format.lower() not in LOSSLESS_FORMATS:
        raise FormatError(f"{image_format!r} is not lossless; edited frames are stored as PNG")
    out_dir = Path(root) / "edits" / frame.source_frame_id
    out_dir.mkdir(parents=True, exist_ok=True)
    image_path = out_dir / f"{frame.file_stem}.png"
    manifest_path = image_path.with_suffix(".json")
    if not overwrite and (image_path.exists() or manifest_path.exists()):
        raise OutputExistsError(f"{image_path} already exists")
    buf = io.BytesIO()
    Image.fromarray(frame.image).save(buf, format="PNG")
    _atomic_write(image_path, buf.getvalue())
    text = json.dumps(edit_manifest(frame), indent=2, sort_keys=True, ensure_ascii=False)
    _atomic_write(manifest_path, text.encode("utf-8"))
    return image_path, manifest_path


def load_edited(manifest_path: str | Path) -> EditedFrame:
    manifest_path = Path(manifest_path)
    d = json.loads(manifest_path.read_text(encoding="utf-8"))
    shape = tuple(d["image_size"])
    return EditedFrame(
        source_frame_id=d["source_frame_id"],
        image=read_rgb(manifest_path.with_suffix(".png")),
        plan=EditPlan.from_dict(d["plan"]),
        variant_index=int(d["variant_index"]),
        edited_region=rle_decode(d["edited_region_rle"], shape),
        info=d.get("info", {}),
        state=_unb64(d.get("state")),
        action=_unb64(d.get("action")),
    )


def write_dataset(root: str | Path, frames, *, detections: dict | None = None) -> Path:
    """Write ``frames`` in the input layout; ``detections`` maps frame_id to sidecar records."""
    root = Path(root)
    (root / "frames").mkdir(parents=True, exist_ok=True)
    episodes: dict[str, list[str]] = {}
    for fr in frames:
        episodes.setdefault(fr.episode_id, []).append(fr.frame_id)
        Image.fromarray(fr.image).save(root / "frames" / f"{fr.frame_id}.png", format="PNG")
        sidecar = {"instruction": fr.instruction, "episode_id": fr.episode_id}
        if fr.target_phrase:
            sidecar["target_phrase"] = fr.target_phrase
        if fr.state is not None:
            sidecar["state"] = _b64(fr.state)
        if fr.action is not None:
            sidecar["action"] = _b64(fr.action)
        (root / "frames" / f"{fr.frame_id}.json").write_text(json.dumps(sidecar, indent=2), encoding="utf-8")
        if fr.trajectory_footprint is not None:
            (root / "footprints").mkdir(exist_ok=True)
            Image.fromarray(fr.trajectory_footprint.astype(np.uint8) * 255).save(root / "footprints" / f"{fr.frame_id}.png", format="PNG")
        if detections and fr.frame_id in detections:
            (root / "frames" / f"{fr.frame_id}.detections.json").write_text(
                json.dumps({"objects": detections[fr.frame_id]}, indent=2), encoding="utf-8"
            )
    meta = {
        "schema_version": SCHEMA_VERSION,
        "episodes": [{"episode_id": ep, "frames": ids} for ep, ids in episodes.items()],
    }
    (root / "meta.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
    return root
