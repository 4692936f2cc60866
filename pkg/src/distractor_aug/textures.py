"""Texture store for restyling: a directory of PNGs plus ``index.json``."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .validation import check_image

MIN_TEXTURE_SIZE = 32


@dataclass(eq=False)
class TextureRecord:
    texture_id: str
    image: np.ndarray
    category: str

    def __post_init__(self):
        self.image = check_image(self.image, min_size=MIN_TEXTURE_SIZE, name=f"texture {self.texture_id}")


class TextureStore:
    """Mapping of texture id to :class:`TextureRecord`.

    On disk: ``index.json`` holds ``{"textures": [{"texture_id", "file",
    "category"}, ...]}`` with ``file`` relative to the directory.
    """

    def __init__(self, records=()):
        self._records: dict[str, TextureRecord] = {}
        for rec in records:
            self.add(rec)

    def add(self, record: TextureRecord) -> None:
        if record.texture_id in self._records:
            raise ValueError(f"duplicate texture id {record.texture_id!r}")
        self._records[record.texture_id] = record

    def __getitem__(self, texture_id: str) -> TextureRecord:
        try:
            return self._records[texture_id]
        except KeyError:
            raise KeyError(f"unknown texture id {texture_id!r}") from None

    def __contains__(self, texture_id) -> bool:
        return texture_id in self._records

    def __len__(self) -> int:
        return len(self._records)

    def ids(self) -> list[str]:
        return sorted(self._records)

    @classmethod
    def from_directory(cls, root: str | Path) -> "TextureStore":
        root = Path(root)
        index = json.loads((root / "index.json").read_text(encoding="utf-8"))
        store = cls()
        for entry in index["textures"]:
            with Image.open(root / entry["file"]) as im:
                image = np.asarray(im.convert("RGB")).copy()
            store.add(TextureRecord(entry["texture_id"], image, entry.get("category", "")))
        return store

    def save(self, root: str | Path) -> None:
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        entries = []
        for tid in self.ids():
            rec = self._records[tid]
            Image.fromarray(rec.image).save(root / f"{tid}.png", format="PNG")
            entries.append({"texture_id": tid, "file": f"{tid}.png", "category": rec.category})
        (root / "index.json").write_text(json.dumps({"textures": entries}, indent=2), encoding="utf-8")

    @classmethod
    def builtin(cls, size: int = 64) -> "TextureStore":
        """A handful of procedural patterns, enough to run restyling offline."""
        yy, xx = np.mgrid[:size, :size]

        def two_tone(pattern, a, b):
            img = np.empty((size, size, 3), dtype=np.uint8)
            img[pattern] = a
            img[~pattern] = b
            return img

        rng = np.random.default_rng(0)
        noise = rng.integers(90, 170, size=(size, size, 1), dtype=np.uint8)
        return cls(
            [
                TextureRecord("striped-01", two_tone((xx // 6) % 2 == 0, (230, 230, 230), (30, 30, 30)), "striped"),
                TextureRecord("dotted-01", two_tone((xx % 12 - 6) ** 2 + (yy % 12 - 6) ** 2 < 10, (200, 40, 40), (245, 235, 210)), "dotted"),
                TextureRecord("checkered-01", two_tone(((xx // 8) + (yy // 8)) % 2 == 0, (40, 60, 160), (220, 200, 60)), "checkered"),
                TextureRecord("zigzagged-01", two_tone(((xx + np.abs((yy % 16) - 8)) // 5) % 2 == 0, (40, 140, 60), (230, 230, 200)), "zigzagged"),
                TextureRecord("grainy-01", np.concatenate([noise + 40, noise, noise - 50], axis=2), "grainy"),
            ]
        )
