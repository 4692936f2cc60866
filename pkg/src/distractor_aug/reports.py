"""Metric report files (CSV rows of ``metric,group,value``) and figures."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

HEADER = ("metric", "group", "value")
REPORT_FILES = ("ssim.csv", "fid.csv", "apa.csv")


def fmt(value: float) -> str:
    return f"{value:.6f}"


def write_rows(path: str | Path, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for metric, group, value in rows:
            w.writerow((metric, group, fmt(value) if isinstance(value, float) else value))
    return path


def read_rows(path: str | Path) -> list[tuple[str, str, float]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return [(r["metric"], r["group"], float(r["value"])) for r in reader]


def summarize(values, metric: str) -> list[tuple[str, str, float]]:
    v = np.asarray(values, dtype=np.float64)
    return [
        (metric, "count", float(v.size)),
        (metric, "mean", float(v.mean())),
        (metric, "median", float(np.median(v))),
        (metric, "min", float(v.min())),
        (metric, "max", float(v.max())),
    ]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_ssim_hist(values, path: str | Path, window: int | None = None) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.hist(values, bins=20, range=(min(0.0, float(np.min(values))), 1.0), color="#4c72b0", edgecolor="white")
    ax.set_xlabel("SSIM")
    ax.set_ylabel("count")
    ax.set_title("SSIM distribution" + (f" (uniform {window}x{window} window)" if window else ""))
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def plot_fid_bar(scores: dict[str, float], path: str | Path) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    names = list(scores)
    ax.bar(names, [scores[n] for n in names], color="#dd8452")
    ax.set_ylabel("FID")
    ax.set_title("Fréchet distance per operation")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def apa_table(scores: dict[str, float]) -> str:
    order = [lvl for lvl in ("LC", "MC", "HC", "UNCLASSIFIED") if lvl in scores]
    head = "| " + " | ".join(f"APA_{lvl}" for lvl in order) + " |"
    sep = "|" + "|".join("---" for _ in order) + "|"
    body = "| " + " | ".join(f"{scores[lvl]:.2f}" for lvl in order) + " |"
    return "\n".join([head, sep, body]) + "\n"


def build_report(run_dir: str | Path) -> dict[str, Path]:
    """Figures, an APA table and ``summary.csv`` from whatever metric CSVs exist."""
    run_dir = Path(run_dir)
    present = [name for name in REPORT_FILES if (run_dir / name).exists()]
    if not present:
        raise FileNotFoundError(f"{run_dir} holds none of {', '.join(REPORT_FILES)}")
    written: dict[str, Path] = {}
    summary: list[tuple[str, str, float]] = []
    if "ssim.csv" in present:
        per_frame = [v for m, g, v in read_rows(run_dir / "ssim.csv") if m == "ssim"]
        if per_frame:
            written["ssim_hist"] = plot_ssim_hist(per_frame, run_dir / "ssim_hist.png")
            summary += summarize(per_frame, "ssim")
    if "fid.csv" in present:
        scores = {g: v for m, g, v in read_rows(run_dir / "fid.csv") if m == "fid"}
        if scores:
            written["fid_bar"] = plot_fid_bar(scores, run_dir / "fid_bar.png")
            summary += [("fid", g, v) for g, v in scores.items()]
    if "apa.csv" in present:
        scores = {g: v for m, g, v in read_rows(run_dir / "apa.csv") if m == "apa"}
        if scores:
            path = run_dir / "apa_table.md"
            path.write_text(apa_table(scores), encoding="utf-8")
            written["apa_table"] = path
            summary += [("apa", g, v) for g, v in scores.items()]
    written["summary"] = write_rows(run_dir / "summary.csv", summary)
    return written
