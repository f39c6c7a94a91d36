"""Atomic file output and CSV/JSON tables."""

import csv
import io
import json
import os
import tempfile
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from confmorph.models.parameterization import AngleDistortion


def atomic_write_text(path: Path, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float | np.floating):
        return f"{float(value):.17g}"
    if value is None:
        return ""
    return str(value)


def format_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    atomic_write_text(path, format_csv(header, rows))


def write_json(path: Path, payload: dict[str, Any]) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_angle_histogram(path: Path, stats: AngleDistortion) -> None:
    """Histogram rows ``bin_start,bin_end,count`` followed by a ``mean,p95,max`` summary file."""
    rows = [
        (float(lo), float(hi), int(count))
        for lo, hi, count in zip(stats.bin_edges[:-1], stats.bin_edges[1:], stats.counts, strict=True)
    ]
    write_csv(path, ("bin_start", "bin_end", "count"), rows)
    write_csv(path.with_name(path.stem + "_summary.csv"), ("mean", "p95", "max"), [(stats.mean, stats.p95, stats.max)])


def frame_filename(t: float) -> str:
    """Zero-padded frame name with 4 decimals, e.g. ``frame_0000.5000.obj``."""
    return f"frame_{t:09.4f}.obj"
