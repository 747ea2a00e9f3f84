"""On-disk outputs of a run: profiles, metrics table, mask dumps, manifest."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .config import RunConfig, dump_config
from .driver import RunMetrics

METRICS_HEADER = ("t", "V", "mu", "e1", "einf", "mass")
MASK_HEADER = ("level", "index", "x_position", "detail_value")
MANIFEST = "run.ini"


def time_label(t: float) -> str:
    t = float(t)
    return str(int(t)) if t.is_integer() else repr(t)


def write_profile(path: Path, x: np.ndarray, u: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("x", "u"))
        w.writerows((repr(float(a)), repr(float(b))) for a, b in zip(x, u))


def write_metrics(path: Path, metrics: Optional[RunMetrics]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRICS_HEADER)
        if metrics is not None:
            w.writerows(tuple(repr(float(v)) for v in row) for row in metrics.rows())


def write_mask(path: Path, rows: Iterable[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MASK_HEADER)
        for level, index, x, d in rows:
            w.writerow((level, index, repr(x), repr(d)))


def write_outputs(snapshots: Sequence, metrics: Optional[RunMetrics], mask_dumps: Sequence,
                  outdir, config: Optional[RunConfig] = None, x: Optional[np.ndarray] = None) -> Path:
    """Write ``profile_t<s>.csv``, ``mask_t<s>.csv``, ``metrics.csv`` and the manifest.

    ``snapshots`` are StateVectors; ``mask_dumps`` is one row list per snapshot.
    """
    out = Path(outdir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    for i, snap in enumerate(snapshots):
        label = time_label(snap.t)
        xs = x if x is not None else np.arange(snap.values.size) * snap.dx
        write_profile(out / f"profile_t{label}.csv", xs, snap.values)
        if i < len(mask_dumps):
            write_mask(out / f"mask_t{label}.csv", mask_dumps[i])
    write_metrics(out / "metrics.csv", metrics)
    if config is not None:
        (out / MANIFEST).write_text(dump_config(config))
    return out
