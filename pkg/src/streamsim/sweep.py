"""Grid search over run configurations with a CSV result table."""

from __future__ import annotations

import csv
import io
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .config import coerce

log = logging.getLogger(__name__)


@dataclass
class SweepSpec:
    params: dict  # name -> list of values
    metrics: Sequence[str] = ("mean_latency_ms", "wer", "emitted_words")
    sort_by: Optional[str] = "mean_latency_ms"
    descending: bool = False

    def __post_init__(self):
        if not self.params or any(len(v) == 0 for v in self.params.values()):
            raise ValueError("sweep needs at least one value for every parameter")

    def points(self) -> list[dict]:
        names = list(self.params)
        return [dict(zip(names, combo)) for combo in itertools.product(*(self.params[n] for n in names))]


def parse_sweep_arg(text: str) -> tuple[str, list]:
    """``name=v1,v2,...`` with values coerced by the config key type."""
    name, found, values = text.partition("=")
    if not found:
        raise ValueError(f"sweep argument must look like name=v1,v2: {text!r}")
    name = name.strip()
    return name, [coerce(name, v.strip()) for v in values.split(",") if v.strip()]


@dataclass
class SweepRow:
    point: dict
    metrics: dict = field(default_factory=dict)
    error: Optional[str] = None


def grid_search(spec: SweepSpec, base: dict, runner: Callable[[dict], object], jobs: int = 1) -> list[SweepRow]:
    """Run ``runner`` on every grid point; one row per point, failures kept."""
    points = spec.points()

    def one(point):
        cfg = dict(base)
        cfg.update(point)
        try:
            result = runner(cfg)
        except Exception as e:  # a failed point must not stop the sweep
            log.warning("run %s failed: %s", point, e)
            return SweepRow(point, dict.fromkeys(spec.metrics), f"{type(e).__name__}: {e}")
        return SweepRow(point, {m: result.metrics.get(m) for m in spec.metrics})

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            rows = list(pool.map(one, points))  # map keeps grid order
    else:
        rows = [one(p) for p in points]
    return sort_rows(rows, spec)


def sort_rows(rows: list[SweepRow], spec: SweepSpec) -> list[SweepRow]:
    if not spec.sort_by:
        return rows
    key = spec.sort_by

    def sort_key(row):
        v = row.metrics.get(key)
        missing = v is None
        return (missing, 0 if missing else (-v if spec.descending else v))

    return sorted(rows, key=sort_key)  # stable: ties stay in grid order


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(round(v, 9))
    return str(v)


def rows_to_csv(rows: list[SweepRow], spec: SweepSpec) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(spec.params) + list(spec.metrics) + ["error"])
    for row in rows:
        writer.writerow(
            [_cell(row.point[p]) for p in spec.params]
            + [_cell(row.metrics.get(m)) for m in spec.metrics]
            + [row.error or ""]
        )
    return buf.getvalue()
