"""Trace/CSV/JSON emission and run manifests."""
from __future__ import annotations

import csv
import json
import os
import platform
import sys
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy

from .solvers import SolveTrace

TRACE_HEADER = ("iter", "rse", "elapsed_s", "col_block", "row_block")


def fmt(v) -> str:
    """Round-trip-safe text for numbers; everything else via ``str``."""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_trace(path, trace: SolveTrace, timing: bool = True) -> None:
    rows = trace.rows()
    if not timing:
        rows = [(k, r, 0.0, c, j) for k, r, _, c, j in rows]
    write_csv(path, TRACE_HEADER, rows)


def machine_info() -> dict:
    return {
        "platform": platform.platform(),
        "machine": platform.machine(),
        "cpu_count": os.cpu_count(),
        "python": sys.version.split()[0],
    }


def versions() -> dict:
    from importlib.metadata import PackageNotFoundError, version
    try:
        own = version("rgdbek")
    except PackageNotFoundError:  # running from a source tree
        own = "unknown"
    return {"rgdbek": own, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": sys.version.split()[0]}


def trace_summary(trace: SolveTrace, timing: bool = True) -> dict:
    return {
        "status": trace.status,
        "message": trace.message,
        "iterations": trace.iterations,
        "final_rse": trace.final_rse,
        "elapsed_s": (trace.elapsed[-1] if trace.elapsed else 0.0) if timing else 0.0,
        "records": len(trace.iters),
    }


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, (np.floating, float)):
        f = float(o)
        return f if np.isfinite(f) else str(f)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, os.PathLike):
        return os.fspath(o)
    return o


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class RunManifest:
    """Everything needed to re-run a CLI command and reproduce its traces."""

    command: str
    args: dict
    seed: int
    config: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)
    versions: dict = field(default_factory=versions)

    def write(self, path) -> None:
        write_json(path, asdict(self))

    @classmethod
    def read(cls, path) -> "RunManifest":
        with open(path) as fh:
            d = json.load(fh)
        missing = {"command", "args", "seed"} - d.keys()
        if missing:
            raise ValueError(f"manifest lacks {sorted(missing)}")
        return cls(**{k: d[k] for k in ("command", "args", "seed", "config", "artifacts", "versions") if k in d})
