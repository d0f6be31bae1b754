"""CSV and manifest serialization for trajectories and bound curves.

One long-format CSV schema serves both kinds of curve:

    t,n_total,series,value,stderr[,term]

Trajectory files carry one row per (checkpoint, tracked series); bound
files add a ``term`` column carrying the breakdown term name, with the
``total`` row first at each checkpoint.  Every file starts with a
comment line recording the kind, the configuration hash, and the
repository version, so outputs are traceable and byte-stable for a
fixed seed.  Floats are written with ``repr`` precision and round-trip
exactly.
"""

from __future__ import annotations

import csv
import io
import json
import subprocess
from pathlib import Path

import numpy as np

from .bounds import BoundCurve
from .trajectory import SERIES_FIELDS, Trajectory

__all__ = [
    "git_describe",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "write_bound_csv",
    "read_bound_csv",
    "write_manifest",
]


def git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=10,
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def _fmt(x: float) -> str:
    return repr(float(x))


def _header_line(kind: str, meta: dict) -> str:
    h = meta.get("config_hash", "none")
    return f"# kind={kind} config={h} git={git_describe()}"


def write_trajectory_csv(path, traj: Trajectory) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(_header_line("trajectory", traj.meta) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "n_total", "series", "value", "stderr"])
        for name in traj.series_names:
            vals = traj.series(name)
            errs = traj.stderr(name)
            for i in range(len(traj)):
                w.writerow(
                    [
                        int(traj.t[i]),
                        int(traj.n_total[i]),
                        name,
                        _fmt(vals[i]),
                        "" if errs is None else _fmt(errs[i]),
                    ]
                )


def _read_rows(path) -> tuple[str, list[dict]]:
    path = Path(path)
    with path.open() as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ValueError(f"{path} lacks the header comment line")
        kind = "unknown"
        for tok in first[1:].split():
            if tok.startswith("kind="):
                kind = tok[5:]
        rows = list(csv.DictReader(fh))
    return kind, rows


def read_trajectory_csv(path) -> Trajectory:
    kind, rows = _read_rows(path)
    if kind != "trajectory":
        raise ValueError(f"{path} holds kind={kind}, not a trajectory")
    by_series: dict[str, list] = {}
    grid: list[tuple[int, int]] = []
    for r in rows:
        by_series.setdefault(r["series"], []).append(r)
    first = next(iter(by_series.values()))
    grid = [(int(r["t"]), int(r["n_total"])) for r in first]
    out = {
        "t": np.array([g[0] for g in grid], dtype=np.int64),
        "n_total": np.array([g[1] for g in grid], dtype=np.int64),
    }
    for name, rws in by_series.items():
        vfield, sfield = SERIES_FIELDS[name]
        out[vfield] = np.array([float(r["value"]) for r in rws])
        if rws[0]["stderr"] != "":
            out[sfield] = np.array([float(r["stderr"]) for r in rws])
    if "mse" not in out:
        raise ValueError(f"{path} has no ssg series")
    return Trajectory(**out)


def write_bound_csv(path, curve: BoundCurve) -> None:
    path = Path(path)
    kind = curve.meta.get("kind", "bound")
    with path.open("w", newline="") as fh:
        fh.write(
            _header_line("bound", curve.meta)
            + f" bound={kind} domain={curve.domain}\n"
        )
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "n_total", "series", "value", "stderr", "term"])
        names = ["total"] + list(curve.terms)
        for i in range(len(curve.t)):
            for term in names:
                v = curve.total[i] if term == "total" else curve.terms[term][i]
                w.writerow(
                    [int(curve.t[i]), int(curve.n_total[i]), kind, _fmt(v), "", term]
                )


def read_bound_csv(path) -> BoundCurve:
    path = Path(path)
    with path.open() as fh:
        first = fh.readline()
    if "kind=bound" not in first:
        raise ValueError(f"{path} is not a bound curve file")
    tokens = dict(
        tok.split("=", 1) for tok in first[1:].split() if "=" in tok
    )
    _, rows = _read_rows(path)
    by_term: dict[str, list] = {}
    for r in rows:
        by_term.setdefault(r["term"], []).append(r)
    total_rows = by_term.pop("total")
    t = np.array([int(r["t"]) for r in total_rows], dtype=np.int64)
    n_total = np.array([int(r["n_total"]) for r in total_rows], dtype=np.int64)
    return BoundCurve(
        t=t,
        n_total=n_total,
        total=np.array([float(r["value"]) for r in total_rows]),
        terms={
            term: np.array([float(r["value"]) for r in rws])
            for term, rws in by_term.items()
        },
        domain=tokens.get("domain", "mse"),
        meta={"kind": tokens.get("bound", "bound")},
    )


def write_manifest(path, entries: dict) -> None:
    """JSON manifest mapping output files to their configurations."""
    path = Path(path)
    blob = {"git": git_describe(), "files": entries}
    path.write_text(json.dumps(blob, indent=2, sort_keys=True) + "\n")
