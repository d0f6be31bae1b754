"""Per-run and replication-averaged error records.

A trajectory holds, at each recorded block, the block index, the running
sample count, and the squared errors of the raw iterate and of the
tracked averages (plus the fourth-power error when requested).
Replication-averaged trajectories additionally carry the Monte-Carlo
standard error of each mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Trajectory", "SERIES_FIELDS"]

# serialization name -> (value field, stderr field)
SERIES_FIELDS = {
    "ssg": ("mse", "mse_se"),
    "assg": ("mse_avg", "mse_avg_se"),
    "wassg": ("mse_wavg", "mse_wavg_se"),
    "m4": ("m4", "m4_se"),
}


@dataclass
class Trajectory:
    """Error curves of one run or of a replication average.

    ``t`` and ``n_total`` are strictly increasing; untracked series are
    ``None``.  ``meta`` records the configuration hash, seed range, and
    replication count where applicable.
    """

    t: np.ndarray
    n_total: np.ndarray
    mse: np.ndarray
    mse_avg: np.ndarray | None = None
    mse_wavg: np.ndarray | None = None
    m4: np.ndarray | None = None
    mse_se: np.ndarray | None = None
    mse_avg_se: np.ndarray | None = None
    mse_wavg_se: np.ndarray | None = None
    m4_se: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if np.any(np.diff(self.n_total) <= 0):
            raise ValueError("n_total must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def series_names(self) -> list[str]:
        return [s for s, (f, _) in SERIES_FIELDS.items() if getattr(self, f) is not None]

    def series(self, name: str) -> np.ndarray:
        vals = getattr(self, SERIES_FIELDS[name][0])
        if vals is None:
            raise KeyError(f"series {name!r} not tracked in this trajectory")
        return vals

    def stderr(self, name: str) -> np.ndarray | None:
        return getattr(self, SERIES_FIELDS[name][1])

    def equals(self, other: "Trajectory") -> bool:
        """Exact equality of grids and series (NaN-safe), ignoring meta."""

        def same(a, b):
            if a is None or b is None:
                return a is None and b is None
            return np.array_equal(np.asarray(a), np.asarray(b), equal_nan=True)

        fields = ["t", "n_total"] + [f for fs in SERIES_FIELDS.values() for f in fs]
        return all(same(getattr(self, f), getattr(other, f)) for f in fields)
