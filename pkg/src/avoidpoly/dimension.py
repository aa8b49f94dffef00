"""Box-counting estimates, sumset dimension checks and coverage profiles.

All checks here are empirical. The box-counting slope is used as a stand-in
for both the upper box dimension and the Hausdorff dimension; since
``dim_H <= upper dim_B`` the substitution can only make the sufficient
condition in :func:`check_avoidance_condition` harder to satisfy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import CountableEnumeration, SampledCompactSet, minkowski_sum, SUMSET_CAP

# points sitting on a cell boundary up to rounding are snapped onto it
_SNAP = 1e-9


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class DimensionEstimate:
    slope: float
    scales: list[float]
    counts: list[int]
    r2: float
    ambient_dim: int = 0
    note: str = ""

    def to_dict(self) -> dict:
        return {"slope": self.slope, "scales": list(self.scales), "counts": list(self.counts), "r2": self.r2}


@dataclass(frozen=True)
class CoverageProfile:
    scales: list[float]
    fractions: list[float]

    def strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.fractions, self.fractions[1:]))


def _cells(points: np.ndarray, scale: float) -> np.ndarray:
    return np.floor(points / scale + _SNAP).astype(np.int64)


def box_count(S: SampledCompactSet | np.ndarray, scale: float) -> int:
    """Number of occupied cells of the origin-anchored grid with side ``scale``.

    Cells are half-open, ``[i*s, (i+1)*s)`` along each axis.
    """
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    pts = S.points if isinstance(S, SampledCompactSet) else np.asarray(S, dtype=float)
    cells = _cells(pts.reshape(pts.shape[0], -1), scale)
    cells -= cells.min(axis=0)
    span = cells.max(axis=0) + 1
    if float(np.prod(span.astype(float))) < 2.0 ** 62:
        # mixed-radix key per cell; far cheaper than a row-wise unique
        key = np.zeros(cells.shape[0], dtype=np.int64)
        for i in range(cells.shape[1]):
            key = key * span[i] + cells[:, i]
        return int(np.unique(key).shape[0])
    return int(np.unique(cells, axis=0).shape[0])


def scale_ladder(k_min: int, k_max: int, base: int = 2) -> list[float]:
    """``base**-k`` for ``k = k_min .. k_max``, coarse to fine."""
    if base not in (2, 3):
        raise ValueError("only dyadic (2) and triadic (3) ladders are supported")
    return [float(base) ** -k for k in range(k_min, k_max + 1)]


def default_ladder(S: SampledCompactSet, base: int = 2, levels: int = 7) -> list[float]:
    """Ladder starting a few cells across the bounding box and stopping above the resolution."""
    lo, hi = S.bounding_box()
    extent = float(np.max(hi - lo))
    if extent <= 0:
        extent = 1.0
    k_min = int(math.floor(-math.log(extent, base))) + 2
    scales = []
    k = k_min
    while len(scales) < levels:
        s = float(base) ** -k
        if s < S.resolution_h:
            break
        scales.append(s)
        k += 1
    return scales


def estimate_box_dimension(S: SampledCompactSet, scales=None, base: int = 2) -> DimensionEstimate:
    """Least-squares slope of ``log N(s)`` against ``log(1/s)``.

    Scales below ``S.resolution_h`` are discarded: counting boxes smaller than
    the sampling resolution measures the sample, not the set.
    """
    if scales is None:
        scales = default_ladder(S, base)
    scales = sorted({float(s) for s in scales if s >= S.resolution_h and s > 0}, reverse=True)
    if len(scales) < 2:
        raise DimensionError(
            f"need at least 2 scales above resolution_h={S.resolution_h:g}, got {len(scales)}"
        )
    counts = [box_count(S, s) for s in scales]
    x = -np.log(np.asarray(scales))
    y = np.log(np.asarray(counts, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - float(np.sum(resid ** 2)) / ss_tot)
    slope = float(slope)
    if abs(slope) < 1e-12:
        slope = 0.0
    return DimensionEstimate(slope, scales, counts, r2, S.dim)


def enumeration_dimension(A: CountableEnumeration) -> DimensionEstimate:
    """Countable sets have Hausdorff dimension 0; the estimate is forced there."""
    return DimensionEstimate(0.0, [], [], 1.0, A.dim, note="countable set: dim_H forced to 0 (truncated enumeration)")


def coverage_profile(S: SampledCompactSet, scales) -> CoverageProfile:
    """Fraction of the grid cells spanning the bounding box that contain a sample."""
    lo, hi = S.bounding_box()
    fracs = []
    used = []
    for s in scales:
        s = float(s)
        n_cells = np.prod(_cells(hi, s) - _cells(lo, s) + 1)
        fracs.append(float(box_count(S, s) / n_cells))
        used.append(s)
    return CoverageProfile(used, fracs)


def check_sum_dim_bound(A: SampledCompactSet, K: SampledCompactSet, sign: int = 1,
                        tolerance: float = 0.15, scales=None, base: int = 2,
                        cap: int = SUMSET_CAP) -> dict:
    """Empirical form of ``dim(A +- K) <= dim(A) + dim(K)``.

    Every estimate runs on the same ladder, restricted to scales above the
    resolution of the sumset.
    """
    S = minkowski_sum(A, K, sign, cap=cap)
    if scales is None:
        scales = default_ladder(S, base)
    scales = [s for s in scales if s >= S.resolution_h]
    est_a = estimate_box_dimension(A, scales)
    est_k = estimate_box_dimension(K, scales)
    est_s = estimate_box_dimension(S, scales)
    bound = est_a.slope + est_k.slope + tolerance
    return {
        "kind": "empirical",
        "dim_A": est_a.slope,
        "dim_K": est_k.slope,
        "dim_sum": est_s.slope,
        "bound": bound,
        "tolerance": tolerance,
        "holds": est_s.slope <= bound,
        "estimates": {"A": est_a.to_dict(), "K": est_k.to_dict(), "sum": est_s.to_dict()},
    }


def check_avoidance_condition(dimK: DimensionEstimate | float, dimA: DimensionEstimate | float,
                              m: int, safety: float = 0.1) -> tuple[bool, float]:
    """Return ``(dimK + dimA < m - safety, m - dimK - dimA)``."""
    k = dimK.slope if isinstance(dimK, DimensionEstimate) else float(dimK)
    a = dimA.slope if isinstance(dimA, DimensionEstimate) else float(dimA)
    slack = m - (k + a)
    return slack > safety, slack


def loglog_svg(est: DimensionEstimate, path) -> None:
    """Write a log-log plot of the box counts (needs matplotlib)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    x = -np.log(np.asarray(est.scales))
    y = np.log(np.asarray(est.counts, dtype=float))
    fig, ax = plt.subplots(figsize=(4, 3))
    ax.plot(x, y, "o")
    b = np.mean(y) - est.slope * np.mean(x)
    ax.plot(x, est.slope * x + b, "-", label=f"slope {est.slope:.4f}")
    ax.set_xlabel("log(1/scale)")
    ax.set_ylabel("log(count)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
