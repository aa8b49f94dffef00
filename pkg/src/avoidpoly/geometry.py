"""Point sets, countable enumerations and the metric primitives on them.

Points are plain 1-D float arrays. The complex plane is stored as d = 2 with
columns ``[Re, Im]``; the complex modulus is then the Euclidean norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

#: Default cap on ``|S| * |T|`` for :func:`minkowski_sum`.
SUMSET_CAP = 4_000_000


class DimensionMismatch(ValueError):
    pass


class SumsetTooLarge(ValueError):
    pass


def as_point(p, dim: int | None = None) -> np.ndarray:
    """Coerce ``p`` to a finite 1-D float array, optionally checking its dimension."""
    arr = np.atleast_1d(np.asarray(p, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"a point must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatch(f"expected a point of dimension {dim}, got {arr.shape[0]}")
    return arr


@dataclass(frozen=True)
class SampledCompactSet:
    """Finite sample of a compact set ``K`` plus a declared covering radius.

    Every point of the true set is assumed to lie within ``resolution_h`` of
    some sample. The points array is made read-only on construction.
    """

    points: np.ndarray
    resolution_h: float = 0.0
    label: str = ""
    is_complex_plane: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ValueError("a sampled compact set needs a non-empty (n, d) array of points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("sample points must be finite")
        h = float(self.resolution_h)
        if not (math.isfinite(h) and h >= 0):
            raise ValueError(f"resolution_h must be finite and >= 0, got {self.resolution_h}")
        if self.is_complex_plane and pts.shape[1] != 2:
            raise ValueError("is_complex_plane requires d = 2")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "resolution_h", h)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.points.min(axis=0), self.points.max(axis=0)

    def diameter_bound(self) -> float:
        """Diagonal of the bounding box (an upper bound on the diameter)."""
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    def with_points(self, points, resolution_h: float | None = None, label: str | None = None):
        return SampledCompactSet(
            points,
            self.resolution_h if resolution_h is None else resolution_h,
            self.label if label is None else label,
            self.is_complex_plane and np.shape(points)[-1] == 2,
        )


@dataclass(frozen=True)
class CountableEnumeration:
    """A deterministic stream ``a_1, a_2, ...`` truncated at ``truncation_N``.

    ``generator`` maps a 1-based index to a point and must be pure.
    """

    generator: Callable[[int], np.ndarray]
    truncation_N: int
    dim: int
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.truncation_N) < 0:
            raise ValueError("truncation_N must be >= 0")
        object.__setattr__(self, "truncation_N", int(self.truncation_N))

    def __len__(self) -> int:
        return self.truncation_N

    def __getitem__(self, j: int) -> np.ndarray:
        """Return ``a_j`` (1-based)."""
        if j < 1:
            raise IndexError("enumerations are 1-based")
        return as_point(self.generator(j), self.dim)

    def points(self, n: int | None = None) -> np.ndarray:
        n = self.truncation_N if n is None else n
        if n == 0:
            return np.empty((0, self.dim))
        return np.array([self[j] for j in range(1, n + 1)])

    def truncated(self, n: int) -> "CountableEnumeration":
        return CountableEnumeration(self.generator, n, self.dim, self.name, dict(self.params))

    def spec_string(self) -> str:
        params = {k: v for k, v in self.params.items() if k != "N"}
        body = ",".join([f"N={self.truncation_N}"] + [f"{k}={v}" for k, v in sorted(params.items())])
        return f"{self.name}:{body}"


def finite_enumeration(points, name: str = "finite") -> CountableEnumeration:
    """Wrap an explicit list of points as a (finite) enumeration."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1) if pts.size else pts.reshape(0, 1)
    pts = pts.copy()
    pts.setflags(write=False)

    def gen(j: int) -> np.ndarray:
        return pts[j - 1]

    return CountableEnumeration(gen, pts.shape[0], pts.shape[1], name)


def _check_dim(p: np.ndarray, S: SampledCompactSet):
    if p.shape[0] != S.dim:
        raise DimensionMismatch(f"point has dimension {p.shape[0]}, set has dimension {S.dim}")


def _sq_dists(X: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Squared distances, shape ``(len(P), len(X))``, summed coordinate by coordinate.

    Both distance functions go through here so they round identically.
    """
    acc = (X[None, :, 0] - P[:, 0, None]) ** 2
    for i in range(1, X.shape[1]):
        acc += (X[None, :, i] - P[:, i, None]) ** 2
    return acc


def dist_point_to_set(p, S: SampledCompactSet) -> float:
    """Exact Euclidean distance from ``p`` to the sample points of ``S``.

    The caller is responsible for discounting ``S.resolution_h`` when a claim
    about the true set is needed.
    """
    p = as_point(p)
    _check_dim(p, S)
    return float(np.sqrt(np.min(_sq_dists(S.points, p.reshape(1, -1))[0])))


def dists_points_to_set(P, S: SampledCompactSet, block: int | None = None) -> np.ndarray:
    """Vectorised :func:`dist_point_to_set` for each row of ``P``.

    Rows are processed ``block`` at a time (default: about 2**16 pairs per block).
    """
    P = np.asarray(P, dtype=float)
    if P.ndim == 1:
        P = P.reshape(1, -1)
    if P.shape[1] != S.dim:
        raise DimensionMismatch(f"points have dimension {P.shape[1]}, set has dimension {S.dim}")
    out = np.empty(P.shape[0])
    X = S.points
    if block is None:
        block = max(1, (1 << 16) // len(S))
    for start in range(0, P.shape[0], block):
        out[start:start + block] = np.sqrt(np.min(_sq_dists(X, P[start:start + block]), axis=1))
    return out


def translate(S: SampledCompactSet, xi) -> SampledCompactSet:
    xi = as_point(xi)
    _check_dim(xi, S)
    return S.with_points(S.points + xi)


def minkowski_sum(S: SampledCompactSet, T: SampledCompactSet, sign: int = 1,
                  cap: int = SUMSET_CAP) -> SampledCompactSet:
    """All pairwise sums ``s + t`` (``sign=+1``) or differences ``s - t`` (``sign=-1``)."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if S.dim != T.dim:
        raise DimensionMismatch(f"cannot add sets of dimension {S.dim} and {T.dim}")
    size = len(S) * len(T)
    if size > cap:
        raise SumsetTooLarge(
            f"sumset would have {size} points (cap {cap}); subsample one of the sets first"
        )
    pts = (S.points[:, None, :] + sign * T.points[None, :, :]).reshape(-1, S.dim)
    op = "+" if sign == 1 else "-"
    return SampledCompactSet(
        pts,
        S.resolution_h + T.resolution_h,
        f"({S.label}){op}({T.label})",
        S.is_complex_plane and T.is_complex_plane,
    )


def subsample(S: SampledCompactSet, n: int) -> SampledCompactSet:
    """Deterministic evenly strided subsample (the covering radius is not updated)."""
    if n >= len(S):
        return S
    idx = np.linspace(0, len(S) - 1, n).round().astype(int)
    return S.with_points(S.points[np.unique(idx)])
