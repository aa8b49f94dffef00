"""Small shifts of a sampled set that keep it away from a list of forbidden points.

Two searches are provided. :func:`shift_search_deterministic` builds the shift
one forbidden point at a time, shrinking the allowed step geometrically so the
earlier distances survive every later step. :func:`shift_search_randomized`
draws shifts uniformly from the ball and keeps the best of each batch.

Both return a :class:`ShiftCertificate`. The sampled set's ``resolution_h``
is read as the covering radius of the (image) samples, and every
"certified" flag subtracts it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .approx import PolynomialMap, evaluate
from .geometry import (
    CountableEnumeration,
    SampledCompactSet,
    dists_points_to_set,
    translate,
)


def fp_floor(a: np.ndarray) -> float:
    """Smallest distance that counts as positive next to the point ``a``."""
    return 1e-12 * (1.0 + float(np.linalg.norm(a)))


class ShiftSearchFailure(RuntimeError):
    def __init__(self, message: str, j: int | None = None, a_j=None, best=None):
        self.j = j
        self.a_j = None if a_j is None else np.asarray(a_j)
        self.best = best
        super().__init__(message)


@dataclass(frozen=True)
class LedgerRow:
    j: int
    a: np.ndarray
    xi_j: np.ndarray
    delta: float
    eps: float
    realized: float

    def proof_margin(self, cover_radius: float) -> float:
        """Sample-to-true-set margin guaranteed by the construction: ``delta - eps - r``."""
        return self.delta - self.eps - cover_radius

    def realized_margin(self, cover_radius: float) -> float:
        return self.realized - cover_radius

    def to_dict(self, cover_radius: float) -> dict:
        return {
            "j": self.j,
            "a_j": [float(v) for v in self.a],
            "xi_j": [float(v) for v in self.xi_j],
            "delta_j": self.delta,
            "eps_j": self.eps,
            "realized": self.realized,
            "proof_margin": self.proof_margin(cover_radius),
            "realized_margin": self.realized_margin(cover_radius),
        }


@dataclass(frozen=True)
class ShiftCertificate:
    xi: np.ndarray
    ledger: list[LedgerRow]
    eps_budget: float
    image_cover_radius: float
    method: str
    eps0: float = 0.0
    trials_used: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.xi))

    def proof_margins(self) -> np.ndarray:
        return np.array([row.proof_margin(self.image_cover_radius) for row in self.ledger])

    def realized_margins(self) -> np.ndarray:
        return np.array([row.realized_margin(self.image_cover_radius) for row in self.ledger])

    def proof_certified(self) -> bool:
        """Every row has ``delta_j - eps_j - r > 0``."""
        return bool(np.all(self.proof_margins() > 0))

    def certified(self) -> bool:
        """Every forbidden point stays more than ``r`` away from the shifted samples."""
        return bool(np.all(self.realized_margins() > 0))

    def sound(self) -> bool:
        """Budget respected and every row satisfies ``realized >= delta - eps > 0``."""
        if not self.norm < self.eps_budget:
            return False
        return all(row.realized >= row.delta - row.eps > 0 for row in self.ledger)

    def to_dict(self) -> dict:
        r = self.image_cover_radius
        return {
            "method": self.method,
            "xi": [float(v) for v in self.xi],
            "xi_norm": self.norm,
            "eps_budget": self.eps_budget,
            "eps0": self.eps0,
            "image_cover_radius": r,
            "trials_used": self.trials_used,
            "certified": self.certified(),
            "proof_certified": self.proof_certified(),
            "ledger": [row.to_dict(r) for row in self.ledger],
        }


def _directions(d: int, count: int) -> np.ndarray:
    """Deterministic, roughly uniform unit directions.

    Golden-angle sequence in the plane, a Fibonacci spiral on the 2-sphere,
    a fixed-seed Gaussian sample in higher dimensions.
    """
    if d == 1:
        return np.array([[1.0], [-1.0]])
    golden = math.pi * (3.0 - math.sqrt(5.0))
    i = np.arange(count)
    if d == 2:
        th = i * golden
        return np.column_stack([np.cos(th), np.sin(th)])
    if d == 3:
        z = 1.0 - 2.0 * (i + 0.5) / count
        r = np.sqrt(1.0 - z * z)
        th = i * golden
        return np.column_stack([r * np.cos(th), r * np.sin(th), z])
    g = np.random.default_rng(0x5EED).standard_normal((count, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass(frozen=True)
class ProbePolicy:
    """How the deterministic search picks ``xi_j`` when the current shift is too close to ``a_j``.

    The current shift is kept while its distance to ``a_j`` is at least the
    target ``2 r + fp_floor`` (room for ``eps_j <= delta_j / 2`` and the
    covering radius ``r``). Otherwise candidates are placed on spheres of
    radius ``f * eps_{j-1}`` for each ``f`` in ``radii``. Each candidate (and
    the current shift) is scored on the next ``lookahead`` forbidden points
    ``a_j .. a_{j+lookahead-1}`` by its worst shortfall below the target; the
    smallest shortfall wins, then the largest ``delta_j``, then the lowest
    index. The window does not depend on the truncation, so extending a run
    never changes earlier rows. ``lookahead=1`` scores on ``delta_j`` alone.

    Steps shorter than ``min_step`` (relative to the coordinate magnitude)
    are not attempted: they vanish in rounding.
    """

    radii: tuple[float, ...] = (1 / 4, 1 / 2.5)
    directions: int = 32
    eps0_fraction: float = 0.9
    carry: float = 0.99
    lazy: bool = True
    lookahead: int = 256
    min_step: float = 1e-12

    def __post_init__(self):
        if not all(0 < f < 0.5 for f in self.radii):
            raise ValueError("probe radii must lie strictly between 0 and 1/2 of eps_{j-1}")
        if not 0 < self.eps0_fraction < 1:
            raise ValueError("eps0_fraction must lie in (0, 1)")
        if not 0 < self.carry < 1:
            raise ValueError("carry must lie in (0, 1)")
        if self.lookahead < 1:
            raise ValueError("lookahead must be >= 1")


def _realized(S: SampledCompactSet, xi: np.ndarray, A_pts: np.ndarray) -> np.ndarray:
    if A_pts.shape[0] == 0:
        return np.empty(0)
    return dists_points_to_set(A_pts, translate(S, xi))


class _Window:
    """Forbidden points ``a_j, a_{j+1}, ...`` fetched lazily from the enumeration."""

    def __init__(self, A: CountableEnumeration):
        self.A = A
        self.pts: list[np.ndarray] = []

    def get(self, j: int, size: int) -> np.ndarray:
        size = min(size, self.A.truncation_N - j + 1)
        while len(self.pts) < j - 1 + size:
            self.pts.append(self.A[len(self.pts) + 1])
        return np.array(self.pts[j - 1:j - 1 + size])


def shift_search_deterministic(S: SampledCompactSet, A: CountableEnumeration, eps_budget: float,
                               probe_policy: ProbePolicy | None = None,
                               resume: ShiftCertificate | None = None) -> ShiftCertificate:
    """Recursive construction of a shift ``xi`` with ``||xi|| < eps_budget``.

    Starting from ``xi_0 = 0`` and ``eps_0 = 0.9 * eps_budget``, for each
    ``j = 1 .. N`` a shift ``xi_j`` with ``||xi_j - xi_{j-1}|| < eps_{j-1} / 2``
    is chosen so that ``delta_j = d(S + xi_j, a_j) > 0``, then
    ``eps_j = min(delta_j / 2, carry * eps_{j-1} / 2)``. Later steps move the
    shift by less than ``eps_j`` in total, so
    ``d(S + xi_N, a_j) >= delta_j - eps_j >= delta_j / 2``.

    Passing a previous certificate as ``resume`` continues the construction
    from its last row; rows already present are reproduced unchanged.
    """
    policy = probe_policy or ProbePolicy()
    if not eps_budget > 0:
        raise ValueError("eps_budget must be positive")
    if A.dim != S.dim:
        raise ValueError(f"forbidden points have dimension {A.dim}, set has dimension {S.dim}")
    r = S.resolution_h
    rows: list[LedgerRow] = []
    xi = np.zeros(S.dim)
    eps_prev = policy.eps0_fraction * eps_budget
    eps0 = eps_prev
    if resume is not None:
        if resume.method != "deterministic" or resume.eps_budget != eps_budget:
            raise ValueError("can only resume a deterministic search with the same budget")
        rows = list(resume.ledger)
        eps0 = resume.eps0
        if rows:
            xi = np.array(rows[-1].xi_j)
            eps_prev = rows[-1].eps
    dirs = _directions(S.dim, policy.directions)
    tree = cKDTree(S.points)
    window = _Window(A)
    magnitude = 1.0 + float(np.max(np.abs(S.points)))

    for j in range(len(rows) + 1, A.truncation_N + 1):
        a = A[j]
        floor = fp_floor(a)
        delta = float(_realized(S, xi, a.reshape(1, -1))[0])
        step = max(policy.radii) * eps_prev
        if (not policy.lazy or delta < 2.0 * r + floor) and step > policy.min_step * magnitude:
            cands = np.concatenate([xi.reshape(1, -1)] + [xi + f * eps_prev * dirs for f in policy.radii])
            W = window.get(j, policy.lookahead)
            targets = 2.0 * r + 1e-12 * (1.0 + np.linalg.norm(W, axis=1))
            # d(S + c, w) = d(S, w - c)
            dist, _ = tree.query((W[None, :, :] - cands[:, None, :]).reshape(-1, S.dim))
            dist = dist.reshape(cands.shape[0], W.shape[0])
            shortfall = np.min(np.minimum(dist - targets, 0.0), axis=1)
            if not policy.lazy:
                shortfall[0] = -np.inf
            best = np.flatnonzero(shortfall == shortfall.max())
            k = int(best[np.argmax(dist[best, 0])])
            if k:
                xi = cands[k]
                delta = float(_realized(S, xi, a.reshape(1, -1))[0])
        if not delta > floor:
            raise ShiftSearchFailure(
                f"no admissible shift found for forbidden point j={j} at {a.tolist()} "
                f"(best distance {delta:.3g}, step radius {eps_prev / 2:.3g})",
                j, a,
            )
        eps_j = min(0.5 * delta, policy.carry * eps_prev / 2)
        rows.append(LedgerRow(j, a, xi.copy(), delta, eps_j, float("nan")))
        eps_prev = eps_j

    final = rows[-1].xi_j if rows else np.zeros(S.dim)
    A_pts = np.array([row.a for row in rows]).reshape(len(rows), S.dim)
    realized = _realized(S, final, A_pts)
    rows = [LedgerRow(row.j, row.a, row.xi_j, row.delta, row.eps, float(d)) for row, d in zip(rows, realized)]
    cert = ShiftCertificate(final.copy(), rows, eps_budget, r, "deterministic", eps0)
    if not cert.norm < eps_budget:
        raise ShiftSearchFailure(f"shift norm {cert.norm} exceeds the budget {eps_budget}")
    return cert


def uniform_in_ball(rng: np.random.Generator, d: int, radius: float) -> np.ndarray:
    """One point uniformly distributed in the open ball of the given radius."""
    while True:
        g = rng.standard_normal(d)
        nrm = float(np.linalg.norm(g))
        if nrm > 0:
            break
    u = rng.random()
    return radius * u ** (1.0 / d) * g / nrm


def shift_search_randomized(S: SampledCompactSet, A: CountableEnumeration, eps_budget: float,
                            trials: int = 64, seed: int = 0, batch: int = 8) -> ShiftCertificate:
    """Random shifts, uniform in the ball of radius ``eps_budget``.

    Trial ``t`` draws from its own stream seeded by ``(seed, t)``. Trials are
    examined in batches; within a batch the candidate with the largest
    ``min_j d(S + xi, a_j) - r`` is kept (lowest index on ties) and accepted
    if that margin is positive.
    """
    if not eps_budget > 0:
        raise ValueError("eps_budget must be positive")
    if trials < 1:
        raise ValueError("trials must be positive")
    r = S.resolution_h
    A_pts = A.points()
    tree = cKDTree(S.points)
    best_xi, best_margin = None, -math.inf
    for start in range(0, trials, batch):
        stop = min(trials, start + batch)
        cands = [uniform_in_ball(np.random.default_rng([seed, t]), S.dim, eps_budget) for t in range(start, stop)]
        if A_pts.shape[0] == 0:
            margins = np.full(len(cands), math.inf)
        else:
            # screening only; the accepted shift is re-checked by brute force
            margins = np.array([float(np.min(tree.query(A_pts - xi)[0])) - r for xi in cands])
        for k in np.argsort(-margins, kind="stable"):
            if not margins[k] > 0:
                break
            xi = cands[k]
            realized = _realized(S, xi, A_pts)
            if realized.size and not float(np.min(realized)) - r > 0:
                continue
            rows = [LedgerRow(j + 1, A_pts[j], xi.copy(), float(d), 0.0, float(d)) for j, d in enumerate(realized)]
            return ShiftCertificate(xi.copy(), rows, eps_budget, r, "randomized", 0.0, stop, {"seed": seed})
        k = int(np.argmax(margins))
        if margins[k] > best_margin:
            best_xi, best_margin = cands[k], float(margins[k])
    raise ShiftSearchFailure(
        f"no shift with positive margin in {trials} trials (best margin {best_margin:.3g})",
        best=(best_xi, best_margin),
    )


@dataclass(frozen=True)
class AvoidanceReport:
    status: str  # certified | uncertified-positive | violated
    image_cover_radius: float
    distances: np.ndarray
    margins: np.ndarray

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margins)) if self.margins.size else math.inf

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "image_cover_radius": self.image_cover_radius,
            "min_margin": self.min_margin if self.margins.size else None,
            "distances": [float(v) for v in self.distances],
            "margins": [float(v) for v in self.margins],
        }


def classify(distances: np.ndarray, A_pts: np.ndarray, cover_radius: float) -> AvoidanceReport:
    margins = distances - cover_radius
    floors = np.array([fp_floor(a) for a in A_pts])
    if np.any(distances <= floors):
        status = "violated"
    elif np.all(margins > 0):
        status = "certified"
    else:
        status = "uncertified-positive"
    return AvoidanceReport(status, cover_radius, distances, margins)


def verify_avoidance(P: PolynomialMap, K: SampledCompactSet, A: CountableEnumeration, L: float) -> AvoidanceReport:
    """Check ``P(K)`` against the forbidden points with margin ``d(P(samples), a_j) - L h``.

    ``L`` must bound the Lipschitz constant of ``P`` on the bounding box of ``K``.
    """
    image = SampledCompactSet(evaluate(P, K.points), 0.0, "image")
    r = float(L) * K.resolution_h
    A_pts = A.points()
    if A_pts.shape[0] == 0:
        return AvoidanceReport("certified", r, np.empty(0), np.empty(0))
    return classify(dists_points_to_set(A_pts, image), A_pts, r)


def image_set(P: PolynomialMap, K: SampledCompactSet, L: float) -> SampledCompactSet:
    """Image samples ``P(K)`` carrying the covering radius ``L * h``."""
    return SampledCompactSet(evaluate(P, K.points), float(L) * K.resolution_h, f"image({K.label})",
                             P.out_dim == 2 and (P.is_complex or K.is_complex_plane))
