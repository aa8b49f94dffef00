"""Polynomial maps, least-squares fitting and degree escalation.

Inputs are affinely prescaled into ``[-1, 1]^n`` (or the unit disc for the
complex basis) before building the design matrix; the transform is stored on
the map and applied again on every evaluation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from .geometry import SampledCompactSet

BASES = ("complex-monomial", "monomial", "chebyshev")


class FitError(ArithmeticError):
    pass


class RankDeficiencyWarning(UserWarning):
    pass


class ApproximationFailure(RuntimeError):
    """Degree escalation ran out of degrees before reaching the error budget."""

    def __init__(self, budget: float, best_error: float, best_degree: int, best_map=None, history=()):
        self.budget = budget
        self.best_error = best_error
        self.best_degree = best_degree
        self.best_map = best_map
        self.history = list(history)
        super().__init__(
            f"budget {budget:g} not reached; best sup error {best_error:.6g} at degree {best_degree}"
        )


@lru_cache(maxsize=None)
def exponents(basis: str, n: int, degree: int) -> tuple[tuple[int, ...], ...]:
    """Multi-indices of the basis, constant term first.

    ``monomial`` uses total degree ``<= degree`` in graded order; ``chebyshev``
    is the tensor product with every index ``<= degree``.
    """
    if basis == "complex-monomial":
        return tuple((k,) for k in range(degree + 1))
    if basis == "monomial":
        out = []
        for total in range(degree + 1):
            out.extend(a for a in product(range(total, -1, -1), repeat=n) if sum(a) == total)
        return tuple(out)
    if basis == "chebyshev":
        return tuple(sorted(product(range(degree + 1), repeat=n), key=lambda a: (max(a), sum(a), tuple(-x for x in a))))
    raise ValueError(f"unknown basis {basis!r}; choose from {BASES}")


def n_terms(basis: str, n: int, degree: int) -> int:
    if basis == "monomial":
        return math.comb(n + degree, n)
    if basis == "chebyshev":
        return (degree + 1) ** n
    return degree + 1


def _cheb_table(u: np.ndarray, degree: int) -> np.ndarray:
    T = np.empty(u.shape + (degree + 1,))
    T[..., 0] = 1.0
    if degree >= 1:
        T[..., 1] = u
    for k in range(2, degree + 1):
        T[..., k] = 2.0 * u * T[..., k - 1] - T[..., k - 2]
    return T


def _power_table(u: np.ndarray, degree: int) -> np.ndarray:
    P = np.empty(u.shape + (degree + 1,), dtype=u.dtype)
    P[..., 0] = 1.0
    for k in range(1, degree + 1):
        P[..., k] = P[..., k - 1] * u
    return P


def design_matrix(basis: str, U: np.ndarray, degree: int) -> np.ndarray:
    """Basis functions evaluated at prescaled inputs ``U`` (shape ``(k, n)``, complex for the complex basis)."""
    if basis == "complex-monomial":
        return _power_table(U.reshape(-1), degree)
    table = _cheb_table(U, degree) if basis == "chebyshev" else _power_table(U, degree)
    alphas = np.asarray(exponents(basis, U.shape[1], degree))
    V = np.ones((U.shape[0], alphas.shape[0]))
    for v in range(U.shape[1]):
        V *= table[:, v, alphas[:, v]]
    return V


@dataclass(frozen=True)
class PolynomialMap:
    """``x -> sum_a coeffs[:, a] * phi_a((x - center) / scale)``.

    For the complex basis ``n = m = 1`` over C; points are still passed as
    real pairs ``[Re, Im]``.
    """

    basis: str
    n: int
    m: int
    degree: int
    coeffs: np.ndarray
    center: np.ndarray
    scale: np.ndarray
    lipschitz_bound_hint: float | None = None
    hint_box: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.basis not in BASES:
            raise ValueError(f"unknown basis {self.basis!r}")
        if self.basis == "complex-monomial" and (self.n, self.m) != (1, 1):
            raise ValueError("the complex basis is scalar: n = m = 1")
        dtype = complex if self.basis == "complex-monomial" else float
        c = np.array(self.coeffs, dtype=dtype).reshape(self.m, -1)
        if c.shape[1] != n_terms(self.basis, self.n, self.degree):
            raise ValueError(
                f"{self.basis} degree {self.degree} in {self.n} variables needs "
                f"{n_terms(self.basis, self.n, self.degree)} coefficients per output, got {c.shape[1]}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        for name in ("center", "scale"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.scale <= 0):
            raise ValueError("prescale factors must be positive")

    @property
    def is_complex(self) -> bool:
        return self.basis == "complex-monomial"

    @property
    def in_dim(self) -> int:
        return 2 if self.is_complex else self.n

    @property
    def out_dim(self) -> int:
        return 2 if self.is_complex else self.m

    def prescale(self, X: np.ndarray) -> np.ndarray:
        if self.is_complex:
            z = X[:, 0] + 1j * X[:, 1]
            return (z - complex(self.center[0], self.center[1])) / self.scale[0]
        return (X - self.center) / self.scale

    def __call__(self, X) -> np.ndarray:
        return evaluate(self, X)

    def shifted(self, xi) -> "PolynomialMap":
        """The map ``x -> self(x) + xi`` (only the constant coefficient changes)."""
        xi = np.asarray(xi, dtype=float).reshape(-1)
        if xi.shape[0] != self.out_dim:
            raise ValueError(f"shift must have dimension {self.out_dim}")
        c = np.array(self.coeffs)
        if self.is_complex:
            c[0, 0] += complex(xi[0], xi[1])
        else:
            c[:, 0] += xi
        return PolynomialMap(self.basis, self.n, self.m, self.degree, c, self.center, self.scale,
                             self.lipschitz_bound_hint, self.hint_box)

    def to_dict(self) -> dict:
        if self.is_complex:
            coeffs = [[float(z.real), float(z.imag)] for z in self.coeffs[0]]
        else:
            coeffs = [[float(v) for v in row] for row in self.coeffs]
        return {
            "basis": self.basis,
            "n": self.n,
            "m": self.m,
            "degree": self.degree,
            "prescale": {"center": [float(v) for v in self.center], "scale": [float(v) for v in self.scale]},
            "coeffs": coeffs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PolynomialMap":
        if d["basis"] == "complex-monomial":
            coeffs = np.array([complex(re, im) for re, im in d["coeffs"]])
        else:
            coeffs = np.array(d["coeffs"], dtype=float)
        pre = d.get("prescale") or {}
        in_dim = 2 if d["basis"] == "complex-monomial" else d["n"]
        center = pre.get("center", [0.0] * in_dim)
        scale = pre.get("scale", [1.0] * (1 if d["basis"] == "complex-monomial" else in_dim))
        return cls(d["basis"], d["n"], d["m"], d["degree"], coeffs, center, scale)


def identity_prescale(basis: str, n: int) -> tuple[np.ndarray, np.ndarray]:
    if basis == "complex-monomial":
        return np.zeros(2), np.ones(1)
    return np.zeros(n), np.ones(n)


def prescale_for(basis: str, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Affine transform taking the bounding box of ``X`` into ``[-1, 1]^n`` (or the unit disc)."""
    lo, hi = X.min(axis=0), X.max(axis=0)
    center = 0.5 * (lo + hi)
    if basis == "complex-monomial":
        r = float(np.max(np.hypot(X[:, 0] - center[0], X[:, 1] - center[1])))
        return center, np.array([r if r > 0 else 1.0])
    half = 0.5 * (hi - lo)
    return center, np.where(half > 0, half, 1.0)


def _as_rows(X, dim: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1) if X.shape[0] == dim else X.reshape(-1, 1)
    if X.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got {X.shape[1]}")
    return X


def evaluate(P: PolynomialMap, x) -> np.ndarray:
    """Evaluate ``P`` at a point (returns a point) or at rows of an array."""
    single = np.ndim(x) == 1 and np.shape(x)[0] == P.in_dim
    X = _as_rows(x, P.in_dim)
    U = P.prescale(X)
    if P.is_complex:
        acc = np.zeros(U.shape[0], dtype=complex)
        for c in P.coeffs[0][::-1]:
            acc = acc * U + c
        out = np.column_stack([acc.real, acc.imag])
    else:
        out = design_matrix(P.basis, U, P.degree) @ P.coeffs.T
    return out[0] if single else out


def fit_polynomial(X, Y, degree: int, basis: str = "monomial", prescale: bool = True) -> PolynomialMap:
    """Least-squares polynomial fit of ``Y`` against ``X``.

    Parameters
    ----------
    X, Y : array_like, shapes ``(k, n)`` and ``(k, m)``
        Sample inputs and target values. For ``basis="complex-monomial"`` both
        are real pairs ``[Re, Im]``.
    degree : int
        Total degree (``monomial``), per-variable degree (``chebyshev``) or
        plain degree (``complex-monomial``).
    prescale : bool
        Map the bounding box of ``X`` into ``[-1, 1]^n`` first.

    Returns
    -------
    PolynomialMap
        The minimum-norm least-squares solution computed by an SVD solver. A
        :class:`RankDeficiencyWarning` reports the effective rank if it falls
        short of the number of basis functions.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if Y.ndim == 1:
        Y = Y.reshape(-1, 1)
    if X.shape[0] != Y.shape[0] or X.shape[0] == 0:
        raise ValueError("X and Y need the same, non-zero number of rows")
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if basis == "complex-monomial":
        if X.shape[1] != 2 or Y.shape[1] != 2:
            raise ValueError("the complex basis needs inputs and outputs given as [Re, Im] pairs")
        n, m = 1, 1
    else:
        n, m = X.shape[1], Y.shape[1]
    center, scale = prescale_for(basis, X) if prescale else identity_prescale(basis, n)
    proto = PolynomialMap(basis, n, m, degree, np.zeros((m, n_terms(basis, n, degree))), center, scale)
    with np.errstate(over="ignore", invalid="ignore"):
        V = design_matrix(basis, proto.prescale(X), degree)
    if not (np.all(np.isfinite(V)) and np.all(np.isfinite(Y))):
        raise FitError("design matrix overflowed; fit with prescale=True to map inputs into [-1, 1]^n")
    terms = V.shape[1]
    if X.shape[0] < terms:
        warnings.warn(f"{X.shape[0]} samples for {terms} basis functions", RankDeficiencyWarning, stacklevel=2)
    rhs = Y[:, 0] + 1j * Y[:, 1] if basis == "complex-monomial" else Y
    coef, _, rank, _ = np.linalg.lstsq(V, rhs, rcond=None)
    if rank < terms:
        warnings.warn(f"effective rank {rank} < {terms} basis functions; using the minimum-norm solution",
                      RankDeficiencyWarning, stacklevel=2)
    coeffs = coef.reshape(1, -1) if basis == "complex-monomial" else coef.T
    return PolynomialMap(basis, n, m, degree, coeffs, center, scale)


def sup_error(P: PolynomialMap, X, Y) -> float:
    """``max_i ||P(x_i) - y_i||``."""
    X = _as_rows(X, P.in_dim)
    Y = np.asarray(Y, dtype=float).reshape(X.shape[0], P.out_dim)
    if X.shape[0] == 0:
        raise ValueError("no samples")
    return float(np.max(np.linalg.norm(evaluate(P, X) - Y, axis=1)))


@dataclass(frozen=True)
class FitResult:
    poly: PolynomialMap
    error: float
    history: list[tuple[int, float]]

    @property
    def degree(self) -> int:
        return self.poly.degree


def default_basis(K: SampledCompactSet, out_dim: int) -> str:
    if K.is_complex_plane and out_dim == 2:
        return "complex-monomial"
    return "monomial"


def approximate_to_tolerance(f, K: SampledCompactSet, budget: float, max_degree: int = 12,
                             basis: str | None = None) -> FitResult:
    """Lowest-degree fit whose sup error on the samples of ``K`` is below ``budget``.

    Raises :class:`ApproximationFailure` (carrying the best error seen) when no
    degree up to ``max_degree`` gets there.
    """
    if not budget > 0:
        raise ValueError("budget must be positive")
    X = K.points
    Y = np.asarray(f(X), dtype=float).reshape(X.shape[0], -1)
    basis = basis or default_basis(K, Y.shape[1])
    history = []
    best = None
    for deg in range(max_degree + 1):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankDeficiencyWarning)
            P = fit_polynomial(X, Y, deg, basis)
        err = sup_error(P, X, Y)
        history.append((deg, err))
        if best is None or err < best[1]:
            best = (P, err)
        if err < budget:
            return FitResult(P, err, history)
    raise ApproximationFailure(budget, best[1], best[0].degree, best[0], history)


# ---------------------------------------------------------------------------
# Lipschitz bounds
# ---------------------------------------------------------------------------

def _cheb_value_bounds(R: float, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Bounds on ``|T_k|`` and ``|T_k'|`` over ``[-R, R]``, ``k = 0 .. degree``."""
    R = max(1.0, R)
    T = _cheb_table(np.array(R), degree)
    # T_k' = k U_{k-1}; U_k(R) is increasing for R >= 1
    U = np.empty(degree + 1)
    U[0] = 1.0
    if degree >= 1:
        U[1] = 2.0 * R
    for k in range(2, degree + 1):
        U[k] = 2.0 * R * U[k - 1] - U[k - 2]
    dT = np.zeros(degree + 1)
    for k in range(1, degree + 1):
        dT[k] = k * U[k - 1]
    return T, dT


def lipschitz_bound(P: PolynomialMap, box) -> float:
    """Upper bound on ``sup ||DP(x)||_2`` over the box ``(lo, hi)``.

    Every Jacobian entry is bounded by summing absolute coefficients times
    bounds on the derivative of each basis function over the (prescaled) box;
    the spectral norm of the resulting entrywise bound matrix dominates the
    spectral norm of the Jacobian at every point of the box.
    """
    lo, hi = (np.asarray(b, dtype=float).reshape(-1) for b in box)
    if P.degree == 0:
        return 0.0
    if P.is_complex:
        corners = np.array([[lo[0], lo[1]], [lo[0], hi[1]], [hi[0], lo[1]], [hi[0], hi[1]]])
        R = float(np.max(np.abs(P.prescale(corners))))
        k = np.arange(P.degree + 1)
        terms = k[1:] * np.abs(P.coeffs[0][1:]) * R ** (k[1:] - 1)
        return float(np.sum(terms) / P.scale[0]) * (1 + 1e-12)
    ulo = (lo - P.center) / P.scale
    uhi = (hi - P.center) / P.scale
    R = np.maximum(np.abs(ulo), np.abs(uhi))
    alphas = np.asarray(exponents(P.basis, P.n, P.degree))
    val = np.empty((P.n, P.degree + 1))
    der = np.empty((P.n, P.degree + 1))
    for v in range(P.n):
        if P.basis == "chebyshev":
            val[v], der[v] = _cheb_value_bounds(R[v], P.degree)
        else:
            e = np.arange(P.degree + 1)
            val[v] = R[v] ** e
            der[v] = np.concatenate([[0.0], e[1:] * R[v] ** (e[1:] - 1)])
    B = np.zeros((P.m, P.n))
    absc = np.abs(P.coeffs)
    for i in range(P.n):
        factor = der[i, alphas[:, i]].copy()
        for v in range(P.n):
            if v != i:
                factor *= val[v, alphas[:, v]]
        B[:, i] = absc @ factor / P.scale[i]
    return float(np.linalg.norm(B, 2)) * (1 + 1e-12)
