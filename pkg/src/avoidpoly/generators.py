"""Deterministic example sets, forbidden-point enumerations and target functions.

Generators are referenced by ``name:key=value,...`` strings, for example
``cantor:depth=8,embed=complex`` or ``gaussian-rationals:N=200``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Callable

import numpy as np

from .geometry import CountableEnumeration, SampledCompactSet

MAX_CANTOR_DEPTH = 20


# ---------------------------------------------------------------------------
# compact sets
# ---------------------------------------------------------------------------

def _embed(values: np.ndarray, embed: str, h: float, label: str) -> SampledCompactSet:
    if embed == "real":
        return SampledCompactSet(values.reshape(-1, 1), h, label)
    if embed == "complex":
        pts = np.column_stack([values, np.zeros_like(values)])
        return SampledCompactSet(pts, h, label, is_complex_plane=True)
    if embed == "plane":
        pts = np.column_stack([values, np.zeros_like(values)])
        return SampledCompactSet(pts, h, label)
    raise ValueError(f"unknown embedding {embed!r} (use real, complex or plane)")


def cantor_numerators(depth: int) -> np.ndarray:
    """Integer numerators (over ``3**depth``) of the left endpoints of the depth-``depth`` intervals."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if depth > MAX_CANTOR_DEPTH:
        raise ValueError(f"depth {depth} exceeds the size guard ({MAX_CANTOR_DEPTH})")
    lefts = np.zeros(1, dtype=np.int64)
    for k in range(depth):
        step = 2 * 3 ** (depth - k - 1)
        lefts = np.concatenate([lefts, lefts + step])
    return np.sort(lefts)


def gen_cantor(depth: int, embed: str = "real") -> SampledCompactSet:
    """Middle-thirds Cantor set sampled at the endpoints of its depth-``depth`` intervals.

    Yields ``2**(depth+1)`` points with covering radius ``3**-depth``.
    """
    lefts = cantor_numerators(depth)
    nums = np.sort(np.concatenate([lefts, lefts + 1]))
    values = nums / float(3 ** depth)
    return _embed(values, embed, 3.0 ** -depth, f"cantor(depth={depth})")


def gen_cantor_dust(depth: int, embed: str = "plane") -> SampledCompactSet:
    """Product ``C x C`` of two depth-``depth`` Cantor samples in the plane."""
    c = gen_cantor(depth).points[:, 0]
    xx, yy = np.meshgrid(c, c, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    h = math.sqrt(2.0) * 3.0 ** -depth
    return SampledCompactSet(pts, h, f"cantor-dust(depth={depth})", is_complex_plane=(embed == "complex"))


def fat_cantor_intervals(depth: int, ratio: float = 0.25) -> list[tuple[float, float]]:
    """Surviving intervals of the Smith-Volterra-Cantor construction.

    At step ``k = 0 .. depth-1`` an open middle gap of length ``ratio * 4**-k``
    is removed from each of the ``2**k`` current intervals.
    """
    if not 0 < ratio < 1 / 3:
        raise ValueError("ratio must lie in (0, 1/3)")
    if depth < 0 or depth > MAX_CANTOR_DEPTH:
        raise ValueError(f"depth must lie in [0, {MAX_CANTOR_DEPTH}]")
    intervals = [(0.0, 1.0)]
    for k in range(depth):
        gap = ratio * 4.0 ** -k
        nxt = []
        for a, b in intervals:
            if b - a <= gap:
                raise ValueError(f"removal schedule exhausts an interval at step {k}")
            mid = 0.5 * (a + b)
            nxt.append((a, mid - gap / 2))
            nxt.append((mid + gap / 2, b))
        intervals = nxt
    return intervals


def fat_cantor_length(depth: int, ratio: float) -> float:
    """Closed form of the surviving length after ``depth`` removal steps."""
    return 1.0 - 2.0 * ratio * (1.0 - 0.5 ** depth)


def gen_fat_cantor(depth: int, ratio: float = 0.25, embed: str = "real") -> SampledCompactSet:
    intervals = fat_cantor_intervals(depth, ratio)
    values = np.array([x for ab in intervals for x in ab])
    h = max(b - a for a, b in intervals)
    return _embed(values, embed, h, f"fat-cantor(depth={depth},ratio={ratio})")


def gen_fat_cantor_strip(depth: int = 6, ratio: float = 0.25, columns: int = 33) -> SampledCompactSet:
    """Sample of ``[0,1] + i*S`` with ``S`` a fat Cantor set: a grid in x times ``S`` in y."""
    ys = gen_fat_cantor(depth, ratio).points[:, 0]
    xs = np.linspace(0.0, 1.0, columns)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    h_s = max(b - a for a, b in fat_cantor_intervals(depth, ratio))
    dx = 1.0 / (columns - 1) if columns > 1 else 1.0
    h = math.hypot(dx / 2, h_s)
    return SampledCompactSet(pts, h, f"fat-cantor-strip(depth={depth},ratio={ratio})", is_complex_plane=True)


def gen_segment(n: int = 1025, dim: int = 1, direction: int = 0, complex_plane: bool = False) -> SampledCompactSet:
    """Evenly spaced sample of the unit segment along coordinate axis ``direction``."""
    if n < 2:
        raise ValueError("a segment sample needs at least 2 points")
    t = np.linspace(0.0, 1.0, n)
    pts = np.zeros((n, dim))
    pts[:, direction] = t
    return SampledCompactSet(pts, 0.5 / (n - 1), f"segment(n={n})", complex_plane and dim == 2)


def gen_grid(n: int = 101, dim: int = 2) -> SampledCompactSet:
    """Centres of the ``n**dim`` cells of side ``1/n`` tiling the unit cube."""
    if n < 1:
        raise ValueError("n must be positive")
    axes = [(np.arange(n) + 0.5) / n] * dim
    pts = np.array(list(product(*axes)))
    h = 0.5 * math.sqrt(dim) / n
    return SampledCompactSet(pts, h, f"grid(n={n},d={dim})")


def gen_point(coords=(0.0,)) -> SampledCompactSet:
    return SampledCompactSet(np.asarray(coords, dtype=float).reshape(1, -1), 0.0, "point")


# ---------------------------------------------------------------------------
# enumerations
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _farey_order(max_den: int) -> tuple[Fraction, ...]:
    # ordering: by denominator, then numerator
    out = []
    for q in range(1, max_den + 1):
        for p in range(0, q + 1):
            if math.gcd(p, q) == 1:
                out.append(Fraction(p, q))
    return tuple(out)


def _signed_reduced(h: int):
    """Reduced fractions p/q with max(|p|, q) <= h, ordered by (|p|, q, sign)."""
    out = []
    for ap in range(0, h + 1):
        for q in range(1, h + 1):
            if math.gcd(ap, q) != 1:
                continue
            out.append((ap, q, 1))
            if ap:
                out.append((ap, q, -1))
    return out


@lru_cache(maxsize=None)
def _gaussian_shell(h: int) -> tuple[tuple[float, float], ...]:
    fr = _signed_reduced(h)
    shell = []
    for (ap, q, sp), (ar, s, sr) in product(fr, fr):
        if max(ap, q, ar, s) != h:
            continue
        key = (ap, q, ar, s, sp < 0, sr < 0)
        shell.append((key, (sp * ap / q, sr * ar / s)))
    shell.sort(key=lambda kv: kv[0])
    return tuple(v for _, v in shell)


@lru_cache(maxsize=None)
def _grid_shell(D: int, d: int) -> tuple[tuple[float, ...], ...]:
    order = _farey_order(D)
    shell = []
    for tup in product(range(len(order)), repeat=d):
        fracs = [order[i] for i in tup]
        if max(f.denominator for f in fracs) == D:
            shell.append(tuple(float(f) for f in fracs))
    return tuple(shell)


@lru_cache(maxsize=None)
def _lattice_shell(r: int, d: int) -> tuple[tuple[int, ...], ...]:
    rng = range(-r, r + 1)
    return tuple(t for t in product(rng, repeat=d) if max((abs(x) for x in t), default=0) == r)


def _shelled(shell_fn: Callable[[int], tuple], first: int = 1) -> Callable[[int], np.ndarray]:
    """Turn a sequence of finite shells into a 1-based indexable generator."""

    def gen(j: int) -> np.ndarray:
        k = j - 1
        h = first
        while True:
            shell = shell_fn(h)
            if k < len(shell):
                return np.array(shell[k], dtype=float)
            k -= len(shell)
            h += 1

    return gen


def gen_enumeration(name: str, N: int = 100, **params) -> CountableEnumeration:
    """Named deterministic enumeration of a countable set, truncated at ``N``.

    ``gaussian-rationals``
        ``p/q + i r/s`` (reduced) in shells of increasing ``max(|p|, q, |r|, s)``;
        ties broken lexicographically on ``(|p|, q, |r|, s, p<0, r<0)``. Starts at 0.
    ``rational-grid`` (``d``)
        points of ``Q cap [0,1]^d`` in shells of increasing largest denominator; in
        one dimension this is 0, 1, 1/2, 1/3, 2/3, 1/4, ...
    ``lattice-scaled`` (``d``, ``scale``)
        ``scale * Z^d`` in shells of increasing max-norm.
    """
    N = int(N)
    if name == "gaussian-rationals":
        gen = _shelled(_gaussian_shell)
        return CountableEnumeration(gen, N, 2, name, {"N": N})
    if name == "rational-grid":
        d = int(params.get("d", 1))
        gen = _shelled(lambda D: _grid_shell(D, d))
        return CountableEnumeration(gen, N, d, name, {"N": N, "d": d})
    if name == "lattice-scaled":
        d = int(params.get("d", 2))
        scale = float(params.get("scale", 0.1))
        base = _shelled(lambda r: _lattice_shell(r, d), first=0)
        return CountableEnumeration(lambda j: scale * base(j), N, d, name, {"N": N, "d": d, "scale": scale})
    raise ValueError(f"unknown enumeration {name!r}")


# ---------------------------------------------------------------------------
# target functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Target:
    """A vectorised map from ``(k, in_dim)`` to ``(k, out_dim)`` real arrays."""

    name: str
    in_dim: int
    out_dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    description: str = ""

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1) if X.shape[0] == self.in_dim else X.reshape(-1, 1)
        if X.shape[1] != self.in_dim:
            raise ValueError(f"target {self.name} expects inputs of dimension {self.in_dim}")
        return np.asarray(self.fn(X), dtype=float).reshape(X.shape[0], self.out_dim)


def _as_complex(X):
    return X[:, 0] + 1j * X[:, 1]


def _as_real(z):
    return np.column_stack([z.real, z.imag])


def gen_target(name: str, d: int = 1) -> Target:
    if name == "exp":
        if d == 1:
            return Target("exp", 1, 1, np.exp, "x -> e^x")
        if d == 2:
            return Target("exp", 2, 2, lambda X: _as_real(np.exp(_as_complex(X))), "z -> e^z on C")
    elif name == "identity":
        return Target("identity", d, d, lambda X: X.copy(), "x -> x")
    elif name == "complex-square":
        return Target("complex-square", 2, 2, lambda X: _as_real(_as_complex(X) ** 2), "z -> z^2 on C")
    elif name == "abs-offset":
        if d == 1:
            return Target("abs-offset", 1, 1, lambda X: np.abs(X - 0.5), "x -> |x - 1/2|")
    elif name == "rosenbrock-like":
        if d == 2:
            return Target(
                "rosenbrock-like", 2, 2,
                lambda X: np.column_stack([1.0 - X[:, 0], 10.0 * (X[:, 1] - X[:, 0] ** 2)]),
                "(x, y) -> (1 - x, 10 (y - x^2))",
            )
    elif name == "sin-sum-product":
        if d == 2:
            return Target(
                "sin-sum-product", 2, 2,
                lambda X: np.column_stack([np.sin(X[:, 0]) + X[:, 1], X[:, 0] * X[:, 1]]),
                "(x, y) -> (sin x + y, x y)",
            )
    else:
        raise ValueError(f"unknown target {name!r}")
    raise ValueError(f"target {name!r} is not defined for d = {d}")


# ---------------------------------------------------------------------------
# name:params registry
# ---------------------------------------------------------------------------

def _parse_value(v: str):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    if "/" in v:
        try:
            return float(Fraction(v))
        except (ValueError, ZeroDivisionError):
            pass
    return v


def parse_spec(spec: str) -> tuple[str, dict]:
    """Split ``name:k=v,k=v`` into the name and a parameter dict."""
    name, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ValueError(f"malformed parameter {item!r} in {spec!r}")
        params[key.strip()] = _parse_value(value.strip())
    return name.strip(), params


COMPACT_SETS: dict[str, Callable[..., SampledCompactSet]] = {
    "cantor": gen_cantor,
    "cantor-dust": gen_cantor_dust,
    "fat-cantor": gen_fat_cantor,
    "fat-cantor-strip": gen_fat_cantor_strip,
    "segment": gen_segment,
    "grid": gen_grid,
}

ENUMERATIONS = ("gaussian-rationals", "rational-grid", "lattice-scaled")


def compact_from_spec(spec: str) -> SampledCompactSet:
    name, params = parse_spec(spec)
    if name not in COMPACT_SETS:
        raise ValueError(f"unknown compact set generator {name!r}; choose from {sorted(COMPACT_SETS)}")
    return COMPACT_SETS[name](**params)


def enumeration_from_spec(spec: str, N: int | None = None) -> CountableEnumeration:
    name, params = parse_spec(spec)
    if N is not None:
        params["N"] = N
    return gen_enumeration(name, **params)


def target_from_spec(spec: str) -> Target:
    name, params = parse_spec(spec)
    return gen_target(name, **params)
