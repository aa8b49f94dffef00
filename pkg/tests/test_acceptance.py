"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""

from __future__ import annotations

import math
import subprocess
import sys
import time
from collections import Counter

import numpy as np
import pytest

from avoidpoly.approx import PolynomialMap, evaluate, exponents, fit_polynomial, lipschitz_bound, sup_error
from avoidpoly.avoidance import image_set, shift_search_deterministic
from avoidpoly.dimension import check_sum_dim_bound, coverage_profile, estimate_box_dimension, scale_ladder
from avoidpoly.generators import (
    gen_cantor,
    gen_cantor_dust,
    gen_enumeration,
    gen_fat_cantor,
    gen_point,
    gen_segment,
    gen_target,
)
from avoidpoly.geometry import SampledCompactSet
from avoidpoly.pipeline import RunConfig, avoid_approximate, run_demo

LOG23 = math.log(2) / math.log(3)


@pytest.fixture
def report(capsys):
    def emit(k: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[criterion {k:2d}] {'PASS' if ok else 'FAIL'}  {detail}")
    return emit


def recheck_rows(cert, S):
    """Independent re-verification: d(S + xi, a_j) >= delta_j - eps_j > 0 for every row."""
    shifted = S.points + cert.xi
    for row in cert.ledger:
        d = float(np.min(np.sqrt(np.sum((shifted - row.a) ** 2, axis=1))))
        if not (row.delta - row.eps > 0 and d >= row.delta - row.eps):
            return False
    return bool(cert.norm < cert.eps_budget)


# ---------------------------------------------------------------- criteria 1, 2

def _instances():
    rng = np.random.default_rng(2024)
    out = []
    for i in range(50):
        kind = i % 5
        if kind == 0:
            S, A = gen_cantor(int(rng.integers(6, 11))), gen_enumeration("rational-grid", 100, d=1)
        elif kind == 1:
            S, A = gen_cantor(int(rng.integers(6, 11)), embed="complex"), gen_enumeration("gaussian-rationals", 100)
        elif kind == 2:
            S, A = gen_cantor_dust(int(rng.integers(4, 7))), gen_enumeration("rational-grid", 100, d=2)
        elif kind == 3:
            S = gen_fat_cantor(int(rng.integers(4, 9)), float(rng.choice([1 / 8, 1 / 4])))
            A = gen_enumeration("rational-grid", 100, d=1)
        else:
            S = gen_segment(257, dim=2)
            A = gen_enumeration("lattice-scaled", 100, d=2, scale=float(rng.choice([0.05, 0.1, 1 / 3])))
        out.append((S, A, float(10 ** rng.uniform(-3, -1))))
    return out


@pytest.fixture(scope="module")
def construction_runs():
    t0 = time.perf_counter()
    runs = [(S, shift_search_deterministic(S, A, b)) for S, A, b in _instances()]
    return runs, time.perf_counter() - t0


def test_criterion_01_construction_soundness(construction_runs, report):
    runs, search_time = construction_runs
    t0 = time.perf_counter()
    sound = [recheck_rows(cert, S) for S, cert in runs]
    total = search_time + time.perf_counter() - t0
    rows = sum(len(c.ledger) for _, c in runs)
    ok = all(sound) and len(runs) == 50 and total <= 60
    report(1, ok, f"{sum(sound)}/50 instances sound, {rows} ledger rows re-verified, {total:.1f}s (limit 60s)")
    assert ok


def test_criterion_02_tolerance_decay(construction_runs, report):
    runs, _ = construction_runs
    bad = [(cert.eps0, row.j, row.eps) for _, cert in runs for row in cert.ledger
           if not row.eps <= cert.eps0 * 2.0 ** -row.j]
    ok = not bad
    report(2, ok, f"eps_j <= eps_0 2^-j on all rows of 50 runs ({len(bad)} violations)")
    assert ok


# ---------------------------------------------------------------- criteria 3, 4

def _demo_check(name, f, K, A, eps, limit, k, report):
    t0 = time.perf_counter()
    rec = run_demo(name)
    dt = time.perf_counter() - t0
    pts = evaluate(rec.p, K.points)
    final = float(np.max(np.linalg.norm(pts - f(K.points), axis=1)))
    r = rec.lipschitz * K.resolution_h
    margins = np.array([float(np.min(np.sqrt(np.sum((pts - a) ** 2, axis=1)))) - r for a in A.points()])
    ok = (rec.verdict == "certified" and final < eps and margins.size == A.truncation_N
          and bool(np.all(margins > 0)) and dt <= limit)
    report(k, ok, f"{name}: verdict={rec.verdict} final_sup_error={final:.3e} "
                  f"min margin={margins.min():.3e} over {margins.size} points, {dt:.1f}s (limit {limit}s)")
    return ok


def test_criterion_03_cantor_exp_demo(report):
    ok = _demo_check("cantor-exp", gen_target("exp", 2), gen_cantor(10, embed="complex"),
                     gen_enumeration("gaussian-rationals", 200), 1e-2, 30, 3, report)
    assert ok


def test_criterion_04_dust_demo(report):
    ok = _demo_check("dust-sin", gen_target("sin-sum-product", 2), gen_cantor_dust(7),
                     gen_enumeration("rational-grid", 200, d=2), 1e-2, 60, 4, report)
    assert ok


# ---------------------------------------------------------------- criterion 5

def test_criterion_05_randomized(report, capsys):
    K = gen_cantor(10, embed="complex")
    f = gen_target("exp", 2)
    A = gen_enumeration("gaussian-rationals", 200)
    trials = Counter()
    accepted = 0
    for seed in range(100):
        rec = avoid_approximate(f, K, A, 1e-2, RunConfig(eps=1e-2, method="rand", trials=64, seed=seed))
        if rec.verdict == "certified":
            accepted += 1
            trials[rec.certificate.trials_used] += 1
        else:
            trials["none"] += 1
    with capsys.disabled():
        print("\n  trials examined | seeds")
        for key in sorted(trials, key=str):
            print(f"  {str(key):>15} | {trials[key]}")
        print(f"  acceptance rate: {accepted}/100")
    ok = accepted >= 99
    report(5, ok, f"randomized shift accepted within 64 trials for {accepted}/100 seeds (need >= 99)")
    assert ok


# ---------------------------------------------------------------- criterion 6

def test_criterion_06_dimension_calibration(report):
    c = estimate_box_dimension(gen_cantor(12), scale_ladder(2, 9, 3)).slope
    s = estimate_box_dimension(gen_segment(1025), scale_ladder(2, 8, 2)).slope
    p = estimate_box_dimension(gen_point((0.3,)), scale_ladder(2, 8, 2)).slope
    ok = abs(c - LOG23) <= 0.05 and abs(s - 1) <= 0.05 and abs(p) <= 0.05
    report(6, ok, f"cantor {c:.4f} (target {LOG23:.4f}), segment {s:.4f}, point {p:.4f}; tolerance 0.05")
    assert ok


# ---------------------------------------------------------------- criterion 7

def _pairs():
    seg2 = gen_segment(129, dim=2)
    cplane = gen_cantor(8, embed="plane")
    return [
        ("cantor+cantor", gen_cantor(8), gen_cantor(8)),
        ("cantor+point", gen_cantor(8), gen_point((0.3,))),
        ("cantor+segment", gen_cantor(7), gen_segment(257)),
        ("dust+dust", gen_cantor_dust(4), gen_cantor_dust(4)),
        ("dust+segment", gen_cantor_dust(4), seg2),
        ("dust+cantor-axis", gen_cantor_dust(4), cplane),
        ("segment-x+segment-y", seg2, gen_segment(129, dim=2, direction=1)),
        ("cantor-x+cantor-y", cplane, SampledCompactSet(cplane.points[:, ::-1], cplane.resolution_h)),
        ("fat-cantor+cantor", gen_fat_cantor(6), gen_cantor(8)),
        ("rationals+cantor", SampledCompactSet(gen_enumeration("rational-grid", 40, d=1).points()), gen_cantor(8)),
    ]


def test_criterion_07_sumset_bound(report, capsys):
    results = []
    for name, A, K in _pairs():
        r = check_sum_dim_bound(A, K, 1, tolerance=0.15)
        results.append((name, r))
    with capsys.disabled():
        print()
        for name, r in results:
            print(f"  {name:>20}: dim(A+K)={r['dim_sum']:.3f} <= {r['dim_A']:.3f} + {r['dim_K']:.3f} + 0.15"
                  f"  {'ok' if r['holds'] else 'VIOLATED'}")
    bad = [n for n, r in results if not r["holds"]]
    ok = not bad and len(results) == 10
    report(7, ok, f"empirical sum-dimension bound on 10 pairs, {len(bad)} violations")
    assert ok


# ---------------------------------------------------------------- criterion 8

def _cz(X):
    return X[:, 0] + 1j * X[:, 1]


def _re(z):
    return np.column_stack([z.real, z.imag])


MAPS = [
    ("z^2 on cantor", lambda X: _re(_cz(X) ** 2), lambda: gen_cantor(12, embed="complex"), 2, "complex-monomial"),
    ("4x(1-x) on cantor", lambda X: 4 * X * (1 - X), lambda: gen_cantor(12), 2, "monomial"),
    ("x^4-x on cantor", lambda X: X ** 4 - X, lambda: gen_cantor(12), 4, "monomial"),
    ("(x+y^2, xy) on dust", lambda X: np.column_stack([X[:, 0] + X[:, 1] ** 2, X[:, 0] * X[:, 1]]),
     lambda: gen_cantor_dust(7), 2, "monomial"),
    ("(x^2-y, x+y^3) on dust", lambda X: np.column_stack([X[:, 0] ** 2 - X[:, 1], X[:, 0] + X[:, 1] ** 3]),
     lambda: gen_cantor_dust(7), 3, "monomial"),
]


def test_criterion_08_image_coverage(report, capsys):
    rows = []
    for name, fn, make, deg, basis in MAPS:
        K = make()
        P = fit_polynomial(K.points, fn(K.points), deg, basis, prescale=False)
        assert sup_error(P, K.points, fn(K.points)) < 1e-12
        L = lipschitz_bound(P, K.bounding_box())
        image = image_set(P, K, L)
        # the four finest dyadic scales at least 16 covering radii wide
        k_max = int(math.floor(math.log2(1.0 / (16 * image.resolution_h))))
        prof = coverage_profile(image, scale_ladder(k_max - 3, k_max, 2))
        rows.append((name, prof))
    with capsys.disabled():
        print()
        for name, prof in rows:
            fr = ", ".join(f"{v:.4g}" for v in prof.fractions)
            print(f"  {name:>24}: scales 2^-{round(-math.log2(prof.scales[0]))}..2^-"
                  f"{round(-math.log2(prof.scales[-1]))}  fractions [{fr}]")
    ok = all(p.strictly_decreasing() for _, p in rows)
    report(8, ok, f"image coverage strictly decreasing for {sum(p.strictly_decreasing() for _, p in rows)}/5 maps")
    assert ok


# ---------------------------------------------------------------- criterion 9

def _naive(P, x):
    if P.is_complex:
        z = (complex(*x) - complex(*P.center)) / P.scale[0]
        v = sum(complex(c) * z ** k for k, c in enumerate(P.coeffs[0]))
        return [v.real, v.imag]
    u = [(x[i] - P.center[i]) / P.scale[i] for i in range(P.n)]
    return [sum(float(c) * math.prod(ui ** a for ui, a in zip(u, al))
                for c, al in zip(row, exponents(P.basis, P.n, P.degree))) for row in P.coeffs]


def test_criterion_09_fit_oracles(report):
    rng = np.random.default_rng(99)
    X = rng.uniform(-1, 2, size=(30, 2))
    Y = np.column_stack([3 - X[:, 0] + 0.5 * X[:, 0] * X[:, 1], X[:, 1] ** 2 - 2 * X[:, 0] ** 2])
    interp = sup_error(fit_polynomial(X, Y, 2), X, Y)

    C = gen_cantor(8, embed="complex")
    Xc = C.points[np.linspace(0, len(C) - 1, 200).round().astype(int)]
    f = gen_target("exp", 2)
    exp_err = sup_error(fit_polynomial(Xc, f(Xc), 8, "complex-monomial"), Xc, f(Xc))

    worst = 0.0
    for i in range(10):
        if i % 2:
            t = 4
            P = PolynomialMap("complex-monomial", 1, 1, 3, rng.normal(size=t) + 1j * rng.normal(size=t),
                              rng.normal(size=2), [1.5])
        else:
            P = PolynomialMap("monomial", 2, 2, 3, rng.normal(size=(2, 10)), rng.normal(size=2), [1.0, 2.0])
        pts = rng.uniform(-1, 1, size=(10, P.in_dim))
        got = evaluate(P, pts)
        want = np.array([_naive(P, x) for x in pts])
        worst = max(worst, float(np.max(np.abs(got - want) / np.maximum(np.abs(want), 1.0))))
    ok = interp <= 1e-8 and exp_err <= 1e-6 and worst <= 1e-10
    report(9, ok, f"self-interpolation {interp:.2e} (<=1e-8), exp degree 8 {exp_err:.2e} (<=1e-6, 1/9! = "
                  f"{1 / math.factorial(9):.2e}), evaluate vs naive {worst:.2e} (<=1e-10)")
    assert ok


# ---------------------------------------------------------------- criterion 10

def test_criterion_10_determinism(report, tmp_path):
    argv = [sys.executable, "-m", "avoidpoly", "--eps", "1e-2", "--method", "rand", "--seed", "7",
            "run", "--compact", "cantor:depth=10,embed=complex", "--target", "exp:d=2",
            "--enum", "gaussian-rationals:N=200"]
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.json"
        res = subprocess.run(argv + ["--out", str(path)], capture_output=True)
        outs.append((res.returncode, path.read_bytes()))
    det = [sys.executable, "-m", "avoidpoly", "demo", "dust-sin"]
    det_outs = [subprocess.run(det, capture_output=True).stdout for _ in range(2)]
    ok = outs[0] == outs[1] and outs[0][0] == 0 and det_outs[0] == det_outs[1] and len(det_outs[0]) > 0
    report(10, ok, f"two `run` invocations byte-identical ({len(outs[0][1])} bytes), "
                   f"two `demo dust-sin` invocations byte-identical ({len(det_outs[0])} bytes)")
    assert ok
