from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from avoidpoly.approx import PolynomialMap, lipschitz_bound
from avoidpoly.avoidance import (
    ProbePolicy,
    ShiftSearchFailure,
    fp_floor,
    image_set,
    shift_search_deterministic,
    shift_search_randomized,
    uniform_in_ball,
    verify_avoidance,
)
from avoidpoly.generators import gen_cantor, gen_cantor_dust, gen_enumeration, gen_fat_cantor, gen_segment
from avoidpoly.geometry import SampledCompactSet, finite_enumeration, translate

from conftest import brute_dist


def assert_sound(cert, S):
    """Re-verify every ledger row against the final shift with the loop oracle."""
    assert cert.norm < cert.eps_budget
    shifted = translate(S, cert.xi).points
    for row in cert.ledger:
        d = brute_dist(row.a, shifted)
        assert d == pytest.approx(row.realized, rel=1e-12, abs=1e-15)
        assert row.delta - row.eps > 0
        assert row.realized >= row.delta - row.eps


def test_empty_enumeration_deterministic():
    S = gen_cantor(4)
    cert = shift_search_deterministic(S, gen_enumeration("rational-grid", 0, d=1), 0.1)
    assert cert.xi.tolist() == [0.0] and cert.ledger == []
    assert cert.certified()


def test_point_vs_point_deterministic():
    S = SampledCompactSet([[0.0]])
    cert = shift_search_deterministic(S, finite_enumeration([[0.0]]), 1.0)
    (row,) = cert.ledger
    assert 0 < abs(cert.xi[0]) < 0.45
    assert row.delta == pytest.approx(abs(cert.xi[0]))
    assert row.realized >= row.delta - row.eps > 0
    assert_sound(cert, S)


def test_square_image_of_cantor():
    C = gen_cantor(10, embed="complex")
    P = PolynomialMap("complex-monomial", 1, 1, 2, [0, 0, 1], [0, 0], [1])
    L = lipschitz_bound(P, C.bounding_box())
    image = image_set(P, C, L)
    cert = shift_search_deterministic(image, gen_enumeration("gaussian-rationals", 100), 5e-3)
    assert len(cert.ledger) == 100
    assert cert.image_cover_radius == pytest.approx(L * C.resolution_h)
    assert np.all(cert.realized_margins() > 0)
    assert_sound(cert, image)


def test_envelope_and_eps0():
    S = gen_cantor_dust(5)
    cert = shift_search_deterministic(S, gen_enumeration("rational-grid", 100, d=2), 1e-2)
    assert cert.eps0 == pytest.approx(0.9e-2)
    for row in cert.ledger:
        assert row.eps <= cert.eps0 * 2.0 ** -row.j
    prev = np.zeros(2)
    eps_prev = cert.eps0
    for row in cert.ledger:
        assert np.linalg.norm(row.xi_j - prev) < eps_prev / 2
        prev, eps_prev = row.xi_j, row.eps
    assert_sound(cert, S)


def test_non_lazy_policy_still_sound():
    S = gen_cantor(8)
    cert = shift_search_deterministic(S, gen_enumeration("rational-grid", 30, d=1), 1e-2, ProbePolicy(lazy=False))
    assert_sound(cert, S)


def test_resume_matches_single_run():
    S = gen_cantor(9, embed="complex")
    A = gen_enumeration("gaussian-rationals", 80)
    full = shift_search_deterministic(S, A, 2e-2)
    half = shift_search_deterministic(S, A.truncated(40), 2e-2)
    resumed = shift_search_deterministic(S, A, 2e-2, resume=half)
    assert np.array_equal(full.xi, resumed.xi)
    for a, b in zip(full.ledger, resumed.ledger):
        assert (a.j, a.delta, a.eps, a.realized) == (b.j, b.delta, b.eps, b.realized)


def test_deterministic_is_deterministic():
    S = gen_cantor_dust(4)
    A = gen_enumeration("rational-grid", 60, d=2)
    a = shift_search_deterministic(S, A, 1e-2).to_dict()
    b = shift_search_deterministic(S, A, 1e-2).to_dict()
    assert a == b


def test_probe_exhaustion_names_row():
    # a dense sample around the forbidden point with almost no budget
    S = gen_segment(20001, dim=2)
    A = finite_enumeration([[0.5, 0.0]])
    with pytest.raises(ShiftSearchFailure) as info:
        shift_search_deterministic(S, A, 1e-30, ProbePolicy(min_step=1e-40))
    assert info.value.j == 1
    assert info.value.a_j.tolist() == [0.5, 0.0]


def test_bad_arguments():
    S = gen_cantor(3)
    with pytest.raises(ValueError):
        shift_search_deterministic(S, gen_enumeration("rational-grid", 3, d=1), 0.0)
    with pytest.raises(ValueError):
        shift_search_deterministic(S, gen_enumeration("gaussian-rationals", 3), 0.1)
    with pytest.raises(ValueError):
        shift_search_randomized(S, gen_enumeration("rational-grid", 3, d=1), 0.1, trials=0)


@given(st.integers(0, 2**31), st.integers(1, 4), st.floats(1e-3, 10))
def test_uniform_in_ball_inside(seed, d, radius):
    x = uniform_in_ball(np.random.default_rng(seed), d, radius)
    assert x.shape == (d,) and np.linalg.norm(x) < radius


def test_uniform_in_ball_radial_law():
    rng = np.random.default_rng(0)
    r = np.array([np.linalg.norm(uniform_in_ball(rng, 2, 1.0)) for _ in range(4000)])
    # P(|x| < 1/2) = 1/4 in the plane
    assert abs(np.mean(r < 0.5) - 0.25) < 0.03


def test_randomized_empty():
    S = gen_cantor(3, embed="plane")
    cert = shift_search_randomized(S, finite_enumeration(np.empty((0, 2))), 0.1, seed=4)
    assert cert.trials_used == min(8, 64) and cert.ledger == []
    assert cert.xi.tolist() == uniform_in_ball(np.random.default_rng([4, 0]), 2, 0.1).tolist()


def test_randomized_point():
    S = SampledCompactSet([[0.0, 0.0]])
    cert = shift_search_randomized(S, finite_enumeration([[0.0, 0.0]]), 1.0, seed=9)
    assert 0 < cert.norm < 1
    (row,) = cert.ledger
    assert row.realized_margin(cert.image_cover_radius) == pytest.approx(cert.norm)
    assert row.eps == 0.0 and row.delta == row.realized


def test_randomized_seeded():
    S = gen_cantor_dust(4)
    S = S.with_points(S.points, 1e-4)
    A = gen_enumeration("rational-grid", 50, d=2)
    a = shift_search_randomized(S, A, 1e-2, seed=17)
    b = shift_search_randomized(S, A, 1e-2, seed=17)
    assert np.array_equal(a.xi, b.xi)
    assert_sound(a, S)


def test_randomized_failure_reports_best():
    S = gen_segment(2001, dim=2)
    # every forbidden point sits on the segment and the budget is below the spacing
    A = finite_enumeration([[k / 10, 0.0] for k in range(11)])
    with pytest.raises(ShiftSearchFailure) as info:
        shift_search_randomized(S.with_points(S.points, 0.01), A, 1e-3, trials=16, seed=0)
    xi, margin = info.value.best
    assert margin <= 0 and np.linalg.norm(xi) < 1e-3


def test_randomized_dust_many_seeds():
    # samples taken as the set itself (h = 0); with h = sqrt(2) 3^-6 subtracted the
    # grid points inside the dust cannot clear the covering radius at this budget
    D = gen_cantor_dust(6)
    D = D.with_points(D.points, 0.0)
    A = gen_enumeration("rational-grid", 500, d=2)
    accepted = 0
    for seed in range(100):
        try:
            cert = shift_search_randomized(D, A, 1e-2, trials=64, seed=seed)
        except ShiftSearchFailure:
            continue
        accepted += 1
        assert cert.norm < 1e-2 and np.all(cert.realized_margins() > 0)
    assert accepted >= 99


def test_verify_constant_hit():
    K = gen_cantor(5, embed="plane")
    P = PolynomialMap("monomial", 2, 2, 0, [[0.3], [0.7]], [0, 0], [1, 1])
    rep = verify_avoidance(P, K, finite_enumeration([[0.3, 0.7]]), 2.0)
    assert rep.status == "violated"
    assert rep.margins[0] == pytest.approx(-2.0 * K.resolution_h)


def test_verify_constant_clear():
    K = SampledCompactSet([[0.0, 0.0], [1.0, 1.0]], resolution_h=0.0)
    P = PolynomialMap("monomial", 2, 2, 0, [[0.3], [0.7]], [0, 0], [1, 1])
    rep = verify_avoidance(P, K, finite_enumeration([[1.3, 0.7]]), 0.0)
    assert rep.status == "certified" and rep.min_margin == pytest.approx(1.0)


def test_verify_uncertified_positive():
    K = gen_segment(11, dim=2)
    P = PolynomialMap("monomial", 2, 2, 1, [[0, 1, 0], [0, 0, 1]], [0, 0], [1, 1])
    rep = verify_avoidance(P, K, finite_enumeration([[0.05, 0.0]]), 1.0)
    assert rep.status == "uncertified-positive"
    assert rep.distances[0] > fp_floor(np.array([0.05, 0.0]))


def test_shift_equivalence():
    """Shifting the constant term and translating the image give the same report."""
    K = gen_cantor(7, embed="complex")
    P = PolynomialMap("complex-monomial", 1, 1, 3, [0.1, 1, 0.5j, -0.2], [0, 0], [1])
    L = lipschitz_bound(P, K.bounding_box())
    A = gen_enumeration("gaussian-rationals", 60)
    xi = np.array([1e-3, -2e-3])
    via_poly = verify_avoidance(P.shifted(xi), K, A, L)
    image = translate(image_set(P, K, L), xi)
    d = np.array([brute_dist(a, image.points) for a in A.points()])
    assert via_poly.status in ("certified", "uncertified-positive")
    assert np.allclose(via_poly.distances, d, rtol=1e-12, atol=1e-15)
    assert via_poly.image_cover_radius == image.resolution_h


def test_certificate_dict_roundtrips_json():
    import json

    cert = shift_search_deterministic(gen_fat_cantor(4), gen_enumeration("rational-grid", 10, d=1), 1e-2)
    d = json.loads(json.dumps(cert.to_dict(), allow_nan=False))
    assert d["method"] == "deterministic" and len(d["ledger"]) == 10
    assert d["ledger"][0]["proof_margin"] == pytest.approx(
        d["ledger"][0]["delta_j"] - d["ledger"][0]["eps_j"] - d["image_cover_radius"])
