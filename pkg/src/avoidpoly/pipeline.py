"""Approximate-then-shift: fit ``q`` within a share of ``eps``, shift its values, verify."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .approx import ApproximationFailure, PolynomialMap, approximate_to_tolerance, evaluate, lipschitz_bound
from .avoidance import (
    AvoidanceReport,
    ProbePolicy,
    ShiftCertificate,
    ShiftSearchFailure,
    image_set,
    shift_search_deterministic,
    shift_search_randomized,
    verify_avoidance,
)
from .dimension import (
    check_avoidance_condition,
    enumeration_dimension,
    estimate_box_dimension,
)
from .generators import compact_from_spec, enumeration_from_spec, target_from_spec
from .geometry import CountableEnumeration, SampledCompactSet
from .io import dumps

SCHEMA_VERSION = 1


@dataclass
class RunConfig:
    eps: float = 1e-2
    method: str = "det"
    max_degree: int = 12
    basis: str | None = None
    split: float = 0.5
    reclaim: bool = True
    trials: int = 64
    seed: int = 0
    probe_policy: ProbePolicy = field(default_factory=ProbePolicy)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "method": self.method,
            "max_degree": self.max_degree,
            "basis": self.basis,
            "split": self.split,
            "reclaim": self.reclaim,
            "trials": self.trials,
            "seed": self.seed,
        }


@dataclass
class RunRecord:
    inputs: dict
    verdict: str
    q: PolynomialMap | None = None
    p: PolynomialMap | None = None
    achieved_fit_error: float | None = None
    lipschitz: float | None = None
    image_cover_radius: float | None = None
    certificate: ShiftCertificate | None = None
    report: AvoidanceReport | None = None
    final_sup_error: float | None = None
    error: str | None = None
    fit_history: list = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return self.verdict.startswith("failed")

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "inputs": self.inputs,
            "verdict": self.verdict,
            "error": self.error,
            "q": None if self.q is None else self.q.to_dict(),
            "p": None if self.p is None else self.p.to_dict(),
            "achieved_fit_error": self.achieved_fit_error,
            "fit_history": [[d, e] for d, e in self.fit_history],
            "lipschitz_bound": self.lipschitz,
            "image_cover_radius": self.image_cover_radius,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "verification": None if self.report is None else self.report.to_dict(),
            "final_sup_error": self.final_sup_error,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


def avoid_approximate(f, K: SampledCompactSet, A: CountableEnumeration, eps: float,
                      config: RunConfig | None = None, inputs: dict | None = None) -> RunRecord:
    """Polynomial ``p`` with ``max_K ||f - p|| < eps`` whose values avoid ``a_1 .. a_N``.

    ``q`` is fitted to within ``split * eps`` and ``p = q + xi`` for a shift
    found on the image samples ``q(K)``. The shift budget is
    ``eps - achieved_fit_error`` (``reclaim``, the default) or
    ``(1 - split) * eps``; either way ``||f - p|| <= ||f - q|| + ||xi|| < eps``.
    A stage that cannot meet its share of the budget ends the run with verdict
    ``failed:<stage>``.
    """
    cfg = config or RunConfig(eps=eps)
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not 0 < cfg.split < 1:
        raise ValueError("split must lie in (0, 1)")
    inputs = dict(inputs or {})
    inputs.update({"eps": eps, "N": A.truncation_N, "config": cfg.to_dict()})
    fit_budget = cfg.split * eps

    try:
        fit = approximate_to_tolerance(f, K, fit_budget, cfg.max_degree, cfg.basis)
    except ApproximationFailure as exc:
        return RunRecord(inputs, "failed:approx", achieved_fit_error=exc.best_error,
                         error=str(exc), fit_history=exc.history)
    q = fit.poly
    shift_budget = eps - fit.error if cfg.reclaim else eps - fit_budget
    inputs["shift_budget"] = shift_budget
    lo, hi = K.bounding_box()
    L = lipschitz_bound(q, (lo, hi))
    image = image_set(q, K, L)
    record = RunRecord(inputs, "failed:shift", q=q, achieved_fit_error=fit.error, lipschitz=L,
                       image_cover_radius=image.resolution_h, fit_history=fit.history)
    try:
        if cfg.method in ("det", "deterministic"):
            cert = shift_search_deterministic(image, A, shift_budget, cfg.probe_policy)
        elif cfg.method in ("rand", "randomized"):
            cert = shift_search_randomized(image, A, shift_budget, cfg.trials, cfg.seed)
        else:
            raise ValueError(f"unknown method {cfg.method!r}")
    except ShiftSearchFailure as exc:
        record.error = str(exc)
        return record
    p = q.shifted(cert.xi)
    Y = np.asarray(f(K.points), dtype=float).reshape(len(K), -1)
    final = float(np.max(np.linalg.norm(evaluate(p, K.points) - Y, axis=1)))
    report = verify_avoidance(p, K, A, L)
    record.certificate = cert
    record.p = p
    record.report = report
    record.final_sup_error = final
    if not final < eps:
        record.verdict = "failed:verify"
        record.error = f"final sup error {final} is not below eps={eps}"
    elif report.status == "certified":
        record.verdict = "certified"
    elif report.status == "uncertified-positive":
        record.verdict = "uncertified"
    else:
        record.verdict = "failed:verify"
        record.error = "a forbidden point is hit by the image samples"
    return record


def run_from_specs(compact: str, target: str, enumeration: str, eps: float, n_forbidden: int | None = None,
                   config: RunConfig | None = None) -> RunRecord:
    K = compact_from_spec(compact)
    f = target_from_spec(target)
    A = enumeration_from_spec(enumeration, n_forbidden)
    inputs = {"compact": compact, "target": target, "enumeration": A.spec_string()}
    return avoid_approximate(f, K, A, eps, config or RunConfig(eps=eps), inputs)


def condition_report(K: SampledCompactSet, A: CountableEnumeration | SampledCompactSet, m: int,
                     scales=None, safety: float = 0.1) -> dict:
    """Advisory check of ``dim(K) + dim(A) < m``; never blocks a run."""
    est_k = estimate_box_dimension(K, scales)
    if isinstance(A, CountableEnumeration):
        est_a = enumeration_dimension(A)
    else:
        est_a = estimate_box_dimension(A, scales)
    ok, slack = check_avoidance_condition(est_k, est_a, m, safety)
    return {
        "kind": "empirical",
        "advisory": True,
        "dim_K": est_k.to_dict(),
        "dim_A": est_a.to_dict(),
        "dim_A_note": est_a.note,
        "m": m,
        "safety": safety,
        "holds": ok,
        "slack": slack,
    }


DEMOS = {
    "cantor-exp": dict(
        compact="cantor:depth=10,embed=complex", target="exp:d=2", enumeration="gaussian-rationals:N=200", eps=1e-2,
    ),
    "dust-sin": dict(
        compact="cantor-dust:depth=7", target="sin-sum-product:d=2", enumeration="rational-grid:N=200,d=2", eps=1e-2,
    ),
    "fat-cantor-strip": dict(
        compact="fat-cantor-strip:depth=6,ratio=0.25,columns=33", target="exp:d=2",
        enumeration="gaussian-rationals:N=200", eps=5e-2,
    ),
}


def run_demo(name: str, config: RunConfig | None = None) -> RunRecord:
    if name not in DEMOS:
        raise ValueError(f"unknown demo {name!r}; choose from {sorted(DEMOS)}")
    spec = dict(DEMOS[name])
    eps = spec.pop("eps")
    cfg = config or RunConfig(eps=eps)
    cfg.eps = eps
    return run_from_specs(eps=eps, config=cfg, **spec)
