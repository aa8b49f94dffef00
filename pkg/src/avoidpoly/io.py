"""Point-set files (CSV / JSON) and JSON helpers for maps and reports."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .approx import PolynomialMap
from .geometry import SampledCompactSet


def points_to_json(S: SampledCompactSet) -> dict:
    return {
        "dim": S.dim,
        "resolution_h": S.resolution_h,
        "label": S.label,
        "is_complex_plane": S.is_complex_plane,
        "points": S.points.tolist(),
    }


def points_from_json(d: dict) -> SampledCompactSet:
    pts = np.asarray(d["points"], dtype=float).reshape(-1, int(d["dim"]))
    return SampledCompactSet(pts, float(d.get("resolution_h", 0.0)), d.get("label", ""),
                             bool(d.get("is_complex_plane", False)))


def points_to_csv(S: SampledCompactSet) -> str:
    """Header ``x0,...,x{d-1}``, one point per row.

    The covering radius travels in a leading ``# resolution_h=...`` comment,
    which readers that do not know about it can skip as a comment line.
    """
    buf = io.StringIO()
    buf.write(f"# resolution_h={S.resolution_h!r}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i}" for i in range(S.dim)])
    for row in S.points:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def points_from_csv(text: str, resolution_h: float | None = None, label: str = "") -> SampledCompactSet:
    h = 0.0
    rows = []
    header = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            if key.strip() == "resolution_h":
                h = float(val)
            continue
        if header is None:
            header = [c.strip() for c in line.split(",")]
            if header != [f"x{i}" for i in range(len(header))]:
                raise ValueError(f"expected a header x0,...,x{{d-1}}, got {line!r}")
            continue
        rows.append([float(v) for v in line.split(",")])
    if header is None:
        raise ValueError("empty point-set file")
    pts = np.asarray(rows, dtype=float).reshape(-1, len(header))
    return SampledCompactSet(pts, h if resolution_h is None else resolution_h, label)


def read_points(path, resolution_h: float | None = None) -> SampledCompactSet:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        S = points_from_json(json.loads(text))
        if resolution_h is not None:
            S = S.with_points(S.points, resolution_h)
        return S
    return points_from_csv(text, resolution_h, path.stem)


def dump_points(S: SampledCompactSet, fmt: str = "json") -> str:
    if fmt == "csv":
        return points_to_csv(S)
    return dumps(points_to_json(S))


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip float repr, no NaN."""
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n"


def read_poly(path) -> PolynomialMap:
    d = json.loads(Path(path).read_text())
    if "p" in d and "basis" not in d:
        d = d["p"]
    return PolynomialMap.from_dict(d)
