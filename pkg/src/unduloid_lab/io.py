"""Exports: Wavefront OBJ meshes, CSV tables, deterministic JSON reports."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Any, Optional

import numpy as np

from .errors import ParameterError
from .quat import qconj, qmul, qnormalize

FMT = "%.17g"


def stereographic(p, center=(-1.0, 0.0, 0.0, 0.0)):
    """Project S^3 to R^3 from ``center``: q = -conj(center) p sends center to -1."""
    c = qnormalize(np.asarray(center, dtype=float))
    q = -qmul(qconj(c), np.asarray(p, dtype=float))
    denom = 1.0 + q[..., :1]
    if np.any(np.abs(denom) < 1e-12):
        raise ParameterError("mesh passes through the projection center")
    return q[..., 1:] / denom


def auto_center(p):
    """Candidate center (from the 24 unit Hurwitz and 8 axis points) farthest from the mesh."""
    P = np.asarray(p, dtype=float).reshape(-1, 4)
    cands = [np.eye(4)[i] * sgn for i in range(4) for sgn in (1.0, -1.0)]
    cands += [0.5 * np.array(s) for s in np.array(np.meshgrid(*[[1.0, -1.0]] * 4)).reshape(4, -1).T]
    best = max(cands, key=lambda c: float(np.min(np.linalg.norm(P - c, axis=1))))
    return tuple(float(x) for x in best)


def grid_faces(n_t: int, n_phi: int, periodic: bool):
    """1-based quad faces of a row-major (t, phi) grid."""
    faces = []
    jmax = n_phi if periodic else n_phi - 1
    for i in range(n_t - 1):
        for j in range(jmax):
            jn = (j + 1) % n_phi
            faces.append((i * n_phi + j + 1, (i + 1) * n_phi + j + 1,
                          (i + 1) * n_phi + jn + 1, i * n_phi + jn + 1))
    return faces


def export_obj(path, vertices, periodic: bool = False, center=None, comment: str = ""):
    """Write a grid mesh; returns the vertex count.

    Quaternion vertices (last axis 4) are projected stereographically from
    ``center``; None picks a center away from the mesh (see :func:`auto_center`).
    """
    V = np.asarray(vertices, dtype=float)
    if V.ndim != 3 or V.shape[-1] not in (3, 4):
        raise ParameterError("vertices must have shape (n_t, n_phi, 3 or 4)")
    lines = []
    if comment:
        lines += [f"# {c}" for c in comment.splitlines()]
    if V.shape[-1] == 4:
        center = auto_center(V) if center is None else center
        lines.append("# stereographic projection center " + " ".join(FMT % x for x in center))
        V = stereographic(V, center)
    n_t, n_phi = V.shape[:2]
    lines += [f"v {FMT % x} {FMT % y} {FMT % z}" for x, y, z in V.reshape(-1, 3)]
    lines += ["f %d %d %d %d" % f for f in grid_faces(n_t, n_phi, periodic)]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return n_t * n_phi


def read_obj_vertices(path):
    with open(path) as fh:
        return np.array([[float(x) for x in ln.split()[1:4]] for ln in fh if ln.startswith("v ")])


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return FMT % x
    return str(x)


def write_csv(path, header, rows, comments=()):
    with open(path, "w", newline="\n") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(x) for x in row) + "\n")


@dataclass
class Record:
    """One verification check.  Informational records never fail a suite."""

    name: str
    anchor: str
    value: Any
    target: Any
    tolerance: Any
    passed: bool
    informational: bool = False

    def as_dict(self):
        return jsonable(asdict(self))


def jsonable(x):
    """Plain JSON types; non-finite floats become strings."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, complex):
        return {"re": jsonable(x.real), "im": jsonable(x.imag)}
    return x


def build_report(records, meta: Optional[dict] = None) -> dict:
    recs = [r.as_dict() if isinstance(r, Record) else jsonable(r) for r in records]
    ok = all(r["passed"] for r in recs if not r.get("informational", False))
    out = {"pass": bool(ok), "count": len(recs), "records": recs}
    if meta:
        out["meta"] = jsonable(meta)
    return out


def dumps(obj) -> str:
    # float repr is the shortest string that round-trips exactly
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def emit_report(records, path=None, meta: Optional[dict] = None) -> str:
    text = dumps(build_report(records, meta))
    if path is not None:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    return text
