"""File formats: triplet matrices, mesh JSON, observation CSV, reports, plots.

Every artifact written by the command line embeds a run manifest (the
subcommand, inputs, parameters, outputs and tool version) so a run can be
reproduced from any one of its outputs.  Nothing time- or host-dependent
goes into the files; identical manifests produce byte-identical files.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from . import __version__
from .contours import ContourLevelSet
from .errors import InputError
from .gmrf import ObservationSet, PrecisionModel
from .interp import CredibleSet, InterpolatedField
from .linalg import SparseSymMatrix
from .mesh import Triangulation

__all__ = [
    "RunManifest",
    "write_triplets",
    "read_triplets",
    "write_mesh",
    "read_mesh",
    "write_observations",
    "read_observations",
    "write_model",
    "read_model",
    "write_realizations",
    "write_levels",
    "read_levels",
    "write_json",
    "credible_sets_geojson",
    "svg_contour_map",
]

_G = "%.17g"


@dataclass(frozen=True)
class RunManifest:
    """Reproduction record embedded in every output file."""

    subcommand: str
    inputs: Dict[str, str]
    parameters: Dict[str, object]
    outputs: Tuple[str, ...]
    version: str = __version__

    def to_json_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "inputs": dict(self.inputs),
            "parameters": dict(self.parameters),
            "outputs": list(self.outputs),
            "version": self.version,
        }

    def comment_line(self) -> str:
        return "# manifest: " + json.dumps(self.to_json_dict(),
                                           sort_keys=True,
                                           separators=(",", ":"))


def _check_exists(path: str, kind: str) -> str:
    if not os.path.exists(path):
        raise InputError("%s file not found: %s" % (kind, path))
    return path


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError("not JSON serializable: %r" % type(o))


def write_json(path: str, payload: dict, manifest: Optional[RunManifest] = None):
    doc = dict(payload)
    if manifest is not None:
        doc["manifest"] = manifest.to_json_dict()
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2, default=_json_default)
        fh.write("\n")


def _read_json(path: str, kind: str) -> dict:
    _check_exists(path, kind)
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError("%s file %s is not valid JSON: %s" % (kind, path, exc))


def write_triplets(path: str, matrix: SparseSymMatrix,
                   manifest: Optional[RunManifest] = None):
    """Symmetric triplet text: `n nnz` header, then 0-based `row col value`.

    Only the lower triangle (diagonal included) is stored; readers complete
    the symmetry.
    """
    rows, cols, vals = matrix.to_triplets()
    with open(path, "w") as fh:
        if manifest is not None:
            fh.write(manifest.comment_line() + "\n")
        fh.write("%d %d\n" % (matrix.n, len(vals)))
        for r, c, v in zip(rows, cols, vals):
            fh.write(("%d %d " + _G + "\n") % (r, c, v))


def read_triplets(path: str) -> SparseSymMatrix:
    _check_exists(path, "matrix")
    n = None
    nnz = None
    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                if n is None:
                    if len(parts) != 2:
                        raise ValueError("expected `n nnz` header")
                    n = int(parts[0])
                    nnz = int(parts[1])
                    continue
                if len(parts) != 3:
                    raise ValueError("expected `row col value`")
                rows.append(int(parts[0]))
                cols.append(int(parts[1]))
                vals.append(float(parts[2]))
            except ValueError as exc:
                raise InputError("%s:%d: %s" % (path, lineno, exc))
    if n is None:
        raise InputError("%s: missing `n nnz` header" % path)
    if nnz is not None and len(vals) != nnz:
        raise InputError("%s: header promises %d entries, found %d"
                         % (path, nnz, len(vals)))
    return SparseSymMatrix.from_triplets(n, rows, cols, vals)


def write_mesh(path: str, mesh: Triangulation,
               manifest: Optional[RunManifest] = None):
    payload = {
        "vertices": [[float(x), float(y)] for x, y in mesh.vertices],
        "triangles": [[int(a), int(b), int(c)] for a, b, c in mesh.triangles],
    }
    write_json(path, payload, manifest)


def read_mesh(path: str) -> Triangulation:
    doc = _read_json(path, "mesh")
    if "vertices" not in doc or "triangles" not in doc:
        raise InputError("mesh file %s needs `vertices` and `triangles`" % path)
    return Triangulation(np.asarray(doc["vertices"], dtype=np.float64),
                         np.asarray(doc["triangles"], dtype=np.int64))


def write_observations(path: str, obs: ObservationSet,
                       manifest: Optional[RunManifest] = None):
    cov = obs.covariates
    ncov = 0 if cov is None else cov.shape[1]
    header = "x,y,value" + "".join(",cov%d" % k for k in range(ncov))
    with open(path, "w") as fh:
        if manifest is not None:
            fh.write(manifest.comment_line() + "\n")
        fh.write(header + "\n")
        for i in range(obs.count):
            fields = [_G % obs.locations[i, 0], _G % obs.locations[i, 1],
                      _G % obs.values[i]]
            for k in range(ncov):
                fields.append(_G % cov[i, k])
            fh.write(",".join(fields) + "\n")


def read_observations(path: str, noise_var: float) -> ObservationSet:
    """CSV columns x,y,value with optional covariates; header optional."""
    _check_exists(path, "observations")
    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                if rows:
                    raise InputError("%s:%d: non-numeric row" % (path, lineno))
                continue  # header line
    if not rows:
        raise InputError("%s: no observation rows" % path)
    width = len(rows[0])
    if width < 3 or any(len(r) != width for r in rows):
        raise InputError("%s: rows must have x,y,value[,covariates]" % path)
    arr = np.asarray(rows, dtype=np.float64)
    cov = arr[:, 3:] if width > 3 else None
    return ObservationSet(locations=arr[:, :2], values=arr[:, 2],
                          noise_var=noise_var, covariates=cov)


def write_model(prefix: str, model: PrecisionModel,
                manifest: Optional[RunManifest] = None) -> Tuple[str, str]:
    """Write `<prefix>.json` (mean + metadata) and `<prefix>.qmat` (precision)."""
    qpath = prefix + ".qmat"
    jpath = prefix + ".json"
    write_triplets(qpath, model.Q, manifest)
    payload = {
        "n": model.n,
        "mean": [float(v) for v in model.mu],
        "precision": os.path.basename(qpath),
    }
    write_json(jpath, payload, manifest)
    return jpath, qpath


def read_model(path: str) -> PrecisionModel:
    doc = _read_json(path, "model")
    for key in ("n", "mean", "precision"):
        if key not in doc:
            raise InputError("model file %s needs `%s`" % (path, key))
    qpath = doc["precision"]
    if not os.path.isabs(qpath):
        qpath = os.path.join(os.path.dirname(os.path.abspath(path)), qpath)
    Q = read_triplets(qpath)
    mu = np.asarray(doc["mean"], dtype=np.float64)
    if Q.n != int(doc["n"]) or mu.shape[0] != Q.n:
        raise InputError("model file %s is inconsistent with %s" % (path, qpath))
    return PrecisionModel(mu, Q)


def write_realizations(path: str, mesh: Triangulation, fields: np.ndarray,
                       manifest: Optional[RunManifest] = None):
    """CSV with x,y then one value column per realization."""
    fields = np.atleast_2d(np.asarray(fields, dtype=np.float64))
    if fields.shape[1] != mesh.n_vertices:
        raise InputError("field length does not match the mesh")
    names = ",".join("value" if fields.shape[0] == 1 else "value%d" % r
                     for r in range(fields.shape[0]))
    with open(path, "w") as fh:
        if manifest is not None:
            fh.write(manifest.comment_line() + "\n")
        fh.write("x,y," + names + "\n")
        for i in range(mesh.n_vertices):
            cells = [_G % mesh.vertices[i, 0], _G % mesh.vertices[i, 1]]
            cells.extend(_G % fields[r, i] for r in range(fields.shape[0]))
            fh.write(",".join(cells) + "\n")


def write_levels(path: str, levels: ContourLevelSet,
                 manifest: Optional[RunManifest] = None):
    payload = {
        "levels": [float(v) for v in levels.levels],
        "strategy": levels.strategy,
        "spacing": levels.spacing,
        "f_range": [levels.f_range[0], levels.f_range[1]],
        "midpoints": [float(v) for v in levels.midpoints],
    }
    if levels.untrimmed is not None:
        payload["untrimmed"] = [float(v) for v in levels.untrimmed]
    write_json(path, payload, manifest)


def read_levels(path: str) -> ContourLevelSet:
    doc = _read_json(path, "levels")
    for key in ("levels", "strategy", "f_range"):
        if key not in doc:
            raise InputError("levels file %s needs `%s`" % (path, key))
    return ContourLevelSet(
        levels=np.asarray(doc["levels"], dtype=np.float64),
        f_range=(float(doc["f_range"][0]), float(doc["f_range"][1])),
        strategy=str(doc["strategy"]),
        spacing=doc.get("spacing"),
        untrimmed=(np.asarray(doc["untrimmed"], dtype=np.float64)
                   if doc.get("untrimmed") is not None else None))


def credible_sets_geojson(sets: Dict[float, CredibleSet],
                          manifest: Optional[RunManifest] = None) -> dict:
    """GeoJSON FeatureCollection: boundary lines and filled region per alpha."""
    features = []
    for alpha in sorted(sets):
        cs = sets[alpha]
        lines = [list(map(list, seg)) for seg in cs.segments]
        lines += [list(map(list, seg)) for seg in cs.boundary_sections]
        features.append({
            "type": "Feature",
            "properties": {"alpha": alpha, "kind": "credible_boundary",
                           "method": cs.method},
            "geometry": {"type": "MultiLineString", "coordinates": lines},
        })
        polys = [[list(map(list, ring)) + [list(ring[0])]]
                 for ring in cs.polygons]
        features.append({
            "type": "Feature",
            "properties": {"alpha": alpha, "kind": "credible_region",
                           "method": cs.method, "area": cs.area},
            "geometry": {"type": "MultiPolygon", "coordinates": polys},
        })
    doc = {"type": "FeatureCollection", "features": features}
    if manifest is not None:
        doc["manifest"] = manifest.to_json_dict()
    return doc


# Fixed 16-entry colormap (dark purple to yellow), keyed by normalized level.
_COLORMAP = (
    "#440154", "#46186b", "#472f7d", "#424586", "#3b598b", "#336b8e",
    "#2c7c8e", "#268d8d", "#219e89", "#25ae82", "#3dbd74", "#5ec962",
    "#84d34b", "#aedc30", "#d8e219", "#fde725",
)


def _color_for(x: float) -> str:
    idx = int(min(max(x, 0.0), 1.0) * (len(_COLORMAP) - 1) + 0.5)
    return _COLORMAP[idx]


def svg_contour_map(mesh: Triangulation, k: np.ndarray,
                    levels: ContourLevelSet,
                    credible: Optional[CredibleSet] = None,
                    manifest: Optional[RunManifest] = None,
                    size: float = 640.0) -> str:
    """SVG heat map coloring each level set by its midpoint level.

    Triangles take the color of their minimum vertex set; the optional
    credible set is drawn as polylines on top.
    """
    lo, hi = mesh.bounds
    span = np.maximum(hi - lo, 1e-300)
    scale = size / float(span.max())
    width = float(span[0]) * scale
    height = float(span[1]) * scale

    def xy(p):
        return (float(p[0] - lo[0]) * scale,
                height - float(p[1] - lo[1]) * scale)

    mids = levels.midpoints
    m_lo, m_hi = float(mids[0]), float(mids[-1])
    m_span = m_hi - m_lo if m_hi > m_lo else 1.0
    parts = ['<svg xmlns="http://www.w3.org/2000/svg" width="%.1f" '
             'height="%.1f" viewBox="0 0 %.1f %.1f">'
             % (width, height, width, height)]
    if manifest is not None:
        parts.append("<!-- %s -->" % manifest.comment_line().lstrip("# "))
    for t in range(mesh.n_triangles):
        tri = mesh.triangles[t]
        kt = int(k[tri].min())
        color = _color_for((float(mids[kt]) - m_lo) / m_span)
        pts = " ".join("%.2f,%.2f" % xy(mesh.vertices[v]) for v in tri)
        parts.append('<polygon points="%s" fill="%s" stroke="none"/>'
                     % (pts, color))
    if credible is not None:
        for seg in credible.segments + credible.boundary_sections:
            (x0, y0), (x1, y1) = xy(seg[0]), xy(seg[1])
            parts.append('<line x1="%.2f" y1="%.2f" x2="%.2f" y2="%.2f" '
                         'stroke="#ffffff" stroke-width="1.5"/>'
                         % (x0, y0, x1, y1))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
