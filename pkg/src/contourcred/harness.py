"""Study drivers: measure tables over K, coverage simulations, mesh advice.

The coverage study follows the usual design for checking credible contour
regions: simulate a truth field, observe it noisily at random locations,
condition a lattice model, build the credible region for the zero contour
at the target level, and score whether every true crossing stays inside
the region.  The truth can live on the same lattice as the model or on a
finer one, which exposes interpolation rules that claim too much between
model nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Dict, Optional, Tuple

import numpy as np

from .contours import (ContourLevelSet, assign_level_sets, contour_function,
                       levels_from_values, pretty_levels, quality_report,
                       standard_levels)
from .errors import InputError
from .gmrf import (MaternSpec, ObservationSet, PrecisionModel,
                   build_matern_precision, condition_on_observations,
                   sample_field)
from .interp import InterpolatedField
from .mesh import Triangulation, interpolation_matrix, lattice_mesh

__all__ = [
    "ResolutionAdvisory",
    "check_mesh_resolution",
    "MeasureTable",
    "run_measure_table",
    "CoverageConfig",
    "CoverageResult",
    "run_coverage_study",
]


@dataclass(frozen=True)
class ResolutionAdvisory:
    """Longest-edge to correlation-range ratio versus the rule of thumb."""

    ratio: float
    limit: float
    ok: bool
    message: str


def check_mesh_resolution(spec: MaternSpec, mesh: Triangulation) -> ResolutionAdvisory:
    """Warn when triangles are long relative to the correlation range.

    The rule of thumb keeps the longest edge below a tenth of the range for
    smoothness 1; smoothness 2 tolerates up to half.
    """
    limit = 0.1 if spec.nu == 1 else 0.5
    ratio = mesh.longest_edge / spec.spatial_range
    ok = ratio <= limit
    if ok:
        msg = ("longest edge is %.3g of the correlation range "
               "(limit %.3g for nu=%d)" % (ratio, limit, spec.nu))
    else:
        msg = ("mesh is coarse for this field: longest edge is %.3g of the "
               "correlation range, above the %.3g limit for nu=%d; expect "
               "biased variances" % (ratio, limit, spec.nu))
    return ResolutionAdvisory(ratio=ratio, limit=limit, ok=ok, message=msg)


@dataclass(frozen=True)
class MeasureTable:
    """Quality reports over a family of contour maps of one posterior."""

    rows: tuple
    obs_count: int
    noise_var: float
    samples: int
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "obs_count": self.obs_count,
            "noise_var": self.noise_var,
            "samples": self.samples,
            "seed": self.seed,
            "rows": [dict(strategy=s, report=r.to_json_dict())
                     for (s, r) in self.rows],
        }

    def to_text(self) -> str:
        lines = ["%-10s %3s %9s %8s %8s %8s %10s %10s" %
                 ("strategy", "K", "spacing", "P0", "P1", "P2",
                  "bound_rho1", "bound_rho2")]
        for s, r in self.rows:
            spacing = "%.4g" % r.spacing if r.spacing is not None else "-"
            lines.append("%-10s %3d %9s %8.4f %8.4f %8.4f %10.4f %10.4f" %
                         (s, r.K, spacing, r.P0, r.P1, r.P2,
                          r.bound_rho1, r.bound_rho2))
        return "\n".join(lines) + "\n"


def run_measure_table(mesh: Triangulation, spec: MaternSpec,
                      noise_var: float, obs_count: int,
                      standard_K=(1, 2, 3, 4),
                      pretty_spacings=(2.0, 1.0, 0.5, 0.2),
                      samples: int = 10000, seed: int = 0) -> MeasureTable:
    """Simulate, observe, condition, and report measures across contour maps.

    Standard maps use the requested K values; pretty maps use explicit round
    spacings so the table spans comparable map complexities.
    """
    if obs_count < 1:
        raise InputError("obs_count must be positive")
    prior = build_matern_precision(mesh, spec)
    truth = sample_field(prior, (seed, 101), 1)[0]
    rng = np.random.default_rng(np.random.SeedSequence((seed, 202)))
    lo, hi = mesh.bounds
    locs = lo + rng.random((obs_count, 2)) * (hi - lo)
    A = interpolation_matrix(mesh, locs)
    y = A @ truth + rng.standard_normal(obs_count) * math.sqrt(noise_var)
    obs = ObservationSet(locations=locs, values=y, noise_var=noise_var)
    posterior = condition_on_observations(prior, obs, mesh)
    f = posterior.mu
    areas = mesh.vertex_areas
    rows = []
    for K in standard_K:
        lv = standard_levels(f, K)
        rows.append(("standard",
                     quality_report(posterior, lv, samples=samples,
                                    seed=(seed, 1, K), weights=areas)))
    fmin, fmax = float(f.min()), float(f.max())
    for h in pretty_spacings:
        k_lo = int(math.ceil(fmin / h - 1e-9))
        k_hi = int(math.floor(fmax / h + 1e-9))
        if k_hi < k_lo:
            continue
        vals = h * np.arange(k_lo, k_hi + 1, dtype=np.float64)
        lv = ContourLevelSet(levels=vals, f_range=(fmin, fmax),
                             strategy="pretty", spacing=h)
        rows.append(("pretty",
                     quality_report(posterior, lv, samples=samples,
                                    seed=(seed, 2, int(round(h * 1000))),
                                    weights=areas)))
    return MeasureTable(rows=tuple(rows), obs_count=obs_count,
                        noise_var=noise_var, samples=samples, seed=seed)


@dataclass(frozen=True)
class CoverageConfig:
    """Design of one coverage simulation."""

    nu: int = 1
    spatial_range: float = 3.0
    domain_side: float = 10.0
    model_shape: Tuple[int, int] = (20, 20)
    truth_shape: Optional[Tuple[int, int]] = None
    obs_count: int = 500
    variance_ratio: float = 9.0
    level: float = 0.0
    target: float = 0.9
    fields: int = 5
    repeats: int = 10
    samples: int = 2000
    seed: int = 0
    methods: Tuple[str, ...] = ("step", "linear", "log", "pointwise")

    def __post_init__(self):
        if self.fields < 1 or self.repeats < 1:
            raise InputError("fields and repeats must be positive")
        if not 0.0 < self.target <= 1.0:
            raise InputError("target must lie in (0, 1]")
        if self.variance_ratio <= 0.0:
            raise InputError("variance ratio must be positive")
        if self.obs_count < 1:
            raise InputError("obs_count must be positive")
        for m in self.methods:
            if m not in ("step", "linear", "log", "pointwise"):
                raise InputError("unknown coverage method %r" % m)

    @property
    def replicates(self) -> int:
        return self.fields * self.repeats

    def to_json_dict(self) -> dict:
        d = {
            "nu": self.nu,
            "spatial_range": self.spatial_range,
            "domain_side": self.domain_side,
            "model_shape": list(self.model_shape),
            "truth_shape": list(self.truth_shape) if self.truth_shape else None,
            "obs_count": self.obs_count,
            "variance_ratio": self.variance_ratio,
            "level": self.level,
            "target": self.target,
            "fields": self.fields,
            "repeats": self.repeats,
            "samples": self.samples,
            "seed": self.seed,
            "methods": list(self.methods),
        }
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "CoverageConfig":
        kwargs = dict(d)
        if "model_shape" in kwargs:
            kwargs["model_shape"] = tuple(kwargs["model_shape"])
        if kwargs.get("truth_shape"):
            kwargs["truth_shape"] = tuple(kwargs["truth_shape"])
        else:
            kwargs.pop("truth_shape", None)
        if "methods" in kwargs:
            kwargs["methods"] = tuple(kwargs["methods"])
        unknown = set(kwargs) - set(cls.__dataclass_fields__)
        if unknown:
            raise InputError("unknown coverage config keys: %s"
                             % ", ".join(sorted(unknown)))
        return cls(**kwargs)


@dataclass(frozen=True)
class CoverageResult:
    """Empirical coverage per method with binomial standard errors."""

    coverage: Dict[str, float]
    std_error: Dict[str, float]
    failures: Dict[str, int]
    replicates: int
    config: CoverageConfig
    degenerate: bool = dc_field(default=False)

    def to_json_dict(self) -> dict:
        return {
            "coverage": dict(self.coverage),
            "std_error": dict(self.std_error),
            "failures": dict(self.failures),
            "replicates": self.replicates,
            "degenerate": self.degenerate,
            "config": self.config.to_json_dict(),
        }

    def to_text(self) -> str:
        lines = ["%-10s %9s %9s %9s" % ("method", "coverage", "se", "failures")]
        for m in self.config.methods:
            lines.append("%-10s %9.3f %9.3f %9d" %
                         (m, self.coverage[m], self.std_error[m],
                          self.failures[m]))
        lines.append("replicates: %d" % self.replicates)
        if self.degenerate:
            lines.append("warning: single replicate, standard errors degenerate")
        return "\n".join(lines) + "\n"


def _crossing_midpoints(mesh: Triangulation, values: np.ndarray,
                        level: float) -> np.ndarray:
    """Midpoints of mesh edges where the values cross the level strictly."""
    e = mesh.edges
    va = values[e[:, 0]] - level
    vb = values[e[:, 1]] - level
    hit = va * vb < 0.0
    return 0.5 * (mesh.vertices[e[hit, 0]] + mesh.vertices[e[hit, 1]])


def run_coverage_study(config: CoverageConfig) -> CoverageResult:
    """Empirical coverage of credible contour regions under the config.

    The region at level alpha = 1 - target is the complement of the
    interpolated avoiding set {F > target}; a replicate fails a method when
    any true-contour crossing midpoint lands in the avoiding set.  The
    pointwise variant scores the truth's side at the model nodes whose F
    exceeds the target, ignoring interpolation entirely.
    """
    side = config.domain_side
    bounds = ((0.0, 0.0), (side, side))
    model_mesh = lattice_mesh(config.model_shape[0], config.model_shape[1], bounds)
    matching = config.truth_shape is None or tuple(config.truth_shape) == tuple(config.model_shape)
    truth_mesh = model_mesh if matching else lattice_mesh(
        config.truth_shape[0], config.truth_shape[1], bounds)
    spec = MaternSpec.from_range(config.nu, config.spatial_range, sill=1.0)
    noise_var = spec.sill / config.variance_ratio
    model_prior = build_matern_precision(model_mesh, spec)
    truth_prior = model_prior if matching else build_matern_precision(truth_mesh, spec)
    to_model = None if matching else interpolation_matrix(truth_mesh, model_mesh.vertices)
    interp_methods = [m for m in config.methods if m != "pointwise"]
    successes = {m: 0 for m in config.methods}
    total = 0
    for i in range(config.fields):
        truth = sample_field(truth_prior, (config.seed, i, 0), 1)[0]
        truth_model = truth if matching else to_model @ truth
        mids = _crossing_midpoints(truth_mesh, truth, config.level)
        located = [model_mesh.containing_triangles(pt) for pt in mids]
        truth_above = truth_model > config.level
        for j in range(config.repeats):
            rng = np.random.default_rng(
                np.random.SeedSequence((config.seed, i, j, 1)))
            locs = rng.random((config.obs_count, 2)) * side
            A = interpolation_matrix(truth_mesh, locs)
            y = A @ truth + rng.standard_normal(config.obs_count) * math.sqrt(noise_var)
            obs = ObservationSet(locations=locs, values=y, noise_var=noise_var)
            posterior = condition_on_observations(model_prior, obs, model_mesh)
            levels = levels_from_values(posterior.mu, [config.level])
            assignment = assign_level_sets(posterior.mu, levels)
            cf = contour_function(posterior, assignment, levels,
                                  samples=config.samples,
                                  seed=(config.seed, i, j, 2))
            for m in interp_methods:
                fld = InterpolatedField.build(model_mesh, cf.values, m,
                                              assignment)
                failed = False
                for hits in located:
                    v = fld.evaluate_hits(hits)
                    if v > config.target:
                        failed = True
                        break
                if not failed:
                    successes[m] += 1
            if "pointwise" in config.methods:
                claimed = cf.values > config.target
                above = assignment.k == 1
                bad = claimed & (truth_above != above)
                if not bad.any():
                    successes["pointwise"] += 1
            total += 1
    coverage = {m: successes[m] / total for m in config.methods}
    se = {m: math.sqrt(max(coverage[m] * (1.0 - coverage[m]), 0.0) / total)
          for m in config.methods}
    failures = {m: total - successes[m] for m in config.methods}
    return CoverageResult(coverage=coverage, std_error=se, failures=failures,
                          replicates=total, config=config,
                          degenerate=total < 2)
