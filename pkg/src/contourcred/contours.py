"""Contour level sets, their quality measures and the credible contour function.

A contour map of a point estimate is summarized by K levels.  Its quality
is the probability that the underlying field respects the map: staying
inside per-node intervals around the assigned level set (the P1 and P2
rectangle measures with whole-set and half-set slack), or keeping every
node of a credible subset on its own side of the nearest levels (the P0
average of the contour function F).

F is computed in a single sequential sweep over a factorization ordered so
that nodes with higher pointwise probability are integrated first; the
running product after each step is exactly the joint probability estimate
for the credible subset ending at that node, which makes the family of
credible subsets nested and recoverable from F by thresholding.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import special

from .errors import ComputationError, ConstantFieldError, InputError
from .gmrf import PrecisionModel, marginal_variances
from .linalg import cholesky
from .probability import (IntervalBox, ProbEstimate, SweepResult,
                          sequential_sweep)

__all__ = [
    "ContourLevelSet",
    "LevelAssignment",
    "MarginalBounds",
    "ContourFunction",
    "QualityReport",
    "SelectionResult",
    "standard_levels",
    "pretty_levels",
    "levels_from_values",
    "assign_level_sets",
    "marginal_p",
    "marginal_bounds",
    "measure_P1",
    "measure_P2",
    "contour_function",
    "contour_avoiding_mask",
    "measure_P0",
    "quality_report",
    "select_K",
]


@dataclass(frozen=True)
class ContourLevelSet:
    """Strictly increasing contour levels plus boundary conventions.

    ``level(j)`` continues the sequence with -inf below and +inf above;
    ``mid(j)`` gives midpoints between consecutive levels, extended past the
    ends by mirroring the outermost gap (or the data range when K = 1).
    """

    levels: np.ndarray
    f_range: Tuple[float, float]
    strategy: str
    spacing: Optional[float]
    untrimmed: Optional[np.ndarray] = None

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=np.float64)
        if lv.ndim != 1 or lv.size < 1:
            raise InputError("levels must be a nonempty 1-d array")
        if not np.all(np.isfinite(lv)):
            raise InputError("levels must be finite")
        if lv.size > 1 and not np.all(np.diff(lv) > 0.0):
            raise InputError("levels must be strictly increasing")
        object.__setattr__(self, "levels", lv)

    @property
    def K(self) -> int:
        return self.levels.shape[0]

    @property
    def _extensions(self) -> Tuple[float, float]:
        lv = self.levels
        if self.K > 1:
            return 2.0 * lv[0] - lv[1], 2.0 * lv[-1] - lv[-2]
        span = self.f_range[1] - self.f_range[0]
        return lv[0] - span, lv[0] + span

    @property
    def midpoints(self) -> np.ndarray:
        """Midpoints u_k^e for k = 0..K between extended consecutive levels."""
        lo_ext, hi_ext = self._extensions
        ext = np.concatenate([[lo_ext], self.levels, [hi_ext]])
        return 0.5 * (ext[:-1] + ext[1:])

    def level_array(self, j) -> np.ndarray:
        """level(j) with -inf for j < 1 and +inf for j > K, vectorized."""
        j = np.asarray(j, dtype=np.int64)
        out = np.where(j < 1, -np.inf, np.inf)
        inside = (j >= 1) & (j <= self.K)
        out[inside] = self.levels[j[inside] - 1]
        return out

    def mid_array(self, j) -> np.ndarray:
        """mid(j) with -inf for j < 0 and +inf for j > K, vectorized."""
        j = np.asarray(j, dtype=np.int64)
        mids = self.midpoints
        out = np.where(j < 0, -np.inf, np.inf)
        inside = (j >= 0) & (j <= self.K)
        out[inside] = mids[j[inside]]
        return out


def _range_of(f: np.ndarray) -> Tuple[float, float]:
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1 or f.size == 0:
        raise InputError("point estimate must be a nonempty 1-d array")
    if not np.all(np.isfinite(f)):
        raise InputError("point estimate must be finite")
    return float(f.min()), float(f.max())


def standard_levels(f, K: int) -> ContourLevelSet:
    """K levels splitting the data range into K + 1 equal intervals."""
    if K < 1:
        raise InputError("K must be at least 1")
    fmin, fmax = _range_of(f)
    if fmax == fmin:
        raise ConstantFieldError("point estimate is constant; levels are undefined")
    h = (fmax - fmin) / (K + 1)
    levels = fmin + h * np.arange(1, K + 1)
    return ContourLevelSet(levels=levels, f_range=(fmin, fmax),
                           strategy="standard", spacing=h)


def pretty_levels(f, K: int) -> ContourLevelSet:
    """Round levels at spacing 1, 2 or 5 times a power of ten.

    The spacing whose interval count over the data range is closest to
    K + 1 wins, with ties going to the wider spacing; the levels are the
    multiples of that spacing inside the range.  The covering sequence
    (one multiple beyond each end) is kept for reference.
    """
    if K < 1:
        raise InputError("K must be at least 1")
    fmin, fmax = _range_of(f)
    if fmax == fmin:
        raise ConstantFieldError("point estimate is constant; levels are undefined")
    span = fmax - fmin
    m_lo = int(math.floor(math.log10(span / (K + 2)))) - 1
    m_hi = int(math.ceil(math.log10(span))) + 1
    best = None
    for m in range(m_lo, m_hi + 1):
        for c in (1.0, 2.0, 5.0):
            h = c * 10.0 ** m
            score = abs(span / h - (K + 1))
            if best is None or score < best[0] - 1e-12 or \
                    (abs(score - best[0]) <= 1e-12 and h > best[1]):
                best = (score, h)
    h = best[1]
    k_lo = int(math.ceil(fmin / h - 1e-9))
    k_hi = int(math.floor(fmax / h + 1e-9))
    if k_hi < k_lo:
        raise ComputationError("no round level falls inside the data range")
    levels = h * np.arange(k_lo, k_hi + 1, dtype=np.float64)
    untrimmed = h * np.arange(int(math.floor(fmin / h + 1e-9)),
                              int(math.ceil(fmax / h - 1e-9)) + 1,
                              dtype=np.float64)
    return ContourLevelSet(levels=levels, f_range=(fmin, fmax),
                           strategy="pretty", spacing=h, untrimmed=untrimmed)


def levels_from_values(f, values, strategy: str = "custom") -> ContourLevelSet:
    """Level set from explicit values, keeping the data range for extensions."""
    fmin, fmax = _range_of(f)
    values = np.asarray(values, dtype=np.float64)
    gaps = np.diff(values)
    if values.size > 1 and np.all(np.abs(gaps - gaps[0]) <= 1e-9 * max(abs(gaps[0]), 1e-300)):
        spacing = float(gaps[0])
    else:
        spacing = None
    return ContourLevelSet(levels=values, f_range=(fmin, fmax),
                           strategy=strategy, spacing=spacing)


@dataclass(frozen=True)
class LevelAssignment:
    """Level-set index per node: k counts the levels strictly below f."""

    k: np.ndarray
    f: np.ndarray

    @property
    def n(self) -> int:
        return self.k.shape[0]


def assign_level_sets(f, levels: ContourLevelSet) -> LevelAssignment:
    """Assign each node to its level set; values on a level join the lower set."""
    f = np.asarray(f, dtype=np.float64)
    fmin, fmax = _range_of(f)
    k = np.searchsorted(levels.levels, f, side="left").astype(np.int64)
    return LevelAssignment(k=k, f=f.copy())


def _interval_probs(model: PrecisionModel, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    sd = np.sqrt(marginal_variances(model))
    if np.any(sd <= 0.0):
        raise ComputationError("marginal variances must be positive")
    with np.errstate(invalid="ignore"):
        z_lo = (lo - model.mu) / sd
        z_hi = (hi - model.mu) / sd
    p = special.ndtr(z_hi) - special.ndtr(z_lo)
    return np.clip(p, 0.0, 1.0)


def marginal_p(model: PrecisionModel, assignment: LevelAssignment,
               levels: ContourLevelSet) -> np.ndarray:
    """Per-node probability of the field lying in its assigned level-set band."""
    _check_sizes(model, assignment)
    lo = levels.level_array(assignment.k)
    hi = levels.level_array(assignment.k + 1)
    return _interval_probs(model, lo, hi)


@dataclass(frozen=True)
class MarginalBounds:
    """Per-node interval probabilities bounding the rectangle measures.

    ``whole_set`` widens each band by one full neighboring set on each side
    (the P1 rectangles); ``half_set`` widens to the neighboring midpoints
    (the P2 rectangles).  Their minima bound P1 and P2 from above.
    """

    whole_set: np.ndarray
    half_set: np.ndarray


def _check_sizes(model: PrecisionModel, assignment: LevelAssignment):
    if assignment.n != model.n:
        raise InputError("assignment length %d does not match model size %d"
                         % (assignment.n, model.n))


def _p1_box(assignment: LevelAssignment, levels: ContourLevelSet):
    lo = levels.level_array(assignment.k - 1)
    hi = levels.level_array(assignment.k + 2)
    return lo, hi


def _p2_box(assignment: LevelAssignment, levels: ContourLevelSet):
    lo = levels.mid_array(assignment.k - 1)
    hi = levels.mid_array(assignment.k + 1)
    return lo, hi


def marginal_bounds(model: PrecisionModel, assignment: LevelAssignment,
                    levels: ContourLevelSet) -> MarginalBounds:
    """Upper-bound interval probabilities for the two rectangle measures."""
    _check_sizes(model, assignment)
    lo1, hi1 = _p1_box(assignment, levels)
    lo2, hi2 = _p2_box(assignment, levels)
    return MarginalBounds(whole_set=_interval_probs(model, lo1, hi1),
                          half_set=_interval_probs(model, lo2, hi2))


def measure_P1(model: PrecisionModel, assignment: LevelAssignment,
               levels: ContourLevelSet, samples: int = 10000, seed=0) -> ProbEstimate:
    """Probability that every node stays within one whole set of its own."""
    _check_sizes(model, assignment)
    lo, hi = _p1_box(assignment, levels)
    box = IntervalBox(lo, hi)
    res = sequential_sweep(model.factor, model.mu, box, samples, seed)
    return ProbEstimate(estimate=float(res.traj_mean[-1]),
                        std_error=float(res.traj_se[-1]),
                        samples=samples, seed=seed)


def measure_P2(model: PrecisionModel, assignment: LevelAssignment,
               levels: ContourLevelSet, samples: int = 10000, seed=0) -> ProbEstimate:
    """Probability that every node stays within half a set of its own."""
    _check_sizes(model, assignment)
    lo, hi = _p2_box(assignment, levels)
    box = IntervalBox(lo, hi)
    res = sequential_sweep(model.factor, model.mu, box, samples, seed)
    return ProbEstimate(estimate=float(res.traj_mean[-1]),
                        std_error=float(res.traj_se[-1]),
                        samples=samples, seed=seed)


@dataclass(frozen=True)
class ContourFunction:
    """Credible contour function F with its building blocks.

    ``values[i]`` estimates the joint probability that all nodes at least as
    pointwise-probable as node i lie in their assigned bands; thresholding
    ``values`` at 1 - alpha recovers the credible subset for that alpha.
    """

    values: np.ndarray
    marginals: np.ndarray
    std_error: np.ndarray
    order: np.ndarray
    weights: np.ndarray
    samples: int
    seed: object
    weighted_se: float

    @property
    def n(self) -> int:
        return self.values.shape[0]


def contour_function(model: PrecisionModel, assignment: LevelAssignment,
                     levels: ContourLevelSet, samples: int = 10000, seed=0,
                     weights=None) -> ContourFunction:
    """Single-sweep estimate of the credible contour function at every node.

    The sweep factorizes the precision so that nodes are integrated in
    decreasing order of their band probability (ties broken by node index);
    the trajectory of running products then reads out F for every nested
    credible subset at once.  ``weights`` (positive, default uniform) also
    yield the average-measure standard error.
    """
    _check_sizes(model, assignment)
    n = model.n
    if weights is None:
        w = np.full(n, 1.0 / n)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (n,) or not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            raise InputError("weights must be positive and finite, one per node")
        w = w / w.sum()
    p = marginal_p(model, assignment, levels)
    order = np.lexsort((np.arange(n), -p))
    factor = cholesky(model.Q, ordering=order[::-1])
    lo = levels.level_array(assignment.k)
    hi = levels.level_array(assignment.k + 1)
    box = IntervalBox(lo, hi)
    res = sequential_sweep(factor, model.mu, box, samples, seed, weights=w)
    if not np.array_equal(res.order, order):
        raise ComputationError("sweep order disagrees with the requested ordering")
    traj = np.minimum.accumulate(res.traj_mean)
    values = np.empty(n)
    values[order] = traj
    se = np.empty(n)
    se[order] = res.traj_se
    return ContourFunction(values=values, marginals=p, std_error=se,
                           order=order, weights=w, samples=samples, seed=seed,
                           weighted_se=float(res.weighted_se))


def contour_avoiding_mask(cf: ContourFunction, alpha: float) -> np.ndarray:
    """Nodes of the credible subset at level alpha (strict threshold).

    The subset is the longest prefix of the sweep order whose running joint
    probability stays above 1 - alpha, which coincides with thresholding F.
    """
    if not 0.0 < alpha <= 1.0:
        raise InputError("alpha must lie in (0, 1]")
    thr = 1.0 - alpha
    prefix = cf.values[cf.order] > thr
    m = int(np.argmin(prefix)) if not prefix.all() else prefix.size
    mask = np.zeros(cf.n, dtype=bool)
    mask[cf.order[:m]] = True
    return mask


def measure_P0(cf: ContourFunction, weights=None) -> ProbEstimate:
    """Weighted mean of the contour function, an average credibility measure.

    The estimate is the exact weighted mean of ``cf.values``; its standard
    error comes from the per-sample weighted means accumulated in the same
    sweep, so ``weights`` must match the ones the sweep used.
    """
    if weights is None:
        w = cf.weights
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != cf.weights.shape or np.any(w <= 0.0):
            raise InputError("weights must be positive, one per node")
        w = w / w.sum()
        if not np.allclose(w, cf.weights, rtol=0.0, atol=1e-12):
            raise InputError("weights differ from the sweep weights; "
                             "rebuild the contour function with these weights")
    est = float(np.dot(w, cf.values))
    return ProbEstimate(estimate=min(max(est, 0.0), 1.0),
                        std_error=cf.weighted_se,
                        samples=cf.samples, seed=cf.seed)


@dataclass(frozen=True)
class QualityReport:
    """All quality measures of one contour map, with their uncertainties."""

    K: int
    spacing: Optional[float]
    levels: Tuple[float, ...]
    P0: float
    P1: float
    P2: float
    se_P0: float
    se_P1: float
    se_P2: float
    bound_rho1: float
    bound_rho2: float
    samples: int
    seed: object
    wall_time: float = field(compare=False, default=0.0)

    def to_json_dict(self) -> dict:
        # Wall time is execution-dependent and stays out of serialized output.
        return {
            "K": self.K,
            "spacing": self.spacing,
            "levels": list(self.levels),
            "P0": self.P0,
            "P1": self.P1,
            "P2": self.P2,
            "se_P0": self.se_P0,
            "se_P1": self.se_P1,
            "se_P2": self.se_P2,
            "bound_rho1": self.bound_rho1,
            "bound_rho2": self.bound_rho2,
            "samples": self.samples,
            "seed": self.seed,
        }


def quality_report(model: PrecisionModel, levels: ContourLevelSet,
                   samples: int = 10000, seed=0, weights=None,
                   f=None) -> QualityReport:
    """Compute P0, P1, P2 and their bounds for one level set.

    The point estimate defaults to the model mean.  Component estimates use
    seeds derived from ``seed`` so they are independent yet reproducible.
    """
    t0 = time.perf_counter()
    f = model.mu if f is None else np.asarray(f, dtype=np.float64)
    assignment = assign_level_sets(f, levels)
    bounds = marginal_bounds(model, assignment, levels)
    p1 = measure_P1(model, assignment, levels, samples, _sub_seed(seed, 1))
    p2 = measure_P2(model, assignment, levels, samples, _sub_seed(seed, 2))
    cf = contour_function(model, assignment, levels, samples,
                          _sub_seed(seed, 0), weights=weights)
    p0 = measure_P0(cf)
    return QualityReport(
        K=levels.K, spacing=levels.spacing,
        levels=tuple(float(v) for v in levels.levels),
        P0=p0.estimate, P1=p1.estimate, P2=p2.estimate,
        se_P0=p0.std_error, se_P1=p1.std_error, se_P2=p2.std_error,
        bound_rho1=float(bounds.whole_set.min()),
        bound_rho2=float(bounds.half_set.min()),
        samples=samples, seed=seed,
        wall_time=time.perf_counter() - t0)


def _sub_seed(seed, tag: int):
    if seed is None:
        return None
    if isinstance(seed, (tuple, list)):
        return tuple(seed) + (tag,)
    return (int(seed), tag)


@dataclass(frozen=True)
class ScanEntry:
    """One step of the K-selection scan."""

    requested_K: int
    actual_K: int
    spacing: Optional[float]
    bound: float
    evaluated: bool
    estimate: Optional[float] = None
    std_error: Optional[float] = None
    selected: bool = False


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of scanning K from large to small against a target."""

    K: int
    levels: Optional[ContourLevelSet]
    report: Optional[QualityReport]
    scan: Tuple[ScanEntry, ...]
    conservative: bool = False


def select_K(model: PrecisionModel, target: float, measure: str = "p2",
             strategy: str = "standard", k_max: int = 10,
             samples: int = 10000, seed=0, weights=None, f=None,
             audit: bool = False) -> SelectionResult:
    """Largest K whose measure estimate reaches the target credibility.

    Candidate K values are scanned from ``k_max`` down; a candidate whose
    marginal upper bound already falls below the target is rejected without
    Monte Carlo work (in audit mode it is still evaluated, so the rejection
    can be checked).  Returns K = 0 with the scan record when nothing holds.
    """
    if not 0.0 <= target <= 1.0:
        raise InputError("target must lie in [0, 1]")
    measure = measure.lower()
    if measure not in ("p0", "p1", "p2"):
        raise InputError("measure must be one of p0, p1, p2")
    if strategy not in ("standard", "pretty"):
        raise InputError("strategy must be standard or pretty")
    if k_max < 1:
        raise InputError("k_max must be at least 1")
    f_arr = model.mu if f is None else np.asarray(f, dtype=np.float64)
    n = model.n
    if weights is None:
        w_norm = np.full(n, 1.0 / n)
    else:
        w_norm = np.asarray(weights, dtype=np.float64)
        w_norm = w_norm / w_norm.sum()
    entries = []
    seen = {}
    for K in range(k_max, 0, -1):
        levels = (standard_levels(f_arr, K) if strategy == "standard"
                  else pretty_levels(f_arr, K))
        key = tuple(levels.levels.tolist())
        if key in seen:
            continue
        assignment = assign_level_sets(f_arr, levels)
        bounds = marginal_bounds(model, assignment, levels)
        if measure == "p1":
            bound = float(bounds.whole_set.min())
        elif measure == "p2":
            bound = float(bounds.half_set.min())
        else:
            p = marginal_p(model, assignment, levels)
            bound = float(np.dot(w_norm, p))
        seen[key] = True
        sub = _sub_seed(seed, K)
        if bound < target and not audit:
            entries.append(ScanEntry(requested_K=K, actual_K=levels.K,
                                     spacing=levels.spacing, bound=bound,
                                     evaluated=False))
            continue
        if measure == "p1":
            est = measure_P1(model, assignment, levels, samples, sub)
        elif measure == "p2":
            est = measure_P2(model, assignment, levels, samples, sub)
        else:
            cf = contour_function(model, assignment, levels, samples, sub,
                                  weights=weights)
            est = measure_P0(cf)
        hit = bound >= target and est.estimate >= target
        entries.append(ScanEntry(requested_K=K, actual_K=levels.K,
                                 spacing=levels.spacing, bound=bound,
                                 evaluated=True, estimate=est.estimate,
                                 std_error=est.std_error, selected=hit))
        if hit:
            report = quality_report(model, levels, samples=samples, seed=sub,
                                    weights=weights, f=f_arr)
            return SelectionResult(K=levels.K, levels=levels, report=report,
                                   scan=tuple(entries),
                                   conservative=est.estimate - 2.0 * est.std_error >= target)
    return SelectionResult(K=0, levels=None, report=None, scan=tuple(entries))
