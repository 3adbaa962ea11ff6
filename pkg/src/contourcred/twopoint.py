"""Closed-form reference for the contour function on a two-node segment.

For a bivariate Gaussian (x(0), x(1)) linearly interpolated along one edge,
the nested credible construction at a point s reduces to one or two linear
constraints on the pair, because the acceptance region along the edge is a
superlevel set of a quadratic.  That makes the exact value a univariate or
bivariate normal probability, against which the discrete interpolation
rules can be compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from scipy import special

from .errors import InputError
from .probability import IntervalBox, bivariate_interval

__all__ = [
    "TwoPointParams",
    "ReferenceCase",
    "REFERENCE_CASES",
    "two_point_F_oracle",
    "two_point_endpoint_values",
    "compare_to_oracle",
    "OracleComparison",
]


@dataclass(frozen=True)
class TwoPointParams:
    """Marginal means, standard deviations and correlation of the two nodes."""

    mu0: float
    mu1: float
    sd0: float
    sd1: float
    rho: float

    def __post_init__(self):
        if not (self.sd0 > 0.0 and self.sd1 > 0.0):
            raise InputError("standard deviations must be positive")
        if not abs(self.rho) < 1.0:
            raise InputError("correlation must lie strictly inside (-1, 1)")

    def mean_at(self, t):
        return (1.0 - t) * self.mu0 + t * self.mu1

    def var_at(self, t):
        t = np.asarray(t, dtype=np.float64)
        c01 = self.rho * self.sd0 * self.sd1
        return ((1.0 - t) ** 2 * self.sd0 ** 2 + t ** 2 * self.sd1 ** 2
                + 2.0 * t * (1.0 - t) * c01)

    def cov_between(self, s, t):
        c01 = self.rho * self.sd0 * self.sd1
        return ((1.0 - s) * (1.0 - t) * self.sd0 ** 2 + s * t * self.sd1 ** 2
                + ((1.0 - s) * t + (1.0 - t) * s) * c01)


@dataclass(frozen=True)
class ReferenceCase:
    """A named two-point configuration with its contour level."""

    params: TwoPointParams
    u: float


# Endpoint configurations used in the interpolation comparisons: a balanced
# strongly correlated pair, a pair with one nearly level endpoint, and an
# uncorrelated variant of the second.
REFERENCE_CASES: Dict[str, ReferenceCase] = {
    "a": ReferenceCase(TwoPointParams(mu0=0.0, mu1=1.0, sd0=1.0, sd1=1.0,
                                      rho=0.9), u=-0.5),
    "b": ReferenceCase(TwoPointParams(mu0=0.0, mu1=2.0, sd0=4.0, sd1=1.0,
                                      rho=0.9), u=-0.1),
    "c": ReferenceCase(TwoPointParams(mu0=0.0, mu1=2.0, sd0=4.0, sd1=1.0,
                                      rho=0.0), u=-0.1),
}


def _marginal_p(params: TwoPointParams, u: float, t):
    """P(x(t) on its own side of u): the pointwise contour-separation level."""
    m = params.mean_at(np.asarray(t, dtype=np.float64))
    sd = np.sqrt(params.var_at(t))
    return special.ndtr(np.abs(m - u) / sd)


def _quad_region(a2: float, a1: float, a0: float) -> Tuple[Tuple[float, float], ...]:
    """Maximal intervals of {t in [0,1]: a2 t^2 + a1 t + a0 >= 0}."""

    def val(t):
        return (a2 * t + a1) * t + a0

    eps = 1e-13
    scale = abs(a2) + abs(a1) + abs(a0) + eps
    if abs(a2) < eps * scale:
        if abs(a1) < eps * scale:
            return ((0.0, 1.0),) if a0 >= -eps * scale else ()
        root = -a0 / a1
        if a1 > 0.0:
            lo, hi = max(root, 0.0), 1.0
        else:
            lo, hi = 0.0, min(root, 1.0)
        return ((lo, hi),) if lo <= hi and lo <= 1.0 and hi >= 0.0 else ()
    disc = a1 * a1 - 4.0 * a2 * a0
    if disc <= 0.0:
        mid = -a1 / (2.0 * a2)
        if a2 > 0.0:
            return ((0.0, 1.0),)
        # Downward parabola nonpositive everywhere; keep the vertex when it
        # touches zero inside the unit interval.
        if disc == 0.0 and 0.0 <= mid <= 1.0:
            return ((mid, mid),)
        return ()
    sq = math.sqrt(disc)
    q = -(a1 + math.copysign(sq, a1)) / 2.0
    r1, r2 = sorted((q / a2, a0 / q if q != 0.0 else -a1 / (2.0 * a2)))
    if a2 > 0.0:
        pieces = []
        if r1 >= 0.0:
            pieces.append((0.0, min(r1, 1.0)))
        if r2 <= 1.0:
            pieces.append((max(r2, 0.0), 1.0))
        return tuple(p for p in pieces
                     if p[0] <= p[1] and val((p[0] + p[1]) / 2.0) >= -1e-11 * scale)
    lo, hi = max(r1, 0.0), min(r2, 1.0)
    return ((lo, hi),) if lo <= hi else ()


def two_point_F_oracle(params: TwoPointParams, u: float, s) -> np.ndarray:
    """Exact credible contour function along the segment, evaluated at s.

    For each s the acceptance region is the set of edge points whose
    pointwise level is at least the level at s; the probability that the
    field stays on the assigned side over that whole region collapses to
    the constraints at the region's extreme points.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=np.float64))
    if np.any((s_arr < 0.0) | (s_arr > 1.0)):
        raise InputError("evaluation points must lie in [0, 1]")
    A = params.mu0 - u
    B = params.mu1 - params.mu0
    c01 = params.rho * params.sd0 * params.sd1
    q0 = params.sd0 ** 2
    q1 = 2.0 * (c01 - params.sd0 ** 2)
    q2 = params.sd0 ** 2 + params.sd1 ** 2 - 2.0 * c01
    out = np.empty(s_arr.shape, dtype=np.float64)
    for idx, sv in enumerate(s_arr):
        ms = A + B * sv
        vs = (q2 * sv + q1) * sv + q0
        z2 = ms * ms / vs
        if z2 < 1e-26:
            # The point sits on the contour itself.
            out[idx] = 0.0
            continue
        pieces = _quad_region(B * B - z2 * q2, 2.0 * A * B - z2 * q1,
                              A * A - z2 * q0)
        # s itself always satisfies p(t) >= p(s); root rounding can drop it
        # at the interval ends, so restore it as a degenerate constraint.
        if not any(lo - 1e-9 <= sv <= hi + 1e-9 for lo, hi in pieces):
            pieces = tuple(sorted(pieces + ((float(sv), float(sv)),)))
        cons = []
        for lo, hi in pieces:
            side = 1.0 if A + B * ((lo + hi) / 2.0) > 0.0 else -1.0
            cons.append((lo, side))
            cons.append((hi, side))
        if not cons:
            out[idx] = 0.0
            continue
        cons.sort()
        sides = [c[1] for c in cons]
        if all(sd == sides[0] for sd in sides):
            t1, side1 = cons[0]
            t2, side2 = cons[-1]
        else:
            # One sign change along the line: the two constraints adjacent
            # to the change dominate the rest.
            flip = next(i for i in range(1, len(sides)) if sides[i] != sides[i - 1])
            if any(sides[i] != sides[i - 1] for i in range(flip + 1, len(sides))):
                out[idx] = 0.0
                continue
            t1, side1 = cons[flip - 1]
            t2, side2 = cons[flip]
        if abs(t2 - t1) < 1e-13:
            if side1 != side2:
                out[idx] = 0.0
                continue
            m = params.mean_at(t1)
            sd = math.sqrt(params.var_at(t1))
            z = (u - m) / sd
            out[idx] = float(special.ndtr(-z) if side1 > 0 else special.ndtr(z))
            continue
        mean = np.array([params.mean_at(t1), params.mean_at(t2)])
        cov = np.array([[float(params.var_at(t1)), params.cov_between(t1, t2)],
                        [params.cov_between(t1, t2), float(params.var_at(t2))]])
        lo = np.array([u if side1 > 0 else -np.inf, u if side2 > 0 else -np.inf])
        hi = np.array([np.inf if side1 > 0 else u, np.inf if side2 > 0 else u])
        out[idx] = bivariate_interval(mean, cov, IntervalBox(lo, hi))
    out = np.clip(out, 0.0, 1.0)
    return out if np.ndim(s) else float(out[0])


def two_point_endpoint_values(params: TwoPointParams, u: float):
    """Discrete contour-function values at the two nodes.

    Nodes are ranked by pointwise level (ties to the lower node index); the
    first keeps its marginal, the second gets the joint probability of both
    one-sided constraints.
    """
    p0 = float(_marginal_p(params, u, 0.0))
    p1 = float(_marginal_p(params, u, 1.0))
    side0 = 1.0 if params.mu0 > u else -1.0
    side1 = 1.0 if params.mu1 > u else -1.0
    mean = np.array([params.mu0, params.mu1])
    c01 = params.rho * params.sd0 * params.sd1
    cov = np.array([[params.sd0 ** 2, c01], [c01, params.sd1 ** 2]])
    lo = np.array([u if side0 > 0 else -np.inf, u if side1 > 0 else -np.inf])
    hi = np.array([np.inf if side0 > 0 else u, np.inf if side1 > 0 else u])
    joint = bivariate_interval(mean, cov, IntervalBox(lo, hi))
    if p0 > p1 or (p0 == p1):
        return (min(p0, 1.0), joint), (p0, p1)
    return (joint, min(p1, 1.0)), (p0, p1)


def _interp_1d(f0: float, f1: float, s: np.ndarray, method: str) -> np.ndarray:
    if method == "step":
        return np.full_like(s, min(f0, f1))
    if method == "linear":
        return (1.0 - s) * f0 + s * f1
    if method == "log":
        if f0 <= 0.0 or f1 <= 0.0:
            raise InputError("log interpolation needs positive endpoint values")
        return np.exp((1.0 - s) * math.log(f0) + s * math.log(f1))
    raise InputError("unknown interpolation method %r" % method)


@dataclass(frozen=True)
class OracleComparison:
    """Exact versus interpolated contour-function values along one edge."""

    s: np.ndarray
    exact: np.ndarray
    interpolated: Dict[str, np.ndarray]
    endpoint_values: Tuple[float, float]
    endpoint_p: Tuple[float, float]

    def max_signed_deviation(self, method: str) -> float:
        """Most positive value of interpolated minus exact (anticonservatism)."""
        return float(np.max(self.interpolated[method] - self.exact))

    def max_abs_deviation(self, method: str) -> float:
        return float(np.max(np.abs(self.interpolated[method] - self.exact)))


def compare_to_oracle(params: TwoPointParams, u: float,
                      methods=("step", "linear", "log"),
                      grid: int = 101) -> OracleComparison:
    """Evaluate exact and interpolated contour functions on a unit-edge grid."""
    if grid < 2:
        raise InputError("grid must have at least 2 points")
    s = np.linspace(0.0, 1.0, grid)
    exact = two_point_F_oracle(params, u, s)
    (f0, f1), (p0, p1) = two_point_endpoint_values(params, u)
    interp = {m: _interp_1d(f0, f1, s, m) for m in methods}
    return OracleComparison(s=s, exact=np.asarray(exact),
                            interpolated=interp,
                            endpoint_values=(f0, f1), endpoint_p=(p0, p1))
