"""Gaussian fields with sparse precision matrices on triangulations.

The Matern construction assembles the usual finite-element mass and
stiffness matrices on the mesh, lumps the mass matrix so that every product
stays sparse, and raises the operator to the power implied by the smoothness
order.  Conditioning on noisy point observations is a sparse precision
update followed by one linear solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse, special

from . import _kernels
from .errors import (DegenerateMeshError, InputError,
                     UnsupportedSmoothnessError)
from .linalg import CholeskyFactor, SparseSymMatrix, cholesky
from .mesh import Triangulation, interpolation_matrix

__all__ = [
    "MaternSpec",
    "PrecisionModel",
    "ObservationSet",
    "matern_covariance",
    "build_matern_precision",
    "condition_on_values",
    "condition_on_observations",
    "marginal_variances",
    "sample_field",
]

_SAMPLE_CHUNK = 512


@dataclass(frozen=True)
class MaternSpec:
    """Matern field parameters: integer smoothness, inverse scale, variance.

    ``phi2`` multiplies the unit-coefficient covariance; ``sill`` below gives
    the resulting variance at distance zero.
    """

    nu: int
    kappa: float
    phi2: float = 1.0

    def __post_init__(self):
        if int(self.nu) != self.nu or self.nu not in (1, 2):
            raise UnsupportedSmoothnessError(
                "smoothness order must be 1 or 2, got %r" % (self.nu,))
        if not (self.kappa > 0.0 and math.isfinite(self.kappa)):
            raise InputError("kappa must be a positive finite number")
        if not (self.phi2 > 0.0 and math.isfinite(self.phi2)):
            raise InputError("phi2 must be a positive finite number")

    @property
    def spatial_range(self) -> float:
        """Distance where correlation drops to about 0.1."""
        return math.sqrt(8.0 * self.nu) / self.kappa

    @property
    def sill(self) -> float:
        """Variance at distance zero."""
        return self.phi2 * special.gamma(self.nu) / (
            4.0 * math.pi * special.gamma(self.nu + 1.0) * self.kappa ** (2 * self.nu))

    @classmethod
    def from_range(cls, nu: int, spatial_range: float, sill: float = 1.0) -> "MaternSpec":
        """Spec with given effective range and variance at distance zero."""
        if not (spatial_range > 0.0 and math.isfinite(spatial_range)):
            raise InputError("spatial range must be a positive finite number")
        if not (sill > 0.0 and math.isfinite(sill)):
            raise InputError("sill must be a positive finite number")
        kappa = math.sqrt(8.0 * nu) / spatial_range
        unit = cls(nu=nu, kappa=kappa, phi2=1.0)
        return cls(nu=nu, kappa=kappa, phi2=sill / unit.sill)


def matern_covariance(h, spec: MaternSpec) -> np.ndarray:
    """Stationary covariance at separation distances ``h``."""
    h = np.asarray(h, dtype=np.float64)
    if np.any(h < 0.0):
        raise InputError("distances must be nonnegative")
    nu = float(spec.nu)
    scale = spec.phi2 / (4.0 * math.pi * special.gamma(nu + 1.0)
                         * spec.kappa ** (2.0 * nu))
    out = np.empty(np.shape(h), dtype=np.float64)
    kh = spec.kappa * h
    zero = kh == 0.0
    out[zero] = special.gamma(nu) * scale
    pos = ~zero
    out[pos] = 2.0 ** (1.0 - nu) * scale * kh[pos] ** nu * special.kv(nu, kh[pos])
    return out if out.ndim else float(out)


class PrecisionModel:
    """Gaussian vector with mean ``mu`` and sparse precision ``Q``.

    The Cholesky factor (approximate-minimum-degree ordered) and marginal
    variances are computed lazily and cached.
    """

    def __init__(self, mu: np.ndarray, Q: SparseSymMatrix):
        mu = np.asarray(mu, dtype=np.float64)
        if mu.ndim != 1 or mu.shape[0] != Q.n:
            raise InputError("mean length %s does not match precision size %d"
                             % (mu.shape, Q.n))
        if not np.all(np.isfinite(mu)):
            raise InputError("mean must be finite")
        self.mu = mu
        self.Q = Q
        self._factor: Optional[CholeskyFactor] = None
        self._variances: Optional[np.ndarray] = None
        self.variance_method = "takahashi"

    @property
    def n(self) -> int:
        return self.Q.n

    @property
    def factor(self) -> CholeskyFactor:
        if self._factor is None:
            self._factor = cholesky(self.Q)
        return self._factor

    def variances(self) -> np.ndarray:
        if self._variances is None:
            self._variances = self.factor.selected_inverse_diagonal()
        return self._variances


def marginal_variances(model: PrecisionModel) -> np.ndarray:
    """Diagonal of the covariance matrix (selected inverse of the precision)."""
    return model.variances()


@dataclass(frozen=True)
class ObservationSet:
    """Point observations with iid Gaussian noise of common variance."""

    locations: np.ndarray
    values: np.ndarray
    noise_var: float
    covariates: Optional[np.ndarray] = None

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=np.float64)
        val = np.asarray(self.values, dtype=np.float64)
        if loc.ndim != 2 or loc.shape[1] != 2:
            raise InputError("locations must have shape (m, 2)")
        if val.shape != (loc.shape[0],):
            raise InputError("values must match the number of locations")
        if not (self.noise_var > 0.0 and math.isfinite(self.noise_var)):
            raise InputError("noise variance must be a positive finite number")
        cov = self.covariates
        if cov is not None:
            cov = np.asarray(cov, dtype=np.float64)
            if cov.ndim != 2 or cov.shape[0] != loc.shape[0]:
                raise InputError("covariates must have shape (m, k)")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "values", val)
        object.__setattr__(self, "covariates", cov)

    @property
    def count(self) -> int:
        return self.locations.shape[0]


def _fem_matrices(mesh: Triangulation):
    """Lumped mass diagonal and stiffness matrix for linear elements."""
    n = mesh.n_vertices
    tris = mesh.triangles
    areas = mesh.triangle_areas
    if np.any(areas <= 0.0):
        raise DegenerateMeshError("mesh contains a degenerate triangle")
    c_diag = mesh.vertex_areas
    rows, cols, vals = [], [], []
    verts = mesh.vertices
    for t in range(mesh.n_triangles):
        i, j, k = tris[t]
        # Edge vectors opposite each vertex; gradients of the hat functions
        # are their quarter-turn rotations over twice the area.
        e = np.array([verts[k] - verts[j],
                      verts[i] - verts[k],
                      verts[j] - verts[i]])
        g = e @ e.T / (4.0 * areas[t])
        for a in range(3):
            for b in range(3):
                rows.append(tris[t, a])
                cols.append(tris[t, b])
                vals.append(g[a, b])
    G = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsc()
    G.sum_duplicates()
    return c_diag, G


def build_matern_precision(mesh: Triangulation, spec: MaternSpec) -> PrecisionModel:
    """Zero-mean Matern field on the mesh vertices with sparse precision."""
    c_diag, G = _fem_matrices(mesh)
    if np.any(c_diag <= 0.0):
        raise DegenerateMeshError("a vertex has no incident triangle area")
    n = mesh.n_vertices
    K = sparse.diags(spec.kappa ** 2 * c_diag, format="csc") + G
    Cinv = sparse.diags(1.0 / c_diag, format="csc")
    Q = K @ Cinv @ K
    for _ in range(spec.nu - 1):
        Q = Q @ Cinv @ K
    Q = sparse.csc_matrix(Q) / spec.phi2
    Q = SparseSymMatrix.from_csc((Q + Q.T) * 0.5, tol=1e-8)
    return PrecisionModel(np.zeros(n), Q)


def condition_on_values(prior: PrecisionModel, A, y, noise_var: float) -> PrecisionModel:
    """Posterior under y = A x + noise with iid Gaussian noise."""
    if not (noise_var > 0.0 and math.isfinite(noise_var)):
        raise InputError("noise variance must be a positive finite number")
    A = sparse.csr_matrix(A)
    y = np.asarray(y, dtype=np.float64)
    if A.shape[1] != prior.n or y.shape != (A.shape[0],):
        raise InputError("observation operator and values have inconsistent shapes")
    Qpost = prior.Q.csc + (A.T @ A) / noise_var
    Qpost = SparseSymMatrix.from_csc((Qpost + Qpost.T) * 0.5, tol=1e-8)
    rhs = prior.Q.matvec(prior.mu) + (A.T @ y) / noise_var
    post = PrecisionModel(np.zeros(prior.n), Qpost)
    post.mu = post.factor.solve(rhs)
    return post


def condition_on_observations(prior: PrecisionModel, obs: ObservationSet,
                              mesh: Triangulation) -> PrecisionModel:
    """Posterior given point observations interpolated off the mesh."""
    if mesh.n_vertices != prior.n:
        raise InputError("mesh size does not match the prior model")
    A = interpolation_matrix(mesh, obs.locations)
    return condition_on_values(prior, A, obs.values, obs.noise_var)


def sample_field(model: PrecisionModel, seed, count: int) -> np.ndarray:
    """Draw ``count`` joint realizations, shape (count, n).

    Standard normals are generated per fixed-size chunk from seeds spawned
    off ``seed``, so results do not depend on how chunks are distributed
    across workers.
    """
    if count < 0:
        raise InputError("count must be nonnegative")
    n = model.n
    out = np.empty((count, n), dtype=np.float64)
    if count == 0:
        return out
    factor = model.factor
    n_chunks = (count + _SAMPLE_CHUNK - 1) // _SAMPLE_CHUNK
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    for c in range(n_chunks):
        a = c * _SAMPLE_CHUNK
        b = min(a + _SAMPLE_CHUNK, count)
        z = np.random.default_rng(children[c]).standard_normal((b - a, n))
        _kernels.solve_upper_multi(n, factor.Lp, factor.Li, factor.Lx, z)
        out[a:b] = factor.unpermute(z)
    out += model.mu
    return out
