"""Arc reduction of the round N-sphere under a block-rotation symmetry.

The group O(m) x O(n), with m + n = N + 1 and m, n >= 2, acts on the unit
sphere of R^{N+1} = R^m x R^n.  Its orbits are the products
S^{m-1}(cos t) x S^{n-1}(sin t), one for each arc parameter t in [0, pi/2],
so an invariant function is a profile of the single variable t and every
sphere integral collapses to a weighted arc integral with the orbit-volume
weight

    w(t) = |S^{m-1}| |S^{n-1}| cos^{m-1}(t) sin^{n-1}(t).

The weighted H^1 form used throughout carries the conformal mass term
N(N-2)/4.  With that term included, the sphere-side quadratic form of an
invariant profile equals the flat Dirichlet energy of the corresponding
function on R^N obtained through stereographic projection, and the critical
power and mixed-power integrals transfer verbatim.  No point of R^N is ever
evaluated; the conformal factor is absorbed once and for all.

Discretization: uniform nodes on [0, pi/2] including the endpoints.  Nodal
quadrature is trapezoidal with the weights rescaled so that they sum to the
exact sphere area (the raw trapezoid rule is only second order, which would
miss the exactness target for constants).  The derivative part of the H^1
form is assembled from first differences on cell midpoints, which keeps the
form blind to nothing: nodal centered differences would assign zero energy
to the +-1 checkerboard mode and corrupt constrained minimization.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .errors import DimensionError, DomainError

__all__ = [
    "ModelParams",
    "ReducedGrid",
    "build_grid",
    "h1_form",
    "integrate",
    "orbit_weight",
    "sobolev_constant",
    "sphere_area",
]

HALF_PI = 0.5 * np.pi


def sphere_area(k: int) -> float:
    """Surface measure of the unit k-sphere, 2 pi^{(k+1)/2} / Gamma((k+1)/2)."""
    if k < 1:
        raise DomainError(f"sphere dimension must be >= 1, got {k}")
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


def sobolev_constant(N: int) -> float:
    """Best constant of the embedding D^{1,2}(R^N) -> L^{2N/(N-2)}(R^N).

    Closed form pi*N*(N-2)*(Gamma(N/2)/Gamma(N))^{2/N}; it also satisfies
    S^{N/2} = (N(N-2)/4)^{N/2} * |S^N|, which is used as a cross-check.
    """
    if N < 3:
        raise DomainError(f"Sobolev constant needs N >= 3, got {N}")
    return math.pi * N * (N - 2) * (math.gamma(N / 2.0) / math.gamma(N)) ** (2.0 / N)


@dataclass(frozen=True)
class ModelParams:
    """Dimension N, orbit split (m, n) with m + n = N + 1, and grid size M."""

    N: int
    m: int
    n: int
    M: int

    def __post_init__(self):
        if self.N < 4:
            raise DomainError(f"need N >= 4, got N={self.N}")
        if self.m < 2 or self.n < 2:
            raise DomainError(f"need m, n >= 2, got m={self.m}, n={self.n}")
        if self.m + self.n != self.N + 1:
            raise DomainError(
                f"need m + n = N + 1, got {self.m} + {self.n} != {self.N} + 1"
            )
        if self.M < 16:
            raise DomainError(f"need at least 16 grid cells, got M={self.M}")

    @property
    def two_star(self) -> float:
        """Critical Sobolev exponent 2N/(N-2)."""
        return 2.0 * self.N / (self.N - 2.0)

    @property
    def mass(self) -> float:
        """Conformal mass term N(N-2)/4 of the reduced H^1 form."""
        return self.N * (self.N - 2.0) / 4.0


def orbit_weight(theta, params: ModelParams):
    """Orbit-volume weight |S^{m-1}||S^{n-1}| cos^{m-1}(t) sin^{n-1}(t).

    Evaluation is folded about pi/4 so that swapping (m, n) together with
    t -> pi/2 - t reproduces bitwise-identical values.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < -1e-12) or np.any(theta > HALF_PI + 1e-12):
        raise DomainError("arc parameter outside [0, pi/2]")
    refl = HALF_PI - theta
    phi = np.minimum(theta, refl)
    lower = theta <= refl
    c = np.where(lower, np.cos(phi), np.sin(phi))
    s = np.where(lower, np.sin(phi), np.cos(phi))
    area = sphere_area(params.m - 1) * sphere_area(params.n - 1)
    out = area * (c ** (params.m - 1) * s ** (params.n - 1))
    return out if out.ndim else float(out)


@dataclass
class ReducedGrid:
    """Uniform arc grid with normalized orbit-weight quadrature.

    ``weights`` are the nodal quadrature weights (trapezoid in the orbit
    weight, rescaled to sum exactly to |S^N|); ``midweights`` sample the
    orbit weight at cell midpoints and drive the stiffness part of the
    H^1 form.  The factor of the tridiagonal H^1 operator is cached.
    """

    params: ModelParams
    theta: np.ndarray
    weights: np.ndarray
    midweights: np.ndarray
    h: float
    _chol: tuple = field(default=None, repr=False, compare=False)

    @property
    def size(self) -> int:
        return self.theta.size

    def _operator_banded(self) -> np.ndarray:
        wm = self.midweights / self.h
        diag = np.zeros(self.size)
        diag[:-1] += wm
        diag[1:] += wm
        diag += self.params.mass * self.weights
        ab = np.zeros((2, self.size))
        ab[0, 1:] = -wm
        ab[1, :] = diag
        return ab

    def apply_h1(self, u: np.ndarray) -> np.ndarray:
        """Matrix-vector product with the discrete H^1 operator."""
        flux = self.midweights * np.diff(u) / self.h
        out = self.params.mass * self.weights * u
        out[:-1] -= flux
        out[1:] += flux
        return out

    def solve_h1(self, rhs: np.ndarray) -> np.ndarray:
        """Solve K x = rhs for the discrete H^1 operator K."""
        if self._chol is None:
            self._chol = cholesky_banded(self._operator_banded(), lower=False)
        return cho_solve_banded((self._chol, False), rhs)


def build_grid(params: ModelParams) -> ReducedGrid:
    """Uniform grid on [0, pi/2] with exactness-normalized quadrature."""
    M = params.M
    h = HALF_PI / M
    i = np.arange(M + 1)
    # mirror-symmetric node construction: theta[M-i] == pi/2 - theta[i] bitwise
    theta = np.where(i <= M // 2, i * h, HALF_PI - (M - i) * h)
    w = orbit_weight(theta, params)
    q = w * h
    q[0] *= 0.5
    q[-1] *= 0.5
    q *= sphere_area(params.N) / q.sum()
    mid = orbit_weight(0.5 * (theta[:-1] + theta[1:]), params)
    return ReducedGrid(params=params, theta=theta, weights=q, midweights=mid, h=h)


def _check_length(values: np.ndarray, grid: ReducedGrid, name: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.size,):
        raise DimensionError(
            f"{name} has shape {values.shape}, grid expects ({grid.size},)"
        )
    return values


def integrate(values, grid: ReducedGrid) -> float:
    """Weighted arc integral = integral of the invariant extension over S^N."""
    values = _check_length(values, grid, "profile")
    return float(np.dot(grid.weights, values))


def h1_form(u1, u2, grid: ReducedGrid) -> float:
    """Weighted H^1 bilinear form with the conformal mass term.

    For u1 == u2 this is the flat-space Dirichlet integral of the profile's
    stereographic counterpart.
    """
    u1 = _check_length(u1, grid, "first profile")
    u2 = _check_length(u2, grid, "second profile")
    stiff = float(np.dot(grid.midweights, np.diff(u1) * np.diff(u2))) / grid.h
    mass = grid.params.mass * float(np.dot(grid.weights, u1 * u2))
    return stiff + mass
