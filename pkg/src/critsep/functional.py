"""Discrete energy of the competitive critical system and its Nehari algebra.

Everything is expressed through five scalar integrals of a pair (u, v) of
arc profiles:

    a1 = |u|_{H^1}^2          b1 = mu1 * int |u|^{2*}
    a2 = |v|_{H^1}^2          b2 = mu2 * int |v|^{2*}
    c  = int |u|^alpha |v|^beta

with 2* = 2N/(N-2) and the weighted H^1 form of the geometry module.  The
energy is

    E = (a1 + a2)/2 - (b1 + b2)/2* - lambda * c,

the Nehari residuals are f = a1 - b1 - lambda*alpha*c and
h = a2 - b2 - lambda*beta*c, and scaling a pair to the Nehari set amounts to
solving f(su, tv) = h(su, tv) = 0 for positive (s, t).

Gradients are returned as Riesz representatives with respect to the H^1
inner product on pairs, i.e. they are preconditioned by the inverse of the
discrete H^1 operator.  This makes gradient norms directly comparable with
the norm bounds that hold on the Nehari set, and it lets the solver take
well-scaled descent steps.  Since alpha, beta in (1, 2] the energy is C^1
but not C^2 at zeros of a component; the mixed-power force is written with
exponents alpha-1, beta-1 >= 0 only and vanishes where a component does.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateConstraintError,
    DegenerateInputError,
    DomainError,
)
from .geometry import ModelParams, ReducedGrid, h1_form, integrate, sobolev_constant

__all__ = [
    "CouplingParams",
    "NehariResiduals",
    "PairIntegrals",
    "PairState",
    "check_exponents",
    "energy",
    "gradient",
    "limit_energy",
    "limit_residuals",
    "nehari_det_bound",
    "nehari_matrix",
    "nehari_project",
    "pair_integrals",
    "residuals",
    "single_project",
    "sobolev_lower_bound",
    "tangent_gradient",
]


@dataclass(frozen=True)
class CouplingParams:
    """Material constants mu1, mu2 > 0, powers alpha, beta in (1,2], coupling lam."""

    mu1: float
    mu2: float
    alpha: float
    beta: float
    lam: float

    def __post_init__(self):
        if self.mu1 <= 0 or self.mu2 <= 0:
            raise DomainError(f"mu1, mu2 must be positive, got {self.mu1}, {self.mu2}")
        for name, ex in (("alpha", self.alpha), ("beta", self.beta)):
            if not (1.0 < ex <= 2.0):
                raise DomainError(f"{name} must lie in (1, 2], got {ex}")


def check_exponents(cp: CouplingParams, params: ModelParams) -> None:
    """Require alpha + beta to match the critical exponent of the dimension."""
    if abs(cp.alpha + cp.beta - params.two_star) > 1e-12:
        raise DomainError(
            f"alpha + beta = {cp.alpha + cp.beta!r} but 2* = {params.two_star!r} "
            f"for N = {params.N}"
        )


@dataclass(frozen=True)
class PairState:
    """A pair of arc profiles; the optimization variable."""

    u: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class NehariResiduals:
    f_val: float
    h_val: float


@dataclass(frozen=True)
class PairIntegrals:
    """The five scalars that determine energy, residuals and scalings."""

    a1: float
    b1: float
    a2: float
    b2: float
    coupling: float


def _crit_power(x: np.ndarray, p: float) -> np.ndarray:
    """|x|^p, safe for p > 0."""
    return np.abs(x) ** p


def pair_integrals(pair: PairState, cp: CouplingParams, grid: ReducedGrid) -> PairIntegrals:
    p = grid.params.two_star
    u, v = pair.u, pair.v
    return PairIntegrals(
        a1=h1_form(u, u, grid),
        b1=cp.mu1 * integrate(_crit_power(u, p), grid),
        a2=h1_form(v, v, grid),
        b2=cp.mu2 * integrate(_crit_power(v, p), grid),
        coupling=integrate(_crit_power(u, cp.alpha) * _crit_power(v, cp.beta), grid),
    )


def energy_from_integrals(ints: PairIntegrals, cp: CouplingParams, params: ModelParams) -> float:
    p = params.two_star
    return 0.5 * (ints.a1 + ints.a2) - (ints.b1 + ints.b2) / p - cp.lam * ints.coupling


def residuals_from_integrals(ints: PairIntegrals, cp: CouplingParams) -> NehariResiduals:
    return NehariResiduals(
        f_val=ints.a1 - ints.b1 - cp.lam * cp.alpha * ints.coupling,
        h_val=ints.a2 - ints.b2 - cp.lam * cp.beta * ints.coupling,
    )


def energy(pair: PairState, cp: CouplingParams, grid: ReducedGrid) -> float:
    """Value of the competitive energy at a pair."""
    return energy_from_integrals(pair_integrals(pair, cp, grid), cp, grid.params)


def residuals(pair: PairState, cp: CouplingParams, grid: ReducedGrid) -> NehariResiduals:
    """Nehari residuals: the energy derivative paired against (u,0) and (0,v)."""
    return residuals_from_integrals(pair_integrals(pair, cp, grid), cp)


def _mixed_force_u(u, v, cp):
    # d/du of |u|^alpha |v|^beta, written with the nonnegative exponent alpha-1
    return cp.alpha * np.sign(u) * np.abs(u) ** (cp.alpha - 1.0) * np.abs(v) ** cp.beta


def _mixed_force_v(u, v, cp):
    return cp.beta * np.abs(u) ** cp.alpha * np.sign(v) * np.abs(v) ** (cp.beta - 1.0)


def _crit_force(x, p):
    return np.sign(x) * np.abs(x) ** (p - 1.0)


def gradient(pair: PairState, cp: CouplingParams, grid: ReducedGrid) -> PairState:
    """Riesz representative of dE with respect to the H^1 pair inner product.

    The linear part inverts exactly (K^{-1} K u = u), so only the force
    terms need a solve; the result vanishes at discrete critical points.
    """
    p = grid.params.two_star
    u, v = pair.u, pair.v
    q = grid.weights
    force_u = cp.mu1 * _crit_force(u, p) + cp.lam * _mixed_force_u(u, v, cp)
    force_v = cp.mu2 * _crit_force(v, p) + cp.lam * _mixed_force_v(u, v, cp)
    return PairState(u=u - grid.solve_h1(q * force_u), v=v - grid.solve_h1(q * force_v))


def _constraint_gradients(pair, cp, grid):
    """Riesz gradients of the two Nehari residual functionals."""
    p = grid.params.two_star
    u, v = pair.u, pair.v
    q = grid.weights
    gf_u = 2.0 * u - grid.solve_h1(
        q * (p * cp.mu1 * _crit_force(u, p) + cp.lam * cp.alpha * _mixed_force_u(u, v, cp))
    )
    gf_v = -grid.solve_h1(q * cp.lam * cp.alpha * _mixed_force_v(u, v, cp))
    gh_u = -grid.solve_h1(q * cp.lam * cp.beta * _mixed_force_u(u, v, cp))
    gh_v = 2.0 * v - grid.solve_h1(
        q * (p * cp.mu2 * _crit_force(v, p) + cp.lam * cp.beta * _mixed_force_v(u, v, cp))
    )
    return PairState(gf_u, gf_v), PairState(gh_u, gh_v)


def pair_inner(x: PairState, y: PairState, grid: ReducedGrid) -> float:
    """H^1 inner product on pairs."""
    return h1_form(x.u, y.u, grid) + h1_form(x.v, y.v, grid)


def pair_norm(x: PairState, grid: ReducedGrid) -> float:
    return math.sqrt(max(pair_inner(x, x, grid), 0.0))


def tangent_gradient(pair: PairState, cp: CouplingParams, grid: ReducedGrid) -> PairState:
    """Energy gradient minus its projection onto the constraint gradients."""
    tg, _ = tangent_gradient_full(pair, cp, grid)
    return tg


def tangent_gradient_full(pair: PairState, cp: CouplingParams, grid: ReducedGrid):
    """Tangential gradient together with the multiplier pair (s, t).

    The multipliers solve the 2x2 Gram system that splits dE into its
    tangential part and s*df + t*dh; at a genuine constrained critical
    point both are ~0.
    """
    g = gradient(pair, cp, grid)
    gf, gh = _constraint_gradients(pair, cp, grid)
    g11 = pair_inner(gf, gf, grid)
    g12 = pair_inner(gf, gh, grid)
    g22 = pair_inner(gh, gh, grid)
    det = g11 * g22 - g12 * g12
    if det <= 1e-14 * max(g11 * g22, 1e-300):
        raise DegenerateConstraintError(
            "constraint gradients are numerically dependent; "
            "the Nehari set is degenerate here (is lambda < 0?)"
        )
    r1 = pair_inner(g, gf, grid)
    r2 = pair_inner(g, gh, grid)
    s = (r1 * g22 - r2 * g12) / det
    t = (r2 * g11 - r1 * g12) / det
    tg = PairState(u=g.u - s * gf.u - t * gh.u, v=g.v - s * gf.v - t * gh.v)
    return tg, (s, t)


def nehari_matrix(ints: PairIntegrals, cp: CouplingParams, params: ModelParams) -> np.ndarray:
    """The 2x2 scaling Hessian (a_ij) of a pair on the Nehari set."""
    p = params.two_star
    lc = cp.lam * ints.coupling
    a11 = (2.0 - p) * ints.b1 + cp.alpha * (2.0 - cp.alpha) * lc
    a22 = (2.0 - p) * ints.b2 + cp.beta * (2.0 - cp.beta) * lc
    a12 = -cp.alpha * cp.beta * lc
    return np.array([[a11, a12], [a12, a22]])


def sobolev_lower_bound(mu: float, N: int) -> float:
    """mu^{-(N-2)/2} S^{N/2}: floor for the squared H^1 norm on the Nehari set."""
    return mu ** (-(N - 2) / 2.0) * sobolev_constant(N) ** (N / 2.0)


def nehari_det_bound(ints: PairIntegrals, cp: CouplingParams, params: ModelParams) -> float:
    """Lower bound (2*-2) c0 alpha beta (-lambda) int|u|^a|v|^b for det(a_ij)."""
    N = params.N
    c0 = min(sobolev_lower_bound(cp.mu1, N), sobolev_lower_bound(cp.mu2, N))
    return (params.two_star - 2.0) * c0 * cp.alpha * cp.beta * (-cp.lam) * ints.coupling


def single_project(u: np.ndarray, mu: float, grid: ReducedGrid) -> float:
    """Scale factor putting a single nonzero profile on its Nehari set."""
    p = grid.params.two_star
    a = h1_form(u, u, grid)
    b = mu * integrate(_crit_power(u, p), grid)
    if a <= 0.0 or b <= 0.0:
        raise DegenerateInputError("cannot project the zero profile")
    return (a / b) ** (1.0 / (p - 2.0))


def _scaled_residuals(s, t, ints, cp, p):
    mixed = s**cp.alpha * t**cp.beta * ints.coupling
    f = s * s * ints.a1 - s**p * ints.b1 - cp.lam * cp.alpha * mixed
    h = t * t * ints.a2 - t**p * ints.b2 - cp.lam * cp.beta * mixed
    return f, h, mixed


def _scaling_newton(s, t, ints, cp, p, tol, max_iter):
    """Damped Newton for the 2x2 scaling system; None when it stalls."""
    f, h, mixed = _scaled_residuals(s, t, ints, cp, p)
    for _ in range(max_iter):
        # residual scale: same monomials with all signs positive
        sc_f = s * s * ints.a1 + s**p * ints.b1 - cp.lam * cp.alpha * mixed
        sc_h = t * t * ints.a2 + t**p * ints.b2 - cp.lam * cp.beta * mixed
        if abs(f) <= tol * sc_f and abs(h) <= tol * sc_h:
            return s, t
        fs = 2.0 * s * ints.a1 - p * s ** (p - 1.0) * ints.b1 - cp.lam * cp.alpha**2 * mixed / s
        ft = -cp.lam * cp.alpha * cp.beta * mixed / t
        hs = -cp.lam * cp.alpha * cp.beta * mixed / s
        ht = 2.0 * t * ints.a2 - p * t ** (p - 1.0) * ints.b2 - cp.lam * cp.beta**2 * mixed / t
        det = fs * ht - ft * hs
        if det == 0.0 or not np.isfinite(det):
            return None
        ds = -(f * ht - h * ft) / det
        dt = -(h * fs - f * hs) / det
        step = 1.0
        norm0 = math.hypot(f / sc_f, h / sc_h)
        improved = False
        while step > 1e-14:
            s_new, t_new = s + step * ds, t + step * dt
            if s_new > 0.0 and t_new > 0.0:
                f_new, h_new, mixed_new = _scaled_residuals(s_new, t_new, ints, cp, p)
                sfn = s_new**2 * ints.a1 + s_new**p * ints.b1 - cp.lam * cp.alpha * mixed_new
                shn = t_new**2 * ints.a2 + t_new**p * ints.b2 - cp.lam * cp.beta * mixed_new
                if math.hypot(f_new / sfn, h_new / shn) < norm0:
                    s, t, f, h, mixed = s_new, t_new, f_new, h_new, mixed_new
                    improved = True
                    break
            step *= 0.5
        if not improved:
            return None
    return None


def _scaling_grid_start(ints, cp, p, n=48):
    """Best (s, t) on a coarse log grid, by scale-relative residual."""
    g = np.geomspace(1e-3, 1e3, n)
    s, t = np.meshgrid(g, g, indexing="ij")
    mixed = s**cp.alpha * t**cp.beta * ints.coupling
    f = s * s * ints.a1 - s**p * ints.b1 - cp.lam * cp.alpha * mixed
    h = t * t * ints.a2 - t**p * ints.b2 - cp.lam * cp.beta * mixed
    sc_f = s * s * ints.a1 + s**p * ints.b1 - cp.lam * cp.alpha * mixed
    sc_h = t * t * ints.a2 + t**p * ints.b2 - cp.lam * cp.beta * mixed
    score = np.hypot(f / sc_f, h / sc_h)
    i, j = np.unravel_index(np.argmin(score), score.shape)
    return float(g[i]), float(g[j])


def nehari_project(
    pair: PairState,
    cp: CouplingParams,
    grid: ReducedGrid,
    tol: float = 1e-12,
    max_iter: int = 100,
):
    """Unique positive (s, t) with (su, tv) on the Nehari set.

    Newton on the 2x2 scaling system, started from the decoupled closed
    form and damped to keep both factors positive; if that stalls, it is
    restarted from the best point of a coarse logarithmic scan.  With zero
    overlap the closed form is returned directly.  Raises ConvergenceError
    when no root is reached: for strongly overlapping pairs at very
    negative lambda the scaling system can genuinely have no positive
    solution.  Whenever a root exists it is unique, because at any root
    the scaling Hessian is negative definite (its determinant carries the
    competition-strength lower bound), so all ray critical points are
    strict maxima.
    """
    ints = pair_integrals(pair, cp, grid)
    p = grid.params.two_star
    tiny = 1e-300
    if ints.a1 <= tiny or ints.b1 <= tiny or ints.a2 <= tiny or ints.b2 <= tiny:
        raise DegenerateInputError("both components must be nonzero to project")
    s0 = (ints.a1 / ints.b1) ** (1.0 / (p - 2.0))
    t0 = (ints.a2 / ints.b2) ** (1.0 / (p - 2.0))
    if ints.coupling == 0.0:
        return s0, t0
    root = _scaling_newton(s0, t0, ints, cp, p, tol, max_iter)
    if root is None:
        s1, t1 = _scaling_grid_start(ints, cp, p)
        root = _scaling_newton(s1, t1, ints, cp, p, tol, max_iter)
    if root is None:
        f, h, _ = _scaled_residuals(s0, t0, ints, cp, p)
        raise ConvergenceError(
            "Nehari scaling system did not converge",
            residual=math.hypot(f, h),
            iterations=max_iter,
        )
    return root


def _positive_part(w):
    return np.maximum(w, 0.0)


def _negative_part(w):
    return np.minimum(w, 0.0)


def limit_energy(w: np.ndarray, cp: CouplingParams, grid: ReducedGrid) -> float:
    """Energy of the single sign-changing limit problem."""
    p = grid.params.two_star
    wp = _positive_part(w)
    wm = _negative_part(w)
    bulk = cp.mu1 * integrate(wp**p, grid) + cp.mu2 * integrate((-wm) ** p, grid)
    return 0.5 * h1_form(w, w, grid) - bulk / p


def limit_residuals(w: np.ndarray, cp: CouplingParams, grid: ReducedGrid):
    """Nehari residuals of the positive and negative parts of w."""
    p = grid.params.two_star
    wp = _positive_part(w)
    wm = _negative_part(w)
    rp = h1_form(wp, wp, grid) - cp.mu1 * integrate(wp**p, grid)
    rm = h1_form(wm, wm, grid) - cp.mu2 * integrate((-wm) ** p, grid)
    return rp, rm
