"""Finite-dimensional side computations.

Two families live here.  The synchronized-solution system

    1 = mu1 s^{2*-2} + lam * alpha * s^{alpha-2} t^beta
    1 = mu2 t^{2*-2} + lam * beta  * s^alpha     t^{beta-2}

governs solutions proportional to a common profile; below some negative
threshold lam* it has no positive solution, and the threshold is located
empirically by bisecting on the emptiness of a dense multi-start Newton
search.  For mu1 = mu2 and alpha = beta the diagonal branch s = t has the
closed form s^{2*-2} = 1/(mu + lam*alpha), which vanishes exactly at
lam = -mu/alpha.

The second family is the two-variable comparison function

    e(s, t) = a1 s^2 + a2 t^2 - b1 s^p - b2 t^p + d s^alpha t^beta

with positive coefficients, p > 2, alpha + beta = p and (1, 1) critical,
which forces 2 a_i - p b_i + d * (alpha or beta) = 0.  A box [r, R]^2 with
inward-crossing gradient on the boundary traps all critical points, and
when every critical point is a strict local maximum the only one is (1, 1).
Both facts are checked numerically on verification grids.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketError, DomainError

__all__ = [
    "BoxReport",
    "CriticalPoint",
    "PlaneCoeffs",
    "SyncInstance",
    "ThresholdBracket",
    "fixed_point_free",
    "plane_box",
    "plane_coeffs",
    "plane_critical_points",
    "sync_brute_cells",
    "sync_residuals",
    "sync_solve",
    "sync_threshold",
    "verify_box",
]


@dataclass(frozen=True)
class SyncInstance:
    """Parameters of the synchronized-solution system."""

    mu1: float
    mu2: float
    alpha: float
    beta: float
    lam: float
    N: int

    def __post_init__(self):
        if self.mu1 <= 0 or self.mu2 <= 0:
            raise DomainError("mu1, mu2 must be positive")
        two_star = 2.0 * self.N / (self.N - 2.0)
        for name, ex in (("alpha", self.alpha), ("beta", self.beta)):
            if not (1.0 < ex <= 2.0):
                raise DomainError(f"{name} must lie in (1, 2], got {ex}")
        if abs(self.alpha + self.beta - two_star) > 1e-12:
            raise DomainError("alpha + beta must equal 2N/(N-2)")

    @property
    def two_star(self) -> float:
        return 2.0 * self.N / (self.N - 2.0)


def sync_residuals(inst: SyncInstance, s, t):
    """Residuals of both equations at (s, t); vectorized."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    p = inst.two_star
    r1 = inst.mu1 * s ** (p - 2.0) + inst.lam * inst.alpha * s ** (inst.alpha - 2.0) * t**inst.beta - 1.0
    r2 = inst.mu2 * t ** (p - 2.0) + inst.lam * inst.beta * s**inst.alpha * t ** (inst.beta - 2.0) - 1.0
    return r1, r2


def sync_solve(
    inst: SyncInstance,
    grid_points: int = 24,
    span=(1e-3, 1e3),
    dedup_rel: float = 1e-8,
    max_iter: int = 100,
):
    """All positive solutions found by multi-start Newton over a log grid.

    Newton runs in logarithmic coordinates, which keeps the iterates
    positive and copes with branches escaping toward 0 or infinity.  An
    empty list is a valid result.
    """
    p = inst.two_star
    la, lb = math.log(span[0]), math.log(span[1])
    g = np.linspace(la, lb, grid_points)
    x, y = np.meshgrid(g, g)
    x = x.ravel().copy()
    y = y.ravel().copy()
    alive = np.ones(x.size, dtype=bool)

    for _ in range(max_iter):
        s = np.exp(x[alive])
        t = np.exp(y[alive])
        r1, r2 = sync_residuals(inst, s, t)
        # partials with respect to (log s, log t)
        j11 = inst.mu1 * (p - 2.0) * s ** (p - 2.0) + inst.lam * inst.alpha * (
            inst.alpha - 2.0
        ) * s ** (inst.alpha - 2.0) * t**inst.beta
        j12 = inst.lam * inst.alpha * inst.beta * s ** (inst.alpha - 2.0) * t**inst.beta
        j21 = inst.lam * inst.alpha * inst.beta * s**inst.alpha * t ** (inst.beta - 2.0)
        j22 = inst.mu2 * (p - 2.0) * t ** (p - 2.0) + inst.lam * inst.beta * (
            inst.beta - 2.0
        ) * s**inst.alpha * t ** (inst.beta - 2.0)
        det = j11 * j22 - j12 * j21
        bad = (det == 0.0) | ~np.isfinite(det)
        det[bad] = 1.0
        dx = -(r1 * j22 - r2 * j12) / det
        dy = -(r2 * j11 - r1 * j21) / det
        dx[bad] = 0.0
        dy[bad] = 0.0
        np.clip(dx, -2.0, 2.0, out=dx)
        np.clip(dy, -2.0, 2.0, out=dy)
        x[alive] += dx
        y[alive] += dy
        still = (np.abs(dx) > 1e-14) | (np.abs(dy) > 1e-14)
        idx = np.nonzero(alive)[0]
        alive[idx[~still]] = False
        drop = (np.abs(x) > 60.0) | (np.abs(y) > 60.0)
        alive &= ~drop
        if not alive.any():
            break

    keep = (np.abs(x) <= 60.0) & (np.abs(y) <= 60.0)
    s = np.exp(x[keep])
    t = np.exp(y[keep])
    r1, r2 = sync_residuals(inst, s, t)
    ok = (np.abs(r1) <= 1e-10) & (np.abs(r2) <= 1e-10)
    roots = sorted(zip(s[ok], t[ok]))
    out = []
    for cand in roots:
        if not any(
            abs(cand[0] - r[0]) <= dedup_rel * abs(r[0])
            and abs(cand[1] - r[1]) <= dedup_rel * abs(r[1])
            for r in out
        ):
            out.append(cand)
    return [(float(a), float(b)) for a, b in out]


def _mixed_sign_cells(sign_arr):
    mn = np.minimum(
        np.minimum(sign_arr[:-1, :-1], sign_arr[1:, :-1]),
        np.minimum(sign_arr[:-1, 1:], sign_arr[1:, 1:]),
    )
    mx = np.maximum(
        np.maximum(sign_arr[:-1, :-1], sign_arr[1:, :-1]),
        np.maximum(sign_arr[:-1, 1:], sign_arr[1:, 1:]),
    )
    return (mn < 0) & (mx > 0)


def sync_brute_cells(
    inst: SyncInstance,
    grid_points: int = 1000,
    span=(1e-3, 1e3),
    depth: int = 4,
    refine: int = 8,
) -> int:
    """Count grid cells where both residual surfaces change sign.

    A derivative-free existence witness used to cross-check the Newton
    search: a positive count flags a candidate root region, zero means the
    two zero-level curves do not meet on the scanned window.  Flagged
    cells are refined recursively, because near the emptiness threshold
    the two curves run almost tangent and a single coarse cell can contain
    both without them crossing.
    """
    g = np.geomspace(span[0], span[1], grid_points)
    s, t = np.meshgrid(g, g, indexing="ij")
    r1, r2 = sync_residuals(inst, s, t)
    flags = _mixed_sign_cells(np.sign(r1)) & _mixed_sign_cells(np.sign(r2))
    cells = [
        (g[i], g[i + 1], g[j], g[j + 1]) for i, j in np.argwhere(flags)
    ]
    for _ in range(depth):
        if not cells:
            return 0
        if len(cells) > 200000:
            break
        next_cells = []
        for s0, s1, t0, t1 in cells:
            gs = np.geomspace(s0, s1, refine + 1)
            gt = np.geomspace(t0, t1, refine + 1)
            ss, tt = np.meshgrid(gs, gt, indexing="ij")
            r1, r2 = sync_residuals(inst, ss, tt)
            sub = _mixed_sign_cells(np.sign(r1)) & _mixed_sign_cells(np.sign(r2))
            for i, j in np.argwhere(sub):
                next_cells.append((gs[i], gs[i + 1], gt[j], gt[j + 1]))
        cells = next_cells
    return len(cells)


@dataclass(frozen=True)
class ThresholdBracket:
    """Empirical emptiness threshold, reported as a bracket."""

    lam_empty: float      # solutions absent here (more negative side)
    lam_nonempty: float   # solutions present here
    width: float

    @property
    def value(self) -> float:
        return 0.5 * (self.lam_empty + self.lam_nonempty)


def sync_threshold(
    mu1: float,
    mu2: float,
    alpha: float,
    beta: float,
    N: int,
    width: float = 1e-6,
    solver_kwargs: dict = None,
) -> ThresholdBracket:
    """Bisect on lambda for emptiness of the synchronized system.

    Scans geometrically for an empty point, then refines the bracket down
    to the requested width.  The returned threshold is empirical: absence
    of solutions is judged at the resolution of the multi-start search.
    """
    kw = solver_kwargs or {}

    def empty(lam):
        inst = SyncInstance(mu1=mu1, mu2=mu2, alpha=alpha, beta=beta, lam=lam, N=N)
        return len(sync_solve(inst, **kw)) == 0

    hi = -1e-6
    if empty(hi):
        raise BracketError("no solutions even at lambda = -1e-6")
    lo = -1.0
    while not empty(lo):
        lo *= 4.0
        if lo < -1e6:
            raise BracketError("solutions persist down to lambda = -1e6")
    while hi - lo > width:
        mid = 0.5 * (hi + lo)
        if empty(mid):
            lo = mid
        else:
            hi = mid
    return ThresholdBracket(lam_empty=lo, lam_nonempty=hi, width=hi - lo)


def fixed_point_free(mu: float, alpha: float, lam: float) -> bool:
    """True iff lam <= -mu/alpha, so (u, -u) cannot satisfy both residuals."""
    if mu <= 0:
        raise DomainError("mu must be positive")
    if not (1.0 < alpha <= 2.0):
        raise DomainError("alpha must lie in (1, 2]")
    return lam <= -mu / alpha


@dataclass(frozen=True)
class PlaneCoeffs:
    """Coefficients of e(s,t) with (1,1) critical."""

    a1: float
    a2: float
    b1: float
    b2: float
    d: float
    p: float
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("a1", "a2", "b1", "b2", "d"):
            if getattr(self, name) <= 0.0:
                raise DomainError(f"{name} must be positive")
        if self.p <= 2.0:
            raise DomainError("p must exceed 2")
        if self.alpha <= 1.0 or self.beta <= 1.0:
            raise DomainError("alpha, beta must exceed 1")
        if abs(self.alpha + self.beta - self.p) > 1e-9:
            raise DomainError("alpha + beta must equal p")
        for res in (
            2.0 * self.a1 - self.p * self.b1 + self.d * self.alpha,
            2.0 * self.a2 - self.p * self.b2 + self.d * self.beta,
        ):
            if abs(res) > 1e-12 * max(1.0, self.p * max(self.b1, self.b2)):
                raise DomainError("coefficients do not make (1,1) critical")


def plane_coeffs(a1: float, a2: float, d: float, p: float, alpha: float, beta: float) -> PlaneCoeffs:
    """Complete (a1, a2, d) to coefficients with (1, 1) critical."""
    if a1 <= 0 or a2 <= 0 or d <= 0:
        raise DomainError("a1, a2, d must be positive")
    b1 = (2.0 * a1 + d * alpha) / p
    b2 = (2.0 * a2 + d * beta) / p
    return PlaneCoeffs(a1=a1, a2=a2, b1=b1, b2=b2, d=d, p=p, alpha=alpha, beta=beta)


def plane_energy(c: PlaneCoeffs, s, t):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return c.a1 * s**2 + c.a2 * t**2 - c.b1 * s**c.p - c.b2 * t**c.p + c.d * s**c.alpha * t**c.beta


def plane_grad(c: PlaneCoeffs, s, t):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    es = 2.0 * c.a1 * s - c.p * c.b1 * s ** (c.p - 1.0) + c.d * c.alpha * s ** (c.alpha - 1.0) * t**c.beta
    et = 2.0 * c.a2 * t - c.p * c.b2 * t ** (c.p - 1.0) + c.d * c.beta * s**c.alpha * t ** (c.beta - 1.0)
    return es, et


def plane_hess(c: PlaneCoeffs, s, t):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    ess = 2.0 * c.a1 - c.p * (c.p - 1.0) * c.b1 * s ** (c.p - 2.0) + c.d * c.alpha * (
        c.alpha - 1.0
    ) * s ** (c.alpha - 2.0) * t**c.beta
    ett = 2.0 * c.a2 - c.p * (c.p - 1.0) * c.b2 * t ** (c.p - 2.0) + c.d * c.beta * (
        c.beta - 1.0
    ) * s**c.alpha * t ** (c.beta - 2.0)
    est = c.d * c.alpha * c.beta * s ** (c.alpha - 1.0) * t ** (c.beta - 1.0)
    return ess, ett, est


@dataclass(frozen=True)
class BoxReport:
    r: float
    R: float
    delta: float
    ok: bool
    detail: str = ""


def verify_box(c: PlaneCoeffs, r: float, R: float, edge_points: int = 1000) -> BoxReport:
    """Check the four boundary inequalities of the trapping box on a grid."""
    rng = np.linspace(r, R, edge_points)
    es_r, _ = plane_grad(c, r, rng)
    es_R, _ = plane_grad(c, R, rng)
    _, et_r = plane_grad(c, rng, r)
    _, et_R = plane_grad(c, rng, R)
    delta = float(min(es_r.min(), et_r.min()))
    outward_ok = bool(es_R.max() <= -1.0 and et_R.max() <= -1.0)
    ok = delta > 0.0 and outward_ok
    detail = []
    if delta <= 0.0:
        detail.append(f"inner edges not inward: min gradient {delta:.3g}")
    if not outward_ok:
        detail.append(
            f"outer edges not steep enough: max gradient {max(es_R.max(), et_R.max()):.3g}"
        )
    return BoxReport(r=r, R=R, delta=delta, ok=ok, detail="; ".join(detail))


def plane_box(c: PlaneCoeffs, edge_points: int = 1000) -> BoxReport:
    """Search a trapping box [r, R]^2 with r < 1 < R and verify it on a grid."""
    r = 0.5
    for _ in range(40):
        if r < 1e-6:
            break
        R = 2.0
        for _ in range(40):
            if R > 1e6:
                break
            rep = verify_box(c, r, R, edge_points)
            if rep.ok:
                return rep
            if "inner" in rep.detail:
                # the inner-edge minimum sits at t = r, so only a smaller
                # r can fix it; growing R cannot
                break
            R *= 2.0
        r *= 0.5
    return BoxReport(r=math.nan, R=math.nan, delta=math.nan, ok=False,
                     detail="no admissible box found in the search range")


@dataclass(frozen=True)
class CriticalPoint:
    s: float
    t: float
    kind: str   # 'max', 'min', 'saddle' or 'degenerate'


def plane_critical_points(
    c: PlaneCoeffs,
    box: BoxReport = None,
    starts: int = 200,
    max_iter: int = 80,
    dedup_rel: float = 1e-8,
):
    """Critical points of e inside the trapping box, with classification.

    Multi-start Newton from a starts x starts grid over the box; the
    returned report also states whether e(1,1) dominates a dense
    verification grid (meaningful when every critical point is a strict
    local maximum).
    """
    if box is None:
        box = plane_box(c)
    if not box.ok:
        raise DomainError("no valid trapping box; coefficient constraints violated?")
    g = np.linspace(box.r, box.R, starts)
    s, t = np.meshgrid(g, g)
    s = s.ravel().copy()
    t = t.ravel().copy()
    for _ in range(max_iter):
        es, et = plane_grad(c, s, t)
        ess, ett, est = plane_hess(c, s, t)
        det = ess * ett - est * est
        bad = (det == 0.0) | ~np.isfinite(det)
        det[bad] = 1.0
        ds = -(es * ett - et * est) / det
        dt = -(et * ess - es * est) / det
        ds[bad] = 0.0
        dt[bad] = 0.0
        limit = 0.25 * (box.R - box.r)
        np.clip(ds, -limit, limit, out=ds)
        np.clip(dt, -limit, limit, out=dt)
        s += ds
        t += dt
        s = np.clip(s, 1e-9, 10.0 * box.R)
        t = np.clip(t, 1e-9, 10.0 * box.R)

    es, et = plane_grad(c, s, t)
    scale = max(c.a1, c.a2, c.b1, c.b2, c.d)
    ok = (np.abs(es) <= 1e-9 * scale) & (np.abs(et) <= 1e-9 * scale)
    ok &= (s > 0) & (t > 0)
    pts = sorted(zip(s[ok], t[ok]))
    found = []
    for cand in pts:
        if not any(
            abs(cand[0] - q[0]) <= dedup_rel * max(1.0, abs(q[0]))
            and abs(cand[1] - q[1]) <= dedup_rel * max(1.0, abs(q[1]))
            for q in found
        ):
            found.append(cand)

    points = []
    for sv, tv in found:
        ess, ett, est = plane_hess(c, sv, tv)
        det = ess * ett - est * est
        if abs(det) <= 1e-10 * scale**2:
            kind = "degenerate"
        elif det < 0.0:
            kind = "saddle"
        elif ess < 0.0:
            kind = "max"
        else:
            kind = "min"
        points.append(CriticalPoint(s=float(sv), t=float(tv), kind=kind))

    gg = np.linspace(box.r, box.R, 400)
    ss, tt = np.meshgrid(gg, gg)
    grid_max = float(plane_energy(c, ss, tt).max())
    e11 = float(plane_energy(c, 1.0, 1.0))
    return points, e11 >= grid_max - 1e-9 * max(1.0, abs(grid_max))
