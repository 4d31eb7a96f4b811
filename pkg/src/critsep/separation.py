"""Continuation in the coupling strength and interface diagnostics.

Driving lambda down a geometric schedule with warm starts traces the
minimal-energy pair into the segregation regime: the overlap integral
decays, (-lambda) * overlap tends to zero, and the pair approaches the
positive/negative parts of a sign-changing minimizer of the limit problem.
The sweep records per-lambda diagnostics, finishes with the limit solve,
and re-asserts the on-manifold invariants collected by the solver.

Interface location is by the sign change of u - v (respectively of the
limit profile w): the minimizers split the arc into exactly two intervals,
one touching each endpoint, and the common boundary is a single point.
Deviations from that picture are reported, never silently repaired.
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    CollapseError,
    ConvergenceError,
    DegenerateConstraintError,
    DegenerateInputError,
    DomainError,
    TopologyError,
)
from .functional import CouplingParams, PairState
from .geometry import ReducedGrid
from .solver import (
    LimitResult,
    SolveOptions,
    initial_guess,
    minimize_limit,
    minimize_nehari,
)

__all__ = [
    "SweepRecord",
    "SweepResult",
    "SweepSchedule",
    "ToriReport",
    "geometric_schedule",
    "interface_locate",
    "sweep_lambda",
    "verify_tori",
]

log = logging.getLogger(__name__)

SIGN_DEADBAND = 1e-12  # relative; nodes this far below the peak count as zero


@dataclass(frozen=True)
class SweepSchedule:
    """Strictly decreasing sequence of negative coupling values."""

    lambdas: tuple

    def __post_init__(self):
        lam = tuple(float(x) for x in self.lambdas)
        object.__setattr__(self, "lambdas", lam)
        if len(lam) == 0:
            raise DomainError("schedule must contain at least one value")
        if any(x >= 0.0 for x in lam):
            raise DomainError("all schedule values must be negative")
        if any(b >= a for a, b in zip(lam, lam[1:])):
            raise DomainError("schedule must be strictly decreasing")


def geometric_schedule(start: float = -1.0, stop: float = -1e4, num: int = 20) -> SweepSchedule:
    """Geometric ladder from start down to stop (both negative)."""
    if not (stop < start < 0.0):
        raise DomainError("need stop < start < 0")
    lam = -np.geomspace(-start, -stop, num)
    return SweepSchedule(lambdas=tuple(lam))


@dataclass
class SweepRecord:
    lam: float
    energy: float
    overlap: float
    lambda_overlap: float
    interface_theta: float
    max_pointwise_product: float
    solver_iters: int
    status: str = "ok"


@dataclass
class SweepResult:
    records: list
    limit_record: SweepRecord
    limit_result: LimitResult
    final_pair: PairState
    stats: list                  # per-lambda NehariInvariantStats
    monotonicity_ok: bool = True


def interface_locate(profile, grid: ReducedGrid) -> float:
    """Arc position of the unique sign change, by linear interpolation.

    Accepts a pair (the sign change of u - v is located) or a single
    profile.  Raises TopologyError when the number of sign changes differs
    from one; near-zero samples (below 1e-12 of the peak) are ignored
    rather than counted as crossings.
    """
    if isinstance(profile, PairState):
        w = np.asarray(profile.u, dtype=float) - np.asarray(profile.v, dtype=float)
    else:
        w = np.asarray(profile, dtype=float)
    if w.shape != (grid.size,):
        raise DomainError(f"profile has shape {w.shape}, grid expects ({grid.size},)")
    peak = np.max(np.abs(w))
    if peak == 0.0:
        raise TopologyError("profile vanishes identically", crossings=0)
    live = np.nonzero(np.abs(w) > SIGN_DEADBAND * peak)[0]
    signs = np.sign(w[live])
    flips = np.nonzero(np.diff(signs) != 0.0)[0]
    if flips.size != 1:
        raise TopologyError(
            f"expected exactly one sign change, found {flips.size}",
            crossings=int(flips.size),
        )
    i = live[flips[0]]
    j = live[flips[0] + 1]
    th_i, th_j = grid.theta[i], grid.theta[j]
    return float(th_i + (th_j - th_i) * w[i] / (w[i] - w[j]))


@dataclass
class ToriReport:
    """Sign-structure summary of a limit profile.

    The component whose support touches theta = 0 is the neighborhood of
    the first factor sphere: after adding the point at infinity its domain
    is a sphere-times-ball product, and the complementary component is the
    ball-times-sphere one; the common boundary is the product of both
    factor spheres over the single interface orbit.
    """

    passed: bool
    sign_changes: int
    positive_blocks: int
    negative_blocks: int
    interface_theta: float
    positive_touches_zero: bool
    detail: str


def _sign_blocks(signs, target):
    """Number of contiguous blocks of the given sign value."""
    mask = signs == target
    if not mask.any():
        return 0, None, None
    edges = np.diff(mask.astype(int))
    starts = int((edges == 1).sum()) + (1 if mask[0] else 0)
    idx = np.nonzero(mask)[0]
    return starts, idx[0], idx[-1]


def verify_tori(w: np.ndarray, grid: ReducedGrid) -> ToriReport:
    """Check that a limit profile has the two-arc support structure."""
    w = np.asarray(w, dtype=float)
    peak = np.max(np.abs(w)) if w.size else 0.0
    signs = np.zeros(w.shape, dtype=int)
    if peak > 0.0:
        signs[w > SIGN_DEADBAND * peak] = 1
        signs[w < -SIGN_DEADBAND * peak] = -1
    n_pos, pos_lo, pos_hi = _sign_blocks(signs, 1)
    n_neg, neg_lo, neg_hi = _sign_blocks(signs, -1)
    live = signs[signs != 0]
    sign_changes = int((np.diff(live) != 0).sum()) if live.size else 0

    problems = []
    if n_pos != 1:
        problems.append(f"positive support has {n_pos} components")
    if n_neg != 1:
        problems.append(f"negative support has {n_neg} components")
    if sign_changes != 1:
        problems.append(f"{sign_changes} sign changes")
    theta0 = math.nan
    positive_touches_zero = False
    if not problems:
        theta0 = interface_locate(w, grid)
        pos_first = pos_lo < neg_lo
        positive_touches_zero = bool(pos_first)
        first_lo = pos_lo if pos_first else neg_lo
        last_hi = neg_hi if pos_first else pos_hi
        # each support must run all the way to its endpoint of the arc
        if first_lo > 1 or last_hi < grid.size - 2:
            problems.append("supports do not abut the arc endpoints")
    detail = "; ".join(problems) if problems else (
        "one interface at theta0=%.6f; %s component touches theta=0 "
        "(sphere-times-ball side)" % (theta0, "positive" if positive_touches_zero else "negative")
    )
    return ToriReport(
        passed=not problems,
        sign_changes=sign_changes,
        positive_blocks=n_pos,
        negative_blocks=n_neg,
        interface_theta=theta0,
        positive_touches_zero=positive_touches_zero,
        detail=detail,
    )


def _record_from_result(lam, res, pair, cp, grid):
    overlap = float(
        np.dot(
            grid.weights,
            np.abs(pair.u) ** cp.alpha * np.abs(pair.v) ** cp.beta,
        )
    )
    try:
        theta0 = interface_locate(pair, grid)
    except TopologyError:
        theta0 = math.nan
    return SweepRecord(
        lam=lam,
        energy=res.energy,
        overlap=overlap,
        lambda_overlap=-lam * overlap,
        interface_theta=theta0,
        max_pointwise_product=float(np.max(pair.u * pair.v)),
        solver_iters=res.iterations,
        status="ok" if res.converged else f"not converged: {res.message}",
    )


def sweep_lambda(
    schedule: SweepSchedule,
    cp_base: CouplingParams,
    grid: ReducedGrid,
    opts: SolveOptions,
    init: PairState = None,
) -> SweepResult:
    """Warm-started continuation over the schedule, ending at the limit solve.

    Solver failures mark their record and the continuation proceeds from
    the last good pair.  The limit problem is started from u - v of the
    final pair.
    """
    pair = init if init is not None else initial_guess("bumps", grid, opts.seed)
    records = []
    stats = []
    for lam in schedule.lambdas:
        cp = replace(cp_base, lam=lam)
        try:
            res = minimize_nehari(pair, cp, grid, opts)
            pair = res.pair
            records.append(_record_from_result(lam, res, pair, cp, grid))
            stats.append(res.stats)
        except (CollapseError, ConvergenceError, DegenerateInputError,
                DegenerateConstraintError) as exc:
            # keep partial results on solver failure
            records.append(
                SweepRecord(
                    lam=lam,
                    energy=math.nan,
                    overlap=math.nan,
                    lambda_overlap=math.nan,
                    interface_theta=math.nan,
                    max_pointwise_product=math.nan,
                    solver_iters=0,
                    status=f"failed: {type(exc).__name__}: {exc}",
                )
            )
            stats.append(None)
            log.warning("solve at lambda=%g failed: %s", lam, exc)

    monotonicity_ok = True
    good = [r for r in records if r.status == "ok"]
    for a, b in zip(good, good[1:]):
        if b.energy < a.energy * (1.0 - 1e-6):
            monotonicity_ok = False
            log.warning(
                "energy decreased along the schedule: %.12g -> %.12g "
                "(lambda %.6g -> %.6g); logged as a finding",
                a.energy, b.energy, a.lam, b.lam,
            )

    w0 = pair.u - pair.v
    try:
        limit_res = minimize_limit(w0, cp_base, grid, opts)
        try:
            theta0 = interface_locate(limit_res.w, grid)
        except TopologyError:
            theta0 = math.nan
        limit_record = SweepRecord(
            lam=-math.inf,
            energy=limit_res.energy,
            overlap=0.0,
            lambda_overlap=0.0,
            interface_theta=theta0,
            max_pointwise_product=0.0,
            solver_iters=limit_res.iterations,
            status="ok" if limit_res.converged else f"not converged: {limit_res.message}",
        )
    except (CollapseError, ConvergenceError, DegenerateInputError,
            DegenerateConstraintError) as exc:
        limit_res = None
        limit_record = SweepRecord(
            lam=-math.inf,
            energy=math.nan,
            overlap=math.nan,
            lambda_overlap=math.nan,
            interface_theta=math.nan,
            max_pointwise_product=math.nan,
            solver_iters=0,
            status=f"failed: {type(exc).__name__}: {exc}",
        )
        log.warning("limit solve failed: %s", exc)
    return SweepResult(
        records=records,
        limit_record=limit_record,
        limit_result=limit_res,
        final_pair=pair,
        stats=stats,
        monotonicity_ok=monotonicity_ok,
    )
