"""Asymptotic estimators and limit detection for traced minima.

Everything here consumes immutable trajectories: collar-width length
estimates, dual-curve length estimates, log-log growth fits, nonnegative
least-squares detection of the projective limit, and residual series for the
estimate error terms.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .minima import Trajectory
from .surfaces import FNCoords, SurfaceModel, length_beta_s12, length_dual_s12

log = logging.getLogger(__name__)

# fits default to the smallest decades of s present in the trajectory
FIT_WINDOW_DECADES = 2.0
MIN_FIT_SAMPLES = 5
# the collar estimate is an asymptotic statement; warn outside its regime
ESTIMATE_LENGTH_WARN = 1.0
BARYCENTRE_VERDICT_TOL = 0.1


@dataclass(frozen=True)
class LimitReport:
    """Projectively normalized limit data read off one trajectory sample."""

    probe_curves: tuple[str, ...]
    s_value: float
    length_ratios: tuple[tuple[float, ...], ...]
    inferred_weights: tuple[float, ...]
    residual: float
    verdict: str


@dataclass(frozen=True)
class OrderFit:
    """Least-squares fit of log(quantity) against log(s)."""

    quantity: str
    slope: float
    intercept: float
    r_squared: float
    window: tuple[float, float]


@dataclass(frozen=True)
class ResidualSeries:
    """Residuals of the collar estimate along a trajectory."""

    curve: str
    s_values: tuple[float, ...]
    residuals: tuple[float, ...]
    sup: float
    trend: float
    drift_slope: float


def exact_curve_length(surface: SurfaceModel, curve: str, c: FNCoords) -> float:
    """Closed-form length of a registered curve at the given coordinates."""
    surface.check_registered(curve)
    if curve in surface.pants_curves:
        return c.lengths[surface.length_index(curve)]
    if surface.name == "s12":
        if curve == "b":
            return length_beta_s12(c)
        if curve in ("d1", "d2"):
            return length_dual_s12(c, curve)
    raise ValueError(f"no closed-form length for curve {curve!r} on {surface.name!r}")


def collar_length_estimate(surface: SurfaceModel, gamma: str, c: FNCoords) -> float:
    """Crossing-count estimate 2 sum_j i(alpha_j, gamma) log(1/l_j)."""
    surface.check_registered(gamma)
    if max(c.lengths) >= ESTIMATE_LENGTH_WARN:
        log.warning(
            "collar estimate for %r outside the short-pants regime (max length %.3g)",
            gamma,
            max(c.lengths),
        )
    return 2.0 * sum(
        surface.inumber(alpha, gamma) * math.log(1.0 / c.lengths[i])
        for i, alpha in enumerate(surface.pants_curves)
    )


def dual_length_estimate(surface: SurfaceModel, pants_curve: str, c: FNCoords) -> float:
    """Length estimate for the dual of a pants curve.

    A dual crossing its curve once sees one adjacent pair of pants and picks
    up half its largest neighbor boundary length; a dual crossing twice sees
    both sides and picks up each side's largest. Cusps contribute 0.
    """
    surface.check_registered(pants_curve)
    if pants_curve not in surface.dual_of:
        raise ValueError(f"{pants_curve!r} has no dual in the catalog")
    _, count = surface.dual_of[pants_curve]
    l_alpha = c.lengths[surface.length_index(pants_curve)]
    base = 2.0 * count * math.log(1.0 / l_alpha)
    sides = surface.neighbor_lengths(pants_curve, c)
    if count == 1:
        return base + 0.5 * max(sides[0])
    return base + sum(max(side) for side in sides)


def _lsq_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Slope, intercept, r^2; exact for a self-fit."""
    xb = float(np.mean(x))
    yb = float(np.mean(y))
    dx = x - xb
    dy = y - yb
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise ValueError("degenerate fit window: no spread in s")
    slope = float(dx @ dy) / sxx
    intercept = yb - slope * xb
    res = y - (slope * x + intercept)
    ss_res = float(res @ res)
    ss_tot = float(dy @ dy)
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return slope, intercept, r2


def _window_points(traj: Trajectory, window: tuple[float, float] | None):
    s_all = [pt.s for pt in traj.points]
    if window is None:
        lo = min(s_all)
        hi = min(max(s_all), lo * 10.0 ** FIT_WINDOW_DECADES)
    else:
        lo, hi = min(window), max(window)
    picked = [pt for pt in traj.points if lo <= pt.s <= hi]
    if len(picked) < MIN_FIT_SAMPLES:
        raise ValueError(
            f"degenerate fit window [{lo:g}, {hi:g}]: {len(picked)} samples, "
            f"need {MIN_FIT_SAMPLES}"
        )
    return picked


def growth_order_fit(
    traj: Trajectory,
    quantity: str,
    extract,
    window: tuple[float, float] | None = None,
) -> OrderFit:
    """Fit log(extract(point)) against log(s) over the chosen window."""
    picked = _window_points(traj, window)
    s = np.array([pt.s for pt in picked])
    q = np.array([float(extract(pt)) for pt in picked])
    if np.any(q <= 0.0) or not np.all(np.isfinite(q)):
        raise ValueError(f"quantity {quantity!r} must be positive and finite for a log fit")
    slope, intercept, r2 = _lsq_line(np.log(s), np.log(q))
    return OrderFit(
        quantity=quantity,
        slope=slope,
        intercept=intercept,
        r_squared=r2,
        window=(float(np.min(s)), float(np.max(s))),
    )


def solve_projective_weights(
    surface: SurfaceModel, probes: tuple[str, ...], lengths: np.ndarray
) -> tuple[np.ndarray, float]:
    """Nonnegative weights w minimizing |A w - lengths/max(lengths)|.

    A is the probe-by-pants intersection matrix. The max normalization
    removes the free overall scale; the weights are then normalized to
    max 1. Rejects probe systems that miss a pants curve or cannot tell two
    curves apart.
    """
    pants = surface.pants_curves
    a_mat = np.array(
        [[float(surface.inumber(g, alpha)) for alpha in pants] for g in probes]
    )
    for j, alpha in enumerate(pants):
        if not np.any(a_mat[:, j] != 0.0):
            raise ValueError(f"ill-conditioned probe system: no probe meets {alpha!r}")
    if np.linalg.matrix_rank(a_mat) < len(pants):
        raise ValueError("ill-conditioned probe system: intersection matrix is rank deficient")
    scale = float(np.max(lengths))
    if not (scale > 0.0 and np.all(np.isfinite(lengths))):
        raise ValueError("probe lengths must be positive and finite")
    weights, misfit = optimize.nnls(a_mat, np.asarray(lengths, dtype=float) / scale)
    top = float(np.max(weights))
    if top == 0.0:
        raise ValueError("ill-conditioned probe system: all inferred weights vanished")
    return weights / top, float(misfit)


def projective_limit(
    traj: Trajectory, probes, sample: int = -1
) -> LimitReport:
    """Infer the projective limit class from probe lengths at one sample."""
    probes = tuple(probes)
    if not probes:
        raise ValueError("need at least one probe curve")
    point = traj.points[sample]
    surface = traj.problem.surface
    lengths = np.array(
        [exact_curve_length(surface, g, point.coords) for g in probes]
    )
    weights, misfit = solve_projective_weights(surface, probes, lengths)
    ratios = tuple(
        tuple(float(a / b) for b in lengths) for a in lengths
    )
    deviation = float(np.max(np.abs(weights - 1.0)))
    if deviation <= BARYCENTRE_VERDICT_TOL:
        verdict = (
            "consistent with the barycentre of the support "
            f"(max weight deviation {deviation:.4f})"
        )
    else:
        verdict = (
            "not consistent with the barycentre of the support "
            f"(max weight deviation {deviation:.4f})"
        )
    return LimitReport(
        probe_curves=probes,
        s_value=point.s,
        length_ratios=ratios,
        inferred_weights=tuple(float(w) for w in weights),
        residual=misfit,
        verdict=verdict,
    )


def residual_analysis(traj: Trajectory, gamma: str, exact_length=None) -> ResidualSeries:
    """Residual of the collar estimate for gamma along the trajectory.

    The trend statistic divides the sup residual by log(1/s) at the deepest
    sample; the drift slope regresses the residual against log(1/s) over the
    default fit window and measures any growth of the nominally O(1) term.
    """
    surface = traj.problem.surface
    if exact_length is None:
        exact_length = lambda c: exact_curve_length(surface, gamma, c)
    s_vals = []
    residuals = []
    for pt in traj.points:
        s_vals.append(pt.s)
        residuals.append(exact_length(pt.coords) - collar_length_estimate(surface, gamma, pt.coords))
    sup = max(abs(r) for r in residuals)
    s_min = min(s_vals)
    trend = sup / math.log(1.0 / s_min)
    index_of = {id(pt): i for i, pt in enumerate(traj.points)}
    picked = _window_points(traj, None)
    x = np.array([math.log(1.0 / pt.s) for pt in picked])
    y = np.array([residuals[index_of[id(pt)]] for pt in picked])
    drift_slope, _, _ = _lsq_line(x, y)
    return ResidualSeries(
        curve=gamma,
        s_values=tuple(s_vals),
        residuals=tuple(residuals),
        sup=sup,
        trend=trend,
        drift_slope=drift_slope,
    )
