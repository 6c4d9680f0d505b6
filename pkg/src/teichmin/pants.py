"""Trigonometry of a hyperbolic pair of pants.

Perpendicular distances between boundary geodesics (and from a boundary to
itself), their logarithmic estimates in the pinching regime, and collar
widths. A pair of pants is encoded by its three boundary lengths, where 0
marks a cusp. An independent cross-check rebuilds the underlying
right-angled hexagon in the half-plane by root-solving the closure
condition of the hexagon walk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .hyperbolic import (
    acosh_from_log,
    acosh_stable,
    log_cosh,
    log_sinh,
    log_sinh_from_log_cosh,
    rotation_matrix,
    translation_matrix,
)

# Switch to pure log-domain evaluation below this boundary length.
LOG_DOMAIN_CUTOFF = 1.0e-4


@dataclass(frozen=True)
class PantsLengths:
    """Boundary lengths of a pair of pants; 0 encodes a cusp."""

    l1: float
    l2: float
    l3: float

    def __post_init__(self) -> None:
        for name in ("l1", "l2", "l3"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"PantsLengths: {name} must be >= 0")

    def get(self, index: int) -> float:
        if index not in (1, 2, 3):
            raise ValueError(f"PantsLengths: boundary index {index!r} not in 1..3")
        return (self.l1, self.l2, self.l3)[index - 1]


def _other_index(i: int, j: int) -> int:
    return 6 - i - j


def _log_cosh_perp(p: PantsLengths, i: int, j: int) -> float:
    """log(cosh d_ij) for the perpendicular between boundaries i and j."""
    if i == j:
        raise ValueError("perpendicular between a boundary and itself has its own operation")
    li = p.get(i)
    lj = p.get(j)
    lk = p.get(_other_index(i, j))
    if li <= 0.0 or lj <= 0.0:
        raise ValueError(
            "perp_between: feet must lie on boundary geodesics, "
            f"got cusp at index {i if li <= 0.0 else j}"
        )
    if min(li, lj) >= LOG_DOMAIN_CUTOFF and lk <= 200.0:
        num = math.cosh(lk / 2.0) + math.cosh(li / 2.0) * math.cosh(lj / 2.0)
        return math.log(num) - math.log(math.sinh(li / 2.0)) - math.log(math.sinh(lj / 2.0))
    log_num = np.logaddexp(log_cosh(lk / 2.0), log_cosh(li / 2.0) + log_cosh(lj / 2.0))
    return float(log_num) - log_sinh(li / 2.0) - log_sinh(lj / 2.0)


def perp_between(p: PantsLengths, i: int, j: int) -> float:
    """Distance between boundary geodesics i and j along their common perpendicular."""
    return acosh_from_log(_log_cosh_perp(p, i, j))


def perp_self(p: PantsLengths, i: int, j: int) -> float:
    """Length of the perpendicular from boundary i back to itself.

    Computed through cosh(d_ii/2) = sinh(d_ij) sinh(l_j/2); the result does
    not depend on which of the two remaining boundaries plays the role of j.
    """
    lj = p.get(j)
    if p.get(i) <= 0.0 or lj <= 0.0:
        raise ValueError("perp_self: feet must lie on boundary geodesics, not cusps")
    log_arg = log_sinh_from_log_cosh(_log_cosh_perp(p, i, j)) + log_sinh(lj / 2.0)
    if log_arg < 0.0:
        # valid hexagons keep the argument >= 1; allow roundoff at the boundary
        if log_arg > -1e-12:
            log_arg = 0.0
        else:
            raise ValueError("perp_self: degenerate pants, formula argument below 1")
    return 2.0 * acosh_from_log(log_arg)


def perp_estimate(l_i: float, l_j: float) -> float:
    """First-order pinching estimate log(1/l_i) + log(1/l_j)."""
    if l_i <= 0.0 or l_j <= 0.0:
        raise ValueError("perp_estimate: lengths must be positive")
    return math.log(1.0 / l_i) + math.log(1.0 / l_j)


def collar_width(l: float) -> float:
    """Embedded collar width 2 log(1/l) around a short geodesic; 0 once l >= 1."""
    if l <= 0.0:
        raise ValueError("collar_width: length must be positive")
    if l >= 1.0:
        return 0.0
    return 2.0 * math.log(1.0 / l)


_RIGHT_TURN = rotation_matrix(-math.pi / 2.0)


def _hexagon_walk(half_lengths: tuple[float, float, float], perps: np.ndarray) -> np.ndarray:
    g = np.eye(2)
    for side in (
        half_lengths[0],
        perps[0],
        half_lengths[1],
        perps[1],
        half_lengths[2],
        perps[2],
    ):
        g = g @ translation_matrix(float(side)) @ _RIGHT_TURN
    return g


def _hexagon_residual(perps: np.ndarray, half_lengths: tuple[float, float, float]) -> list[float]:
    # clamp trial sides so exploratory steps cannot overflow the walk
    m = _hexagon_walk(half_lengths, np.clip(perps, 1e-9, 200.0))
    # closure in PSL(2,R): m = +-identity; asinh keeps the sign and gradient
    # of each component while taming the exponential growth in side length
    return [
        math.asinh(m[0, 1]),
        math.asinh(m[1, 0]),
        math.asinh(m[0, 0] - m[1, 1]),
    ]


def perp_between_embedded(p: PantsLengths, i: int, j: int) -> float:
    """Perpendicular distance recovered from a half-plane hexagon embedding.

    Solves for the three perpendicular side lengths that close the
    right-angled hexagon walk with the pants' half-length sides, with no use
    of the trigonometric formula. Serves as an independent oracle.
    """
    ls = (p.l1, p.l2, p.l3)
    if min(ls) <= 0.0:
        raise ValueError("perp_between_embedded: hexagon embedding needs three geodesic boundaries")
    if i == j or i not in (1, 2, 3) or j not in (1, 2, 3):
        raise ValueError("perp_between_embedded: need two distinct boundary indices in 1..3")
    half = (ls[0] / 2.0, ls[1] / 2.0, ls[2] / 2.0)
    pairs = ((1, 2), (2, 3), (3, 1))
    base_guess = np.array(
        [max(perp_estimate(ls[a - 1], ls[b - 1]), 0.8) + 1.0 for a, b in pairs]
    )
    best = None
    closure = math.inf

    def _check(x: np.ndarray) -> tuple[np.ndarray, float]:
        x = np.clip(x, 1e-9, 200.0)
        m = _hexagon_walk(half, x)
        return x, float(np.max(np.abs(m - math.copysign(1.0, m[0, 0]) * np.eye(2))))

    starts = [base_guess * f for f in (1.0, 0.6, 1.5, 2.5)] + [np.full(3, 2.0)]
    for guess in starts:
        sol = optimize.root(_hexagon_residual, guess, args=(half,), method="hybr", tol=1e-13)
        x, closure = _check(sol.x)
        if sol.success and closure < 1e-9:
            best = x
            break
    if best is None:
        # globally robust fallback, then a final polish for full precision
        ls_sol = optimize.least_squares(
            _hexagon_residual, base_guess, args=(half,), bounds=(1e-6, 100.0), xtol=1e-15
        )
        sol = optimize.root(
            _hexagon_residual, ls_sol.x, args=(half,), method="hybr", tol=1e-13
        )
        x, closure = _check(sol.x)
        if closure < 1e-9:
            best = x
    if best is None:
        raise RuntimeError(
            f"perp_between_embedded: hexagon closure failed for {ls} (residual {closure:.2e})"
        )
    want = (i, j) if (i, j) in pairs else (j, i)
    return float(best[pairs.index(want)])
