"""Weighted length objectives and their minimizers in Fenchel-Nielsen coordinates.

The objective is (1 - s) l_mu + s l_nu for a pants-supported multicurve mu and
a disjoint multicurve nu with differentiable length models. Minimization runs
in (log length, twist) variables so lengths stay positive and the pinching
regime s -> 0 stays well conditioned.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .surfaces import (
    FNCoords,
    SurfaceModel,
    WeightedMulticurve,
    grad_length_beta_s12,
    length_beta_s12,
)

log = logging.getLogger(__name__)

GRAD_TOL_REL = 1.0e-10
TRACE_TOL_RATE = 1.0e-9
ITERATION_CAP = 500
ARMIJO_C = 1.0e-4
BACKTRACK_FACTOR = 0.5
BACKTRACK_LIMIT = 60
LENGTH_BOX = (1.0e-12, 1.0e3)
TWIST_BOUND = 1.0e3
POLISH_CAP = 6
# function decrease below this relative size is roundoff, not progress
VALUE_NOISE_REL = 1.0e-12


@dataclass(frozen=True)
class MinimaProblem:
    """A weighted length-sum minimization instance on a cataloged surface."""

    surface: SurfaceModel
    mu: WeightedMulticurve
    nu: WeightedMulticurve
    fill_asserted: bool = False

    def __post_init__(self):
        pants = set(self.surface.pants_curves)
        for name, _ in self.mu.weights:
            self.surface.check_registered(name)
            if name not in pants:
                raise ValueError(
                    f"mu must be supported on pants curves, got {name!r}"
                )
        duals = {d for d, _ in self.surface.dual_of.values()}
        for name, _ in self.nu.weights:
            self.surface.check_registered(name)
            if name in duals:
                raise ValueError(
                    f"nu weight on {name!r} rejected: dual-curve lengths have "
                    "no differentiable model away from the zero-twist locus"
                )
            _curve_model(self.surface, name)
        names = [n for n, _ in self.nu.weights]
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                if self.surface.inumber(a, b) != 0:
                    raise ValueError(f"nu support not disjoint: {a!r} meets {b!r}")

    def mu_support_indices(self) -> tuple[int, ...]:
        sup = self.mu.mapping
        return tuple(
            i for i, name in enumerate(self.surface.pants_curves) if name in sup
        )


@dataclass(frozen=True)
class MinimumPoint:
    """One solved (or failed) minimization at a fixed interpolation weight s."""

    s: float
    coords: FNCoords
    value: float
    grad_norm: float
    eq1_residuals: tuple[float, ...]
    eq2_residuals: tuple[float, ...]
    iterations: int
    converged: bool
    diverged: bool


@dataclass(frozen=True)
class Trajectory:
    """Minima over a decreasing s-grid; partial if any sample failed."""

    problem: MinimaProblem
    s_values: tuple[float, ...]
    points: tuple[MinimumPoint, ...]
    partial: bool


@dataclass(frozen=True)
class MinimizeOptions:
    grad_tol: float | None = None
    max_iterations: int = ITERATION_CAP
    armijo_c: float = ARMIJO_C
    backtrack_factor: float = BACKTRACK_FACTOR
    backtrack_limit: int = BACKTRACK_LIMIT
    length_box: tuple[float, float] = LENGTH_BOX
    twist_bound: float = TWIST_BOUND
    polish_iterations: int = POLISH_CAP

    def tolerance(self, value: float) -> float:
        if self.grad_tol is not None:
            return self.grad_tol
        return GRAD_TOL_REL * max(1.0, value)


def _curve_model(surface: SurfaceModel, name: str):
    """(length, gradient) callables over full coordinates for one curve."""
    if name in surface.pants_curves:
        idx = surface.length_index(name)
        n = len(surface.pants_curves)

        def _len(c: FNCoords) -> float:
            return c.lengths[idx]

        def _grad(c: FNCoords) -> np.ndarray:
            g = np.zeros(2 * n)
            g[idx] = 1.0
            return g

        return _len, _grad
    if surface.name == "s12" and name == "b":
        return length_beta_s12, grad_length_beta_s12
    raise ValueError(f"no differentiable length model for curve {name!r}")


def _check_s(s: float) -> None:
    if not (0.0 < s < 1.0) or not math.isfinite(s):
        raise ValueError(f"interpolation weight must lie in (0, 1), got {s}")


def mu_length(p: MinimaProblem, c: FNCoords) -> float:
    """Weighted length of mu, read directly from the length coordinates."""
    return sum(
        w * c.lengths[p.surface.length_index(name)] for name, w in p.mu.weights
    )


def nu_length(p: MinimaProblem, c: FNCoords) -> float:
    return sum(w * _curve_model(p.surface, name)[0](c) for name, w in p.nu.weights)


def nu_gradient(p: MinimaProblem, c: FNCoords) -> np.ndarray:
    """Gradient of l_nu over (lengths, twists)."""
    n = len(p.surface.pants_curves)
    g = np.zeros(2 * n)
    for name, w in p.nu.weights:
        g += w * _curve_model(p.surface, name)[1](c)
    return g


def eval_objective(p: MinimaProblem, s: float, c: FNCoords) -> float:
    """(1 - s) l_mu(c) + s l_nu(c)."""
    _check_s(s)
    return (1.0 - s) * mu_length(p, c) + s * nu_length(p, c)


def grad_objective(p: MinimaProblem, s: float, c: FNCoords) -> np.ndarray:
    """Objective gradient over (lengths..., twists...)."""
    _check_s(s)
    g = s * nu_gradient(p, c)
    for name, w in p.mu.weights:
        g[p.surface.length_index(name)] += (1.0 - s) * w
    return g


def twist_gradient_bounds(p: MinimaProblem) -> np.ndarray:
    """Per-pants-curve bound sum_j b_j i(nu_j, alpha_i) on |d l_nu / d t_i|."""
    return np.array(
        [
            sum(w * p.surface.inumber(name, a) for name, w in p.nu.weights)
            for a in p.surface.pants_curves
        ]
    )


def criticality_residuals(p: MinimaProblem, point) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Residuals of the two critical equations at a point.

    eq1 lists d l_nu / d t_i over mu's support; eq2 lists the pairwise
    differences (1/a_i) d l_nu / d l_i - (1/a_j) d l_nu / d l_j there. Both
    vanish at a minimum; the values are meaningful at any coordinates.
    """
    c = point.coords if isinstance(point, MinimumPoint) else point
    n = len(p.surface.pants_curves)
    g = nu_gradient(p, c)
    sup = p.mu_support_indices()
    weights = p.mu.mapping
    eq1 = tuple(g[n + i] for i in sup)
    scaled = [g[i] / weights[p.surface.pants_curves[i]] for i in sup]
    eq2 = tuple(
        scaled[a] - scaled[b]
        for a in range(len(sup))
        for b in range(a + 1, len(sup))
    )
    return eq1, eq2


def _encode(c: FNCoords) -> np.ndarray:
    return np.concatenate([np.log(c.lengths), c.twists])


def _decode(x: np.ndarray, n: int) -> FNCoords:
    lengths = tuple(math.exp(v) for v in x[:n])
    return FNCoords(lengths, tuple(float(v) for v in x[n:]))


def _out_of_box(x: np.ndarray, n: int, o: MinimizeOptions) -> bool:
    lo, hi = math.log(o.length_box[0]), math.log(o.length_box[1])
    if np.any(x[:n] < lo) or np.any(x[:n] > hi):
        return True
    return bool(np.any(np.abs(x[n:]) > o.twist_bound))


def _value_at(p: MinimaProblem, s: float, x: np.ndarray, n: int) -> float:
    try:
        return eval_objective(p, s, _decode(x, n))
    except (OverflowError, ValueError):
        return math.inf


def _grads_at(p: MinimaProblem, s: float, x: np.ndarray, n: int):
    g = grad_objective(p, s, _decode(x, n))
    xg = g.copy()
    xg[:n] *= np.exp(x[:n])
    return g, xg


def _grad_jacobian(p: MinimaProblem, s: float, x: np.ndarray, n: int) -> np.ndarray:
    dim = x.size
    jac = np.empty((dim, dim))
    for k in range(dim):
        h = 1.0e-6 * max(1.0, abs(x[k]))
        xp = x.copy()
        xm = x.copy()
        xp[k] += h
        xm[k] -= h
        jac[:, k] = (_grads_at(p, s, xp, n)[1] - _grads_at(p, s, xm, n)[1]) / (2.0 * h)
    return jac


def minimize_objective(
    p: MinimaProblem, s: float, init: FNCoords, options: MinimizeOptions | None = None
) -> MinimumPoint:
    """Quasi-Newton descent to a critical point of the objective.

    BFGS with Armijo backtracking in (log length, twist) variables. Once
    objective decreases fall below roundoff the line search switches to
    accepting full steps that shrink the gradient norm, and a final Newton
    polish on the analytic gradient (finite-difference Jacobian) pushes the
    residual to the tolerance; both phases never rely on noisy value
    comparisons. Divergence from the coordinate box is reported, not retried:
    it is the designed signal for a non-filling curve pair.
    """
    o = options or MinimizeOptions()
    _check_s(s)
    n = len(p.surface.pants_curves)
    x = _encode(init)
    f = _value_at(p, s, x, n)
    if not math.isfinite(f):
        raise ValueError("objective is not finite at the initial coordinates")
    g, xg = _grads_at(p, s, x, n)
    dim = 2 * n
    h_mat = np.eye(dim)
    first_update = True
    iterations = 0
    diverged = False
    best_gn = float(np.linalg.norm(g))
    stalled = 0

    while True:
        if _out_of_box(x, n, o):
            diverged = True
            break
        if float(np.linalg.norm(g)) < o.tolerance(f):
            break
        if iterations >= o.max_iterations:
            break
        d = -h_mat @ xg
        gd = float(xg @ d)
        if not gd < 0.0:
            h_mat = np.eye(dim)
            first_update = True
            d = -xg
            gd = float(xg @ d)
            if gd == 0.0:
                break
        step = 1.0
        accepted = False
        for _ in range(o.backtrack_limit):
            xn = x + step * d
            fn = _value_at(p, s, xn, n)
            if fn <= f + o.armijo_c * step * gd:
                accepted = True
                break
            step *= o.backtrack_factor
        if accepted:
            gn, xgn = _grads_at(p, s, xn, n)
        else:
            # value differences are in the noise; take the full step if it
            # still shrinks the gradient without raising the value
            xn = x + d
            fn = _value_at(p, s, xn, n)
            if math.isfinite(fn) and fn <= f + VALUE_NOISE_REL * max(1.0, abs(f)):
                gn, xgn = _grads_at(p, s, xn, n)
                if np.linalg.norm(gn) <= 0.9 * np.linalg.norm(g):
                    accepted = True
        if not accepted:
            break
        # steps that neither move the value beyond roundoff nor halve the
        # gradient are noise grinding; hand off to the Newton polish
        gn_norm = float(np.linalg.norm(gn))
        if gn_norm < 0.5 * best_gn:
            best_gn = gn_norm
            stalled = 0
        elif f - fn <= VALUE_NOISE_REL * max(1.0, abs(f)):
            stalled += 1
            if stalled > 15:
                x, f, g, xg = xn, fn, gn, xgn
                iterations += 1
                break
        sv = xn - x
        yv = xgn - xg
        sy = float(sv @ yv)
        if sy > 0.0:
            if first_update:
                h_mat *= sy / float(yv @ yv)
                first_update = False
            if sy > 1.0e-12 * np.linalg.norm(sv) * np.linalg.norm(yv):
                rho = 1.0 / sy
                left = np.eye(dim) - rho * np.outer(sv, yv)
                h_mat = left @ h_mat @ left.T + rho * np.outer(sv, sv)
        x, f, g, xg = xn, fn, gn, xgn
        iterations += 1

    if not diverged:
        for _ in range(o.polish_iterations):
            cg_norm = float(np.linalg.norm(g))
            if cg_norm < o.tolerance(f):
                break
            jac = _grad_jacobian(p, s, x, n)
            try:
                delta = np.linalg.solve(jac, -xg)
            except np.linalg.LinAlgError:
                break
            xn = x + delta
            if _out_of_box(xn, n, o):
                break
            fn = _value_at(p, s, xn, n)
            if not math.isfinite(fn):
                break
            gn, xgn = _grads_at(p, s, xn, n)
            if float(np.linalg.norm(gn)) >= cg_norm:
                break
            x, f, g, xg = xn, fn, gn, xgn
            iterations += 1

    grad_norm = float(np.linalg.norm(g))
    converged = (not diverged) and grad_norm < o.tolerance(f)
    coords = _decode(x, n)
    eq1, eq2 = criticality_residuals(p, coords)
    if diverged:
        log.info("minimize s=%.3e left the coordinate box after %d steps", s, iterations)
    return MinimumPoint(
        s=s,
        coords=coords,
        value=f,
        grad_norm=grad_norm,
        eq1_residuals=eq1,
        eq2_residuals=eq2,
        iterations=iterations,
        converged=converged,
        diverged=diverged,
    )


def make_s_grid(s_start: float, s_stop: float, per_decade: int) -> tuple[float, ...]:
    """Geometric grid from s_start down to s_stop, per_decade points per decade."""
    if not (0.0 < s_stop <= s_start < 1.0):
        raise ValueError("need 0 < s_stop <= s_start < 1")
    if per_decade < 1:
        raise ValueError("per_decade must be at least 1")
    if s_stop == s_start:
        return (s_start,)
    decades = math.log10(s_start / s_stop)
    count = max(2, round(per_decade * decades) + 1)
    ratios = np.linspace(0.0, 1.0, count)
    grid = s_start * (s_stop / s_start) ** ratios
    grid[0], grid[-1] = s_start, s_stop
    return tuple(float(v) for v in grid)


def trace_line(
    p: MinimaProblem,
    s_grid,
    init: FNCoords,
    options: MinimizeOptions | None = None,
) -> Trajectory:
    """Warm-started minimization along a decreasing s-grid.

    Each sample seeds the next; the gradient tolerance tightens with s so the
    critical-equation residuals stay meaningful deep into the pinching
    regime. Divergence aborts the sweep and flags the trajectory partial.
    """
    grid = tuple(float(v) for v in s_grid)
    if not grid:
        raise ValueError("s-grid is empty")
    for v in grid:
        _check_s(v)
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise ValueError("s-grid must be strictly decreasing")
    base = options or MinimizeOptions()
    points = []
    partial = False
    warm = init
    for s in grid:
        tol = base.grad_tol
        if tol is None:
            f_warm = eval_objective(p, s, warm)
            tol = min(GRAD_TOL_REL * max(1.0, f_warm), TRACE_TOL_RATE * s)
        point = minimize_objective(p, s, warm, replace(base, grad_tol=tol))
        points.append(point)
        if point.diverged:
            partial = True
            log.warning("trace aborted at s=%.3e: iterates diverged", s)
            break
        if not point.converged:
            partial = True
        warm = point.coords
    return Trajectory(problem=p, s_values=grid, points=tuple(points), partial=partial)
