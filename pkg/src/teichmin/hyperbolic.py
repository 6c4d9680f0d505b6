"""Upper half-plane model primitives.

Overflow-safe inverse hyperbolic functions, points and distances in the
half-plane model, isometries as 2x2 real matrices acting by Mobius
transformation, and a piecewise-geodesic "broken arc" testbed used to
measure how much a right-angled staircase path falls short of the
geodesic between its endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Both acosh branches agree to ~1e-16 relative at the switch point.
ACOSH_LOG_SWITCH = 1.0e8
LOG_ACOSH_LOG_SWITCH = math.log(ACOSH_LOG_SWITCH)

LOG2 = math.log(2.0)


def acosh_stable(x: float) -> float:
    """arccosh(x), evaluated in the log domain for large x.

    For x > 1e8 the naive log(x + sqrt(x*x - 1)) squares x; here we use
    log(2x) plus the exact correction log((1 + sqrt(1 - x**-2))/2).
    """
    if x < 1.0:
        raise ValueError(f"acosh_stable: argument {x!r} < 1 is outside the domain")
    if x <= ACOSH_LOG_SWITCH:
        return math.acosh(x)
    inv2 = 1.0 / (x * x)
    return LOG2 + math.log(x) + math.log1p(-(1.0 - math.sqrt(1.0 - inv2)) / 2.0)


def acosh_from_log(log_x: float) -> float:
    """arccosh(exp(log_x)) without materialising exp(log_x) when it is huge."""
    if log_x < 0.0:
        raise ValueError(f"acosh_from_log: log-argument {log_x!r} < 0 is outside the domain")
    if log_x <= LOG_ACOSH_LOG_SWITCH:
        return math.acosh(math.exp(log_x))
    # correction term is below double resolution past the switch
    return LOG2 + log_x


def log_cosh(x: float) -> float:
    """log(cosh(x)) without overflow."""
    a = abs(x)
    return a - LOG2 + math.log1p(math.exp(-2.0 * a))


def log_sinh(x: float) -> float:
    """log(sinh(x)) for x > 0 without overflow."""
    if x <= 0.0:
        raise ValueError(f"log_sinh: argument {x!r} must be positive")
    if x < 1e-3:
        # series branch; the exp form loses log1p(-exp(-2x)) to cancellation
        x2 = x * x
        return math.log(x) + math.log1p(x2 / 6.0 * (1.0 + x2 / 20.0))
    return x - LOG2 + math.log1p(-math.exp(-2.0 * x))


def log_sinh_from_log_cosh(log_c: float) -> float:
    """log(sinh(y)) given log(cosh(y)), for y > 0."""
    if log_c < 0.0:
        raise ValueError("log_sinh_from_log_cosh: log(cosh) cannot be negative")
    if log_c == 0.0:
        raise ValueError("log_sinh_from_log_cosh: degenerate point, sinh = 0")
    if log_c > 20.0:
        return log_c
    return log_c + 0.5 * math.log(-math.expm1(-2.0 * log_c))


def length_from_trace(tr: float) -> float:
    """Translation length 2*arccosh(|tr|/2) of a hyperbolic isometry."""
    half = abs(tr) / 2.0
    if half <= 1.0:
        raise ValueError(
            f"length_from_trace: |trace| = {abs(tr)!r} <= 2, element is not hyperbolic"
        )
    return 2.0 * acosh_stable(half)


@dataclass(frozen=True)
class HPoint:
    """Point of the upper half-plane."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not self.y > 0.0:
            raise ValueError(f"HPoint: height {self.y!r} must be positive")

    def as_complex(self) -> complex:
        return complex(self.x, self.y)


BASEPOINT = HPoint(0.0, 1.0)


def hdistance(p: HPoint, q: HPoint) -> float:
    """Hyperbolic distance, cosh d = 1 + |p - q|^2 / (2 y_p y_q)."""
    dx = p.x - q.x
    dy = p.y - q.y
    arg = 1.0 + (dx * dx + dy * dy) / (2.0 * p.y * q.y)
    if arg < 1.0:
        arg = 1.0
    return acosh_stable(arg)


def translation_matrix(t: float) -> np.ndarray:
    """Translation by t along the imaginary axis (from i toward i*e^t)."""
    h = math.exp(t / 2.0)
    return np.array([[h, 0.0], [0.0, 1.0 / h]])


def rotation_matrix(theta: float) -> np.ndarray:
    """Rotation by theta about the point i (counterclockwise)."""
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    return np.array([[c, s], [-s, c]])


def perp_translation_matrix(d: float) -> np.ndarray:
    """Translation by d along the unit semicircle (from i toward +1)."""
    c = math.cosh(d / 2.0)
    s = math.sinh(d / 2.0)
    return np.array([[c, s], [s, c]])


def apply_mobius(m: np.ndarray, p: HPoint) -> HPoint:
    """Apply a unimodular real Mobius transformation to a half-plane point.

    The image height uses the det = 1 form y / |cz + d|^2, which stays
    positive where the naive complex quotient loses the sign of the
    determinant to cancellation after long walks.
    """
    a, b = float(m[0, 0]), float(m[0, 1])
    c, d = float(m[1, 0]), float(m[1, 1])
    denom = (c * p.x + d) ** 2 + (c * p.y) ** 2
    x = (a * p.x + b) * (c * p.x + d) + a * c * p.y * p.y
    return HPoint(x / denom, p.y / denom)


def frobenius_cosh_distance(m: np.ndarray) -> float:
    """cosh of the distance from i to m(i), for m in SL(2, R).

    Equals half the squared Frobenius norm; used as an independent check on
    distances obtained by applying the matrix and calling hdistance.
    """
    return float(np.sum(m * m)) / 2.0


@dataclass(frozen=True)
class BrokenArcSpec:
    """Right-angled piecewise-geodesic path V_1 H_1 V_2 ... H_r V_{r+1}.

    turns holds the 2r turn signs in walk order (into H_1, out of H_1,
    into H_2, ...); +1 is a left turn. Consecutive horizontal segments must
    land in opposite half-planes of the vertical between them, which pins
    each "out" sign to the negation of the next "in" sign.
    """

    vertical_lengths: tuple[float, ...]
    horizontal_lengths: tuple[float, ...]
    turns: tuple[int, ...]

    def __post_init__(self) -> None:
        r = len(self.horizontal_lengths)
        if len(self.vertical_lengths) != r + 1:
            raise ValueError("BrokenArcSpec: need exactly one more vertical than horizontal")
        if any(s < 0.0 for s in self.vertical_lengths):
            raise ValueError("BrokenArcSpec: vertical lengths must be >= 0")
        if any(d <= 0.0 for d in self.horizontal_lengths):
            raise ValueError("BrokenArcSpec: horizontal lengths must be > 0")
        if len(self.turns) != 2 * r:
            raise ValueError("BrokenArcSpec: need 2 turn signs per horizontal segment")
        if any(t not in (-1, 1) for t in self.turns):
            raise ValueError("BrokenArcSpec: turn signs must be +-1")
        for i in range(r - 1):
            if self.turns[2 * i + 1] != -self.turns[2 * i + 2]:
                raise ValueError(
                    "BrokenArcSpec: opposite-half-plane condition violated between "
                    f"horizontal segments {i + 1} and {i + 2}"
                )

    @property
    def r(self) -> int:
        return len(self.horizontal_lengths)

    @classmethod
    def staircase(
        cls, vertical_lengths: Sequence[float], horizontal_lengths: Sequence[float]
    ) -> "BrokenArcSpec":
        """Canonical alternating arc: turns L, R, L, R, ..."""
        turns = []
        for _ in horizontal_lengths:
            turns.extend((1, -1))
        return cls(tuple(vertical_lengths), tuple(horizontal_lengths), tuple(turns))

    @classmethod
    def with_free_signs(
        cls,
        vertical_lengths: Sequence[float],
        horizontal_lengths: Sequence[float],
        free_signs: Sequence[int],
    ) -> "BrokenArcSpec":
        """Build from the r+1 unconstrained signs (into each H, plus the final out)."""
        r = len(horizontal_lengths)
        if len(free_signs) != r + 1:
            raise ValueError("with_free_signs: need r+1 free signs")
        turns = []
        for i in range(r):
            turns.append(free_signs[i])
            if i < r - 1:
                turns.append(-free_signs[i + 1])
        turns.append(free_signs[r])
        return cls(tuple(vertical_lengths), tuple(horizontal_lengths), tuple(turns))


@dataclass(frozen=True)
class BrokenArc:
    """Constructed broken arc: endpoints, vertices, and the walk isometry."""

    start: HPoint
    end: HPoint
    segments: tuple[tuple[HPoint, HPoint], ...]
    total_length: float
    endpoint_distance: float

    @property
    def deficit(self) -> float:
        return self.total_length - self.endpoint_distance


_TURN = {1: rotation_matrix(math.pi / 2.0), -1: rotation_matrix(-math.pi / 2.0)}


def build_broken_arc(spec: BrokenArcSpec) -> BrokenArc:
    """Walk the arc from (0, 1) by composing translations and right-angle turns."""
    g = np.eye(2)
    start = BASEPOINT
    vertices = [start]
    segments = []
    moves: list[tuple[str, float | int]] = []
    r = spec.r
    for i, s in enumerate(spec.vertical_lengths):
        moves.append(("walk", s))
        if i < r:
            moves.append(("turn", spec.turns[2 * i]))
            moves.append(("walk", spec.horizontal_lengths[i]))
            if 2 * i + 1 < len(spec.turns):
                moves.append(("turn", spec.turns[2 * i + 1]))
    for kind, value in moves:
        if kind == "turn":
            g = g @ _TURN[int(value)]
        else:
            g = g @ translation_matrix(float(value))
            p = apply_mobius(g, BASEPOINT)
            segments.append((vertices[-1], p))
            vertices.append(p)
    end = vertices[-1]
    total = sum(spec.vertical_lengths) + sum(spec.horizontal_lengths)
    # Frobenius form of d(i, g(i)) is exact and avoids subtracting close points.
    dist = acosh_stable(max(frobenius_cosh_distance(g), 1.0))
    return BrokenArc(start, end, tuple(segments), float(total), dist)


@dataclass(frozen=True)
class DeficitSample:
    """One surveyed broken arc."""

    total: float
    endpoint_distance: float
    deficit: float
    min_horizontal: float


def deficit_survey(
    n_samples: int, horizontal_floor: float, r: int, rng_seed: int
) -> list[DeficitSample]:
    """Random broken arcs with all horizontal lengths above the floor.

    Verticals are uniform in [0, 5], horizontals are the floor plus uniform
    [0, 5] increments, so surveys at different floors share draws when seeded
    identically. The empirical max deficit estimates the worst-case gap
    constant for this floor and segment count.
    """
    if horizontal_floor <= 0.0:
        raise ValueError("deficit_survey: horizontal floor must be positive")
    if r < 1:
        raise ValueError("deficit_survey: need at least one horizontal segment")
    rng = np.random.default_rng(rng_seed)
    out: list[DeficitSample] = []
    for _ in range(n_samples):
        verts = rng.uniform(0.0, 5.0, r + 1)
        horiz = horizontal_floor + rng.uniform(0.0, 5.0, r)
        free = [int(v) for v in rng.integers(0, 2, r + 1) * 2 - 1]
        spec = BrokenArcSpec.with_free_signs(tuple(verts), tuple(horiz), free)
        arc = build_broken_arc(spec)
        out.append(
            DeficitSample(
                total=arc.total_length,
                endpoint_distance=arc.endpoint_distance,
                deficit=arc.deficit,
                min_horizontal=float(np.min(horiz)),
            )
        )
    return out
