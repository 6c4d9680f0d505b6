"""Surface catalog, curve registry, length functions, and holonomy oracles.

The primary surface is the twice-punctured torus: two pants curves a1, a2,
a transversal b meeting each once, and dual curves d1, d2 meeting their
pants curve twice. A once-punctured torus is included as an oracle-only
companion whose dual meets its pants curve once. Closed-form lengths are
evaluated in log domain so the deep pinching regime stays finite, and an
independent matrix representation provides trace-based oracle lengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hyperbolic import (
    acosh_from_log,
    length_from_trace,
    log_cosh,
    log_sinh,
    log_sinh_from_log_cosh,
)

# puncture words must be parabolic to this absolute trace tolerance
TRACE_PARABOLIC_TOL = 1e-9
# log-domain arguments this slightly below 1 are treated as a pinched curve
FORMULA_ROUNDOFF_FLOOR = -1e-12

_LD = np.longdouble


class FormulaDomainError(ValueError):
    """A closed-form length was requested outside its formula's domain."""


@dataclass(frozen=True)
class FNCoords:
    """Fenchel-Nielsen coordinates: one (length, twist) pair per pants curve."""

    lengths: tuple[float, ...]
    twists: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.lengths) != len(self.twists):
            raise ValueError("FNCoords: need one twist per pants curve")
        for l in self.lengths:
            if not (l > 0.0 and math.isfinite(l)):
                raise ValueError(f"FNCoords: length {l!r} must be positive and finite")
        for t in self.twists:
            if not math.isfinite(t):
                raise ValueError(f"FNCoords: twist {t!r} must be finite")


@dataclass(frozen=True)
class SurfaceModel:
    """Immutable curve registry with intersection data and pants adjacency.

    pants_adjacency maps each pants curve to the boundary slots of its one
    or two adjacent pairs of pants; a slot holds another curve id, or 0 for
    a cusp. dual_of maps each pants curve to its dual curve together with
    the geometric intersection count (1 or 2).
    """

    name: str
    pants_curves: tuple[str, ...]
    registry: tuple[str, ...]
    intersection: dict[tuple[str, str], int] = field(repr=False)
    pants_adjacency: dict[str, tuple[tuple[object, ...], ...]] = field(repr=False)
    dual_of: dict[str, tuple[str, int]] = field(repr=False)

    def check_registered(self, curve: str) -> None:
        if curve not in self.registry:
            raise ValueError(f"curve {curve!r} is not registered on {self.name}")

    def inumber(self, a: str, b: str) -> int:
        self.check_registered(a)
        self.check_registered(b)
        return self.intersection[(a, b)]

    def length_index(self, curve: str) -> int:
        if curve not in self.pants_curves:
            raise ValueError(f"curve {curve!r} is not a pants curve of {self.name}")
        return self.pants_curves.index(curve)

    def neighbor_lengths(self, curve: str, coords: FNCoords) -> tuple[tuple[float, ...], ...]:
        """Boundary lengths of the pants adjacent to a pants curve; cusps give 0."""
        out = []
        for pants in self.pants_adjacency[curve]:
            out.append(
                tuple(
                    0.0 if slot == 0 else coords.lengths[self.length_index(slot)]
                    for slot in pants
                )
            )
        return tuple(out)


def _symmetrized(entries: dict[tuple[str, str], int], registry: tuple[str, ...]) -> dict:
    table = {}
    for a in registry:
        for b in registry:
            key = (a, b)
            table[key] = entries.get(key, entries.get((b, a), 0))
    for a in registry:
        if table[(a, a)] != 0:
            raise ValueError("simple closed curves have zero self-intersection")
    for a in registry:
        for b in registry:
            if table[(a, b)] != table[(b, a)]:
                raise ValueError("intersection table must be symmetric")
    return table


_S12 = SurfaceModel(
    name="s12",
    pants_curves=("a1", "a2"),
    registry=("a1", "a2", "b", "d1", "d2"),
    intersection=_symmetrized(
        {
            ("a1", "b"): 1,
            ("a2", "b"): 1,
            ("a1", "d1"): 2,
            ("a2", "d2"): 2,
            ("d1", "d2"): 2,
        },
        ("a1", "a2", "b", "d1", "d2"),
    ),
    pants_adjacency={
        "a1": (("a2", 0), ("a2", 0)),
        "a2": (("a1", 0), ("a1", 0)),
    },
    dual_of={"a1": ("d1", 2), "a2": ("d2", 2)},
)

_S11 = SurfaceModel(
    name="s11",
    pants_curves=("a",),
    registry=("a", "d"),
    intersection=_symmetrized({("a", "d"): 1}, ("a", "d")),
    pants_adjacency={"a": (("a", 0),)},
    dual_of={"a": ("d", 1)},
)

_CATALOG = {"s12": _S12, "s11": _S11}


def get_surface(name: str) -> SurfaceModel:
    try:
        return _CATALOG[name]
    except KeyError:
        raise ValueError(f"unknown surface {name!r}; available: {sorted(_CATALOG)}") from None


@dataclass(frozen=True)
class WeightedMulticurve:
    """Positive weights on a set of pairwise-disjoint registered curves."""

    weights: tuple[tuple[str, float], ...]

    @property
    def mapping(self) -> dict[str, float]:
        return dict(self.weights)

    @property
    def support(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.weights)


def make_multicurve(surface: SurfaceModel, weights: dict[str, float]) -> WeightedMulticurve:
    if not weights:
        raise ValueError("multicurve needs at least one weighted curve")
    for curve, w in weights.items():
        surface.check_registered(curve)
        if not (w > 0.0 and math.isfinite(w)):
            raise ValueError(f"weight for {curve!r} must be positive and finite, got {w!r}")
    support = sorted(weights)
    for i, a in enumerate(support):
        for b in support[i + 1 :]:
            if surface.inumber(a, b) != 0:
                raise ValueError(
                    f"support curves {a!r} and {b!r} intersect; a multicurve must be disjoint"
                )
    return WeightedMulticurve(tuple((c, float(weights[c])) for c in support))


def intersection_number(surface: SurfaceModel, gamma: str, m: WeightedMulticurve) -> float:
    """i(gamma, m) extended over the weighted support by bilinearity."""
    surface.check_registered(gamma)
    return sum(w * surface.inumber(gamma, c) for c, w in m.weights)


# ---------------------------------------------------------------------------
# closed-form lengths on the twice-punctured torus


def _require_s12_coords(c: FNCoords) -> tuple[float, float, float, float]:
    if len(c.lengths) != 2:
        raise ValueError("this length function needs two pants curves")
    return c.lengths[0], c.lengths[1], c.twists[0], c.twists[1]


def _log_cosh_half_beta(l1: float, l2: float, t1: float, t2: float) -> tuple[float, float]:
    """(log cosh(perp), log cosh(l_b / 2)) for the transversal curve.

    cosh(l_b/2) = C cosh(t1/2) cosh(t2/2) + sinh(t1/2) sinh(t2/2) where
    C = (1 + cosh(l1/2) cosh(l2/2)) / (sinh(l1/2) sinh(l2/2)). Everything is
    assembled in log domain; the twist cross term enters through log1p and
    can never reach -1 because C > 1.
    """
    log_c1c2 = log_cosh(l1 / 2.0) + log_cosh(l2 / 2.0)
    log_perp = float(np.logaddexp(0.0, log_c1c2)) - log_sinh(l1 / 2.0) - log_sinh(l2 / 2.0)
    cross = math.tanh(t1 / 2.0) * math.tanh(t2 / 2.0) * math.exp(-log_perp)
    log_x = log_perp + log_cosh(t1 / 2.0) + log_cosh(t2 / 2.0) + math.log1p(cross)
    return log_perp, log_x


def length_beta_s12(c: FNCoords) -> float:
    """Geodesic length of the transversal curve b from the closed form."""
    l1, l2, t1, t2 = _require_s12_coords(c)
    _, log_x = _log_cosh_half_beta(l1, l2, t1, t2)
    return 2.0 * acosh_from_log(log_x)


def _signed_exp(sign_source: float, log_mag: float) -> float:
    if sign_source == 0.0:
        return 0.0
    return math.copysign(math.exp(log_mag), sign_source)


def grad_length_beta_s12(c: FNCoords) -> np.ndarray:
    """(d l_b/d l1, d l_b/d l2, d l_b/d t1, d l_b/d t2), overflow-safe.

    Each term is formed as exp of a log difference against log sinh(l_b/2),
    so the partials stay finite even where cosh factors overflow a float.
    """
    l1, l2, t1, t2 = _require_s12_coords(c)
    log_perp, log_x = _log_cosh_half_beta(l1, l2, t1, t2)
    log_sh = log_sinh_from_log_cosh(log_x)
    log_ch_sum = float(np.logaddexp(log_cosh(l1 / 2.0), log_cosh(l2 / 2.0)))
    log_cht1 = log_cosh(t1 / 2.0)
    log_cht2 = log_cosh(t2 / 2.0)
    dl1 = -math.exp(
        log_ch_sum + log_cht1 + log_cht2
        - 2.0 * log_sinh(l1 / 2.0) - log_sinh(l2 / 2.0) - log_sh
    )
    dl2 = -math.exp(
        log_ch_sum + log_cht1 + log_cht2
        - 2.0 * log_sinh(l2 / 2.0) - log_sinh(l1 / 2.0) - log_sh
    )
    log_sht1 = log_sinh(abs(t1) / 2.0) if t1 != 0.0 else -math.inf
    log_sht2 = log_sinh(abs(t2) / 2.0) if t2 != 0.0 else -math.inf
    dt1 = _signed_exp(t1, log_perp + log_sht1 + log_cht2 - log_sh) + _signed_exp(
        t2, log_cht1 + log_sht2 - log_sh
    )
    dt2 = _signed_exp(t2, log_perp + log_sht2 + log_cht1 - log_sh) + _signed_exp(
        t1, log_cht2 + log_sht1 - log_sh
    )
    return np.array([dl1, dl2, dt1, dt2])


def length_dual_s12(c: FNCoords, which: str) -> float:
    """Length of a dual curve from cosh(l_d/4) = sinh(l_other/2) sinh(l_b/2).

    The argument is provably above 1 for valid coordinates; values within
    roundoff of 1 mean the dual has pinched and give length 0. Anything
    further below 1 is reported as a formula-domain error.
    """
    l1, l2, t1, t2 = _require_s12_coords(c)
    if which == "d1":
        log_other = log_sinh(l2 / 2.0)
    elif which == "d2":
        log_other = log_sinh(l1 / 2.0)
    else:
        raise ValueError(f"dual curve must be 'd1' or 'd2', got {which!r}")
    _, log_x = _log_cosh_half_beta(l1, l2, t1, t2)
    log_arg = log_other + log_sinh_from_log_cosh(log_x)
    if log_arg < 0.0:
        if log_arg < FORMULA_ROUNDOFF_FLOOR:
            raise FormulaDomainError(
                f"dual length formula argument below 1 (log {log_arg:.3e}) at {c}"
            )
        log_arg = 0.0
    return 4.0 * acosh_from_log(log_arg)


# ---------------------------------------------------------------------------
# matrix representations


@dataclass(frozen=True)
class RepMatrices:
    """Holonomy matrices: generators, one word per registry curve, punctures."""

    surface: str
    generators: dict[str, np.ndarray] = field(repr=False)
    words: dict[str, np.ndarray] = field(repr=False)
    puncture_words: tuple[np.ndarray, ...] = field(repr=False)


def _t_ld(x) -> np.ndarray:
    h = np.exp(_LD(x) / 2.0)
    return np.array([[h, 0.0], [0.0, 1.0 / h]], dtype=_LD)


def _p_from_cosh(ch_d) -> np.ndarray:
    ch = np.sqrt((ch_d + 1.0) / 2.0)
    sh = np.sqrt((ch_d - 1.0) / 2.0)
    return np.array([[ch, sh], [sh, ch]], dtype=_LD)


def _inv(m: np.ndarray) -> np.ndarray:
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=_LD)


_EPS_LD = float(np.finfo(_LD).eps)


def _chain(*factors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Product of factors plus the entrywise-absolute product.

    The absolute product dominates the terms cancelled during accumulation,
    giving a forward roundoff envelope for traces of the true product.
    """
    w = np.eye(2, dtype=_LD)
    wa = np.eye(2, dtype=_LD)
    for m in factors:
        w = w @ m
        wa = wa @ np.abs(m)
    return w, wa


def _check_parabolic(pairs: tuple[tuple[np.ndarray, np.ndarray], ...]) -> None:
    for w, wa in pairs:
        tr = float(w[0, 0] + w[1, 1])
        bound = 64.0 * _EPS_LD * float(wa[0, 0] + wa[1, 1])
        if abs(abs(tr) - 2.0) > max(TRACE_PARABOLIC_TOL, bound):
            raise RuntimeError(f"puncture word trace {tr!r} is not parabolic")


def build_rep_s12(c: FNCoords) -> RepMatrices:
    """Holonomy for the twice-punctured torus glued from two isometric pants.

    Each pants has boundary lengths (l1, l2) and one cusp; the transversal
    word crosses both gluings, picking up the common-perpendicular jump and
    one axis translation per twist. Dual words are commutators with the
    pants-curve words. Products are accumulated in extended precision.
    """
    l1, l2, t1, t2 = _require_s12_coords(c)
    c1 = np.cosh(_LD(l1) / 2.0)
    c2 = np.cosh(_LD(l2) / 2.0)
    s1 = np.sinh(_LD(l1) / 2.0)
    s2 = np.sinh(_LD(l2) / 2.0)
    perp_cosh = (1.0 + c1 * c2) / (s1 * s2)
    p_d = _p_from_cosh(perp_cosh)
    u = _t_ld(l1)
    v = p_d @ _t_ld(l2) @ _inv(p_d)
    b = p_d @ _t_ld(t2) @ p_d @ _t_ld(t1)
    # transversal word seen from the other gluing, written in the frame where
    # a2 is the axis translation; same trace class, far smaller entries
    b_swap = p_d @ _t_ld(t1) @ p_d @ _t_ld(t2)
    v_axis = _t_ld(l2)
    # puncture words as fully elementary chains so the roundoff envelope
    # covers every accumulated product; inv(v) g3 collapses one p_d pair
    p1, p1_abs = _chain(u, p_d, _t_ld(-l2), _inv(p_d))
    p2, p2_abs = _chain(
        p_d, _t_ld(t2 - l2), p_d, _t_ld(l1), _inv(p_d), _t_ld(-t2), _inv(p_d)
    )
    _check_parabolic(((p1, p1_abs), (p2, p2_abs)))
    words = {
        "a1": u,
        "a2": v,
        "b": b,
        "d1": b_swap @ v_axis @ _inv(b_swap) @ _inv(v_axis),
        "d2": b @ u @ _inv(b) @ _inv(u),
    }
    return RepMatrices(
        surface="s12",
        generators={"u": u, "v": v, "b": b},
        words=words,
        puncture_words=(p1, p2),
    )


def build_rep_s11(l: float, t: float) -> RepMatrices:
    """Holonomy for the once-punctured torus, oracle-only.

    The pants curve word is the axis translation of length l; the dual word
    crosses it once through the perpendicular jump m fixed by the puncture
    relation sinh(l/2) sinh(m/2) = 1, composed with the twist translation.
    """
    if l <= 0.0:
        raise ValueError("build_rep_s11: length must be positive")
    a = _t_ld(l)
    ch_m = _LD(1.0) + 2.0 / np.sinh(_LD(l) / 2.0) ** 2
    d_word = _t_ld(t) @ _p_from_cosh(ch_m)
    commutator, comm_abs = _chain(a, d_word, _inv(a), _inv(d_word))
    _check_parabolic(((commutator, comm_abs),))
    return RepMatrices(
        surface="s11",
        generators={"a": a, "d": d_word},
        words={"a": a, "d": d_word},
        puncture_words=(commutator,),
    )


def oracle_length(rep: RepMatrices, gamma: str) -> float:
    """Translation length of a registry curve read off its word's trace."""
    if gamma not in rep.words:
        raise ValueError(f"no word for curve {gamma!r} in this representation")
    w = rep.words[gamma]
    return length_from_trace(float(w[0, 0] + w[1, 1]))
