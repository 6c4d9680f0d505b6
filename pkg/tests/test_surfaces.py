"""Tests for the surface catalog, length functions, and holonomy oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from teichmin.surfaces import (
    FNCoords,
    FormulaDomainError,
    RepMatrices,
    build_rep_s11,
    build_rep_s12,
    get_surface,
    grad_length_beta_s12,
    intersection_number,
    length_beta_s12,
    length_dual_s12,
    make_multicurve,
    oracle_length,
)

REL_TOL = 1e-12
ORACLE_REL_TOL = 1e-9
GRAD_FD_REL_TOL = 1e-6
# transversal length at lengths (2, 2), twists (0, 0)
BETA_2200 = 3.0877473316212189
# dual length at the same point
DUAL_2200 = 6.4809490694707605

lengths_st = st.floats(min_value=0.1, max_value=3.0)
twists_st = st.floats(min_value=-2.0, max_value=2.0)


def coords(l1, l2, t1, t2):
    return FNCoords((l1, l2), (t1, t2))


class TestCatalog:
    def test_unknown_surface(self):
        with pytest.raises(ValueError):
            get_surface("genus-two")

    def test_intersection_regression_table(self):
        s = get_surface("s12")
        expected = {
            ("a1", "a2"): 0,
            ("a1", "b"): 1,
            ("a2", "b"): 1,
            ("a1", "d1"): 2,
            ("a2", "d2"): 2,
            ("a1", "d2"): 0,
            ("a2", "d1"): 0,
            ("b", "d1"): 0,
            ("b", "d2"): 0,
            ("d1", "d2"): 2,
        }
        for (x, y), n in expected.items():
            assert s.inumber(x, y) == n
            assert s.inumber(y, x) == n
        for x in s.registry:
            assert s.inumber(x, x) == 0

    def test_dual_assignment(self):
        s12 = get_surface("s12")
        assert s12.dual_of == {"a1": ("d1", 2), "a2": ("d2", 2)}
        s11 = get_surface("s11")
        assert s11.dual_of == {"a": ("d", 1)}
        assert s11.inumber("a", "d") == 1

    def test_neighbor_lengths_resolve_coordinates(self):
        s = get_surface("s12")
        c = coords(0.5, 1.25, 0.0, 0.0)
        assert s.neighbor_lengths("a1", c) == ((1.25, 0.0), (1.25, 0.0))
        assert s.neighbor_lengths("a2", c) == ((0.5, 0.0), (0.5, 0.0))

    def test_unregistered_curve(self):
        s = get_surface("s12")
        with pytest.raises(ValueError):
            s.inumber("a1", "zeta")


class TestMulticurve:
    def test_weighted_intersection_examples(self):
        s = get_surface("s12")
        assert intersection_number(s, "b", make_multicurve(s, {"a1": 1.0, "a2": 1.0})) == 2.0
        assert intersection_number(s, "d1", make_multicurve(s, {"a2": 2.5})) == 0.0
        assert intersection_number(s, "d1", make_multicurve(s, {"a1": 3.0})) == 6.0

    def test_support_must_be_disjoint(self):
        s = get_surface("s12")
        with pytest.raises(ValueError):
            make_multicurve(s, {"a1": 1.0, "b": 1.0})
        with pytest.raises(ValueError):
            make_multicurve(s, {"a1": 1.0, "d1": 0.5})

    def test_weights_must_be_positive(self):
        s = get_surface("s12")
        with pytest.raises(ValueError):
            make_multicurve(s, {"a1": 0.0})
        with pytest.raises(ValueError):
            make_multicurve(s, {"a1": -1.0})

    def test_empty_and_unknown(self):
        s = get_surface("s12")
        with pytest.raises(ValueError):
            make_multicurve(s, {})
        with pytest.raises(ValueError):
            make_multicurve(s, {"gamma": 1.0})
        with pytest.raises(ValueError):
            intersection_number(s, "gamma", make_multicurve(s, {"a1": 1.0}))


class TestFNCoords:
    def test_validation(self):
        with pytest.raises(ValueError):
            FNCoords((1.0, -1.0), (0.0, 0.0))
        with pytest.raises(ValueError):
            FNCoords((1.0, 0.0), (0.0, 0.0))
        with pytest.raises(ValueError):
            FNCoords((1.0,), (0.0, 0.0))
        with pytest.raises(ValueError):
            FNCoords((1.0, 1.0), (0.0, math.inf))


class TestTransversalLength:
    def test_reference_point(self):
        assert length_beta_s12(coords(2, 2, 0, 0)) == pytest.approx(BETA_2200, rel=REL_TOL)

    @given(lengths_st, lengths_st, twists_st, twists_st)
    @settings(max_examples=80, deadline=None)
    def test_twist_parity(self, l1, l2, t1, t2):
        a = length_beta_s12(coords(l1, l2, t1, t2))
        b = length_beta_s12(coords(l1, l2, -t1, -t2))
        assert a == pytest.approx(b, rel=REL_TOL)

    @given(lengths_st, lengths_st, twists_st, twists_st)
    @settings(max_examples=80, deadline=None)
    def test_swap_symmetry(self, l1, l2, t1, t2):
        a = length_beta_s12(coords(l1, l2, t1, t2))
        b = length_beta_s12(coords(l2, l1, t2, t1))
        assert a == pytest.approx(b, rel=REL_TOL)

    def test_deep_pinching_stays_finite(self):
        val = length_beta_s12(coords(1e-9, 1e-9, 0.1, -0.2))
        # leading behavior 2 log(16 cosh(t1/2) cosh(t2/2) / (l1 l2))
        lead = 2.0 * math.log(16.0 * math.cosh(0.05) * math.cosh(0.1) / 1e-18)
        assert abs(val - lead) < 1e-6

    def test_twist_convexity_near_minimum(self):
        # second difference in t1 at the twist origin must be positive
        h = 1e-3
        f = lambda t: length_beta_s12(coords(1.0, 1.5, t, 0.0))
        second = f(h) - 2.0 * f(0.0) + f(-h)
        assert second > 0.0


class TestTransversalGradient:
    def _fd(self, c, h=1e-6):
        l1, l2 = c.lengths
        t1, t2 = c.twists
        out = []
        for k in range(4):
            plus = [l1, l2, t1, t2]
            minus = [l1, l2, t1, t2]
            plus[k] += h
            minus[k] -= h
            out.append(
                (
                    length_beta_s12(FNCoords((plus[0], plus[1]), (plus[2], plus[3])))
                    - length_beta_s12(FNCoords((minus[0], minus[1]), (minus[2], minus[3])))
                )
                / (2.0 * h)
            )
        return np.array(out)

    def test_reference_point_matches_fd(self):
        c = coords(2, 2, 0, 0)
        g = grad_length_beta_s12(c)
        fd = self._fd(c)
        assert np.all(np.abs(g - fd) <= GRAD_FD_REL_TOL * np.maximum(np.abs(fd), 1.0))

    def test_fd_agreement_seeded_sweep(self):
        rng = np.random.default_rng(314)
        for _ in range(100):
            c = coords(*rng.uniform(0.3, 3.0, 2), *rng.uniform(-2.0, 2.0, 2))
            g = grad_length_beta_s12(c)
            fd = self._fd(c)
            denom = np.maximum(np.abs(fd), 1e-6)
            assert np.max(np.abs(g - fd) / denom) < GRAD_FD_REL_TOL

    def test_twist_partials_vanish_at_origin(self):
        g = grad_length_beta_s12(coords(2, 2, 0, 0))
        assert g[2] == 0.0 and g[3] == 0.0

    def test_length_partial_closed_form_at_origin(self):
        # at twist zero the length partial collapses to -1/sinh(l_i/2)
        g = grad_length_beta_s12(coords(2.0, 1.2, 0.0, 0.0))
        assert g[0] == pytest.approx(-1.0 / math.sinh(1.0), rel=1e-12)
        assert g[1] == pytest.approx(-1.0 / math.sinh(0.6), rel=1e-12)

    @given(lengths_st, lengths_st, twists_st, twists_st)
    @settings(max_examples=80, deadline=None)
    def test_length_partials_negative(self, l1, l2, t1, t2):
        g = grad_length_beta_s12(coords(l1, l2, t1, t2))
        assert g[0] < 0.0 and g[1] < 0.0

    @given(lengths_st, lengths_st, twists_st, twists_st)
    @settings(max_examples=80, deadline=None)
    def test_twist_partials_bounded_by_intersection(self, l1, l2, t1, t2):
        g = grad_length_beta_s12(coords(l1, l2, t1, t2))
        assert abs(g[2]) < 1.0 and abs(g[3]) < 1.0


class TestDualLength:
    def test_reference_point(self):
        assert length_dual_s12(coords(2, 2, 0, 0), "d1") == pytest.approx(
            DUAL_2200, rel=REL_TOL
        )

    @given(lengths_st, lengths_st, twists_st, twists_st)
    @settings(max_examples=60, deadline=None)
    def test_swap_symmetry(self, l1, l2, t1, t2):
        a = length_dual_s12(coords(l1, l2, t1, t2), "d1")
        b = length_dual_s12(coords(l2, l1, t2, t1), "d2")
        assert a == pytest.approx(b, rel=1e-11)

    @given(lengths_st, twists_st)
    @settings(max_examples=40, deadline=None)
    def test_symmetric_locus(self, l, t):
        c = coords(l, l, t, t)
        assert length_dual_s12(c, "d1") == pytest.approx(
            length_dual_s12(c, "d2"), rel=1e-11
        )

    def test_unknown_dual_rejected(self):
        with pytest.raises(ValueError):
            length_dual_s12(coords(1, 1, 0, 0), "d3")

    def test_pinching_residual(self):
        # l_d1 - 4 log(1/l1) tends to 4 log 8 as the pants curves pinch
        eps = 1e-4
        c = coords(2 * eps, eps, 0.0, 0.0)
        resid = length_dual_s12(c, "d1") - 4.0 * math.log(1.0 / (2 * eps))
        assert abs(resid - 4.0 * math.log(8.0)) < 1e-3

    def test_dual_shrinks_when_its_curve_stretches(self):
        # stretching a1 with a2 pinched drives d1 toward zero length
        vals = [
            length_dual_s12(coords(l1, 0.4, 0.0, 0.0), "d1") for l1 in (2.0, 10.0, 40.0)
        ]
        assert vals[0] > vals[1] > vals[2] >= 0.0


class TestRepresentationS12:
    def test_pants_curve_traces(self):
        c = coords(1.3, 0.7, 0.4, -0.9)
        rep = build_rep_s12(c)
        for name, l in (("a1", 1.3), ("a2", 0.7)):
            tr = float(rep.words[name][0, 0] + rep.words[name][1, 1])
            assert abs(tr) == pytest.approx(2.0 * math.cosh(l / 2.0), rel=REL_TOL)

    def test_puncture_words_parabolic(self):
        rng = np.random.default_rng(77)
        for _ in range(50):
            c = coords(*rng.uniform(0.1, 3.0, 2), *rng.uniform(-2.0, 2.0, 2))
            rep = build_rep_s12(c)
            for w in rep.puncture_words:
                assert abs(float(w[0, 0] + w[1, 1])) == pytest.approx(2.0, abs=1e-9)

    def test_transversal_reference(self):
        rep = build_rep_s12(coords(2, 2, 0, 0))
        assert oracle_length(rep, "b") == pytest.approx(BETA_2200, rel=ORACLE_REL_TOL)

    def test_dual_reference(self):
        rep = build_rep_s12(coords(2, 2, 0, 0))
        assert oracle_length(rep, "d1") == pytest.approx(DUAL_2200, rel=ORACLE_REL_TOL)
        assert oracle_length(rep, "d2") == pytest.approx(DUAL_2200, rel=ORACLE_REL_TOL)

    def test_pants_length_round_trip(self):
        rep = build_rep_s12(coords(0.37, 2.11, 1.0, -0.5))
        assert oracle_length(rep, "a1") == pytest.approx(0.37, rel=ORACLE_REL_TOL)
        assert oracle_length(rep, "a2") == pytest.approx(2.11, rel=ORACLE_REL_TOL)

    def test_closed_form_agreement_seeded_sweep(self):
        # transversal checked at arbitrary twists; duals on the zero-twist
        # locus where their closed form holds
        rng = np.random.default_rng(2718)
        for _ in range(1000):
            l1, l2 = rng.uniform(0.1, 3.0, 2)
            t1, t2 = rng.uniform(-2.0, 2.0, 2)
            c = coords(l1, l2, t1, t2)
            rep = build_rep_s12(c)
            lb = length_beta_s12(c)
            assert abs(oracle_length(rep, "b") - lb) / lb < ORACLE_REL_TOL
            c0 = coords(l1, l2, 0.0, 0.0)
            rep0 = build_rep_s12(c0)
            for which in ("d1", "d2"):
                ld = length_dual_s12(c0, which)
                assert abs(oracle_length(rep0, which) - ld) / ld < ORACLE_REL_TOL

    def test_dual_words_ignore_far_twist(self):
        # d1 crosses only a1, so its length cannot depend on the a2 twist
        base = oracle_length(build_rep_s12(coords(1.1, 0.8, 0.6, 0.0)), "d1")
        moved = oracle_length(build_rep_s12(coords(1.1, 0.8, 0.6, 1.7)), "d1")
        assert moved == pytest.approx(base, abs=1e-10)
        base2 = oracle_length(build_rep_s12(coords(1.1, 0.8, 0.0, -1.2)), "d2")
        moved2 = oracle_length(build_rep_s12(coords(1.1, 0.8, 0.9, -1.2)), "d2")
        assert moved2 == pytest.approx(base2, abs=1e-10)


class TestRepresentationS11:
    def test_commutator_parabolic(self):
        rep = build_rep_s11(0.8, 0.7)
        w = rep.puncture_words[0]
        assert float(w[0, 0] + w[1, 1]) == pytest.approx(-2.0, abs=1e-9)

    def test_pants_length_round_trip(self):
        rep = build_rep_s11(1.234, -0.8)
        assert oracle_length(rep, "a") == pytest.approx(1.234, rel=REL_TOL)

    def test_rejects_nonpositive_length(self):
        with pytest.raises(ValueError):
            build_rep_s11(0.0, 0.0)

    def test_dual_residual_bounded_in_pinching_sweep(self):
        residuals = [
            oracle_length(build_rep_s11(l, 0.0), "d") - 2.0 * math.log(1.0 / l)
            for l in (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)
        ]
        assert all(abs(r) < 3.0 for r in residuals)
        assert residuals[-1] == pytest.approx(2.0 * math.log(4.0), abs=1e-6)


class TestOracleLength:
    def test_unknown_curve(self):
        rep = build_rep_s11(1.0, 0.0)
        with pytest.raises(ValueError):
            oracle_length(rep, "q")

    def test_non_hyperbolic_word_rejected(self):
        fake = RepMatrices(
            surface="s11",
            generators={},
            words={"x": np.eye(2)},
            puncture_words=(),
        )
        with pytest.raises(ValueError):
            oracle_length(fake, "x")
