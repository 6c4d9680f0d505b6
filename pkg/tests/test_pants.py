"""Tests for pair-of-pants perpendicular trigonometry."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from teichmin.pants import (
    PantsLengths,
    collar_width,
    perp_between,
    perp_between_embedded,
    perp_estimate,
    perp_self,
)

REL_TOL = 1e-12
EMBED_REL_TOL = 1e-9
# perpendicular between two boundaries of the (1, 1, 1) pants
PERP_111 = 2.868695141619822
# self-perpendicular of the (1, 1, 1) pants
SELF_PERP_111 = 4.402955294863257
# d_12 - 2 log(1/eps) at eps = 1e-4; limit is log 16
PINCH_RESIDUAL_1E4 = 2.772588723281448

boundary = st.floats(min_value=0.1, max_value=3.0)


class TestPerpBetween:
    def test_equilateral(self):
        p = PantsLengths(1.0, 1.0, 1.0)
        assert perp_between(p, 1, 2) == pytest.approx(PERP_111, rel=REL_TOL)

    def test_index_symmetry(self):
        p = PantsLengths(0.7, 1.9, 2.4)
        assert perp_between(p, 1, 2) == pytest.approx(perp_between(p, 2, 1), rel=REL_TOL)

    def test_cusp_opposite_is_fine(self):
        p = PantsLengths(2.0, 2.0, 0.0)
        assert perp_between(p, 1, 2) == pytest.approx(1.5438736658106096, rel=REL_TOL)

    def test_cusp_foot_rejected(self):
        p = PantsLengths(2.0, 2.0, 0.0)
        with pytest.raises(ValueError):
            perp_between(p, 1, 3)
        with pytest.raises(ValueError):
            perp_between(p, 3, 2)

    def test_pinching_residual_approaches_log16(self):
        eps = 1e-4
        p = PantsLengths(eps, eps, eps)
        residual = perp_between(p, 1, 2) - 2.0 * math.log(1.0 / eps)
        assert residual == pytest.approx(PINCH_RESIDUAL_1E4, rel=1e-10)
        assert abs(residual - math.log(16.0)) < 1e-3

    def test_log_domain_extreme_pinch(self):
        p = PantsLengths(1e-12, 1e-12, 1e-12)
        d = perp_between(p, 1, 2)
        assert math.isfinite(d)
        assert d == pytest.approx(perp_estimate(1e-12, 1e-12) + math.log(16.0), rel=1e-9)

    @given(boundary, boundary, boundary, st.floats(min_value=1.05, max_value=2.0))
    @settings(max_examples=60, deadline=None)
    def test_decreasing_in_foot_length(self, l1, l2, l3, factor):
        base = perp_between(PantsLengths(l1, l2, l3), 1, 2)
        longer = perp_between(PantsLengths(l1 * factor, l2, l3), 1, 2)
        assert longer < base

    @given(boundary, boundary, boundary, st.floats(min_value=1.05, max_value=2.0))
    @settings(max_examples=60, deadline=None)
    def test_increasing_in_opposite_length(self, l1, l2, l3, factor):
        base = perp_between(PantsLengths(l1, l2, l3), 1, 2)
        longer = perp_between(PantsLengths(l1, l2, l3 * factor), 1, 2)
        assert longer > base


class TestPerpSelf:
    def test_equilateral(self):
        p = PantsLengths(1.0, 1.0, 1.0)
        assert perp_self(p, 1, 2) == pytest.approx(SELF_PERP_111, rel=REL_TOL)

    def test_well_defined_in_j(self):
        p = PantsLengths(1.0, 2.0, 2.0)
        assert perp_self(p, 1, 2) == pytest.approx(perp_self(p, 1, 3), rel=1e-10)

    def test_cusp_rejected(self):
        with pytest.raises(ValueError):
            perp_self(PantsLengths(0.0, 1.0, 1.0), 1, 2)

    def test_pinching_residual_bounded(self):
        # d_11 / 2 - log(1/eps) stays bounded as all boundaries pinch
        residuals = [
            perp_self(PantsLengths(eps, eps, eps), 1, 2) / 2.0 - math.log(1.0 / eps)
            for eps in (1e-2, 1e-4, 1e-6)
        ]
        assert all(abs(r) < 3.0 for r in residuals)
        assert residuals[-1] == pytest.approx(3.0 * math.log(2.0), abs=1e-6)


class TestPerpEstimate:
    def test_unit_lengths_vanish(self):
        assert perp_estimate(1.0, 1.0) == 0.0

    def test_symmetric_millis(self):
        assert perp_estimate(1e-3, 1e-3) == pytest.approx(13.815510557964274, rel=REL_TOL)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            perp_estimate(0.0, 1.0)

    @given(
        st.floats(min_value=1e-6, max_value=1e-1),
        st.floats(min_value=1e-6, max_value=1e-1),
    )
    @settings(max_examples=60, deadline=None)
    def test_residual_bounded_in_pinching_regime(self, la, lb):
        # third boundary held at unit length; residual tends to log 16
        d = perp_between(PantsLengths(la, lb, 1.0), 1, 2)
        assert abs(d - perp_estimate(la, lb)) < 3.0


class TestCollarWidth:
    def test_threshold(self):
        assert collar_width(1.0) == 0.0
        assert collar_width(2.5) == 0.0

    def test_reference_values(self):
        assert collar_width(math.exp(-1.0)) == pytest.approx(2.0, rel=REL_TOL)
        assert collar_width(1e-4) == pytest.approx(18.420680743952367, rel=REL_TOL)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            collar_width(0.0)

    @given(st.floats(min_value=1e-8, max_value=0.99))
    def test_decreasing_in_length(self, l):
        assert collar_width(l) >= collar_width(min(l * 1.5, 1.0))


class TestHexagonEmbedding:
    def test_equilateral_matches_formula(self):
        p = PantsLengths(1.0, 1.0, 1.0)
        assert perp_between_embedded(p, 1, 2) == pytest.approx(PERP_111, rel=EMBED_REL_TOL)

    def test_rejects_cusps(self):
        with pytest.raises(ValueError):
            perp_between_embedded(PantsLengths(1.0, 1.0, 0.0), 1, 2)

    def test_rejects_bad_indices(self):
        with pytest.raises(ValueError):
            perp_between_embedded(PantsLengths(1.0, 1.0, 1.0), 2, 2)

    def test_agreement_random_triples(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            p = PantsLengths(*rng.uniform(0.1, 3.0, 3))
            for i, j in ((1, 2), (2, 3), (3, 1)):
                formula = perp_between(p, i, j)
                embedded = perp_between_embedded(p, i, j)
                assert abs(formula - embedded) / formula < EMBED_REL_TOL

    @given(boundary, boundary, boundary)
    @settings(max_examples=25, deadline=None)
    def test_agreement_property(self, l1, l2, l3):
        p = PantsLengths(l1, l2, l3)
        assert perp_between_embedded(p, 2, 3) == pytest.approx(
            perp_between(p, 2, 3), rel=EMBED_REL_TOL
        )
