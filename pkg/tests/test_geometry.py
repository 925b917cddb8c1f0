import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hbkit import CarlesonSquare, DiscreteMeasure, LevelSetOracle, SymbolFunction, pseudohyperbolic, step_outer_symbol
from hbkit.geometry import (
    DISTANCE_TOL,
    brute_force_carleson,
    carleson_constant,
    carleson_search,
    derivative_distance_constant,
    distances,
    level_set_components,
    modulus_ratio_bounds,
    restricted_carleson_check,
    vanishing_carleson_check,
)
from tests.oracles import independent

upper = st.builds(complex, st.floats(-5, 5), st.floats(0.01, 5))
mass_point = st.tuples(
    st.floats(-3, 3).map(lambda v: round(v, 3)),
    st.floats(0.01, 3).map(lambda v: round(v, 3)),
    st.floats(0.1, 5),
)


class TestPseudohyperbolic:
    @given(upper, upper)
    def test_symmetric_and_bounded(self, z, w):
        d = pseudohyperbolic(z, w)
        assert 0 <= d < 1
        assert d == pytest.approx(pseudohyperbolic(w, z), rel=1e-12, abs=1e-15)

    @given(upper, upper, st.floats(0.1, 10), st.floats(-5, 5))
    def test_affine_invariance(self, z, w, a, c):
        assert pseudohyperbolic(a * z + c, a * w + c) == pytest.approx(pseudohyperbolic(z, w), rel=1e-9, abs=1e-12)

    def test_pair(self):
        assert pseudohyperbolic(1j, 4j) == pytest.approx(0.6)

    def test_rejects_axis(self):
        with pytest.raises(ValueError):
            pseudohyperbolic(1.0, 1j)


class TestMeasures:
    def test_square(self):
        sq = CarlesonSquare.on_interval(1.0, 3.0)
        assert (sq.x0, sq.h, sq.x1, sq.y1) == (1.0, 2.0, 3.0, 2.0)
        assert sq.contains(2 + 1j) and not sq.contains(2 + 3j)

    @pytest.mark.parametrize("h", [0.0, -1.0, math.inf])
    def test_square_side(self, h):
        with pytest.raises(ValueError):
            CarlesonSquare(0.0, h)

    def test_rejects_lower_half_plane(self):
        with pytest.raises(ValueError):
            DiscreteMeasure.point(-1j, 1.0)

    def test_rejects_oblique_segment(self):
        with pytest.raises(ValueError):
            DiscreteMeasure.from_lists(segments=[(0, 0, 1, 1, 1.0)])

    def test_mass_in(self):
        mu = DiscreteMeasure.from_lists(masses=[(0.5, 0.5, 2.0)], segments=[(0, 0, 4, 0, 1.0)])
        assert mu.mass_in(0.0, 1.0) == pytest.approx(3.0)
        assert mu.total_mass == pytest.approx(6.0)

    def test_integrate_segment(self):
        mu = DiscreteMeasure.lebesgue(0.0, 2.0, pieces=3)
        assert mu.integrate(lambda z: np.real(z) ** 2) == pytest.approx(8 / 3, rel=1e-12)


class TestCarlesonConstant:
    def test_five_points(self, frozen):
        pts = [(0.0, 0.5, 1.0), (1.0, 2.0, 0.5), (-2.0, 0.1, 0.2), (0.3, 0.05, 0.7), (2.5, 1.0, 1.5)]
        mu = DiscreteMeasure.from_lists(pts)
        assert carleson_constant(mu) == pytest.approx(frozen["carleson_five"], rel=1e-12)
        assert brute_force_carleson(mu) == pytest.approx(frozen["carleson_five"], rel=1e-12)

    def test_far_mass(self, frozen):
        mu = DiscreteMeasure.point(3 + 0.01j, 1.0)
        assert carleson_constant(mu) == pytest.approx(frozen["carleson_far_mass"], rel=1e-12)

    def test_geometric(self, frozen):
        mu = DiscreteMeasure.from_lists([(0.0, 4.0**k, 1.0) for k in range(8)])
        assert carleson_constant(mu) == pytest.approx(frozen["carleson_geometric"], rel=1e-12)

    def test_lebesgue(self):
        assert carleson_constant(DiscreteMeasure.lebesgue(0, 1, 4)) == pytest.approx(1.0)

    def test_boundary_atom(self):
        assert carleson_constant(DiscreteMeasure.point(1.0, 1.0)) == math.inf

    def test_empty(self):
        assert carleson_search(DiscreteMeasure())[0] == 0.0

    @given(st.lists(mass_point, min_size=1, max_size=6))
    def test_search_equals_subset_enumeration(self, pts):
        mu = DiscreteMeasure.from_lists(pts)
        ref = float(independent.carleson_by_subsets(pts))
        assert carleson_constant(mu) == pytest.approx(ref, rel=1e-9)
        assert brute_force_carleson(mu) == pytest.approx(ref, rel=1e-9)

    def test_brute_force_rejects_segments(self):
        with pytest.raises(ValueError):
            brute_force_carleson(DiscreteMeasure.lebesgue(0, 1))


class TestLevelSets:
    def test_membership(self, blaschke):
        oracle = LevelSetOracle(blaschke, 0.2)
        assert oracle.in_level_set(1j + 0.01)
        assert not oracle.in_level_set(-3 + 3j)
        assert oracle.cache_size >= 2

    def test_extended_set_contains_spectrum(self):
        oracle = LevelSetOracle(step_outer_symbol(0.5), 0.1)
        assert oracle.in_extended_set(0.0)
        assert not oracle.in_extended_set(2.0)

    @pytest.mark.parametrize("eps", [0.0, 1.0])
    def test_eps_range(self, blaschke, eps):
        with pytest.raises(ValueError):
            LevelSetOracle(blaschke, eps)

    @pytest.mark.parametrize("eps", [0.9, 0.6])
    def test_step_distance(self, frozen, eps):
        d = distances(LevelSetOracle(step_outer_symbol(0.5), eps), 3.0)
        assert d.d_eps == pytest.approx(frozen[f"step_level_distance_eps{eps}_x3"], abs=DISTANCE_TOL)
        assert d.d0 == 2.0
        assert d.d_tilde == min(d.d0, d.d_eps)

    def test_blaschke_distance(self, frozen):
        b = SymbolFunction.factored(zeros=[(1j,)])
        d = distances(LevelSetOracle(b, 0.5), 1.0)
        assert d.d_eps == pytest.approx(frozen["blaschke_level_distance_eps0.5_x1"], abs=DISTANCE_TOL)
        assert d.d0 == math.inf

    def test_distance_zero_on_spectrum(self):
        assert distances(LevelSetOracle(step_outer_symbol(0.5), 0.9), 0.0).d_eps == 0.0

    def test_components(self):
        b = SymbolFunction.factored(zeros=[(-2 + 1j,), (2 + 1j,)])
        assert level_set_components(LevelSetOracle(b, 0.2), (-4, 4, 0.01, 3), 120) == 2


class TestRestrictedCarleson:
    def test_far_mass_passes_restricted_only(self):
        mu = DiscreteMeasure.point(3 + 0.01j, 1.0)
        res = restricted_carleson_check(mu, LevelSetOracle(step_outer_symbol(0.5), 0.7), 1.0)
        assert res.passed
        assert res.plain_value == pytest.approx(100.0)

    def test_mass_near_spectrum_fails(self):
        mu = DiscreteMeasure.point(0.0 + 0.01j, 1.0)
        res = restricted_carleson_check(mu, LevelSetOracle(step_outer_symbol(0.5), 0.7), 1.0)
        assert not res.passed

    def test_vanishing(self):
        oracle = LevelSetOracle(step_outer_symbol(0.5), 0.7)
        assert not vanishing_carleson_check(DiscreteMeasure.point(0.5, 1.0), oracle).vanishing
        assert vanishing_carleson_check(DiscreteMeasure.point(0.5 + 1j, 1.0), oracle).vanishing


class TestLemmaConstants:
    def test_derivative_distance_finite(self, blaschke):
        c = derivative_distance_constant(LevelSetOracle(blaschke, 0.5), np.linspace(-3, 3, 13))
        assert 0 < c < math.inf

    def test_modulus_ratio_bounds(self, blaschke):
        lo, hi = modulus_ratio_bounds(blaschke, [(0.5j, 0.6j), (3 + 1j, 3.1 + 1j)])
        assert 0 < lo <= hi
