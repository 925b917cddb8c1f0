import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hbkit import QuadratureError, QuadratureSpec
from hbkit.quadrature import (
    NonIntegrableError,
    _breakpoints,
    adaptive_integrate,
    integrate_line,
    integrate_lines,
    integrate_segment,
    peak_hints,
)


class TestLineIntegrals:
    def test_cauchy_density(self):
        assert integrate_line(lambda t: 1.0 / (1.0 + t * t)) == pytest.approx(math.pi, rel=1e-12)

    def test_half_line(self):
        assert integrate_line(lambda t: np.exp(-t), lower=0.0) == pytest.approx(1.0, rel=1e-12)

    def test_endpoint_singularity(self):
        val = integrate_line(lambda t: 1.0 / np.sqrt(t), [0.0], lower=0.0, upper=1.0)
        assert val == pytest.approx(2.0, rel=1e-7)

    def test_complex_integrand(self):
        # the Hardy kernel pairing of 1/(t + i) with itself
        val = integrate_line(lambda t: 1.0 / (t + 1j) / (t - 1j), [0.0])
        np.testing.assert_allclose(val, math.pi, rtol=1e-12)

    def test_narrow_peak_needs_hints(self):
        y = 1e-6
        val = integrate_line(lambda t: y / (t * t + y * y), peak_hints([3.0 + 1j * y]))
        assert val == pytest.approx(math.pi, rel=1e-9)

    @given(st.floats(0.01, 100.0))
    def test_gaussian(self, a):
        val = integrate_line(lambda t: np.exp(-a * t * t), peak_hints([1j / math.sqrt(a)]))
        assert val == pytest.approx(math.sqrt(math.pi / a), rel=1e-9)

    def test_segment_length(self):
        assert integrate_segment(lambda z: np.ones(np.shape(z)), 0, 1 + 1j) == pytest.approx(math.sqrt(2))

    def test_batched_owners(self):
        res = integrate_lines(
            lambda t, o: np.where(o[:, None] == 0, np.exp(-t * t), 1.0 / (1 + t * t)),
            [([0.0], -math.inf, math.inf, 0), ([0.0], -math.inf, math.inf, 1)],
            2,
        )
        np.testing.assert_allclose(res.values, [math.sqrt(math.pi), math.pi], rtol=1e-12)

    def test_adaptive_integrate(self):
        val, err, panels = adaptive_integrate(np.sin, np.array([0.0]), np.array([math.pi]))
        assert val == pytest.approx(2.0, rel=1e-12)
        assert err >= 0 and panels >= 1


class TestFailures:
    def test_non_integrable(self):
        with pytest.raises(QuadratureError):
            integrate_line(lambda t: 1.0 / np.abs(t), [0.0], lower=-1.0, upper=1.0)

    def test_nan_raises(self):
        with pytest.raises(QuadratureError):
            integrate_line(lambda t: np.full(np.shape(t), np.nan), lower=0.0, upper=1.0)

    def test_non_integrable_is_quadrature_error(self):
        assert issubclass(NonIntegrableError, QuadratureError)

    def test_reversed_limits(self):
        with pytest.raises(ValueError):
            integrate_line(np.sin, lower=1.0, upper=0.0)


class TestSpec:
    @pytest.mark.parametrize("kw", [dict(rel_tol=0.5), dict(rel_tol=1e-16), dict(abs_tol=-1.0),
                                    dict(max_panels=0), dict(order=1)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            QuadratureSpec(**kw)

    def test_refined(self):
        s = QuadratureSpec(rel_tol=1e-6).refined()
        assert s.rel_tol == pytest.approx(5e-7)


class TestBreakpoints:
    def test_near_duplicates_merged_first_wins(self):
        out = _breakpoints([1.0, 0.9999999999999999, 0.5], -math.inf, math.inf)
        np.testing.assert_array_equal(out, [0.5, 1.0])

    def test_clipped_to_open_range(self):
        out = _breakpoints([0.0, 1.0, 2.0, math.inf], 0.0, 2.0)
        np.testing.assert_array_equal(out, [1.0])
