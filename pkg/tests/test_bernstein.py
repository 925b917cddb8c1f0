import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hbkit import DiscreteMeasure, KernelCombination, SymbolFunction, step_outer_symbol
from hbkit.bernstein import (
    bernstein_ratio,
    corollary53_check,
    corollary54_probe,
    kernel_family,
    paley_wiener_ratio,
    random_family,
)
from hbkit.kernels import derivative_eval, hb_norm
from hbkit.weights import zero_symbol_weight

PW = SymbolFunction.factored(exp_mass=1.0, name="paley_wiener")


class TestFamilies:
    def test_seeded(self, step):
        a = random_family(step, 4, seed=3)
        b = random_family(step, 4, seed=3)
        assert [f.nodes for f in a] == [f.nodes for f in b]
        assert [f.coefficients for f in a] != [f.coefficients for f in random_family(step, 4, seed=4)]

    def test_box(self, step):
        for f in random_family(step, 8, seed=1, box=(-1, 1, 0.5, 2)):
            for w in f.nodes:
                assert -1 <= w.real <= 1 and 0.5 <= w.imag <= 2

    def test_bad_box(self, step):
        with pytest.raises(ValueError):
            random_family(step, 2, 0, box=(1, -1, 0.1, 1))

    def test_kernel_family(self, step):
        fam = kernel_family(step, [1j, 2j])
        assert [f.nodes for f in fam] == [(1j,), (2j,)]


class TestPaleyWiener:
    @settings(max_examples=6)
    @given(st.integers(0, 10_000))
    def test_classical_bound(self, seed):
        for f in random_family(PW, 4, seed):
            assert paley_wiener_ratio(f) <= 1 + 1e-6

    @pytest.mark.parametrize("y", [0.05, 1.0, 5.0])
    def test_single_kernel_spectral_form(self, y):
        # the kernel at x + iy has Fourier transform exp(-y s) on [0, 1]
        num = mp.quad(lambda s: s * s * mp.exp(-2 * y * s), [0, 1])
        den = mp.quad(lambda s: mp.exp(-2 * y * s), [0, 1])
        ref = float(mp.sqrt(num / den))
        assert paley_wiener_ratio(KernelCombination.single(PW, 0.7 + 1j * y)) == pytest.approx(ref, rel=1e-8)


class TestBernsteinRatio:
    def test_unweighted_direct(self, step):
        mu = DiscreteMeasure.from_lists([(0.3, 0.4, 2.0), (-1.0, 1.0, 0.5)])
        fam = random_family(step, 3, 9)
        rep = bernstein_ratio(step, 2.0, 1, mu, fam, weighted=False)
        for f, r in zip(fam, rep.ratios):
            d = derivative_eval(f, np.array([0.3 + 0.4j, -1 + 1j]), 1)
            ref = math.sqrt(2.0 * abs(d[0]) ** 2 + 0.5 * abs(d[1]) ** 2) / hb_norm(f)
            assert r == pytest.approx(ref, rel=1e-12)

    def test_zero_symbol_weighted_direct(self):
        zero = SymbolFunction.zero()
        mu = DiscreteMeasure.point(0.5 + 0.25j, 1.0)
        fam = random_family(zero, 3, 2)
        rep = bernstein_ratio(zero, 2.0, 2, mu, fam)
        w = zero_symbol_weight(0.5 + 0.25j, 2.0, 2)
        for f, r in zip(fam, rep.ratios):
            ref = abs(derivative_eval(f, 0.5 + 0.25j, 2)) * w / hb_norm(f)
            assert r == pytest.approx(ref, rel=1e-12)

    def test_report(self, step):
        rep = bernstein_ratio(step, 2.0, 1, DiscreteMeasure.point(1j, 1.0), random_family(step, 5, 0))
        assert rep.max_ratio == rep.ratios[rep.argmax]
        assert rep.to_csv().splitlines()[0] == "index,ratio,numerator,hb_norm"
        assert len(rep.to_csv().splitlines()) == 6

    def test_order_range(self, step):
        with pytest.raises(ValueError):
            bernstein_ratio(step, 2.0, 3, DiscreteMeasure.point(1j, 1.0), random_family(step, 1, 0))

    def test_empty_family(self, step):
        with pytest.raises(ValueError):
            bernstein_ratio(step, 2.0, 1, DiscreteMeasure.point(1j, 1.0), [])

    def test_foreign_family(self, step, blaschke):
        with pytest.raises(ValueError):
            bernstein_ratio(step, 2.0, 1, DiscreteMeasure.point(1j, 1.0), random_family(blaschke, 1, 0))


class TestLevelSetCorollaries:
    def test_distance_weighted_ratio_finite(self, step):
        res = corollary53_check(step, 0.7, 1, random_family(step, 2, 5), panels=12, order=6)
        assert 0 < res.max_ratio < math.inf

    def test_zero_symbol_trivial(self):
        zero = SymbolFunction.zero()
        assert corollary53_check(zero, 0.5, 1, random_family(zero, 2, 0)).max_ratio == 0.0

    def test_inverse_square_integral_finite_off_spectrum(self, blaschke):
        res = corollary54_probe(blaschke, (-1.0, 1.0), 2.0)
        assert res.integral_finite and res.spectrum_clear and res.b_continuous

    def test_inverse_square_integral_infinite_on_spectrum(self):
        res = corollary54_probe(step_outer_symbol(0.5), (0.0, 2.0), 2.0)
        assert not res.integral_finite and not res.spectrum_clear and not res.b_continuous

    def test_zero_symbol_infinite(self):
        assert corollary54_probe(SymbolFunction.zero(), (0.0, 1.0), 2.0).integral == math.inf

    def test_unbounded_interval(self, blaschke):
        with pytest.raises(ValueError):
            corollary54_probe(blaschke, (0.0, math.inf), 2.0)
