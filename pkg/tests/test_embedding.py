import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hbkit import CarlesonSquare, DiscreteMeasure, SymbolFunction, step_outer_symbol
from hbkit.embedding import (
    cls_warning,
    embedding_check_thm61,
    embedding_check_thm62,
    embedding_family,
    embedding_verdict,
    empirical_embedding_constant,
    kernel_approximation_error,
    kernel_poisson_test,
    poisson_integral,
    single_kernel_ratio,
)
from tests.conftest import CATALOG

upper = st.builds(complex, st.floats(-3, 3), st.floats(0.05, 3))
mass_point = st.tuples(st.floats(-3, 3), st.floats(0.01, 2), st.floats(0.1, 3))


class TestPoissonIntegral:
    def test_horizontal_segment(self, frozen):
        mu = DiscreteMeasure.from_lists(segments=[(-1, 0.3, 1, 0.3, 0.5)])
        assert poisson_integral(mu, 0.2 + 0.7j) == pytest.approx(frozen["poisson_segment_h"], rel=1e-13)

    def test_vertical_segment(self, frozen):
        mu = DiscreteMeasure.from_lists(segments=[(0.5, 0.1, 0.5, 1.1, 2.0)])
        assert poisson_integral(mu, -0.3 + 0.4j) == pytest.approx(frozen["poisson_segment_v"], rel=1e-13)
        assert poisson_integral(mu, 0.5 + 0.4j) == pytest.approx(frozen["poisson_segment_v_above"], rel=1e-13)

    def test_point_mass(self):
        mu = DiscreteMeasure.point(1 + 1j, 2.0)
        assert poisson_integral(mu, 1j) == pytest.approx(2.0 / 5.0)

    def test_rejects_axis(self):
        with pytest.raises(ValueError):
            poisson_integral(DiscreteMeasure.point(1j, 1.0), 1.0)


class TestSingleKernel:
    @given(st.lists(mass_point, min_size=1, max_size=4), upper)
    def test_zero_symbol_exact(self, pts, z):
        mu = DiscreteMeasure.from_lists(pts)
        assert single_kernel_ratio(SymbolFunction.zero(), mu, z) == pytest.approx(poisson_integral(mu, z) / math.pi, rel=1e-12)

    @given(st.sampled_from(sorted(CATALOG)), st.lists(mass_point, min_size=1, max_size=4), upper)
    def test_poisson_lower_bound(self, name, pts, z):
        b = CATALOG[name]()
        mu = DiscreteMeasure.from_lists(pts)
        bz = 0.0 if b.is_zero else abs(b.eval(z))
        lhs = (1 - bz) * poisson_integral(mu, z)
        assert lhs <= math.pi * (1 + bz) * single_kernel_ratio(b, mu, z) * (1 + 1e-12) + 1e-300


class TestPoissonTest:
    def test_sup_and_witness(self, step):
        mu = DiscreteMeasure.point(0.5j, 1.0)
        grid = [0.5j, 2 + 1j, -2 + 0.1j]
        res = kernel_poisson_test(step, mu, grid)
        assert res.value == max(res.values)
        assert res.witness == grid[int(np.argmax(res.values))]
        assert not res.necessary_and_sufficient

    def test_zero_symbol_is_characterisation(self):
        assert kernel_poisson_test(SymbolFunction.zero(), DiscreteMeasure.point(1j, 1.0), [1j]).necessary_and_sufficient

    def test_empty_grid(self, step):
        with pytest.raises(ValueError):
            kernel_poisson_test(step, DiscreteMeasure.point(1j, 1.0), [])


class TestEmpiricalConstant:
    def test_family_starts_with_support_kernels(self, step):
        mu = DiscreteMeasure.from_lists([(0.0, 0.5, 1.0), (2.0, 1.0, 1.0)])
        fam = embedding_family(step, mu, size=3)
        assert [f.nodes[0] for f in fam[:2]] == [0.5j, 2 + 1j]
        assert len(fam) == 5

    def test_dominates_single_kernels(self, step):
        mu = DiscreteMeasure.from_lists([(0.0, 0.5, 1.0), (2.0, 1.0, 1.0)])
        const = empirical_embedding_constant(step, mu, embedding_family(step, mu, size=4))
        for z in (0.5j, 2 + 1j):
            assert const.value ** 2 >= single_kernel_ratio(step, mu, z) * (1 - 1e-12)

    def test_empty_measure(self, step):
        assert empirical_embedding_constant(step, DiscreteMeasure(), []).value == 0.0


class TestVerdicts:
    def test_geometric(self):
        v = embedding_check_thm61(step_outer_symbol(0.5), 0.7, DiscreteMeasure.point(3 + 0.01j, 1.0), 1.0)
        assert v.geometric.passed
        assert "geometric: pass" in v.summary()

    def test_full_verdict(self, step):
        mu = DiscreteMeasure.point(1 + 0.5j, 1.0)
        v = embedding_verdict(step, mu, [1 + 1j, 2j], eps=0.7, K=10.0)
        assert v.geometric is not None and v.poisson is not None and v.empirical is not None
        assert v.witness_csv().splitlines()[0] == "re,im,poisson_value"

    def test_square_family(self, blaschke):
        sq = CarlesonSquare(0.0, 1.0, 1.0)
        res = embedding_check_thm62(blaschke, [sq], DiscreteMeasure.point(0.5 + 1.5j, 1.0), 2.0, levels=2)
        assert res.passed
        assert res.mass_constant == pytest.approx(1.0)

    def test_square_family_support(self, blaschke):
        with pytest.raises(ValueError):
            embedding_check_thm62(blaschke, [CarlesonSquare(0.0, 1.0)], DiscreteMeasure.point(5 + 1j, 1.0), 2.0)

    def test_square_family_zero_symbol(self):
        # w = c y, so a slice at height y of width h contributes h * h / (c y)^2
        from hbkit.weights import zero_symbol_weight

        c = zero_symbol_weight(1j, 2.0, 1)
        sq = CarlesonSquare(0.0, 1.0, 1.0)
        res = embedding_check_thm62(SymbolFunction.zero(), [sq], DiscreteMeasure.point(0.5 + 1.5j, 1.0), 2.0, levels=2)
        assert res.slice_constant == pytest.approx(1.0 / c**2, rel=1e-12)

    def test_square_family_touching_atom(self):
        b = SymbolFunction.factored(atoms=[(0.0, 1.0)])
        sq = CarlesonSquare(-0.5, 1.0)
        res = embedding_check_thm62(b, [sq], DiscreteMeasure.point(0.5j, 1.0), 2.0, levels=2)
        assert res.slice_constant == math.inf
        assert not res.passed

    def test_cls_warning(self):
        b = SymbolFunction.factored(zeros=[(-2 + 1j,), (2 + 1j,)], cls_flag=True)
        assert cls_warning(b, 0.2, (-4, 4, 0.01, 3), 120) is not None
        assert cls_warning(SymbolFunction.factored(zeros=[(1j,)]), 0.2, (-4, 4, 0.01, 3)) is None


class TestKernelApproximation:
    @pytest.mark.parametrize("y", [1.0, 0.3, 0.01])
    def test_paley_wiener_closed_form(self, y):
        # spectra: 1 on [0, 1] for the boundary kernel, exp(-y s) for the interior one
        b = SymbolFunction.factored(exp_mass=1.0)
        a = (1 - math.exp(-y)) / y
        c = (1 - math.exp(-2 * y)) / (2 * y)
        ref = math.sqrt(1 - a * a / c)
        assert kernel_approximation_error(b, 0.5, [0.5 + 1j * y]) == pytest.approx(ref, rel=1e-6)

    def test_more_nodes_help(self):
        b = SymbolFunction.factored(exp_mass=1.0)
        one = kernel_approximation_error(b, 0.5, [0.5 + 0.3j])
        three = kernel_approximation_error(b, 0.5, [0.5 + 0.3j, 1 + 0.3j, 0.3j])
        assert three < one

    def test_member_of_span(self, step):
        assert kernel_approximation_error(step, 1j, [1j, 2j]) < 1e-7

    def test_no_nodes(self, step):
        assert kernel_approximation_error(step, 1j, []) == 1.0
