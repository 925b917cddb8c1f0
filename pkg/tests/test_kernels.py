import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hbkit import KernelCombination, SymbolFunction, gram_matrix, hb_inner_product, hb_norm, step_outer_symbol
from hbkit.kernels import (
    companion_g,
    derivative_eval,
    hardy_norm_sq,
    higher_kernel,
    kernel_eval,
    kernel_norm_sq,
    kernel_power_by_recurrence,
    representation_check,
    representation_terms,
    rho_norm_sq,
)
from tests.conftest import CATALOG, blaschke_symbol, mixed_symbol

TWO_PI_I = 2j * math.pi

node = st.builds(complex, st.floats(-3, 3), st.floats(0.05, 3))
coef = st.builds(complex, st.floats(-2, 2), st.floats(-2, 2))
symbol_name = st.sampled_from(sorted(CATALOG))


class TestKernelNorms:
    @pytest.mark.parametrize("k, w", [(0, 0.3 + 0.4j), (1, -1.0 + 2.0j)])
    def test_blaschke_against_line_integral(self, frozen, k, w):
        b = SymbolFunction.factored(zeros=[(1j,), (1.5 + 0.5j, 2)])
        assert kernel_norm_sq(b, w) == pytest.approx(frozen[f"blaschke_kernel_norm_sq_{k}"], rel=1e-13)

    @pytest.mark.parametrize("k, w", [(0, 0.2 + 0.5j), (1, 2.0 + 0.3j)])
    def test_step_against_split_integral(self, frozen, k, w):
        assert kernel_norm_sq(step_outer_symbol(0.5), w) == pytest.approx(frozen[f"step_split_norm_sq_{k}"], rel=1e-13)

    def test_zero_symbol(self):
        assert kernel_norm_sq(SymbolFunction.zero(), 2j) == pytest.approx(math.pi / 2)

    def test_boundary_node_uses_angular_derivative(self, blaschke):
        x = 0.5
        assert kernel_norm_sq(blaschke, x) == pytest.approx(2 * math.pi * blaschke.angular_derivative_modulus(x), rel=1e-12)

    def test_boundary_kernel_continuous_at_node(self, blaschke):
        x = 0.5
        near = kernel_eval(blaschke, x, x + 1e-7 + 0j)
        at = kernel_eval(blaschke, x, x + 0j)
        np.testing.assert_allclose(near, at, rtol=1e-6)

    def test_node_below_axis(self, blaschke):
        with pytest.raises(ValueError):
            kernel_eval(blaschke, -1j, 1.0)

    def test_boundary_node_on_spectrum(self):
        with pytest.raises(ValueError):
            kernel_eval(step_outer_symbol(0.5), 0.0, 1j)


class TestReproducing:
    @given(symbol_name, st.lists(node, min_size=1, max_size=4), st.lists(coef, min_size=4, max_size=4), node)
    def test_reproducing_property(self, name, nodes, coefs, w):
        b = CATALOG[name]()
        f = KernelCombination(b, tuple(nodes), tuple(coefs[: len(nodes)]))
        lhs = hb_inner_product(f, KernelCombination.single(b, w))
        rhs = TWO_PI_I * f(w)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs)) * 10

    @given(symbol_name, st.lists(node, min_size=2, max_size=8, unique=True))
    def test_gram_hermitian_psd(self, name, nodes):
        G = gram_matrix(CATALOG[name](), nodes, symmetrize=False)
        scale = np.abs(G).max()
        assert np.abs(G - G.conj().T).max() <= 1e-12 * scale
        assert np.linalg.eigvalsh(0.5 * (G + G.conj().T)).min() >= -1e-10 * scale

    def test_norm_matches_gram(self, mixed):
        f = KernelCombination(mixed, (1j, 0.5 + 0.2j), (1.0, -0.5j))
        assert hb_norm(f) ** 2 == pytest.approx(hb_inner_product(f, f).real, rel=1e-14)

    def test_different_symbols_rejected(self, mixed, blaschke):
        with pytest.raises(ValueError):
            hb_inner_product(KernelCombination.single(mixed, 1j), KernelCombination.single(blaschke, 1j))


class TestDerivatives:
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_against_differences(self, mixed, m):
        f = KernelCombination(mixed, (1j, -0.5 + 0.3j), (1.0, 2.0 - 1j))
        z, h = 0.2 + 0.6j, 1e-4
        lower = derivative_eval(f, np.array([z - h, z + h]), m - 1)
        np.testing.assert_allclose(derivative_eval(f, z, m), (lower[1] - lower[0]) / (2 * h), rtol=1e-6)

    def test_order_range(self, mixed):
        with pytest.raises(ValueError):
            derivative_eval(KernelCombination.single(mixed, 1j), 1j, 5)

    def test_higher_kernel_zero_symbol(self):
        z0, z = 0.5 + 1j, -1 + 2j
        np.testing.assert_allclose(higher_kernel(SymbolFunction.zero(), z0, 2, z), (z - z0.conjugate()) ** -3)

    @pytest.mark.parametrize("name", sorted(CATALOG))
    @pytest.mark.parametrize("ell", [1, 2])
    def test_recurrence(self, name, ell):
        b = CATALOG[name]()
        rng = np.random.default_rng(7)
        for _ in range(10):
            z0 = complex(rng.uniform(-2, 2), rng.uniform(0.1, 2))
            z = complex(rng.uniform(-2, 2), rng.uniform(0.1, 2))
            ref = kernel_eval(b, z0, z) ** (ell + 1)
            np.testing.assert_allclose(kernel_power_by_recurrence(b, z0, ell, z), ref, rtol=1e-10)


class TestDecomposition:
    def test_rho_norm_vanishes_for_inner(self, blaschke):
        assert rho_norm_sq(companion_g(KernelCombination.single(blaschke, 1 + 1j)), blaschke) == 0

    def test_companion_formula(self, step):
        w = 0.3 + 0.4j
        g = companion_g(KernelCombination.single(step, w, 2.0))
        t = 0.1
        np.testing.assert_allclose(g(t), 2.0 * np.conj(step.eval(w)) / (t - w.conjugate()))

    @pytest.mark.parametrize("make", [blaschke_symbol, lambda: step_outer_symbol(0.5), mixed_symbol])
    def test_norm_split(self, make):
        b = make()
        f = KernelCombination(b, (0.2 + 0.5j, -1 + 1j), (1.0, 0.5j))
        split = hardy_norm_sq(f) + rho_norm_sq(companion_g(f), b)
        assert split == pytest.approx(hb_norm(f) ** 2, rel=1e-6)


class TestRepresentation:
    @pytest.mark.parametrize("n", [1, 2])
    def test_blaschke_second_term_zero(self, blaschke, n):
        f = KernelCombination(blaschke, (0.5 + 0.5j, -1 + 1j), (1.0, -1j))
        lhs, hardy, second = representation_terms(f, 0.2 + 0.8j, n)
        assert second == 0
        assert abs(lhs - hardy) <= 1e-6 * abs(lhs)

    @pytest.mark.parametrize("n", [1, 2])
    def test_step_residual(self, step, n):
        f = KernelCombination(step, (0.5 + 0.5j,), (1.0,))
        assert representation_check(f, -0.3 + 0.6j, n) < 1e-5

    def test_order_range(self, step):
        with pytest.raises(ValueError):
            representation_terms(KernelCombination.single(step, 1j), 1j, 3)
