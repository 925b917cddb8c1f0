import numpy as np
import pytest

from hbkit.campaigns import (
    boundary_derivative_ratio,
    decomposition_residuals,
    gram_checks,
    random_points,
    recurrence_residuals,
    reproducing_residuals,
)
from tests.conftest import CATALOG


class TestSampling:
    def test_points_in_box(self):
        z = random_points(np.random.default_rng(0), 200, (-1, 2, 0.01, 5))
        assert z.real.min() >= -1 and z.real.max() <= 2
        assert z.imag.min() >= 0.01 and z.imag.max() <= 5

    def test_seeded(self):
        a = reproducing_residuals(CATALOG["mixed"](), 5, seed=3)
        b = reproducing_residuals(CATALOG["mixed"](), 5, seed=3)
        np.testing.assert_array_equal(a, b)


class TestCampaigns:
    @pytest.mark.parametrize("name", sorted(CATALOG))
    def test_reproducing(self, name):
        assert reproducing_residuals(CATALOG[name](), 10, seed=1).max() < 1e-12

    @pytest.mark.parametrize("name", sorted(CATALOG))
    def test_gram(self, name):
        g = gram_checks(CATALOG[name](), 10, seed=2)
        assert g.hermitian_error < 1e-12
        assert g.min_eigenvalue > -1e-12 * g.max_eigenvalue

    def test_decomposition(self, step):
        assert decomposition_residuals(step, 3, seed=4).max() < 1e-6

    @pytest.mark.parametrize("ell", [1, 2])
    def test_recurrence(self, mixed, ell):
        assert recurrence_residuals(mixed, 20, seed=5, ell=ell).max() < 1e-10

    @pytest.mark.parametrize("name", ["blaschke", "paley_wiener", "atom", "step_outer", "mixed"])
    def test_boundary_derivative(self, name):
        ratio = boundary_derivative_ratio(CATALOG[name](), np.linspace(-3, 3, 25), np.geomspace(1e-3, 10, 10))
        assert 0 < ratio <= 1 + 1e-8
