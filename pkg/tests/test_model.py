import math

import numpy as np
import pytest
from scipy.integrate import quad

from sdlab import model
from sdlab.model import ModelParams, SingularPointError


@pytest.fixture
def p1():
    return ModelParams(1.0)


class TestModelParams:
    def test_characteristic_root(self):
        for g in (0.3, 0.5, 1.0, 2.0, 5.0):
            c = ModelParams(g).c
            assert c < 0
            assert abs(c * c - 2 * g * c - 2.0) < 1e-12

    def test_rejects_bad_gamma(self):
        for bad in (0.0, -1.0, math.nan, math.inf):
            with pytest.raises(ValueError):
                ModelParams(bad)


class TestPsi:
    def test_value_at_unit_radius(self, p1):
        # sqrt(1/(2 pi)) * exp(-1)
        assert model.psi_eval(p1, [1.0, 0.0, 0.0]) == pytest.approx(
            0.14676266317373, rel=1e-12)

    def test_radial_symmetry(self, p1):
        a = model.psi_eval(p1, [0.5, 0.0, 0.0])
        b = model.psi_eval(p1, [0.0, 0.5, 0.0])
        assert a == pytest.approx(b, rel=1e-15)

    def test_decay(self, p1):
        rs = np.array([1.0, 2.0, 5.0, 20.0, 100.0])
        vals = model.psi_radial(p1, rs)
        assert np.all(np.diff(vals) < 0)
        assert vals[-1] < 1e-40

    def test_singular_origin(self, p1):
        with pytest.raises(SingularPointError):
            model.psi_eval(p1, [0.0, 0.0, 0.0])

    def test_normalization(self):
        # integral of psi^2 over R^3 reduces to 2g exp(-2g r) dr
        for g in (0.5, 1.0, 2.0, 5.0):
            val, _ = quad(lambda r: 2 * g * math.exp(-2 * g * r), 0, np.inf)
            assert abs(val - 1.0) < 1e-10


class TestDrift:
    def test_closed_form(self, p1):
        np.testing.assert_allclose(model.drift_eval(p1, [1.0, 0.0, 0.0]),
                                   [-2.0, 0.0, 0.0], atol=1e-14)

    def test_odd_symmetry(self):
        p = ModelParams(1.7)
        x = np.array([0.3, -0.4, 1.1])
        np.testing.assert_allclose(model.drift_eval(p, x),
                                   -model.drift_eval(p, -x), rtol=1e-14)

    def test_blow_up_magnitude(self, p1):
        b = model.drift_eval(p1, [0.01, 0.0, 0.0])
        assert np.linalg.norm(b) == pytest.approx(101.0, rel=1e-12)

    def test_matches_log_psi_gradient(self, p1):
        rng = np.random.default_rng(3)
        h = 1e-6
        for _ in range(100):
            x = rng.uniform(-10, 10, 3)
            r = np.linalg.norm(x)
            if not 0.1 < r < 10:
                continue
            grad_fd = np.empty(3)
            for i in range(3):
                e = np.zeros(3)
                e[i] = h
                grad_fd[i] = (math.log(model.psi_eval(p1, x + e))
                              - math.log(model.psi_eval(p1, x - e))) / (2 * h)
            np.testing.assert_allclose(model.drift_eval(p1, x), grad_fd,
                                       atol=5e-6)

    def test_singular_origin(self, p1):
        with pytest.raises(SingularPointError):
            model.drift_eval(p1, [0.0, 0.0, 0.0])


class TestInvariantDensity:
    def test_values(self):
        assert model.m_radial_density(ModelParams(1.0), 0.0) == pytest.approx(2.0)
        assert model.m_radial_density(ModelParams(2.0), 0.25) == pytest.approx(
            4.0 * math.exp(-1.0), rel=1e-12)

    def test_total_mass(self, p1):
        val, _ = quad(lambda r: model.m_radial_density(p1, r), 0, np.inf)
        assert abs(val - 1.0) < 1e-10


class TestEquilibriumPotential:
    def test_inside_and_boundary(self, p1):
        assert model.equilibrium_potential(p1, 0.5, 0.3) == 1.0
        assert model.equilibrium_potential(p1, 0.5, 0.5) == 1.0

    def test_outside_value(self, p1):
        # exp(c) with c = 1 - sqrt(3)
        assert model.equilibrium_potential(p1, 0.5, 1.5) == pytest.approx(
            math.exp(1.0 - math.sqrt(3.0)), rel=1e-12)

    def test_continuity(self, p1):
        lo = model.equilibrium_potential(p1, 0.5, 0.5 - 1e-12)
        hi = model.equilibrium_potential(p1, 0.5, 0.5 + 1e-12)
        assert abs(lo - hi) < 1e-10

    def test_ode_outside(self, p1):
        # f'' - 2 gamma f' - 2 f = 0 beyond eps
        h = 1e-5
        for r in (0.8, 1.5, 3.0):
            f = lambda s: model.equilibrium_potential(p1, 0.5, s)
            d1 = (f(r + h) - f(r - h)) / (2 * h)
            d2 = (f(r + h) - 2 * f(r) + f(r - h)) / (h * h)
            assert abs(d2 - 2 * p1.gamma * d1 - 2 * f(r)) < 1e-5

    def test_rejects_bad_eps(self, p1):
        with pytest.raises(ValueError):
            model.equilibrium_potential(p1, 0.0, 1.0)


class TestEnergyAndCapacity:
    def test_closed_form_value(self, p1):
        g, c = p1.gamma, p1.c
        expected = 1.0 + (c + g * c * c) / (g - c) * math.exp(-1.0)
        assert model.energy_e1(p1, 0.5) == pytest.approx(expected, rel=1e-14)

    def test_large_eps_limit(self, p1):
        assert model.energy_e1(p1, 50.0) == pytest.approx(1.0, abs=1e-12)

    def test_quadrature_matches_closed_form(self):
        for g in (0.5, 1.0, 2.0):
            p = ModelParams(g)
            for eps in (0.1, 0.5, 1.0, 2.0):
                closed = model.energy_e1(p, eps)
                quadr = model.energy_e1(p, eps, mode="quadrature")
                assert abs(closed - quadr) < 1e-8

    def test_capacity_value(self, p1):
        assert model.capacity_origin(p1) == pytest.approx(0.8867513459481287,
                                                          abs=1e-6)
        assert model.capacity_origin(ModelParams(3.3)) > 0

    def test_capacity_is_small_eps_limit(self, p1):
        assert abs(model.capacity_origin(p1)
                   - model.energy_e1(p1, 1e-6)) < 1e-5

    def test_unknown_mode(self, p1):
        with pytest.raises(ValueError):
            model.energy_e1(p1, 0.5, mode="magic")


class TestEigenResidual:
    def test_small_residual(self):
        assert abs(model.eigen_residual(ModelParams(1.0), 1.0, 1e-4)) < 1e-6
        assert abs(model.eigen_residual(ModelParams(2.0), 0.5, 1e-4)) < 1e-5

    def test_second_order(self):
        p = ModelParams(2.0)
        r = 0.7
        a = model.eigen_residual(p, r, 2e-3)
        b = model.eigen_residual(p, r, 1e-3)
        assert a / b == pytest.approx(4.0, rel=0.05)

    def test_step_bounds(self):
        with pytest.raises(ValueError):
            model.eigen_residual(ModelParams(1.0), 0.1, 0.06)
