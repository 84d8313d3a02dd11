import json
import math

import numpy as np
import pytest
from scipy import integrate

from sdlab import fukushima
from sdlab.model import ModelParams, SingularPointError, drift_eval
from sdlab.radial import SimConfig, sample_absorbed_path
from sdlab.skewprod import PathR3, assemble_x0, time_change


@pytest.fixture
def p1():
    return ModelParams(1.0)


def rng(seed=0):
    return np.random.default_rng(seed)


def constant_path(point, n, dt=0.01):
    pts = np.tile(np.asarray(point, dtype=float), (n + 1, 1))
    radii = np.linalg.norm(pts, axis=1)
    return PathR3(dt, pts, radii, np.empty(0, dtype=int))


class TestZeroEnergyIntegral:
    def test_constant_path(self, p1):
        path = constant_path([1.0, 0.0, 0.0], 100)
        N = fukushima.zero_energy_integral(p1, path, 1.0)
        assert N.shape == (101, 3)
        np.testing.assert_allclose(N[-1], [-2.0, 0.0, 0.0], rtol=1e-12)
        np.testing.assert_allclose(N[50], [-1.0, 0.0, 0.0], rtol=1e-12)
        np.testing.assert_array_equal(N[0], 0.0)

    def test_antisymmetry(self, p1):
        path = sample_absorbed_path(p1, 2.0, SimConfig(1e-3, 0.5), rng(1))
        tc = time_change(path)
        x = assemble_x0(path, tc, rng(1))
        upto = min(0.3, (len(x.points) - 1) * x.dt)
        N = fukushima.zero_energy_integral(p1, x, upto)
        mirror = PathR3(x.dt, -x.points, x.radii, x.zero_hits)
        Nm = fukushima.zero_energy_integral(p1, mirror, upto)
        np.testing.assert_allclose(Nm, -N, rtol=1e-12)

    def test_rejects_origin(self, p1):
        pts = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        path = PathR3(0.1, pts, np.linalg.norm(pts, axis=1),
                      np.array([1]))
        with pytest.raises(SingularPointError):
            fukushima.zero_energy_integral(p1, path, 0.2)

    def test_bad_horizon(self, p1):
        path = constant_path([1.0, 0.0, 0.0], 10)
        with pytest.raises(ValueError):
            fukushima.zero_energy_integral(p1, path, 0.0)
        with pytest.raises(ValueError):
            fukushima.zero_energy_integral(p1, path, 5.0)

    def test_martingale_identity(self, p1):
        # X_t - x - N_t has mean zero; check coordinate-wise at t = 0.05
        # over an ensemble of skew-product paths from (1,0,0)
        T, dt, n = 0.05, 1e-3, 400
        x0 = np.array([1.0, 0.0, 0.0])
        disp = np.empty((n, 3))
        g = rng(2)
        for i in range(n):
            path = sample_absorbed_path(p1, 1.0, SimConfig(dt, 1.0), g)
            x = assemble_x0(path, time_change(path), g, start_dir=x0)
            N = fukushima.zero_energy_integral(p1, x, T)
            k = int(round(T / dt))
            disp[i] = x.points[k] - x0 - N[k]
        mean = disp.mean(axis=0)
        se = disp.std(axis=0, ddof=1) / math.sqrt(n)
        assert np.all(np.abs(mean) <= 3.0 * se + 2e-3)


class TestSignedMeasure:
    def test_closed_value(self, p1):
        # -(g+1)/1 * 1 * psi(1)^2 = -exp(-2)/pi at gamma = 1
        val = fukushima.signed_measure_density(p1, [1.0, 0.0, 0.0], 0)
        assert val == pytest.approx(-math.exp(-2.0) / math.pi, rel=1e-12)
        assert val == pytest.approx(-0.0430785586036973, abs=1e-15)

    def test_orthogonal_coordinate_vanishes(self, p1):
        assert fukushima.signed_measure_density(p1, [1.0, 0.0, 0.0], 1) == 0.0
        assert fukushima.signed_measure_density(p1, [1.0, 0.0, 0.0], 2) == 0.0

    def test_odd_symmetry(self, p1):
        x = np.array([0.3, -0.4, 1.1])
        for i in range(3):
            a = fukushima.signed_measure_density(p1, x, i)
            b = fukushima.signed_measure_density(p1, -x, i)
            assert b == pytest.approx(-a, rel=1e-12)

    def test_rejects_origin_and_bad_index(self, p1):
        with pytest.raises(SingularPointError):
            fukushima.signed_measure_density(p1, [0.0, 0.0, 0.0], 0)
        with pytest.raises(ValueError):
            fukushima.signed_measure_density(p1, [1.0, 0.0, 0.0], 3)

    def test_matches_drift_times_weight(self, p1):
        # density_i = b_i(x) * psi(x)^2
        from sdlab.model import psi_eval
        g = rng(3)
        for _ in range(20):
            x = g.normal(size=3)
            b = drift_eval(p1, x)
            w = psi_eval(p1, x) ** 2
            for i in range(3):
                assert fukushima.signed_measure_density(p1, x, i) == \
                    pytest.approx(b[i] * w, rel=1e-12)


class TestTruncatedMass:
    def test_against_quadrature(self, p1):
        for delta in (0.01, 0.1, 1.0):
            num, _ = integrate.quad(
                lambda r: (p1.gamma * r + 1.0) / r
                * 2.0 * p1.gamma * math.exp(-2.0 * p1.gamma * r),
                delta, 50.0)
            assert fukushima.truncated_mass(p1, delta) == pytest.approx(
                num, rel=1e-8)

    def test_log_divergence(self, p1):
        # mass / (2*gamma*ln(1/delta)) -> 1
        delta = 1e-12
        ratio = fukushima.truncated_mass(p1, delta) / (2.0 * math.log(1 / delta))
        assert ratio == pytest.approx(1.0, abs=0.05)

    def test_monotone_and_vanishing(self, p1):
        deltas = np.array([0.01, 0.1, 1.0, 5.0])
        masses = [fukushima.truncated_mass(p1, d) for d in deltas]
        assert np.all(np.diff(masses) < 0)
        assert masses[-1] < 1e-3

    def test_bad_delta(self, p1):
        with pytest.raises(ValueError):
            fukushima.truncated_mass(p1, 0.0)


class TestDriftMagnitude:
    def test_magnitude_identity(self, p1):
        # |b(x)| = (gamma*|x| + 1)/|x| everywhere off the origin
        g = rng(4)
        for _ in range(100):
            x = g.normal(size=3)
            r = np.linalg.norm(x)
            assert np.linalg.norm(drift_eval(p1, x)) == pytest.approx(
                (p1.gamma * r + 1.0) / r, rel=1e-10)


class TestOracleAndReport:
    def test_oracle_linear_in_T(self, p1):
        a = fukushima.tv_oracle(p1, 1.0, 8)
        b = fukushima.tv_oracle(p1, 2.0, 8)
        assert b == pytest.approx(2.0 * a, rel=1e-12)

    def test_oracle_log_growth(self, p1):
        # successive doublings of n add about 2*gamma*T*ln(2) in the limit
        diffs = [fukushima.tv_oracle(p1, 1.0, 2 * n) -
                 fukushima.tv_oracle(p1, 1.0, n)
                 for n in (256, 512, 1024)]
        for d in diffs:
            assert d == pytest.approx(2.0 * math.log(2.0), rel=0.02)

    def test_oracle_monotone_in_n(self, p1):
        vals = [fukushima.tv_oracle(p1, 1.0, n) for n in (2, 4, 8, 16)]
        assert np.all(np.diff(vals) > 0)

    def test_report_structure(self, p1):
        cfg = SimConfig(1e-3, 1.0, n_paths=600)
        rep = fukushima.total_variation_report(
            p1, 0.5, (2, 8), cfg, rng(5), config={"tag": "unit"})
        assert rep.n_grid == (2, 8)
        assert rep.target_slope == pytest.approx(1.0)
        assert rep.fitted_slope > 0
        means = [e.mean for e in rep.tv_estimates]
        assert means[1] > means[0]
        # oracle agreement within Monte Carlo + Euler bias margins
        for n, e in zip(rep.n_grid, rep.tv_estimates):
            assert abs(e.mean - fukushima.tv_oracle(p1, 0.5, n)) < 0.1
        doc = json.loads(rep.to_json())
        assert doc["gamma"] == 1.0
        assert doc["config"] == {"tag": "unit"}
        assert len(doc["tv_estimates"]) == 2

    def test_report_validation(self, p1):
        cfg = SimConfig(1e-3, 1.0, n_paths=600)
        with pytest.raises(ValueError):
            fukushima.total_variation_report(p1, 0.5, (8, 2), cfg, rng(6))
        tiny = SimConfig(1e-3, 1.0, n_paths=2)
        with pytest.raises(ValueError):
            fukushima.total_variation_report(p1, 0.5, (2, 8), tiny, rng(7))

    def test_report_json_file(self, p1, tmp_path):
        cfg = SimConfig(1e-2, 1.0, n_paths=600)
        rep = fukushima.total_variation_report(p1, 0.2, (2, 4), cfg, rng(8))
        out = tmp_path / "report.json"
        rep.to_json(out)
        data = json.loads(out.read_text())
        assert data["T"] == 0.2
