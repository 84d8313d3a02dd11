import io
import math

import numpy as np
import pytest

from sdlab import sphere
from sdlab.stats import chi_square_uniform, estimate_mean_ci


def rng(seed=0):
    return np.random.default_rng(seed)


class TestUniformDraws:
    def test_unit_norm(self):
        pts = sphere.uniform_point(rng(1), 5000)
        np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0,
                                   rtol=1e-12)

    def test_single_draw_shape(self):
        pt = sphere.uniform_point(rng(2))
        assert pt.shape == (3,)

    def test_uniformity_chi_square(self):
        pts = sphere.uniform_point(rng(3), 100_000)
        counts = sphere.cell_histogram(pts, 48)
        stat, pval = chi_square_uniform(counts)
        assert pval > 0.001

    def test_component_mean(self):
        pts = sphere.uniform_point(rng(40), 50_000)
        for i in range(3):
            assert estimate_mean_ci(pts[:, i]).within(0.0)


class TestStepping:
    def test_zero_step_identity(self):
        pt = np.array([0.0, 0.0, 1.0])
        out = sphere.sphere_step(pt, 0.0, rng(5))
        np.testing.assert_array_equal(out, pt)
        assert out is not pt

    def test_negative_step_rejected(self):
        with pytest.raises(ValueError):
            sphere.sphere_step(np.array([0.0, 0.0, 1.0]), -0.1, rng(6))

    def test_step_stays_on_sphere(self):
        pt = np.array([1.0, 0.0, 0.0])
        g = rng(7)
        for delta in (1e-4, 0.01, 0.5):
            out = sphere.sphere_step(pt, delta, g)
            assert np.linalg.norm(out) == pytest.approx(1.0, rel=1e-12)

    def test_one_step_correlation(self):
        # E[theta_delta . theta_0] = exp(-delta) for sphere BM; a single
        # tangent-Gaussian step reproduces it to O(delta^2)
        delta = 0.01
        n = 200_000
        start = np.tile(np.array([0.0, 0.0, 1.0]), (n, 1))
        out = sphere._step_many(start, delta, rng(8))
        dots = out[:, 2]
        est = estimate_mean_ci(dots)
        assert est.within(math.exp(-delta), extra=delta**2)

    def test_large_increment_mixes(self):
        grid = np.array([0.0, 50.0])
        pts = np.vstack([
            sphere.sphere_path(np.array([0.0, 0.0, 1.0]), grid,
                               rng(100 + k)).points[-1]
            for k in range(20_000)
        ])
        counts = sphere.cell_histogram(pts, 12)
        stat, pval = chi_square_uniform(counts)
        assert pval > 0.001


class TestWalkMany:
    def test_final_norms(self):
        pts = sphere.uniform_point(rng(9), 100)
        out = sphere.walk_many(pts, 0.3, 0.01, rng(9))
        np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0,
                                   rtol=1e-12)

    def test_per_row_times(self):
        pts = np.tile(np.array([0.0, 0.0, 1.0]), (3, 1))
        out = sphere.walk_many(pts, np.array([0.0, 0.1, 1.0]), 0.01, rng(10))
        np.testing.assert_array_equal(out[0], pts[0])
        assert not np.allclose(out[1], pts[1])

    def test_correlation_decay(self):
        # E[theta_t . theta_0] = exp(-t), checked at t = 0.5 with the
        # default substep so the per-step bias is far below the noise
        n = 50_000
        start = np.tile(np.array([0.0, 0.0, 1.0]), (n, 1))
        out = sphere.walk_many(start, 0.5, 0.01, rng(11))
        est = estimate_mean_ci(out[:, 2])
        assert est.within(math.exp(-0.5), extra=2e-3)


class TestSpherePath:
    def test_grid_times_recorded(self):
        grid = np.array([0.0, 0.037, 0.05, 1.2])
        path = sphere.sphere_path(None, grid, rng(12))
        np.testing.assert_array_equal(path.times, grid)
        assert path.points.shape == (4, 3)

    def test_substep_recording(self):
        grid = np.array([0.0, 0.035])
        path = sphere.sphere_path(None, grid, rng(13), max_substep=0.01,
                                  record_substeps=True)
        # 0.035 splits into 4 substeps; grid endpoints plus 3 interior
        assert len(path.times) == 5
        assert path.times[0] == 0.0
        assert path.times[-1] == pytest.approx(0.035)
        assert np.all(np.diff(path.times) > 0)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            sphere.sphere_path(None, [], rng(14))
        with pytest.raises(ValueError):
            sphere.sphere_path(None, [0.0, 1.0, 0.5], rng(14))
        with pytest.raises(ValueError):
            sphere.sphere_path(None, [0.0, 1.0], rng(14), max_substep=0.0)

    def test_csv_schema(self):
        path = sphere.sphere_path(None, [0.0, 0.1, 0.2], rng(15))
        buf = io.StringIO()
        path.to_csv(buf)
        lines = buf.getvalue().strip().split("\n")
        assert lines[0] == "a,ux,uy,uz"
        assert len(lines) == 4
        vals = [float(v) for v in lines[1].split(",")]
        assert vals[0] == 0.0
        assert np.linalg.norm(vals[1:]) == pytest.approx(1.0, rel=1e-12)


class TestPartition:
    def test_cell_counts_sum(self):
        pts = sphere.uniform_point(rng(16), 1000)
        for n_cells in (12, 48, 192):
            counts = sphere.cell_histogram(pts, n_cells)
            assert counts.sum() == 1000
            assert len(counts) == n_cells

    def test_unsupported_cell_count(self):
        pts = sphere.uniform_point(rng(17), 10)
        with pytest.raises(ValueError):
            sphere.cell_index(pts, 17)

    def test_poles_and_equator(self):
        pts = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]])
        idx = sphere.cell_index(pts, 48)
        assert idx[0] >= 40          # north pole in top band
        assert idx[1] < 8            # south pole in bottom band
        assert 16 <= idx[2] < 32     # equator point in a middle band

    def test_equal_area_under_uniform(self):
        pts = sphere.uniform_point(rng(18), 200_000)
        counts = sphere.cell_histogram(pts, 192)
        expected = 200_000 / 192
        assert np.all(np.abs(counts - expected) < 6 * math.sqrt(expected))
