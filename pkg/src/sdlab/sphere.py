"""Brownian motion on the unit sphere S^2 (generator half the
Laplace-Beltrami operator).

Stepping draws a Gaussian increment of covariance delta*I_2 in the
tangent plane and moves along the geodesic it spans; points are
renormalized after every step.  Grid increments larger than a substep
bound are subdivided; increments past a mixing threshold are replaced by
an exact uniform draw (the spectral gap is 1, so after intrinsic time 10
the law is uniform far beyond any test resolution used here).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_MAX_SUBSTEP = 0.01
MIX_THRESHOLD = 10.0

# Equal-area partitions: nb latitude bands (equal z-width, hence equal
# area) times ns longitude sectors.
_PARTITIONS = {12: (3, 4), 48: (6, 8), 192: (12, 16)}


@dataclass
class SpherePath:
    """Unit-vector trajectory on a (possibly nonuniform) intrinsic-time grid."""

    times: np.ndarray       # intrinsic time, increasing
    points: np.ndarray      # shape (len(times), 3), unit rows

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.times, self.points]),
                   delimiter=",", header="a,ux,uy,uz", comments="",
                   fmt="%.17g")


def uniform_point(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform draw(s) on S^2."""
    n = 1 if size is None else size
    v = rng.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v[0] if size is None else v


def _step_many(pts: np.ndarray, delta, rng: np.random.Generator) -> np.ndarray:
    """One tangent-Gaussian geodesic step for each row of pts.

    delta may be a scalar or a per-row array of step variances.
    """
    delta = np.asarray(delta, dtype=float)
    xi = rng.standard_normal(pts.shape) * np.sqrt(delta)[..., None]
    v = xi - np.sum(xi * pts, axis=1, keepdims=True) * pts
    a = np.linalg.norm(v, axis=1, keepdims=True)
    small = a[:, 0] < 1e-300
    a_safe = np.where(small[:, None], 1.0, a)
    out = np.cos(a) * pts + np.sin(a) * (v / a_safe)
    out[small] = pts[small]
    out /= np.linalg.norm(out, axis=1, keepdims=True)
    return out


def sphere_step(pt: np.ndarray, delta: float, rng: np.random.Generator) -> np.ndarray:
    """One step of intrinsic time delta >= 0 from the unit vector pt."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if delta == 0.0:
        return np.array(pt, dtype=float, copy=True)
    return _step_many(np.asarray(pt, dtype=float)[None, :], delta, rng)[0]


def walk_many(pts: np.ndarray, total_time, substep: float,
              rng: np.random.Generator) -> np.ndarray:
    """Advance each row of pts by its own intrinsic time, subdividing
    into equal substeps of size <= substep.  Returns the final points."""
    total = np.broadcast_to(np.asarray(total_time, dtype=float), (len(pts),))
    n_sub = np.maximum(1, np.ceil(total / substep).astype(int))
    deltas = total / n_sub
    out = np.array(pts, dtype=float, copy=True)
    for k in range(int(n_sub.max())):
        act = k < n_sub
        if not act.all():
            out[act] = _step_many(out[act], deltas[act], rng)
        else:
            out = _step_many(out, deltas, rng)
    return out


def sphere_path(start, grid, rng: np.random.Generator,
                max_substep: float = DEFAULT_MAX_SUBSTEP,
                mix_threshold: float = MIX_THRESHOLD,
                record_substeps: bool = False) -> SpherePath:
    """Sphere Brownian motion sampled on an increasing intrinsic-time grid.

    start: unit 3-vector, or None for a uniform draw.  Grid increments
    above max_substep are subdivided internally; increments strictly
    larger than mix_threshold are replaced by one exact uniform draw.
    With record_substeps the returned path contains the subdivision
    points as well (grid times are always present).
    """
    grid = np.asarray(grid, dtype=float)
    if len(grid) == 0:
        raise ValueError("empty grid")
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be nondecreasing")
    if max_substep <= 0:
        raise ValueError("max_substep must be positive")
    pt = uniform_point(rng) if start is None else np.asarray(start, dtype=float).copy()
    times = [grid[0]]
    points = [pt.copy()]
    for i in range(1, len(grid)):
        da = grid[i] - grid[i - 1]
        if da > mix_threshold:
            pt = uniform_point(rng)
        elif da > 0.0:
            n_sub = max(1, int(math.ceil(da / max_substep)))
            sub = da / n_sub
            for j in range(n_sub):
                pt = sphere_step(pt, sub, rng)
                if record_substeps and j < n_sub - 1:
                    times.append(grid[i - 1] + (j + 1) * sub)
                    points.append(pt.copy())
        times.append(grid[i])
        points.append(pt.copy())
    return SpherePath(np.array(times), np.vstack(points))


def cell_index(points: np.ndarray, n_cells: int) -> np.ndarray:
    """Index of each unit vector in the canonical equal-area partition.

    The partition splits z = cos(colatitude) into nb equal intervals and
    longitude into ns equal sectors (cell id = band*ns + sector); both z
    and longitude are uniform under the surface measure, so all cells
    have area 4*pi/n_cells.
    """
    if n_cells not in _PARTITIONS:
        raise ValueError(f"unsupported cell count {n_cells}; "
                         f"choose from {sorted(_PARTITIONS)}")
    nb, ns = _PARTITIONS[n_cells]
    pts = np.atleast_2d(points)
    z = np.clip(pts[:, 2], -1.0, 1.0)
    band = np.minimum(((z + 1.0) / 2.0 * nb).astype(int), nb - 1)
    phi = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * math.pi)
    sec = np.minimum((phi / (2.0 * math.pi) * ns).astype(int), ns - 1)
    return band * ns + sec


def cell_histogram(points: np.ndarray, n_cells: int) -> np.ndarray:
    """Occupancy counts of points over the equal-area partition."""
    idx = cell_index(points, n_cells)
    return np.bincount(idx, minlength=n_cells)
