"""Excursion harvesting and reconstruction of the full recurrent process.

Excursions away from the origin are harvested from a long reflected
radial path (a grid value below the zero-detection floor counts as a
visit to the origin).  Each excursion receives an independent angular
part: a uniform anchor direction at a uniformly chosen interior time,
extended by two independent sphere Brownian motions run along the
excursion's own intrinsic clock toward either endpoint (reversibility of
the stationary sphere BM justifies simulating the backward branch
forward in time).  The intrinsic clock diverges at both endpoints; the
steps into the flanking zeros carry capped increments like every other
clock computation in the package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .model import ModelParams
from .radial import RadialPath, SimConfig, sample_reflected_path
from . import sphere
from .skewprod import DEFAULT_CAP, PathR3, clock_increments


def default_floor(dt: float) -> float:
    """Zero-detection floor tied to the grid scale."""
    return 0.5 * math.sqrt(dt)


@dataclass
class ExcursionRecord:
    """One excursion of the reflected radial path above the floor.

    start/end are the indices of the flanking sub-floor grid points in
    the parent path; rho holds the interior values (strictly above the
    floor).  The angular data is filled in by attach_angular.
    """

    parent_id: int
    start: int
    end: int
    zeta: float
    rho: np.ndarray
    dt: float
    U: Optional[float] = None
    anchor: Optional[int] = None          # interior index of the anchor time
    A_rel: Optional[np.ndarray] = None    # signed clock at interior points
    span_neg: float = 0.0                 # clock span anchor -> left zero
    span_pos: float = 0.0                 # clock span anchor -> right zero
    theta_grid: Optional[np.ndarray] = None   # (len(rho), 3)
    angular: Optional[sphere.SpherePath] = None  # dense, signed times

    def interior_times(self) -> np.ndarray:
        return self.dt * (1.0 + np.arange(len(self.rho)))


def extract_excursions(path: RadialPath, floor: Optional[float] = None,
                       parent_id: int = 0) -> List[ExcursionRecord]:
    """Maximal runs strictly above the floor, flanked by sub-floor points.

    Runs touching either end of the path (no flanking zero) are skipped.
    """
    if len(path.values) < 3:
        raise ValueError("path too short for excursion extraction")
    if floor is None:
        floor = default_floor(path.dt)
    if floor < 0.1 * math.sqrt(path.dt):
        raise ValueError("floor below resolvable grid scale 0.1*sqrt(dt)")
    above = path.values >= floor
    # run boundaries: +1 at upcrossings, -1 at downcrossings
    d = np.diff(above.astype(np.int8))
    ups = np.nonzero(d == 1)[0]        # index of the zero before the run
    downs = np.nonzero(d == -1)[0] + 1  # index of the zero after the run
    records = []
    for u in ups:
        after = downs[downs > u]
        if len(after) == 0:
            break  # run touches the end of the path
        e = int(after[0])
        rho = path.values[u + 1:e]
        records.append(ExcursionRecord(
            parent_id=parent_id, start=int(u), end=e,
            zeta=(e - u) * path.dt, rho=rho.copy(), dt=path.dt))
    return records


def _branch_increments(rho: np.ndarray, dt: float, cap: float) -> tuple:
    """Clock increments along the interior grid plus the capped terminal
    step into the flanking zero, for (negative, positive) branches around
    an anchor chosen later.  Returns the full interior increment array."""
    ext = np.concatenate([[0.0], rho, [0.0]])
    inc, _ = clock_increments(ext, dt, cap)
    # inc[0] is the step from the left zero into the excursion, inc[-1]
    # the step into the right zero; inc[1:-1] the interior steps.
    return inc


def dense_sphere_branch(start_pt: np.ndarray, increments: np.ndarray,
                        rng: np.random.Generator,
                        max_substep: float = sphere.DEFAULT_MAX_SUBSTEP,
                        mix_threshold: float = sphere.MIX_THRESHOLD) -> sphere.SpherePath:
    """Sphere BM from start_pt along a sequence of clock increments,
    recording every internal substep."""
    grid = np.concatenate([[0.0], np.cumsum(increments)])
    return sphere.sphere_path(start_pt, grid, rng, max_substep=max_substep,
                              mix_threshold=mix_threshold,
                              record_substeps=True)


def attach_angular(exc: ExcursionRecord, rng: np.random.Generator,
                   cap: float = DEFAULT_CAP,
                   max_substep: float = sphere.DEFAULT_MAX_SUBSTEP,
                   dense: bool = False) -> ExcursionRecord:
    """Draw the angular part of an excursion in place (and return it).

    U ~ Uniform(0,1) anchors the relative clock at time U*zeta; the
    anchor direction is uniform on S^2; the two branches are independent
    sphere BMs run outward along the capped clock.  With dense=True the
    full substep trajectory is kept in exc.angular (signed times,
    negative branch first).
    """
    if exc.theta_grid is not None:
        raise ValueError("angular part already attached")
    m = len(exc.rho)
    exc.U = float(rng.random())
    # interior grid times are (j+1)*dt; nearest interior point to U*zeta
    exc.anchor = int(np.clip(round(exc.U * exc.zeta / exc.dt) - 1, 0, m - 1))
    inc = _branch_increments(exc.rho, exc.dt, cap)
    inc_pos = inc[exc.anchor + 1:]          # anchor -> right zero (capped last)
    inc_neg = inc[:exc.anchor + 1][::-1]    # anchor -> left zero (capped last)
    exc.span_pos = float(inc_pos.sum())
    exc.span_neg = float(inc_neg.sum())

    anchor_pt = sphere.uniform_point(rng)
    pos = dense_sphere_branch(anchor_pt, inc_pos, rng, max_substep)
    neg = dense_sphere_branch(anchor_pt, inc_neg, rng, max_substep)

    # signed clock at interior grid points
    A_rel = np.empty(m)
    A_rel[exc.anchor] = 0.0
    A_rel[exc.anchor + 1:] = np.cumsum(inc_pos[:-1])
    A_rel[:exc.anchor] = -np.cumsum(inc_neg[:-1])[::-1]
    exc.A_rel = A_rel

    # angular value at the interior grid points: indices of grid times in
    # the dense branches (grid points are always recorded by sphere_path)
    theta = np.empty((m, 3))
    theta[exc.anchor] = anchor_pt
    pos_grid = np.searchsorted(pos.times, np.cumsum(inc_pos[:-1]))
    theta[exc.anchor + 1:] = pos.points[pos_grid]
    neg_grid = np.searchsorted(neg.times, np.cumsum(inc_neg[:-1]))
    theta[:exc.anchor] = neg.points[neg_grid][::-1]
    exc.theta_grid = theta

    if dense:
        times = np.concatenate([-neg.times[::-1], pos.times[1:]])
        points = np.vstack([neg.points[::-1], pos.points[1:]])
        exc.angular = sphere.SpherePath(times, points)
    return exc


def branch_cell_coverage(anchors: np.ndarray, increment_lists: list,
                         rng: np.random.Generator, n_cells: int = 48,
                         max_substep: float = sphere.DEFAULT_MAX_SUBSTEP) -> np.ndarray:
    """Cells visited by independent dense sphere BM branches (vectorized).

    anchors: (B,3) start points; increment_lists: per-branch arrays of
    clock increments (each <= the mixing threshold, so every step is
    simulated densely).  Returns the per-branch count of distinct cells.
    """
    B = len(increment_lists)
    subs = []
    for inc in increment_lists:
        n_sub = np.maximum(1, np.ceil(inc / max_substep)).astype(int)
        subs.append(np.repeat(inc / n_sub, n_sub))
    L = max(len(s) for s in subs)
    deltas = np.zeros((B, L))
    valid = np.zeros((B, L), dtype=bool)
    for b, s in enumerate(subs):
        deltas[b, :len(s)] = s
        valid[b, :len(s)] = True
    pts = np.array(anchors, dtype=float, copy=True)
    visited = np.zeros((B, n_cells), dtype=bool)
    visited[np.arange(B), sphere.cell_index(pts, n_cells)] = True
    for k in range(L):
        act = valid[:, k]
        pts[act] = sphere._step_many(pts[act], deltas[act, k], rng)
        visited[np.nonzero(act)[0], sphere.cell_index(pts[act], n_cells)] = True
    return visited.sum(axis=1)


def assemble_x(p: ModelParams, x0, cfg: SimConfig, rng: np.random.Generator,
               floor: Optional[float] = None, cap: float = DEFAULT_CAP,
               max_substep: float = sphere.DEFAULT_MAX_SUBSTEP) -> PathR3:
    """Full recurrent 3D path of duration t_max started at x0 (0 allowed).

    The modulus is a reflected radial path; the initial segment (when
    |x0| is above the floor) keeps the starting direction, and every
    harvested excursion gets an independent angular part.  Grid points
    below the floor are emitted as the exact origin; the `radii` field
    keeps the underlying reflected values.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape == ():
        x0 = np.array([float(x0), 0.0, 0.0])
    r0 = float(np.linalg.norm(x0))
    if floor is None:
        floor = default_floor(cfg.dt)
    radial = sample_reflected_path(p, r0, cfg, rng)
    vals = radial.values
    above = vals >= floor
    points = np.zeros((len(vals), 3))
    prov = np.full(len(vals), -1, dtype=int)
    seg = 0

    # initial segment: no left zero, direction anchored at x0
    if above[0]:
        end = int(np.argmin(above)) if not above.all() else len(vals)
        inc, _ = clock_increments(vals[:end], cfg.dt, cap)
        grid = np.concatenate([[0.0], np.cumsum(inc)])
        sp = sphere.sphere_path(x0 / r0, grid, rng, max_substep=max_substep)
        points[:end] = vals[:end, None] * sp.points
        prov[:end] = seg
        seg += 1

    path_view = RadialPath(cfg.dt, vals)
    for exc in extract_excursions(path_view, floor=floor):
        attach_angular(exc, rng, cap=cap, max_substep=max_substep)
        i0, i1 = exc.start + 1, exc.end
        points[i0:i1] = exc.rho[:, None] * exc.theta_grid
        prov[i0:i1] = seg
        seg += 1

    # trailing segment without a right zero: angular from a fresh anchor
    tail_start = None
    if above[-1]:
        idx = np.nonzero(~above)[0]
        tail_start = int(idx[-1]) + 1 if len(idx) else None
    if tail_start is not None and prov[tail_start] == -1:
        ext = np.concatenate([[0.0], vals[tail_start:]])
        inc, _ = clock_increments(ext, cfg.dt, cap)
        grid = np.concatenate([[0.0], np.cumsum(inc[1:])])
        sp = sphere.sphere_path(None, grid, rng, max_substep=max_substep)
        points[tail_start:] = vals[tail_start:, None] * sp.points
        prov[tail_start:] = seg
        seg += 1

    zero = np.nonzero(~above)[0]
    points[zero] = 0.0
    return PathR3(cfg.dt, points, vals.copy(), zero, prov)


def lifetime_integrability(d: int) -> bool:
    """Whether the excursion-lifetime tail t^{-d/2} is integrable against
    min(t,1) near 0: finite iff d < 4."""
    if d < 2:
        raise ValueError("d must be >= 2")
    return d < 4


def inventory_json(records: List[ExcursionRecord], path=None,
                   coverage: Optional[np.ndarray] = None) -> str:
    """Serialize an excursion inventory to JSON."""
    items = []
    for i, exc in enumerate(records):
        item = {"zeta": exc.zeta, "U": exc.U,
                "A_span_neg": exc.span_neg, "A_span_pos": exc.span_pos}
        if coverage is not None:
            item["coverage_cells"] = int(coverage[i])
        items.append(item)
    out = json.dumps(items, indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(out)
    return out
