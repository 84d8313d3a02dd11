"""Radial diffusion engine.

The radial part of the process solves dr = -gamma dt + dB on (0, infinity),
absorbed at 0; the radial part of the full recurrent process is the
reflection of the same diffusion at 0.  This module provides exact
closed-form facts (scale/speed, hitting probabilities, mean absorption
time), grid samplers for both versions, and local-time estimators.

Samplers take an explicit numpy Generator; nothing here touches global
RNG state.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import ModelParams


@dataclass(frozen=True)
class SimConfig:
    dt: float
    t_max: float
    n_paths: int = 1
    seed: int = 0
    bridge_correction: bool = True

    def __post_init__(self):
        if not (0 < self.dt <= self.t_max):
            raise ValueError("need 0 < dt <= t_max")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))


@dataclass
class RadialPath:
    """Uniform-grid trajectory of the radial diffusion.

    For an absorbed path, `values` ends at the absorption grid point
    (value 0) and `absorption_index` is its index; `bridge_hit` records
    whether absorption was detected by the Brownian-bridge test rather
    than a negative grid proposal.  For a reflected path `regulator`
    holds the cumulative Skorokhod pushing term on the same grid.
    """

    dt: float
    values: np.ndarray
    absorbed: bool = False
    absorption_index: Optional[int] = None
    bridge_hit: bool = False
    regulator: Optional[np.ndarray] = None

    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.values))

    def to_csv(self, path) -> None:
        cols = [self.times(), self.values]
        header = "t,r"
        if self.regulator is not None:
            cols.append(self.regulator)
            header += ",regulator"
        np.savetxt(path, np.column_stack(cols), delimiter=",",
                   header=header, comments="", fmt="%.17g")


def scale_function(p: ModelParams, x):
    """s(x) = exp(2*gamma*x) / (4*gamma^2)."""
    return np.exp(2.0 * p.gamma * np.asarray(x, dtype=float)) / (4.0 * p.gamma**2)


def speed_density(p: ModelParams, x):
    """l'(x) = 2*gamma*exp(-2*gamma*x)."""
    return 2.0 * p.gamma * np.exp(-2.0 * p.gamma * np.asarray(x, dtype=float))


def scale_and_speed(p: ModelParams, x) -> tuple:
    """Scale-function value and speed density at x."""
    return scale_function(p, x), speed_density(p, x)


def hit_prob_zero_before(p: ModelParams, x: float, b: float) -> float:
    """P_x(hit 0 before b) = (s(b) - s(x)) / (s(b) - s(0))."""
    if not (0.0 < x < b):
        raise ValueError(f"need 0 < x < b, got x={x}, b={b}")
    g = p.gamma
    # expm1 keeps the ratio accurate for small gamma*b.
    return (math.exp(2 * g * b) - math.exp(2 * g * x)) / math.expm1(2 * g * b)


def expected_absorption_time(p: ModelParams, x: float) -> float:
    """E_x[tau_0] = x / gamma (optional stopping for B_t - gamma t)."""
    if x < 0:
        raise ValueError("x must be nonnegative")
    return x / p.gamma


def bridge_hit_probability(r0, r1, dt: float):
    """Probability that a Brownian bridge between positive endpoints r0, r1
    over a step of length dt dips below 0: exp(-2*r0*r1/dt)."""
    return np.exp(-2.0 * np.asarray(r0) * np.asarray(r1) / dt)


def sample_absorbed_path(p: ModelParams, x0: float, cfg: SimConfig,
                         rng: np.random.Generator) -> RadialPath:
    """One absorbed trajectory from x0 > 0 on the uniform grid.

    Grid stepping is exact in law (constant drift); absorption between
    grid points is decided by the driftless bridge-minimum test.
    """
    if x0 <= 0:
        raise ValueError("x0 must be positive")
    n = cfg.n_steps
    inc = -p.gamma * cfg.dt + math.sqrt(cfg.dt) * rng.standard_normal(n)
    values = np.empty(n + 1)
    values[0] = x0
    values[1:] = x0 + np.cumsum(inc)

    neg = np.nonzero(values[1:] <= 0.0)[0]
    k_grid = int(neg[0]) + 1 if len(neg) else None
    stop = k_grid if k_grid is not None else n + 1

    k_bridge = None
    if cfg.bridge_correction and stop > 1:
        a = values[:stop - 1]
        b = values[1:stop]
        u = rng.random(stop - 1)
        hits = np.nonzero(u < bridge_hit_probability(a, b, cfg.dt))[0]
        if len(hits):
            k_bridge = int(hits[0]) + 1

    if k_bridge is not None and (k_grid is None or k_bridge < k_grid):
        values = values[:k_bridge + 1]
        values[-1] = 0.0
        return RadialPath(cfg.dt, values, absorbed=True,
                          absorption_index=k_bridge, bridge_hit=True)
    if k_grid is not None:
        values = values[:k_grid + 1]
        values[-1] = 0.0
        return RadialPath(cfg.dt, values, absorbed=True,
                          absorption_index=k_grid)
    return RadialPath(cfg.dt, values)


def absorption_time_ensemble(p: ModelParams, x0: float, cfg: SimConfig,
                             rng: np.random.Generator) -> np.ndarray:
    """Absorption times of cfg.n_paths independent paths (grid resolution).

    Vectorized across paths with compaction of the active set; paths not
    absorbed by t_max are reported as t_max.
    """
    if x0 <= 0:
        raise ValueError("x0 must be positive")
    dt, n_steps = cfg.dt, cfg.n_steps
    sq = math.sqrt(dt)
    r = np.full(cfg.n_paths, float(x0))
    alive = np.arange(cfg.n_paths)
    tau = np.full(cfg.n_paths, cfg.t_max)
    for k in range(n_steps):
        y = r - p.gamma * dt + sq * rng.standard_normal(len(r))
        hit = y <= 0.0
        if cfg.bridge_correction:
            both_pos = ~hit
            u = rng.random(len(r))
            hit |= both_pos & (u < bridge_hit_probability(
                np.maximum(r, 1e-300), np.maximum(y, 1e-300), dt))
        if hit.any():
            tau[alive[hit]] = (k + 1) * dt
            keep = ~hit
            r, alive = y[keep], alive[keep]
            if len(r) == 0:
                break
        else:
            r = y
    return tau


def exit_ensemble(p: ModelParams, x0: float, b: float, cfg: SimConfig,
                  rng: np.random.Generator) -> np.ndarray:
    """Boolean array: True where the path hit 0 before the barrier b.

    Bridge corrections are applied at both boundaries so the comparison
    with the scale-function formula is O(dt)-accurate.
    """
    if not (0.0 < x0 < b):
        raise ValueError("need 0 < x0 < b")
    dt, n_steps = cfg.dt, cfg.n_steps
    sq = math.sqrt(dt)
    r = np.full(cfg.n_paths, float(x0))
    alive = np.arange(cfg.n_paths)
    hit_zero = np.zeros(cfg.n_paths, dtype=bool)
    decided = np.zeros(cfg.n_paths, dtype=bool)
    for _ in range(n_steps):
        y = r - p.gamma * dt + sq * rng.standard_normal(len(r))
        lo = y <= 0.0
        hi = y >= b
        interior = ~(lo | hi)
        if cfg.bridge_correction and interior.any():
            u0 = rng.random(len(r))
            ub = rng.random(len(r))
            lo |= interior & (u0 < bridge_hit_probability(r, np.maximum(y, 1e-300), dt))
            hi |= ~lo & interior & (ub < bridge_hit_probability(b - r, b - np.minimum(y, b - 1e-300), dt))
        done = lo | hi
        if done.any():
            hit_zero[alive[done & lo]] = True
            decided[alive[done]] = True
            keep = ~done
            r, alive = y[keep], alive[keep]
            if len(r) == 0:
                break
        else:
            r = y
    if not decided.all():
        warnings.warn(f"{np.count_nonzero(~decided)} paths undecided by t_max; "
                      "counted as barrier exits")
    return hit_zero


def reflected_steps(p: ModelParams, r0: np.ndarray, n_steps: int, dt: float,
                    rng: np.random.Generator,
                    keep_paths: bool = True) -> tuple:
    """Symmetrized Euler for the reflected diffusion, vectorized over paths.

    Proposal y = r - gamma*dt + sqrt(dt)*N; next state |y|; the Skorokhod
    pushing increment is |y| - y = 2*max(0, -y), so that telescoping the
    scheme reproduces r_T - r_0 = sum(dB) - gamma*T + regulator.

    Returns (values, regulator): arrays of shape (n_steps+1, n_paths) when
    keep_paths, else the final-state vectors.
    """
    r = np.array(r0, dtype=float, copy=True)
    if np.any(r < 0):
        raise ValueError("start values must be nonnegative")
    reg = np.zeros_like(r)
    sq = math.sqrt(dt)
    if keep_paths:
        values = np.empty((n_steps + 1, len(r)))
        regs = np.empty((n_steps + 1, len(r)))
        values[0], regs[0] = r, reg
    for k in range(n_steps):
        y = r - p.gamma * dt + sq * rng.standard_normal(len(r))
        reg = reg + (np.abs(y) - y)
        r = np.abs(y)
        if keep_paths:
            values[k + 1], regs[k + 1] = r, reg
    if keep_paths:
        return values, regs
    return r, reg


def sample_reflected_path(p: ModelParams, x0: float, cfg: SimConfig,
                          rng: np.random.Generator) -> RadialPath:
    """One reflected trajectory with its cumulative regulator."""
    values, regs = reflected_steps(p, np.array([float(x0)]), cfg.n_steps,
                                   cfg.dt, rng)
    return RadialPath(cfg.dt, values[:, 0], regulator=regs[:, 0])


def occupation_local_time(path: RadialPath, band: float) -> float:
    """Occupation-density estimate of the boundary local time:
    dt * #{k: r_k < band} / (2*band)."""
    if band <= 0:
        raise ValueError("band must be positive")
    if band < math.sqrt(path.dt):
        warnings.warn(f"band {band} below resolvable scale sqrt(dt)="
                      f"{math.sqrt(path.dt):.3g}; estimate unreliable")
    count = int(np.count_nonzero(path.values < band))
    return path.dt * count / (2.0 * band)


def stationary_sampler(p: ModelParams, rng: np.random.Generator, size=None):
    """Exact draw(s) from the stationary radial law Exp(2*gamma)."""
    return rng.exponential(1.0 / (2.0 * p.gamma), size)
