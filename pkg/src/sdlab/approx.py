"""Truncated models and their diffusions.

psi_n flattens psi to its value at the cutoff radius 1/n inside the
cutoff ball, which makes it bounded and the associated drift
-(gamma*|x|+1) x/|x|^2, switched off inside the ball, globally bounded.
The diffusion X^n is then an ordinary Euler scheme in R^3 with unit
noise; it crosses the origin freely and is never absorbed.  Its
stationary radial density is proportional to (psi_n(r))^2 r^2, which is
available in closed form and serves as the oracle for the convergence
diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams, psi_radial
from .radial import SimConfig
from .skewprod import PathR3
from .stats import ks_two_sample


@dataclass(frozen=True)
class TruncParams:
    """Truncation level n on top of the base model; cutoff radius 1/n."""

    base: ModelParams
    n: int
    cutoff: float = field(init=False)
    plateau: float = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        object.__setattr__(self, "cutoff", 1.0 / self.n)
        object.__setattr__(self, "plateau",
                           psi_radial(self.base, self.cutoff))


def psi_n_eval(tp: TruncParams, x) -> float:
    """Truncated eigenfunction: psi outside the cutoff ball, its cutoff
    value inside (defined everywhere, including the origin)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise ValueError("expected a point (or array of points) in R^3")
    r = np.asarray(np.linalg.norm(x, axis=-1))
    out = np.where(r >= tp.cutoff,
                   psi_radial(tp.base, np.maximum(r, tp.cutoff)),
                   tp.plateau)
    return float(out) if out.ndim == 0 else out


def drift_n(tp: TruncParams, pts: np.ndarray) -> np.ndarray:
    """Bounded drift -(gamma*|x|+1) x/|x|^2 outside the cutoff ball,
    zero inside.  pts has shape (..., 3)."""
    pts = np.asarray(pts, dtype=float)
    r = np.linalg.norm(pts, axis=-1)
    safe = np.maximum(r, tp.cutoff)
    coef = np.where(r >= tp.cutoff,
                    (tp.base.gamma * safe + 1.0) / safe ** 2, 0.0)
    return -coef[..., None] * pts


def stationary_radial_pdf(tp: TruncParams, r) -> np.ndarray:
    """Normalized stationary radial density of X^n."""
    g, d = tp.base.gamma, tp.cutoff
    r = np.asarray(r, dtype=float)
    z = _z_split(g, d)
    dens = np.where(r >= d, np.exp(-2.0 * g * np.maximum(r, 0.0)),
                    np.exp(-2.0 * g * d) / d ** 2 * r ** 2)
    return np.where(r < 0, 0.0, dens / (z[0] + z[1]))


def stationary_radial_cdf(tp: TruncParams, r) -> np.ndarray:
    g, d = tp.base.gamma, tp.cutoff
    r = np.asarray(r, dtype=float)
    z_in, z_out = _z_split(g, d)
    Z = z_in + z_out
    rc = np.clip(r, 0.0, None)
    inside = np.exp(-2.0 * g * d) / d ** 2 * rc ** 3 / 3.0
    outside = z_in + (np.exp(-2.0 * g * d)
                      - np.exp(-2.0 * g * np.maximum(rc, d))) / (2.0 * g)
    return np.where(rc < d, inside, outside) / Z


def _z_split(g: float, d: float):
    z_in = np.exp(-2.0 * g * d) * d / 3.0
    z_out = np.exp(-2.0 * g * d) / (2.0 * g)
    return z_in, z_out


def stationary_radial_sampler(tp: TruncParams, rng: np.random.Generator,
                              size: int) -> np.ndarray:
    """Exact inverse-CDF draws from the stationary radial law of X^n."""
    g, d = tp.base.gamma, tp.cutoff
    z_in, z_out = _z_split(g, d)
    Z = z_in + z_out
    u = rng.random(size) * Z
    inside = u < z_in
    r = np.empty(size)
    r[inside] = np.cbrt(3.0 * u[inside] * d ** 2 * np.exp(2.0 * g * d))
    tail = np.exp(-2.0 * g * d) - 2.0 * g * (u[~inside] - z_in)
    r[~inside] = -np.log(tail) / (2.0 * g)
    return r


def sample_xn_path(tp: TruncParams, x0, cfg: SimConfig,
                   rng: np.random.Generator) -> PathR3:
    """Euler path of X^n from x0 (unit noise, truncated drift)."""
    n_steps = cfg.n_steps
    pts = np.empty((n_steps + 1, 3))
    pts[0] = np.asarray(x0, dtype=float)
    sdt = math.sqrt(cfg.dt)
    for k in range(n_steps):
        pts[k + 1] = pts[k] + drift_n(tp, pts[k]) * cfg.dt \
            + sdt * rng.standard_normal(3)
    radii = np.linalg.norm(pts, axis=1)
    return PathR3(cfg.dt, pts, radii, np.empty(0, dtype=int),
                  np.zeros(n_steps + 1, dtype=int))


def xn_ensemble_final(tp: TruncParams, x0s: np.ndarray, t_max: float,
                      dt: float, rng: np.random.Generator) -> np.ndarray:
    """Final points of independent X^n paths (vectorized over paths)."""
    pts = np.array(x0s, dtype=float, copy=True)
    sdt = math.sqrt(dt)
    for _ in range(int(round(t_max / dt))):
        pts += drift_n(tp, pts) * dt + sdt * rng.standard_normal(pts.shape)
    return pts


def stationary_start_points(tp: TruncParams, rng: np.random.Generator,
                            size: int) -> np.ndarray:
    from . import sphere
    r = stationary_radial_sampler(tp, rng, size)
    return r[:, None] * sphere.uniform_point(rng, size)


def drift_variation_samples(tp: TruncParams, T: float, cfg: SimConfig,
                            rng: np.random.Generator) -> np.ndarray:
    """Per-path drift variation int_0^T (g*|X^n|+1)/|X^n| 1_{|X^n|>=1/n} ds
    from stationary starts (left Riemann sums, vectorized)."""
    g, d = tp.base.gamma, tp.cutoff
    pts = stationary_start_points(tp, rng, cfg.n_paths)
    acc = np.zeros(cfg.n_paths)
    sdt = math.sqrt(cfg.dt)
    for _ in range(int(round(T / cfg.dt))):
        r = np.linalg.norm(pts, axis=1)
        acc += cfg.dt * np.where(r >= d, (g * r + 1.0) / np.maximum(r, d), 0.0)
        pts += drift_n(tp, pts) * cfg.dt + sdt * rng.standard_normal(pts.shape)
    return acc


def compare_radial_law(x_samples: np.ndarray, xn_samples: np.ndarray) -> float:
    """Two-sample KS distance between |X_t| and |X^n_t| ensembles."""
    if len(x_samples) != len(xn_samples):
        raise ValueError("sample counts must match")
    if len(x_samples) < 1000:
        raise ValueError("need at least 10^3 samples per ensemble")
    return ks_two_sample(np.asarray(x_samples), np.asarray(xn_samples))
