"""Diagnostics for the zero-energy (drift) part of the process.

Before the first hit of the origin the process decomposes as Brownian
motion plus the drift integral

    N_t = -int_0^t (gamma*|X_s| + 1) / |X_s|^2 * X_s ds.

The corresponding signed measures have densities b_i * psi^2, whose
total variation mass diverges logarithmically near the origin.  The
truncated processes X^n (module approx) have finite drift variation for
each n, but the expected variation grows like 2*gamma*T*ln(n), which is
the quantitative sense in which N itself fails to have bounded
variation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .model import ModelParams, SingularPointError, psi_eval
from .radial import SimConfig
from .skewprod import PathR3
from .stats import EstimateWithCI, estimate_mean_ci


@dataclass(frozen=True)
class VariationReport:
    """Expected drift variation of the truncated processes per level n."""

    gamma: float
    T: float
    n_grid: tuple
    tv_estimates: tuple          # EstimateWithCI per level
    fitted_slope: float
    target_slope: float          # 2*gamma*T
    config: Optional[dict] = None

    def to_json(self, path=None) -> str:
        doc = {
            "gamma": self.gamma,
            "T": self.T,
            "n_grid": list(self.n_grid),
            "tv_estimates": [
                {"n": n, "mean": e.mean, "stderr": e.stderr, "samples": e.n}
                for n, e in zip(self.n_grid, self.tv_estimates)
            ],
            "fitted_slope": self.fitted_slope,
            "target_slope": self.target_slope,
            "config": self.config,
        }
        out = json.dumps(doc, indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(out)
        return out


def _drift_vec(gamma: float, pts: np.ndarray, r: np.ndarray) -> np.ndarray:
    return -(gamma * r + 1.0)[:, None] * pts / (r ** 2)[:, None]


def zero_energy_integral(p: ModelParams, path: PathR3, upto: float) -> np.ndarray:
    """Cumulative drift integral N along a path segment away from 0.

    Returns an array of shape (k+1, 3) with N at each grid time up to
    `upto` (trapezoid rule).  Segments that touch the origin are
    rejected; N is only defined before the first hit.
    """
    if upto <= 0:
        raise ValueError("upto must be positive")
    k = int(round(upto / path.dt))
    if k >= len(path.points):
        raise ValueError("upto exceeds path duration")
    r = np.linalg.norm(path.points[:k + 1], axis=1)
    if np.any(r == 0.0):
        raise SingularPointError("segment touches the origin")
    b = _drift_vec(p.gamma, path.points[:k + 1], r)
    out = np.zeros((k + 1, 3))
    out[1:] = np.cumsum(0.5 * path.dt * (b[:-1] + b[1:]), axis=0)
    return out


def signed_measure_density(p: ModelParams, x, i: int) -> float:
    """Lebesgue density of the i-th drift measure at x:
    -(gamma*|x| + 1)/|x| * (x_i/|x|) * psi(x)^2."""
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise SingularPointError("density undefined at the origin")
    if not 0 <= i < 3:
        raise ValueError("coordinate index must be 0, 1 or 2")
    return -(p.gamma * r + 1.0) / r * (x[i] / r) * psi_eval(p, x) ** 2


def truncated_mass(p: ModelParams, delta: float) -> float:
    """Total variation mass of the drift measure outside radius delta:
    int_delta^inf (gamma*r + 1)/r * 2*gamma*e^{-2*gamma*r} dr.

    Closed form gamma*e^{-2*gamma*delta} + 2*gamma*E1(2*gamma*delta);
    grows like 2*gamma*ln(1/delta) as delta -> 0.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    g = p.gamma
    return g * np.exp(-2.0 * g * delta) + 2.0 * g * special.exp1(2.0 * g * delta)


def tv_oracle(p: ModelParams, T: float, n: float) -> float:
    """Exact expected drift variation of X^n on [0,T] under its own
    stationary radial law (density proportional to (psi^n)^2 * r^2)."""
    g = p.gamma
    d = 1.0 / n
    # normalization of (psi^n)^2 r^2 (common factor gamma/2pi dropped):
    # exponential tail outside the cutoff, plateau ball inside
    z_out = np.exp(-2.0 * g * d) / (2.0 * g)
    z_in = np.exp(-2.0 * g * d) * d / 3.0
    # integrand (g*r+1)/r restricted to r >= 1/n against the outside part
    num = np.exp(-2.0 * g * d) / 2.0 + special.exp1(2.0 * g * d)
    return T * num / (z_out + z_in)


def total_variation_report(p: ModelParams, T: float, n_grid: Sequence[int],
                           cfg: SimConfig, rng: np.random.Generator,
                           config: Optional[dict] = None) -> VariationReport:
    """Monte Carlo drift-variation estimates per truncation level with an
    OLS fit of the estimate against ln(n)."""
    from . import approx  # local import: approx depends on this module's types

    n_grid = tuple(int(n) for n in n_grid)
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be strictly increasing")
    estimates = []
    for j, n in enumerate(n_grid):
        tp = approx.TruncParams(p, n)
        stream = np.random.default_rng(rng.bit_generator.spawn(1)[0])
        tv = approx.drift_variation_samples(tp, T, cfg, stream)
        est = estimate_mean_ci(tv)
        if est.stderr > 0.05 * abs(est.mean):
            raise ValueError("insufficient path count to resolve the slope")
        estimates.append(est)
    means = np.array([e.mean for e in estimates])
    slope = float(np.polyfit(np.log(n_grid), means, 1)[0])
    return VariationReport(p.gamma, T, n_grid, tuple(estimates),
                           fitted_slope=slope, target_slope=2.0 * p.gamma * T,
                           config=config)
