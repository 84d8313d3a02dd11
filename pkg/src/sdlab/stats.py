"""Monte Carlo statistics and seed discipline.

Every random quantity in the package derives from a master seed and a
structured index through `rng_stream`, which maps (seed, *key) to
numpy's SeedSequence spawn-key mechanism.  There is no global RNG state
anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats as sps


@dataclass(frozen=True)
class EstimateWithCI:
    mean: float
    stderr: float
    n: int
    seed: Optional[int] = None

    def within(self, target: float, n_se: float = 3.0, extra: float = 0.0) -> bool:
        return abs(self.mean - target) <= n_se * self.stderr + extra


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the structured index `key` under `seed`."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def estimate_mean_ci(samples, seed: Optional[int] = None) -> EstimateWithCI:
    """Sample mean with standard error (fixed left-to-right reduction order)."""
    a = np.asarray(samples, dtype=float)
    if a.size < 2:
        raise ValueError("need at least 2 samples")
    mean = float(a.mean())
    stderr = float(a.std(ddof=1) / math.sqrt(a.size))
    return EstimateWithCI(mean, stderr, int(a.size), seed)


def ks_statistic(samples, cdf) -> float:
    """Sup distance between the empirical CDF of samples and `cdf`."""
    a = np.sort(np.asarray(samples, dtype=float))
    if a.size < 10:
        raise ValueError("need at least 10 samples")
    f = np.asarray(cdf(a), dtype=float)
    n = a.size
    hi = np.max(np.arange(1, n + 1) / n - f)
    lo = np.max(f - np.arange(0, n) / n)
    return float(max(hi, lo))


def ks_two_sample(a, b) -> float:
    """Two-sample KS distance."""
    return float(sps.ks_2samp(np.asarray(a), np.asarray(b)).statistic)


def chi_square_uniform(counts) -> tuple:
    """Chi-square statistic and p-value against the uniform cell law."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    exp = total / counts.size
    stat = float(np.sum((counts - exp) ** 2 / exp))
    pval = float(sps.chi2.sf(stat, counts.size - 1))
    return stat, pval


def chi_square_homogeneity(counts_a, counts_b) -> tuple:
    """Chi-square homogeneity test for two occupancy vectors."""
    table = np.vstack([counts_a, counts_b])
    keep = table.sum(axis=0) > 0
    stat, pval = sps.chi2_contingency(table[:, keep])[:2]
    return float(stat), float(pval)


def exp_cdf(rate: float):
    """CDF of the exponential law with the given rate."""
    def cdf(x):
        return 1.0 - np.exp(-rate * np.maximum(np.asarray(x, dtype=float), 0.0))
    return cdf
