"""Figure rendering for experiment reports.

Rendering is optional (the CLI's --plot flag); figures are written as
PNG files next to the delimited output.  Each helper consumes the extras
attached to a Report by the corresponding experiment and silently skips
when the required arrays are absent.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import Report


def _save(fig, out_dir: str, name: str) -> str:
    path = f"{out_dir}/{name}.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def radial_histogram(samples: np.ndarray, gamma: float, out_dir: str,
                     name: str) -> str:
    """Histogram of radial samples against the 2*gamma*exp(-2*gamma*r) law."""
    fig, ax = plt.subplots()
    ax.hist(samples, bins=60, density=True, alpha=0.6, label="samples")
    r = np.linspace(0.0, float(np.max(samples)), 400)
    ax.plot(r, 2.0 * gamma * np.exp(-2.0 * gamma * r), "k-",
            label="2g exp(-2g r)")
    ax.set_xlabel("r")
    ax.set_ylabel("density")
    ax.legend()
    return _save(fig, out_dir, name)


def absorption_histogram(tau: np.ndarray, gamma: float, out_dir: str) -> str:
    fig, ax = plt.subplots()
    ax.hist(tau, bins=60, density=True, alpha=0.6)
    ax.axvline(1.0 / gamma, color="k", linestyle="--", label="mean x/gamma")
    ax.set_xlabel("absorption time")
    ax.set_ylabel("density")
    ax.legend()
    return _save(fig, out_dir, "absorption_times")


def correlation_decay(corr: dict, out_dir: str) -> str:
    ts = sorted(float(t) for t in corr)
    means = [corr[str(t)]["mean"] for t in ts]
    errs = [3.0 * corr[str(t)]["stderr"] for t in ts]
    fig, ax = plt.subplots()
    ax.errorbar(ts, means, yerr=errs, fmt="o", label="MC")
    grid = np.linspace(0.0, max(ts) * 1.1, 200)
    ax.plot(grid, np.exp(-grid), "k-", label="exp(-t)")
    ax.set_xlabel("t")
    ax.set_ylabel("E[theta_t . theta_0]")
    ax.legend()
    return _save(fig, out_dir, "sphere_correlation")


def tv_growth(tv_estimates: list, target_slope: float, out_dir: str) -> str:
    ns = np.array([e["n"] for e in tv_estimates], dtype=float)
    means = np.array([e["mean"] for e in tv_estimates])
    oracles = np.array([e["oracle"] for e in tv_estimates])
    fig, ax = plt.subplots()
    ax.errorbar(np.log(ns), means,
                yerr=[3.0 * e["stderr"] for e in tv_estimates], fmt="o",
                label="MC")
    ax.plot(np.log(ns), oracles, "k--", label="stationary oracle")
    ax.plot(np.log(ns), means[0] + target_slope * (np.log(ns) - math.log(ns[0])),
            "r:", label=f"slope {target_slope}")
    ax.set_xlabel("ln n")
    ax.set_ylabel("E[TV(N^n)]")
    ax.legend()
    return _save(fig, out_dir, "tv_growth")


def coverage_histogram(branch_counts: np.ndarray, out_dir: str) -> str:
    fig, ax = plt.subplots()
    ax.hist(branch_counts, bins=np.arange(0, 50) - 0.5)
    ax.axvline(0.9 * 48, color="k", linestyle="--", label="90% of cells")
    ax.set_xlabel("cells visited per branch (of 48)")
    ax.set_ylabel("branches")
    ax.legend()
    return _save(fig, out_dir, "excursion_coverage")


def render_report(rep: Report, out_dir: str) -> list:
    """Render whatever figures the experiment's extras support."""
    made = []
    gamma = rep.config.get("gamma", 1.0)
    if "samples" in rep.extras:
        made.append(radial_histogram(rep.extras["samples"], gamma, out_dir,
                                     f"radial_law_{rep.experiment}"))
    if "x_mod" in rep.extras:
        made.append(radial_histogram(rep.extras["x_mod"], gamma, out_dir,
                                     "x_modulus_law"))
    if "tau" in rep.extras:
        made.append(absorption_histogram(rep.extras["tau"], gamma, out_dir))
    if "correlation" in rep.results:
        made.append(correlation_decay(rep.results["correlation"], out_dir))
    if "tv_estimates" in rep.results:
        made.append(tv_growth(rep.results["tv_estimates"],
                              rep.results["target_slope"], out_dir))
    if "branch_counts" in rep.extras:
        made.append(coverage_histogram(rep.extras["branch_counts"], out_dir))
    return made
