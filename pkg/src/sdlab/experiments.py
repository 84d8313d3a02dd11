"""Experiment orchestration.

Each named experiment runs one verification suite at desk scale against
its closed-form or quadrature oracle and returns a Report: config echo,
named results, per-criterion pass/fail at the declared tolerances, and
wall clock.  All randomness derives from (seed, experiment index,
sub-stream) through stats.rng_stream; reduction order over paths is
fixed, so reports are byte-identical across runs up to the wall clock.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from . import approx, excursion, fukushima, model, radial, skewprod, sphere
from .stats import (chi_square_uniform, estimate_mean_ci, exp_cdf,
                    ks_statistic, ks_two_sample, rng_stream)

CONFIG_KEYS = ("experiment", "gamma", "dt", "t_max", "n_paths", "seed",
               "out_dir", "format")

#: per-experiment defaults for the tunable config keys
DEFAULTS: Dict[str, dict] = {
    "capacity":           {"gamma": 1.0},
    "eigen":              {"gamma": 1.0},
    "radial-absorb":      {"gamma": 1.0, "dt": 1e-3, "t_max": 20.0, "n_paths": 10_000},
    "radial-stationary":  {"gamma": 1.0, "dt": 1e-3, "t_max": 22.0, "n_paths": 250},
    "regulator":          {"gamma": 1.0, "dt": 1e-3, "t_max": 5.0, "n_paths": 2000},
    "sphere-mixing":      {"gamma": 1.0, "dt": 0.01, "t_max": 6.0, "n_paths": 20_000},
    "x0-drift":           {"gamma": 1.0, "dt": 1e-3, "t_max": 1e-3, "n_paths": 100_000},
    "x0-generator":       {"gamma": 1.0, "dt": 1e-3, "t_max": 1e-3, "n_paths": 100_000},
    "timechange-blowup":  {"gamma": 1.0, "dt": 1e-5, "t_max": 3.0, "n_paths": 300},
    "x-invariant":        {"gamma": 1.0, "dt": 1e-3, "t_max": 22.0, "n_paths": 250},
    "x-regular-origin":   {"gamma": 1.0, "dt": 1e-4, "t_max": 0.1, "n_paths": 2000},
    "excursion-coverage": {"gamma": 1.0, "dt": 1e-3, "t_max": 200.0, "n_paths": 200},
    "tv-divergence":      {"gamma": 1.0, "dt": 1e-4, "t_max": 1.0, "n_paths": 2500},
    "approx-converge":    {"gamma": 1.0, "dt": 1e-4, "t_max": 1.0, "n_paths": 3000},
    "integrability":      {"gamma": 1.0},
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class Report:
    experiment: str
    config: dict
    results: dict = field(default_factory=dict)
    criteria: List[dict] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    passed: bool = True
    wall_clock: float = 0.0
    extras: dict = field(default_factory=dict, repr=False)  # not serialized

    def add_criterion(self, name: str, passed: Optional[bool], detail: str):
        self.criteria.append({"name": name, "passed": passed, "detail": detail})
        if passed is False:
            self.passed = False

    def to_json(self, path=None) -> str:
        doc = {"experiment": self.experiment, "config": self.config,
               "results": self.results, "criteria": self.criteria,
               "warnings": self.warnings, "passed": self.passed,
               "wall_clock": self.wall_clock}
        out = json.dumps(doc, indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(out)
        return out


def normalize_config(config: dict) -> dict:
    """Validate and fill in per-experiment defaults."""
    unknown = set(config) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    name = config.get("experiment")
    if name not in DEFAULTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from "
                          f"{sorted(DEFAULTS)}")
    out = {"experiment": name, "seed": 0, "out_dir": None, "format": "csv"}
    out.update(DEFAULTS[name])
    for k, v in config.items():
        if v is not None:
            out[k] = v
    if out["format"] not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {out['format']!r}")
    for k in ("gamma", "dt", "t_max"):
        if k in out and not (float(out[k]) > 0):
            raise ConfigError(f"{k} must be positive")
    if "n_paths" in out and int(out["n_paths"]) < 1:
        raise ConfigError("n_paths must be >= 1")
    return out


def _exp_index(name: str) -> int:
    return sorted(DEFAULTS).index(name)


# ---------------------------------------------------------------------------
# individual experiments


def _run_capacity(cfg: dict, rep: Report) -> None:
    p = model.ModelParams(cfg["gamma"])
    cap = model.capacity_origin(p)
    rep.results["capacity"] = cap
    target = (p.gamma + p.gamma * p.c ** 2) / (p.gamma - p.c)
    rep.add_criterion("capacity_closed_form", abs(cap - target) < 1e-6,
                      f"capacity={cap:.10g} target={target:.10g}")
    worst = 0.0
    grid = []
    for g in (0.5, cfg["gamma"], 2.0):
        pg = model.ModelParams(g)
        for eps in (0.1, 0.5, 1.0):
            closed = model.energy_e1(pg, eps)
            quadr = model.energy_e1(pg, eps, mode="quadrature")
            grid.append({"gamma": g, "eps": eps, "closed": closed,
                         "quadrature": quadr})
            worst = max(worst, abs(closed - quadr))
    rep.results["energy_grid"] = grid
    rep.results["energy_max_discrepancy"] = worst
    rep.add_criterion("energy_quadrature_match", worst < 1e-8,
                      f"max |closed - quadrature| = {worst:.3e} (tol 1e-8)")


def _run_eigen(cfg: dict, rep: Report) -> None:
    h = 1e-4
    worst_all = 0.0
    per_gamma = {}
    r_grid = np.linspace(0.1, 10.0, 500)
    for g in (0.5, 1.0, 2.0):
        pg = model.ModelParams(g)
        res = max(abs(model.eigen_residual(pg, float(r), h)) for r in r_grid)
        per_gamma[str(g)] = res
        worst_all = max(worst_all, res)
    rep.results["max_residual_per_gamma"] = per_gamma
    rep.results["max_residual"] = worst_all
    rep.add_criterion("eigen_residual", worst_all < 1e-5,
                      f"max residual {worst_all:.3e} (tol 1e-5), h={h}")


def _run_radial_absorb(cfg: dict, rep: Report) -> None:
    p = model.ModelParams(cfg["gamma"])
    sim = radial.SimConfig(cfg["dt"], cfg["t_max"], int(cfg["n_paths"]),
                           cfg["seed"])
    rng = rng_stream(cfg["seed"], _exp_index("radial-absorb"), 0)
    x0 = 1.0
    tau = radial.absorption_time_ensemble(p, x0, sim, rng)
    est = estimate_mean_ci(tau)
    target = radial.expected_absorption_time(p, x0)
    rep.results["mean_absorption_time"] = {"mean": est.mean,
                                           "stderr": est.stderr, "n": est.n}
    rep.results["target_absorption_time"] = target
    ok = est.within(target) and abs(est.mean - target) / target < 0.02
    rep.add_criterion("absorption_mean", ok,
                      f"mean={est.mean:.5f} +/- {est.stderr:.5f}, "
                      f"target={target}, rel err "
                      f"{abs(est.mean - target) / target:.4f} (tol 0.02)")

    b = 1.0
    x_mid = math.log((math.exp(2 * p.gamma * b) + 2.0) / 3.0) / (2 * p.gamma)
    rng2 = rng_stream(cfg["seed"], _exp_index("radial-absorb"), 1)
    hit = radial.exit_ensemble(p, x_mid, b, sim, rng2)
    frac = float(hit.mean())
    se = math.sqrt(frac * (1 - frac) / len(hit))
    rep.results["exit_probability"] = {"mean": frac, "stderr": se,
                                       "target": 2.0 / 3.0, "x0": x_mid, "b": b}
    rep.add_criterion("exit_probability", abs(frac - 2.0 / 3.0) <= 3 * se + 1e-12,
                      f"P(hit 0 first)={frac:.5f} +/- {se:.5f}, target 2/3")
    rep.extras["tau"] = tau
    if cfg["out_dir"] and cfg["format"] == "csv":
        path = radial.sample_absorbed_path(
            p, x0, sim, rng_stream(cfg["seed"], _exp_index("radial-absorb"), 2))
        path.to_csv(f"{cfg['out_dir']}/radial_absorbed_path.csv")


def _reflected_thinned_samples(p, cfg, n_per_path: int, spacing: float,
                               burn_in: float, rng):
    """Thinned stationary-start reflected samples plus the regulator rate."""
    dt = cfg["dt"]
    n_paths = int(cfg["n_paths"])
    r = radial.stationary_sampler(p, rng, n_paths)
    reg_total = np.zeros(n_paths)
    r, reg = radial.reflected_steps(p, r, int(round(burn_in / dt)), dt, rng,
                                    keep_paths=False)
    samples = np.empty((n_per_path, n_paths))
    k_spacing = int(round(spacing / dt))
    for j in range(n_per_path):
        r, reg = radial.reflected_steps(p, r, k_spacing, dt, rng,
                                        keep_paths=False)
        reg_total += reg
        samples[j] = r
    duration = n_per_path * spacing
    return samples.ravel(), reg_total / duration


def _run_radial_stationary(cfg: dict, rep: Report) -> None:
    p = model.ModelParams(cfg["gamma"])
    rng = rng_stream(cfg["seed"], _exp_index("radial-stationary"), 0)
    samples, _ = _reflected_thinned_samples(p, cfg, n_per_path=40,
                                            spacing=0.5, burn_in=2.0, rng=rng)
    ks = ks_statistic(samples, exp_cdf(2.0 * p.gamma))
    rep.results["ks_distance"] = ks
    rep.results["n_samples"] = len(samples)
    underpowered = len(samples) < 2000
    if underpowered:
        rep.warnings.append(
            f"underpowered sample ({len(samples)} values); KS criterion "
            "reported but not enforced")
    rep.add_criterion("stationary_ks", None if underpowered else ks < 0.02,
                      f"KS vs Exp(2*gamma) = {ks:.4f} (tol 0.02, "
                      f"{len(samples)} samples)")
    rep.extras["samples"] = samples
    if cfg["out_dir"] and cfg["format"] == "csv":
        sim = radial.SimConfig(cfg["dt"], 5.0, 1, cfg["seed"])
        path = radial.sample_reflected_path(
            p, 0.5, sim, rng_stream(cfg["seed"],
                                    _exp_index("radial-stationary"), 1))
        path.to_csv(f"{cfg['out_dir']}/radial_reflected_path.csv")


def _run_regulator(cfg: dict, rep: Report) -> None:
    p = model.ModelParams(cfg["gamma"])
    rng = rng_stream(cfg["seed"], _exp_index("regulator"), 0)
    dt = cfg["dt"]
    n_paths = int(cfg["n_paths"])
    r = radial.stationary_sampler(p, rng, n_paths)
    _, reg = radial.reflected_steps(p, r, int(round(cfg["t_max"] / dt)), dt,
                                    rng, keep_paths=False)
    rates = reg / cfg["t_max"]
    est = estimate_mean_ci(rates)
    rel = abs(est.mean - p.gamma) / p.gamma
    rep.results["regulator_rate"] = {"mean": est.mean, "stderr": est.stderr,
                                     "n": est.n, "target": p.gamma}
    rep.add_criterion("regulator_rate", rel < 0.05,
                      f"rate={est.mean:.4f} +/- {est.stderr:.4f}, "
                      f"target={p.gamma}, rel err {rel:.4f} (tol 0.05)")


def _run_sphere_mixing(cfg: dict, rep: Report) -> None:
    rng = rng_stream(cfg["seed"], _exp_index("sphere-mixing"), 0)
    n = int(cfg["n_paths"])
    substep = cfg["dt"]
    pts0 = sphere.uniform_point(rng, n)
    pts = pts0.copy()
    checkpoints = (0.5, 1.0, 2.0)
    t = 0.0
    corr = {}
    all_ok = True
    for tc in checkpoints:
        k = int(round((tc - t) / substep))
        for _ in range(k):
            pts = sphere._step_many(pts, substep, rng)
        t = tc
        dots = np.sum(pts * pts0, axis=1)
        est = estimate_mean_ci(dots)
        target = math.exp(-tc)
        corr[str(tc)] = {"mean": est.mean, "stderr": est.stderr,
                         "target": target}
        ok = est.within(target, extra=5.0 * substep * target)
        all_ok &= ok
    rep.results["correlation"] = corr
    rep.add_criterion("correlation_decay", all_ok,
                      "E[theta_t . theta_0] vs exp(-t) at t in "
                      f"{checkpoints}: {corr}")
    k = int(round((cfg["t_max"] - t) / substep))
    for _ in range(k):
        pts = sphere._step_many(pts, substep, rng)
    counts = sphere.cell_histogram(pts, 48)
    stat, pval = chi_square_uniform(counts)
    rep.results["uniformity"] = {"chi2": stat, "p_value": pval}
    rep.add_criterion("uniformity", pval > 0.01,
                      f"48-cell chi-square p={pval:.4f} at t={cfg['t_max']} "
                      "(threshold 0.01)")
    rep.extras["final_points"] = pts
    if cfg["out_dir"] and cfg["format"] == "csv":
        sp = sphere.sphere_path(None, np.linspace(0.0, 2.0, 201),
                                rng_stream(cfg["seed"],
                                           _exp_index("sphere-mixing"), 1))
        sp.to_csv(f"{cfg['out_dir']}/sphere_path.csv")


def _run_x0_drift(cfg: dict, rep: Report) -> None:
    p = model.ModelParams(cfg["gamma"])
    rng = rng_stream(cfg["seed"], _exp_index("x0-drift"), 0)
    x = np.array([1.0, 0.0, 0.0])
    h = cfg["dt"]
    ests = skewprod.drift_statistic(p, x, h, int(cfg["n_paths"]), rng)
    target = model.drift_eval(p, x)
    rep.results["drift_estimate"] = [
        {"mean": e.mean, "stderr": e.stderr, "target": float(target[i])}
        for i, e in enumerate(ests)]
    bias_bound = 5.0 * h
    ok = all(e.within(float(target[i]), extra=bias_bound)
             for i, e in enumerate(ests))
    rep.add_criterion("drift_statistic", ok,
                      f"(E[X_h]-x)/h vs drift at x={x.tolist()}, h={h}, "
                      f"bias allowance {bias_bound}")


def _run_x0_generator(cfg: dict, rep: Report) -> None:
    p = model.ModelParams(cfg["gamma"])
    rng = rng_stream(cfg["seed"], _exp_index("x0-generator"), 0)
    x = np.array([1.0, 0.0, 0.0])
    h = cfg["dt"]

    def u(y):
        return math.exp(-float(np.dot(y, y)) / 2.0)

    def grad_u(y):
        return -np.asarray(y, dtype=float) * u(y)

    def lap_u(y):
        q = float(np.dot(y, y))
        return (q - 3.0) * u(y)

    est, target = skewprod.generator_check(p, (u, grad_u, lap_u), x, h,
                                           int(cfg["n_paths"]), rng)
    rep.results["generator"] = {"mean": est.mean, "stderr": est.stderr,
                                "target": target}
    ok = est.within(target, extra=5.0 * h)
    rep.add_criterion("generator_match", ok,
                      f"(E[u(X_h)]-u(x))/h = {est.mean:.4f} +/- "
                      f"{est.stderr:.4f}, generator value {target:.4f}, "
                      f"bias allowance {5.0 * h}")


def _run_timechange_blowup(cfg: dict, rep: Report) -> None:
    p = model.ModelParams(cfg["gamma"])
    dt = cfg["dt"]
    deltas = (1e-2, 1e-3, 1e-4)
    sim = radial.SimConfig(dt, cfg["t_max"], 1, cfg["seed"])
    values = {d: [] for d in deltas}
    n_absorbed = 0
    for i in range(int(cfg["n_paths"])):
        rng = rng_stream(cfg["seed"], _exp_index("timechange-blowup"), i)
        path = radial.sample_absorbed_path(p, 1.0, sim, rng)
        if not path.absorbed:
            continue
        k_abs = path.absorption_index
        if k_abs <= int(round(max(deltas) / dt)):
            continue
        n_absorbed += 1
        inc, _ = skewprod.clock_increments(path.values, dt, cap=np.inf)
        A = np.concatenate([[0.0], np.cumsum(inc)])
        for d in deltas:
            values[d].append(float(A[k_abs - int(round(d / dt))]))
    medians = {str(d): float(np.median(values[d])) for d in deltas}
    ratio = medians[str(deltas[-1])] / medians[str(deltas[0])]
    rep.results["median_A"] = medians
    rep.results["blowup_ratio"] = ratio
    rep.results["n_absorbed"] = n_absorbed
    rep.add_criterion("blowup_ratio", ratio >= 10.0,
                      f"median A(tau-1e-4)/median A(tau-1e-2) = {ratio:.2f} "
                      "(threshold 10); the clock diverges logarithmically "
                      "in delta, so the ratio grows only slowly")


def _run_x_invariant(cfg: dict, rep: Report) -> None:
    p = model.ModelParams(cfg["gamma"])
    rng = rng_stream(cfg["seed"], _exp_index("x-invariant"), 0)
    # |X| of the assembled process is by construction the reflected radial
    # path, so the long-run law is sampled from the radial engine; the
    # pointwise identity itself is checked on a short assembled path.
    samples, _ = _reflected_thinned_samples(p, cfg, n_per_path=40,
                                            spacing=0.5, burn_in=2.0, rng=rng)
    ks = ks_statistic(samples, exp_cdf(2.0 * p.gamma))
    rep.results["ks_distance"] = ks
    rep.results["n_samples"] = len(samples)
    rep.add_criterion("invariant_ks", ks < 0.02,
                      f"KS(|X| long run, Exp(2*gamma)) = {ks:.4f} (tol 0.02)")

    sim = radial.SimConfig(cfg["dt"], 2.0, 1, cfg["seed"])
    rng2 = rng_stream(cfg["seed"], _exp_index("x-invariant"), 1)
    path3 = excursion.assemble_x(p, np.array([1.0, 0.0, 0.0]), sim, rng2)
    mod = np.linalg.norm(path3.points, axis=1)
    keep = np.ones(len(mod), dtype=bool)
    keep[path3.zero_hits] = False
    err = float(np.max(np.abs(mod[keep] - path3.radii[keep])))
    rep.results["modulus_identity_error"] = err
    rep.add_criterion("modulus_identity", err < 1e-12,
                      f"max | |X| - r | off zeros = {err:.2e}")
    rep.extras["samples"] = samples
    if cfg["out_dir"] and cfg["format"] == "csv":
        path3.to_csv(f"{cfg['out_dir']}/x_path.csv")


def _run_x_regular_origin(cfg: dict, rep: Report) -> None:
    p = model.ModelParams(cfg["gamma"])
    rng = rng_stream(cfg["seed"], _exp_index("x-regular-origin"), 0)
    dt = cfg["dt"]
    floor = excursion.default_floor(dt)
    n_steps = int(round(cfg["t_max"] / dt))
    n_paths = int(cfg["n_paths"])
    vals, _ = radial.reflected_steps(p, np.zeros(n_paths), n_steps, dt, rng)
    below = vals[1:] < floor  # grid zeros at strictly positive times
    # a grid path can straddle a zero of the continuous path without any
    # grid value dipping below the floor; the bridge-minimum test detects
    # those crossings, exactly as in the absorbed sampler
    u = rng.random((n_steps, n_paths))
    bridge = u < radial.bridge_hit_probability(vals[:-1], vals[1:], dt)
    returned = np.any(below | bridge, axis=0)
    frac = float(returned.mean())
    rep.results["return_fraction"] = frac
    rep.results["return_fraction_grid_only"] = float(np.any(below, axis=0).mean())
    rep.add_criterion("origin_regular", frac >= 0.99,
                      f"fraction re-touching 0 within t={cfg['t_max']} at "
                      f"dt={dt}: {frac:.4f} (threshold 0.99)")


def _run_excursion_coverage(cfg: dict, rep: Report) -> None:
    p = model.ModelParams(cfg["gamma"])
    dt = cfg["dt"]
    floor = 0.1 * math.sqrt(dt)
    sim = radial.SimConfig(dt, cfg["t_max"], 1, cfg["seed"])
    rng = rng_stream(cfg["seed"], _exp_index("excursion-coverage"), 0)
    path = radial.sample_reflected_path(p, 0.0, sim, rng)
    records = excursion.extract_excursions(path, floor=floor)
    max_qualifying = int(cfg["n_paths"])

    anchors, inc_lists, kept = [], [], []
    cap = skewprod.DEFAULT_CAP
    for i, exc in enumerate(records):
        stream = rng_stream(cfg["seed"], _exp_index("excursion-coverage"),
                            1, i)
        m = len(exc.rho)
        exc.U = float(stream.random())
        exc.anchor = int(np.clip(round(exc.U * exc.zeta / exc.dt) - 1,
                                 0, m - 1))
        inc = excursion._branch_increments(exc.rho, dt, cap)
        inc_pos = inc[exc.anchor + 1:]
        inc_neg = inc[:exc.anchor + 1][::-1]
        exc.span_pos = float(inc_pos.sum())
        exc.span_neg = float(inc_neg.sum())
        if min(exc.span_neg, exc.span_pos) < 20.0:
            continue
        anchor = sphere.uniform_point(stream)
        anchors.extend([anchor, anchor])
        inc_lists.extend([inc_neg, inc_pos])
        kept.append(exc)
        if len(kept) >= max_qualifying:
            break
    if not kept:
        raise ConfigError("no qualifying excursions; increase t_max")
    cov_rng = rng_stream(cfg["seed"], _exp_index("excursion-coverage"), 2)
    counts = excursion.branch_cell_coverage(np.array(anchors), inc_lists,
                                            cov_rng, n_cells=48,
                                            max_substep=0.002)
    per_exc = counts.reshape(-1, 2).min(axis=1)
    need = math.ceil(0.9 * 48)
    frac = float(np.mean(per_exc >= need))
    rep.results["n_excursions"] = len(records)
    rep.results["n_qualifying"] = len(kept)
    rep.results["coverage_fraction"] = frac
    rep.results["min_cells_required"] = need
    rep.add_criterion("coverage", frac >= 0.95,
                      f"{frac:.3f} of {len(kept)} qualifying excursions "
                      f"cover >= {need}/48 cells on both branches "
                      "(threshold 0.95)")
    rep.extras["branch_counts"] = counts
    if cfg["out_dir"]:
        excursion.inventory_json(
            kept, f"{cfg['out_dir']}/excursion_inventory.json",
            coverage=per_exc)


def _run_tv_divergence(cfg: dict, rep: Report) -> None:
    p = model.ModelParams(cfg["gamma"])
    n_grid = (2, 4, 8, 16, 32, 64)
    sim = radial.SimConfig(cfg["dt"], cfg["t_max"], int(cfg["n_paths"]),
                           cfg["seed"])
    rng = rng_stream(cfg["seed"], _exp_index("tv-divergence"), 0)
    report = fukushima.total_variation_report(p, cfg["t_max"], n_grid, sim,
                                              rng, config=dict(cfg))
    rep.results["tv_estimates"] = [
        {"n": n, "mean": e.mean, "stderr": e.stderr,
         "oracle": fukushima.tv_oracle(p, cfg["t_max"], n)}
        for n, e in zip(report.n_grid, report.tv_estimates)]
    rep.results["fitted_slope"] = report.fitted_slope
    rep.results["target_slope"] = report.target_slope
    rel = abs(report.fitted_slope - report.target_slope) / report.target_slope
    rep.add_criterion("tv_slope", rel < 0.10,
                      f"slope of E[TV] vs ln n = {report.fitted_slope:.3f}, "
                      f"target {report.target_slope} (tol 10%); the "
                      "stationary-weighted variation grows like "
                      "2*gamma*T*ln n only up to a level-dependent "
                      "normalization, which tilts the finite-n fit")
    rep.extras["variation_report"] = report
    if cfg["out_dir"]:
        report.to_json(f"{cfg['out_dir']}/variation_report.json")


def _run_approx_converge(cfg: dict, rep: Report) -> None:
    p = model.ModelParams(cfg["gamma"])
    n_samples = int(cfg["n_paths"])
    t = cfg["t_max"]

    # |X_t| ensemble from x0 = (1,0,0): the modulus is the reflected
    # radial diffusion, stepped exactly in law.
    rng_x = rng_stream(cfg["seed"], _exp_index("approx-converge"), 0)
    n_steps = int(round(t / 1e-3))
    x_mod, _ = radial.reflected_steps(p, np.ones(n_samples), n_steps, 1e-3,
                                      rng_x, keep_paths=False)

    ks_by_n = {}
    oracle_by_n = {}
    for j, n in enumerate((2, 8, 64)):
        tp = approx.TruncParams(p, n)
        dt_n = cfg["dt"] if n >= 32 else 5e-4
        rng_n = rng_stream(cfg["seed"], _exp_index("approx-converge"), 1, j)
        x0s = np.tile([1.0, 0.0, 0.0], (n_samples, 1))
        pts = approx.xn_ensemble_final(tp, x0s, t, dt_n, rng_n)
        ks_by_n[str(n)] = approx.compare_radial_law(
            x_mod, np.linalg.norm(pts, axis=1))
        # stationary-law oracle: start from the exact stationary law and
        # check the scheme stays on it
        rng_s = rng_stream(cfg["seed"], _exp_index("approx-converge"), 2, j)
        starts = approx.stationary_start_points(tp, rng_s, n_samples)
        pts_s = approx.xn_ensemble_final(tp, starts, t, dt_n, rng_s)
        oracle_by_n[str(n)] = ks_statistic(
            np.linalg.norm(pts_s, axis=1),
            lambda r, tp=tp: approx.stationary_radial_cdf(tp, r))
    rep.results["ks_vs_x"] = ks_by_n
    rep.results["ks_vs_stationary_oracle"] = oracle_by_n
    rep.add_criterion("marginal_convergence", ks_by_n["64"] < 0.05,
                      f"KS(|X^64_{t}|, |X_{t}|) = {ks_by_n['64']:.4f} "
                      "(tol 0.05)")
    worst = max(oracle_by_n.values())
    rep.add_criterion("stationary_oracle", worst < 0.03,
                      f"max KS vs (psi^n)^2 r^2 oracle = {worst:.4f} "
                      "(tol 0.03)")
    rep.extras["x_mod"] = x_mod


def _run_integrability(cfg: dict, rep: Report) -> None:
    table = {d: excursion.lifetime_integrability(d) for d in (2, 3, 4, 5)}
    rep.results["integrability"] = {str(d): v for d, v in table.items()}
    expected = {2: True, 3: True, 4: False, 5: False}
    rep.add_criterion("integrability_table", table == expected,
                      f"lifetime integrability by dimension: {table}")


_RUNNERS: Dict[str, Callable[[dict, Report], None]] = {
    "capacity": _run_capacity,
    "eigen": _run_eigen,
    "radial-absorb": _run_radial_absorb,
    "radial-stationary": _run_radial_stationary,
    "regulator": _run_regulator,
    "sphere-mixing": _run_sphere_mixing,
    "x0-drift": _run_x0_drift,
    "x0-generator": _run_x0_generator,
    "timechange-blowup": _run_timechange_blowup,
    "x-invariant": _run_x_invariant,
    "x-regular-origin": _run_x_regular_origin,
    "excursion-coverage": _run_excursion_coverage,
    "tv-divergence": _run_tv_divergence,
    "approx-converge": _run_approx_converge,
    "integrability": _run_integrability,
}


def run_experiment(config: dict) -> Report:
    """Run one named experiment from a flat config dict."""
    cfg = normalize_config(config)
    echo = {k: cfg.get(k) for k in CONFIG_KEYS}
    rep = Report(cfg["experiment"], echo)
    t0 = time.perf_counter()
    _RUNNERS[cfg["experiment"]](cfg, rep)
    rep.wall_clock = time.perf_counter() - t0
    if cfg["out_dir"]:
        rep.to_json(f"{cfg['out_dir']}/report_{cfg['experiment']}.json")
    return rep
