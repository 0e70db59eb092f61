"""Batch experiment harness: recovery grids, tau sweeps, bound suites.

Every trial is seeded as hash(base_seed, cell index, trial index), runs
independently in a thread pool, and yields exactly one record; record order
in the output is by (cell, trial) index regardless of completion order, so
a fixed config reproduces byte-identical CSV except for the wall_time column.
"""

import csv
import hashlib
import itertools
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import certificate as cert
from .linops import frob, project_support, project_tangent
from .model import build_instance, incoherence
from .solver import SolverOptions, recovery_error, solve
from .svgplot import heatmap_svg, line_svg
from .validation import check_count, check_scalar, check_seed

__all__ = [
    "ExperimentConfig",
    "ExperimentRecord",
    "trial_seed",
    "phase_grid",
    "tau_sweep",
    "lemma_suite",
    "write_records",
    "read_records",
    "records_digest",
    "DEFAULT_SWEEP_MULTIPLIERS",
]

DEFAULT_SWEEP_MULTIPLIERS = (1e-3, 1e-2, 1e-1, 1.0, 10.0)

RECORD_HEADER = [
    "n", "r", "rho", "p", "cell_index", "trial_index", "seed", "tau_mode",
    "tau_multiplier", "lam", "tau_used", "err_l", "err_s", "support_f1",
    "iters", "converged", "mu_measured", "wall_time", "status",
]


@dataclass
class ExperimentConfig:
    n: int
    r_values: list
    rho_values: list
    p_values: list
    trials_per_cell: int = 10
    tau_mode: str = "criterion"
    sweep_multipliers: list | None = None
    success_threshold: float = 1e-3
    base_seed: int = 0
    output_dir: str = "."
    threads: int = 1
    magnitude: float = 1.0
    tol: float = 1e-7
    max_iters: int = 50000

    def __post_init__(self):
        check_count(self.n, "n", minimum=1)
        for name, values in (("r_values", self.r_values),
                             ("rho_values", self.rho_values),
                             ("p_values", self.p_values)):
            if not values:
                raise ValueError(f"{name} must be non-empty")
        for r in self.r_values:
            check_count(r, "r", minimum=1)
        for rho in self.rho_values:
            check_scalar(rho, "rho", minimum=0.0, maximum=1.0)
        for p in self.p_values:
            check_count(p, "p", minimum=0)
        check_count(self.trials_per_cell, "trials_per_cell", minimum=1)
        if self.tau_mode not in ("criterion", "oracle", "sweep"):
            raise ValueError(f"unknown tau_mode {self.tau_mode!r}")
        check_scalar(self.success_threshold, "success_threshold",
                     minimum=0.0, exclusive_min=True)
        check_seed(self.base_seed, "base_seed")
        check_count(self.threads, "threads", minimum=1)
        check_scalar(self.magnitude, "magnitude", minimum=0.0, exclusive_min=True)
        if self.sweep_multipliers is not None:
            if not self.sweep_multipliers:
                raise ValueError("sweep_multipliers must be non-empty")
            for mult in self.sweep_multipliers:
                check_scalar(mult, "multiplier", minimum=0.0, exclusive_min=True)

    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            data = json.load(f)
        return cls(**data)

    def to_json(self, path):
        with open(path, "w") as f:
            json.dump(asdict(self), f, indent=2, sort_keys=True)
            f.write("\n")

    def solver_options(self):
        return SolverOptions(max_iters=self.max_iters, tol_feas=self.tol,
                             tol_fix=self.tol)

    def cells(self):
        return list(itertools.product(self.r_values, self.rho_values,
                                      self.p_values))


@dataclass
class ExperimentRecord:
    n: int
    r: int
    rho: float
    p: int
    cell_index: int
    trial_index: int
    seed: int
    tau_mode: str
    tau_multiplier: float
    lam: float
    tau_used: float
    err_l: float
    err_s: float
    support_f1: float
    iters: int
    converged: bool
    mu_measured: float
    wall_time: float
    status: str = "ok"

    def success(self, threshold):
        return (self.converged and self.err_l <= threshold
                and self.err_s <= threshold)


def trial_seed(base_seed, cell_index, trial_index):
    """Stable 64-bit per-trial seed; no reuse across cells."""
    digest = hashlib.sha256(
        f"{base_seed}:{cell_index}:{trial_index}".encode()
    ).digest()
    return int.from_bytes(digest[:8], "little")


def _run_trial(config, cell_index, r, rho, p, trial_index, multiplier=1.0):
    seed = trial_seed(config.base_seed, cell_index, trial_index)
    base = dict(n=config.n, r=r, rho=rho, p=p, cell_index=cell_index,
                trial_index=trial_index, seed=seed, tau_mode=config.tau_mode,
                tau_multiplier=multiplier, lam=float("nan"),
                tau_used=float("nan"), err_l=float("nan"),
                err_s=float("nan"), support_f1=float("nan"), iters=0,
                converged=False, mu_measured=float("nan"), wall_time=0.0)
    if r > config.n:
        return ExperimentRecord(**base, status="invalid: r > n")
    start = time.perf_counter()
    try:
        mode = "criterion" if config.tau_mode == "sweep" else config.tau_mode
        inst = build_instance(config.n, r, rho, p, magnitude=config.magnitude,
                              seed=seed, tau_mode=mode)
        if multiplier != 1.0:
            inst = inst.with_tau(multiplier * inst.tau)
        sol = solve(inst, config.solver_options())
        err_l, err_s, f1 = recovery_error(sol, inst.truth)
        mu, _ = incoherence(inst.truth.l0)
        base.update(lam=inst.lam, tau_used=inst.tau, err_l=err_l, err_s=err_s,
                    support_f1=f1, iters=sol.iters, converged=sol.converged,
                    mu_measured=mu)
        status = "ok"
    except Exception as exc:  # record the failure, never abort the grid
        status = f"error: {exc}"
    base["wall_time"] = time.perf_counter() - start
    return ExperimentRecord(**base, status=status)


def _run_pool(config, tasks):
    """tasks: list of argument tuples for _run_trial, in output order."""
    if config.threads == 1:
        return [_run_trial(config, *t) for t in tasks]
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        futures = [pool.submit(_run_trial, config, *t) for t in tasks]
        return [f.result() for f in futures]


def phase_grid(config):
    """Recovery success map over the (r, rho, p) grid; writes CSV + SVG."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = config.cells()
    tasks = [(ci, r, rho, p, ti)
             for ci, (r, rho, p) in enumerate(cells)
             for ti in range(config.trials_per_cell)]
    records = _run_pool(config, tasks)
    write_records(out / "records.csv", records)

    rates = {}
    for ci, (r, rho, p) in enumerate(cells):
        cell_records = [rec for rec in records if rec.cell_index == ci]
        valid = [rec for rec in cell_records if not rec.status.startswith("invalid")]
        if valid:
            rate = float(np.mean([rec.success(config.success_threshold)
                                  for rec in valid]))
        else:
            rate = float("nan")
        rates[(r, rho, p)] = rate
    with open(out / "cell_rates.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["r", "rho", "p", "success_rate"])
        for (r, rho, p), rate in rates.items():
            writer.writerow([r, "%.17g" % rho, p, "%.17g" % rate])

    axes = {"r": config.r_values, "rho": config.rho_values,
            "p": config.p_values}
    names = list(axes)
    for i, j in itertools.combinations(range(3), 2):
        ax, ay = names[i], names[j]
        grid = []
        for vy in axes[ay]:
            row = []
            for vx in axes[ax]:
                vals = [rate for key, rate in rates.items()
                        if key[i] == vx and key[j] == vy and rate == rate]
                row.append(float(np.mean(vals)) if vals else float("nan"))
            grid.append(row)
        heatmap_svg(out / f"phase_{ax}_{ay}.svg", grid,
                    [f"{v:g}" for v in axes[ax]],
                    [f"{v:g}" for v in axes[ay]],
                    f"success rate over ({ax}, {ay})", x_name=ax, y_name=ay)

    summary = {
        "cells": len(cells),
        "trials_per_cell": config.trials_per_cell,
        "success_threshold": config.success_threshold,
        "overall_success_rate": float(np.nanmean(list(rates.values()))),
    }
    with open(out / "summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    return records, summary


def tau_sweep(config):
    """Sweep tau multipliers at the fixed cell (first entry of each axis)."""
    multipliers = config.sweep_multipliers or list(DEFAULT_SWEEP_MULTIPLIERS)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    r, rho, p = config.r_values[0], config.rho_values[0], config.p_values[0]
    records = []
    medians = []
    for ci, mult in enumerate(multipliers):
        tasks = [(ci, r, rho, p, ti, mult) for ti in range(config.trials_per_cell)]
        batch = _run_pool(config, tasks)
        records.extend(batch)
        ok = [rec for rec in batch if rec.status == "ok"]
        med_l = float(np.median([rec.err_l for rec in ok])) if ok else float("nan")
        med_s = float(np.median([rec.err_s for rec in ok])) if ok else float("nan")
        medians.append((mult, med_l, med_s))
    write_records(out / "records.csv", records)
    with open(out / "sweep.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["multiplier", "median_err_l", "median_err_s"])
        for mult, med_l, med_s in medians:
            writer.writerow(["%.17g" % mult, "%.17g" % med_l, "%.17g" % med_s])
    line_svg(out / "sweep.svg", [m for m, _, _ in medians],
             {"median err_l": [l for _, l, _ in medians],
              "median err_s": [s for _, _, s in medians]},
             f"tau sweep at (r={r}, rho={rho:g}, p={p})",
             x_name="tau multiplier", y_name="median relative error",
             log_x=True, log_y=True)
    return records, medians


def _margin_update(entry, passed, margin):
    entry["n_trials"] += 1
    entry["n_pass"] += passed
    if margin == margin and (entry["worst_margin"] != entry["worst_margin"]
                             or margin < entry["worst_margin"]):
        entry["worst_margin"] = margin


def lemma_suite(config):
    """Monte-Carlo pass rates for the certificate and norm-chain checks."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    r, rho, p = config.r_values[0], config.rho_values[0], config.p_values[0]
    checks = {}
    for name in ("correction_spectral", "correction_entrywise",
                 "pairwise_sum_bound", "subspace_tangent_bound",
                 "direct_sum_dimensions", "on_support_low_rank_chain",
                 "on_support_diff_chain", "low_rank_norm_chain", "xi_bound",
                 "neumann_series_norm"):
        checks[name] = {"n_trials": 0, "n_pass": 0,
                        "worst_margin": float("nan")}

    for trial in range(config.trials_per_cell):
        seed = trial_seed(config.base_seed, 0, trial)
        inst = build_instance(config.n, r, rho, p, magnitude=config.magnitude,
                              seed=seed, tau_mode="criterion")
        truth = inst.truth
        norm_m = frob(inst.m)

        res = cert.build_correction(truth.tangent, truth.l0, inst.tau, inst.q,
                                    truth.omega, method="least_squares",
                                    norm_m=norm_m)
        rep = cert.check_correction_bounds(res.w, truth.omega, inst.lam)
        _margin_update(checks["correction_spectral"], rep.spectral_ok,
                       rep.spectral_bound - rep.norm_w)
        _margin_update(checks["correction_entrywise"], rep.entry_ok,
                       rep.entry_bound - rep.off_support_inf)

        series_norm = res.product_norm**2 / (1.0 - res.product_norm**2)
        _margin_update(checks["neumann_series_norm"], series_norm <= 4.0 / 3.0,
                       4.0 / 3.0 - series_norm)

        def p_t(x, tangent=truth.tangent):
            return project_tangent(x, tangent)

        def p_o(x, omega=truth.omega):
            return project_support(x, omega)

        pair = cert.check_pairwise_sum_bound(p_t, p_o, inst.q.apply_qperp,
                                             config.n)
        _margin_update(checks["pairwise_sum_bound"],
                       pair.verdict == "checked" and pair.holds, pair.margin)

        tang = cert.check_subspace_tangent_bound(inst.q, truth.tangent)
        _margin_update(checks["subspace_tangent_bound"], tang.holds,
                       tang.margin)

        dims = cert.check_direct_sum_dimensions(inst.q, truth.tangent,
                                                truth.omega)
        _margin_update(checks["direct_sum_dimensions"], dims.holds,
                       float("nan"))

        on_l0 = frob(project_support(truth.l0, truth.omega))
        on_diff = frob(project_support(truth.l0 - truth.s0, truth.omega))
        norm_l0 = frob(truth.l0)
        sqrt3_3 = np.sqrt(3.0) / 3.0
        _margin_update(checks["on_support_low_rank_chain"],
                       on_l0 <= sqrt3_3 * norm_m, sqrt3_3 * norm_m - on_l0)
        bound_diff = np.sqrt(15.0) / 3.0 * norm_m
        _margin_update(checks["on_support_diff_chain"], on_diff <= bound_diff,
                       bound_diff - on_diff)
        bound_l0 = (sqrt3_3 + 2.0) * norm_m
        _margin_update(checks["low_rank_norm_chain"], norm_l0 <= bound_l0,
                       bound_l0 - norm_l0)
        xi_bound = r + sqrt3_3 + 2.0
        _margin_update(checks["xi_bound"], res.xi <= xi_bound,
                       xi_bound - res.xi)

    report = {
        "n": config.n, "r": r, "rho": rho, "p": p,
        "trials": config.trials_per_cell,
        "checks": {
            name: {
                "pass_rate": entry["n_pass"] / max(entry["n_trials"], 1),
                "n_trials": entry["n_trials"],
                "n_pass": entry["n_pass"],
                "worst_margin": entry["worst_margin"],
            }
            for name, entry in checks.items()
        },
    }
    with open(out / "lemma_suite.json", "w") as f:
        json.dump(report, f, indent=2, sort_keys=True, allow_nan=True)
        f.write("\n")
    return report


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def write_records(path, records):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(RECORD_HEADER)
        for rec in records:
            row = [_format_value(getattr(rec, name)) for name in RECORD_HEADER]
            writer.writerow(row)


def read_records(path):
    records = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != RECORD_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(RECORD_HEADER):
                raise ValueError(
                    f"{path}: line {line_no}: expected {len(RECORD_HEADER)} "
                    f"fields, got {len(row)}"
                )
            try:
                records.append(ExperimentRecord(
                    n=int(row[0]), r=int(row[1]), rho=float(row[2]),
                    p=int(row[3]), cell_index=int(row[4]),
                    trial_index=int(row[5]), seed=int(row[6]),
                    tau_mode=row[7], tau_multiplier=float(row[8]),
                    lam=float(row[9]), tau_used=float(row[10]),
                    err_l=float(row[11]), err_s=float(row[12]),
                    support_f1=float(row[13]), iters=int(row[14]),
                    converged=row[15] == "true", mu_measured=float(row[16]),
                    wall_time=float(row[17]), status=row[18],
                ))
            except ValueError as exc:
                raise ValueError(f"{path}: line {line_no}: {exc}") from exc
    return records


def records_digest(path, exclude=("wall_time",)):
    """Hash of a record CSV with the excluded columns blanked."""
    drop = set()
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        drop = {header.index(name) for name in exclude if name in header}
        digest = hashlib.sha256()
        digest.update(",".join(header).encode())
        for row in reader:
            kept = [v for i, v in enumerate(row) if i not in drop]
            digest.update(("\n" + ",".join(kept)).encode())
    return digest.hexdigest()
