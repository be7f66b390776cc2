"""Experiment runner: seeded trials, CSV rows, and log-log slope fits.

The interesting quantity for complexity measurements is the ledger's
Hamiltonian-query counter, which already folds in the circuit depth (every
reflection of an amplitude-estimation run is charged as a fresh
propagation), so the fitted cost is `h_queries` itself.

Determinism: per-trial generators come from a counter-based bit generator
spawned off the master seed with a (T-index, eps-index, trial) spawn key,
so results are independent of execution order and thread count.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .carleman import pipeline_carleman
from .dynamics import QueryLedger, Scenario
from .estimators import (
    DEPTH_CONST,
    HOEFFDING_CONST,
    EstimateReport,
    pipeline_hadamard,
    pipeline_hs_ae,
)
from .historystate import pipeline_lode
from .quadrature import composite
from .scenarios import build_scenario

__all__ = [
    "PIPELINES",
    "CSV_COLUMNS",
    "SweepConfig",
    "SlopeFit",
    "run_single",
    "run_config",
    "write_csv",
    "sweep_and_fit",
    "fit_loglog",
]

PIPELINES = ("hadamard", "ae_biased", "ae_unbiased", "lode", "carleman")

CSV_COLUMNS = [
    "pipeline", "scenario", "T", "eps", "delta", "seed",
    "estimate", "true_J", "abs_err",
    "h_queries", "sp_queries", "obs_queries", "depth", "wall_ms",
]


@dataclass
class SweepConfig:
    """One benchmarking job: a scenario/pipeline pair over (T, eps) grids."""

    scenario: str
    pipeline: str
    T_values: list[float]
    eps_values: list[float]
    delta: float = 0.05
    trials: int = 1
    seed: int = 0
    constants: dict[str, float] = field(default_factory=dict)
    scenario_params: dict = field(default_factory=dict)
    share_rule: bool = True
    timing: bool = False

    def __post_init__(self):
        if self.pipeline not in PIPELINES:
            raise ValueError(
                f"unknown pipeline {self.pipeline!r}; known: {', '.join(PIPELINES)}"
            )
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.T_values or not self.eps_values:
            raise ValueError("T_values and eps_values must be non-empty")
        if any(not 0.0 < e < 1.0 for e in self.eps_values):
            raise ValueError("every eps must lie in (0, 1)")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")


@dataclass
class SlopeFit:
    """Least-squares line through log10-log10 points."""

    x_name: str
    y_name: str
    slope: float
    intercept: float
    r_squared: float
    points: list[tuple[float, float]]


def fit_loglog(xs, ys, x_name: str = "x", y_name: str = "y") -> SlopeFit:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2:
        raise ValueError("need at least two points to fit a slope")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log fit needs strictly positive data")
    lx, ly = np.log10(xs), np.log10(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return SlopeFit(
        x_name=x_name,
        y_name=y_name,
        slope=float(slope),
        intercept=float(intercept),
        r_squared=min(1.0, max(0.0, r2)),
        points=list(zip(xs.tolist(), ys.tolist())),
    )


def _trial_rng(master_seed: int, t_idx: int, e_idx: int, trial: int):
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(t_idx, e_idx, trial))
    return np.random.Generator(np.random.Philox(ss))


def run_single(
    pipeline: str,
    scenario: Scenario,
    eps: float,
    delta: float,
    rng: np.random.Generator,
    rule=None,
    constants: dict[str, float] | None = None,
) -> EstimateReport:
    """Dispatch one pipeline run on a fresh ledger."""
    constants = constants or {}
    ledger = QueryLedger()
    if pipeline == "hadamard":
        return pipeline_hadamard(
            scenario, eps, delta, rng, ledger, rule=rule,
            hoeffding_const=constants.get("C_h", HOEFFDING_CONST),
        )
    if pipeline in ("ae_biased", "ae_unbiased"):
        return pipeline_hs_ae(
            scenario, eps, delta, pipeline.removeprefix("ae_"), rng, ledger,
            rule=rule, depth_const=constants.get("C", DEPTH_CONST),
        )
    if pipeline == "lode":
        return pipeline_lode(
            scenario, eps, delta, rng, ledger, rule=rule,
            depth_const=constants.get("C", DEPTH_CONST),
        )
    if pipeline == "carleman":
        return pipeline_carleman(
            scenario, eps, delta, rng, ledger, rule=rule,
            depth_const=constants.get("C", DEPTH_CONST),
        )
    raise ValueError(f"unknown pipeline {pipeline!r}")


def _report_row(report: EstimateReport, scenario_label: str,
                eps: float, seed: int, wall_ms: int) -> dict:
    return {
        "pipeline": report.pipeline,
        "scenario": scenario_label,
        "T": repr(float(report.horizon_T)),
        "eps": repr(float(eps)),
        "delta": repr(float(report.target_delta)),
        "seed": seed,
        "estimate": repr(float(report.estimate)),
        "true_J": repr(float(report.true_value)),
        "abs_err": repr(float(report.abs_error)),
        "h_queries": report.ledger["h_queries"],
        "sp_queries": report.ledger["sp_queries"],
        "obs_queries": report.ledger["obs_queries"],
        "depth": report.depth,
        "wall_ms": wall_ms,
    }


def run_config(config: SweepConfig) -> list[dict]:
    """Execute every (T, eps, trial) cell and return ordered CSV rows.

    With ``share_rule`` the quadrature rule along the eps axis is built
    once per T at the smallest eps, so node counts do not drift with the
    target accuracy inside a sweep (the finer rule is valid for every
    larger eps).  Rows are ordered by (T, eps, trial).
    """
    rows = []
    eps_min = min(config.eps_values)
    for t_idx, T in enumerate(sorted(config.T_values)):
        scenario = build_scenario(config.scenario, T, **config.scenario_params)
        c_quad = config.constants.get("c", 1.0)
        shared = composite(T, eps_min, c=c_quad) if config.share_rule else None
        for e_idx, eps in enumerate(sorted(config.eps_values)):
            rule = shared if config.share_rule else composite(T, eps, c=c_quad)
            for trial in range(config.trials):
                rng = _trial_rng(config.seed, t_idx, e_idx, trial)
                t0 = time.perf_counter()
                report = run_single(
                    config.pipeline, scenario, eps, config.delta, rng,
                    rule=rule, constants=config.constants,
                )
                wall = int(1000 * (time.perf_counter() - t0)) if config.timing else 0
                rows.append(_report_row(report, config.scenario, eps, trial, wall))
    return rows


def write_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def sweep_and_fit(config: SweepConfig, rows: list[dict] | None = None) -> dict[str, SlopeFit]:
    """Fit the mean Hamiltonian-query cost against T and against 1/eps.

    The T-axis fit holds eps at the smallest configured value; the
    eps-axis fit holds T at the smallest configured horizon.  Requires at
    least two values on an axis for its fit to be produced.  Pass the rows
    from an earlier ``run_config`` call to avoid re-running the trials.
    """
    if rows is None:
        rows = run_config(config)
    fits: dict[str, SlopeFit] = {}

    eps_fixed = repr(min(config.eps_values))
    t_fixed = repr(min(config.T_values))

    def mean_cost(selector) -> dict[float, float]:
        buckets: dict[float, list[int]] = {}
        for row in rows:
            key = selector(row)
            if key is None:
                continue
            buckets.setdefault(key, []).append(row["h_queries"])
        return {k: float(np.mean(v)) for k, v in sorted(buckets.items())}

    if len(config.T_values) >= 2:
        by_T = mean_cost(
            lambda r: float(r["T"]) if r["eps"] == eps_fixed else None
        )
        fits["T"] = fit_loglog(
            list(by_T), list(by_T.values()), x_name="T", y_name="h_queries"
        )
    if len(config.eps_values) >= 2:
        by_eps = mean_cost(
            lambda r: float(r["eps"]) if r["T"] == t_fixed else None
        )
        inv_eps = [1.0 / e for e in by_eps]
        fits["eps"] = fit_loglog(
            inv_eps, list(by_eps.values()), x_name="1/eps", y_name="h_queries"
        )
        # report against eps itself: slope in eps is minus the 1/eps slope
        fits["eps"].slope = -fits["eps"].slope
        fits["eps"].x_name = "eps"
        fits["eps"].points = list(zip(by_eps, by_eps.values()))
    return fits
