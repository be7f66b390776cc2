"""Measurement layer: Hadamard-test shots and amplitude estimation.

Canonical amplitude estimation is simulated exactly through its phase
estimation outcome law; the unbiased estimator is emulated at the level of
its bias/variance contract.  The two node-by-node pipelines (Hadamard test
and per-node amplitude estimation, biased or unbiased) live here as well.

Signed per-node expectations f in [-1, 1] are shifted to amplitudes
a = (1 + f) / 2 before estimation and unshifted afterwards; the factor-2
precision loss is absorbed into the depth constants.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .dynamics import QuantumState, QueryLedger, Scenario, drift_integral, expectation, true_value
from .quadrature import QuadratureRule, composite, weight_sq_norm

__all__ = [
    "AEConfig",
    "EstimateReport",
    "hadamard_shot",
    "ae_outcome_distribution",
    "ae_sample",
    "ae_sample_many",
    "ae_estimate",
    "unbiased_ae_sample",
    "pipeline_hadamard",
    "pipeline_hs_ae",
    "node_values",
    "HOEFFDING_CONST",
    "MEDIAN_CONST",
    "DEPTH_CONST",
]

# exposed tuning constants (config-overridable through the pipelines)
HOEFFDING_CONST = 16.0          # shot count 16 * sum(w^2) * ln(8/delta) / eps^2
MEDIAN_CONST = 18.0             # median amplification: ceil(18 ln(2/eta)) repeats
DEPTH_CONST = 8.0 * math.pi     # grid size ceil(C / target-amplitude-error)


@dataclass
class AEConfig:
    """Grid size, failure probability, and median amplification count."""

    r: int
    eta: float
    reps: int | None = None

    def __post_init__(self):
        if self.r < 2:
            raise ValueError("grid parameter r must be at least 2")
        if not 0.0 < self.eta < 1.0:
            raise ValueError("eta must lie in (0, 1)")
        if self.reps is None:
            self.reps = max(1, math.ceil(MEDIAN_CONST * math.log(2.0 / self.eta)))
        if self.reps < 1:
            raise ValueError("reps must be positive")

    @property
    def depth(self) -> int:
        return self.r * self.reps


@dataclass
class EstimateReport:
    """One pipeline run: estimate, ground truth, and the ledger snapshot."""

    pipeline: str
    estimate: float
    true_value: float
    target_eps: float
    target_delta: float
    ledger: dict[str, int]
    depth: int
    shots: int = 0
    scenario_label: str = ""
    horizon_T: float = 0.0
    abs_error: float = field(init=False)

    def __post_init__(self):
        self.abs_error = abs(self.estimate - self.true_value)


def hadamard_shot(
    state: QuantumState, observable: np.ndarray, part: str, rng: np.random.Generator
) -> int:
    """One +/-1 Hadamard-test outcome for Re or Im of <psi|O|psi>.

    Returns +1 with probability (1 + v)/2 where v is the requested part of
    the expectation value, so the shot mean equals v exactly.
    """
    amps = state.amplitudes
    val = complex(amps.conj() @ (observable @ amps))
    v = val.real if part == "Re" else val.imag
    if abs(v) > 1.0 + 1e-12:
        raise ValueError(f"|<O>| = {abs(v)} > 1; observable norm exceeds 1")
    p = 0.5 * (1.0 + min(1.0, max(-1.0, v)))
    return 1 if rng.random() < p else -1


def _shot_mean(v: float, n_shots: int, rng: np.random.Generator) -> float:
    """Mean of n_shots +/-1 Bernoulli shots with success prob (1+v)/2."""
    p = 0.5 * (1.0 + min(1.0, max(-1.0, v)))
    ones = rng.binomial(n_shots, p)
    return (2.0 * ones - n_shots) / n_shots


@lru_cache(maxsize=4096)
def ae_outcome_distribution(a: float, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Phase-estimation outcome law for amplitude a on an r-point grid.

    Returns (estimates, probabilities): outcome m in 0..r-1 occurs with
    probability sin^2(r*pi*d) / (r^2 sin^2(pi*d)), d = theta/pi - m/r,
    theta = arcsin(sqrt(a)), and yields the estimate sin^2(pi*m/r).
    """
    if not 0.0 <= a <= 1.0:
        raise ValueError("amplitude must lie in [0, 1]")
    omega = math.asin(math.sqrt(a)) / math.pi
    m = np.arange(r)
    delta = omega - m / r
    probs = np.empty(r)
    on_grid = np.isclose(delta, np.round(delta), atol=1e-15)
    with np.errstate(divide="ignore", invalid="ignore"):
        probs = (np.sin(r * np.pi * delta) / (r * np.sin(np.pi * delta))) ** 2
    probs[on_grid] = 1.0
    total = probs.sum()
    if not math.isclose(total, 1.0, rel_tol=1e-6):
        raise AssertionError(f"outcome law sums to {total}, not 1")
    probs = probs / total
    estimates = np.sin(np.pi * m / r) ** 2
    return estimates, probs


def ae_sample(a: float, r: int, rng: np.random.Generator) -> float:
    """One draw of canonical amplitude estimation at grid size r."""
    return ae_sample_many(a, r, 1, rng)[0]


def ae_sample_many(a: float, r: int, size: int, rng: np.random.Generator) -> np.ndarray:
    estimates, probs = ae_outcome_distribution(float(a), int(r))
    idx = rng.choice(r, size=size, p=probs)
    return estimates[idx]


def ae_estimate(a: float, cfg: AEConfig, rng: np.random.Generator) -> float:
    """Median of cfg.reps canonical-estimation draws."""
    draws = ae_sample_many(a, cfg.r, cfg.reps, rng)
    return float(np.median(draws))


def unbiased_ae_sample(
    p: float,
    r: int,
    eta: float,
    rng: np.random.Generator,
    bias: float | None = None,
) -> float:
    """Contract-level draw of the unbiased amplitude estimator.

    Returns p + B + xi clamped to [-2 pi, 2 pi], with |B| <= eta (drawn
    uniformly here unless a per-run bias is supplied) and xi zero-mean
    Gaussian with variance 91 p / r^2, so both contract inequalities
    |E - p| <= eta and Var <= 91 p / r^2 + eta hold by construction.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    b = rng.uniform(-eta, eta) if bias is None else bias
    if abs(b) > eta:
        raise ValueError("per-run bias exceeds eta")
    xi = rng.normal(0.0, math.sqrt(91.0 * p) / r) if p > 0 else 0.0
    return float(np.clip(p + b + xi, -2.0 * math.pi, 2.0 * math.pi))


# ---------------------------------------------------------------------------
# node sampling shared by the per-node pipelines

def node_values(
    scenario: Scenario, rule: QuadratureRule, tol: float = 1e-12
) -> np.ndarray:
    """Exact modulated expectations f_k at the rule's nodes."""
    vals = np.empty(rule.n_t)
    for k, t in enumerate(rule.nodes):
        psi = QuantumState(scenario.reference_state(t, tol=tol), normalize=True)
        vals[k] = expectation(psi, scenario, t)
    return vals


def _charge_node(
    ledger: QueryLedger, scenario: Scenario, t: float, copies: int
) -> None:
    ledger.charge_propagation(scenario.hamiltonian.norm_bound, t, copies=copies)
    ledger.charge_observable(copies)


def pipeline_hadamard(
    scenario: Scenario,
    eps: float,
    delta: float,
    rng: np.random.Generator,
    ledger: QueryLedger,
    rule: QuadratureRule | None = None,
    hoeffding_const: float = HOEFFDING_CONST,
) -> EstimateReport:
    """Node-by-node Hadamard-test estimation of the accumulated cost.

    Every node is estimated from N_s independent +/-1 shots with
    N_s = ceil(C * sum(w^2) * ln(8/delta) / eps^2), sized so the weighted
    Hoeffding bound (with the real/imaginary union bound) delivers total
    sampling error eps/2; the quadrature rule contributes the other eps/2.
    """
    if not (0 < eps < 1 and 0 < delta < 1):
        raise ValueError("eps and delta must lie in (0, 1)")
    T = scenario.horizon_T
    rule = composite(T, eps) if rule is None else rule
    s2 = weight_sq_norm(rule)
    n_shots = math.ceil(hoeffding_const * s2 * math.log(8.0 / delta) / eps**2)
    draw_im = scenario.modulation.active

    f = node_values(scenario, rule)
    acc = 0.0
    for k, t in enumerate(rule.nodes):
        f_tilde = _shot_mean(f[k], n_shots, rng)
        copies = n_shots
        if draw_im:
            # Hermitian integrand: the imaginary shots average to zero and
            # only the real part enters the estimate
            _shot_mean(0.0, n_shots, rng)
            copies = 2 * n_shots
        _charge_node(ledger, scenario, t, copies)
        acc += rule.weights[k] * f_tilde

    estimate = scenario.observable.scale * acc + drift_integral(scenario)
    return EstimateReport(
        pipeline="hadamard",
        estimate=estimate,
        true_value=true_value(scenario),
        target_eps=eps,
        target_delta=delta,
        ledger=ledger.snapshot(),
        depth=1,
        shots=n_shots,
        scenario_label=scenario.label,
        horizon_T=T,
    )


def pipeline_hs_ae(
    scenario: Scenario,
    eps: float,
    delta: float,
    variant: str,
    rng: np.random.Generator,
    ledger: QueryLedger,
    rule: QuadratureRule | None = None,
    depth_const: float = DEPTH_CONST,
) -> EstimateReport:
    """Per-node amplitude estimation, biased or unbiased variant.

    Biased: each node is estimated to eps/(2T) by a canonical-AE median at
    grid size r = ceil(C * T / eps), failure budget split over the nodes.

    Unbiased: each node is sampled once per sweep from the contract-level
    estimator with a single fixed per-run bias (the adversarial case the
    median-of-means step must survive); the median over O(log 1/delta)
    sweeps is returned.  Grid size r = ceil(8 sqrt(364 sum(w^2)) / eps)
    keeps the weighted noise variance at (eps/8)^2.
    """
    if variant not in ("biased", "unbiased"):
        raise ValueError(f"unknown variant {variant!r}")
    if not (0 < eps < 1 and 0 < delta < 1):
        raise ValueError("eps and delta must lie in (0, 1)")
    T = scenario.horizon_T
    rule = composite(T, eps) if rule is None else rule
    f = node_values(scenario, rule)
    a = np.clip(0.5 * (1.0 + f), 0.0, 1.0)

    if variant == "biased":
        # per-node target eps/(2T) on f, i.e. eps/(4T) on the shifted
        # amplitude; r = ceil(2 pi / (eps/(4T))) = ceil(8 pi T / eps)
        r = max(2, math.ceil(depth_const * T / eps))
        r += r % 2  # even grid: a = 1 sits exactly on it
        eta_node = delta / rule.n_t
        cfg = AEConfig(r=r, eta=eta_node)
        acc = 0.0
        for k, t in enumerate(rule.nodes):
            a_tilde = ae_estimate(a[k], cfg, rng)
            acc += rule.weights[k] * (2.0 * a_tilde - 1.0)
            _charge_node(ledger, scenario, t, cfg.depth)
        estimate = scenario.observable.scale * acc + drift_integral(scenario)
        depth = cfg.depth
        n_sweeps = cfg.reps
    else:
        if eps / T > 0.1:
            warnings.warn(
                f"unbiased variant assumes eps/T << 1 (here {eps / T:.3g}); "
                "the residual bias may not be negligible",
                stacklevel=2,
            )
        s2 = weight_sq_norm(rule)
        r = max(2, math.ceil(8.0 * math.sqrt(364.0 * s2) / eps))
        eta = eps**2 / (8.0 * T)
        n_sweeps = max(1, math.ceil(8.0 * math.log(2.0 / delta)))
        run_bias = rng.uniform(-eta, eta)  # one fixed bias for the whole run
        sweep_estimates = np.empty(n_sweeps)
        for s in range(n_sweeps):
            acc = 0.0
            for k, t in enumerate(rule.nodes):
                p_tilde = unbiased_ae_sample(a[k], r, eta, rng, bias=run_bias)
                acc += rule.weights[k] * (2.0 * p_tilde - 1.0)
                _charge_node(ledger, scenario, t, r)
            sweep_estimates[s] = acc
        estimate = (
            scenario.observable.scale * float(np.median(sweep_estimates))
            + drift_integral(scenario)
        )
        depth = r

    return EstimateReport(
        pipeline=f"ae_{variant}",
        estimate=estimate,
        true_value=true_value(scenario),
        target_eps=eps,
        target_delta=delta,
        ledger=ledger.snapshot(),
        depth=depth,
        shots=n_sweeps,
        scenario_label=scenario.label,
        horizon_T=T,
    )
