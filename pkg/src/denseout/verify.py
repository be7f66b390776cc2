"""Self-contained invariant checks, runnable from the CLI.

Each suite re-derives the properties its module is supposed to guarantee
(weight positivity and exactness, outcome-law calibration, linear-system
residuals, closure identities) and reports them as named pass/fail
records; the CLI serializes them to JSON and exits non-zero on failure.
All randomness is internally seeded, so a verification run is
deterministic.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from . import carleman as _carleman
from . import historystate as _history
from .dynamics import HamiltonianSpec, ObservableSpec, QuantumState, QueryLedger, Scenario
from .estimators import ae_outcome_distribution, ae_sample_many, node_values, unbiased_ae_sample
from .quadrature import QuadratureRule, cc_single, composite, composite_with_points, weight_sq_norm
from .scenarios import (
    SCENARIO_LIBRARY,
    analytic_value,
    build_scenario,
    spectral_magnitude,
    spectroscopy_pair,
)

__all__ = ["CheckResult", "SUITES", "run_suite", "run_all"]

_SEED = 0x5EED


@dataclass
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> dict:
        return asdict(self)


def _check(suite: str, name: str, passed: bool, detail: str) -> CheckResult:
    return CheckResult(suite=suite, name=name, passed=bool(passed), detail=detail)


def _rng() -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(_SEED)))


def _random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (m + m.conj().T) / 2.0


def _random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def _random_constant_scenario(n: int, T: float, rng: np.random.Generator) -> Scenario:
    return Scenario(
        hamiltonian=HamiltonianSpec("constant", matrix=_random_hermitian(n, rng)),
        observable=ObservableSpec("constant", matrix=_random_hermitian(n, rng)),
        psi_in=QuantumState(_random_state(n, rng)),
        horizon_T=T,
        label=f"random-{n}",
    )


# ---------------------------------------------------------------------------
# quadrature

def verify_quadrature(extra_rules: list[QuadratureRule] | None = None) -> list[CheckResult]:
    out = []
    # the 3-point rule has the classic weights (1/3, 4/3, 1/3)
    _, w2 = cc_single(2)
    out.append(_check(
        "quadrature", "three-point-weights",
        bool(np.max(np.abs(w2 - np.array([1.0, 4.0, 1.0]) / 3.0)) <= 1e-14),
        f"weights {w2}",
    ))
    # polynomial exactness up to degree M
    worst = 0.0
    for M in (2, 4, 8, 16):
        x, w = cc_single(M)
        for d in range(M + 1):
            exact = 0.0 if d % 2 else 2.0 / (d + 1)
            worst = max(worst, abs(float(w @ x**d) - exact))
    out.append(_check(
        "quadrature", "polynomial-exactness", worst <= 1e-13,
        f"max degree-<=M error {worst:.3e}",
    ))
    # positivity and the squared-weight bound over the whole M range
    rules = [cc_single(M) for M in range(2, 65, 2)]
    pos_ok = all(np.all(w > 0) for _, w in rules)
    sq_ok = all(
        float(np.sum(w**2)) <= 36.0 * (M + 1) / M**2
        for M, (_, w) in zip(range(2, 65, 2), rules)
    )
    out.append(_check("quadrature", "weight-positivity", pos_ok,
                      "all single-segment weights positive for M in 2..64"))
    out.append(_check("quadrature", "weight-square-bound", sq_ok,
                      "sum(w^2) <= 36(M+1)/M^2 for M in 2..64"))
    for rule in (extra_rules or []):
        out.append(_check(
            "quadrature", "weight-positivity", bool(np.all(rule.weights > 0)),
            f"supplied composite rule with {rule.n_t} nodes",
        ))
        out.append(_check(
            "quadrature", "weights-sum-to-horizon",
            math.isclose(float(np.sum(rule.weights)), rule.horizon, rel_tol=1e-12),
            f"sum {float(np.sum(rule.weights))!r} vs T {rule.horizon!r}",
        ))
    # composite rules integrate to the horizon and hit the eps/2 budget
    sum_ok, err_ok, details = True, True, []
    for eps in (1e-2, 1e-4, 1e-6):
        T = 3.0
        rule = composite(T, eps)
        sum_ok &= math.isclose(float(np.sum(rule.weights)), T, rel_tol=1e-12)
        f = np.cos(rule.nodes) ** 2
        exact, _ = integrate.quad(lambda t: math.cos(t) ** 2, 0.0, T, epsabs=1e-14)
        err = abs(float(rule.weights @ f) - exact)
        err_ok &= err <= eps / 2.0
        details.append(f"eps={eps:g}: err={err:.3e}")
    out.append(_check("quadrature", "composite-sums-to-horizon", sum_ok, "T = 3"))
    out.append(_check("quadrature", "composite-error-budget", err_ok, "; ".join(details)))
    return out


# ---------------------------------------------------------------------------
# estimators

def verify_estimators() -> list[CheckResult]:
    out = []
    rng = _rng()
    # outcome law is a probability distribution
    norm_ok = True
    for a in (0.0, 0.17, 0.5, 0.93, 1.0):
        for r in (8, 64, 257):
            _, probs = ae_outcome_distribution(a, r)
            norm_ok &= math.isclose(float(probs.sum()), 1.0, rel_tol=1e-12)
            norm_ok &= bool(np.all(probs >= 0))
    out.append(_check("estimators", "outcome-law-normalized", norm_ok,
                      "nonnegative, sums to 1 on an (a, r) grid"))
    # empirical draws match the analytic law in total variation
    a, r, n_draws = 0.3, 16, 100_000
    estimates, probs = ae_outcome_distribution(a, r)
    draws = ae_sample_many(a, r, n_draws, rng)
    uniq = np.unique(estimates)
    emp = np.array([(draws == u).mean() for u in uniq])
    ana = np.array([probs[np.isclose(estimates, u)].sum() for u in uniq])
    tv = 0.5 * float(np.abs(emp - ana).sum())
    out.append(_check("estimators", "outcome-law-tv-distance", tv <= 0.01,
                      f"TV {tv:.4f} over {n_draws} draws"))
    # a single draw succeeds with probability >= 8/pi^2 (analytic mass)
    succ_ok, worst = True, 1.0
    for a in (0.1, 0.37, 0.62, 0.9):
        for r in (16, 64, 256):
            bound = 2 * math.pi * math.sqrt(a * (1 - a)) / r + math.pi**2 / r**2
            est, probs = ae_outcome_distribution(a, r)
            mass = float(probs[np.abs(est - a) <= bound + 1e-15].sum())
            worst = min(worst, mass)
            succ_ok &= mass >= 8.0 / math.pi**2 - 0.02
    out.append(_check("estimators", "single-draw-success", succ_ok,
                      f"worst in-bound mass {worst:.4f} vs 8/pi^2 = {8 / math.pi**2:.4f}"))
    # contract-level unbiased estimator: bias and variance
    bias_ok, var_ok = True, True
    n_mc = 20_000
    for p in (0.1, 0.5, 0.9):
        for r in (64, 256, 1024):
            eta = 1e-3
            samples = np.array([
                unbiased_ae_sample(p, r, eta, rng) for _ in range(n_mc)
            ])
            se = math.sqrt(91.0 * p) / r / math.sqrt(n_mc)
            bias_ok &= abs(float(samples.mean()) - p) <= eta + 5 * se
            var_ok &= float(samples.var()) <= 91.0 * p / r**2 + eta
    out.append(_check("estimators", "unbiased-contract-bias", bias_ok,
                      "|mean - p| <= eta + 5 SE on the 3x3 (p, r) grid"))
    out.append(_check("estimators", "unbiased-contract-variance", var_ok,
                      "var <= 91 p / r^2 + eta on the 3x3 (p, r) grid"))
    return out


# ---------------------------------------------------------------------------
# history-state encoding

def verify_history() -> list[CheckResult]:
    out = []
    rng = _rng()
    # residual of the solved (unnormalized) system
    worst = 0.0
    for name, T in (("self-following", 2.0), ("projector-z", 2.0), ("driven-qubit", 1.5)):
        scenario = build_scenario(name, T)
        rule = composite(T, 0.05)
        system = _history.build_system(scenario, rule)
        state = _history.solve_history(system, QueryLedger())
        x = state.vector * state.normalization
        resid = float(np.linalg.norm(system.L @ x - system.B))
        worst = max(worst, resid / float(np.linalg.norm(system.B)))
    out.append(_check("history", "system-residual", worst <= 1e-12,
                      f"max relative residual {worst:.3e}"))
    # solved state overlaps the directly assembled history state
    scenario = _random_constant_scenario(2, 2.0, rng)
    rule = composite(2.0, 0.1)
    system = _history.build_system(scenario, rule)
    state = _history.solve_history(system, QueryLedger())
    direct = np.concatenate([
        scenario.reference_state(float(t)) for t in rule.nodes
    ])
    direct = direct / np.linalg.norm(direct)
    overlap = abs(complex(np.vdot(direct, state.vector)))
    out.append(_check("history", "solved-vs-direct-overlap", overlap >= 1.0 - 1e-10,
                      f"overlap {overlap!r}"))
    # selection observable stays norm-bounded on random scenarios
    norm_ok, worst_norm = True, 0.0
    for _ in range(10):
        n = int(rng.integers(2, 5))
        sc = _random_constant_scenario(n, 1.5, rng)
        r = composite(1.5, 0.1)
        nrm = float(np.linalg.norm(_history.build_o_sel(r, sc).as_matrix(), 2))
        worst_norm = max(worst_norm, nrm)
        norm_ok &= nrm <= 1.0 + 1e-12
    out.append(_check("history", "selection-norm-bound", norm_ok,
                      f"max |O_sel| = {worst_norm!r}"))
    # global amplitude recovers the weighted node sum exactly
    scenario = build_scenario("self-following", 2.0)
    rule = composite(2.0, 0.05)
    system = _history.build_system(scenario, rule)
    state = _history.solve_history(system, QueryLedger())
    o_sel = _history.build_o_sel(rule, scenario)
    recovered = o_sel.expectation(state) * o_sel.rescale_factor * system.n_blocks
    target = float(rule.weights @ node_values(scenario, rule))
    out.append(_check("history", "global-amplitude-identity",
                      abs(recovered - target) <= 1e-10,
                      f"recovered {recovered!r} vs weighted sum {target!r}"))
    return out


# ---------------------------------------------------------------------------
# exact linearization

def verify_carleman() -> list[CheckResult]:
    out = []
    rng = _rng()
    worst = 0.0
    for i in range(50):
        n = (2, 3, 4)[i % 3]
        sc = _random_constant_scenario(n, 1.0, rng)
        system = _carleman.build_carleman(sc)
        psi = _random_state(n, rng)
        worst = max(worst, _carleman.closure_residual(system, psi, 0.3))
    out.append(_check("carleman", "closure-residual", worst <= 1e-12,
                      f"max residual {worst:.3e} over 50 random instances"))
    # closed-form transition matrix vs brute-force exponential
    from scipy.linalg import expm
    worst = 0.0
    for n in (2, 3, 4):
        sc = _random_constant_scenario(n, 1.0, rng)
        system = _carleman.build_carleman(sc)
        for tau in (0.3, 1.0, 2.7):
            E = _carleman.transition_matrix(system, tau)
            worst = max(worst, float(np.max(np.abs(E - expm(system.A * tau)))))
    out.append(_check("carleman", "closed-form-exponential", worst <= 1e-10,
                      f"max deviation {worst:.3e}"))
    # lifted evolution reproduces the accumulated cost
    worst = 0.0
    for name in ("growing-cost", "bounded-cost", "projector-z"):
        sc = build_scenario(name, 3.0)
        system = _carleman.build_carleman(sc)
        state = _carleman.lift_state(sc.psi_in.amplitudes)
        state = _carleman.evolve_lifted(system, state, 0.0, 3.0)
        worst = max(worst, abs(state.cost - analytic_value(name, 3.0)))
    out.append(_check("carleman", "lifted-cost-exact", worst <= 1e-9,
                      f"max |J_lifted - J| = {worst:.3e}"))
    # padded-state amplitude sandwich on generated states
    sandwich_ok = True
    for name, T in (("growing-cost", 2.0), ("bounded-cost", 3.0), ("growing-cost", 4.0)):
        sc = build_scenario(name, T)
        system = _carleman.build_carleman(sc)
        padded = _carleman.build_padded_history(system, composite(T, 0.1))
        j2 = padded.j_final**2
        sandwich_ok &= (
            j2 / (2.0 * (j2 + 1.0)) - 1e-12
            <= padded.amplitude
            <= j2 / (j2 + 1.0) + 1e-12
        )
    out.append(_check("carleman", "amplitude-sandwich", sandwich_ok,
                      "J^2/(2(J^2+1)) <= a <= J^2/(J^2+1) on generated states"))
    return out


# ---------------------------------------------------------------------------
# scenario library

def verify_library() -> list[CheckResult]:
    out = []
    ok, worst = True, 0.0
    for name in SCENARIO_LIBRARY:
        from .dynamics import true_value
        T = 2.0
        dev = abs(analytic_value(name, T) - true_value(build_scenario(name, T)))
        worst = max(worst, dev)
        ok &= dev <= 1e-8
    out.append(_check("library", "analytic-vs-oracle", ok,
                      f"max deviation {worst:.3e} at T = 2"))
    # the two spectral probes recombine to the analytic magnitude
    T, omega = 3.0, 1.5
    cos_sc, sin_sc = spectroscopy_pair(T, omega)
    from .dynamics import true_value
    mag = spectral_magnitude(true_value(cos_sc), true_value(sin_sc))
    ana = spectral_magnitude(
        analytic_value("spectro-cos", T, omega=omega),
        analytic_value("spectro-sin", T, omega=omega),
    )
    out.append(_check("library", "spectral-recombination",
                      abs(mag - ana) <= 1e-8, f"|J(w)| {mag!r} vs {ana!r}"))
    return out


SUITES = {
    "quadrature": verify_quadrature,
    "estimators": verify_estimators,
    "history": verify_history,
    "carleman": verify_carleman,
    "library": verify_library,
}


def run_suite(name: str) -> list[CheckResult]:
    if name == "all":
        return run_all()
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; known: {', '.join(SUITES)}, all")
    return SUITES[name]()


def run_all() -> list[CheckResult]:
    out = []
    for fn in SUITES.values():
        out.extend(fn())
    return out
