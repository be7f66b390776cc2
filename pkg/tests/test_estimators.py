import math

import numpy as np
import pytest

from denseout.dynamics import QuantumState, QueryLedger
from denseout.estimators import (
    AEConfig,
    ae_estimate,
    ae_outcome_distribution,
    ae_sample_many,
    hadamard_shot,
    node_values,
    pipeline_hadamard,
    pipeline_hs_ae,
    unbiased_ae_sample,
)
from denseout.quadrature import composite
from denseout.scenarios import build_scenario


def rng(seed=0):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def test_hadamard_shot_mean():
    g = rng(1)
    state = QuantumState(np.array([1.0, 0.0]))
    obs = np.diag([0.6, -1.0]).astype(complex)
    shots = [hadamard_shot(state, obs, "Re", g) for _ in range(20000)]
    assert np.mean(shots) == pytest.approx(0.6, abs=0.02)


def test_hadamard_shot_rejects_oversized_observable():
    g = rng(2)
    state = QuantumState(np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        hadamard_shot(state, 3.0 * np.eye(2, dtype=complex), "Re", g)


def test_outcome_distribution_normalized():
    for a in (0.0, 0.2, 0.5, 0.87, 1.0):
        for r in (4, 33, 128):
            _, probs = ae_outcome_distribution(a, r)
            assert probs.sum() == pytest.approx(1.0, rel=1e-12)
            assert np.all(probs >= 0)


def test_outcome_distribution_exact_on_grid():
    r = 16
    m = 3
    a = math.sin(math.pi * m / r) ** 2
    estimates, probs = ae_outcome_distribution(a, r)
    hits = np.isclose(estimates, a) & (probs > 0.999)
    assert hits.any()


def test_single_draw_error_mass():
    for a in (0.1, 0.5, 0.9):
        for r in (32, 128):
            bound = 2 * math.pi * math.sqrt(a * (1 - a)) / r + math.pi**2 / r**2
            est, probs = ae_outcome_distribution(a, r)
            mass = float(probs[np.abs(est - a) <= bound + 1e-15].sum())
            assert mass >= 8.0 / math.pi**2 - 1e-12


def test_ae_estimate_converges_with_depth():
    a = 0.3721
    errs = [
        abs(ae_estimate(a, AEConfig(r=r, eta=0.05), rng(3)) - a)
        for r in (32, 256, 2048)
    ]
    assert errs[-1] <= 2 * math.pi / 2048 + (math.pi / 2048) ** 2
    assert errs[-1] <= errs[0] + 1e-12


def test_unbiased_contract():
    g = rng(4)
    p, r, eta = 0.4, 200, 1e-3
    samples = np.array([unbiased_ae_sample(p, r, eta, g) for _ in range(30000)])
    se = math.sqrt(91.0 * p) / r / math.sqrt(samples.size)
    assert abs(samples.mean() - p) <= eta + 5 * se
    assert samples.var() <= 91.0 * p / r**2 + eta
    assert np.all(np.abs(samples) <= 2.0 * math.pi)


def test_unbiased_rejects_bad_args():
    g = rng(5)
    with pytest.raises(ValueError):
        unbiased_ae_sample(1.5, 10, 0.1, g)
    with pytest.raises(ValueError):
        unbiased_ae_sample(0.5, 10, 0.0, g)
    with pytest.raises(ValueError):
        unbiased_ae_sample(0.5, 10, 0.01, g, bias=0.5)


def test_aeconfig_validation():
    with pytest.raises(ValueError):
        AEConfig(r=1, eta=0.1)
    with pytest.raises(ValueError):
        AEConfig(r=8, eta=0.0)
    cfg = AEConfig(r=8, eta=0.05)
    assert cfg.depth == 8 * cfg.reps


def test_node_values_match_closed_form():
    sc = build_scenario("projector-z", 2.0)
    rule = composite(2.0, 0.1)
    vals = node_values(sc, rule)
    assert np.allclose(vals, 0.5, atol=1e-12)


def test_pipeline_hadamard_accuracy_and_ledger():
    sc = build_scenario("self-following", 2.0)
    ledger = QueryLedger()
    report = pipeline_hadamard(sc, 0.1, 0.1, rng(6), ledger)
    assert report.pipeline == "hadamard"
    assert report.abs_error <= 0.1
    rule = composite(2.0, 0.1)
    # every node costs n_shots propagations of ceil(|H| t_k) queries each
    expected_h = sum(math.ceil(1.0 * t) * report.shots for t in rule.nodes)
    assert ledger.h_queries == expected_h
    assert ledger.sp_queries == rule.n_t * report.shots


def test_pipeline_hadamard_modulated_doubles_shots():
    sc = build_scenario("cos-modulated", 1.0)
    ledger = QueryLedger()
    report = pipeline_hadamard(sc, 0.2, 0.2, rng(7), ledger)
    assert ledger.sp_queries == 2 * composite(1.0, 0.2).n_t * report.shots


def test_pipeline_biased_ae_accuracy():
    sc = build_scenario("projector-z", 2.0)
    report = pipeline_hs_ae(sc, 0.1, 0.1, "biased", rng(8), QueryLedger())
    assert report.pipeline == "ae_biased"
    assert report.abs_error <= 0.1


def test_pipeline_unbiased_ae_accuracy():
    sc = build_scenario("self-following", 2.0)
    report = pipeline_hs_ae(sc, 0.05, 0.1, "unbiased", rng(9), QueryLedger())
    assert report.pipeline == "ae_unbiased"
    assert report.abs_error <= 0.05


def test_pipeline_unbiased_warns_on_coarse_eps():
    sc = build_scenario("self-following", 1.0)
    with pytest.warns(UserWarning):
        pipeline_hs_ae(sc, 0.3, 0.1, "unbiased", rng(10), QueryLedger())


def test_pipeline_validation():
    sc = build_scenario("self-following", 1.0)
    with pytest.raises(ValueError):
        pipeline_hs_ae(sc, 0.1, 0.1, "exotic", rng(11), QueryLedger())
    with pytest.raises(ValueError):
        pipeline_hadamard(sc, 1.5, 0.1, rng(12), QueryLedger())
