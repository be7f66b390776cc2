import math

import numpy as np
import pytest

from denseout.dynamics import QueryLedger, true_value
from denseout.estimators import node_values
from denseout.historystate import (
    build_o_sel,
    build_system,
    pipeline_lode,
    solve_history,
)
from denseout.quadrature import QuadratureRule, composite
from denseout.scenarios import build_scenario


def rng(seed=0):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def test_system_structure():
    sc = build_scenario("self-following", 2.0)
    rule = composite(2.0, 0.1)
    system = build_system(sc, rule)
    n, nb = system.n, system.n_blocks
    assert system.L.shape == (nb * n, nb * n)
    # unit diagonal blocks
    for k in range(nb):
        blk = system.L[k * n : (k + 1) * n, k * n : (k + 1) * n]
        assert np.allclose(blk, np.eye(n))
    # subdiagonal blocks are minus unitaries
    for k in range(1, nb):
        U = -system.L[k * n : (k + 1) * n, (k - 1) * n : k * n]
        assert np.allclose(U @ U.conj().T, np.eye(n), atol=1e-12)
    assert np.allclose(system.B[:n], sc.psi_in.amplitudes)
    assert np.allclose(system.B[n:], 0.0)


def test_solution_residual():
    for name, T in (("self-following", 2.0), ("driven-qubit", 1.5)):
        sc = build_scenario(name, T)
        system = build_system(sc, composite(T, 0.05))
        state = solve_history(system, QueryLedger())
        x = state.vector * state.normalization
        resid = np.linalg.norm(system.L @ x - system.B)
        assert resid <= 1e-12 * np.linalg.norm(system.B)


def test_solution_matches_direct_trajectory():
    sc = build_scenario("projector-z", 2.0)
    rule = composite(2.0, 0.1)
    state = solve_history(build_system(sc, rule), QueryLedger())
    direct = np.concatenate([sc.reference_state(float(t)) for t in rule.nodes])
    direct /= np.linalg.norm(direct)
    assert abs(np.vdot(direct, state.vector)) >= 1.0 - 1e-10


def test_selection_observable_norm_and_identity():
    sc = build_scenario("self-following", 2.0)
    rule = composite(2.0, 0.05)
    system = build_system(sc, rule)
    state = solve_history(system, QueryLedger())
    o_sel = build_o_sel(rule, sc)
    assert np.linalg.norm(o_sel.as_matrix(), 2) <= 1.0 + 1e-12
    recovered = o_sel.expectation(state) * o_sel.rescale_factor * system.n_blocks
    target = float(rule.weights @ node_values(sc, rule))
    assert abs(recovered - target) <= 1e-10


def test_build_system_validates_rule():
    sc = build_scenario("self-following", 1.0)
    bad = QuadratureRule(
        nodes=np.array([0.5, 1.0]), weights=np.array([0.5, 0.5]),
        n_t=2, segments=1, points_per_segment=2, segment_length=0.5,
    )
    with pytest.raises(ValueError):
        build_system(sc, bad)
    long = QuadratureRule(
        nodes=np.array([0.0, 2.0]), weights=np.array([1.0, 1.0]),
        n_t=2, segments=1, points_per_segment=2, segment_length=2.0,
    )
    with pytest.raises(ValueError):
        build_system(sc, long)


def test_pipeline_lode_success_rate():
    sc = build_scenario("self-following", 2.0)
    hits = sum(
        pipeline_lode(sc, 0.1, 0.1, rng(100 + i), QueryLedger()).abs_error <= 0.1
        for i in range(20)
    )
    assert hits >= 18


def test_pipeline_lode_zero_true_value():
    sc = build_scenario("cos-modulated", math.pi)
    report = pipeline_lode(sc, 0.1, 0.1, rng(13), QueryLedger())
    assert report.true_value == pytest.approx(0.0, abs=1e-8)
    assert report.abs_error <= 0.1


def test_pipeline_lode_ledger():
    sc = build_scenario("self-following", 2.0)
    ledger = QueryLedger()
    report = pipeline_lode(sc, 0.1, 0.1, rng(14), ledger)
    # every reflection costs one full-horizon preparation
    assert ledger.h_queries == math.ceil(1.0 * 2.0) * report.depth
    assert ledger.sp_queries == report.depth
    assert ledger.obs_queries == report.depth


def test_pipeline_lode_depth_scales_with_horizon():
    d2 = pipeline_lode(
        build_scenario("self-following", 2.0), 0.1, 0.1, rng(15), QueryLedger()
    ).depth
    d8 = pipeline_lode(
        build_scenario("self-following", 8.0), 0.1, 0.1, rng(16), QueryLedger()
    ).depth
    assert 2.0 <= d8 / d2 <= 8.0


def test_pipeline_lode_includes_drift():
    sc = build_scenario("bounded-cost", 2.0)
    report = pipeline_lode(sc, 0.05, 0.1, rng(17), QueryLedger())
    assert report.true_value == pytest.approx(1.0 - math.exp(-2.0), abs=1e-8)
    assert report.abs_error <= 0.05
