import math

import numpy as np
import pytest

from denseout.dynamics import (
    PAULI_X,
    PAULI_Z,
    HamiltonianSpec,
    Modulation,
    ObservableSpec,
    QuantumState,
    QueryLedger,
    Scenario,
    ValidationError,
    drift_integral,
    expectation,
    propagate,
    reference_trajectory,
    true_value,
)


def plus_state():
    return QuantumState(np.array([1.0, 1.0]) / math.sqrt(2.0))


def make_scenario(**kw):
    defaults = dict(
        hamiltonian=HamiltonianSpec("constant", matrix=PAULI_Z),
        observable=ObservableSpec("self_following", dim=2),
        psi_in=plus_state(),
        horizon_T=2.0,
    )
    defaults.update(kw)
    return Scenario(**defaults)


def test_state_norm_validation():
    with pytest.raises(ValidationError):
        QuantumState(np.array([1.0, 1.0]))
    st = QuantumState(np.array([3.0, 4.0]), normalize=True)
    assert np.linalg.norm(st.amplitudes) == pytest.approx(1.0)


def test_hamiltonian_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        HamiltonianSpec("constant", matrix=np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_propagate_matches_closed_form():
    sc = make_scenario()
    ledger = QueryLedger()
    t = 1.3
    state = propagate(sc, t, 1e-12, ledger)
    expected = np.array([np.exp(-1j * t), np.exp(1j * t)]) / math.sqrt(2.0)
    assert np.allclose(state.amplitudes, expected, atol=1e-12)
    assert ledger.h_queries == math.ceil(1.0 * t)
    assert ledger.sp_queries == 1


def test_propagation_preserves_norm_time_dependent():
    ham = HamiltonianSpec(
        "closed_form", name="driven_qubit",
        params={"amplitude": 0.5, "omega": 1.0},
        norm_bound=math.sqrt(1.25),
    )
    sc = make_scenario(hamiltonian=ham, horizon_T=3.0)
    for t in (0.5, 1.7, 3.0):
        state = propagate(sc, t, 1e-10, QueryLedger())
        assert abs(np.linalg.norm(state.amplitudes) - 1.0) <= 1e-12


def test_sampled_hamiltonian_interpolates():
    times = np.linspace(0.0, 2.0, 5)
    mats = np.array([PAULI_Z for _ in times])
    ham = HamiltonianSpec("sampled", times=times, matrices=mats)
    sc = make_scenario(hamiltonian=ham)
    state = propagate(sc, 1.0, 1e-10, QueryLedger())
    expected = np.array([np.exp(-1j), np.exp(1j)]) / math.sqrt(2.0)
    assert np.allclose(state.amplitudes, expected, atol=1e-9)


def test_expectation_self_following_is_one():
    sc = make_scenario()
    state = propagate(sc, 1.0, 1e-12, QueryLedger())
    assert expectation(state, sc, 1.0) == pytest.approx(1.0, abs=1e-12)


def test_expectation_modulated():
    sc = make_scenario(modulation=Modulation(Modulation.COS, 2.0))
    state = propagate(sc, 0.7, 1e-12, QueryLedger())
    assert expectation(state, sc, 0.7) == pytest.approx(math.cos(1.4), abs=1e-12)


def test_observable_rescaling():
    obs = ObservableSpec("constant", matrix=2.0 * np.eye(2))
    assert obs.scale == pytest.approx(2.0)
    assert np.linalg.norm(obs.realize(0.0, None), 2) <= 1.0 + 1e-12
    sc = make_scenario(observable=obs)
    # J refers to the original observable: <2I> = 2 integrated over T
    assert true_value(sc) == pytest.approx(2.0 * sc.horizon_T, abs=1e-9)


def test_dimension_mismatch_rejected():
    with pytest.raises(ValidationError):
        make_scenario(observable=ObservableSpec("self_following", dim=3))


def test_dimension_cap():
    with pytest.raises(ValidationError, match="cap"):
        make_scenario(
            hamiltonian=HamiltonianSpec("constant", matrix=np.eye(9)),
            observable=ObservableSpec("self_following", dim=9),
            psi_in=QuantumState(np.eye(9)[0]),
        )


def test_reference_trajectory_requires_sorted_times():
    sc = make_scenario()
    with pytest.raises(ValueError):
        reference_trajectory(sc, [1.0, 0.5])


def test_drift_integral():
    sc = make_scenario(control_u=lambda t: math.exp(-0.5 * t), mu=2.0, horizon_T=3.0)
    assert drift_integral(sc) == pytest.approx(1.0 - math.exp(-3.0), abs=1e-10)


def test_true_value_includes_drift():
    sc = make_scenario(control_u=lambda t: 1.0, mu=0.5, horizon_T=2.0)
    # <O> = 1 plus drift 0.25 per unit time
    assert true_value(sc) == pytest.approx(2.0 + 0.5, abs=1e-9)


def test_true_value_requires_tight_tol():
    with pytest.raises(ValueError):
        true_value(make_scenario(), tol=1e-3)


def test_propagate_validates_range_and_tol():
    sc = make_scenario()
    with pytest.raises(ValueError):
        propagate(sc, 5.0, 1e-10, QueryLedger())
    with pytest.raises(ValueError):
        propagate(sc, 1.0, 0.0, QueryLedger())


def test_ledger_counts_monotone():
    ledger = QueryLedger()
    ledger.charge_propagation(2.0, 3.2, copies=4)
    assert ledger.h_queries == math.ceil(6.4) * 4
    assert ledger.sp_queries == 4
    with pytest.raises(ValueError):
        ledger.charge_propagation(1.0, -1.0)
