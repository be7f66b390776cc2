"""Exact linearization of the accumulated cost onto an invariant subspace.

For a time-independent Hamiltonian and a fixed observable the pair
(J(t), psi(t) (x) conj(psi(t))) obeys a *closed* linear ODE

    d/dt [J; y] = [[0, P], [0, Q]] [J; y] + [drift(t); 0]

with y = psi (x) conj(psi), P the flattened transpose of the observable
(so P y = <psi|O|psi>), and Q = (-iH) (+) (i conj(H)) the Kronecker-sum
generator of the outer-product flow.  The lifting closes at quadratic
order, so no truncation error enters anywhere.

The accumulated cost is then read out by padding a node-history of lifted
states with copies of the final block and running one amplitude
estimation on the J-flag amplitude, whose grid size scales with
Gamma = (J^2 + 1)/|J| instead of the horizon.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .dynamics import QueryLedger, Scenario, true_value
from .estimators import AEConfig, DEPTH_CONST, EstimateReport, ae_estimate
from .quadrature import QuadratureRule, composite

__all__ = [
    "CarlemanSystem",
    "LiftedState",
    "PaddedHistoryState",
    "build_carleman",
    "lift_state",
    "closure_residual",
    "transition_matrix",
    "evolve_lifted",
    "build_padded_history",
    "gamma_factor",
    "pipeline_carleman",
]

MAX_LIFTED_DIM = 65


@dataclass
class CarlemanSystem:
    """Closed lifted generator A = [[0, P], [0, Q]] and its ingredients."""

    A: np.ndarray
    P: np.ndarray              # row vector of length n^2
    Q: np.ndarray              # n^2 x n^2
    H_shifted: np.ndarray
    shift: float               # energy shift applied to H (phase-only on y)
    scenario: Scenario

    @property
    def n(self) -> int:
        return self.H_shifted.shape[0]

    @property
    def lifted_dim(self) -> int:
        return 1 + self.n**2

    @property
    def p_norm(self) -> float:
        return float(np.linalg.norm(self.P))

    @property
    def h_norm(self) -> float:
        return float(np.linalg.norm(self.H_shifted, 2))

    @property
    def prep_norm(self) -> float:
        """Generator norm entering the per-preparation query charge."""
        return self.p_norm * (self.h_norm + self.p_norm)


@dataclass
class LiftedState:
    """Point (J, psi (x) conj(psi)) on the invariant subspace."""

    vector: np.ndarray         # length 1 + n^2

    @property
    def cost(self) -> float:
        return float(self.vector[0].real)

    @property
    def outer(self) -> np.ndarray:
        return self.vector[1:]


@dataclass
class PaddedHistoryState:
    """Node history of lifted states padded with copies of the final block.

    The normalized state carries the trajectory blocks followed by
    n_nodes copies of the final lifted block; the squared amplitude of
    the J-flag on the padded section is n_nodes * J_T^2 / nu^2.
    """

    blocks: list[np.ndarray]
    n_nodes: int
    nu: float                  # overall normalization sqrt(sum |block|^2)
    j_final: float
    amplitude: float


def build_carleman(scenario: Scenario) -> CarlemanSystem:
    """Assemble the closed lifted generator for a scenario.

    Requires a time-independent Hamiltonian, a fixed observable, and no
    weight modulation.  If the smallest Hamiltonian eigenvalue is below 1
    the Hamiltonian is shifted by (1 + max(0, -lambda_min)) * I; the shift
    only rotates the global phase of psi and leaves psi (x) conj(psi) --
    and hence J -- untouched.
    """
    if scenario.hamiltonian.kind != "constant":
        raise ValueError("exact linearization needs a time-independent Hamiltonian")
    if scenario.observable.kind != "constant":
        raise ValueError("exact linearization needs a fixed observable")
    if scenario.modulation.active:
        raise ValueError("exact linearization does not support weight modulation")
    H = scenario.hamiltonian.matrix(0.0)
    n = H.shape[0]
    if 1 + n**2 > MAX_LIFTED_DIM:
        raise ValueError(
            f"lifted dimension {1 + n**2} exceeds the cap {MAX_LIFTED_DIM}"
        )
    lam_min = float(np.linalg.eigvalsh(H)[0])
    shift = 0.0
    if lam_min < 1.0:
        shift = 1.0 + max(0.0, -lam_min)
    H_s = H + shift * np.eye(n)

    O = scenario.observable_matrix(0.0) * scenario.observable.scale
    P = O.T.reshape(-1).astype(complex)           # P @ (psi (x) conj(psi)) = <O>
    eye = np.eye(n, dtype=complex)
    Q = np.kron(-1j * H_s, eye) + np.kron(eye, 1j * np.conj(H_s))

    d = 1 + n**2
    A = np.zeros((d, d), dtype=complex)
    A[0, 1:] = P
    A[1:, 1:] = Q
    return CarlemanSystem(A=A, P=P, Q=Q, H_shifted=H_s, shift=shift, scenario=scenario)


def lift_state(psi: np.ndarray, cost: float = 0.0) -> LiftedState:
    """Embed a pure state (with accumulated cost so far) into the lift."""
    psi = np.asarray(psi, dtype=complex)
    vec = np.concatenate(([complex(cost)], np.kron(psi, np.conj(psi))))
    return LiftedState(vector=vec)


def _drift_piece(scenario: Scenario, t0: float, t1: float) -> float:
    from scipy.integrate import quad

    val, _ = quad(scenario.drift, t0, t1, epsabs=1e-13, epsrel=1e-13)
    return val


def closure_residual(system: CarlemanSystem, psi: np.ndarray, t: float) -> float:
    """Norm of d/dt(lifted) - A lifted - b at a trajectory point.

    Zero up to roundoff by construction -- this is the machine check that
    the lifting actually closes.
    """
    psi = np.asarray(psi, dtype=complex)
    y = np.kron(psi, np.conj(psi))
    dpsi = -1j * (system.H_shifted @ psi)
    dy = np.kron(dpsi, np.conj(psi)) + np.kron(psi, np.conj(dpsi))
    d_cost = float((system.P @ y).real) + system.scenario.drift(t)
    lifted = np.concatenate(([0.0 + 0.0j], y))
    b = np.zeros_like(lifted)
    b[0] = system.scenario.drift(t)
    derivative = np.concatenate(([complex(d_cost)], dy))
    return float(np.linalg.norm(derivative - system.A @ lifted - b))


def transition_matrix(system: CarlemanSystem, tau: float) -> np.ndarray:
    """Closed-form e^{A tau} = [[1, P Phi(tau)], [0, e^{Q tau}]].

    Phi(tau) = int_0^tau e^{Qs} ds.  Q is singular whenever any eigenvalue
    difference of H vanishes -- which always happens on the diagonal -- so
    Phi comes from the block-triangular augmented exponential
    expm([[Q, I], [0, 0]] tau) rather than from Q^{-1}(e^{Q tau} - I).
    """
    n2 = system.Q.shape[0]
    aug = np.zeros((2 * n2, 2 * n2), dtype=complex)
    aug[:n2, :n2] = system.Q
    aug[:n2, n2:] = np.eye(n2)
    big = expm(aug * tau)
    expQ = big[:n2, :n2]
    phi = big[:n2, n2:]
    d = 1 + n2
    E = np.zeros((d, d), dtype=complex)
    E[0, 0] = 1.0
    E[0, 1:] = system.P @ phi
    E[1:, 1:] = expQ
    return E


def evolve_lifted(
    system: CarlemanSystem, state: LiftedState, t0: float, t1: float
) -> LiftedState:
    """Exact lifted evolution over [t0, t1], drift included.

    The drift vector b(t) = (drift(t), 0, ..., 0) lies in the kernel of A
    (the first column of A is zero), so its Duhamel contribution is the
    plain time integral of the drift in the cost slot -- exact even for a
    time-dependent control.
    """
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    E = transition_matrix(system, t1 - t0)
    vec = E @ state.vector
    vec[0] += _drift_piece(system.scenario, t0, t1)
    return LiftedState(vector=vec)


def build_padded_history(
    system: CarlemanSystem, rule: QuadratureRule, tol: float = 1e-9
) -> PaddedHistoryState:
    """Lifted node history padded with n_nodes copies of the final block.

    The accumulated cost must be non-decreasing along the nodes and
    strictly positive at the horizon; otherwise the flag amplitude cannot
    be inverted back to the cost.
    """
    scenario = system.scenario
    if not math.isclose(rule.nodes[0], 0.0, abs_tol=1e-12):
        raise ValueError("the rule must start at t = 0")
    state = lift_state(scenario.psi_in.amplitudes, cost=0.0)
    blocks = [state.vector.copy()]
    costs = [state.cost]
    for t0, t1 in zip(rule.nodes[:-1], rule.nodes[1:]):
        state = evolve_lifted(system, state, float(t0), float(t1))
        blocks.append(state.vector.copy())
        costs.append(state.cost)
    diffs = np.diff(costs)
    if np.any(diffs < -tol):
        raise ValueError(
            "accumulated cost decreases along the trajectory; the flag "
            "amplitude is not monotone in the cost"
        )
    j_final = costs[-1]
    if j_final <= tol:
        raise ValueError("the accumulated cost at the horizon must be positive")
    n_nodes = len(blocks)
    blocks = blocks + [blocks[-1].copy() for _ in range(n_nodes)]
    nu_sq = float(sum(np.vdot(b, b).real for b in blocks))
    amplitude = n_nodes * j_final**2 / nu_sq
    return PaddedHistoryState(
        blocks=blocks,
        n_nodes=n_nodes,
        nu=math.sqrt(nu_sq),
        j_final=j_final,
        amplitude=amplitude,
    )


def gamma_factor(j_final: float) -> float:
    """Depth factor (J^2 + 1)/|J| controlling the flag-amplitude inversion."""
    if j_final == 0:
        raise ValueError("gamma factor is undefined at J = 0")
    return (j_final**2 + 1.0) / abs(j_final)


def pipeline_carleman(
    scenario: Scenario,
    eps: float,
    delta: float,
    rng: np.random.Generator,
    ledger: QueryLedger,
    rule: QuadratureRule | None = None,
    depth_const: float = DEPTH_CONST,
) -> EstimateReport:
    """One global amplitude estimation on the padded lifted history.

    Grid size r = ceil(C * Gamma / eps) with Gamma = (J^2 + 1)/|J|;
    the estimate is J~ = nu * sqrt(a~ / n_nodes).  Each reflection costs
    one preparation of the padded history, charged at
    ceil(|P| (|H| + |P|) T) generator queries.
    """
    if not (0 < eps < 1 and 0 < delta < 1):
        raise ValueError("eps and delta must lie in (0, 1)")
    if scenario.observable.scale != 1.0:
        raise ValueError(
            "exact linearization requires an observable of norm at most 1 "
            "(no classical rescaling factor)"
        )
    T = scenario.horizon_T
    rule = composite(T, eps) if rule is None else rule
    system = build_carleman(scenario)
    padded = build_padded_history(system, rule)
    if eps > 0.2 * padded.j_final:
        warnings.warn(
            f"eps = {eps:.3g} is not small against J = {padded.j_final:.3g}; "
            "the amplitude-to-cost inversion linearization degrades",
            stacklevel=2,
        )
    gamma = gamma_factor(padded.j_final)
    r = max(2, math.ceil(depth_const * gamma / eps))
    r += r % 2
    cfg = AEConfig(r=r, eta=delta)
    a_tilde = ae_estimate(padded.amplitude, cfg, rng)
    estimate = padded.nu * math.sqrt(max(a_tilde, 0.0) / padded.n_nodes)

    ledger.charge_propagation(system.prep_norm, T, copies=cfg.depth)
    ledger.charge_observable(cfg.depth)
    return EstimateReport(
        pipeline="carleman",
        estimate=estimate,
        true_value=true_value(scenario),
        target_eps=eps,
        target_delta=delta,
        ledger=ledger.snapshot(),
        depth=cfg.depth,
        shots=cfg.reps,
        scenario_label=scenario.label,
        horizon_T=T,
    )
