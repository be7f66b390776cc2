"""Problem instances and exact classical propagation.

A :class:`Scenario` bundles a Hamiltonian, an observable family, an initial
state, a horizon, a classical control, and an optional cos/sin modulation
weight.  Propagation is done classically to controllable accuracy: a cached
eigendecomposition for constant Hamiltonians, a fourth-order commutator-free
Magnus integrator for time-dependent ones.  A query ledger counts the
oracle calls the matching quantum algorithm would make: ceil(|H| * t)
Hamiltonian queries and one state-preparation query per fresh propagation
from the initial state.

`true_value` is the brute-force ground-truth oracle for the accumulated
cost J; every estimation pipeline is judged against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.linalg import expm

__all__ = [
    "ValidationError",
    "StepCountOverflow",
    "QueryLedger",
    "QuantumState",
    "HamiltonianSpec",
    "ObservableSpec",
    "Modulation",
    "Scenario",
    "propagate",
    "propagate_interval",
    "expectation",
    "reference_trajectory",
    "true_value",
    "drift_integral",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
]

HERMITICITY_TOL = 1e-12
NORM_TOL = 1e-12
MAX_MAGNUS_STEPS = 10_000_000
MAX_DIM = 8

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


class ValidationError(ValueError):
    """A realized matrix or state violates a structural requirement."""


class StepCountOverflow(RuntimeError):
    """The requested tolerance needs more integrator steps than allowed."""


@dataclass
class QueryLedger:
    """Oracle-call counters under the cost model.

    One Hamiltonian query per unit of |H|*t (ceiling) per propagation, one
    state-preparation query per fresh start from the initial state, one
    observable query per block-encoding use.  Counters only ever increase.
    """

    h_queries: int = 0
    sp_queries: int = 0
    obs_queries: int = 0

    def charge_propagation(self, norm_bound: float, t: float, copies: int = 1) -> None:
        if t < 0 or copies < 0:
            raise ValueError("negative propagation charge")
        self.h_queries += math.ceil(norm_bound * t) * copies
        self.sp_queries += copies

    def charge_observable(self, copies: int = 1) -> None:
        self.obs_queries += copies

    def snapshot(self) -> dict[str, int]:
        return {
            "h_queries": self.h_queries,
            "sp_queries": self.sp_queries,
            "obs_queries": self.obs_queries,
        }


class QuantumState:
    """Unit-norm complex amplitude vector."""

    __slots__ = ("amplitudes", "dim")

    def __init__(self, amplitudes: np.ndarray, normalize: bool = False):
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        nrm = np.linalg.norm(amps)
        if normalize:
            if nrm == 0:
                raise ValidationError("cannot normalize the zero vector")
            amps = amps / nrm
        elif abs(nrm - 1.0) > 1e-10:
            raise ValidationError(f"state norm {nrm} deviates from 1")
        self.amplitudes = amps
        self.dim = amps.size

    def overlap(self, other: "QuantumState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


def _check_hermitian(mat: np.ndarray, what: str) -> None:
    dev = np.max(np.abs(mat - mat.conj().T))
    if dev > HERMITICITY_TOL:
        raise ValidationError(f"{what} deviates from Hermitian by {dev:.3e}")


def _spectral_norm(mat: np.ndarray) -> float:
    return float(np.linalg.norm(mat, 2))


# registry of closed-form time-dependent Hamiltonians: name -> fn(t, params) -> matrix
CLOSED_FORM_HAMILTONIANS: dict[str, Callable[[float, dict], np.ndarray]] = {}


def register_hamiltonian(name: str):
    def deco(fn):
        CLOSED_FORM_HAMILTONIANS[name] = fn
        return fn
    return deco


@register_hamiltonian("driven_qubit")
def _driven_qubit(t: float, params: dict) -> np.ndarray:
    """sigma_z splitting plus a sinusoidal transverse drive."""
    omega = params.get("omega", 1.0)
    amp = params.get("amplitude", 0.5)
    return PAULI_Z + amp * np.sin(omega * t) * PAULI_X


class HamiltonianSpec:
    """Hermitian generator H(t), constant, grid-sampled, or closed-form.

    ``norm_bound`` upper-bounds the spectral norm of every realized matrix
    and drives the Hamiltonian-query accounting.
    """

    def __init__(
        self,
        kind: str,
        *,
        matrix: np.ndarray | None = None,
        times: np.ndarray | None = None,
        matrices: np.ndarray | None = None,
        name: str | None = None,
        params: dict | None = None,
        norm_bound: float | None = None,
    ):
        if kind not in ("constant", "sampled", "closed_form"):
            raise ValueError(f"unknown Hamiltonian kind {kind!r}")
        self.kind = kind
        self.params = params or {}
        self.name = name
        if kind == "constant":
            self._matrix = np.asarray(matrix, dtype=complex)
            _check_hermitian(self._matrix, "constant Hamiltonian")
            self.dim = self._matrix.shape[0]
            auto_bound = _spectral_norm(self._matrix)
        elif kind == "sampled":
            self._times = np.asarray(times, dtype=float)
            self._matrices = np.asarray(matrices, dtype=complex)
            if self._matrices.shape[0] != self._times.size:
                raise ValueError("sampled grid and matrix stack disagree in length")
            for m in self._matrices:
                _check_hermitian(m, "sampled Hamiltonian")
            self.dim = self._matrices.shape[1]
            auto_bound = max(_spectral_norm(m) for m in self._matrices)
        else:
            if name not in CLOSED_FORM_HAMILTONIANS:
                raise ValueError(f"unknown closed-form Hamiltonian {name!r}")
            probe = CLOSED_FORM_HAMILTONIANS[name](0.0, self.params)
            self.dim = probe.shape[0]
            if norm_bound is None:
                raise ValueError("closed-form Hamiltonians need an explicit norm_bound")
            auto_bound = norm_bound
        self.norm_bound = float(norm_bound if norm_bound is not None else auto_bound)
        # cached eigendecomposition for the constant fast path
        if kind == "constant":
            self._evals, self._evecs = np.linalg.eigh(self._matrix)

    @property
    def time_dependent(self) -> bool:
        return self.kind != "constant"

    def matrix(self, t: float) -> np.ndarray:
        if self.kind == "constant":
            return self._matrix
        if self.kind == "sampled":
            if t <= self._times[0]:
                m = self._matrices[0]
            elif t >= self._times[-1]:
                m = self._matrices[-1]
            else:
                j = int(np.searchsorted(self._times, t))
                t0, t1 = self._times[j - 1], self._times[j]
                lam = (t - t0) / (t1 - t0)
                m = (1 - lam) * self._matrices[j - 1] + lam * self._matrices[j]
        else:
            m = CLOSED_FORM_HAMILTONIANS[self.name](t, self.params)
        _check_hermitian(m, f"H({t})")
        if _spectral_norm(m) > self.norm_bound * (1 + 1e-9):
            raise ValidationError(f"|H({t})| exceeds the declared norm bound")
        return m

    def step_propagator(self, t0: float, t1: float) -> np.ndarray:
        """Exact unitary over [t0, t1] for constant H (eigendecomposition)."""
        if self.kind != "constant":
            raise ValueError("step_propagator is the constant-H fast path")
        phase = np.exp(-1j * self._evals * (t1 - t0))
        return (self._evecs * phase) @ self._evecs.conj().T


class Modulation:
    """Scalar weight multiplying the expectation value: 1, cos(w t), or sin(w t)."""

    NONE = "none"
    COS = "cos"
    SIN = "sin"

    def __init__(self, kind: str = "none", omega: float = 0.0):
        if kind not in (self.NONE, self.COS, self.SIN):
            raise ValueError(f"unknown modulation kind {kind!r}")
        self.kind = kind
        self.omega = omega

    def weight(self, t: float) -> float:
        if self.kind == self.COS:
            return math.cos(self.omega * t)
        if self.kind == self.SIN:
            return math.sin(self.omega * t)
        return 1.0

    @property
    def active(self) -> bool:
        return self.kind != self.NONE


class ObservableSpec:
    """Observable family O(t) with spectral norm clamped to at most 1.

    Constant observables are rescaled at construction by 1/max(1, |O|) and
    the recorded ``scale`` is re-applied to any reported accumulated cost.
    Self-following and follower observables are rank-1 projectors built
    from a trajectory and need no rescaling.
    """

    def __init__(
        self,
        kind: str,
        *,
        matrix: np.ndarray | None = None,
        target: Callable[[float], np.ndarray] | None = None,
        base: "ObservableSpec | None" = None,
        weight: Callable[[float], float] | None = None,
        dim: int | None = None,
    ):
        if kind not in ("constant", "self_following", "follower", "modulated"):
            raise ValueError(f"unknown observable kind {kind!r}")
        self.kind = kind
        self.scale = 1.0
        if kind == "constant":
            mat = np.asarray(matrix, dtype=complex)
            _check_hermitian(mat, "observable")
            nrm = _spectral_norm(mat)
            if nrm > 1.0:
                self.scale = nrm
                mat = mat / nrm
            self._matrix = mat
            self.dim = mat.shape[0]
            self.hs_norm = float(np.sqrt(np.abs(np.trace(mat @ mat)).real))
        elif kind == "modulated":
            if base is None or weight is None:
                raise ValueError("modulated observables need a base and a weight")
            self.base = base
            self.weight = weight
            self.dim = base.dim
            self.scale = base.scale
            self.hs_norm = base.hs_norm
        else:
            if kind == "follower" and target is None:
                raise ValueError("follower observables need a target trajectory")
            self.target = target
            if dim is None:
                raise ValueError(f"{kind} observables need an explicit dim")
            self.dim = dim
            self.hs_norm = 1.0  # rank-1 projector

    @property
    def needs_trajectory(self) -> bool:
        if self.kind == "modulated":
            return self.base.needs_trajectory
        return self.kind == "self_following"

    def realize(self, t: float, reference: Callable[[float], np.ndarray] | None) -> np.ndarray:
        """Matrix of O(t); `reference` supplies the trajectory when needed."""
        if self.kind == "constant":
            return self._matrix
        if self.kind == "modulated":
            return self.weight(t) * self.base.realize(t, reference)
        if self.kind == "self_following":
            if reference is None:
                raise ValueError("self-following observable needs the reference trajectory")
            psi = reference(t)
        else:
            psi = np.asarray(self.target(t), dtype=complex).ravel()
            psi = psi / np.linalg.norm(psi)
        return np.outer(psi, psi.conj())


@dataclass
class Scenario:
    """One complete dense-output problem instance."""

    hamiltonian: HamiltonianSpec
    observable: ObservableSpec
    psi_in: QuantumState
    horizon_T: float
    control_u: Callable[[float], float] = lambda t: 0.0
    mu: float = 0.0
    modulation: Modulation = field(default_factory=lambda: Modulation())
    label: str = ""
    # cached incremental trajectory checkpoints (construction cost, unledgered)
    _checkpoints: list[tuple[float, np.ndarray]] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.horizon_T <= 0:
            raise ValueError("horizon must be positive")
        if not (self.psi_in.dim == self.hamiltonian.dim == self.observable.dim):
            raise ValidationError(
                f"dimension mismatch: psi {self.psi_in.dim}, "
                f"H {self.hamiltonian.dim}, O {self.observable.dim}"
            )
        if self.mu < 0:
            raise ValueError("control penalty weight must be non-negative")
        if self.dim > MAX_DIM:
            raise ValidationError(
                f"dimension {self.dim} exceeds the desk-scale cap {MAX_DIM}"
            )

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim

    def drift(self, t: float) -> float:
        u = self.control_u(t)
        return 0.5 * self.mu * u * u

    def reference_state(self, t: float, tol: float = 1e-12) -> np.ndarray:
        """Trajectory point for realizing trajectory-built observables.

        Checkpointed so repeated queries (quadrature nodes, the ground-truth
        integrator) stay cheap; this is scenario construction, not algorithm
        execution, so no ledger is involved.
        """
        if t == 0.0:
            return self.psi_in.amplitudes
        if self.hamiltonian.kind == "constant":
            U = self.hamiltonian.step_propagator(0.0, t)
            return U @ self.psi_in.amplitudes
        # start from the closest earlier checkpoint
        t0, psi = 0.0, self.psi_in.amplitudes
        for tc, pc in self._checkpoints:
            if tc <= t and tc > t0:
                t0, psi = tc, pc
        if t > t0:
            psi = _magnus_evolve(self.hamiltonian, psi, t0, t, tol)
        self._checkpoints.append((t, psi))
        if len(self._checkpoints) > 4096:
            del self._checkpoints[: 2048]
        return psi

    def observable_matrix(self, t: float) -> np.ndarray:
        return self.observable.realize(t, self.reference_state)

    def with_label(self, label: str) -> "Scenario":
        return replace(self, label=label)


# ---------------------------------------------------------------------------
# propagation

_CF4_A1 = (3.0 + 2.0 * math.sqrt(3.0)) / 12.0
_CF4_A2 = (3.0 - 2.0 * math.sqrt(3.0)) / 12.0
_GL_C1 = 0.5 - math.sqrt(3.0) / 6.0
_GL_C2 = 0.5 + math.sqrt(3.0) / 6.0


def _magnus_evolve(
    ham: HamiltonianSpec, psi: np.ndarray, t0: float, t1: float, tol: float
) -> np.ndarray:
    """Fourth-order commutator-free Magnus stepping from t0 to t1."""
    span = t1 - t0
    if span == 0:
        return psi
    hn = ham.norm_bound * span
    # global error ~ (|H| span)^5 / n^4; solve for n with a safety margin
    n = max(1, math.ceil((hn ** 1.25) / (tol ** 0.25)))
    if n > MAX_MAGNUS_STEPS:
        raise StepCountOverflow(
            f"tolerance {tol} needs {n} Magnus steps (cap {MAX_MAGNUS_STEPS})"
        )
    h = span / n
    for j in range(n):
        ta = t0 + j * h
        H1 = ham.matrix(ta + _GL_C1 * h)
        H2 = ham.matrix(ta + _GL_C2 * h)
        U = expm(-1j * h * (_CF4_A1 * H1 + _CF4_A2 * H2))
        V = expm(-1j * h * (_CF4_A2 * H1 + _CF4_A1 * H2))
        psi = U @ (V @ psi)
    return psi


def propagate_interval(
    scenario: Scenario, psi: np.ndarray, t0: float, t1: float, tol: float = 1e-12
) -> np.ndarray:
    """Evolve an arbitrary state over [t0, t1]; no ledger involvement."""
    ham = scenario.hamiltonian
    if ham.kind == "constant":
        return ham.step_propagator(t0, t1) @ psi
    return _magnus_evolve(ham, psi, t0, t1, tol)


def propagate(
    scenario: Scenario, t_target: float, tol: float, ledger: QueryLedger
) -> QuantumState:
    """Propagate the initial state to t_target, charging the ledger.

    Solves d psi/dt = -i H(t) psi from 0 with global error below tol,
    charging ceil(|H| * t_target) Hamiltonian queries and one
    state-preparation query.
    """
    if not 0.0 <= t_target <= scenario.horizon_T:
        raise ValueError(f"t_target {t_target} outside [0, {scenario.horizon_T}]")
    if not 0.0 < tol < 1.0:
        raise ValueError("tol must lie in (0, 1)")
    psi = propagate_interval(scenario, scenario.psi_in.amplitudes, 0.0, t_target, tol)
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > 1e-10:
        raise ValidationError(f"propagation lost norm: {nrm}")
    ledger.charge_propagation(scenario.hamiltonian.norm_bound, t_target)
    return QuantumState(psi / nrm)


def expectation(state: QuantumState, scenario: Scenario, t: float) -> float:
    """Modulated expectation <psi|O(t)|psi> * w(t).

    The unmodulated value must be real (Hermitian O); its imaginary part is
    checked against 1e-12.
    """
    if state.dim != scenario.dim:
        raise ValidationError("state dimension does not match the scenario")
    O = scenario.observable_matrix(t)
    val = complex(state.amplitudes.conj() @ (O @ state.amplitudes))
    # modulated observables carry a real scalar weight; realness still holds
    if abs(val.imag) > 1e-11:
        raise ValidationError(f"expectation has imaginary part {val.imag:.3e}")
    return val.real * scenario.modulation.weight(t)


def reference_trajectory(
    scenario: Scenario, times: list[float], tol: float = 1e-12
) -> list[QuantumState]:
    """Trajectory states at the requested (sorted) times; construction cost."""
    if any(t1 < t0 for t0, t1 in zip(times, times[1:])):
        raise ValueError("times must be sorted ascending")
    if times and (times[0] < 0 or times[-1] > scenario.horizon_T):
        raise ValueError("times must lie within [0, T]")
    out = []
    psi = scenario.psi_in.amplitudes
    t_prev = 0.0
    for t in times:
        psi = propagate_interval(scenario, psi, t_prev, t, tol)
        t_prev = t
        out.append(QuantumState(psi, normalize=True))
    return out


# ---------------------------------------------------------------------------
# ground truth

def drift_integral(scenario: Scenario, t0: float = 0.0, t1: float | None = None) -> float:
    """Classical control-cost term integral of (mu/2) u(t)^2."""
    if scenario.mu == 0.0:
        return 0.0
    t1 = scenario.horizon_T if t1 is None else t1
    val, _ = integrate.quad(scenario.drift, t0, t1, epsabs=1e-12, epsrel=1e-12, limit=500)
    return val


def true_value(scenario: Scenario, tol: float = 1e-10) -> float:
    """Ground-truth J by adaptive quadrature over the exact trajectory.

    This is the independent brute-force oracle every pipeline is compared
    against; it shares no code path with the quadrature-plus-estimation
    machinery.
    """
    if tol > 1e-8:
        raise ValueError("ground-truth oracle requires tol <= 1e-8")

    def integrand(t: float) -> float:
        psi = QuantumState(scenario.reference_state(t, tol=tol * 1e-2), normalize=True)
        return expectation(psi, scenario, t)

    val, err = integrate.quad(
        integrand, 0.0, scenario.horizon_T, epsabs=tol, epsrel=tol, limit=2000
    )
    if err > 10 * max(tol, abs(val) * tol):
        raise RuntimeError(f"ground-truth quadrature failed to converge (err {err:.2e})")
    # the realized observable is clamped to norm <= 1; re-apply the factor
    # that was divided out so J refers to the original observable
    return scenario.observable.scale * val + drift_integral(scenario)
