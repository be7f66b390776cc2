"""Bundled problem instances with closed-form accumulated costs.

Every library scenario ships with an analytic value of its accumulated
cost so the brute-force oracle can be cross-checked at load time, and so
tests and benchmarks have an exact target that does not depend on any of
the estimation machinery.

A JSON loader turns a declarative scenario document into a
:class:`~denseout.dynamics.Scenario`; complex entries are written as
``[re, im]`` pairs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .dynamics import (
    PAULI_Z,
    HamiltonianSpec,
    Modulation,
    ObservableSpec,
    QuantumState,
    Scenario,
    true_value,
)

__all__ = [
    "ScenarioInfo",
    "SCENARIO_LIBRARY",
    "build_scenario",
    "analytic_value",
    "cross_check",
    "list_scenarios",
    "scenario_from_json",
    "load_scenario_file",
    "spectroscopy_pair",
    "spectral_magnitude",
]

_PLUS = np.array([1.0, 1.0]) / math.sqrt(2.0)
_KET0 = np.array([1.0, 0.0])
_KET1 = np.array([0.0, 1.0])


@dataclass(frozen=True)
class ScenarioInfo:
    """Library entry: factory plus the analytic accumulated cost."""

    name: str
    description: str
    factory: Callable[..., Scenario]
    analytic_j: Callable[..., float]
    time_independent: bool


def _make_self_following(T: float) -> Scenario:
    """Trajectory-projector observable: <O> = 1, so J = T."""
    return Scenario(
        hamiltonian=HamiltonianSpec("constant", matrix=PAULI_Z),
        observable=ObservableSpec("self_following", dim=2),
        psi_in=QuantumState(_PLUS),
        horizon_T=T,
        label="self-following",
    )


def _make_cos_modulated(T: float, omega: float = 1.0) -> Scenario:
    """Same trajectory projector under a cos(w t) weight: J = sin(wT)/w."""
    return Scenario(
        hamiltonian=HamiltonianSpec("constant", matrix=PAULI_Z),
        observable=ObservableSpec("self_following", dim=2),
        psi_in=QuantumState(_PLUS),
        horizon_T=T,
        modulation=Modulation(Modulation.COS, omega),
        label="cos-modulated",
    )


def _make_projector_z(T: float) -> Scenario:
    """H = Z, O = |0><0|, psi_in = |+>: <O> = 1/2 constant, J = T/2."""
    return Scenario(
        hamiltonian=HamiltonianSpec("constant", matrix=PAULI_Z),
        observable=ObservableSpec("constant", matrix=np.outer(_KET0, _KET0)),
        psi_in=QuantumState(_PLUS),
        horizon_T=T,
        label="projector-z",
    )


def _make_growing_cost(T: float) -> Scenario:
    """Stationary expectation: H = 2I, O = |+><+|, psi_in = |+>; J = T.

    Time-independent throughout, so the exact-linearization pipeline
    accepts it; the depth factor (J^2+1)/|J| grows linearly with T.
    """
    return Scenario(
        hamiltonian=HamiltonianSpec("constant", matrix=2.0 * np.eye(2)),
        observable=ObservableSpec("constant", matrix=np.outer(_PLUS, _PLUS)),
        psi_in=QuantumState(_PLUS),
        horizon_T=T,
        label="growing-cost",
    )


def _make_bounded_cost(T: float) -> Scenario:
    """Bounded accumulated cost J = 1 - e^{-T} carried by the control term.

    H = Z + 2I with psi_in = |1> keeps <|0><0|> identically zero while the
    decaying control u = e^{-t/2} with mu = 2 supplies drift e^{-t}; the
    cost is positive, strictly increasing, and bounded, so the depth
    factor (J^2+1)/|J| stays O(1) in T.
    """
    return Scenario(
        hamiltonian=HamiltonianSpec("constant", matrix=PAULI_Z + 2.0 * np.eye(2)),
        observable=ObservableSpec("constant", matrix=np.outer(_KET0, _KET0)),
        psi_in=QuantumState(_KET1),
        horizon_T=T,
        control_u=lambda t: math.exp(-0.5 * t),
        mu=2.0,
        label="bounded-cost",
    )


def _spectro_base(T: float, modulation: Modulation, label: str) -> Scenario:
    # H = Z on |+> against O = |+><+| gives <O>(t) = cos^2 t
    return Scenario(
        hamiltonian=HamiltonianSpec("constant", matrix=PAULI_Z),
        observable=ObservableSpec("constant", matrix=np.outer(_PLUS, _PLUS)),
        psi_in=QuantumState(_PLUS),
        horizon_T=T,
        modulation=modulation,
        label=label,
    )


def _make_spectro_cos(T: float, omega: float = 1.0) -> Scenario:
    return _spectro_base(T, Modulation(Modulation.COS, omega), "spectro-cos")


def _make_spectro_sin(T: float, omega: float = 1.0) -> Scenario:
    return _spectro_base(T, Modulation(Modulation.SIN, omega), "spectro-sin")


def _make_driven_qubit(T: float, amplitude: float = 0.5, omega: float = 1.0) -> Scenario:
    """Time-dependent drive exercising the Magnus path; still J = T."""
    ham = HamiltonianSpec(
        "closed_form",
        name="driven_qubit",
        params={"amplitude": amplitude, "omega": omega},
        norm_bound=math.sqrt(1.0 + amplitude**2),
    )
    return Scenario(
        hamiltonian=ham,
        observable=ObservableSpec("self_following", dim=2),
        psi_in=QuantumState(_PLUS),
        horizon_T=T,
        label="driven-qubit",
    )


def _j_self_following(T: float) -> float:
    return T


def _j_cos_modulated(T: float, omega: float = 1.0) -> float:
    return math.sin(omega * T) / omega if omega != 0 else T


def _j_projector_z(T: float) -> float:
    return 0.5 * T


def _j_growing_cost(T: float) -> float:
    return T


def _j_bounded_cost(T: float) -> float:
    return 1.0 - math.exp(-T)


def _spectro_quad(T: float, omega: float, trig: Callable[[float], float]) -> float:
    # analytic integrand cos^2(t) * weight(w t); quadrature on the scalar
    # closed form, independent of any state propagation
    val, _ = integrate.quad(
        lambda t: math.cos(t) ** 2 * trig(omega * t), 0.0, T,
        epsabs=1e-13, epsrel=1e-13, limit=500,
    )
    return val


def _j_spectro_cos(T: float, omega: float = 1.0) -> float:
    return _spectro_quad(T, omega, math.cos)


def _j_spectro_sin(T: float, omega: float = 1.0) -> float:
    return _spectro_quad(T, omega, math.sin)


def _j_driven_qubit(T: float, amplitude: float = 0.5, omega: float = 1.0) -> float:
    return T


SCENARIO_LIBRARY: dict[str, ScenarioInfo] = {
    info.name: info
    for info in (
        ScenarioInfo(
            "self-following",
            "trajectory projector observable, J = T",
            _make_self_following, _j_self_following, False,
        ),
        ScenarioInfo(
            "cos-modulated",
            "trajectory projector under a cos weight, J = sin(wT)/w",
            _make_cos_modulated, _j_cos_modulated, False,
        ),
        ScenarioInfo(
            "projector-z",
            "fixed |0><0| observable on a precessing |+>, J = T/2",
            _make_projector_z, _j_projector_z, True,
        ),
        ScenarioInfo(
            "growing-cost",
            "stationary unit expectation, J = T; linearly growing depth factor",
            _make_growing_cost, _j_growing_cost, True,
        ),
        ScenarioInfo(
            "bounded-cost",
            "control-driven bounded cost J = 1 - e^{-T}; O(1) depth factor",
            _make_bounded_cost, _j_bounded_cost, True,
        ),
        ScenarioInfo(
            "spectro-cos",
            "cos-weighted probe of <O>(t) = cos^2 t (real spectral part)",
            _make_spectro_cos, _j_spectro_cos, False,
        ),
        ScenarioInfo(
            "spectro-sin",
            "sin-weighted probe of <O>(t) = cos^2 t (imaginary spectral part)",
            _make_spectro_sin, _j_spectro_sin, False,
        ),
        ScenarioInfo(
            "driven-qubit",
            "sinusoidally driven qubit with trajectory projector, J = T",
            _make_driven_qubit, _j_driven_qubit, False,
        ),
    )
}


def build_scenario(name: str, T: float, **params) -> Scenario:
    if name not in SCENARIO_LIBRARY:
        known = ", ".join(sorted(SCENARIO_LIBRARY))
        raise KeyError(f"unknown scenario {name!r}; known: {known}")
    return SCENARIO_LIBRARY[name].factory(T, **params)


def analytic_value(name: str, T: float, **params) -> float:
    if name not in SCENARIO_LIBRARY:
        raise KeyError(f"unknown scenario {name!r}")
    return SCENARIO_LIBRARY[name].analytic_j(T, **params)


def cross_check(name: str, T: float, tol: float = 1e-8, **params) -> tuple[float, float]:
    """Analytic value vs brute-force oracle; raises if they disagree."""
    analytic = analytic_value(name, T, **params)
    oracle = true_value(build_scenario(name, T, **params))
    if abs(analytic - oracle) > tol:
        raise AssertionError(
            f"scenario {name!r} at T={T}: analytic J = {analytic!r} but "
            f"oracle gives {oracle!r}"
        )
    return analytic, oracle


def list_scenarios() -> list[tuple[str, str]]:
    return [(info.name, info.description) for info in SCENARIO_LIBRARY.values()]


def spectroscopy_pair(T: float, omega: float) -> tuple[Scenario, Scenario]:
    """Cos- and sin-weighted probes whose estimates recombine to |J(w)|."""
    return (
        _make_spectro_cos(T, omega=omega),
        _make_spectro_sin(T, omega=omega),
    )


def spectral_magnitude(re_part: float, im_part: float) -> float:
    return math.hypot(re_part, im_part)


# ---------------------------------------------------------------------------
# JSON loading

def _as_complex(entry) -> complex:
    if isinstance(entry, (int, float)):
        return complex(entry)
    if isinstance(entry, (list, tuple)) and len(entry) == 2:
        return complex(entry[0], entry[1])
    raise ValueError(f"cannot parse {entry!r} as a complex number")


def _as_matrix(rows) -> np.ndarray:
    return np.array([[_as_complex(x) for x in row] for row in rows], dtype=complex)


def _hamiltonian_from_json(obj: dict) -> HamiltonianSpec:
    kind = obj["kind"]
    if kind == "constant":
        return HamiltonianSpec(
            "constant",
            matrix=_as_matrix(obj["matrix"]),
            norm_bound=obj.get("norm_bound"),
        )
    if kind == "sampled":
        return HamiltonianSpec(
            "sampled",
            times=np.asarray(obj["times"], dtype=float),
            matrices=np.array([_as_matrix(m) for m in obj["matrices"]]),
            norm_bound=obj.get("norm_bound"),
        )
    if kind == "closed_form":
        return HamiltonianSpec(
            "closed_form",
            name=obj["name"],
            params=obj.get("params", {}),
            norm_bound=obj["norm_bound"],
        )
    raise ValueError(f"unknown Hamiltonian kind {kind!r}")


def _observable_from_json(obj: dict, dim: int) -> ObservableSpec:
    kind = obj["kind"]
    if kind == "constant":
        return ObservableSpec("constant", matrix=_as_matrix(obj["matrix"]))
    if kind == "self_following":
        return ObservableSpec("self_following", dim=dim)
    raise ValueError(f"unknown observable kind {kind!r} (JSON supports "
                     "'constant' and 'self_following')")


def _control_from_json(obj: dict | None) -> Callable[[float], float]:
    if obj is None:
        return lambda t: 0.0
    kind = obj.get("kind", "zero")
    params = obj.get("params", {})
    if kind == "zero":
        return lambda t: 0.0
    if kind == "constant":
        value = float(params["value"])
        return lambda t: value
    if kind == "exp_decay":
        amp = float(params.get("amplitude", 1.0))
        rate = float(params.get("rate", 1.0))
        return lambda t: amp * math.exp(-rate * t)
    if kind == "sinusoid":
        amp = float(params.get("amplitude", 1.0))
        omega = float(params.get("omega", 1.0))
        return lambda t: amp * math.sin(omega * t)
    raise ValueError(f"unknown control kind {kind!r}")


def scenario_from_json(obj: dict) -> Scenario:
    """Build a scenario from its declarative JSON form."""
    dim = int(obj["dim"])
    ham = _hamiltonian_from_json(obj["hamiltonian"])
    observable = _observable_from_json(obj["observable"], dim)
    psi = np.array([_as_complex(x) for x in obj["psi_in"]])
    mod_obj = obj.get("modulation")
    modulation = (
        Modulation(mod_obj["kind"], float(mod_obj.get("omega", 0.0)))
        if mod_obj else Modulation()
    )
    scenario = Scenario(
        hamiltonian=ham,
        observable=observable,
        psi_in=QuantumState(psi, normalize=True),
        horizon_T=float(obj["T"]),
        control_u=_control_from_json(obj.get("control")),
        mu=float(obj.get("mu", 0.0)),
        modulation=modulation,
        label=str(obj.get("label", "json-scenario")),
    )
    if scenario.dim != dim:
        raise ValueError(
            f"declared dim {dim} disagrees with the matrices ({scenario.dim})"
        )
    return scenario


def load_scenario_file(path: str) -> list[Scenario]:
    """Load one scenario or a list of scenarios from a JSON file."""
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = [data]
    return [scenario_from_json(d) for d in data]
