"""Classical laboratory for time-accumulated observables of quantum dynamics.

Estimate J = int_0^T <psi(t)|O(t)|psi(t)> w(t) dt + (mu/2) int u^2 dt by
four different measurement strategies (Hadamard test, per-node amplitude
estimation, history-state global amplitude estimation, exact-linearization
padded amplitude estimation) while a query ledger counts the oracle calls
the matching quantum algorithm would make, so that the asymptotic cost
scalings can be measured as log-log slopes.
"""

from .quadrature import QuadratureRule, cc_single, composite, composite_with_points
from .dynamics import (
    HamiltonianSpec,
    Modulation,
    ObservableSpec,
    QuantumState,
    QueryLedger,
    Scenario,
    expectation,
    propagate,
    reference_trajectory,
    true_value,
)
from .estimators import (
    AEConfig,
    EstimateReport,
    ae_estimate,
    ae_outcome_distribution,
    ae_sample,
    hadamard_shot,
    pipeline_hadamard,
    pipeline_hs_ae,
    unbiased_ae_sample,
)
from .historystate import build_o_sel, build_system, pipeline_lode, solve_history
from .carleman import (
    build_carleman,
    build_padded_history,
    closure_residual,
    evolve_lifted,
    gamma_factor,
    pipeline_carleman,
    transition_matrix,
)
from .scenarios import (
    SCENARIO_LIBRARY,
    build_scenario,
    analytic_value,
    list_scenarios,
    load_scenario_file,
)
from .benchmark import PIPELINES, SlopeFit, SweepConfig, run_config, sweep_and_fit

__version__ = "0.1.0"
