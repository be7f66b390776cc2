import json
import math

import numpy as np
import pytest

from denseout.dynamics import true_value
from denseout.scenarios import (
    SCENARIO_LIBRARY,
    analytic_value,
    build_scenario,
    cross_check,
    list_scenarios,
    load_scenario_file,
    scenario_from_json,
    spectral_magnitude,
    spectroscopy_pair,
)


@pytest.mark.parametrize("name", sorted(SCENARIO_LIBRARY))
@pytest.mark.parametrize("T", [2.0, 3.5])
def test_library_cross_checks(name, T):
    analytic, oracle = cross_check(name, T)
    assert abs(analytic - oracle) <= 1e-8


def test_known_values():
    assert analytic_value("self-following", 3.0) == pytest.approx(3.0)
    assert analytic_value("cos-modulated", math.pi) == pytest.approx(0.0, abs=1e-14)
    assert true_value(build_scenario("cos-modulated", math.pi)) == pytest.approx(
        0.0, abs=1e-8
    )
    assert analytic_value("projector-z", 4.0) == pytest.approx(2.0)
    assert analytic_value("bounded-cost", 2.0) == pytest.approx(1.0 - math.exp(-2.0))


def test_list_scenarios():
    names = {name for name, _ in list_scenarios()}
    assert {"self-following", "cos-modulated", "growing-cost", "bounded-cost"} <= names


def test_unknown_scenario():
    with pytest.raises(KeyError):
        build_scenario("no-such-thing", 1.0)
    with pytest.raises(KeyError):
        analytic_value("no-such-thing", 1.0)


def test_spectroscopy_recombination():
    T, omega = 3.0, 1.5
    cos_sc, sin_sc = spectroscopy_pair(T, omega)
    mag = spectral_magnitude(true_value(cos_sc), true_value(sin_sc))
    ana = spectral_magnitude(
        analytic_value("spectro-cos", T, omega=omega),
        analytic_value("spectro-sin", T, omega=omega),
    )
    assert mag == pytest.approx(ana, abs=1e-8)


def sample_doc():
    return {
        "label": "json-demo",
        "dim": 2,
        "hamiltonian": {"kind": "constant", "matrix": [[1.0, 0.0], [0.0, -1.0]]},
        "observable": {"kind": "constant",
                       "matrix": [[0.5, [0.0, -0.25]], [[0.0, 0.25], 0.5]]},
        "psi_in": [[0.70710678118654752, 0.0], [0.70710678118654752, 0.0]],
        "T": 2.0,
        "mu": 0.5,
        "control": {"kind": "constant", "params": {"value": 1.0}},
        "modulation": {"kind": "cos", "omega": 1.0},
    }


def test_json_scenario_roundtrip():
    sc = scenario_from_json(sample_doc())
    assert sc.label == "json-demo"
    assert sc.dim == 2
    assert sc.horizon_T == 2.0
    assert sc.mu == 0.5
    assert sc.modulation.kind == "cos"
    O = sc.observable_matrix(0.0)
    assert O[0, 1] == pytest.approx(-0.25j)
    assert sc.drift(0.0) == pytest.approx(0.25)
    # a loaded scenario works with the ground-truth oracle
    assert isinstance(true_value(sc), float)


def test_json_loader_errors():
    doc = sample_doc()
    doc["dim"] = 3
    with pytest.raises(ValueError):
        scenario_from_json(doc)
    doc = sample_doc()
    doc["hamiltonian"]["kind"] = "mystery"
    with pytest.raises(ValueError):
        scenario_from_json(doc)
    doc = sample_doc()
    doc["observable"] = {"kind": "follower"}
    with pytest.raises(ValueError):
        scenario_from_json(doc)
    doc = sample_doc()
    doc["control"] = {"kind": "ramp"}
    with pytest.raises(ValueError):
        scenario_from_json(doc)


def test_load_scenario_file(tmp_path):
    path = tmp_path / "scenarios.json"
    path.write_text(json.dumps([sample_doc(), sample_doc()]))
    loaded = load_scenario_file(str(path))
    assert len(loaded) == 2
    assert all(sc.dim == 2 for sc in loaded)


def test_json_control_kinds():
    doc = sample_doc()
    doc["control"] = {"kind": "exp_decay", "params": {"amplitude": 2.0, "rate": 0.5}}
    sc = scenario_from_json(doc)
    assert sc.control_u(0.0) == pytest.approx(2.0)
    assert sc.control_u(2.0) == pytest.approx(2.0 * math.exp(-1.0))
    doc["control"] = {"kind": "sinusoid", "params": {"amplitude": 1.0, "omega": 2.0}}
    sc = scenario_from_json(doc)
    assert sc.control_u(math.pi / 4) == pytest.approx(1.0)
