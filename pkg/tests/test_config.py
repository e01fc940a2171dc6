"""Tests for scenario document parsing and validation."""

import json

import numpy as np
import pytest

from eqm_lab.config import (
    DEFAULT_THRESHOLDS,
    ConfigError,
    build_config,
    parse_config,
    with_dt,
)
from eqm_lab.hilbert import SIGMA_X, SIGMA_Z, matrix_to_pairs
from eqm_lab.koopman import HarmonicOscillator
from eqm_lab.observables import StateMeasure

SX = matrix_to_pairs(SIGMA_X)
SZ = matrix_to_pairs(SIGMA_Z)
UP = matrix_to_pairs(np.diag([1.0, 0.0]))
PLUS_VEC = [[0.7071067811865476, 0.0], [0.7071067811865476, 0.0]]


def minimal_doc(**overrides):
    doc = {
        "id": "linear-qubit-test",
        "dimension": 2,
        "hamiltonian": {"type": "linear", "A": SZ},
        "initial": {"state_vector": PLUS_VEC},
        "integrator": {"dt": 1e-3, "t_final": 0.1},
        "outputs": ["invariants"],
    }
    doc.update(overrides)
    return doc


class TestParsing:
    def test_minimal_linear_qubit(self):
        cfg = parse_config(json.dumps(minimal_doc()))
        assert cfg.dimension == 2
        assert cfg.scenario_id == "linear-qubit-test"
        assert cfg.integrator.dt == 1e-3
        assert cfg.thresholds == DEFAULT_THRESHOLDS

    def test_invalid_json_reports_position(self):
        with pytest.raises(ConfigError, match=r"line \d+, column \d+"):
            parse_config("{\n  \"id\": }")

    def test_mean_field_document(self):
        doc = minimal_doc(hamiltonian={"type": "mean_field", "A": SX, "B": SZ, "lambda": 1.0})
        cfg = build_config(doc)
        assert cfg.hamiltonian.label == "mean_field"

    def test_polynomial_document(self):
        doc = minimal_doc(hamiltonian={
            "type": "polynomial",
            "terms": [{"coefficient": 0.5, "factors": [SZ, SZ]}],
        })
        assert build_config(doc).hamiltonian.label == "polynomial"

    def test_measure_initial(self):
        doc = minimal_doc(
            initial={"measure": {"support": [UP, matrix_to_pairs(np.eye(2) / 2)],
                                 "weights": [0.25, 0.75]}},
            outputs=["conservation"],
            observables=[{"type": "constant", "A": SX}],
        )
        cfg = build_config(doc)
        assert isinstance(cfg.initial, StateMeasure)
        assert len(cfg.initial.support) == 2

    def test_koopman_only_document(self):
        doc = {
            "id": "koopman-test",
            "outputs": ["koopman"],
            "koopman": {
                "flow": {"type": "harmonic", "omega": 2.0},
                "observables": [{"name": "gaussian", "center": [0.0, 0.0], "width": 1.0}],
                "times": [0.5],
            },
        }
        cfg = build_config(doc)
        assert cfg.dimension is None
        assert cfg.koopman.flow == HarmonicOscillator(omega=2.0)
        assert len(cfg.koopman.generator_points) == 10

    def test_conservation_times_default_to_horizon(self):
        doc = minimal_doc(outputs=["conservation"],
                          observables=[{"type": "constant", "A": SX}])
        assert build_config(doc).conservation_times == (0.1,)


class TestValidation:
    def test_non_unit_trace_initial_names_field_and_value(self):
        doc = minimal_doc(initial={"density_matrix": matrix_to_pairs(np.diag([0.5, 0.4]))})
        with pytest.raises(ConfigError, match="initial.density_matrix") as err:
            build_config(doc)
        assert "0.9" in str(err.value)

    def test_wigner_requires_pair(self):
        doc = minimal_doc(outputs=["wigner"])
        with pytest.raises(ConfigError, match="wigner requires wigner_pair"):
            build_config(doc)

    def test_wigner_requires_pure_initial(self):
        doc = minimal_doc(outputs=["wigner"],
                          initial={"density_matrix": matrix_to_pairs(np.eye(2) / 2)},
                          wigner_pair={"state_vector": PLUS_VEC})
        with pytest.raises(ConfigError, match="pure initial state"):
            build_config(doc)

    def test_non_hermitian_literal_rejected_at_parse_time(self):
        skew = [[[0.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]
        doc = minimal_doc(hamiltonian={"type": "linear", "A": skew})
        with pytest.raises(ConfigError, match="hamiltonian.A.*Hermitian"):
            build_config(doc)

    def test_dimension_mismatch_names_field(self):
        doc = minimal_doc(dimension=3)
        with pytest.raises(ConfigError, match="hamiltonian.A.*expected dimension 3"):
            build_config(doc)

    def test_unknown_output(self):
        doc = minimal_doc(outputs=["plots"])
        with pytest.raises(ConfigError, match="unknown output 'plots'"):
            build_config(doc)

    def test_unknown_hamiltonian_type(self):
        doc = minimal_doc(hamiltonian={"type": "quartic", "A": SZ})
        with pytest.raises(ConfigError, match="unknown Hamiltonian type"):
            build_config(doc)

    def test_unknown_threshold_key(self):
        doc = minimal_doc(thresholds={"fidelity": 1e-3})
        with pytest.raises(ConfigError, match="thresholds.fidelity"):
            build_config(doc)

    def test_threshold_override(self):
        doc = minimal_doc(thresholds={"conservation": 1e-6})
        assert build_config(doc).thresholds["conservation"] == 1e-6

    def test_trajectory_rejects_measure_initial(self):
        doc = minimal_doc(
            outputs=["trajectory"],
            initial={"measure": {"support": [UP], "weights": [1.0]}},
        )
        with pytest.raises(ConfigError, match="single initial state"):
            build_config(doc)

    def test_conservation_requires_observables(self):
        doc = minimal_doc(outputs=["conservation"])
        with pytest.raises(ConfigError, match="at least one observable"):
            build_config(doc)

    def test_koopman_output_requires_section(self):
        doc = minimal_doc(outputs=["invariants", "koopman"])
        with pytest.raises(ConfigError, match="koopman output requires"):
            build_config(doc)

    def test_integrator_invariants_enforced(self):
        doc = minimal_doc(integrator={"dt": 0.5, "t_final": 0.1})
        with pytest.raises(ConfigError, match="integrator"):
            build_config(doc)

    def test_missing_required_field(self):
        doc = minimal_doc()
        del doc["hamiltonian"]
        with pytest.raises(ConfigError, match="hamiltonian.*missing"):
            build_config(doc)

    def test_dimension_bounds(self):
        doc = minimal_doc(dimension=1)
        with pytest.raises(ConfigError, match="dimension"):
            build_config(doc)


class TestShippedConfigs:
    def test_sample_documents_parse(self):
        from pathlib import Path

        config_dir = Path(__file__).resolve().parent.parent / "configs"
        paths = sorted(config_dir.glob("*.json"))
        assert len(paths) == 3
        for path in paths:
            parse_config(path.read_text())


class TestDtOverride:
    def test_override_applies(self):
        cfg = build_config(minimal_doc())
        assert with_dt(cfg, 0.05).integrator.dt == 0.05

    def test_override_validates(self):
        cfg = build_config(minimal_doc())
        with pytest.raises(ConfigError, match="integrator.dt"):
            with_dt(cfg, 0.5)  # exceeds t_final = 0.1

    def test_override_without_integrator(self):
        doc = {
            "id": "koopman-test",
            "outputs": ["koopman"],
            "koopman": {
                "flow": {"type": "pendulum", "g": 1.0},
                "observables": [{"name": "q"}],
                "times": [0.1],
            },
        }
        with pytest.raises(ConfigError, match="no integrator"):
            with_dt(build_config(doc), 0.01)
