"""Tests for the Monte-Carlo relative-MSE harness"""

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from utils.errors import ConfigError, DomainError
from utils.simulation import (
    REPORT_COLUMNS,
    SimulationSpec,
    layout_table,
    load_simulation_spec,
    parse_simulation_spec,
    run_simulation,
    table_sweep,
)


SPECS_DIR = Path(__file__).resolve().parent.parent / "specs"


def small_spec(**overrides):
    fields = dict(true_xi=(2.37, 0.0), n=30, replicates=12, contamination="uniform", epsilon=0.1,
                  estimators=(("type1", 0.3), ("type0", 0.3)), seed=8)
    fields.update(overrides)
    return SimulationSpec(**fields)


class TestParseSpec:
    """Tests for KEY=VALUE spec parsing."""

    def test_full(self):
        spec, sweep = parse_simulation_spec({
            'P': '3', 'TRUE_XI': '20,0,0', 'N': '100', 'REPLICATES': '50', 'CONTAMINATION': 'uniform',
            'EPSILON': '0.1', 'ESTIMATORS': 'type1:0.5,type0:0.25', 'SEED': '7',
            'EPSILON_GRID': '0.02,0.05',
        })
        assert spec.p == 3
        assert spec.estimators == (("type1", 0.5), ("type0", 0.25))
        assert sweep['epsilon_grid'] == (0.02, 0.05)
        assert sweep['tuning_grid'] is None

    def test_defaults(self):
        spec, _ = parse_simulation_spec({'TRUE_XI': '2.37,0'})
        assert spec.replicates == 2000
        assert spec.n == 100
        assert spec.contamination == "none"

    @pytest.mark.parametrize("raw,key", [
        ({}, 'TRUE_XI'),
        ({'TRUE_XI': '1,0', 'COLOUR': 'red'}, 'COLOUR'),
        ({'TRUE_XI': '1,0', 'EPSILON': '2', 'CONTAMINATION': 'uniform'}, 'EPSILON'),
        ({'TRUE_XI': '1,0', 'EPSILON': 'lots'}, 'EPSILON'),
        ({'TRUE_XI': '1,0', 'CONTAMINATION': 'vmf', 'EPSILON': '0.1'}, 'ZETA'),
        ({'TRUE_XI': '1,0', 'CONTAMINATION': 'gaussian'}, 'CONTAMINATION'),
        ({'TRUE_XI': '1,0', 'ESTIMATORS': 'lasso:1'}, 'ESTIMATORS'),
        ({'TRUE_XI': '1,0', 'ESTIMATORS': 'type1:-0.5'}, 'ESTIMATORS'),
        ({'TRUE_XI': '1,0', 'REPLICATES': '0'}, 'REPLICATES'),
        ({'TRUE_XI': '1,0', 'P': '3'}, 'P'),
        ({'TRUE_XI': '1,x'}, 'TRUE_XI'),
    ])
    def test_errors_name_key(self, raw, key):
        with pytest.raises(ConfigError) as excinfo:
            parse_simulation_spec(raw)
        assert excinfo.value.key == key
        assert str(excinfo.value).startswith(f"{key}: ")

    def test_load_file(self, tmp_path):
        path = tmp_path / "cell.env"
        path.write_text("# clean data\nTRUE_XI=2.37,0\nN_GRID=10,20\nTUNING_GRID=0.1,0.5\n")
        spec, sweep = load_simulation_spec(str(path))
        assert spec.true_xi == (2.37, 0.0)
        assert sweep['n_grid'] == (10, 20)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_simulation_spec(str(tmp_path / "absent.env"))


class TestShippedSpecs:
    """The layouts under specs/ load and describe the intended cells."""

    @pytest.mark.parametrize("path", sorted(SPECS_DIR.glob("*.env")), ids=lambda path: path.stem)
    def test_loads(self, path):
        spec, sweep = load_simulation_spec(str(path))
        assert spec.replicates == 2000
        assert sweep['tuning_grid'] == (0.02, 0.05, 0.1, 0.25, 0.5, 0.75)

    @pytest.mark.parametrize("name,xi", [
        ("uniform_diffuse_p2", (0.52, 0.0)),
        ("uniform_diffuse_p3", (0.78, 0.0, 0.0)),
        ("uniform_mild_p2", (1.16, 0.0)),
        ("uniform_mild_p3", (1.80, 0.0, 0.0)),
        ("uniform_moderate_p2", (2.37, 0.0)),
        ("uniform_moderate_p3", (3.99, 0.0, 0.0)),
        ("uniform_concentrated_p2", (10.27, 0.0)),
        ("uniform_concentrated_p3", (20.0, 0.0, 0.0)),
    ])
    def test_uniform_layouts(self, name, xi):
        spec, sweep = load_simulation_spec(str(SPECS_DIR / f"{name}.env"))
        assert spec.true_xi == xi
        assert spec.contamination == "uniform"
        assert sweep['epsilon_grid'] == (0.02, 0.05, 0.1, 0.2)


class TestRunSimulation:
    """Tests for run_simulation."""

    def test_mle_only_clean(self):
        report = run_simulation(small_spec(contamination="none", epsilon=0.0, estimators=()))
        assert list(report.table.columns) == REPORT_COLUMNS
        assert len(report.table) == 1
        assert report.row("mle")['relative_mse'] == 1.0

    def test_rows_and_columns(self):
        table = run_simulation(small_spec()).table
        assert table['estimator'].tolist() == ["mle", "type1", "type0"]
        assert (table['replicates'] == 12).all()
        assert (table['mse'] > 0).all()

    def test_independent_of_worker_count(self):
        spec = small_spec()
        pd.testing.assert_frame_equal(run_simulation(spec, workers=1).table,
                                      run_simulation(spec, workers=2).table)

    def test_failures_excluded_but_retained(self):
        spec = small_spec(estimators=(("type1", 0.5),), max_iter=1, tol=1e-15)
        row = run_simulation(spec).row("type1", 0.5)
        assert row['failures'] == spec.replicates
        assert np.isnan(row['mse'])
        assert np.isfinite(row['mse_retained'])

    def test_robustness_pattern(self):
        spec = SimulationSpec(true_xi=(20.0, 0.0, 0.0), n=100, replicates=200, contamination="uniform",
                              epsilon=0.2, estimators=(("type1", 0.02), ("type1", 0.5)), seed=3)
        report = run_simulation(spec)
        assert report.row("type1", 0.5)['relative_mse'] < 0.2
        assert report.row("type1", 0.02)['relative_mse'] > 0.9

    def test_missing_row(self):
        with pytest.raises(KeyError):
            run_simulation(small_spec(replicates=2)).row("type0", 0.9)


class TestTableSweep:
    """Tests for table_sweep and layout_table."""

    def test_epsilon_columns(self):
        table = table_sweep(small_spec(replicates=4), tuning_grid=(0.1, 0.5), epsilon_grid=(0.05, 0.2))
        assert table['cell'].unique().tolist() == [0, 1]
        assert sorted(table['epsilon'].unique()) == [0.05, 0.2]
        wide = layout_table(table)
        assert list(wide.columns) == [0.05, 0.2]
        assert len(wide) == 5

    def test_n_columns(self):
        table = table_sweep(small_spec(replicates=3, estimators=(("type0", 0.1),)), n_grid=(10, 20))
        assert table['n'].unique().tolist() == [10, 20]

    def test_both_grids_rejected(self):
        with pytest.raises(DomainError):
            table_sweep(small_spec(), epsilon_grid=(0.1,), n_grid=(10,))


@pytest.mark.slow
class TestReferenceCells:
    """Full-scale relative MSE checks at reference settings."""

    def test_clean_small_beta(self):
        spec = SimulationSpec(true_xi=(2.37, 0.0), n=100, replicates=2000, estimators=(("type1", 0.02),))
        assert run_simulation(spec, workers=4).row("type1", 0.02)['relative_mse'] == pytest.approx(0.999, abs=0.05)

    def test_uniform_circle(self):
        spec = SimulationSpec(true_xi=(2.37, 0.0), n=100, replicates=2000, contamination="uniform",
                              epsilon=0.1, estimators=(("type1", 0.5),))
        assert run_simulation(spec, workers=4).row("type1", 0.5)['relative_mse'] == pytest.approx(0.761, abs=0.1)

    def test_uniform_sphere_concentrated(self):
        spec = SimulationSpec(true_xi=(20.0, 0.0, 0.0), n=100, replicates=2000, contamination="uniform",
                              epsilon=0.1, estimators=(("type0", 0.25),))
        assert run_simulation(spec, workers=4).row("type0", 0.25)['relative_mse'] == pytest.approx(0.048, abs=0.03)

    def test_vmf_contaminant_sphere(self):
        spec = SimulationSpec(true_xi=(3.99, 0.0, 0.0), n=100, replicates=2000, contamination="vmf",
                              epsilon=0.2, zeta=(-199.0, 0.0, 0.0), estimators=(("type1", 0.5),))
        assert run_simulation(spec, workers=4).row("type1", 0.5)['relative_mse'] == pytest.approx(0.214, abs=0.1)
