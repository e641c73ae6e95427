import json
import math

import numpy as np
import pytest

from calibnet.bounds import CrbResult
from calibnet.errors import NonNumericCell, ParseError, TooFewRows
from calibnet.evaluation import MetricRow
from calibnet.io import (
    RunManifest,
    ingest_csv,
    write_crb_json,
    write_dataset_csv,
    write_manifest,
    write_metrics_csv,
    write_params_json,
    write_rmse_curves_csv,
)
from calibnet.model import CalibrationParams, SensorDataset
from calibnet.simulation import MonteCarloReport, MonteCarloRow


class TestIngestCsv:
    def test_minimal(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("s1,s2\n1,2\n3,4\n")
        data = ingest_csv(str(p))
        assert data.n_samples == 2 and data.n_sensors == 2
        assert data.readings.tolist() == [[1.0, 2.0], [3.0, 4.0]]
        assert data.sensor_ids == ("s1", "s2")
        assert data.timestamps is None

    def test_timestamp_column(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("timestamp,a,b\n2020-01-01,1,2\n2020-01-02,3,4\n")
        data = ingest_csv(str(p))
        assert data.timestamps == ("2020-01-01", "2020-01-02")
        assert data.sensor_ids == ("a", "b")

    def test_ragged_row_named(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("s1,s2\n1,2\n3\n5,6\n")
        with pytest.raises(ParseError, match="row 3"):
            ingest_csv(str(p))

    def test_single_data_row(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("s1,s2\n1,2\n")
        with pytest.raises(TooFewRows):
            ingest_csv(str(p))

    def test_non_numeric_cell_coordinates(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("s1,s2\n1,2\n3,oops\n")
        with pytest.raises(NonNumericCell, match="row 3.*'s2'"):
            ingest_csv(str(p))

    def test_crlf_and_trailing_newlines(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_bytes(b"s1,s2\r\n1,2\r\n3,4\r\n\r\n")
        assert ingest_csv(str(p)).n_samples == 2

    def test_one_sensor_column_rejected(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("s1\n1\n2\n")
        with pytest.raises(ParseError):
            ingest_csv(str(p))


class TestRoundTrips:
    def test_dataset_value_identical(self, tmp_path):
        rng = np.random.default_rng(0)
        data = SensorDataset(
            readings=rng.normal(size=(5, 3)) * math.pi,
            sensor_ids=("a", "b", "c"),
            timestamps=tuple(f"t{i}" for i in range(5)),
        )
        p = tmp_path / "d.csv"
        write_dataset_csv(data, str(p))
        back = ingest_csv(str(p))
        assert np.array_equal(back.readings, data.readings)  # bitwise
        assert back.sensor_ids == data.sensor_ids
        assert back.timestamps == data.timestamps

    def test_full_precision_extremes(self, tmp_path):
        vals = np.array([[1e-300, 1 + 2 ** -52], [-1e300, 0.1]])
        data = SensorDataset(readings=vals, sensor_ids=("x", "y"))
        p = tmp_path / "d.csv"
        write_dataset_csv(data, str(p))
        assert np.array_equal(ingest_csv(str(p)).readings, vals)


class TestReportWriters:
    def test_rmse_curves_columns(self, tmp_path):
        report = MonteCarloReport(rows=(
            MonteCarloRow(m=32, estimator="cls", constraint="sum",
                          rmse=1.5, rcrb=1.0, rcrb_unconstrained=0.9),
        ))
        p = tmp_path / "rmse_curves.csv"
        write_rmse_curves_csv(report, str(p))
        lines = p.read_text().splitlines()
        assert lines[0] == "m,estimator,constraint,rmse,rcrb,rcrb_unconstrained"
        assert lines[1] == "32,cls,sum,1.5,1.0,0.9"

    def test_metrics_columns(self, tmp_path):
        p = tmp_path / "metrics.csv"
        write_metrics_csv([MetricRow(solution="sum", sensor="s1", mae=2.0, mad=0.5)],
                          str(p))
        lines = p.read_text().splitlines()
        assert lines[0] == "solution,sensor,mae,mad"
        assert lines[1] == "sum,s1,2.0,0.5"

    def test_params_json_schema(self, tmp_path):
        p = tmp_path / "params.json"
        params = CalibrationParams(alphas=[0.5, 1.0], betas=[-2.0, 0.0])
        write_params_json(params, ("s1", "s2"), str(p),
                          constraint="ref:s2", estimator="cls")
        doc = json.loads(p.read_text())
        assert set(doc) == {"sensors", "constraint", "estimator", "up_to_scale"}
        assert doc["sensors"][0] == {"id": "s1", "alpha": 0.5, "beta": -2.0,
                                     "omega": 2.0, "phi": 4.0}
        assert doc["up_to_scale"] is False

    def test_crb_json_schema(self, tmp_path):
        sigma = np.diag([1.0, 4.0, 9.0, 16.0])
        crb = CrbResult(sigma_theta=sigma, rcrb=float(np.sqrt(30.0)),
                        kind="constrained")
        p = tmp_path / "crb.json"
        write_crb_json(crb, str(p), sensor_ids=("a", "b"))
        doc = json.loads(p.read_text())
        assert doc["kind"] == "constrained"
        assert doc["per_sensor_std"][0] == {"sensor": "a", "alpha_std": 1.0,
                                            "beta_std": 2.0}
        assert doc["per_sensor_std"][1]["alpha_std"] == 3.0
        assert np.array(doc["sigma_theta"]).shape == (4, 4)

    def test_manifest(self, tmp_path):
        p = tmp_path / "manifest.json"
        write_manifest(RunManifest(command="simulate", config={"trials": 3},
                                   seed=7, tool_version="0.1.0",
                                   inputs=[], outputs=["rmse_curves.csv"],
                                   duration_seconds=0.25), str(p))
        doc = json.loads(p.read_text())
        assert doc["command"] == "simulate"
        assert doc["seed"] == 7
        assert doc["outputs"] == ["rmse_curves.csv"]
