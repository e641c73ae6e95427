"""Dataset and report serialization: CSV for tabular data, JSON for
parameters, bounds and run manifests.

All numeric output uses the shortest round-trip representation (Python's
``repr`` for floats), so re-ingesting a written file loses no accuracy.
Files are written atomically (temp file in the target directory + rename).
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass, field, asdict

import numpy as np

from .bounds import CrbResult
from .errors import NonNumericCell, ParseError, TooFewRows
from .evaluation import MetricRow
from .model import CalibrationParams, SensorDataset
from .simulation import MonteCarloReport

__all__ = [
    "ingest_csv",
    "write_dataset_csv",
    "write_rmse_curves_csv",
    "write_metrics_csv",
    "write_params_json",
    "write_crb_json",
    "RunManifest",
    "write_manifest",
]

RMSE_CURVE_COLUMNS = ("m", "estimator", "constraint", "rmse", "rcrb",
                      "rcrb_unconstrained")
METRIC_COLUMNS = ("solution", "sensor", "mae", "mad")
TIMESTAMP_COLUMN = "timestamp"


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def ingest_csv(path: str) -> SensorDataset:
    """Read a dataset CSV: a header row of sensor ids (optionally preceded by
    a ``timestamp`` column) followed by numeric rows."""
    with open(path, "r", encoding="utf-8-sig", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if not header or any(h == "" for h in header):
            raise ParseError(f"{path}: blank column name in header")
        has_time = header[0].lower() == TIMESTAMP_COLUMN
        ids = header[1:] if has_time else header
        if len(ids) < 2:
            raise ParseError(f"{path}: need at least 2 sensor columns, got {len(ids)}")
        width = len(header)
        rows: list[list[float]] = []
        stamps: list[str] = []
        for lineno, cells in enumerate(reader, start=2):
            if not cells or (len(cells) == 1 and cells[0].strip() == ""):
                continue  # ignore trailing blank lines
            if len(cells) != width:
                raise ParseError(
                    f"{path}: row {lineno} has {len(cells)} cells, expected {width}")
            if has_time:
                stamps.append(cells[0].strip())
                cells = cells[1:]
            parsed = []
            for col, cell in enumerate(cells):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    name = ids[col]
                    raise NonNumericCell(
                        f"{path}: row {lineno}, column {name!r}: "
                        f"cannot parse {cell.strip()!r} as a number") from None
            rows.append(parsed)
    if len(rows) < 2:
        raise TooFewRows(f"{path}: {len(rows)} data row(s); need at least 2")
    return SensorDataset(
        readings=np.array(rows, dtype=float),
        sensor_ids=tuple(ids),
        timestamps=tuple(stamps) if has_time else None,
    )


def write_dataset_csv(data: SensorDataset, path: str) -> None:
    lines = []
    if data.timestamps is not None:
        lines.append(",".join([TIMESTAMP_COLUMN, *data.sensor_ids]))
        for stamp, row in zip(data.timestamps, data.readings):
            lines.append(",".join([stamp, *(_fmt(v) for v in row)]))
    else:
        lines.append(",".join(data.sensor_ids))
        for row in data.readings:
            lines.append(",".join(_fmt(v) for v in row))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_rmse_curves_csv(report: MonteCarloReport, path: str) -> None:
    lines = [",".join(RMSE_CURVE_COLUMNS)]
    for r in report.rows:
        lines.append(",".join([
            str(r.m), r.estimator, r.constraint,
            _fmt(r.rmse), _fmt(r.rcrb), _fmt(r.rcrb_unconstrained),
        ]))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_metrics_csv(rows: list[MetricRow], path: str) -> None:
    lines = [",".join(METRIC_COLUMNS)]
    for r in rows:
        lines.append(",".join([r.solution, r.sensor, _fmt(r.mae), _fmt(r.mad)]))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _finite_or_none(v: float):
    return float(v) if np.isfinite(v) else None


def write_params_json(
    params: CalibrationParams,
    sensor_ids,
    path: str,
    constraint: str = "",
    estimator: str = "",
    up_to_scale: bool = False,
) -> None:
    sensors = []
    for sid, alpha, beta in zip(sensor_ids, params.alphas, params.betas):
        omega = 1.0 / alpha if alpha != 0 else np.inf
        phi = -beta / alpha if alpha != 0 else np.inf
        sensors.append({
            "id": str(sid),
            "alpha": float(alpha),
            "beta": float(beta),
            "omega": _finite_or_none(omega),
            "phi": _finite_or_none(phi),
        })
    doc = {
        "sensors": sensors,
        "constraint": constraint,
        "estimator": estimator,
        "up_to_scale": bool(up_to_scale),
    }
    _atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


def write_crb_json(crb: CrbResult, path: str, sensor_ids=None) -> None:
    doc = {
        "kind": crb.kind,
        "rcrb": float(crb.rcrb),
        "sigma_theta": [[float(v) for v in row] for row in crb.sigma_theta],
        "per_sensor_std": [
            {"sensor": (str(sensor_ids[i]) if sensor_ids is not None else f"s{i + 1}"),
             "alpha_std": a, "beta_std": b}
            for i, (a, b) in enumerate(crb.per_sensor_std)
        ],
    }
    _atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce one CLI run byte-for-byte (the wall
    clock duration is informational)."""

    command: str
    config: dict
    seed: int | None
    tool_version: str
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    duration_seconds: float = 0.0


def write_manifest(manifest: RunManifest, path: str) -> None:
    _atomic_write_text(path, json.dumps(asdict(manifest), indent=2) + "\n")
