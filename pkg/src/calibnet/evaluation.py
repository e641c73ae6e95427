"""Applying estimated calibrations and scoring them against a reference sensor.

The error metrics follow the real-data workflow: for each calibrated series
``z_i`` and the raw reference series ``z``, the absolute error is
``g = |z_i - z|``; MAE is the mean of ``g`` and MAD is the mean absolute
deviation of ``g`` about its own mean. MAD deliberately discards a constant
offset error (a constant ``g`` scores zero), isolating gain-type mistakes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyInput, IndexOutOfRange
from .model import CalibrationParams, SensorDataset

__all__ = [
    "CalibratedDataset",
    "MetricRow",
    "apply_calibration",
    "mae",
    "mad",
    "evaluate_against_reference",
]


@dataclass(frozen=True)
class CalibratedDataset:
    """Calibrated signals (column i is alpha_i * y_i + beta_i) plus a label
    naming the estimator/constraint that produced them."""

    values: np.ndarray
    sensor_ids: tuple[str, ...]
    provenance: str = ""

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        v = np.array(values, copy=True)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "sensor_ids", tuple(str(s) for s in self.sensor_ids))
        if len(self.sensor_ids) != self.values.shape[1]:
            raise DimensionMismatch("one sensor id per column required")
        if not np.all(np.isfinite(self.values)):
            raise DimensionMismatch("calibrated values must be finite")


def apply_calibration(
    data: SensorDataset, params: CalibrationParams, provenance: str = ""
) -> CalibratedDataset:
    """Apply per-sensor inverse parameters to raw readings."""
    if params.n_sensors != data.n_sensors:
        raise DimensionMismatch(
            f"params cover {params.n_sensors} sensors, dataset has {data.n_sensors}")
    values = data.readings * params.alphas[None, :] + params.betas[None, :]
    return CalibratedDataset(values=values, sensor_ids=data.sensor_ids,
                             provenance=provenance)


def _paired(candidate, reference) -> tuple[np.ndarray, np.ndarray]:
    c = np.asarray(candidate, dtype=float).ravel()
    r = np.asarray(reference, dtype=float).ravel()
    if c.size == 0 or r.size == 0:
        raise EmptyInput("metric inputs must be nonempty")
    if c.shape != r.shape:
        raise DimensionMismatch(f"lengths differ: {c.size} vs {r.size}")
    return c, r


def mae(candidate, reference) -> float:
    """Mean absolute error between two equal-length series."""
    c, r = _paired(candidate, reference)
    return float(np.mean(np.abs(c - r)))


def mad(candidate, reference) -> float:
    """Mean absolute deviation of the absolute error about its mean.

    Adding a constant to a candidate that stays on one side of the reference
    leaves this metric unchanged, so pure offset errors score zero while gain
    errors survive.
    """
    c, r = _paired(candidate, reference)
    g = np.abs(c - r)
    return float(np.mean(np.abs(g - g.mean())))


@dataclass(frozen=True)
class MetricRow:
    solution: str
    sensor: str
    mae: float
    mad: float


def evaluate_against_reference(
    data: SensorDataset,
    solutions: list[CalibratedDataset],
    ref_sensor: int,
) -> list[MetricRow]:
    """Score each solution's sensors against the raw readings of the
    designated reference sensor (1-based index into the dataset columns)."""
    if not solutions:
        raise EmptyInput("no solutions to evaluate")
    i = int(ref_sensor)
    if not 1 <= i <= data.n_sensors:
        raise IndexOutOfRange(f"reference sensor {i} outside 1..{data.n_sensors}")
    reference = data.readings[:, i - 1]
    rows: list[MetricRow] = []
    for k, sol in enumerate(solutions):
        if sol.values.shape[0] != data.n_samples:
            raise DimensionMismatch(
                f"solution {k} has {sol.values.shape[0]} rows, dataset has "
                f"{data.n_samples}")
        label = sol.provenance or f"solution{k + 1}"
        for j, sid in enumerate(sol.sensor_ids):
            rows.append(MetricRow(
                solution=label,
                sensor=sid,
                mae=mae(sol.values[:, j], reference),
                mad=mad(sol.values[:, j], reference),
            ))
    return rows
