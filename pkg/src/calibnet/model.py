"""Measurement model, parameter mappings, and structured assembly of the
calibration quadratic form.

Every sensor is modelled as a first-order response ``y_i = w_i * x + f_i + e_i``
(gain ``w_i``, offset ``f_i``, noise variance ``s2_i``). Calibration works with
the inverse parameters ``alpha_i = 1/w_i`` and ``beta_i = -f_i/w_i`` stacked in
the interleaved order ``theta = [a1, b1, a2, b2, ...]``; that ordering is part
of the public contract of every module in this package.

The 2N x 2N quadratic-form matrix never materializes the NM x NM centering
operator. Its (i, j) 2x2 block factors as ``omega[i, j] * gram(i, j)`` where
``omega`` is an N x N weight matrix and ``gram(i, j)`` is the Gram block of the
per-sensor design matrices ``V_i = [y_i, 1]``. A dense reference construction
exists only in the test suite, gated to small sizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateGain,
    DimensionMismatch,
    InvalidSize,
    MissingNoiseModel,
)
from .linalg import sym_pinv

__all__ = [
    "SensorDataset",
    "CalibrationParams",
    "ForwardSensorModel",
    "GramBlockGrid",
    "WeightingSpec",
    "to_inverse_params",
    "from_inverse_params",
    "centering_matrix",
    "gram_blocks",
    "block_weight_matrix",
    "assemble_G",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SensorDataset:
    """An M x N matrix of raw sensor readings plus sensor identifiers.

    Rows are time samples, columns are sensors. Requires M >= 2 and N >= 2
    (the constrained solution exists only for M >= 2) and finite entries;
    missing data is out of scope.
    """

    readings: np.ndarray
    sensor_ids: tuple[str, ...]
    timestamps: tuple[str, ...] | None = None

    def __post_init__(self):
        readings = np.atleast_2d(np.asarray(self.readings, dtype=float))
        object.__setattr__(self, "readings", _readonly(readings))
        object.__setattr__(self, "sensor_ids", tuple(str(s) for s in self.sensor_ids))
        if self.timestamps is not None:
            object.__setattr__(self, "timestamps", tuple(str(t) for t in self.timestamps))
        m, n = self.readings.shape
        if m < 2:
            raise InvalidSize(f"need at least 2 samples, got M={m}")
        if n < 2:
            raise InvalidSize(f"need at least 2 sensors, got N={n}")
        if len(self.sensor_ids) != n:
            raise DimensionMismatch(
                f"{len(self.sensor_ids)} sensor ids for {n} data columns")
        if self.timestamps is not None and len(self.timestamps) != m:
            raise DimensionMismatch(
                f"{len(self.timestamps)} timestamps for {m} rows")
        if not np.all(np.isfinite(self.readings)):
            raise InvalidSize("readings must be finite (no NaN/Inf)")

    @property
    def n_samples(self) -> int:
        return self.readings.shape[0]

    @property
    def n_sensors(self) -> int:
        return self.readings.shape[1]

    def column(self, sensor_id: str) -> np.ndarray:
        from .errors import UnknownSensorId

        try:
            j = self.sensor_ids.index(str(sensor_id))
        except ValueError:
            raise UnknownSensorId(
                f"sensor id {sensor_id!r} not in {list(self.sensor_ids)}") from None
        return self.readings[:, j]


@dataclass(frozen=True)
class CalibrationParams:
    """Per-sensor inverse-model pairs (alpha_i, beta_i).

    ``alpha`` is the unitless gain inverse, ``beta`` the offset correction in
    signal units. The stacked vector ``theta`` interleaves them as
    ``[a1, b1, a2, b2, ...]``.
    """

    alphas: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        alphas = np.atleast_1d(np.asarray(self.alphas, dtype=float))
        betas = np.atleast_1d(np.asarray(self.betas, dtype=float))
        object.__setattr__(self, "alphas", _readonly(alphas))
        object.__setattr__(self, "betas", _readonly(betas))
        if self.alphas.shape != self.betas.shape or self.alphas.ndim != 1:
            raise DimensionMismatch("alphas and betas must be 1-D of equal length")
        if not (np.all(np.isfinite(self.alphas)) and np.all(np.isfinite(self.betas))):
            raise InvalidSize("calibration parameters must be finite")

    @classmethod
    def from_theta(cls, theta: np.ndarray) -> "CalibrationParams":
        theta = np.asarray(theta, dtype=float)
        if theta.ndim != 1 or theta.size % 2:
            raise DimensionMismatch("theta must be a flat vector of even length")
        return cls(alphas=theta[0::2], betas=theta[1::2])

    @property
    def theta(self) -> np.ndarray:
        out = np.empty(2 * self.alphas.size)
        out[0::2] = self.alphas
        out[1::2] = self.betas
        return out

    @property
    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.alphas.tolist(), self.betas.tolist()))

    @property
    def n_sensors(self) -> int:
        return self.alphas.size


@dataclass(frozen=True)
class ForwardSensorModel:
    """Ground-truth per-sensor gains, offsets and noise variances."""

    gains: np.ndarray
    offsets: np.ndarray
    noise_vars: np.ndarray | None = None

    def __post_init__(self):
        gains = np.atleast_1d(np.asarray(self.gains, dtype=float))
        offsets = np.atleast_1d(np.asarray(self.offsets, dtype=float))
        object.__setattr__(self, "gains", _readonly(gains))
        object.__setattr__(self, "offsets", _readonly(offsets))
        if self.gains.shape != self.offsets.shape or self.gains.ndim != 1:
            raise DimensionMismatch("gains and offsets must be 1-D of equal length")
        if np.any(self.gains == 0.0):
            raise DegenerateGain("all gains must be nonzero")
        if self.noise_vars is not None:
            nv = np.atleast_1d(np.asarray(self.noise_vars, dtype=float))
            object.__setattr__(self, "noise_vars", _readonly(nv))
            if nv.shape != self.gains.shape:
                raise DimensionMismatch("noise_vars length must match gains")
            if np.any(nv < 0.0):
                raise InvalidSize("noise variances must be >= 0")

    @property
    def n_sensors(self) -> int:
        return self.gains.size

    def response(self, phenomenon: np.ndarray) -> np.ndarray:
        """Noiseless readings for a common source: column i is w_i*x + f_i."""
        x = np.asarray(phenomenon, dtype=float)
        return x[:, None] * self.gains[None, :] + self.offsets[None, :]


@dataclass(frozen=True)
class GramBlockGrid:
    """N x N grid of 2x2 Gram blocks V_i^T V_j with V_i = [y_i, 1].

    Stored as an (N, N, 2, 2) array; block (i, j) is
    ``[[y_i.y_j, sum y_i], [sum y_j, M]]`` and equals block (j, i) transposed.
    """

    blocks: np.ndarray
    n_samples: int

    def __post_init__(self):
        blocks = np.asarray(self.blocks, dtype=float)
        object.__setattr__(self, "blocks", _readonly(blocks))
        n = blocks.shape[0]
        if blocks.shape != (n, n, 2, 2):
            raise DimensionMismatch("blocks must have shape (N, N, 2, 2)")

    @property
    def n_sensors(self) -> int:
        return self.blocks.shape[0]

    def block(self, i: int, j: int) -> np.ndarray:
        """The 2x2 block for sensor pair (i, j); indices are 0-based."""
        return self.blocks[i, j]


@dataclass(frozen=True)
class WeightingSpec:
    """Choice of weighting for the quadratic form.

    ``identity`` gives ordinary (unweighted) disagreement; ``whitened``
    pre-whitens using per-sensor variances ``alpha_i^2 * s2_i`` and needs both
    ``noise_vars`` (> 0) and ``alphas`` (nonzero).
    """

    mode: str
    noise_vars: np.ndarray | None = None
    alphas: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in ("identity", "whitened"):
            raise InvalidSize(f"unknown weighting mode {self.mode!r}")
        if self.mode == "whitened":
            if self.noise_vars is None or self.alphas is None:
                raise MissingNoiseModel(
                    "whitened weighting needs noise_vars and alphas")
            nv = np.atleast_1d(np.asarray(self.noise_vars, dtype=float))
            al = np.atleast_1d(np.asarray(self.alphas, dtype=float))
            object.__setattr__(self, "noise_vars", _readonly(nv))
            object.__setattr__(self, "alphas", _readonly(al))
            if nv.shape != al.shape:
                raise DimensionMismatch("noise_vars and alphas must match")
            if np.any(nv <= 0.0) or not np.all(np.isfinite(nv)):
                raise MissingNoiseModel("noise variances must be finite and > 0")
            if np.any(al == 0.0) or not np.all(np.isfinite(al)):
                raise MissingNoiseModel("alphas must be finite and nonzero")

    @classmethod
    def identity(cls) -> "WeightingSpec":
        return cls(mode="identity")

    @classmethod
    def whitened(cls, noise_vars, alphas) -> "WeightingSpec":
        return cls(mode="whitened", noise_vars=noise_vars, alphas=alphas)


def to_inverse_params(model: ForwardSensorModel) -> CalibrationParams:
    """Map forward gains/offsets (w, f) to inverse pairs (1/w, -f/w)."""
    if np.any(model.gains == 0.0):
        raise DegenerateGain("gain of zero cannot be inverted")
    return CalibrationParams(alphas=1.0 / model.gains,
                             betas=-model.offsets / model.gains)


def from_inverse_params(params: CalibrationParams) -> ForwardSensorModel:
    """Inverse of :func:`to_inverse_params`; returns gains/offsets only."""
    if np.any(params.alphas == 0.0):
        raise DegenerateGain("alpha of zero cannot be inverted")
    return ForwardSensorModel(gains=1.0 / params.alphas,
                              offsets=-params.betas / params.alphas)


def centering_matrix(n: int) -> np.ndarray:
    """The N x N centering matrix N*I - 1*1^T (annihilates the ones vector)."""
    n = int(n)
    if n < 2:
        raise InvalidSize(f"centering matrix needs N >= 2, got {n}")
    return n * np.eye(n) - np.ones((n, n))


def _gram_blocks_from_matrix(y: np.ndarray) -> GramBlockGrid:
    y = np.asarray(y, dtype=float)
    m, n = y.shape
    inner = y.T @ y
    col_sums = y.sum(axis=0)
    blocks = np.empty((n, n, 2, 2))
    blocks[:, :, 0, 0] = inner
    blocks[:, :, 0, 1] = col_sums[:, None]
    blocks[:, :, 1, 0] = col_sums[None, :]
    blocks[:, :, 1, 1] = float(m)
    return GramBlockGrid(blocks=blocks, n_samples=m)


def gram_blocks(data: SensorDataset) -> GramBlockGrid:
    """All pairwise Gram blocks V_i^T V_j of the per-sensor design matrices."""
    return _gram_blocks_from_matrix(data.readings)


def block_weight_matrix(spec: WeightingSpec, n: int) -> np.ndarray:
    """The N x N weight factor such that the quadratic form's 2x2 block (i, j)
    is ``omega[i, j] * V_i^T V_j``.

    Identity mode yields N*P (P the centering matrix). Whitened mode yields
    ``P (P D P)^+ P`` with ``D = diag(alpha_i^2 * s2_i)``; the pseudoinverse
    absorbs the structural rank deficiency of the centered covariance.
    """
    n = int(n)
    p = centering_matrix(n)
    if spec.mode == "identity":
        return n * p
    nv = spec.noise_vars
    al = spec.alphas
    if nv.size != n:
        raise DimensionMismatch(f"noise model covers {nv.size} sensors, need {n}")
    d = (al ** 2) * nv
    core = sym_pinv(p @ (d[:, None] * p))
    omega = p @ core @ p
    return 0.5 * (omega + omega.T)


def assemble_G(grams: GramBlockGrid, omega: np.ndarray) -> np.ndarray:
    """Assemble the symmetric 2N x 2N quadratic-form matrix from Gram blocks
    and the N x N weight factor."""
    omega = np.asarray(omega, dtype=float)
    n = grams.n_sensors
    if omega.shape != (n, n):
        raise DimensionMismatch(
            f"weight matrix is {omega.shape}, expected {(n, n)}")
    scaled = omega[:, :, None, None] * grams.blocks
    return scaled.transpose(0, 2, 1, 3).reshape(2 * n, 2 * n)
