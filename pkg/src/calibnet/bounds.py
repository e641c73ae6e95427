"""Fisher information and Cramer-Rao lower bounds for the calibration model.

The constrained bound restricts the inverse information to the feasible
manifold ``C theta = d`` through an orthonormal nullspace basis of the
constraint gradient; the unconstrained bound is the Moore-Penrose
pseudoinverse of the (rank-deficient) information matrix. The scalar summary
used by the Monte-Carlo harness is the square root of the covariance trace.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstantPhenomenon, DegenerateNoise, InvalidSize, UnresolvedAmbiguity
from .estimators import ConstraintSet
from .linalg import nullspace_basis, sym_pinv
from .model import ForwardSensorModel, WeightingSpec, _gram_blocks_from_matrix, assemble_G, block_weight_matrix

__all__ = ["CrbResult", "fisher_information", "constrained_crb", "unconstrained_crb"]

_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class CrbResult:
    """Covariance lower bound and its scalar summary sqrt(trace)."""

    sigma_theta: np.ndarray
    rcrb: float
    kind: str  # "constrained" | "unconstrained"

    def __post_init__(self):
        s = np.asarray(self.sigma_theta, dtype=float)
        s = np.array(s, copy=True)
        s.flags.writeable = False
        object.__setattr__(self, "sigma_theta", s)

    @property
    def per_sensor_std(self) -> list[tuple[float, float]]:
        """Marginal standard deviations (alpha_std, beta_std) per sensor."""
        diag = np.clip(np.diag(self.sigma_theta), 0.0, None)
        std = np.sqrt(diag)
        return list(zip(std[0::2].tolist(), std[1::2].tolist()))


def fisher_information(
    truth: ForwardSensorModel,
    phenomenon: np.ndarray,
    measurements: np.ndarray | None = None,
) -> np.ndarray:
    """Information matrix of the whitened disagreement model, evaluated at the
    true parameters.

    By default the design blocks use the noiseless responses (deterministic
    per scenario, the benchmark choice); pass ``measurements`` (an M x N
    array of actual readings) to evaluate the measurement-built variant for
    fidelity experiments.
    """
    if truth.noise_vars is None:
        raise DegenerateNoise("truth must carry noise variances")
    if np.any(truth.noise_vars == 0.0):
        raise DegenerateNoise("information is undefined for zero noise variance")
    x = np.asarray(phenomenon, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise InvalidSize("phenomenon must be a vector of at least 2 samples")
    if np.all(x == x[0]):
        raise ConstantPhenomenon("constant phenomenon leaves gains unidentifiable")
    y = truth.response(x) if measurements is None else np.asarray(measurements, dtype=float)
    if y.shape[0] != x.size or y.shape[1] != truth.n_sensors:
        raise InvalidSize("measurements must be M x N matching phenomenon and truth")
    grams = _gram_blocks_from_matrix(y)
    alphas = 1.0 / truth.gains
    spec = WeightingSpec.whitened(truth.noise_vars, alphas)
    f = assemble_G(grams, block_weight_matrix(spec, truth.n_sensors))
    return 0.5 * (f + f.T)


def constrained_crb(F: np.ndarray, constraints: ConstraintSet) -> CrbResult:
    """Bound on the feasible manifold: ``U (U' F U)^-1 U'`` with U an
    orthonormal basis of the constraint-gradient nullspace."""
    F = np.asarray(F, dtype=float)
    u = nullspace_basis(constraints.C)
    if u.shape[0] != F.shape[0]:
        raise InvalidSize("constraint width does not match F")
    if u.shape[1] == 0:
        # fully constrained: no free parameters, zero covariance
        return CrbResult(sigma_theta=np.zeros_like(F), rcrb=0.0, kind="constrained")
    k = u.T @ F @ u
    w, v = np.linalg.eigh(0.5 * (k + k.T))
    if w[-1] <= 0 or w[0] <= _EPS * k.shape[0] * w[-1]:
        raise UnresolvedAmbiguity(
            "projected information is singular: the constraint set does not "
            "identify the parameters")
    k_inv = (v / w) @ v.T
    sigma = u @ k_inv @ u.T
    sigma = 0.5 * (sigma + sigma.T)
    return CrbResult(sigma_theta=sigma, rcrb=float(np.sqrt(np.trace(sigma))),
                     kind="constrained")


def unconstrained_crb(F: np.ndarray) -> CrbResult:
    """Pseudoinverse bound: the lowest bound achievable without constraints,
    counting only the identifiable subspace of a rank-deficient F."""
    F = np.asarray(F, dtype=float)
    sigma = sym_pinv(F)
    trace = max(float(np.trace(sigma)), 0.0)
    return CrbResult(sigma_theta=sigma, rcrb=float(np.sqrt(trace)),
                     kind="unconstrained")
