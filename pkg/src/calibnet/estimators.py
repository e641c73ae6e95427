"""Constraint builders and the constrained least-squares solvers.

The constrained minimizer of ``0.5 * theta' G theta`` subject to
``C theta = d`` is obtained from one symmetric indefinite solve of the
(2N+P) x (2N+P) saddle-point system ``[[G, C'], [C, 0]] [theta; lambda] =
[0; d]``. Sizes here are small, so robustness beats micro-optimization: the
system is diagonally equilibrated, solved, polished with one step of
iterative refinement, and gated by a condition estimate.

Sensor indices in the constraint builders are 1-based (sensor 1 is the first
column of the dataset), matching how references are named in configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateData,
    DimensionMismatch,
    DuplicateReference,
    EmptyInput,
    IndexOutOfRange,
    InvalidConfig,
    InvalidSize,
    SingularKkt,
)
from .model import (
    CalibrationParams,
    SensorDataset,
    WeightingSpec,
    assemble_G,
    block_weight_matrix,
    gram_blocks,
)

__all__ = [
    "ConstraintSet",
    "KktSolution",
    "single_reference_constraint",
    "multi_reference_constraint",
    "sum_constraint",
    "solve_kkt",
    "calibrate_cls",
    "calibrate_wcls",
    "blind_calibrate",
]

_EPS = float(np.finfo(float).eps)
_COND_LIMIT = 1e12
_IDEAL_REFERENCE = (1.0, 0.0)


@dataclass(frozen=True)
class ConstraintSet:
    """Equality constraints ``C theta = d`` encoding reference information.

    ``C`` is P x 2N with full row rank, 1 <= P <= 2N; ``label`` names the
    construction (single_reference, multi_reference, sum, custom).
    """

    C: np.ndarray
    d: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.C, dtype=float))
        d = np.atleast_1d(np.asarray(self.d, dtype=float))
        c = np.array(c, copy=True)
        d = np.array(d, copy=True)
        c.flags.writeable = False
        d.flags.writeable = False
        object.__setattr__(self, "C", c)
        object.__setattr__(self, "d", d)
        p, n2 = self.C.shape
        if n2 % 2 or n2 < 4:
            raise DimensionMismatch("constraint matrix must have 2N >= 4 columns")
        if not 1 <= p <= n2:
            raise InvalidSize(f"need 1 <= P <= 2N constraints, got P={p}")
        if self.d.shape != (p,):
            raise DimensionMismatch("d must have one entry per constraint row")
        if not (np.all(np.isfinite(self.C)) and np.all(np.isfinite(self.d))):
            raise InvalidSize("constraints must be finite")
        s = np.linalg.svd(self.C, compute_uv=False)
        if s[-1] <= _EPS * max(self.C.shape) * s[0]:
            raise InvalidSize("constraint matrix is row-rank deficient")

    @property
    def n_constraints(self) -> int:
        return self.C.shape[0]

    @property
    def n_params(self) -> int:
        return self.C.shape[1]


@dataclass(frozen=True)
class KktSolution:
    """Solution of the saddle-point system: parameters, Lagrange multipliers,
    and the residual norm of the full linear system."""

    theta: CalibrationParams
    multipliers: np.ndarray
    residual_norm: float


def single_reference_constraint(
    ref_index: int,
    ref_params: tuple[float, float] = _IDEAL_REFERENCE,
    n: int | None = None,
) -> ConstraintSet:
    """Constraint pinning sensor ``ref_index`` (1-based) at the given
    (alpha, beta); defaults to the ideal sensor (1, 0) when no lab values
    are supplied."""
    if n is None:
        raise InvalidSize("sensor count n is required")
    n = int(n)
    if n < 2:
        raise InvalidSize(f"need N >= 2 sensors, got {n}")
    i = int(ref_index)
    if not 1 <= i <= n:
        raise IndexOutOfRange(f"reference index {i} outside 1..{n}")
    c = np.zeros((2, 2 * n))
    c[0, 2 * (i - 1)] = 1.0
    c[1, 2 * (i - 1) + 1] = 1.0
    alpha, beta = float(ref_params[0]), float(ref_params[1])
    return ConstraintSet(C=c, d=np.array([alpha, beta]), label="single_reference")


def multi_reference_constraint(
    refs: list[tuple[int, float, float]], n: int
) -> ConstraintSet:
    """Stacked selector rows for several references, each a tuple
    ``(sensor_index, alpha, beta)`` with 1-based indices."""
    if not refs:
        raise EmptyInput("need at least one reference")
    n = int(n)
    seen: set[int] = set()
    rows = []
    d = []
    for idx, alpha, beta in refs:
        i = int(idx)
        if not 1 <= i <= n:
            raise IndexOutOfRange(f"reference index {i} outside 1..{n}")
        if i in seen:
            raise DuplicateReference(f"sensor {i} designated twice")
        seen.add(i)
        r_a = np.zeros(2 * n)
        r_b = np.zeros(2 * n)
        r_a[2 * (i - 1)] = 1.0
        r_b[2 * (i - 1) + 1] = 1.0
        rows.extend([r_a, r_b])
        d.extend([float(alpha), float(beta)])
    label = "single_reference" if len(refs) == 1 else "multi_reference"
    return ConstraintSet(C=np.vstack(rows), d=np.array(d), label=label)


def sum_constraint(n: int) -> ConstraintSet:
    """Reference-free anchor: mean alpha = 1 and mean beta = 0 across the
    network (a virtual reference at the ideal sensor values)."""
    n = int(n)
    if n < 2:
        raise InvalidSize(f"need N >= 2 sensors, got {n}")
    c = np.zeros((2, 2 * n))
    c[0, 0::2] = 1.0
    c[1, 1::2] = 1.0
    return ConstraintSet(C=c, d=np.array([float(n), 0.0]), label="sum")


def _equilibration(b: np.ndarray) -> np.ndarray:
    # Jacobi-style symmetric scaling; constraint rows have zero diagonal,
    # so fall back to the row maximum there.
    d = np.abs(np.diag(b)).astype(float)
    weak = d < 1e-300
    if np.any(weak):
        row_max = np.max(np.abs(b), axis=1)
        d[weak] = np.where(row_max[weak] > 0, row_max[weak], 1.0)
    return np.sqrt(d)


def solve_kkt(G: np.ndarray, constraints: ConstraintSet) -> KktSolution:
    """Solve ``min 0.5 theta' G theta  s.t.  C theta = d`` via the saddle-point
    system; raises :class:`SingularKkt` when the system is numerically
    singular (constraints do not pin the nullspace, or degenerate data)."""
    G = np.asarray(G, dtype=float)
    n2 = G.shape[0]
    if G.shape != (n2, n2):
        raise DimensionMismatch("G must be square")
    if constraints.n_params != n2:
        raise DimensionMismatch(
            f"constraints expect {constraints.n_params} parameters, G has {n2}")
    c = constraints.C
    d = constraints.d
    p = c.shape[0]

    # The minimizer is invariant to a positive rescaling of G; normalizing
    # keeps the saddle-point matrix well scaled against O(1) constraint rows.
    gscale = np.linalg.norm(G)
    if not np.isfinite(gscale):
        raise SingularKkt("G contains non-finite entries")
    if gscale == 0.0:
        gscale = 1.0

    b = np.zeros((n2 + p, n2 + p))
    b[:n2, :n2] = G / gscale
    b[:n2, n2:] = c.T
    b[n2:, :n2] = c
    h = np.concatenate([np.zeros(n2), d])

    scale = _equilibration(b)
    be = b / scale[:, None] / scale[None, :]
    he = h / scale

    cond = np.linalg.cond(be)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise SingularKkt(
            f"KKT matrix condition estimate {cond:.2e} exceeds {_COND_LIMIT:.0e}; "
            "add a constraint or check for constant sensors")
    try:
        nu = np.linalg.solve(be, he)
        nu += np.linalg.solve(be, he - be @ nu)  # one refinement pass
    except np.linalg.LinAlgError as exc:
        raise SingularKkt(str(exc)) from exc
    nu /= scale

    theta = nu[:n2]
    lam = nu[n2:] * gscale
    full = np.concatenate([G @ theta + c.T @ lam, c @ theta - d])
    return KktSolution(
        theta=CalibrationParams.from_theta(theta),
        multipliers=lam,
        residual_norm=float(np.linalg.norm(full)),
    )


def calibrate_cls(data: SensorDataset, constraints: ConstraintSet) -> KktSolution:
    """Constrained least-squares calibration (unweighted disagreement)."""
    grams = gram_blocks(data)
    omega = block_weight_matrix(WeightingSpec.identity(), data.n_sensors)
    return solve_kkt(assemble_G(grams, omega), constraints)


def calibrate_wcls(
    data: SensorDataset,
    constraints: ConstraintSet,
    noise_vars,
    iterations: int = 2,
    alphas=None,
) -> KktSolution:
    """Whitened constrained least squares with iterative reweighting.

    The whitening covariance depends on the unknown inverse gains, so the
    first pass uses alphas from an unweighted solve (or the caller-supplied
    ``alphas``, e.g. ground truth) and each subsequent iteration re-forms the
    weights from the latest estimate. ``iterations`` counts whitened solves.
    """
    if iterations < 1:
        raise InvalidConfig("iterations must be >= 1")
    noise_vars = np.atleast_1d(np.asarray(noise_vars, dtype=float))
    grams = gram_blocks(data)
    n = data.n_sensors
    if alphas is None:
        seed = solve_kkt(
            assemble_G(grams, block_weight_matrix(WeightingSpec.identity(), n)),
            constraints,
        )
        cur_alphas = seed.theta.alphas
    else:
        cur_alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    sol = None
    for _ in range(int(iterations)):
        spec = WeightingSpec.whitened(noise_vars, cur_alphas)
        sol = solve_kkt(assemble_G(grams, block_weight_matrix(spec, n)), constraints)
        cur_alphas = sol.theta.alphas
    return sol


def blind_calibrate(data: SensorDataset, gap_rtol: float = 1e-6) -> CalibrationParams:
    """Reference-free baseline: the unit-norm eigenvector of the unweighted
    quadratic form with smallest eigenvalue, sign-fixed to positive mean alpha.

    The result is meaningful only up to an affine ambiguity (a common scale on
    all pairs plus a common offset shift); absolute offset information is lost.
    Raises :class:`DegenerateData` when the two smallest eigenvalues agree to
    ``gap_rtol`` relative, i.e. no single direction is isolated at the noise
    level and the homogeneity assumption is uninformative for this data.
    """
    grams = gram_blocks(data)
    omega = block_weight_matrix(WeightingSpec.identity(), data.n_sensors)
    g = assemble_G(grams, omega)
    w, v = np.linalg.eigh(0.5 * (g + g.T))
    lam0, lam1 = float(w[0]), float(w[1])
    # Gap measured against the magnitude of the pair itself: a doubly
    # rank-deficient noiseless grid still returns a family member, while a
    # genuine tie at the noise level raises.
    if (lam1 - lam0) <= gap_rtol * max(abs(lam0), abs(lam1)):
        raise DegenerateData(
            f"two smallest eigenvalues {lam0:.3e}, {lam1:.3e} are not separated; "
            "blind direction is ambiguous")
    vec = v[:, 0]
    mean_alpha = vec[0::2].mean()
    if mean_alpha < 0 or (mean_alpha == 0 and vec[1::2].mean() < 0):
        vec = -vec
    return CalibrationParams.from_theta(vec)
