"""Self-calibration of dense sensor networks by constrained least squares,
with Cramer-Rao benchmarking."""

__version__ = "0.1.0"

from .bounds import CrbResult, constrained_crb, fisher_information, unconstrained_crb
from .errors import CalibrationError
from .estimators import (
    ConstraintSet,
    KktSolution,
    blind_calibrate,
    calibrate_cls,
    calibrate_wcls,
    multi_reference_constraint,
    single_reference_constraint,
    solve_kkt,
    sum_constraint,
)
from .evaluation import (
    CalibratedDataset,
    MetricRow,
    apply_calibration,
    evaluate_against_reference,
    mad,
    mae,
)
from .model import (
    CalibrationParams,
    ForwardSensorModel,
    GramBlockGrid,
    SensorDataset,
    WeightingSpec,
    assemble_G,
    block_weight_matrix,
    centering_matrix,
    from_inverse_params,
    gram_blocks,
    to_inverse_params,
)
from .simulation import (
    MonteCarloReport,
    MonteCarloRow,
    ScenarioConfig,
    affine_align,
    constraint_gauge_truth,
    generate_scenario,
    office_co2_analog,
    rmse,
    run_monte_carlo,
)

__all__ = [
    "__version__",
    "CalibrationError",
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
    "ConstraintSet",
    "KktSolution",
    "single_reference_constraint",
    "multi_reference_constraint",
    "sum_constraint",
    "solve_kkt",
    "calibrate_cls",
    "calibrate_wcls",
    "blind_calibrate",
    "CrbResult",
    "fisher_information",
    "constrained_crb",
    "unconstrained_crb",
    "ScenarioConfig",
    "MonteCarloRow",
    "MonteCarloReport",
    "generate_scenario",
    "rmse",
    "run_monte_carlo",
    "office_co2_analog",
    "constraint_gauge_truth",
    "affine_align",
    "CalibratedDataset",
    "MetricRow",
    "apply_calibration",
    "mae",
    "mad",
    "evaluate_against_reference",
]
