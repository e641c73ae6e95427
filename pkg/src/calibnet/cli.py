"""Command-line interface: simulate, calibrate, bound, evaluate.

Each command writes its data products plus a ``manifest.json`` snapshot
sufficient to reproduce them. The seed resolution order is: explicit
``--seed`` flag, then the ``CALIBNET_SEED`` environment variable, then the
built-in default.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import __version__
from .bounds import constrained_crb, fisher_information, unconstrained_crb
from .errors import (
    CalibrationError,
    DimensionMismatch,
    InvalidConfig,
    MissingNoiseModel,
    UnknownSensorId,
)
from .estimators import (
    ConstraintSet,
    blind_calibrate,
    calibrate_cls,
    calibrate_wcls,
    multi_reference_constraint,
    single_reference_constraint,
    sum_constraint,
)
from .evaluation import CalibratedDataset, apply_calibration, evaluate_against_reference
from .io import (
    RunManifest,
    ingest_csv,
    write_crb_json,
    write_dataset_csv,
    write_manifest,
    write_metrics_csv,
    write_params_json,
    write_rmse_curves_csv,
)
from .model import ForwardSensorModel, SensorDataset
from .simulation import (
    CONSTRAINTS,
    ESTIMATORS,
    ScenarioConfig,
    generate_scenario,
    run_monte_carlo,
)

SEED_ENV = "CALIBNET_SEED"
DEFAULT_SEED = 0

CONSTRAINT_HELP = (
    "constraint spec: 'ref:<id>' (reference at ideal values 1,0), "
    "'ref:<id>,<alpha>,<beta>' (reference with lab values), "
    "'refs:<id1>,<id2>,...' (multiple ideal references), or 'sum' "
    "(reference-free network-mean anchor)"
)


def _resolve_seed(flag_value: int | None) -> int:
    if flag_value is not None:
        return int(flag_value)
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip() != "":
        try:
            return int(env)
        except ValueError:
            raise InvalidConfig(f"{SEED_ENV}={env!r} is not an integer") from None
    return DEFAULT_SEED


def _pair(text: str, name: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise InvalidConfig(f"--{name} expects 'low,high', got {text!r}")
    return float(parts[0]), float(parts[1])


def _int_list(text: str, name: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(",") if p.strip() != "")
    except ValueError:
        raise InvalidConfig(f"--{name} expects comma-separated integers") from None


def _float_list(text: str, name: str) -> np.ndarray:
    try:
        return np.array([float(p) for p in text.split(",") if p.strip() != ""])
    except ValueError:
        raise InvalidConfig(f"--{name} expects comma-separated numbers") from None


def _sensor_index(token: str, sensor_ids) -> int:
    """Resolve a sensor id (or 1-based position) to a 1-based index."""
    token = token.strip()
    ids = list(sensor_ids)
    if token in ids:
        return ids.index(token) + 1
    try:
        pos = int(token)
    except ValueError:
        raise UnknownSensorId(f"sensor id {token!r} not in {ids}") from None
    if not 1 <= pos <= len(ids):
        raise UnknownSensorId(f"sensor position {pos} outside 1..{len(ids)}")
    return pos


def parse_constraint_spec(spec: str, sensor_ids) -> ConstraintSet:
    n = len(sensor_ids)
    spec = spec.strip()
    if spec == "sum":
        return sum_constraint(n)
    if spec.startswith("refs:"):
        refs = [(_sensor_index(tok, sensor_ids), 1.0, 0.0)
                for tok in spec[len("refs:"):].split(",") if tok.strip() != ""]
        return multi_reference_constraint(refs, n)
    if spec.startswith("ref:"):
        body = spec[len("ref:"):]
        parts = [p for p in body.split(",") if p.strip() != ""]
        if len(parts) == 1:
            return single_reference_constraint(_sensor_index(parts[0], sensor_ids), n=n)
        if len(parts) == 3:
            i = _sensor_index(parts[0], sensor_ids)
            return single_reference_constraint(
                i, (float(parts[1]), float(parts[2])), n=n)
        raise InvalidConfig(
            f"'ref:' takes an id or id,alpha,beta; got {spec!r}")
    raise InvalidConfig(f"cannot parse constraint spec {spec!r}; {CONSTRAINT_HELP}")


def _out(args, filename: str) -> str:
    os.makedirs(args.out_dir, exist_ok=True)
    return os.path.join(args.out_dir, filename)


def _finish(args, command: str, config: dict, seed: int | None,
            inputs: list[str], outputs: list[str], started: float) -> None:
    manifest = RunManifest(
        command=command,
        config=config,
        seed=seed,
        tool_version=__version__,
        inputs=inputs,
        outputs=outputs,
        duration_seconds=time.perf_counter() - started,
    )
    path = _out(args, "manifest.json")
    write_manifest(manifest, path)


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    seed = _resolve_seed(args.seed)
    config = ScenarioConfig(
        n_sensors=args.n_sensors,
        m_samples=_int_list(args.m_grid, "m-grid"),
        source_range=_pair(args.source_range, "source-range"),
        gain_std=args.gain_std,
        offset_std=args.offset_std,
        noise_var_range=_pair(args.noise_range, "noise-range"),
        n_trials=args.trials,
        seed=seed,
    )
    estimators = tuple(e.strip() for e in args.estimators.split(",") if e.strip())
    constraints = tuple(c.strip() for c in args.constraints.split(",") if c.strip())
    report = run_monte_carlo(
        config,
        estimators=estimators,
        constraints=constraints,
        ref_index=args.ref_index,
        ref_policy=args.ref_policy,
    )
    out_csv = _out(args, "rmse_curves.csv")
    write_rmse_curves_csv(report, out_csv)
    _finish(args, "simulate", report.metadata, seed, [], [out_csv], started)
    print(f"wrote {out_csv} ({len(report.rows)} rows)")
    return 0


def _load_noise_vars(args, n: int) -> np.ndarray:
    if args.noise_vars is None:
        raise MissingNoiseModel(
            "wcls needs --noise-vars (comma-separated, one per sensor)")
    vars_ = _float_list(args.noise_vars, "noise-vars")
    if vars_.size == 1:
        vars_ = np.full(n, float(vars_[0]))
    if vars_.size != n:
        raise InvalidConfig(f"--noise-vars has {vars_.size} entries, need {n}")
    return vars_


def cmd_calibrate(args) -> int:
    started = time.perf_counter()
    data = ingest_csv(args.input)
    n = data.n_sensors
    up_to_scale = False
    constraint_label = ""
    if args.estimator == "blind":
        params = blind_calibrate(data)
        up_to_scale = True
    else:
        if args.constraint is None:
            raise InvalidConfig(f"--constraint is required for {args.estimator}; "
                                f"{CONSTRAINT_HELP}")
        cons = parse_constraint_spec(args.constraint, data.sensor_ids)
        constraint_label = args.constraint
        if args.estimator == "cls":
            params = calibrate_cls(data, cons).theta
        else:
            noise_vars = _load_noise_vars(args, n)
            params = calibrate_wcls(
                data, cons, noise_vars, iterations=args.wcls_iterations).theta
    out_params = _out(args, "params.json")
    write_params_json(
        params, data.sensor_ids, out_params,
        constraint=constraint_label, estimator=args.estimator,
        up_to_scale=up_to_scale)
    outputs = [out_params]
    if args.calibrated_out:
        calibrated = apply_calibration(data, params, provenance=args.estimator)
        cal_data = SensorDataset(
            readings=calibrated.values, sensor_ids=data.sensor_ids,
            timestamps=data.timestamps)
        write_dataset_csv(cal_data, args.calibrated_out)
        outputs.append(args.calibrated_out)
    config = {
        "input": args.input,
        "estimator": args.estimator,
        "constraint": constraint_label,
        "noise_vars": args.noise_vars,
        "wcls_iterations": args.wcls_iterations,
    }
    _finish(args, "calibrate", config, None, [args.input], outputs, started)
    print(f"wrote {out_params}")
    return 0


def cmd_bound(args) -> int:
    started = time.perf_counter()
    seed = None
    if args.scenario:
        seed = _resolve_seed(args.seed)
        config = ScenarioConfig(
            n_sensors=args.n_sensors,
            m_samples=args.m,
            source_range=_pair(args.source_range, "source-range"),
            gain_std=args.gain_std,
            offset_std=args.offset_std,
            noise_var_range=_pair(args.noise_range, "noise-range"),
            n_trials=1,
            seed=seed,
        )
        x, truth, data = generate_scenario(config, args.trial)
        sensor_ids = data.sensor_ids
        fim = fisher_information(truth, x)
        inputs: list[str] = []
        config_snapshot = {"scenario": True, "m": args.m, "trial": args.trial,
                           "n_sensors": args.n_sensors}
    else:
        if args.input is None:
            raise InvalidConfig("provide a dataset CSV or use --scenario")
        data = ingest_csv(args.input)
        sensor_ids = data.sensor_ids
        noise_vars = _load_noise_vars(args, data.n_sensors)
        alphas = (np.ones(data.n_sensors) if args.alphas is None
                  else _float_list(args.alphas, "alphas"))
        if alphas.size != data.n_sensors:
            raise InvalidConfig("--alphas length must match sensor count")
        gains = 1.0 / alphas
        truth = ForwardSensorModel(gains=gains, offsets=np.zeros(data.n_sensors),
                                   noise_vars=noise_vars)
        # measurement-built design: the bound for the dataset actually
        # observed, since the noiseless responses are unknown here
        x = data.readings.mean(axis=1)
        fim = fisher_information(truth, x, measurements=data.readings)
        inputs = [args.input]
        config_snapshot = {"scenario": False, "input": args.input,
                           "noise_vars": args.noise_vars, "alphas": args.alphas}
    if args.constraint is None:
        crb = unconstrained_crb(fim)
    else:
        cons = parse_constraint_spec(args.constraint, sensor_ids)
        crb = constrained_crb(fim, cons)
    out_json = _out(args, "crb.json")
    write_crb_json(crb, out_json, sensor_ids=sensor_ids)
    config_snapshot["constraint"] = args.constraint
    _finish(args, "bound", config_snapshot, seed, inputs, [out_json], started)
    print(f"wrote {out_json} (rcrb={crb.rcrb!r})")
    return 0


def cmd_evaluate(args) -> int:
    started = time.perf_counter()
    data = ingest_csv(args.input)
    ref = _sensor_index(args.reference, data.sensor_ids)
    solutions = []
    for path in args.calibrated:
        cal = ingest_csv(path)
        if cal.readings.shape != data.readings.shape:
            raise DimensionMismatch(
                f"{path}: shape {cal.readings.shape} does not match raw dataset "
                f"{data.readings.shape}")
        label = os.path.splitext(os.path.basename(path))[0]
        solutions.append(CalibratedDataset(
            values=cal.readings, sensor_ids=cal.sensor_ids, provenance=label))
    rows = evaluate_against_reference(data, solutions, ref)
    out_csv = _out(args, "metrics.csv")
    write_metrics_csv(rows, out_csv)
    config = {"input": args.input, "calibrated": list(args.calibrated),
              "reference": args.reference}
    _finish(args, "evaluate", config, None,
            [args.input, *args.calibrated], [out_csv], started)
    print(f"wrote {out_csv} ({len(rows)} rows)")
    return 0


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-sensors", type=int, default=10)
    p.add_argument("--source-range", default="10,1000",
                   help="source low,high (default 10,1000)")
    p.add_argument("--gain-std", type=float, default=0.1)
    p.add_argument("--offset-std", type=float, default=10.0)
    p.add_argument("--noise-range", default="0,20",
                   help="noise variance low,high (default 0,20)")
    p.add_argument("--seed", type=int, default=None,
                   help=f"RNG seed (default: ${SEED_ENV} or {DEFAULT_SEED})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="calibnet",
        description="Gain/offset calibration of dense sensor networks by "
                    "constrained least squares, with Cramer-Rao benchmarking.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the Monte-Carlo RMSE/RCRB study")
    _add_scenario_flags(p)
    p.add_argument("--m-grid", default="32,128,512,1024",
                   help="comma-separated sample counts")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--estimators", default="cls,wcls",
                   help=f"subset of {','.join(ESTIMATORS)}")
    p.add_argument("--constraints", default="single_ref,sum",
                   help=f"subset of {','.join(CONSTRAINTS)}")
    p.add_argument("--ref-index", type=int, default=1,
                   help="designated reference sensor (1-based)")
    p.add_argument("--ref-policy", choices=("trusted", "sampled"),
                   default="trusted",
                   help="trusted pins the reference's noise variance at the "
                        "sampler floor (lab-calibrated sensor)")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="estimate per-sensor calibration "
                                         "parameters from a dataset CSV")
    p.add_argument("input", help="dataset CSV (header of sensor ids)")
    p.add_argument("--estimator", choices=("cls", "wcls", "blind"), default="cls")
    p.add_argument("--constraint", default=None, help=CONSTRAINT_HELP)
    p.add_argument("--noise-vars", default=None,
                   help="comma-separated noise variances (required for wcls)")
    p.add_argument("--wcls-iterations", type=int, default=2)
    p.add_argument("--calibrated-out", default=None,
                   help="also write the calibrated dataset CSV here")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("bound", help="compute the (constrained) Cramer-Rao bound")
    p.add_argument("input", nargs="?", default=None,
                   help="dataset CSV (or use --scenario)")
    p.add_argument("--scenario", action="store_true",
                   help="use a synthetic scenario instead of a dataset")
    _add_scenario_flags(p)
    p.add_argument("--m", type=int, default=512, help="samples (scenario mode)")
    p.add_argument("--trial", type=int, default=0, help="trial index (scenario mode)")
    p.add_argument("--constraint", default=None,
                   help=CONSTRAINT_HELP + "; omit for the unconstrained bound")
    p.add_argument("--noise-vars", default=None,
                   help="comma-separated noise variances (dataset mode)")
    p.add_argument("--alphas", default=None,
                   help="inverse gains for the noise model (dataset mode; "
                        "default: ideal 1.0)")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("evaluate", help="score calibrated datasets against a "
                                        "reference sensor")
    p.add_argument("input", help="raw dataset CSV")
    p.add_argument("--calibrated", action="append", required=True,
                   help="calibrated dataset CSV (repeatable)")
    p.add_argument("--reference", required=True, help="reference sensor id")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CalibrationError as exc:
        print(f"calibnet {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
