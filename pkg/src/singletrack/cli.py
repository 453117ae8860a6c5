"""Command-line front end.

    singletrack simulate  --scenario lap --config cfg.json --output truth.csv --sensor-output sensors.csv
    singletrack estimate  --config cfg.json --input sensors.csv --output est.csv [--model kinematic]
    singletrack identify  cog | inertia | cornering ...
    singletrack metrics   closure | horizon ...

Every command prints a summary block of ``key: value`` lines on stdout.
Exit status is 0 on success, 2 for input or parse errors and 3 for
numerical or filter errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import logs
from .core import Config, VehicleParams, load_config
from .errors import InputError, NumericalError, SingleTrackError
from .metrics import closure_metrics, horizon_error, horizon_predictions
from .paramid import (
    AxleLoads,
    PendulumSetup,
    check_marker_separation,
    cog_from_scale,
    cornering_stiffness,
    inertia_bifilar,
    lateral_cog,
    mean_period,
)
from .runner import MODELS, bench, run_estimate
from .sim import (
    NOISELESS,
    SCENARIO_KINDS,
    SensorNoise,
    circular_run_from_truth,
    grid_stride,
    lap,
    markers_from_truth,
    simulate,
    steady_circle,
    step_steer,
    straight,
    synthesize_sensors,
)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


def _summary(fields: dict[str, object], out=None) -> None:
    out = out or sys.stdout
    for key, value in fields.items():
        if isinstance(value, float):
            value = f"{value:.9g}"
        print(f"{key}: {value}", file=out)


def _config(path: str | None, required: bool = True) -> Config | None:
    if path is None:
        if required:
            raise InputError("--config is required")
        return None
    return load_config(Path(path).read_text())


def _scenario(args, params: VehicleParams):
    kind = args.scenario
    if kind == "straight":
        return straight(args.speed, args.duration or 10.0)
    if kind == "step_steer":
        return step_steer(args.speed, args.delta, 1.0, args.duration or 5.0)
    if kind == "steady_circle":
        return steady_circle(args.speed, args.delta, args.duration or 20.0)
    return lap(params, args.speed, args.delta, args.straight, args.dt_truth)


def cmd_simulate(args) -> int:
    cfg = _config(args.config)
    scenario = _scenario(args, cfg.params)
    truth = simulate(scenario, cfg.params, args.dt_truth, cfg.v_min)
    logs.write_truth(args.output, truth)
    noise = NOISELESS if args.noise_free else SensorNoise(seed=args.seed)
    fields: dict[str, object] = {
        "scenario": scenario.kind,
        "duration_s": scenario.duration,
        "truth_rows": len(truth),
    }
    if args.sensor_output:
        sensors = synthesize_sensors(truth, noise, cfg.dt)
        logs.write_sensors(args.sensor_output, sensors)
        fields["sensor_rows"] = len(sensors)
    if args.marker_output:
        markers = markers_from_truth(truth, cfg.front_offset, cfg.rear_offset, args.dt_marker, args.marker_sigma, args.seed)
        logs.write_markers(args.marker_output, markers)
        fields["marker_rows"] = len(markers)
    if args.circular_output:
        run = circular_run_from_truth(
            truth, cfg.front_offset, cfg.rear_offset, args.dt_marker,
            args.marker_sigma, NOISELESS if args.noise_free else noise,
        )
        logs.write_circular_run(args.circular_output, run)
        fields["circular_rows"] = len(run.markers)
    closure = closure_metrics([r.pose for r in truth])
    fields.update(path_length_m=closure.path_length, position_closure_m=closure.position_closure)
    _summary(fields)
    return EXIT_OK


def cmd_estimate(args) -> int:
    cfg = _config(args.config)
    if args.bench:
        mean_s = bench(cfg)
        _summary({"bench_us_per_cycle": mean_s * 1e6, "budget_us": cfg.dt * 1e6})
        if not args.input:
            return EXIT_OK
    if not args.input:
        raise InputError("--input is required")
    sensors = logs.read_sensors(args.input)
    resets = logs.read_pose_resets(args.pose_reset_log) if args.pose_reset_log else None
    result = run_estimate(sensors, cfg, args.model, resets)
    if args.output:
        logs.write_estimates(args.output, result.rows)
    fields: dict[str, object] = {"model": result.model, "rows": len(result.rows)}
    if result.closure is not None:
        c = result.closure
        fields.update(
            path_length_m=c.path_length,
            position_closure_m=c.position_closure,
            closure_per_meter=c.closure_per_meter,
            yaw_closure_rad=c.yaw_closure,
        )
    if args.truth:
        truth = _truth_on_grid(args.truth, cfg.dt, len(result.rows))
        preds = horizon_predictions(result.rows, truth, args.horizon, cfg.dt)
        stats = horizon_error(preds, truth, args.horizon)
        fields.update(
            horizon_steps=stats.horizon_steps,
            horizon_mean_error_m=stats.mean_error,
            horizon_max_error_m=stats.max_error,
        )
    _summary(fields)
    return EXIT_OK


def _truth_on_grid(path: str, dt: float, n: int):
    truth = logs.read_truth(path)
    if len(truth) < 2:
        raise InputError(f"{path}: truth log needs at least two rows")
    truth = truth[:: grid_stride(truth[1].t - truth[0].t, dt)]
    return truth[:n]


def cmd_identify(args) -> int:
    if args.what == "cog":
        loads = AxleLoads(args.front_load, args.rear_load, args.left_load, args.right_load)
        l_v, l_h = cog_from_scale(loads, args.wheelbase, args.mass, args.g)
        fields: dict[str, object] = {"l_v_m": l_v, "l_h_m": l_h}
        if args.track is not None:
            fields["cog_from_left_m"] = lateral_cog(loads, args.track, args.mass, args.g)
        _summary(fields)
    elif args.what == "inertia":
        cfg = _config(args.config, required=False)
        literal = args.single_pi or (cfg.bifilar_literal if cfg else False)
        g = cfg.g if cfg else args.g
        setup = PendulumSetup(args.cord_distance, args.cord_length, args.mass, tuple(logs.read_pendulum(args.input)))
        _summary(
            {
                "mean_period_s": mean_period(setup.cycle_times),
                "J_z_kgm2": inertia_bifilar(setup, g, literal),
                "formula": "16*pi*L" if literal else "16*pi^2*L",
            }
        )
    else:
        cfg = _config(args.config)
        run = logs.read_circular_run(args.input)
        check_marker_separation(run.markers, cfg.front_offset + cfg.rear_offset)
        p = cfg.params
        res = cornering_stiffness(
            run, p.m, p.l_v, p.l_h, cfg.smoothing_window, cfg.front_offset, cfg.rear_offset,
            small_angle=not args.full_force,
        )
        _summary(
            {
                "C_v_Nprad": res.C_v,
                "C_h_Nprad": res.C_h,
                "alpha_v_rad": res.alpha_v,
                "alpha_h_rad": res.alpha_h,
                "beta_rad": res.beta,
                "psidot_radps": res.psi_dot,
                "v_mps": res.v,
                "a_y_mps2": res.a_y,
                "steady_start_s": res.window[0],
                "steady_end_s": res.window[1],
                "steady_samples": res.n_samples,
            }
        )
    return EXIT_OK


def cmd_metrics(args) -> int:
    est = logs.read_estimates(args.input)
    if args.what == "closure":
        c = closure_metrics([r.pose for r in est])
        _summary(
            {
                "path_length_m": c.path_length,
                "position_closure_m": c.position_closure,
                "closure_per_meter": c.closure_per_meter,
                "yaw_closure_rad": c.yaw_closure,
            }
        )
    else:
        if not args.truth:
            raise InputError("--truth is required for horizon metrics")
        if len(est) < 2:
            raise InputError(f"{args.input}: estimate log needs at least two rows")
        dt = est[1].t - est[0].t
        truth = _truth_on_grid(args.truth, dt, len(est))
        stats = horizon_error(horizon_predictions(est, truth, args.horizon, dt), truth, args.horizon)
        _summary(
            {
                "horizon_steps": stats.horizon_steps,
                "horizon_mean_error_m": stats.mean_error,
                "horizon_max_error_m": stats.max_error,
            }
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="singletrack", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate truth, sensor and marker logs")
    sim.add_argument("--config", required=True)
    sim.add_argument("--scenario", choices=SCENARIO_KINDS, default="lap")
    sim.add_argument("--output", required=True, help="truth CSV")
    sim.add_argument("--sensor-output")
    sim.add_argument("--marker-output")
    sim.add_argument("--circular-output", help="marker + IMU log for `identify cornering`")
    sim.add_argument("--speed", type=float, default=1.0)
    sim.add_argument("--delta", type=float, default=0.25)
    sim.add_argument("--straight", type=float, default=2.0, help="lap straight length, m")
    sim.add_argument("--duration", type=float)
    sim.add_argument("--dt-truth", type=float, default=0.0005)
    sim.add_argument("--dt-marker", type=float, default=0.01)
    sim.add_argument("--marker-sigma", type=float, default=0.0)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--noise-free", action="store_true")
    sim.set_defaults(func=cmd_simulate)

    est = sub.add_parser("estimate", help="run the estimator over a sensor log")
    est.add_argument("--config", required=True)
    est.add_argument("--input")
    est.add_argument("--output")
    est.add_argument("--model", choices=MODELS, default="dynamic-ekf")
    est.add_argument("--pose-reset-log")
    est.add_argument("--truth", help="truth CSV for horizon metrics")
    est.add_argument("--horizon", type=int, default=7)
    est.add_argument("--seed", type=int, default=0, help="unused; estimation is deterministic")
    est.add_argument("--bench", action="store_true", help="time predict+correct cycles")
    est.set_defaults(func=cmd_estimate)

    ident = sub.add_parser("identify", help="parameter identification")
    ident.add_argument("what", choices=("cog", "inertia", "cornering"))
    ident.add_argument("--config")
    ident.add_argument("--input")
    ident.add_argument("--front-load", type=float)
    ident.add_argument("--rear-load", type=float)
    ident.add_argument("--left-load", type=float)
    ident.add_argument("--right-load", type=float)
    ident.add_argument("--track", type=float, help="track width, m")
    ident.add_argument("--wheelbase", type=float)
    ident.add_argument("--mass", type=float)
    ident.add_argument("--g", type=float, default=9.81)
    ident.add_argument("--cord-distance", type=float)
    ident.add_argument("--cord-length", type=float)
    ident.add_argument("--single-pi", action="store_true", help="use 16*pi*L in the bifilar formula")
    ident.add_argument("--full-force", action="store_true", help="unsimplified front force form")
    ident.set_defaults(func=cmd_identify)

    met = sub.add_parser("metrics", help="closure and horizon metrics of an estimate log")
    met.add_argument("what", choices=("closure", "horizon"))
    met.add_argument("--input", required=True)
    met.add_argument("--truth")
    met.add_argument("--horizon", type=int, default=7)
    met.set_defaults(func=cmd_metrics)
    return parser


_REQUIRED = {
    "cog": ("front_load", "rear_load", "wheelbase", "mass"),
    "inertia": ("input", "cord_distance", "cord_length", "mass"),
    "cornering": ("input", "config"),
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "identify":
            missing = [k for k in _REQUIRED[args.what] if getattr(args, k) is None]
            if missing:
                raise InputError("missing " + ", ".join("--" + k.replace("_", "-") for k in missing))
        return args.func(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SingleTrackError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
