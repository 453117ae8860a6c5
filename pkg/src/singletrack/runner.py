"""Streaming estimation over recorded sensor logs."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Mapping, Sequence

from .core import Config, ControlInput, Measurement, Pose, VelocityState
from .ekf import FilterEstimate, initial_estimate, reset_pose, step
from .errors import EmptyTrajectory, GridMismatch, InputError, NumericalError, SingleTrackError
from .metrics import ClosureMetrics, closure_metrics
from .models import kinematic_step, kinematic_yaw_rate
from .sim import SensorRecord

MODELS = ("dynamic-ekf", "kinematic")

_NAN3 = (math.nan, math.nan, math.nan)


@dataclass(frozen=True, slots=True)
class EstimateRow:
    t: float
    pose: Pose
    vel: VelocityState
    P_diag: tuple[float, float, float] = _NAN3


@dataclass(frozen=True)
class EstimateRun:
    rows: list[EstimateRow]
    closure: ClosureMetrics | None
    model: str


def _row_error(exc: SingleTrackError, k: int, t: float) -> SingleTrackError:
    cls = NumericalError if isinstance(exc, NumericalError) else InputError
    err = cls(f"row {k} (t={t:.6g} s): {exc}")
    err.__cause__ = exc
    return err


def _reset_index(resets: Mapping[float, Pose] | None, log: Sequence[SensorRecord], dt: float):
    if not resets:
        return {}
    index = {}
    t0 = log[0].t
    for t, pose in resets.items():
        k = round((t - t0) / dt)
        if abs(t0 + k * dt - t) > dt / 2 or not 0 <= k < len(log):
            raise GridMismatch(f"pose reset at t={t} is not within dt/2 of a sensor row")
        index[k] = pose
    return index


def run_estimate(
    sensor_log: Sequence[SensorRecord],
    cfg: Config,
    model: str = "dynamic-ekf",
    pose_resets: Mapping[float, Pose] | None = None,
    start: Pose | None = None,
) -> EstimateRun:
    """Run the filter (or the kinematic baseline) over a sensor log.

    The input applied over the interval [t_{k-1}, t_k) is the one logged
    at t_{k-1}; the measurement logged at t_k corrects the prediction for
    t_k. ``pose_resets`` maps timestamps to externally fixed poses that
    replace the dead-reckoned pose after that step; each is snapped to
    the nearest sensor row and must lie within half a step of it.
    """
    if model not in MODELS:
        raise InputError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")
    if not sensor_log:
        raise EmptyTrajectory("sensor log is empty")
    dt = cfg.dt
    for k, (a, b) in enumerate(zip(sensor_log, sensor_log[1:]), start=1):
        if abs((b.t - a.t) - dt) > 1e-6 * dt:
            raise GridMismatch(f"row {k}: sample spacing {b.t - a.t:.6g} s does not match dt={dt} s")
    resets = _reset_index(pose_resets, sensor_log, dt)

    first = sensor_log[0]
    pose = start or Pose()
    if 0 in resets:
        pose = resets[0]
    rows = []
    if model == "kinematic":
        for k, rec in enumerate(sensor_log):
            if k > 0:
                prev = sensor_log[k - 1]
                pose = kinematic_step(pose, prev.v_x_meas, prev.delta, dt, cfg.params)
                if k in resets:
                    pose = resets[k]
            vel = VelocityState(rec.v_x_meas, 0.0, kinematic_yaw_rate(rec.v_x_meas, rec.delta, cfg.params))
            rows.append(EstimateRow(rec.t, pose, vel))
    else:
        est = initial_estimate(cfg, VelocityState(first.v_x_meas, 0.0, first.psidot_meas), pose, first.t)
        rows.append(_row(est))
        for k in range(1, len(sensor_log)):
            prev, rec = sensor_log[k - 1], sensor_log[k]
            try:
                est = step(
                    est,
                    ControlInput(prev.delta, prev.a_x),
                    Measurement(rec.psidot_meas, rec.v_x_meas),
                    cfg,
                )
            except SingleTrackError as exc:
                raise _row_error(exc, k, rec.t) from exc
            est = FilterEstimate(est.vel, est.pose, est.P, rec.t)
            if k in resets:
                est = reset_pose(est, resets[k])
            rows.append(_row(est))

    closure = closure_metrics([r.pose for r in rows]) if len(rows) > 1 and _moved(rows) else None
    return EstimateRun(rows, closure, model)


def _moved(rows: Sequence[EstimateRow]) -> bool:
    return any(r.pose.X != rows[0].pose.X or r.pose.Y != rows[0].pose.Y for r in rows)


def _row(est: FilterEstimate) -> EstimateRow:
    return EstimateRow(est.t, est.pose, est.vel, (float(est.P[0, 0]), float(est.P[1, 1]), float(est.P[2, 2])))


def bench(cfg: Config, cycles: int = 20000) -> float:
    """Mean wall time of one predict+correct cycle, in seconds."""
    est = initial_estimate(cfg, VelocityState(1.5, 0.0, 0.3))
    u = ControlInput(0.1, 0.0)
    z = Measurement(0.4, 1.5)
    for _ in range(200):
        est = step(est, u, z, cfg)
    best = math.inf
    per_round = max(cycles // 5, 1)
    for _ in range(5):
        e = est
        t0 = time.perf_counter()
        for _ in range(per_round):
            e = step(e, u, z, cfg)
        best = min(best, (time.perf_counter() - t0) / per_round)
    return best
