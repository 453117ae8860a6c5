"""Ground-truth trajectories and synthetic sensor logs.

The truth integrator runs classical RK4 on the full six-state continuous
dynamic model. Steering and the feed-forward part of the longitudinal
acceleration are piecewise constant and held over each integration step;
an optional speed-hold term ``speed_gain * (v_target - v_x)`` is added to
a_x inside the right-hand side so it stays smooth.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .core import ControlInput, Pose, VehicleParams, VelocityState
from .errors import GridMismatch, InputError, SpeedTooLow
from .models import DEFAULT_V_MIN, dynamic_derivatives
from .paramid import CircularRunData, MarkerRecord

SCENARIO_KINDS = ("straight", "step_steer", "steady_circle", "lap")

Schedule = tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class Scenario:
    kind: str
    duration: float
    v_target: float
    delta_profile: Schedule = ((0.0, 0.0),)
    a_x_profile: Schedule = ((0.0, 0.0),)
    speed_gain: float = 2.0

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise InputError(f"unknown scenario kind {self.kind!r}")
        if not self.duration > 0:
            raise InputError("duration must be > 0")
        for name in ("delta_profile", "a_x_profile"):
            sched = tuple((float(t), float(v)) for t, v in getattr(self, name))
            if not sched:
                raise InputError(f"{name} is empty")
            times = [t for t, _ in sched]
            if times != sorted(times):
                raise InputError(f"{name} must be sorted by time")
            object.__setattr__(self, name, sched)


def schedule_value(schedule: Schedule, t: float) -> float:
    """Value of a piecewise-constant schedule; the first entry also covers earlier times."""
    times = [s[0] for s in schedule]
    i = bisect.bisect_right(times, t + 1e-9) - 1
    return schedule[max(i, 0)][1]


def straight(v: float = 1.0, duration: float = 10.0) -> Scenario:
    return Scenario("straight", duration, v)


def step_steer(v: float = 1.0, delta: float = 0.2, t_step: float = 1.0, duration: float = 5.0) -> Scenario:
    return Scenario("step_steer", duration, v, ((0.0, 0.0), (t_step, delta)))


def steady_circle(v: float = 1.0, delta: float = 0.2, duration: float = 10.0) -> Scenario:
    return Scenario("steady_circle", duration, v, ((0.0, delta),))


@dataclass(frozen=True, slots=True)
class TruthRecord:
    t: float
    pose: Pose
    vel: VelocityState
    a_y: float
    u: ControlInput = field(default_factory=ControlInput)


def _rk4_step(state, t, dt, scenario, params, v_min):
    delta = schedule_value(scenario.delta_profile, t)
    a_ff = schedule_value(scenario.a_x_profile, t)

    def rhs(s):
        a_x = a_ff + scenario.speed_gain * (scenario.v_target - s[3])
        d = dynamic_derivatives(
            Pose(s[0], s[1], s[2]), VelocityState(s[3], s[4], s[5]), ControlInput(delta, a_x), params, v_min
        )
        return (d.dX, d.dY, d.dpsi, d.dv_x, d.dv_y, d.dpsi_dot), a_x

    k1, a_x = rhs(state)
    k2, _ = rhs([x + 0.5 * dt * k for x, k in zip(state, k1)])
    k3, _ = rhs([x + 0.5 * dt * k for x, k in zip(state, k2)])
    k4, _ = rhs([x + dt * k for x, k in zip(state, k3)])
    nxt = [x + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d) for x, a, b, c, d in zip(state, k1, k2, k3, k4)]
    # body-frame lateral acceleration, what an IMU at the CoG reads
    a_y = k1[4] + state[3] * state[5]
    return nxt, ControlInput(delta, a_x), a_y


def simulate(
    scenario: Scenario,
    params: VehicleParams,
    dt_truth: float = 0.0005,
    v_min: float = DEFAULT_V_MIN,
    start: Pose | None = None,
) -> list[TruthRecord]:
    """Integrate the continuous dynamic model; one record per grid point.

    The vehicle starts at ``start`` (default origin) driving straight at
    ``scenario.v_target``. The yaw angle is integrated unwrapped and only
    wrapped in the emitted poses.
    """
    if not (0 < dt_truth <= 0.001):
        raise InputError(f"dt_truth must be in (0, 0.001], got {dt_truth}")
    if scenario.v_target < v_min:
        raise SpeedTooLow(scenario.v_target, v_min)
    start = start or Pose()
    state = [start.X, start.Y, start.psi, scenario.v_target, 0.0, 0.0]
    n_steps = int(round(scenario.duration / dt_truth))
    records = []
    for k in range(n_steps + 1):
        t = k * dt_truth
        nxt, u, a_y = _rk4_step(state, t, dt_truth, scenario, params, v_min)
        records.append(
            TruthRecord(t, Pose(state[0], state[1], state[2]), VelocityState(*state[3:]), a_y, u)
        )
        state = nxt
    return records


def perturb_params(params: VehicleParams, **factors: float) -> VehicleParams:
    """Scaled copy of ``params`` for model-mismatch experiments, e.g. ``C_v=0.8``."""
    return replace(params, **{k: getattr(params, k) * f for k, f in factors.items()})


def _corner_heading_change(params, v, delta, corner_time, settle_time, dt_truth, speed_gain):
    sc = Scenario(
        "lap", corner_time + settle_time, v, ((0.0, delta), (corner_time, 0.0)), speed_gain=speed_gain
    )
    truth = simulate(sc, params, dt_truth)
    return float(np.unwrap([r.pose.psi for r in truth])[-1])


def lap(
    params: VehicleParams,
    v: float = 1.0,
    delta: float = 0.25,
    straight_length: float = 2.0,
    dt_truth: float = 0.0005,
    corner_time: float | None = None,
    speed_gain: float = 10.0,
    time_grid: float = 0.005,
) -> Scenario:
    """Counterclockwise rounded rectangle that closes on itself.

    Four identical segments, each a corner followed by a straight. Corner
    and straight durations are rounded to ``time_grid`` (the sensor
    period, so a resampled log ends exactly where the lap does) and the
    steering angle is then tuned by root finding so each segment turns
    exactly a quarter circle in the truth model. By symmetry the truth
    trajectory returns to its start, provided the straights are long
    enough for the speed hold to recover the speed lost in the corner.
    """
    grid = dt_truth * grid_stride(dt_truth, time_grid)
    settle = max(round(straight_length / v / grid), 1) * grid
    if corner_time is None:
        corner_time = (math.pi / 2) / (v * math.tan(delta) / params.wheelbase)
    corner_time = max(round(corner_time / grid), 1) * grid

    def miss(d):
        return _corner_heading_change(params, v, d, corner_time, settle, dt_truth, speed_gain) - math.pi / 2

    lo, hi = 0.5 * delta, min(1.8 * delta, 0.6)
    tuned = brentq(miss, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)

    segment = corner_time + settle
    profile = []
    for i in range(4):
        profile.append((i * segment, tuned))
        profile.append((i * segment + corner_time, 0.0))
    return Scenario("lap", 4 * segment, v, tuple(profile), speed_gain=speed_gain)


@dataclass(frozen=True)
class SensorNoise:
    sigma_psidot: float = 0.035
    sigma_vx: float = 0.03
    sigma_ax: float = 0.05
    sigma_ay: float = 0.05
    bias_psidot: float = 0.0
    bias_vx: float = 0.0
    bias_ax: float = 0.0
    bias_ay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("sigma_psidot", "sigma_vx", "sigma_ax", "sigma_ay"):
            if not getattr(self, name) >= 0:
                raise InputError(f"{name} must be >= 0")


NOISELESS = SensorNoise(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True, slots=True)
class SensorRecord:
    t: float
    delta: float
    a_x: float
    a_y: float
    v_x_meas: float
    psidot_meas: float


def grid_stride(dt_fine: float, dt_coarse: float) -> int:
    ratio = dt_coarse / dt_fine
    stride = int(round(ratio))
    if stride < 1 or abs(ratio - stride) > 1e-9 * max(ratio, 1.0):
        raise GridMismatch(f"{dt_coarse} is not an integer multiple of {dt_fine}")
    return stride


def _truth_dt(truth: Sequence[TruthRecord]) -> float:
    if len(truth) < 2:
        raise InputError("truth log needs at least two records")
    return truth[1].t - truth[0].t


def synthesize_sensors(
    truth: Sequence[TruthRecord], noise: SensorNoise = SensorNoise(), dt_sensor: float = 0.005
) -> list[SensorRecord]:
    """Resample truth to the sensor rate and corrupt it with seeded noise."""
    rows = list(truth[:: grid_stride(_truth_dt(truth), dt_sensor)])
    n = len(rows)
    rng = np.random.default_rng(noise.seed)
    e_psidot = rng.normal(0.0, 1.0, n) * noise.sigma_psidot + noise.bias_psidot
    e_vx = rng.normal(0.0, 1.0, n) * noise.sigma_vx + noise.bias_vx
    e_ax = rng.normal(0.0, 1.0, n) * noise.sigma_ax + noise.bias_ax
    e_ay = rng.normal(0.0, 1.0, n) * noise.sigma_ay + noise.bias_ay
    return [
        SensorRecord(
            t=r.t,
            delta=r.u.delta,
            a_x=r.u.a_x + float(e_ax[i]),
            a_y=r.a_y + float(e_ay[i]),
            v_x_meas=r.vel.v_x + float(e_vx[i]),
            psidot_meas=r.vel.psi_dot + float(e_psidot[i]),
        )
        for i, r in enumerate(rows)
    ]


def markers_from_truth(
    truth: Sequence[TruthRecord],
    front_offset: float,
    rear_offset: float,
    dt_marker: float | None = None,
    sigma: float = 0.0,
    seed: int = 0,
) -> list[MarkerRecord]:
    """World positions of markers on the longitudinal axis, optionally noisy."""
    stride = 1 if dt_marker is None else grid_stride(_truth_dt(truth), dt_marker)
    rows = list(truth[::stride])
    noise = np.random.default_rng(seed).normal(0.0, sigma, (len(rows), 4)) if sigma > 0 else np.zeros((len(rows), 4))
    out = []
    for r, e in zip(rows, noise):
        c, s = math.cos(r.pose.psi), math.sin(r.pose.psi)
        out.append(
            MarkerRecord(
                r.t,
                (r.pose.X + front_offset * c + e[0], r.pose.Y + front_offset * s + e[1]),
                (r.pose.X - rear_offset * c + e[2], r.pose.Y - rear_offset * s + e[3]),
            )
        )
    return out


def circular_run_from_truth(
    truth: Sequence[TruthRecord],
    front_offset: float,
    rear_offset: float,
    dt_sample: float = 0.01,
    marker_sigma: float = 0.0,
    noise: SensorNoise = NOISELESS,
    t_start: float = 0.0,
) -> CircularRunData:
    """Marker log plus IMU/speed samples as recorded during a circular run.

    The speed channel is the longitudinal velocity, as a wheel-speed
    sensor reports it.
    """
    truth = [r for r in truth if r.t >= t_start - 1e-12]
    markers = markers_from_truth(truth, front_offset, rear_offset, dt_sample, marker_sigma, noise.seed + 1)
    sensors = synthesize_sensors(truth, noise, dt_sample)
    deltas = {s.delta for s in sensors}
    if len(deltas) != 1:
        raise InputError("steering must be constant over a circular run")
    return CircularRunData(
        markers=tuple(markers),
        a_y=np.array([s.a_y for s in sensors]),
        psi_dot=np.array([s.psidot_meas for s in sensors]),
        v=np.array([s.v_x_meas for s in sensors]),
        delta=deltas.pop(),
        a_x=np.array([s.a_x for s in sensors]),
    )
