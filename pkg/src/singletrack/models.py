"""Kinematic and dynamic single-track vehicle models.

Sign conventions: yaw is counterclockwise-positive, steering is
left-positive, cornering stiffnesses are positive numbers, and a positive
slip angle produces a positive (leftward) tire force.

The discrete velocity update is semi-implicit: v_y and the yaw rate are
solved backward-Euler in their own damping terms and forward-Euler in
everything else, which keeps the map stable at any step size for positive
stiffnesses. ``flipped_signs=True`` evaluates the same auxiliary-term
layout written for the opposite stiffness sign convention (with the
v_x**2 * psi_dot coupling in the lateral row flipped as well). That form
is kept for comparison only; with positive stiffnesses it runs the
lateral dynamics backwards in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Pose, VehicleParams, VelocityState, ControlInput, wrap_angle
from .errors import SingularDenominator, SpeedTooLow

DEFAULT_V_MIN = 0.1
DEFAULT_EPS_DEN = 1e-9


@dataclass(frozen=True, slots=True)
class StateDerivative:
    dX: float
    dY: float
    dpsi: float
    dv_x: float
    dv_y: float
    dpsi_dot: float


@dataclass(frozen=True, slots=True)
class SlipAngles:
    alpha_v: float
    alpha_h: float


@dataclass(frozen=True, slots=True)
class LateralForces:
    F_sv: float
    F_sh: float


def kinematic_yaw_rate(v_x: float, delta: float, params: VehicleParams) -> float:
    return v_x * math.tan(delta) / params.wheelbase


def kinematic_step(pose: Pose, v_x: float, delta: float, dt: float, params: VehicleParams) -> Pose:
    """One explicit-Euler step of the kinematic model, derivatives at the old pose."""
    return Pose(
        pose.X + dt * v_x * math.cos(pose.psi),
        pose.Y + dt * v_x * math.sin(pose.psi),
        pose.psi + dt * kinematic_yaw_rate(v_x, delta, params),
    )


def slip_angles(
    vel: VelocityState, delta: float, params: VehicleParams, v_min: float = DEFAULT_V_MIN
) -> SlipAngles:
    v = math.hypot(vel.v_x, vel.v_y)
    if v < v_min:
        raise SpeedTooLow(v, v_min)
    beta = math.atan2(vel.v_y, vel.v_x)
    return SlipAngles(
        alpha_v=delta - beta - vel.psi_dot * params.l_v / v,
        alpha_h=-beta + vel.psi_dot * params.l_h / v,
    )


def lateral_forces(alphas: SlipAngles, params: VehicleParams) -> LateralForces:
    return LateralForces(params.C_v * alphas.alpha_v, params.C_h * alphas.alpha_h)


def dynamic_derivatives(
    pose: Pose,
    vel: VelocityState,
    u: ControlInput,
    params: VehicleParams,
    v_min: float = DEFAULT_V_MIN,
) -> StateDerivative:
    """Continuous-time right-hand side of the six-state dynamic model."""
    forces = lateral_forces(slip_angles(vel, u.delta, params, v_min), params)
    c_psi, s_psi = math.cos(pose.psi), math.sin(pose.psi)
    c_d, s_d = math.cos(u.delta), math.sin(u.delta)
    v_x, v_y, r = vel.v_x, vel.v_y, vel.psi_dot
    return StateDerivative(
        dX=v_x * c_psi - v_y * s_psi,
        dY=v_y * c_psi + v_x * s_psi,
        dpsi=r,
        dv_x=u.a_x + v_y * r - forces.F_sv * s_d / params.m,
        dv_y=-v_x * r + (forces.F_sv * c_d + forces.F_sh) / params.m,
        dpsi_dot=(params.l_v * forces.F_sv * c_d - params.l_h * forces.F_sh) / params.J_z,
    )


def _step_with_jacobian(vel, u, params, dt, v_min, eps_den, flipped_signs, want_jacobian):
    if vel.v_x < v_min:
        raise SpeedTooLow(vel.v_x, v_min)
    p = params
    # stiffness sign, and sign of the centripetal coupling in the v_y row
    s, w = (1.0, 1.0) if flipped_signs else (-1.0, -1.0)
    v_x, v_y, r, delta = vel.v_x, vel.v_y, vel.psi_dot, u.delta
    k = p.l_v * p.C_v - p.l_h * p.C_h

    den_y = p.m * v_x - s * dt * (p.C_v + p.C_h)
    den_r = p.J_z * v_x - s * dt * (p.l_v**2 * p.C_v + p.l_h**2 * p.C_h)
    if abs(den_y) <= eps_den:
        raise SingularDenominator("lateral", den_y)
    if abs(den_r) <= eps_den:
        raise SingularDenominator("yaw", den_r)

    a = p.m * v_x * v_y + s * dt * k * r
    b = s * dt * p.C_v * delta * v_x - w * dt * p.m * v_x**2 * r
    c = p.J_z * v_x * r + s * dt * k * v_y
    d = s * dt * p.l_v * p.C_v * delta * v_x
    num_y, num_r = a - b, c - d
    nxt = VelocityState(v_x + dt * u.a_x, num_y / den_y, num_r / den_r)
    if not want_jacobian:
        return nxt, None

    dny_dvx = p.m * v_y - s * dt * p.C_v * delta + 2.0 * w * dt * p.m * v_x * r
    dnr_dvx = p.J_z * r - s * dt * p.l_v * p.C_v * delta
    rows = [
        [1.0, 0.0, 0.0],
        [
            (dny_dvx * den_y - num_y * p.m) / den_y**2,
            p.m * v_x / den_y,
            (s * dt * k + w * dt * p.m * v_x**2) / den_y,
        ],
        [
            (dnr_dvx * den_r - num_r * p.J_z) / den_r**2,
            s * dt * k / den_r,
            p.J_z * v_x / den_r,
        ],
    ]
    return nxt, rows


def dynamic_discrete_step(
    vel: VelocityState,
    u: ControlInput,
    params: VehicleParams,
    dt: float,
    v_min: float = DEFAULT_V_MIN,
    eps_den: float = DEFAULT_EPS_DEN,
    flipped_signs: bool = False,
) -> VelocityState:
    """Advance (v_x, v_y, psi_dot) by one step of length ``dt``."""
    return _step_with_jacobian(vel, u, params, dt, v_min, eps_den, flipped_signs, False)[0]


def discrete_jacobian(
    vel: VelocityState,
    u: ControlInput,
    params: VehicleParams,
    dt: float,
    v_min: float = DEFAULT_V_MIN,
    eps_den: float = DEFAULT_EPS_DEN,
    flipped_signs: bool = False,
) -> np.ndarray:
    """Closed-form Jacobian of :func:`dynamic_discrete_step` w.r.t. (v_x, v_y, psi_dot)."""
    return np.array(_step_with_jacobian(vel, u, params, dt, v_min, eps_den, flipped_signs, True)[1])


def pose_integrate(pose: Pose, vel: VelocityState, dt: float) -> Pose:
    """Dead-reckon the pose one step with the old-state velocities."""
    c, s = math.cos(pose.psi), math.sin(pose.psi)
    return Pose(
        pose.X + dt * (vel.v_x * c - vel.v_y * s),
        pose.Y + dt * (vel.v_x * s + vel.v_y * c),
        wrap_angle(pose.psi + dt * vel.psi_dot),
    )
