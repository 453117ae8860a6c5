"""Extended Kalman filter over the velocity subsystem (v_x, v_y, psi_dot).

The pose is dead-reckoned from the filtered velocities and carries no
covariance. Measurements are (psi_dot, v_x), both direct observations of
state components, so the measurement Jacobian is the constant ``H``.

Below ``cfg.v_min`` the dynamic model is singular; :func:`predict` then
propagates with the kinematic model, pins v_y to zero, takes the yaw rate
from steering geometry and simply adds Q to the covariance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import Config, ControlInput, Measurement, Pose, VelocityState, wrap_angle
from .errors import SingularInnovationCovariance
from .models import (
    _step_with_jacobian,
    kinematic_step,
    kinematic_yaw_rate,
    pose_integrate,
)

H = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
H.setflags(write=False)


@dataclass(frozen=True, eq=False)
class FilterEstimate:
    vel: VelocityState
    pose: Pose
    P: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if self.P.flags.writeable:
            P = np.array(self.P, dtype=float)
            P.setflags(write=False)
            object.__setattr__(self, "P", P)


def initial_estimate(
    cfg: Config, vel: VelocityState, pose: Pose | None = None, t: float = 0.0
) -> FilterEstimate:
    return FilterEstimate(vel=vel, pose=pose or Pose(), P=cfg.noise.P0, t=t)


def _frozen(P) -> np.ndarray:
    out = np.array(P)
    out.setflags(write=False)
    return out


def _predict(vel, pose, P, u, cfg):
    """Core of :func:`predict` on a nested-list covariance."""
    cfg.check_input(u)
    dt, params = cfg.dt, cfg.params
    if vel.v_x < cfg.v_min:
        v_x = vel.v_x + dt * u.a_x
        new_vel = VelocityState(v_x, 0.0, kinematic_yaw_rate(v_x, u.delta, params))
        Q = cfg.noise.Q.tolist()
        return new_vel, kinematic_step(pose, vel.v_x, u.delta, dt, params), [
            [P[i][j] + Q[i][j] for j in range(3)] for i in range(3)
        ]
    new_vel, Phi = _step_with_jacobian(vel, u, params, dt, cfg.v_min, cfg.eps_den, False, True)
    return new_vel, pose_integrate(pose, vel, dt), _congruence(Phi, P, cfg.noise.Q.tolist())


def predict(est: FilterEstimate, u: ControlInput, cfg: Config) -> FilterEstimate:
    """A priori estimate one filter step ahead."""
    vel, pose, P = _predict(est.vel, est.pose, est.P.tolist(), u, cfg)
    return FilterEstimate(vel, pose, _frozen(P), est.t + cfg.dt)


def _congruence(A, P, add):
    """A @ P @ A.T + add for 3x3 nested lists, with P and add symmetric.

    Plain floats beat numpy at this size. Only the upper triangle is
    computed and mirrored, so the result is exactly symmetric.
    """
    (a00, a01, a02), (a10, a11, a12), (a20, a21, a22) = A
    (p00, p01, p02), (p10, p11, p12), (p20, p21, p22) = P
    m00 = a00 * p00 + a01 * p10 + a02 * p20
    m01 = a00 * p01 + a01 * p11 + a02 * p21
    m02 = a00 * p02 + a01 * p12 + a02 * p22
    m10 = a10 * p00 + a11 * p10 + a12 * p20
    m11 = a10 * p01 + a11 * p11 + a12 * p21
    m12 = a10 * p02 + a11 * p12 + a12 * p22
    m20 = a20 * p00 + a21 * p10 + a22 * p20
    m21 = a20 * p01 + a21 * p11 + a22 * p21
    m22 = a20 * p02 + a21 * p12 + a22 * p22
    u01 = m00 * a10 + m01 * a11 + m02 * a12 + add[0][1]
    u02 = m00 * a20 + m01 * a21 + m02 * a22 + add[0][2]
    u12 = m10 * a20 + m11 * a21 + m12 * a22 + add[1][2]
    return [
        [m00 * a00 + m01 * a01 + m02 * a02 + add[0][0], u01, u02],
        [u01, m10 * a10 + m11 * a11 + m12 * a12 + add[1][1], u12],
        [u02, u12, m20 * a20 + m21 * a21 + m22 * a22 + add[2][2]],
    ]


def _correct(x, P, z, cfg):
    """Core of :func:`correct` on a nested-list covariance."""
    (r00, r01), (_, r11) = cfg.noise.R.tolist()
    # P @ H.T: columns psi_dot and v_x of P
    PHt = [(row[2], row[0]) for row in P]
    s00 = PHt[2][0] + r00
    s01 = PHt[2][1] + r01
    s10 = PHt[0][0] + r01
    s11 = PHt[0][1] + r11
    det = s00 * s11 - s01 * s10
    scale = abs(s00 * s11) + abs(s01 * s10)
    if not math.isfinite(det) or scale == 0.0 or abs(det) <= 1e-14 * scale:
        raise SingularInnovationCovariance(f"innovation covariance is singular (det={det:.3e})")
    i00, i01, i10, i11 = s11 / det, -s01 / det, -s10 / det, s00 / det
    K = [(a * i00 + b * i10, a * i01 + b * i11) for a, b in PHt]

    e0 = z.psi_dot_meas - x.psi_dot
    e1 = z.v_x_meas - x.v_x
    vel = VelocityState(
        x.v_x + K[0][0] * e0 + K[0][1] * e1,
        x.v_y + K[1][0] * e0 + K[1][1] * e1,
        x.psi_dot + K[2][0] * e0 + K[2][1] * e1,
    )

    # Joseph form: (I - K H) P (I - K H)^T + K R K^T
    (k00, k01), (k10, k11), (k20, k21) = K
    A = [[1.0 - k01, 0.0, -k00], [-k11, 1.0, -k10], [-k21, 0.0, 1.0 - k20]]
    KR = [(k0 * r00 + k1 * r01, k0 * r01 + k1 * r11) for k0, k1 in K]
    KRK = [[kr0 * k0 + kr1 * k1 for k0, k1 in K] for kr0, kr1 in KR]
    return vel, _congruence(A, P, KRK)


def correct(est: FilterEstimate, z: Measurement, cfg: Config) -> FilterEstimate:
    """Fuse one (psi_dot, v_x) measurement; Joseph-form covariance update."""
    vel, P = _correct(est.vel, est.P.tolist(), z, cfg)
    return FilterEstimate(vel, est.pose, _frozen(P), est.t)


def step(
    est: FilterEstimate, u: ControlInput, z: Measurement | None, cfg: Config
) -> FilterEstimate:
    """Predict, then correct if a measurement is available."""
    vel, pose, P = _predict(est.vel, est.pose, est.P.tolist(), u, cfg)
    if z is not None:
        vel, P = _correct(vel, P, z, cfg)
    return FilterEstimate(vel, pose, _frozen(P), est.t + cfg.dt)


def reset_pose(est: FilterEstimate, pose: Pose) -> FilterEstimate:
    """Replace the dead-reckoned pose with an external fix."""
    return replace(est, pose=Pose(pose.X, pose.Y, wrap_angle(pose.psi)))


def kalman_gain(P: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Gain for the constant measurement model; useful for inspection."""
    return P @ H.T @ np.linalg.inv(H @ P @ H.T + R)
