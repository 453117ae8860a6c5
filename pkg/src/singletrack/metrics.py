"""Trajectory quality metrics: loop closure and short-horizon prediction error."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

from .core import Pose, wrap_angle
from .errors import EmptyTrajectory, GridMismatch, InputError, ZeroPath
from .models import pose_integrate


@dataclass(frozen=True, slots=True)
class ClosureMetrics:
    path_length: float
    position_closure: float
    closure_per_meter: float
    yaw_closure: float


@dataclass(frozen=True, slots=True)
class HorizonStats:
    horizon_steps: int
    mean_error: float
    max_error: float
    samples: int = 0


class _Timed(Protocol):
    t: float
    pose: Pose


@dataclass(frozen=True, slots=True)
class PoseRow:
    t: float
    pose: Pose


def closure_metrics(traj: Sequence[Pose]) -> ClosureMetrics:
    """Endpoint-to-start deviation of a trajectory that should be a closed loop."""
    if len(traj) < 2:
        raise EmptyTrajectory(f"need at least 2 poses, got {len(traj)}")
    path = sum(math.hypot(b.X - a.X, b.Y - a.Y) for a, b in zip(traj, traj[1:]))
    if path <= 0.0:
        raise ZeroPath("trajectory has zero length")
    start, end = traj[0], traj[-1]
    closure = math.hypot(end.X - start.X, end.Y - start.Y)
    return ClosureMetrics(
        path_length=path,
        position_closure=closure,
        closure_per_meter=closure / path,
        yaw_closure=abs(wrap_angle(end.psi - start.psi)),
    )


def _check_grid(a: Sequence[_Timed], b: Sequence[_Timed], tol: float = 1e-9) -> None:
    if len(a) != len(b):
        raise GridMismatch(f"logs have different lengths ({len(a)} vs {len(b)})")
    for ra, rb in zip(a, b):
        if abs(ra.t - rb.t) > tol:
            raise GridMismatch(f"timestamps differ: {ra.t} vs {rb.t}")
    if len(a) > 2:
        dt = a[1].t - a[0].t
        for r0, r1 in zip(a, a[1:]):
            if abs((r1.t - r0.t) - dt) > 1e-6 * dt + tol:
                raise GridMismatch(f"non-uniform grid near t={r0.t}")


def horizon_predictions(
    est_log: Sequence, truth_log: Sequence[_Timed], n: int, dt: float | None = None
) -> list[PoseRow]:
    """Re-anchored n-step pose predictions.

    For every index k, start from the true pose at k and dead-reckon n
    steps with the filter's velocity estimates; row k + n holds the
    result. This is what the vehicle sees when an external pose fix
    arrives every n filter steps. Rows before n echo the estimate.
    ``est_log`` rows need ``t``, ``pose`` and ``vel``.
    """
    if n < 1:
        raise InputError("horizon must be >= 1 step")
    _check_grid(est_log, truth_log)
    if dt is None:
        dt = est_log[1].t - est_log[0].t
    out = [PoseRow(r.t, r.pose) for r in est_log[:n]]
    for k in range(len(est_log) - n):
        pose = truth_log[k].pose
        for j in range(k, k + n):
            pose = pose_integrate(pose, est_log[j].vel, dt)
        out.append(PoseRow(est_log[k + n].t, pose))
    return out


def horizon_error(est_log: Sequence[_Timed], truth_log: Sequence[_Timed], n: int) -> HorizonStats:
    """Position error of n-step predictions against truth.

    ``est_log[k]`` is the pose predicted for time k from information at
    k - n (see :func:`horizon_predictions`); the first n rows carry no
    prediction and are skipped.
    """
    if n < 1:
        raise InputError("horizon must be >= 1 step")
    _check_grid(est_log, truth_log)
    errors = [
        math.hypot(e.pose.X - r.pose.X, e.pose.Y - r.pose.Y)
        for e, r in zip(est_log[n:], truth_log[n:])
    ]
    if not errors:
        raise EmptyTrajectory(f"logs shorter than the {n}-step horizon")
    return HorizonStats(n, sum(errors) / len(errors), max(errors), len(errors))
