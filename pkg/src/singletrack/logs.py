"""CSV log formats. Units are part of every column name.

truth:        t_s, X_m, Y_m, psi_rad, v_x_mps, v_y_mps, psidot_radps, a_y_mps2
sensor:       t_s, delta_rad, a_x_mps2, a_y_mps2, v_x_meas_mps, psidot_meas_radps
marker:       t_s, x_front_m, y_front_m, x_rear_m, y_rear_m
circular run: marker columns + a_y_mps2, psidot_radps, v_mps, delta_rad
pendulum:     t_cycle_s, one cycle-start timestamp per row
estimate:     t_s, X_m, Y_m, psi_rad, v_x_mps, v_y_mps, psidot_radps,
              P_vx_m2ps2, P_vy_m2ps2, P_psidot_rad2ps2
pose reset:   t_s, X_m, Y_m, psi_rad

Floats are written with ``repr`` so a write/read cycle is bit-exact.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import ControlInput, Pose, VelocityState
from .errors import EmptyTrajectory, InputError, ParseError
from .paramid import CircularRunData, MarkerRecord
from .runner import EstimateRow
from .sim import SensorRecord, TruthRecord

TRUTH_COLUMNS = ("t_s", "X_m", "Y_m", "psi_rad", "v_x_mps", "v_y_mps", "psidot_radps", "a_y_mps2")
SENSOR_COLUMNS = ("t_s", "delta_rad", "a_x_mps2", "a_y_mps2", "v_x_meas_mps", "psidot_meas_radps")
MARKER_COLUMNS = ("t_s", "x_front_m", "y_front_m", "x_rear_m", "y_rear_m")
CIRCULAR_COLUMNS = MARKER_COLUMNS + ("a_y_mps2", "psidot_radps", "v_mps", "delta_rad")
PENDULUM_COLUMNS = ("t_cycle_s",)
ESTIMATE_COLUMNS = (
    "t_s", "X_m", "Y_m", "psi_rad", "v_x_mps", "v_y_mps", "psidot_radps",
    "P_vx_m2ps2", "P_vy_m2ps2", "P_psidot_rad2ps2",
)
POSE_COLUMNS = ("t_s", "X_m", "Y_m", "psi_rad")


def _fmt(x: float) -> str:
    return repr(float(x))


def _write(path, columns: Sequence[str], rows: Iterable[Sequence[float]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _read(path, columns: Sequence[str]) -> list[list[float]]:
    name = str(path)
    text = Path(path).read_text()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise EmptyTrajectory(f"{name}: file is empty")
    header = [h.strip() for h in header]
    missing = [c for c in columns if c not in header]
    if missing:
        raise ParseError(f"{name}:1", f"missing column(s): {', '.join(missing)}")
    index = [header.index(c) for c in columns]
    rows = []
    for lineno, raw in enumerate(reader, start=2):
        if not raw or all(not cell.strip() for cell in raw):
            continue
        try:
            rows.append([float(raw[i]) for i in index])
        except (ValueError, IndexError):
            raise ParseError(f"{name}:{lineno}", "expected numeric values in every column") from None
    return rows


def write_truth(path, truth: Sequence[TruthRecord]) -> None:
    _write(
        path,
        TRUTH_COLUMNS,
        ((r.t, r.pose.X, r.pose.Y, r.pose.psi, r.vel.v_x, r.vel.v_y, r.vel.psi_dot, r.a_y) for r in truth),
    )


def read_truth(path) -> list[TruthRecord]:
    return [
        TruthRecord(t, Pose(X, Y, psi), VelocityState(vx, vy, r), a_y, ControlInput())
        for t, X, Y, psi, vx, vy, r, a_y in _read(path, TRUTH_COLUMNS)
    ]


def write_sensors(path, log: Sequence[SensorRecord]) -> None:
    _write(path, SENSOR_COLUMNS, ((r.t, r.delta, r.a_x, r.a_y, r.v_x_meas, r.psidot_meas) for r in log))


def read_sensors(path) -> list[SensorRecord]:
    return [SensorRecord(*row) for row in _read(path, SENSOR_COLUMNS)]


def write_markers(path, markers: Sequence[MarkerRecord]) -> None:
    _write(path, MARKER_COLUMNS, ((m.t, *m.front, *m.rear) for m in markers))


def read_markers(path) -> list[MarkerRecord]:
    return [MarkerRecord(t, (xf, yf), (xr, yr)) for t, xf, yf, xr, yr in _read(path, MARKER_COLUMNS)]


def write_circular_run(path, run: CircularRunData) -> None:
    _write(
        path,
        CIRCULAR_COLUMNS,
        (
            (m.t, *m.front, *m.rear, a_y, r, v, run.delta)
            for m, a_y, r, v in zip(run.markers, run.a_y, run.psi_dot, run.v)
        ),
    )


def read_circular_run(path) -> CircularRunData:
    rows = _read(path, CIRCULAR_COLUMNS)
    if not rows:
        raise EmptyTrajectory(f"{path}: no samples")
    deltas = {row[8] for row in rows}
    if len(deltas) != 1:
        raise InputError(f"{path}: delta_rad must be constant over a circular run")
    arr = np.array(rows)
    return CircularRunData(
        markers=tuple(MarkerRecord(r[0], (r[1], r[2]), (r[3], r[4])) for r in rows),
        a_y=arr[:, 5],
        psi_dot=arr[:, 6],
        v=arr[:, 7],
        delta=rows[0][8],
    )


def write_pendulum(path, cycle_times: Sequence[float]) -> None:
    _write(path, PENDULUM_COLUMNS, ((t,) for t in cycle_times))


def read_pendulum(path) -> list[float]:
    """Cycle timestamps; the ``t_cycle_s`` header line is optional."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise EmptyTrajectory(f"{path}: file is empty")
    if lines[0] == PENDULUM_COLUMNS[0]:
        return [row[0] for row in _read(path, PENDULUM_COLUMNS)]
    out = []
    for lineno, ln in enumerate(lines, start=1):
        try:
            out.append(float(ln))
        except ValueError:
            raise ParseError(f"{path}:{lineno}", f"expected a timestamp, got {ln!r}") from None
    return out


def write_estimates(path, rows: Sequence[EstimateRow]) -> None:
    _write(
        path,
        ESTIMATE_COLUMNS,
        ((r.t, r.pose.X, r.pose.Y, r.pose.psi, r.vel.v_x, r.vel.v_y, r.vel.psi_dot, *r.P_diag) for r in rows),
    )


def read_estimates(path) -> list[EstimateRow]:
    return [
        EstimateRow(t, Pose(X, Y, psi), VelocityState(vx, vy, r), (p0, p1, p2))
        for t, X, Y, psi, vx, vy, r, p0, p1, p2 in _read(path, ESTIMATE_COLUMNS)
    ]


def write_poses(path, rows: Sequence[tuple[float, Pose]]) -> None:
    _write(path, POSE_COLUMNS, ((t, p.X, p.Y, p.psi) for t, p in rows))


def read_pose_resets(path) -> dict[float, Pose]:
    return {t: Pose(X, Y, psi) for t, X, Y, psi in _read(path, POSE_COLUMNS)}

