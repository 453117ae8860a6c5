"""Parameter identification from bench and track measurements.

Three procedures, all batch functions over already-logged data:

* centre of gravity from axle loads measured on a scale,
* yaw inertia from the oscillation period of a bifilar pendulum,
* front and rear cornering stiffness from a steady circular run, using
  optically tracked front/rear markers for the drift angle and IMU
  samples for lateral acceleration and yaw rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import wrap_angle
from .errors import (
    DegenerateMarkers,
    InconsistentLoads,
    InputError,
    NoSteadyWindow,
    SlipTooSmall,
    TooFewCycles,
    TooFewSamples,
)


@dataclass(frozen=True, slots=True)
class AxleLoads:
    F_gv: float
    F_gh: float
    F_left: float | None = None
    F_right: float | None = None

    def __post_init__(self):
        for name in ("F_gv", "F_gh", "F_left", "F_right"):
            value = getattr(self, name)
            if value is not None and not value >= 0:
                raise InputError(f"{name} must be >= 0, got {value!r}")


def cog_from_scale(loads: AxleLoads, l: float, m: float, g: float = 9.81) -> tuple[float, float]:
    """Longitudinal CoG position as (l_v, l_h) from the two axle loads."""
    weight = m * g
    mismatch = abs(loads.F_gv + loads.F_gh - weight) / weight
    if mismatch > 0.02:
        raise InconsistentLoads(
            f"axle loads sum to {loads.F_gv + loads.F_gh:.4g} N but m*g = {weight:.4g} N "
            f"({100 * mismatch:.1f}% off, limit 2%)"
        )
    l_h = loads.F_gv * l / weight
    l_v = loads.F_gh * l / weight
    return l_v, l_h


def lateral_cog(loads: AxleLoads, track: float, m: float, g: float = 9.81) -> float:
    """Distance of the CoG from the left wheel line.

    Reported for completeness only; the single-track model has no lateral
    CoG parameter.
    """
    if loads.F_left is None or loads.F_right is None:
        raise InputError("left/right loads were not measured")
    return loads.F_right * track / (m * g)


@dataclass(frozen=True)
class PendulumSetup:
    D: float
    L: float
    m: float
    cycle_times: tuple[float, ...]

    def __post_init__(self):
        for name in ("D", "L", "m"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be > 0")
        object.__setattr__(self, "cycle_times", tuple(float(t) for t in self.cycle_times))


def mean_period(cycle_times: Sequence[float]) -> float:
    """Mean oscillation period from successive cycle-start timestamps."""
    times = list(cycle_times)
    if len(times) < 2:
        raise TooFewCycles(f"need at least 2 cycle timestamps, got {len(times)}")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise TooFewCycles("cycle timestamps must be strictly increasing")
    return (times[-1] - times[0]) / (len(times) - 1)


def inertia_bifilar(setup: PendulumSetup, g: float = 9.81, literal: bool = False) -> float:
    """Yaw moment of inertia from a bifilar pendulum.

    The default uses the small-angle result J = m g D^2 T^2 / (16 pi^2 L).
    ``literal=True`` divides by 16 pi L instead, the variant with a single
    factor of pi that circulates in some references.
    """
    T = mean_period(setup.cycle_times)
    denom = 16.0 * math.pi * setup.L if literal else 16.0 * math.pi**2 * setup.L
    return setup.m * g * setup.D**2 * T**2 / denom


def period_for_inertia(J: float, D: float, L: float, m: float, g: float = 9.81) -> float:
    """Inverse of the default bifilar formula, for building synthetic runs."""
    return math.sqrt(J * 16.0 * math.pi**2 * L / (m * g * D**2))


@dataclass(frozen=True, slots=True)
class MarkerRecord:
    t: float
    front: tuple[float, float]
    rear: tuple[float, float]


@dataclass(frozen=True)
class CircularRunData:
    """Time-aligned marker positions and IMU/speed samples of one run.

    ``a_y``, ``psi_dot`` and ``v`` hold one sample per marker record.
    ``a_x`` is optional and only used by the unsimplified force form.
    """

    markers: tuple[MarkerRecord, ...]
    a_y: np.ndarray
    psi_dot: np.ndarray
    v: np.ndarray
    delta: float
    a_x: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.markers)
        object.__setattr__(self, "markers", tuple(self.markers))
        for name in ("a_y", "psi_dot", "v", "a_x"):
            value = getattr(self, name)
            if value is None:
                continue
            arr = np.asarray(value, dtype=float)
            if arr.shape != (n,):
                raise InputError(f"{name} has {arr.shape[0] if arr.ndim else 0} samples, expected {n}")
            object.__setattr__(self, name, arr)

    @property
    def t(self) -> np.ndarray:
        return np.array([rec.t for rec in self.markers])


@dataclass(frozen=True, slots=True)
class CogSample:
    t: float
    x: float
    y: float
    heading: float


def check_marker_separation(markers: Sequence[MarkerRecord], separation: float, tol: float = 0.05):
    """Reject logs whose marker distance drifts more than ``tol`` from ``separation``."""
    for rec in markers:
        d = math.dist(rec.front, rec.rear)
        if abs(d - separation) > tol * separation:
            raise InputError(
                f"t={rec.t}: marker distance {d:.4g} m deviates more than "
                f"{100 * tol:.0f}% from {separation:.4g} m"
            )


def cog_track(
    markers: Sequence[MarkerRecord],
    l_v: float,
    l_h: float,
    front_offset: float | None = None,
    rear_offset: float | None = None,
    min_records: int = 5,
) -> list[CogSample]:
    """CoG position and heading for every marker record.

    Markers sit on the longitudinal axis, ``front_offset`` ahead of and
    ``rear_offset`` behind the CoG; by default they sit over the axles,
    at l_v and l_h. Only the ratio of the offsets matters.
    """
    if len(markers) < min_records:
        raise TooFewSamples(f"need at least {min_records} marker records, got {len(markers)}")
    f = l_v if front_offset is None else front_offset
    r = l_h if rear_offset is None else rear_offset
    frac = r / (f + r)
    out = []
    prev_t = -math.inf
    for rec in markers:
        if not rec.t > prev_t:
            raise InputError(f"marker timestamps must be strictly increasing (t={rec.t})")
        prev_t = rec.t
        dx = rec.front[0] - rec.rear[0]
        dy = rec.front[1] - rec.rear[1]
        if math.hypot(dx, dy) < 1e-6:
            raise DegenerateMarkers(f"t={rec.t}: front and rear markers coincide")
        out.append(
            CogSample(
                rec.t,
                rec.rear[0] + frac * dx,
                rec.rear[1] + frac * dy,
                wrap_angle(math.atan2(dy, dx)),
            )
        )
    return out


def _moving_average(x: np.ndarray, window: int) -> np.ndarray:
    return np.convolve(x, np.full(window, 1.0 / window), mode="valid")


def drift_angle_series(cog: Sequence[CogSample], window: int = 5) -> list[tuple[float, float]]:
    """Drift angle (velocity direction minus heading) along a CoG track.

    Positions are smoothed with a centred moving average of ``window``
    samples, the path tangent comes from central differences of the
    smoothed positions, and the result is reported for the samples where
    both are defined (``window // 2 + 1`` samples are lost at each end).
    """
    if window < 1 or window % 2 == 0:
        raise InputError(f"window must be odd and positive, got {window}")
    n = len(cog)
    if n < window + 2:
        raise TooFewSamples(f"need at least {window + 2} samples, got {n}")
    half = window // 2
    xs = _moving_average(np.array([c.x for c in cog]), window)
    ys = _moving_average(np.array([c.y for c in cog]), window)
    tangent = np.arctan2(ys[2:] - ys[:-2], xs[2:] - xs[:-2])
    out = []
    for i, tan_angle in enumerate(tangent):
        sample = cog[i + half + 1]
        out.append((sample.t, wrap_angle(float(tan_angle) - sample.heading)))
    return out


@dataclass(frozen=True)
class CorneringStiffness:
    C_v: float
    C_h: float
    F_sv: float
    F_sh: float
    alpha_v: float
    alpha_h: float
    beta: float
    psi_dot: float
    v: float
    a_y: float
    window: tuple[float, float] = field(default=(math.nan, math.nan))
    n_samples: int = 0

    def __iter__(self):
        return iter((self.C_v, self.C_h))


def stiffness_from_means(
    delta: float,
    beta: float,
    psi_dot: float,
    v: float,
    a_y: float,
    m: float,
    l_v: float,
    l_h: float,
    a_x: float = 0.0,
    small_angle: bool = True,
    min_slip: float = 0.005,
) -> CorneringStiffness:
    """Cornering stiffnesses from steady-state averages of one circular run."""
    l = l_v + l_h
    alpha_v = delta - beta - psi_dot * l_v / v
    alpha_h = -beta + psi_dot * l_h / v
    if abs(alpha_v) <= min_slip:
        raise SlipTooSmall("front", alpha_v, min_slip)
    if abs(alpha_h) <= min_slip:
        raise SlipTooSmall("rear", alpha_h, min_slip)
    if small_angle:
        F_sv = l_h / l * m * a_y
    else:
        phi = delta - alpha_v
        F_sv = l_h / l * m * (a_y * math.cos(phi) + a_x * math.sin(phi))
    F_sh = l_v / l * m * a_y
    return CorneringStiffness(
        C_v=F_sv / alpha_v,
        C_h=F_sh / alpha_h,
        F_sv=F_sv,
        F_sh=F_sh,
        alpha_v=alpha_v,
        alpha_h=alpha_h,
        beta=beta,
        psi_dot=psi_dot,
        v=v,
        a_y=a_y,
    )


def steady_mask(
    t: np.ndarray, psi_dot: np.ndarray, span: float = 2.0, cv_limit: float = 0.05
) -> np.ndarray:
    """Samples covered by some ``span``-second window with yaw-rate CV below ``cv_limit``."""
    n = len(t)
    mask = np.zeros(n, dtype=bool)
    c1 = np.concatenate([[0.0], np.cumsum(psi_dot)])
    c2 = np.concatenate([[0.0], np.cumsum(psi_dot**2)])
    ends = np.searchsorted(t, t + span - 1e-9 * max(span, 1.0))
    for i in range(n):
        j = ends[i]
        if j >= n:
            break
        count = j - i + 1
        mean = (c1[j + 1] - c1[i]) / count
        var = max((c2[j + 1] - c2[i]) / count - mean**2, 0.0)
        if mean != 0.0 and math.sqrt(var) < cv_limit * abs(mean):
            mask[i : j + 1] = True
    return mask


def cornering_stiffness(
    run: CircularRunData,
    m: float,
    l_v: float,
    l_h: float,
    window: int = 5,
    front_offset: float | None = None,
    rear_offset: float | None = None,
    span: float = 2.0,
    cv_limit: float = 0.05,
    min_slip: float = 0.005,
    small_angle: bool = True,
) -> CorneringStiffness:
    """Identify (C_v, C_h) from a steady circular run."""
    cog = cog_track(run.markers, l_v, l_h, front_offset, rear_offset, min_records=window)
    betas = drift_angle_series(cog, window)
    lost = window // 2 + 1
    idx = slice(lost, len(cog) - lost)

    t = run.t
    mask = steady_mask(t, run.psi_dot, span, cv_limit)[idx]
    if not mask.any():
        raise NoSteadyWindow(
            f"no {span:g} s window with yaw-rate variation below {100 * cv_limit:.0f}%"
        )
    beta = np.array([b for _, b in betas])[mask]
    t_used = t[idx][mask]

    def avg(arr):
        return float(np.mean(arr[idx][mask]))

    result = stiffness_from_means(
        delta=run.delta,
        beta=float(np.mean(beta)),
        psi_dot=avg(run.psi_dot),
        v=avg(run.v),
        a_y=avg(run.a_y),
        m=m,
        l_v=l_v,
        l_h=l_h,
        a_x=avg(run.a_x) if run.a_x is not None else 0.0,
        small_angle=small_angle,
        min_slip=min_slip,
    )
    return CorneringStiffness(
        **{
            **result.__dict__,
            "window": (float(t_used[0]), float(t_used[-1])),
            "n_samples": int(mask.sum()),
        }
    )
