"""Domain types, parameter validation, angle utilities and config parsing.

All quantities are SI, all angles radians. Every type here is a frozen
value object; numpy arrays held by them are marked read-only.

Config documents are JSON with these keys (only ``params`` is required)::

    {
      "params": {"m": 4.0, "l_v": 0.18, "l_h": 0.18,
                 "J_z": 0.05, "C_v": 50.0, "C_h": 50.0},
      "noise": {"q_diag": [0.05, 0.01, 0.01],
                "r_diag": [0.125, 0.10],
                "p0_diag": [0.1, 0.1, 0.1],
                "ax_variance": 0.0025},
      "dt": 0.005, "v_min": 0.1, "delta_max": 0.6,
      "smoothing_window": 5, "g": 9.81, "eps_den": 1e-9,
      "bifilar_literal": false,
      "marker_front": null, "marker_rear": null
    }

``noise.q``, ``noise.r`` and ``noise.p0`` accept full nested-list matrices
instead of the ``*_diag`` forms.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, fields
from typing import Any, Mapping

import numpy as np

from .errors import NonPositiveParameter, ParseError, SteeringOutOfRange

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Map ``theta`` onto (-pi, pi]."""
    r = math.remainder(theta, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


@dataclass(frozen=True, slots=True)
class VehicleParams:
    m: float
    l_v: float
    l_h: float
    J_z: float
    C_v: float
    C_h: float

    @property
    def wheelbase(self) -> float:
        return self.l_v + self.l_h

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


PARAM_NAMES = ("m", "l_v", "l_h", "J_z", "C_v", "C_h")


def validate_params(raw: VehicleParams | Mapping[str, Any]) -> VehicleParams:
    """Return ``raw`` as VehicleParams if every field is strictly positive.

    Raises NonPositiveParameter naming the first offending field, in the
    order m, l_v, l_h, J_z, C_v, C_h. NaN counts as a violation.
    """
    values = raw.as_dict() if isinstance(raw, VehicleParams) else raw
    for name in PARAM_NAMES:
        if name not in values:
            raise ParseError(f"params.{name}", "missing required parameter")
        value = values[name]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError(f"params.{name}", f"expected a number, got {value!r}")
        if not (value > 0) or not math.isfinite(value):
            raise NonPositiveParameter(name, value)
    if isinstance(raw, VehicleParams):
        return raw
    return VehicleParams(**{name: float(values[name]) for name in PARAM_NAMES})


@dataclass(frozen=True, slots=True)
class Pose:
    X: float = 0.0
    Y: float = 0.0
    psi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "psi", wrap_angle(self.psi))


@dataclass(frozen=True, slots=True)
class VelocityState:
    v_x: float
    v_y: float = 0.0
    psi_dot: float = 0.0

    @property
    def speed(self) -> float:
        return math.hypot(self.v_x, self.v_y)

    def as_array(self) -> np.ndarray:
        return np.array([self.v_x, self.v_y, self.psi_dot])

    def is_finite(self) -> bool:
        return math.isfinite(self.v_x) and math.isfinite(self.v_y) and math.isfinite(self.psi_dot)


@dataclass(frozen=True, slots=True)
class ControlInput:
    delta: float = 0.0
    a_x: float = 0.0


@dataclass(frozen=True, slots=True)
class Measurement:
    psi_dot_meas: float
    v_x_meas: float

    def as_array(self) -> np.ndarray:
        return np.array([self.psi_dot_meas, self.v_x_meas])


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class NoiseConfig:
    """Process (Q), measurement (R) and initial (P0) covariances.

    Q and P0 are ordered (v_x, v_y, psi_dot); R is ordered (psi_dot, v_x),
    matching the measurement vector.
    """

    Q: np.ndarray = field(default_factory=lambda: np.diag([0.05, 0.01, 0.01]))
    R: np.ndarray = field(default_factory=lambda: np.diag([0.125, 0.10]))
    P0: np.ndarray = field(default_factory=lambda: np.diag([0.1, 0.1, 0.1]))
    ax_variance: float | None = None

    def __post_init__(self):
        for name, shape in (("Q", (3, 3)), ("R", (2, 2)), ("P0", (3, 3))):
            arr = _frozen(getattr(self, name))
            if arr.shape != shape:
                raise ParseError(f"noise.{name.lower()}", f"expected shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ParseError(f"noise.{name.lower()}", "entries must be finite")
            if not np.array_equal(arr, arr.T):
                raise ParseError(f"noise.{name.lower()}", "matrix must be symmetric")
            object.__setattr__(self, name, arr)
        try:
            np.linalg.cholesky(self.R)
        except np.linalg.LinAlgError:
            raise ParseError("noise.r", "R must be positive definite") from None
        for name in ("Q", "P0"):
            if np.linalg.eigvalsh(getattr(self, name)).min() < -1e-12:
                raise ParseError(f"noise.{name.lower()}", f"{name} must be positive semidefinite")

    def __eq__(self, other):
        if not isinstance(other, NoiseConfig):
            return NotImplemented
        return (
            np.array_equal(self.Q, other.Q)
            and np.array_equal(self.R, other.R)
            and np.array_equal(self.P0, other.P0)
            and self.ax_variance == other.ax_variance
        )

    __hash__ = None


@dataclass(frozen=True)
class Config:
    params: VehicleParams
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    dt: float = 0.005
    v_min: float = 0.1
    delta_max: float = 0.6
    smoothing_window: int = 5
    g: float = 9.81
    eps_den: float = 1e-9
    bifilar_literal: bool = False
    # marker offsets along the longitudinal axis, measured from the CoG;
    # None places the marker over the corresponding axle
    marker_front: float | None = None
    marker_rear: float | None = None

    def __post_init__(self):
        validate_params(self.params)
        for key in ("dt", "v_min", "g", "delta_max"):
            value = getattr(self, key)
            if not (math.isfinite(value) and value > 0):
                raise ParseError(key, f"must be a positive finite number, got {value!r}")
        if not (self.eps_den >= 0):
            raise ParseError("eps_den", "must be >= 0")
        w = self.smoothing_window
        if w < 3 or w % 2 == 0:
            raise ParseError("smoothing_window", f"must be odd and >= 3, got {w}")
        for key in ("marker_front", "marker_rear"):
            value = getattr(self, key)
            if value is not None and not (value > 0):
                raise ParseError(key, "marker offset must be > 0")

    @property
    def front_offset(self) -> float:
        return self.params.l_v if self.marker_front is None else self.marker_front

    @property
    def rear_offset(self) -> float:
        return self.params.l_h if self.marker_rear is None else self.marker_rear

    def check_input(self, u: ControlInput) -> None:
        if not abs(u.delta) <= self.delta_max:
            raise SteeringOutOfRange(
                f"|delta| = {abs(u.delta):.4g} rad exceeds delta_max = {self.delta_max:.4g} rad"
            )


_TOP_KEYS = {
    "params", "noise", "dt", "v_min", "delta_max", "smoothing_window", "g",
    "eps_den", "bifilar_literal", "marker_front", "marker_rear",
}
_NOISE_KEYS = {"q", "q_diag", "r", "r_diag", "p0", "p0_diag", "ax_variance"}


def _number(doc: Mapping[str, Any], key: str, location: str, default):
    if key not in doc or doc[key] is None:
        return default
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(location, f"expected a number, got {value!r}")
    return value


def _matrix(doc: Mapping[str, Any], name: str, n: int, default: np.ndarray) -> np.ndarray:
    full, diag = doc.get(name), doc.get(f"{name}_diag")
    if full is not None and diag is not None:
        raise ParseError(f"noise.{name}", f"give either {name} or {name}_diag, not both")
    try:
        if diag is not None:
            values = np.array(diag, dtype=float)
            if values.shape != (n,):
                raise ParseError(f"noise.{name}_diag", f"expected {n} entries")
            return np.diag(values)
        if full is not None:
            values = np.array(full, dtype=float)
            if values.shape != (n, n):
                raise ParseError(f"noise.{name}", f"expected a {n}x{n} matrix")
            return values
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"noise.{name}", str(exc)) from None
    return default


def config_from_dict(doc: Mapping[str, Any]) -> Config:
    if not isinstance(doc, Mapping):
        raise ParseError("<root>", "config document must be an object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ParseError(sorted(unknown)[0], "unknown key")
    if "params" not in doc or not isinstance(doc["params"], Mapping):
        raise ParseError("params", "missing params section")
    extra = set(doc["params"]) - set(PARAM_NAMES)
    if extra:
        raise ParseError(f"params.{sorted(extra)[0]}", "unknown key")
    params = validate_params(doc["params"])

    noise_doc = doc.get("noise") or {}
    if not isinstance(noise_doc, Mapping):
        raise ParseError("noise", "must be an object")
    unknown = set(noise_doc) - _NOISE_KEYS
    if unknown:
        raise ParseError(f"noise.{sorted(unknown)[0]}", "unknown key")
    base = NoiseConfig()
    noise = NoiseConfig(
        Q=_matrix(noise_doc, "q", 3, base.Q),
        R=_matrix(noise_doc, "r", 2, base.R),
        P0=_matrix(noise_doc, "p0", 3, base.P0),
        ax_variance=_number(noise_doc, "ax_variance", "noise.ax_variance", None),
    )

    window = doc.get("smoothing_window", 5)
    if isinstance(window, bool) or not isinstance(window, int):
        raise ParseError("smoothing_window", f"expected an integer, got {window!r}")
    literal = doc.get("bifilar_literal", False)
    if not isinstance(literal, bool):
        raise ParseError("bifilar_literal", "expected true or false")

    cfg = Config(
        params=params,
        noise=noise,
        dt=_number(doc, "dt", "dt", 0.005),
        v_min=_number(doc, "v_min", "v_min", 0.1),
        delta_max=_number(doc, "delta_max", "delta_max", 0.6),
        smoothing_window=window,
        g=_number(doc, "g", "g", 9.81),
        eps_den=_number(doc, "eps_den", "eps_den", 1e-9),
        bifilar_literal=literal,
        marker_front=_number(doc, "marker_front", "marker_front", None),
        marker_rear=_number(doc, "marker_rear", "marker_rear", None),
    )
    _check_velocity_guideline(cfg)
    return cfg


def _check_velocity_guideline(cfg: Config) -> None:
    # the v_x process variance has to cover the integrated accelerometer noise
    var_ax = cfg.noise.ax_variance
    if var_ax is not None and not cfg.noise.Q[0, 0] > cfg.dt * var_ax:
        warnings.warn(
            f"Q[v_x] = {cfg.noise.Q[0, 0]:.4g} does not exceed dt * var(a_x) = "
            f"{cfg.dt * var_ax:.4g}; the filter will be overconfident in v_x",
            stacklevel=3,
        )


def load_config(text: str) -> Config:
    """Parse a JSON config document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    return config_from_dict(doc)


def _matrix_entry(name: str, m: np.ndarray) -> dict[str, Any]:
    if np.array_equal(m, np.diag(np.diag(m))):
        return {f"{name}_diag": [float(x) for x in np.diag(m)]}
    return {name: [[float(x) for x in row] for row in m]}


def config_to_dict(cfg: Config) -> dict[str, Any]:
    noise: dict[str, Any] = {}
    noise.update(_matrix_entry("q", cfg.noise.Q))
    noise.update(_matrix_entry("r", cfg.noise.R))
    noise.update(_matrix_entry("p0", cfg.noise.P0))
    if cfg.noise.ax_variance is not None:
        noise["ax_variance"] = cfg.noise.ax_variance
    return {
        "params": cfg.params.as_dict(),
        "noise": noise,
        "dt": cfg.dt,
        "v_min": cfg.v_min,
        "delta_max": cfg.delta_max,
        "smoothing_window": cfg.smoothing_window,
        "g": cfg.g,
        "eps_den": cfg.eps_den,
        "bifilar_literal": cfg.bifilar_literal,
        "marker_front": cfg.marker_front,
        "marker_rear": cfg.marker_rear,
    }


def render_config(cfg: Config) -> str:
    """Serialize ``cfg`` so that ``load_config(render_config(cfg)) == cfg``."""
    return json.dumps(config_to_dict(cfg), indent=2)
