"""Single-track vehicle models, a 3-state EKF and parameter identification."""

from types import ModuleType as _ModuleType

from .core import (
    Config,
    ControlInput,
    Measurement,
    NoiseConfig,
    Pose,
    VehicleParams,
    VelocityState,
    load_config,
    validate_params,
    wrap_angle,
)
from .ekf import FilterEstimate, correct, initial_estimate, predict, reset_pose, step
from .errors import InputError, NumericalError, SingleTrackError
from .metrics import closure_metrics, horizon_error, horizon_predictions
from .models import (
    discrete_jacobian,
    dynamic_derivatives,
    dynamic_discrete_step,
    kinematic_step,
    lateral_forces,
    pose_integrate,
    slip_angles,
)
from .paramid import cog_from_scale, cog_track, cornering_stiffness, drift_angle_series, inertia_bifilar
from .runner import run_estimate
from .sim import lap, simulate, steady_circle, step_steer, straight, synthesize_sensors

__version__ = "0.1.0"

__all__ = [n for n, v in list(globals().items()) if not n.startswith("_") and not isinstance(v, _ModuleType)]
