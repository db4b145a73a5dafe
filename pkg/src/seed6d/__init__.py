"""6D series-elastic end-effector: stiffness map, controllers, simulator,
visuotactile pose estimation, and stiffness identification."""

from .controller import (
    ControllerConfig,
    Sea1dState,
    force_control_step,
    hybrid_control_step,
    rate_limit,
    sea_1d_force_step,
)
from .errors import (
    ConfigError,
    DegenerateFrameError,
    DegeneratePatchesError,
    GimbalLockError,
    InsufficientFlowError,
    NoContactError,
    NoConvergenceError,
    OutOfRangeError,
    Seed6dError,
)
from .estimator import (
    CameraIntrinsics,
    ContactPatch,
    EstimatorCalibration,
    FlowField,
    SensorFrame,
    calibrate_reference,
    estimate_contact_patch,
    estimate_flow,
    estimate_frame,
    estimate_pitch,
    estimate_relative_pose,
)
from .plant import ContactResult, EnvironmentModel, Plant, PlantState, ToolModel, solve_tool_equilibrium
from .se3 import (
    RigidTransform,
    RollPitchYaw,
    SpatialForce,
    gimbal_matrix,
    gimbal_rates_to_angular_velocity,
    reexpress_spatial_force,
    rotation_to_rpy,
    rpy_to_rotation,
)
from .stiffness import (
    DEFAULT_STIFFNESS,
    HybridSpec,
    RotationMode,
    StiffnessParams,
    hybrid_orientation_1t2a,
    hybrid_orientation_2t1a,
    hybrid_position,
    stiffness_forward,
    stiffness_inverse,
    stiffness_jacobian_det,
)
from .synthetic import (
    BubbleRigConfig,
    calibrate_curl_gain,
    load_frame,
    render_synthetic,
    save_frame,
    true_pitch,
)
from .sysid import SysIdReport, SysIdSample, generate_excitation, identify_stiffness

__version__ = "0.1.0"
