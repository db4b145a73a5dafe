"""Force and hybrid force/pose controllers.

The controllers turn desired wrenches into position commands: the desired
wrench is mapped through the inverse stiffness estimate to a desired
deformation, and the gripper is commanded to the pose that realizes that
deformation if the tool holds still. Desired wrenches are the reaction the
environment should exert on the tool.

A 1D series-elastic reference controller is included for the scalar case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .se3 import (
    RigidTransform,
    RollPitchYaw,
    SpatialForce,
    axis_angle_to_rotation,
    reexpress_spatial_force,
    rotation_to_axis_angle,
    rotation_to_rpy,
    rpy_to_rotation,
)
from .stiffness import (
    HybridSpec,
    RotationMode,
    StiffnessParams,
    hybrid_orientation_1t2a,
    hybrid_orientation_2t1a,
    stiffness_forward,
    stiffness_inverse,
)


@dataclass(frozen=True)
class ControllerConfig:
    """Stiffness estimate plus discrete-time command limits."""

    stiffness_estimate: StiffnessParams
    dt: float = 0.004
    max_step_translation: float = 0.002  # m per control step
    max_step_rotation: float = math.radians(0.5)  # rad per control step
    horizon: float = 10.0  # s

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("control period must be positive")
        if self.max_step_translation < 0.0 or self.max_step_rotation < 0.0:
            raise ValueError("rate limits must be non-negative")


@dataclass
class Sea1dState:
    """1D series-elastic plant state as seen by the reference controller."""

    k: float  # sensor spring stiffness, N/m
    k_p: float
    k_d: float
    x_gripper: float  # motor/gripper position in world
    x_deformation: float  # spring deformation (tool minus gripper along the press axis)
    v_gripper: float = 0.0

    def __post_init__(self):
        if self.k <= 0.0 or self.k_p <= 0.0 or self.k_d < 0.0:
            raise ValueError("require k, k_p > 0 and k_d >= 0")


def sea_1d_force_step(state: Sea1dState, f_d: float) -> float:
    """One step of 1D series-elastic force control; returns the motor force.

    Desired force -> desired deformation f_d / k -> desired position ->
    PD position control.
    """
    d_desired = f_d / state.k
    x_desired = state.x_gripper + state.x_deformation - d_desired
    return -state.k_p * (state.x_gripper - x_desired) - state.k_d * state.v_gripper


def rate_limit(
    current: RigidTransform, target: RigidTransform, cfg: ControllerConfig
) -> RigidTransform:
    """Scale the pose increment current->target down to the per-step limits.

    A single scale factor is applied to both the translation and the
    rotation log, so the increment direction is unchanged.
    """
    delta = current.inverse() @ target
    t = delta.translation
    w = rotation_to_axis_angle(delta.rotation)
    t_norm = float(np.linalg.norm(t))
    w_norm = float(np.linalg.norm(w))
    scale = 1.0
    if t_norm > cfg.max_step_translation and t_norm > 0.0:
        scale = min(scale, cfg.max_step_translation / t_norm)
    if w_norm > cfg.max_step_rotation and w_norm > 0.0:
        scale = min(scale, cfg.max_step_rotation / w_norm)
    if scale >= 1.0:
        return RigidTransform(target.rotation, target.translation, current.parent, current.child)
    limited = RigidTransform(axis_angle_to_rotation(scale * w), scale * t)
    out = current @ limited
    return RigidTransform(out.rotation, out.translation, current.parent, current.child)


def _compose_command(
    x_cmd: RigidTransform, y: RigidTransform, deformation_d: RigidTransform
) -> RigidTransform:
    # W_X_Td = W_X_T * T_X_C * (T_X_Cd)^-1: drives the relative pose toward
    # the desired deformation if the tool holds still.
    out = RigidTransform(x_cmd.rotation, x_cmd.translation) @ RigidTransform(
        y.rotation, y.translation
    ) @ deformation_d.inverse()
    return RigidTransform(out.rotation, out.translation, "W", "T")


def force_control_step(
    y: RigidTransform,
    x_cmd: RigidTransform,
    wrench_d_world: SpatialForce,
    cfg: ControllerConfig,
) -> RigidTransform:
    """One step of 6D force control.

    `y` is the measured relative pose T->C, `x_cmd` the current gripper
    command W->T, `wrench_d_world` the desired reaction wrench on the tool
    expressed in the world frame.
    """
    wrench_d_T = reexpress_spatial_force(x_cmd.inverse(), wrench_d_world)
    theta_d, t_d = stiffness_inverse(wrench_d_T, cfg.stiffness_estimate)
    deformation_d = RigidTransform(rpy_to_rotation(theta_d), t_d)
    return rate_limit(x_cmd, _compose_command(x_cmd, y, deformation_d), cfg)


def _rotation_deformation_target(
    spec: HybridSpec, params: StiffnessParams
) -> RigidTransform:
    mode = spec.rotation_mode
    if mode is RotationMode.TWO_TORQUES_ONE_ANGLE:
        theta = hybrid_orientation_2t1a(
            spec.torque_target[0], spec.torque_target[1], spec.angle_target[2], params
        )
    elif mode is RotationMode.ONE_TORQUE_TWO_ANGLES:
        theta = hybrid_orientation_1t2a(
            spec.torque_target[2], spec.angle_target[0], spec.angle_target[1], params
        )
    elif mode is RotationMode.ALL_ANGLES:
        theta = RollPitchYaw(*spec.angle_target)
    else:  # ALL_TORQUES
        theta, _ = stiffness_inverse(
            SpatialForce(spec.torque_target, np.zeros(3)), params
        )
    return RigidTransform(rpy_to_rotation(theta), np.zeros(3))


def hybrid_control_step(
    y: RigidTransform,
    x_cmd: RigidTransform,
    spec: HybridSpec,
    cfg: ControllerConfig,
) -> RigidTransform:
    """One step of hybrid force/pose control.

    Force channels regulate the bushing deformation toward the partial
    inverse of the desired wrench; translation channels selected by
    `spec.p_select` track the world-frame position targets directly.
    """
    params = cfg.stiffness_estimate

    # Desired force, expressed in T (rotation only: translational channels
    # transform without a lever arm).
    f_d_T = x_cmd.rotation.T @ (spec.p_complement @ spec.force_target)
    t_def_d = f_d_T / params.k_f

    rot_def = _rotation_deformation_target(spec, params)
    deformation_d = RigidTransform(rot_def.rotation, t_def_d)
    candidate = _compose_command(x_cmd, y, deformation_d)

    # Position channels: place the predicted tool origin on the targets.
    tool_pred = candidate.apply(deformation_d.translation)
    corrected = candidate.translation + spec.p_select @ (
        spec.position_target - tool_pred
    )
    candidate = RigidTransform(candidate.rotation, corrected, "W", "T")
    return rate_limit(x_cmd, candidate, cfg)


def predicted_deformation(
    wrench_d_T: SpatialForce, params: StiffnessParams
) -> RigidTransform:
    """Deformation pose that the stiffness estimate maps to the wrench."""
    theta_d, t_d = stiffness_inverse(wrench_d_T, params)
    return RigidTransform(rpy_to_rotation(theta_d), t_d)


def wrench_error(achieved: SpatialForce, desired: SpatialForce) -> float:
    return float(np.linalg.norm(achieved.vector - desired.vector))
