"""Generalized bushing stiffness map and its (partial) inverses.

The map sends a relative pose (gimbal angles + translation) to the wrench
the environment must apply on the tool frame to hold that deformation:

    tau = N(theta).T @ K_tau @ theta        f = K_f @ x

Both stiffness matrices are positive diagonal, so the map is a
diffeomorphism on |pitch| < pi/2 and admits a closed-form inverse that is
evaluated bottom-up (yaw, then pitch, then roll).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NoConvergenceError, OutOfRangeError
from .se3 import RollPitchYaw, SpatialForce, gimbal_matrix


@dataclass(frozen=True)
class StiffnessParams:
    """Diagonal gimbal stiffness (N*m/rad) and translational stiffness (N/m)."""

    k_tau: np.ndarray  # diagonal entries (k_r, k_p, k_y)
    k_f: np.ndarray  # diagonal entries (k_fx, k_fy, k_fz)

    def __post_init__(self):
        kt = np.asarray(self.k_tau, dtype=float).reshape(3)
        kf = np.asarray(self.k_f, dtype=float).reshape(3)
        if not (np.all(kt > 0.0) and np.all(kf > 0.0)):
            raise ValueError("stiffness diagonals must be strictly positive")
        object.__setattr__(self, "k_tau", kt)
        object.__setattr__(self, "k_f", kf)
        kt.setflags(write=False)
        kf.setflags(write=False)

    def scaled(self, factor: float) -> "StiffnessParams":
        return StiffnessParams(self.k_tau * factor, self.k_f * factor)

    def to_dict(self) -> dict:
        return {"k_tau": list(self.k_tau), "k_f": list(self.k_f)}

    @classmethod
    def from_dict(cls, d: dict) -> "StiffnessParams":
        return cls(np.asarray(d["k_tau"], dtype=float), np.asarray(d["k_f"], dtype=float))


# Desk-scale defaults for tests and shipped scenarios.
DEFAULT_STIFFNESS = StiffnessParams(np.array([2.0, 2.0, 2.0]), np.array([300.0, 300.0, 300.0]))


class RotationMode(Enum):
    """Which rotational channels are torque- vs angle-specified."""

    TWO_TORQUES_ONE_ANGLE = "2-torques-1-angle"
    ONE_TORQUE_TWO_ANGLES = "1-torque-2-angles"
    ALL_ANGLES = "all-angles"
    ALL_TORQUES = "all-torques"


@dataclass(frozen=True)
class HybridSpec:
    """Task decomposition for hybrid force/pose control.

    `p_select` is an orthogonal projection picking the position-controlled
    translational axes; its complement takes desired forces. The rotational
    decomposition is expressed in the gripper frame T. `position_target`
    holds the world-frame targets for the selected translation channels,
    `force_target` the desired world-frame force on the complement.
    Rotational targets are relative (deformation) angles and gripper-frame
    torques, depending on the mode.
    """

    p_select: np.ndarray
    rotation_mode: RotationMode
    position_target: np.ndarray
    force_target: np.ndarray
    torque_target: np.ndarray  # (tau_x, tau_y, tau_z) in T; unused entries ignored
    angle_target: np.ndarray  # (roll, pitch, yaw) relative; unused entries ignored

    def __post_init__(self):
        p = np.asarray(self.p_select, dtype=float).reshape(3, 3)
        if np.abs(p @ p - p).max() > 1e-10 or np.abs(p - p.T).max() > 1e-10:
            raise ValueError("p_select must be a symmetric projection matrix")
        object.__setattr__(self, "p_select", p)
        for name in ("position_target", "force_target", "torque_target", "angle_target"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(3)
            object.__setattr__(self, name, v)

    @property
    def p_complement(self) -> np.ndarray:
        return np.eye(3) - self.p_select


def stiffness_forward(
    theta: RollPitchYaw, x: np.ndarray, params: StiffnessParams
) -> SpatialForce:
    """Wrench (in T) holding deformation (theta, x) of the bushing."""
    tau = gimbal_matrix(theta).T @ (params.k_tau * theta.vector)
    f = params.k_f * np.asarray(x, dtype=float).reshape(3)
    return SpatialForce(tau, f, frame="T")


def stiffness_inverse(
    wrench: SpatialForce, params: StiffnessParams
) -> tuple[RollPitchYaw, np.ndarray]:
    """Closed-form inverse of :func:`stiffness_forward`.

    Solved bottom-up: yaw from tau_z, pitch from the yaw-rotated torque,
    roll last. The leading 1/k_r divides the whole roll expression; this
    grouping is the one that satisfies the round-trip identity.
    """
    tau = wrench.torque
    kr, kp, ky = params.k_tau
    yaw = tau[2] / ky
    cy, sy = math.cos(yaw), math.sin(yaw)
    pitch = (tau[1] * cy - tau[0] * sy) / kp
    if abs(pitch) >= math.pi / 2.0:
        raise OutOfRangeError(f"recovered |pitch| = {abs(pitch):.4f} >= pi/2")
    roll = ((tau[0] * cy + tau[1] * sy) * math.cos(pitch) - tau[2] * math.sin(pitch)) / kr
    x = wrench.force / params.k_f
    return RollPitchYaw(roll, pitch, yaw), x


def stiffness_jacobian_det(theta: RollPitchYaw, params: StiffnessParams) -> float:
    """Jacobian determinant of the orientation map, k_r k_p k_y / cos(p)."""
    cp = math.cos(theta.pitch)
    if abs(cp) < 1e-6:
        from .errors import GimbalLockError

        raise GimbalLockError("Jacobian determinant undefined at |pitch| = pi/2")
    return float(np.prod(params.k_tau)) / cp


def hybrid_position(
    spec: HybridSpec, x_d: np.ndarray, f_d: np.ndarray, params: StiffnessParams
) -> np.ndarray:
    """Blend position targets with force-derived deformations per channel."""
    x_d = np.asarray(x_d, dtype=float).reshape(3)
    f_d = np.asarray(f_d, dtype=float).reshape(3)
    return spec.p_select @ x_d + spec.p_complement @ (f_d / params.k_f)


def hybrid_orientation_2t1a(
    tau_x_d: float,
    tau_y_d: float,
    yaw_d: float,
    params: StiffnessParams,
    max_iter: int = 100,
    step_tol: float = 1e-12,
) -> RollPitchYaw:
    """Angles achieving two desired torques (x, y) and a desired yaw.

    The roll row couples to pitch; solved by fixed-point iteration, which
    converges in a couple of steps because the pitch row is closed-form.
    """
    kr, kp, ky = params.k_tau
    cy, sy = math.cos(yaw_d), math.sin(yaw_d)
    roll, pitch = 0.0, 0.0
    for _ in range(max_iter):
        pitch_new = (tau_y_d * cy - tau_x_d * sy) / kp
        roll_new = (
            (tau_x_d * cy + tau_y_d * sy) * math.cos(pitch_new)
            - ky * yaw_d * math.sin(pitch_new)
        ) / kr
        step = max(abs(pitch_new - pitch), abs(roll_new - roll))
        roll, pitch = roll_new, pitch_new
        if step < step_tol:
            break
    else:
        raise NoConvergenceError("2-torques-1-angle iteration did not converge")
    if abs(pitch) >= math.pi / 2.0:
        raise OutOfRangeError(f"recovered |pitch| = {abs(pitch):.4f} >= pi/2")
    return RollPitchYaw(roll, pitch, yaw_d)


def hybrid_orientation_1t2a(
    tau_z_d: float, roll_d: float, pitch_d: float, params: StiffnessParams
) -> RollPitchYaw:
    """Angles achieving a desired z torque and desired roll/pitch."""
    if abs(pitch_d) >= math.pi / 2.0:
        raise OutOfRangeError("desired |pitch| >= pi/2")
    return RollPitchYaw(roll_d, pitch_d, tau_z_d / params.k_tau[2])
