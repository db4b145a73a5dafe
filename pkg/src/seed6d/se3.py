"""Rotation/transform algebra and the roll-pitch-yaw gimbal parametrization.

Conventions used throughout the package:
  - Roll-pitch-yaw is extrinsic x-y-z, i.e. R = Rz(yaw) @ Ry(pitch) @ Rx(roll).
  - Angular velocity is the spatial one: Rdot @ R.T = skew(omega).
  - Spatial forces carry (torque, force) with the torque taken about the
    origin of the expressed-in frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GimbalLockError

# |cos(pitch)| below this raises GimbalLockError instead of emitting inf.
GIMBAL_LOCK_TOL = 1e-6

_ORTHONORMALITY_TOL = 1e-9
# Drift below this is repaired by polar projection; beyond it we raise.
_ORTHONORMALITY_REPAIR_TOL = 1e-6


def skew(v: np.ndarray) -> np.ndarray:
    x, y, z = np.asarray(v, dtype=float).reshape(3)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def unskew(m: np.ndarray) -> np.ndarray:
    return np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]]) * 0.5


@dataclass(frozen=True)
class RollPitchYaw:
    """Gimbal angles (radians). Stiffness operations require |pitch| < pi/2."""

    roll: float
    pitch: float
    yaw: float

    def __post_init__(self):
        if not all(math.isfinite(a) for a in (self.roll, self.pitch, self.yaw)):
            raise ValueError("roll-pitch-yaw components must be finite")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.roll, self.pitch, self.yaw])

    @classmethod
    def from_vector(cls, v) -> "RollPitchYaw":
        r, p, y = np.asarray(v, dtype=float).reshape(3)
        return cls(float(r), float(p), float(y))


def _check_rotation(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float).reshape(3, 3)
    if not np.all(np.isfinite(m)):
        raise ValueError("rotation matrix must be finite")
    err = np.abs(m.T @ m - np.eye(3)).max()
    if err > _ORTHONORMALITY_TOL:
        if err > _ORTHONORMALITY_REPAIR_TOL:
            raise ValueError(f"matrix is not orthonormal (max error {err:.3e})")
        # Round-off drift from long composition chains: snap back to SO(3).
        u, _, vt = np.linalg.svd(m)
        m = u @ vt
    if np.linalg.det(m) < 0.0:
        raise ValueError("matrix has negative determinant (reflection)")
    return m


@dataclass(frozen=True)
class RigidTransform:
    """SE(3) pose: child-frame coordinates into parent-frame coordinates.

    Frame labels are optional bookkeeping; composition checks that inner
    labels match when both are present.
    """

    rotation: np.ndarray
    translation: np.ndarray
    parent: str | None = None
    child: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "rotation", _check_rotation(self.rotation))
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if not np.all(np.isfinite(t)):
            raise ValueError("translation must be finite")
        object.__setattr__(self, "translation", t)
        self.rotation.setflags(write=False)
        self.translation.setflags(write=False)

    @classmethod
    def identity(cls, parent: str | None = None, child: str | None = None) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3), parent, child)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        if self.child is not None and other.parent is not None and self.child != other.parent:
            raise ValueError(
                f"frame mismatch in composition: {self.child!r} != {other.parent!r}"
            )
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
            self.parent,
            other.child,
        )

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return self.compose(other)

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation, self.child, self.parent)

    def apply(self, point: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(point, dtype=float) + self.translation


@dataclass(frozen=True)
class SpatialForce:
    """6D wrench: torque (N*m) and force (N), expressed in `frame`."""

    torque: np.ndarray
    force: np.ndarray
    frame: str | None = None

    def __post_init__(self):
        tau = np.asarray(self.torque, dtype=float).reshape(3)
        f = np.asarray(self.force, dtype=float).reshape(3)
        if not (np.all(np.isfinite(tau)) and np.all(np.isfinite(f))):
            raise ValueError("wrench components must be finite")
        object.__setattr__(self, "torque", tau)
        object.__setattr__(self, "force", f)
        tau.setflags(write=False)
        f.setflags(write=False)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.torque, self.force])

    @classmethod
    def zero(cls, frame: str | None = None) -> "SpatialForce":
        return cls(np.zeros(3), np.zeros(3), frame)


def rpy_to_rotation(theta: RollPitchYaw) -> np.ndarray:
    cr, sr = math.cos(theta.roll), math.sin(theta.roll)
    cp, sp = math.cos(theta.pitch), math.sin(theta.pitch)
    cy, sy = math.cos(theta.yaw), math.sin(theta.yaw)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def rotation_to_rpy(rotation: np.ndarray) -> RollPitchYaw:
    """Inverse of :func:`rpy_to_rotation` away from gimbal lock."""
    m = _check_rotation(rotation)
    sp = -m[2, 0]
    cp = math.sqrt(max(0.0, 1.0 - sp * sp))
    if cp < GIMBAL_LOCK_TOL:
        raise GimbalLockError("pitch within tolerance of +-pi/2")
    pitch = math.atan2(sp, cp)
    roll = math.atan2(m[2, 1], m[2, 2])
    yaw = math.atan2(m[1, 0], m[0, 0])
    return RollPitchYaw(roll, pitch, yaw)


def gimbal_matrix(theta: RollPitchYaw) -> np.ndarray:
    """Gimbal coordinate-transformation matrix N.

    N maps angular velocity to gimbal rates; N.T converts gimbal torques
    to spatial torques.
    """
    cp = math.cos(theta.pitch)
    if abs(cp) < GIMBAL_LOCK_TOL:
        raise GimbalLockError("gimbal matrix undefined at |pitch| = pi/2")
    sec_p = 1.0 / cp
    tan_p = math.tan(theta.pitch)
    cw, sw = math.cos(theta.yaw), math.sin(theta.yaw)
    return np.array(
        [
            [cw * sec_p, sw * sec_p, 0.0],
            [-sw, cw, 0.0],
            [cw * tan_p, sw * tan_p, 1.0],
        ]
    )


def gimbal_matrix_inverse(theta: RollPitchYaw) -> np.ndarray:
    """Closed-form inverse of N; maps gimbal rates to angular velocity."""
    cp = math.cos(theta.pitch)
    if abs(cp) < GIMBAL_LOCK_TOL:
        raise GimbalLockError("gimbal rate map undefined at |pitch| = pi/2")
    sp = math.sin(theta.pitch)
    cw, sw = math.cos(theta.yaw), math.sin(theta.yaw)
    return np.array(
        [
            [cw * cp, -sw, 0.0],
            [sw * cp, cw, 0.0],
            [-sp, 0.0, 1.0],
        ]
    )


def gimbal_rates_to_angular_velocity(theta: RollPitchYaw, rates: np.ndarray) -> np.ndarray:
    """Spatial angular velocity for given gimbal angle rates (rad/s)."""
    rates = np.asarray(rates, dtype=float).reshape(3)
    return gimbal_matrix_inverse(theta) @ rates


def reexpress_spatial_force(x: RigidTransform, wrench: SpatialForce) -> SpatialForce:
    """Re-express a wrench from the child frame of `x` into its parent frame.

    The application point is taken to be the child-frame origin, so the
    torque picks up the lever arm of the child origin in the parent frame.
    """
    f = x.rotation @ wrench.force
    tau = x.rotation @ wrench.torque + np.cross(x.translation, f)
    return SpatialForce(tau, f, x.parent)


def axis_angle_to_rotation(axis_angle: np.ndarray) -> np.ndarray:
    """Rodrigues formula; input is axis * angle (radians)."""
    w = np.asarray(axis_angle, dtype=float).reshape(3)
    angle = float(np.linalg.norm(w))
    k = skew(w)
    if angle < 1e-12:
        return np.eye(3) + k + 0.5 * (k @ k)
    a = math.sin(angle) / angle
    b = (1.0 - math.cos(angle)) / (angle * angle)
    return np.eye(3) + a * k + b * (k @ k)


def rotation_to_axis_angle(rotation: np.ndarray) -> np.ndarray:
    """Log map of SO(3); returns axis * angle."""
    m = np.asarray(rotation, dtype=float)
    c = np.clip((np.trace(m) - 1.0) * 0.5, -1.0, 1.0)
    angle = math.acos(c)
    if angle < 1e-9:
        return unskew(m)
    if angle > math.pi - 1e-6:
        # Near pi: extract axis from the symmetric part.
        a = np.sqrt(np.clip((np.diag(m) + 1.0) * 0.5, 0.0, 1.0))
        i = int(np.argmax(a))
        axis = np.array(
            [m[0, i] + m[i, 0], m[1, i] + m[i, 1], m[2, i] + m[i, 2]]
        )
        axis[i] = 2.0 * a[i] * a[i]
        axis /= 2.0 * a[i]
        n = np.linalg.norm(axis)
        return axis / n * angle
    return unskew(m) / math.sin(angle) * angle
