"""Deterministic quasi-static tool-contact simulator.

The gripper frame T is position-tracked; the tool frame C hangs on the
bushing compliance. Each step solves for the tool pose minimizing total
potential energy (bushing + penalty contact against a horizontal plane +
gravity) with Newton iterations on the 6-dof relative pose, warm-started
from the previous solution. Contact is frictionless normal penalty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import GimbalLockError, NoConvergenceError
from .se3 import (
    RigidTransform,
    RollPitchYaw,
    gimbal_matrix_inverse,
    rpy_to_rotation,
)
from .stiffness import StiffnessParams, stiffness_forward

_GRAD_TOL = 1e-9
_MAX_NEWTON_ITERS = 200


@dataclass(frozen=True)
class ToolModel:
    """Rigid tool: contact points and mass properties in the tool frame."""

    contact_points: np.ndarray  # (n, 3), m
    mass: float = 0.0  # kg
    com: np.ndarray = None  # (3,), m
    name: str = "tool"

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.contact_points, dtype=float))
        if pts.shape[0] < 1 or pts.shape[1] != 3:
            raise ValueError("tool needs at least one 3D contact point")
        if self.mass < 0.0:
            raise ValueError("mass must be non-negative")
        com = np.zeros(3) if self.com is None else np.asarray(self.com, dtype=float).reshape(3)
        object.__setattr__(self, "contact_points", pts)
        object.__setattr__(self, "com", com)
        pts.setflags(write=False)
        com.setflags(write=False)

    def to_dict(self) -> dict:
        return {
            "contact_points": self.contact_points.tolist(),
            "mass": self.mass,
            "com": self.com.tolist(),
            "name": self.name,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ToolModel":
        return cls(
            np.asarray(d["contact_points"], dtype=float),
            float(d.get("mass", 0.0)),
            np.asarray(d.get("com", [0.0, 0.0, 0.0]), dtype=float),
            d.get("name", "tool"),
        )


@dataclass(frozen=True)
class EnvironmentModel:
    """Horizontal plane with per-point penalty springs."""

    plane_height: float = 0.0  # m
    contact_stiffness: float = 1e4  # N/m per contact point
    gravity: float = 9.81  # m/s^2

    def __post_init__(self):
        if self.contact_stiffness <= 0.0:
            raise ValueError("contact stiffness must be positive")

    def to_dict(self) -> dict:
        return {
            "plane_height": self.plane_height,
            "contact_stiffness": self.contact_stiffness,
            "gravity": self.gravity,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnvironmentModel":
        return cls(
            float(d.get("plane_height", 0.0)),
            float(d.get("contact_stiffness", 1e4)),
            float(d.get("gravity", 9.81)),
        )


@dataclass(frozen=True)
class ContactResult:
    """Per-point normal forces and their aggregates."""

    normal_forces: np.ndarray  # (n,), N, >= 0
    f_z: float  # N, sum of normal forces
    tau_x: float  # N*m, x-torque about the tool origin (world axes)

    @classmethod
    def empty(cls, n: int) -> "ContactResult":
        return cls(np.zeros(n), 0.0, 0.0)


@dataclass(frozen=True)
class PlantState:
    """Snapshot of one quasi-static step."""

    gripper_command: RigidTransform  # W -> T commanded
    gripper_pose: RigidTransform  # W -> T realized
    tool_pose: RigidTransform  # W -> C
    relative_pose: RigidTransform  # T -> C
    contact: ContactResult
    time: float


def _relative_pose(q: np.ndarray) -> RigidTransform:
    theta = RollPitchYaw(q[0], q[1], q[2])
    return RigidTransform(rpy_to_rotation(theta), q[3:6], "T", "C")


def _energy_and_gradient(
    q: np.ndarray,
    gripper: RigidTransform,
    tool: ToolModel,
    env: EnvironmentModel,
    params: StiffnessParams,
) -> tuple[float, np.ndarray]:
    theta = RollPitchYaw(q[0], q[1], q[2])
    x = q[3:6]
    r_tc = rpy_to_rotation(theta)
    r_wt = gripper.rotation
    e_inv = gimbal_matrix_inverse(theta)  # columns: dR/dtheta_j generators

    energy = 0.5 * float(q[:3] @ (params.k_tau * q[:3]) + x @ (params.k_f * x))
    grad = np.concatenate([params.k_tau * q[:3], params.k_f * x])

    # External point forces (world frame): penalty contact + gravity.
    points = [(p, None) for p in tool.contact_points]
    if tool.mass > 0.0:
        points.append((tool.com, -tool.mass * env.gravity))
    z_hat = np.array([0.0, 0.0, 1.0])
    for r_local, gravity_fz in points:
        body = r_tc @ r_local
        p_w = gripper.apply(body + x)
        if gravity_fz is None:
            pen = env.plane_height - p_w[2]
            if pen <= 0.0:
                continue
            energy += 0.5 * env.contact_stiffness * pen * pen
            f_w = env.contact_stiffness * pen * z_hat
        else:
            energy += -gravity_fz * p_w[2]  # m g z
            f_w = gravity_fz * z_hat
        f_t = r_wt.T @ f_w
        grad[3:6] -= f_t
        # d p / d theta_j = R_WT (E_j x (R_TC r)); gradient is -F . dp/dq
        grad[0] -= float(f_t @ np.cross(e_inv[:, 0], body))
        grad[1] -= float(f_t @ np.cross(e_inv[:, 1], body))
        grad[2] -= float(f_t @ np.cross(e_inv[:, 2], body))
    return energy, grad


def _contact_result(
    relative: RigidTransform,
    gripper: RigidTransform,
    tool: ToolModel,
    env: EnvironmentModel,
) -> ContactResult:
    tool_pose = gripper @ relative
    lambdas = np.zeros(len(tool.contact_points))
    tau = np.zeros(3)
    origin = tool_pose.translation
    for i, r_local in enumerate(tool.contact_points):
        p_w = tool_pose.apply(r_local)
        pen = env.plane_height - p_w[2]
        if pen > 0.0:
            lam = env.contact_stiffness * pen
            lambdas[i] = lam
            tau += np.cross(p_w - origin, np.array([0.0, 0.0, lam]))
    return ContactResult(lambdas, float(lambdas.sum()), float(tau[0]))


def solve_tool_equilibrium(
    gripper: RigidTransform,
    tool: ToolModel,
    env: EnvironmentModel,
    params: StiffnessParams,
    initial_guess: RigidTransform | None = None,
) -> tuple[RigidTransform, ContactResult]:
    """Static-equilibrium tool pose for a fixed gripper pose.

    Newton with finite-difference Hessian of the analytic gradient,
    Levenberg damping, and backtracking line search on the energy.
    Returns the world tool pose and the contact forces there.
    """
    if initial_guess is None:
        q = np.zeros(6)
    else:
        rel = initial_guess
        theta = _rpy_of(rel.rotation)
        q = np.concatenate([theta, rel.translation])

    energy, grad = _energy_and_gradient(q, gripper, tool, env, params)
    for _ in range(_MAX_NEWTON_ITERS):
        if np.linalg.norm(grad) < _GRAD_TOL:
            break
        hess = _fd_hessian(q, gripper, tool, env, params)
        step = _damped_newton_step(hess, grad)
        # Backtracking line search on the energy.
        alpha = 1.0
        for _ in range(40):
            q_new = q + alpha * step
            if abs(q_new[1]) < math.pi / 2 - 1e-6:
                try:
                    e_new, g_new = _energy_and_gradient(q_new, gripper, tool, env, params)
                except GimbalLockError:
                    e_new = math.inf
                # Armijo with an absolute slack: near the minimum the
                # true decrease drops below float resolution of E.
                slack = 1e-14 * max(1.0, abs(energy))
                if e_new < energy + 1e-4 * alpha * float(grad @ step) + slack:
                    q, energy, grad = q_new, e_new, g_new
                    break
            alpha *= 0.5
        else:
            raise NoConvergenceError("line search failed in equilibrium solve")
    else:
        raise NoConvergenceError(
            f"equilibrium Newton did not converge (|grad| = {np.linalg.norm(grad):.3e})"
        )
    if abs(q[1]) >= math.pi / 2 - 1e-6:
        raise GimbalLockError("equilibrium approaches |pitch| = pi/2")

    relative = _relative_pose(q)
    tool_pose = gripper @ relative
    return tool_pose, _contact_result(relative, gripper, tool, env)


def _rpy_of(rotation: np.ndarray) -> np.ndarray:
    from .se3 import rotation_to_rpy

    return rotation_to_rpy(rotation).vector


def _fd_hessian(q, gripper, tool, env, params, h: float = 1e-7) -> np.ndarray:
    hess = np.empty((6, 6))
    for j in range(6):
        dq = np.zeros(6)
        dq[j] = h
        _, gp = _energy_and_gradient(q + dq, gripper, tool, env, params)
        _, gm = _energy_and_gradient(q - dq, gripper, tool, env, params)
        hess[:, j] = (gp - gm) / (2.0 * h)
    return 0.5 * (hess + hess.T)


def _damped_newton_step(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    damping = 0.0
    eye = np.eye(6)
    for _ in range(20):
        try:
            step = np.linalg.solve(hess + damping * eye, -grad)
        except np.linalg.LinAlgError:
            step = None
        if step is not None and float(step @ grad) < 0.0:
            return step
        damping = max(2.0 * damping, 1e-6 * max(1.0, float(np.abs(hess).max())))
    return -grad  # gradient descent fallback


class Plant:
    """Quasi-static plant: holds geometry, stiffness and the noise stream."""

    def __init__(
        self,
        tool: ToolModel,
        env: EnvironmentModel,
        params: StiffnessParams,
        welded: bool = False,
        repeatability_sigma: float = 0.0,
        seed: int = 0,
    ):
        self.tool = tool
        self.env = env
        self.params = params
        self.welded = welded
        self.repeatability_sigma = repeatability_sigma
        self._rng = np.random.default_rng(seed)

    def initial_state(self, gripper_command: RigidTransform, time: float = 0.0) -> PlantState:
        return self._make_state(gripper_command, None, time)

    def step(self, state: PlantState, gripper_command: RigidTransform, dt: float) -> PlantState:
        """Advance one control period: track the command, re-equilibrate."""
        return self._make_state(gripper_command, state, state.time + dt)

    def observe_relative_pose(self, state: PlantState) -> RigidTransform:
        """Exact relative pose T->C (perfect visuotactile measurement)."""
        return state.relative_pose

    def bushing_wrench(self, state: PlantState):
        """Reaction wrench (in T) corresponding to the current deformation."""
        rel = state.relative_pose
        theta = _rpy_of(rel.rotation)
        return stiffness_forward(
            RollPitchYaw(*theta), rel.translation, self.params
        )

    def _make_state(
        self, command: RigidTransform, previous: PlantState | None, time: float
    ) -> PlantState:
        realized = command
        if self.repeatability_sigma > 0.0:
            noise = self._rng.normal(0.0, self.repeatability_sigma, size=3)
            realized = RigidTransform(
                command.rotation, command.translation + noise, command.parent, command.child
            )
        if self.welded:
            relative = RigidTransform.identity("T", "C")
            contact = _contact_result(relative, realized, self.tool, self.env)
            tool_pose = realized @ relative
        else:
            guess = previous.relative_pose if previous is not None else None
            tool_pose, contact = solve_tool_equilibrium(
                realized, self.tool, self.env, self.params, initial_guess=guess
            )
            relative = realized.inverse() @ tool_pose
        return PlantState(
            gripper_command=command,
            gripper_pose=realized,
            tool_pose=tool_pose,
            relative_pose=RigidTransform(
                relative.rotation, relative.translation, "T", "C"
            ),
            contact=contact,
            time=time,
        )
