"""Stiffness identification from (relative pose, wrench) sample sets.

Translational axes are fit per-axis by least squares. Rotational axes are
regressed in gimbal-torque coordinates: premultiplying the spatial torque
by N(theta)^-T makes the model exactly linear and diagonal, so each axis
is again a scalar least-squares fit. Bootstrap resampling supplies
per-axis standard deviations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .se3 import RigidTransform, RollPitchYaw, SpatialForce, gimbal_matrix, rotation_to_rpy, rpy_to_rotation
from .stiffness import StiffnessParams

AXIS_NAMES = ("tau_r", "tau_p", "tau_y", "f_x", "f_y", "f_z")

# Minimum peak-to-peak excitation per axis (rad resp. m).
DEFAULT_MIN_EXCITATION = 1e-5


@dataclass(frozen=True)
class SysIdSample:
    """One static measurement: relative pose and the held wrench (in T)."""

    relative_pose: RigidTransform
    wrench: SpatialForce


@dataclass
class SysIdReport:
    """Estimates with residuals; unidentifiable axes carry NaN estimates."""

    k_tau: np.ndarray  # (3,) estimates, NaN where unidentifiable
    k_f: np.ndarray  # (3,)
    residual_rms: np.ndarray  # (6,) in axis order AXIS_NAMES
    bootstrap_std: np.ndarray  # (6,)
    unidentifiable: list = field(default_factory=list)  # axis names

    @property
    def stiffness(self) -> StiffnessParams:
        if self.unidentifiable:
            raise ValueError(f"unidentifiable axes: {self.unidentifiable}")
        return StiffnessParams(self.k_tau, self.k_f)

    def to_dict(self) -> dict:
        return {
            "k_tau": [None if np.isnan(v) else v for v in self.k_tau],
            "k_f": [None if np.isnan(v) else v for v in self.k_f],
            "residual_rms": list(self.residual_rms),
            "bootstrap_std": list(self.bootstrap_std),
            "unidentifiable": list(self.unidentifiable),
        }


def _design_arrays(samples: list[SysIdSample]) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis regressors (pose coordinates) and responses (gimbal wrench)."""
    n = len(samples)
    coords = np.empty((n, 6))
    responses = np.empty((n, 6))
    for i, s in enumerate(samples):
        theta = rotation_to_rpy(s.relative_pose.rotation)
        coords[i, :3] = theta.vector
        coords[i, 3:] = s.relative_pose.translation
        n_mat = gimbal_matrix(theta)
        responses[i, :3] = np.linalg.solve(n_mat.T, s.wrench.torque)
        responses[i, 3:] = s.wrench.force
    return coords, responses


def _axis_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least squares y = k x through the origin; returns (k, residual rms)."""
    denom = float(x @ x)
    if denom == 0.0:
        return float("nan"), float("nan")
    k = float(x @ y) / denom
    resid = y - k * x
    return k, float(np.sqrt(np.mean(resid**2)))


def identify_stiffness(
    samples: list[SysIdSample],
    min_excitation: float = DEFAULT_MIN_EXCITATION,
    bootstrap: int = 200,
    seed: int = 0,
) -> SysIdReport:
    """Fit all six stiffness parameters; flag poorly excited axes.

    Axes whose peak-to-peak pose excitation is below `min_excitation` are
    reported as unidentifiable rather than fit. Sample order and
    duplication do not affect the estimates (uniform weighting).
    """
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    coords, responses = _design_arrays(samples)

    estimates = np.full(6, np.nan)
    resid_rms = np.full(6, np.nan)
    boot_std = np.full(6, np.nan)
    unidentifiable = []
    rng = np.random.default_rng(seed)
    n = len(samples)
    for a in range(6):
        x, y = coords[:, a], responses[:, a]
        if float(x.max() - x.min()) < min_excitation:
            unidentifiable.append(AXIS_NAMES[a])
            continue
        estimates[a], resid_rms[a] = _axis_fit(x, y)
        if bootstrap > 0:
            ks = np.empty(bootstrap)
            for b in range(bootstrap):
                idx = rng.integers(0, n, size=n)
                ks[b], _ = _axis_fit(x[idx], y[idx])
            boot_std[a] = float(np.nanstd(ks))
    return SysIdReport(
        k_tau=estimates[:3],
        k_f=estimates[3:],
        residual_rms=resid_rms,
        bootstrap_std=boot_std,
        unidentifiable=unidentifiable,
    )


def generate_excitation(
    axes: list[int],
    amplitude: float | list[float],
    count: int,
    mixed: bool = True,
) -> list[RigidTransform]:
    """Deterministic per-axis ramps plus a few mixed-axis poses.

    Axis indices follow (roll, pitch, yaw, x, y, z). Amplitudes are rad
    for rotational axes, m for translational ones.
    """
    amp = np.zeros(6)
    if np.isscalar(amplitude):
        for a in axes:
            amp[a] = amplitude
    else:
        for a, v in zip(axes, amplitude):
            amp[a] = v
    poses = []
    for a in axes:
        for v in np.linspace(-amp[a], amp[a], count):
            q = np.zeros(6)
            q[a] = v
            poses.append(_pose_of(q))
    if mixed and len(axes) > 1:
        # Quarter-amplitude simultaneous ramp across all requested axes.
        for v in np.linspace(-0.25, 0.25, count):
            q = np.zeros(6)
            for a in axes:
                q[a] = v * amp[a]
            poses.append(_pose_of(q))
    return poses


def _pose_of(q: np.ndarray) -> RigidTransform:
    return RigidTransform(
        rpy_to_rotation(RollPitchYaw(q[0], q[1], q[2])), q[3:6], "T", "C"
    )
