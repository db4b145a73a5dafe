"""Synthetic stereo bubble-sensor frame generator and corpus files.

Two membranes squeeze a cylindrical tool along the gripper y axis. The
contact patch is modeled as a sticking region anchored to tool-fixed
points on the tool surface: a flat-topped indentation translating rigidly
with its anchor, with rounded corner rolloff and Gaussian smoothing for
membrane tension. Yaw advances the anchors with a shear-lag factor < 1,
reproducing the documented yaw underestimation; x tracking degrades
naturally because the elongated patch is truncated by the camera window.

IR speckle texture is advected rigidly: translated with the patch center
and rotated in-plane by the true pitch about the patch axis.

Frames are persisted as 16-bit little-endian depth PGMs (micrometers),
8-bit IR PGMs, and a JSON sidecar with intrinsics, extrinsics and the
ground-truth pose.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .estimator import CameraIntrinsics, SensorFrame
from .se3 import RigidTransform, RollPitchYaw, rotation_to_rpy, rpy_to_rotation

DEPTH_SCALE = 1e-6  # stored depth unit: micrometers
IR_SCALE = 255.0


@dataclass(frozen=True)
class BubbleRigConfig:
    """Geometry of the synthetic stereo rig and the grasped tool."""

    intrinsics: CameraIntrinsics = field(
        default_factory=lambda: CameraIntrinsics(160.0, 160.0, 79.5, 59.5, 120, 160)
    )
    camera_offset: float = 0.040  # cameras at y = -+ camera_offset, m
    membrane_rest_depth: float = 0.038  # rest plane distance from each camera, m
    tool_radius: float = 0.010  # m; anchors sit at y = -+ radius on the tool
    plateau_x: float = 2.2  # flat half-width along the tool axis, in radii
    plateau_z: float = 0.55  # flat half-width across the axis, in radii
    corner_radius: float = 0.15  # rolloff radius, in radii
    smoothing_sigma: float = 4.0  # px, membrane tension blur
    yaw_shear_lag: float = 0.85  # fraction of yaw the sticking patch follows
    texture_sigma: float = 2.0  # px, speckle correlation length

    @property
    def rest_surface_y(self) -> float:
        # Left membrane rest plane at -rest_surface_y... left is negative.
        return self.camera_offset - self.membrane_rest_depth

    def extrinsics_left(self) -> RigidTransform:
        # Columns are the camera axes in G: x_c = +x, y_c = -z, z_c = +y
        # (looks toward +y).
        rot = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])
        return RigidTransform(rot, np.array([0.0, -self.camera_offset, 0.0]), "G", "L")

    def extrinsics_right(self) -> RigidTransform:
        # x_c = -x, y_c = -z, z_c = -y (looks toward -y).
        rot = np.array([[-1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, -1.0, 0.0]])
        return RigidTransform(rot, np.array([0.0, self.camera_offset, 0.0]), "G", "R")


def _membrane_grid(rig: BubbleRigConfig) -> tuple[np.ndarray, np.ndarray]:
    """Gripper-frame (x, z) lateral coordinates of the rest-plane pixels."""
    intr = rig.intrinsics
    u = np.arange(intr.width)
    v = np.arange(intr.height)
    x = (u - intr.cx) / intr.fx * rig.membrane_rest_depth
    z = -(v - intr.cy) / intr.fy * rig.membrane_rest_depth
    return np.meshgrid(x, z)  # (xx, zz), both (H, W); zz varies along rows


def _lagged_rotation(rotation: np.ndarray, lag: float) -> np.ndarray:
    rpy = rotation_to_rpy(rotation)
    return rpy_to_rotation(RollPitchYaw(rpy.roll, rpy.pitch, lag * rpy.yaw))


def _anchors(pose: RigidTransform, rig: BubbleRigConfig) -> tuple[np.ndarray, np.ndarray]:
    rot = _lagged_rotation(pose.rotation, rig.yaw_shear_lag)
    a_l = pose.translation + rot @ np.array([0.0, -rig.tool_radius, 0.0])
    a_r = pose.translation + rot @ np.array([0.0, rig.tool_radius, 0.0])
    return a_l, a_r


def _tool_axis_in_plane(pose: RigidTransform, rig: BubbleRigConfig) -> np.ndarray:
    """Unit (x, z) direction of the tool axis projected on the membrane."""
    axis = _lagged_rotation(pose.rotation, rig.yaw_shear_lag) @ np.array([1.0, 0.0, 0.0])
    v = np.array([axis[0], axis[2]])
    n = np.linalg.norm(v)
    return v / n if n > 1e-9 else np.array([1.0, 0.0])


def _deflection_field(
    center_xz: np.ndarray,
    axis_xz: np.ndarray,
    amplitude: float,
    rig: BubbleRigConfig,
    xx: np.ndarray,
    zz: np.ndarray,
) -> np.ndarray:
    """Flat-topped indentation with rounded corners, then tension blur."""
    if amplitude <= 0.0:
        return np.zeros_like(xx)
    rho = rig.tool_radius
    dx = xx - center_xz[0]
    dz = zz - center_xz[1]
    along = dx * axis_xz[0] + dz * axis_xz[1]
    across = -dx * axis_xz[1] + dz * axis_xz[0]
    ex = np.maximum(0.0, np.abs(along) - rig.plateau_x * rho)
    ez = np.maximum(0.0, np.abs(across) - rig.plateau_z * rho)
    defl = np.maximum(0.0, amplitude - (ex**2 + ez**2) / (2.0 * rig.corner_radius * rho))
    return ndimage.gaussian_filter(defl, rig.smoothing_sigma, mode="constant")


def _speckle(rig: BubbleRigConfig, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    intr = rig.intrinsics
    tex = ndimage.gaussian_filter(
        rng.standard_normal((intr.height, intr.width)), rig.texture_sigma
    )
    lo, hi = tex.min(), tex.max()
    return (tex - lo) / (hi - lo)


def true_pitch(pose: RigidTransform, rig: BubbleRigConfig | None = None) -> float:
    """Rotation about the patch axis not captured by the zero-pitch frame."""
    rot = pose.rotation
    v = rot @ np.array([0.0, 1.0, 0.0])
    if abs(v[0]) < 1e-12:
        u = np.array([1.0, 0.0, 0.0])
    else:
        u = np.array([1.0, -v[0] / v[1], 0.0])
        u /= np.linalg.norm(u)
    r_cp = np.column_stack([u, v, np.cross(u, v)])
    residual = r_cp.T @ rot
    return math.atan2(residual[0, 2], residual[0, 0])


def _advect(
    texture: np.ndarray,
    shift_px: np.ndarray,
    angle: float,
    center_px: np.ndarray,
) -> np.ndarray:
    """Rigid in-plane advection: I_k(p) = I_0(R(-a)(p - c) + c - shift)."""
    h, w = texture.shape
    vv, uu = np.mgrid[0:h, 0:w].astype(float)
    du = uu - center_px[0]
    dv = vv - center_px[1]
    c, s = math.cos(angle), math.sin(angle)
    src_u = c * du + s * dv + center_px[0] - shift_px[0]
    src_v = -s * du + c * dv + center_px[1] - shift_px[1]
    return ndimage.map_coordinates(texture, [src_v, src_u], order=1, mode="nearest")


def render_synthetic(
    pose: RigidTransform,
    rig: BubbleRigConfig | None = None,
    seed: int = 1234,
) -> SensorFrame:
    """Render a stereo frame for the tool pose G->C (G coincides with T)."""
    rig = rig or BubbleRigConfig()
    intr = rig.intrinsics
    xx, zz = _membrane_grid(rig)
    a_l, a_r = _anchors(pose, rig)
    axis_xz = _tool_axis_in_plane(pose, rig)

    rest_y = rig.rest_surface_y  # right rest plane at +rest_y, left at -rest_y
    amp_l = -rest_y - a_l[1]  # penetration of the left anchor past its rest plane
    amp_r = a_r[1] - rest_y
    # Image x equals gripper x for the left camera, mirrored for the right.
    axis_r = np.array([-axis_xz[0], axis_xz[1]])
    defl_l = _deflection_field(np.array([a_l[0], a_l[2]]), axis_xz, amp_l, rig, xx, zz)
    defl_r = _deflection_field(np.array([-a_r[0], a_r[2]]), axis_r, amp_r, rig, xx, zz)

    depth0 = np.full((intr.height, intr.width), rig.membrane_rest_depth)
    depth_l = depth0 - defl_l
    depth_r = depth0 - defl_r

    tex_l = _speckle(rig, seed)
    tex_r = _speckle(rig, seed + 1)

    # IR advection: patch-center translation plus in-plane pitch rotation.
    # A non-contacting membrane keeps its baseline texture bit-for-bit.
    pitch = true_pitch(pose)
    center_ref = np.array([intr.cx, intr.cy])
    scale = intr.fx / rig.membrane_rest_depth
    shift_l = np.array([a_l[0] * scale, -a_l[2] * scale])  # (du, dv), left cam
    shift_r = np.array([-a_r[0] * scale, -a_r[2] * scale])
    ir_l = _advect(tex_l, shift_l, pitch, center_ref) if amp_l > 0.0 else tex_l
    ir_r = _advect(tex_r, shift_r, -pitch, center_ref) if amp_r > 0.0 else tex_r

    return SensorFrame(
        depth_left=depth_l,
        depth_right=depth_r,
        ir_left=ir_l,
        ir_right=ir_r,
        depth0_left=depth0,
        depth0_right=depth0.copy(),
        ir0_left=tex_l,
        intrinsics=intr,
        x_gl=rig.extrinsics_left(),
        x_gr=rig.extrinsics_right(),
    )


def calibrate_curl_gain(
    rig: BubbleRigConfig | None = None,
    sweep: np.ndarray | None = None,
    seed: int = 1234,
    crop: int = 0,
    flow_kwargs: dict | None = None,
) -> float:
    """Least-squares fit of true pitch against the raw mean flow curl."""
    from .estimator import crop_center, estimate_flow, estimate_pitch

    rig = rig or BubbleRigConfig()
    if sweep is None:
        sweep = np.linspace(-math.radians(12.0), math.radians(12.0), 9)
    flow_kwargs = flow_kwargs or {}
    reference = render_synthetic(RigidTransform.identity("G", "C"), rig, seed)
    curls, angles = [], []
    for angle in sweep:
        if abs(angle) < 1e-12:
            continue
        pose = RigidTransform(
            rpy_to_rotation(RollPitchYaw(0.0, angle, 0.0)), np.zeros(3), "G", "C"
        )
        frame = render_synthetic(pose, rig, seed)
        flow = estimate_flow(
            crop_center(reference.ir0_left, crop),
            crop_center(frame.ir_left, crop),
            **flow_kwargs,
        )
        curls.append(estimate_pitch(flow, k_curl=1.0))
        angles.append(angle)
    curls = np.asarray(curls)
    angles = np.asarray(angles)
    return float(curls @ angles / (curls @ curls))


# --- corpus persistence ----------------------------------------------------


def _write_pgm(path: Path, data: np.ndarray, maxval: int) -> None:
    with open(path, "wb") as fh:
        fh.write(f"P5\n{data.shape[1]} {data.shape[0]}\n{maxval}\n".encode())
        if maxval > 255:
            fh.write(data.astype("<u2").tobytes())
        else:
            fh.write(data.astype(np.uint8).tobytes())


def _read_pgm(path: Path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"P5":
            raise ValueError(f"{path}: not a binary PGM")
        dims = fh.readline().split()
        width, height = int(dims[0]), int(dims[1])
        maxval = int(fh.readline())
        dtype = "<u2" if maxval > 255 else np.uint8
        data = np.frombuffer(fh.read(), dtype=dtype).reshape(height, width)
    return data


def _pose_to_dict(pose: RigidTransform) -> dict:
    rpy = rotation_to_rpy(pose.rotation)
    return {
        "translation": list(pose.translation),
        "rpy": [rpy.roll, rpy.pitch, rpy.yaw],
    }


def _pose_from_dict(d: dict, parent: str, child: str) -> RigidTransform:
    return RigidTransform(
        rpy_to_rotation(RollPitchYaw(*d["rpy"])),
        np.asarray(d["translation"], dtype=float),
        parent,
        child,
    )


def save_frame(
    directory: Path | str,
    name: str,
    frame: SensorFrame,
    ground_truth: RigidTransform | None = None,
    rig: BubbleRigConfig | None = None,
) -> None:
    """Persist one frame: depth/IR PGMs plus a JSON sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    images = {
        "depth_left": frame.depth_left,
        "depth_right": frame.depth_right,
        "depth0_left": frame.depth0_left,
        "depth0_right": frame.depth0_right,
    }
    for key, img in images.items():
        _write_pgm(
            directory / f"{name}_{key}.pgm",
            np.round(img / DEPTH_SCALE).astype(np.int64),
            65535,
        )
    for key, img in {
        "ir_left": frame.ir_left,
        "ir_right": frame.ir_right,
        "ir0_left": frame.ir0_left,
    }.items():
        _write_pgm(
            directory / f"{name}_{key}.pgm",
            np.round(np.clip(img, 0.0, 1.0) * IR_SCALE).astype(np.int64),
            255,
        )
    meta = {
        "intrinsics": frame.intrinsics.to_dict(),
        "x_gl": _pose_to_dict(frame.x_gl),
        "x_gr": _pose_to_dict(frame.x_gr),
        "depth_scale": DEPTH_SCALE,
    }
    if ground_truth is not None:
        meta["ground_truth"] = _pose_to_dict(ground_truth)
    with open(directory / f"{name}_meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_frame(
    directory: Path | str, name: str
) -> tuple[SensorFrame, RigidTransform | None]:
    """Inverse of :func:`save_frame`; returns the frame and ground truth."""
    directory = Path(directory)
    with open(directory / f"{name}_meta.json") as fh:
        meta = json.load(fh)
    intr = CameraIntrinsics.from_dict(meta["intrinsics"])

    def depth(key):
        return _read_pgm(directory / f"{name}_{key}.pgm").astype(float) * meta["depth_scale"]

    def ir(key):
        return _read_pgm(directory / f"{name}_{key}.pgm").astype(float) / IR_SCALE

    frame = SensorFrame(
        depth_left=depth("depth_left"),
        depth_right=depth("depth_right"),
        ir_left=ir("ir_left"),
        ir_right=ir("ir_right"),
        depth0_left=depth("depth0_left"),
        depth0_right=depth("depth0_right"),
        ir0_left=ir("ir0_left"),
        intrinsics=intr,
        x_gl=_pose_from_dict(meta["x_gl"], "G", "L"),
        x_gr=_pose_from_dict(meta["x_gr"], "G", "R"),
    )
    gt = None
    if "ground_truth" in meta:
        gt = _pose_from_dict(meta["ground_truth"], "G", "C")
    return frame, gt
