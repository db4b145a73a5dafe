"""Visuotactile relative-pose estimation from stereo bubble-sensor frames.

Pipeline: depth background subtraction extracts one contact patch per
camera; the two patch centroids anchor a zero-pitch frame; the in-plane
rotation left over (pitch about the patch axis) comes from the curl of
the IR-image optical flow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import (
    DegenerateFrameError,
    DegeneratePatchesError,
    InsufficientFlowError,
    NoContactError,
)
from .se3 import RigidTransform


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    height: int
    width: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    def to_dict(self) -> dict:
        return {
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "height": self.height, "width": self.width,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraIntrinsics":
        return cls(d["fx"], d["fy"], d["cx"], d["cy"], d["height"], d["width"])


@dataclass(frozen=True)
class SensorFrame:
    """Paired left/right depth + IR images with their no-contact baselines.

    Depth is the camera-axis distance in meters; IR intensity is in [0, 1].
    `x_gl` / `x_gr` are the fixed camera extrinsics (gripper <- camera).
    """

    depth_left: np.ndarray
    depth_right: np.ndarray
    ir_left: np.ndarray
    ir_right: np.ndarray
    depth0_left: np.ndarray
    depth0_right: np.ndarray
    ir0_left: np.ndarray
    intrinsics: CameraIntrinsics
    x_gl: RigidTransform
    x_gr: RigidTransform

    def __post_init__(self):
        shape = (self.intrinsics.height, self.intrinsics.width)
        for name in (
            "depth_left", "depth_right", "ir_left", "ir_right",
            "depth0_left", "depth0_right", "ir0_left",
        ):
            img = np.asarray(getattr(self, name), dtype=float)
            if img.shape != shape:
                raise ValueError(f"{name} has shape {img.shape}, expected {shape}")
            object.__setattr__(self, name, img)


@dataclass(frozen=True)
class ContactPatch:
    """Binary mask with the back-projected centroid in the camera frame."""

    mask: np.ndarray
    centroid: np.ndarray  # (3,), m, camera frame
    pixel_count: int


@dataclass(frozen=True)
class FlowField:
    """Per-cell displacement (vx, vy) in pixels on a stride-s grid."""

    v: np.ndarray  # (hc, wc, 2)
    valid: np.ndarray  # (hc, wc) bool
    stride: int
    rows: np.ndarray  # grid row centers, pixels
    cols: np.ndarray


def elliptical_kernel(size: int) -> np.ndarray:
    """Binary elliptical structuring element of odd side length `size`."""
    if size < 1 or size % 2 == 0:
        raise ValueError("kernel size must be odd and positive")
    r = (size - 1) / 2.0
    yy, xx = np.mgrid[0:size, 0:size]
    return ((xx - r) ** 2 + (yy - r) ** 2) <= r * r + 1e-9


def estimate_contact_patch(
    depth0: np.ndarray,
    depth_k: np.ndarray,
    intrinsics: CameraIntrinsics,
    threshold: float = 1e-3,
    kernel_size: int = 5,
    min_pixels: int = 20,
) -> ContactPatch:
    """Background subtraction -> morphological opening -> 3D centroid."""
    diff = np.asarray(depth0, dtype=float) - np.asarray(depth_k, dtype=float)
    mask = ndimage.binary_opening(diff > threshold, structure=elliptical_kernel(kernel_size))
    count = int(mask.sum())
    if count < min_pixels:
        raise NoContactError(f"contact mask has {count} pixels (< {min_pixels})")
    vv, uu = np.nonzero(mask)
    d = np.asarray(depth_k, dtype=float)[vv, uu]
    x = (uu - intrinsics.cx) / intrinsics.fx * d
    y = (vv - intrinsics.cy) / intrinsics.fy * d
    centroid = np.array([x.mean(), y.mean(), d.mean()])
    return ContactPatch(mask=mask, centroid=centroid, pixel_count=count)


def estimate_frame(p_left: np.ndarray, p_right: np.ndarray) -> RigidTransform:
    """Zero-pitch frame from the two patch centroids (gripper frame).

    Position is the patch midpoint; the y axis points left->right patch,
    the x axis has zero z component.
    """
    p_left = np.asarray(p_left, dtype=float).reshape(3)
    p_right = np.asarray(p_right, dtype=float).reshape(3)
    baseline = p_right - p_left
    norm = float(np.linalg.norm(baseline))
    if norm <= 1e-3:
        raise DegeneratePatchesError("patch centroids coincide")
    v = baseline / norm
    if abs(v[0]) < 1e-12:
        u = np.array([1.0, 0.0, 0.0])
    else:
        if abs(v[1]) < 1e-9:
            raise DegenerateFrameError("patch axis has no zero-pitch companion")
        u = np.array([1.0, -v[0] / v[1], 0.0])
        u /= np.linalg.norm(u)
    w = np.cross(u, v)
    rotation = np.column_stack([u, v, w])
    return RigidTransform(rotation, (p_left + p_right) / 2.0, "G", "C'")


def estimate_flow(
    ir0: np.ndarray,
    ir_k: np.ndarray,
    stride: int = 8,
    window: int = 15,
    search_radius: int = 6,
    texture_threshold: float = 5e-3,
) -> FlowField:
    """Block-matching flow on a stride grid with parabolic refinement.

    Matches windows of `ir0` against shifted `ir_k`; cells whose reference
    window lacks texture contrast are flagged invalid.
    """
    i0 = np.asarray(ir0, dtype=float)
    ik = np.asarray(ir_k, dtype=float)
    if i0.shape != ik.shape:
        raise ValueError("flow inputs must share a shape")
    h, w = i0.shape
    margin = window // 2 + search_radius
    rows = np.arange(margin, h - margin, stride)
    cols = np.arange(margin, w - margin, stride)
    shifts = np.arange(-search_radius, search_radius + 1)
    n_s = len(shifts)

    # SSD for every shift via box filtering, sampled on the grid.
    ssd = np.empty((n_s, n_s, len(rows), len(cols)))
    for iy, dy in enumerate(shifts):
        for ix, dx in enumerate(shifts):
            shifted = np.roll(np.roll(ik, -dy, axis=0), -dx, axis=1)
            d2 = (i0 - shifted) ** 2
            box = ndimage.uniform_filter(d2, size=window, mode="constant")
            ssd[iy, ix] = box[np.ix_(rows, cols)]

    flat = ssd.reshape(n_s * n_s, len(rows), len(cols))
    best = np.argmin(flat, axis=0)
    by, bx = np.unravel_index(best, (n_s, n_s))

    # Texture validity from the reference-window contrast.
    mean = ndimage.uniform_filter(i0, size=window, mode="constant")
    var = ndimage.uniform_filter(i0 * i0, size=window, mode="constant") - mean**2
    contrast = np.sqrt(np.clip(var, 0.0, None))[np.ix_(rows, cols)]
    valid = contrast > texture_threshold

    v = np.zeros((len(rows), len(cols), 2))
    for r in range(len(rows)):
        for c in range(len(cols)):
            iy, ix = by[r, c], bx[r, c]
            vy, vx = float(shifts[iy]), float(shifts[ix])
            # Parabolic sub-pixel refinement where the minimum is interior.
            if 0 < ix < n_s - 1:
                vx += _parabolic_offset(
                    ssd[iy, ix - 1, r, c], ssd[iy, ix, r, c], ssd[iy, ix + 1, r, c]
                )
            if 0 < iy < n_s - 1:
                vy += _parabolic_offset(
                    ssd[iy - 1, ix, r, c], ssd[iy, ix, r, c], ssd[iy + 1, ix, r, c]
                )
            v[r, c] = (vx, vy)
    v[~valid] = 0.0
    return FlowField(v=v, valid=valid, stride=stride, rows=rows, cols=cols)


def _parabolic_offset(left: float, center: float, right: float) -> float:
    denom = left - 2.0 * center + right
    if denom <= 0.0:
        return 0.0
    return float(np.clip(0.5 * (left - right) / denom, -0.5, 0.5))


def estimate_pitch(flow: FlowField, k_curl: float) -> float:
    """Mean flow curl (Sobel gradients on the grid) times the calibration."""
    if flow.valid.mean() < 0.5:
        raise InsufficientFlowError(
            f"only {flow.valid.mean():.0%} of flow cells are valid"
        )
    vx = flow.v[..., 0].copy()
    vy = flow.v[..., 1].copy()
    fill_x = vx[flow.valid].mean()
    fill_y = vy[flow.valid].mean()
    vx[~flow.valid] = fill_x
    vy[~flow.valid] = fill_y
    # Sobel responds with gain 8 per grid step; grid step is `stride` px.
    scale = 1.0 / (8.0 * flow.stride)
    dvy_dx = ndimage.sobel(vy, axis=1, mode="nearest") * scale
    dvx_dy = ndimage.sobel(vx, axis=0, mode="nearest") * scale
    curl = dvy_dx - dvx_dy
    interior = ndimage.binary_erosion(flow.valid, iterations=1)
    if not interior.any():
        raise InsufficientFlowError("no interior flow cells after erosion")
    return k_curl * float(curl[interior].mean())


@dataclass(frozen=True)
class EstimatorCalibration:
    """Fixed transforms and tuning constants for the full pipeline."""

    x_tg: RigidTransform  # T <- G, fixed at grasp initialization
    k_curl: float
    patch_threshold: float = 1e-3
    patch_kernel: int = 5
    patch_min_pixels: int = 20
    flow_stride: int = 8
    flow_window: int = 15
    flow_search_radius: int = 6
    flow_crop: int = 0  # half-size of a center crop in px; 0 = full image


def crop_center(image: np.ndarray, half_size: int) -> np.ndarray:
    """Center crop to a (2h, 2h) window; half_size <= 0 returns the input.

    Cropping bounds the flow magnitude seen by block matching (rotational
    flow grows with radius), keeping large rotations inside a small search
    radius. The curl of a rigid flow field is position-independent, so the
    pitch estimate is unaffected by the restriction.
    """
    if half_size <= 0:
        return image
    h, w = image.shape
    r0 = max(0, h // 2 - half_size)
    c0 = max(0, w // 2 - half_size)
    return image[r0 : min(h, h // 2 + half_size), c0 : min(w, w // 2 + half_size)]


def _rotation_about_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def estimate_tool_in_gripper(
    frame: SensorFrame, reference: SensorFrame, cal: EstimatorCalibration
) -> RigidTransform:
    """Tool pose in the gripper frame: patches + zero-pitch frame + flow."""
    patch_l = estimate_contact_patch(
        frame.depth0_left, frame.depth_left, frame.intrinsics,
        cal.patch_threshold, cal.patch_kernel, cal.patch_min_pixels,
    )
    patch_r = estimate_contact_patch(
        frame.depth0_right, frame.depth_right, frame.intrinsics,
        cal.patch_threshold, cal.patch_kernel, cal.patch_min_pixels,
    )
    p_l = frame.x_gl.apply(patch_l.centroid)
    p_r = frame.x_gr.apply(patch_r.centroid)
    x_gcp = estimate_frame(p_l, p_r)
    flow = estimate_flow(
        crop_center(reference.ir0_left, cal.flow_crop),
        crop_center(frame.ir_left, cal.flow_crop),
        cal.flow_stride, cal.flow_window, cal.flow_search_radius,
    )
    pitch = estimate_pitch(flow, cal.k_curl)
    rotation = x_gcp.rotation @ _rotation_about_y(pitch)
    return RigidTransform(rotation, x_gcp.translation, "G", "C")


def estimate_relative_pose(
    frame: SensorFrame, reference: SensorFrame, cal: EstimatorCalibration
) -> RigidTransform:
    """Relative pose T->C; identity when `frame` is the reference itself."""
    x_gc = estimate_tool_in_gripper(frame, reference, cal)
    out = cal.x_tg @ x_gc
    return RigidTransform(out.rotation, out.translation, "T", "C")


def calibrate_reference(
    reference: SensorFrame,
    k_curl: float,
    **patch_kwargs,
) -> EstimatorCalibration:
    """Anchor T to the estimator's own output at grasp initialization."""
    cal0 = EstimatorCalibration(
        x_tg=RigidTransform.identity("T", "G"), k_curl=k_curl, **patch_kwargs
    )
    x_gc_ref = estimate_tool_in_gripper(reference, reference, cal0)
    inv = x_gc_ref.inverse()
    return EstimatorCalibration(
        x_tg=RigidTransform(inv.rotation, inv.translation, "T", "G"),
        k_curl=k_curl,
        **patch_kwargs,
    )
