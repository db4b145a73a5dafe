"""Scenario configs and runners: contact tasks, sysid, estimator sweeps.

Configs are strict JSON: unknown keys are rejected so typos fail loudly.
Contact scenarios run the quasi-static plant under one of three modes:

  closed-loop  hybrid force/pose control from the measured relative pose
  open-loop    nominal trajectory, no feedback (press depth pre-tuned)
  welded       rigid tool attachment, same nominal trajectory

An optional plane-tilt perturbation models an unlevelled table: the
realized gripper pose is the command rotated about a world x-axis pivot,
so a wipe along y accumulates both a roll error and a height error the
controller did not plan for.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .controller import ControllerConfig, hybrid_control_step
from .errors import ConfigError, Seed6dError
from .estimator import EstimatorCalibration, calibrate_reference, estimate_relative_pose
from .plant import EnvironmentModel, Plant, PlantState, ToolModel
from .se3 import RigidTransform, RollPitchYaw, rotation_to_rpy, rpy_to_rotation
from .stiffness import HybridSpec, RotationMode, StiffnessParams, stiffness_forward
from .synthetic import (
    BubbleRigConfig,
    calibrate_curl_gain,
    render_synthetic,
    save_frame,
    true_pitch,
)
from .sysid import SysIdSample, generate_excitation, identify_stiffness

MODES = ("closed-loop", "open-loop", "welded")

_AXIS_INDEX = {"roll": 0, "pitch": 1, "yaw": 2, "x": 3, "y": 4, "z": 5}


def _check_keys(d: dict, allowed: set, context: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")


def _require(d: dict, key: str, context: str):
    if key not in d:
        raise ConfigError(f"{context}: missing required key {key!r}")
    return d[key]


@dataclass(frozen=True)
class Setpoint:
    time: float
    f_z: float  # commanded normal force, N


@dataclass(frozen=True)
class ContactScenario:
    """One contact task: tool, environment, trajectory, controller, mode."""

    name: str
    mode: str
    tool: ToolModel
    environment: EnvironmentModel
    stiffness_true: StiffnessParams
    stiffness_estimate: StiffnessParams
    controller: ControllerConfig
    duration: float
    setpoints: tuple  # of Setpoint, sorted by time
    wipe_span: float = 0.0  # total y travel, m (0 = stationary press)
    press_depth: float = 0.0  # open-loop/welded press below touch height, m
    tilt_deg: float = 0.0
    repeatability_sigma: float = 0.0
    seed: int = 0
    settle_fraction: float = 0.3  # head of each setpoint hold excluded from metrics

    def force_setpoint(self, t: float) -> float:
        f = self.setpoints[0].f_z
        for sp in self.setpoints:
            if t >= sp.time:
                f = sp.f_z
        return f


@dataclass(frozen=True)
class SysIdScenario:
    name: str
    stiffness_true: StiffnessParams
    axes: tuple  # of int
    amplitude: tuple  # per-axis, rad / m
    count: int
    noise: float = 0.0  # multiplicative wrench noise sigma
    seed: int = 0


@dataclass(frozen=True)
class SweepSpec:
    axis: str  # roll | pitch | yaw | x | y | z
    amplitude: float  # rad or m
    count: int


@dataclass(frozen=True)
class EstimatorScenario:
    name: str
    rig: BubbleRigConfig
    sweeps: tuple  # of SweepSpec
    calibration_overrides: dict = field(default_factory=dict)
    seed: int = 1234


# --- config parsing --------------------------------------------------------


def load_config(path: Path | str):
    """Parse a scenario JSON into the matching scenario dataclass."""
    path = Path(path)
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    kind = _require(raw, "type", str(path))
    if kind == "contact":
        return _parse_contact(raw, str(path))
    if kind == "sysid":
        return _parse_sysid(raw, str(path))
    if kind == "estimator-eval":
        return _parse_estimator(raw, str(path))
    raise ConfigError(f"{path}: unknown scenario type {kind!r}")


def _parse_stiffness(d: dict, context: str) -> StiffnessParams:
    _check_keys(d, {"k_tau", "k_f"}, context)
    try:
        return StiffnessParams(
            np.asarray(_require(d, "k_tau", context), dtype=float),
            np.asarray(_require(d, "k_f", context), dtype=float),
        )
    except ValueError as exc:
        raise ConfigError(f"{context}: {exc}")


def _parse_contact(raw: dict, context: str) -> ContactScenario:
    _check_keys(
        raw,
        {
            "type", "name", "mode", "tool", "environment", "stiffness_true",
            "stiffness_estimate", "controller", "duration", "force_setpoints",
            "wipe_span", "press_depth", "tilt_deg", "repeatability_sigma",
            "seed", "settle_fraction",
        },
        context,
    )
    mode = _require(raw, "mode", context)
    if mode not in MODES:
        raise ConfigError(f"{context}: mode must be one of {MODES}, got {mode!r}")

    tool_d = _require(raw, "tool", context)
    _check_keys(tool_d, {"contact_points", "mass", "com", "name"}, f"{context}.tool")
    tool = ToolModel.from_dict(tool_d)

    env_d = raw.get("environment", {})
    _check_keys(
        env_d, {"plane_height", "contact_stiffness", "gravity"}, f"{context}.environment"
    )
    env = EnvironmentModel.from_dict(env_d)

    k_true = _parse_stiffness(_require(raw, "stiffness_true", context), f"{context}.stiffness_true")
    k_hat_d = raw.get("stiffness_estimate")
    k_hat = k_true if k_hat_d is None else _parse_stiffness(k_hat_d, f"{context}.stiffness_estimate")

    ctrl_d = raw.get("controller", {})
    _check_keys(
        ctrl_d,
        {"dt", "max_step_translation", "max_step_rotation_deg", "horizon"},
        f"{context}.controller",
    )
    controller = ControllerConfig(
        stiffness_estimate=k_hat,
        dt=float(ctrl_d.get("dt", 0.004)),
        max_step_translation=float(ctrl_d.get("max_step_translation", 0.002)),
        max_step_rotation=math.radians(float(ctrl_d.get("max_step_rotation_deg", 0.5))),
        horizon=float(ctrl_d.get("horizon", 10.0)),
    )

    setpoints = []
    for i, sp in enumerate(_require(raw, "force_setpoints", context)):
        _check_keys(sp, {"time", "f_z"}, f"{context}.force_setpoints[{i}]")
        setpoints.append(Setpoint(float(sp["time"]), float(sp["f_z"])))
    if not setpoints:
        raise ConfigError(f"{context}: need at least one force setpoint")
    setpoints.sort(key=lambda s: s.time)

    return ContactScenario(
        name=raw.get("name", "contact"),
        mode=mode,
        tool=tool,
        environment=env,
        stiffness_true=k_true,
        stiffness_estimate=k_hat,
        controller=controller,
        duration=float(_require(raw, "duration", context)),
        setpoints=tuple(setpoints),
        wipe_span=float(raw.get("wipe_span", 0.0)),
        press_depth=float(raw.get("press_depth", 0.0)),
        tilt_deg=float(raw.get("tilt_deg", 0.0)),
        repeatability_sigma=float(raw.get("repeatability_sigma", 0.0)),
        seed=int(raw.get("seed", 0)),
        settle_fraction=float(raw.get("settle_fraction", 0.3)),
    )


def _parse_sysid(raw: dict, context: str) -> SysIdScenario:
    _check_keys(
        raw,
        {"type", "name", "stiffness_true", "axes", "amplitude", "count", "noise", "seed"},
        context,
    )
    axis_names = _require(raw, "axes", context)
    axes = []
    for a in axis_names:
        if a not in _AXIS_INDEX:
            raise ConfigError(f"{context}: unknown axis {a!r}")
        axes.append(_AXIS_INDEX[a])
    amp = raw.get("amplitude", 0.2)
    if np.isscalar(amp):
        amp = [float(amp)] * len(axes)
    if len(amp) != len(axes):
        raise ConfigError(f"{context}: amplitude list must match axes")
    return SysIdScenario(
        name=raw.get("name", "sysid"),
        stiffness_true=_parse_stiffness(
            _require(raw, "stiffness_true", context), f"{context}.stiffness_true"
        ),
        axes=tuple(axes),
        amplitude=tuple(float(v) for v in amp),
        count=int(raw.get("count", 20)),
        noise=float(raw.get("noise", 0.0)),
        seed=int(raw.get("seed", 0)),
    )


def _parse_estimator(raw: dict, context: str) -> EstimatorScenario:
    _check_keys(raw, {"type", "name", "rig", "sweeps", "calibration", "seed"}, context)
    rig_d = raw.get("rig", {})
    _check_keys(
        rig_d,
        {"camera_offset", "membrane_rest_depth", "tool_radius", "smoothing_sigma", "yaw_shear_lag"},
        f"{context}.rig",
    )
    rig = BubbleRigConfig(**{k: float(v) for k, v in rig_d.items()})
    cal_d = raw.get("calibration", {})
    _check_keys(
        cal_d,
        {
            "patch_threshold", "patch_kernel", "patch_min_pixels",
            "flow_stride", "flow_window", "flow_search_radius", "flow_crop",
        },
        f"{context}.calibration",
    )
    sweeps = []
    for i, sw in enumerate(_require(raw, "sweeps", context)):
        _check_keys(sw, {"axis", "amplitude", "amplitude_deg", "count"}, f"{context}.sweeps[{i}]")
        axis = _require(sw, "axis", f"{context}.sweeps[{i}]")
        if axis not in _AXIS_INDEX:
            raise ConfigError(f"{context}: unknown sweep axis {axis!r}")
        if "amplitude_deg" in sw:
            amp = math.radians(float(sw["amplitude_deg"]))
        else:
            amp = float(_require(sw, "amplitude", f"{context}.sweeps[{i}]"))
        sweeps.append(SweepSpec(axis, amp, int(sw.get("count", 10))))
    return EstimatorScenario(
        name=raw.get("name", "estimator-eval"),
        rig=rig,
        sweeps=tuple(sweeps),
        calibration_overrides=dict(cal_d),
        seed=int(raw.get("seed", 1234)),
    )


# --- contact scenario runner -----------------------------------------------

TRACE_FIELDS = (
    ["time"]
    + [f"cmd_{a}" for a in ("roll", "pitch", "yaw", "x", "y", "z")]
    + [f"rel_{a}" for a in ("roll", "pitch", "yaw", "x", "y", "z")]
    + [f"fd_{a}" for a in ("tau_x", "tau_y", "tau_z", "f_x", "f_y", "f_z")]
    + [f"bw_{a}" for a in ("tau_x", "tau_y", "tau_z", "f_x", "f_y", "f_z")]
    + ["F_z", "tau_x"]
)


def trace_header(n_contacts: int) -> list:
    return TRACE_FIELDS + [f"lambda_{i}" for i in range(n_contacts)]


def _tilt_transform(scenario: ContactScenario) -> RigidTransform:
    """Rotation about the world x-axis through the plane-height pivot."""
    alpha = math.radians(scenario.tilt_deg)
    if alpha == 0.0:
        return RigidTransform.identity("W", "W")
    rot = rpy_to_rotation(RollPitchYaw(alpha, 0.0, 0.0))
    pivot = np.array([0.0, 0.0, scenario.environment.plane_height])
    return RigidTransform(rot, pivot - rot @ pivot, "W", "W")


def _touch_height(scenario: ContactScenario) -> float:
    """Gripper z putting the lowest contact point exactly on the plane."""
    lowest = float(scenario.tool.contact_points[:, 2].min())
    return scenario.environment.plane_height - lowest


def _nominal_xy(scenario: ContactScenario, t: float) -> tuple:
    # Wipe along x: perpendicular to both the blade span (y) and the
    # plane-tilt axis (x rotation -> height varies with y).
    if scenario.wipe_span == 0.0 or scenario.duration == 0.0:
        return 0.0, 0.0
    x = -0.5 * scenario.wipe_span + scenario.wipe_span * (t / scenario.duration)
    return x, 0.0


def _nominal_command(scenario: ContactScenario, t: float) -> RigidTransform:
    x, y = _nominal_xy(scenario, t)
    z = _touch_height(scenario) - scenario.press_depth
    return RigidTransform(np.eye(3), np.array([x, y, z]), "W", "T")


def _hybrid_spec(scenario: ContactScenario, t: float) -> HybridSpec:
    x, y = _nominal_xy(scenario, t)
    return HybridSpec(
        p_select=np.diag([1.0, 1.0, 0.0]),
        rotation_mode=RotationMode.TWO_TORQUES_ONE_ANGLE,
        position_target=np.array([x, y, 0.0]),
        force_target=np.array([0.0, 0.0, scenario.force_setpoint(t)]),
        torque_target=np.zeros(3),
        angle_target=np.zeros(3),
    )


def _trace_row(
    t: float,
    cmd: RigidTransform,
    state: PlantState,
    scenario: ContactScenario,
) -> list:
    rel = state.relative_pose
    rel_rpy = rotation_to_rpy(rel.rotation)
    f_d = scenario.force_setpoint(t)
    fd_T = cmd.rotation.T @ np.array([0.0, 0.0, f_d])
    if scenario.mode == "welded":
        bw = np.zeros(6)
    else:
        bw = stiffness_forward(
            rel_rpy, rel.translation, scenario.stiffness_true
        ).vector
    cmd_rpy = rotation_to_rpy(cmd.rotation)
    return (
        [t]
        + list(cmd_rpy.vector) + list(cmd.translation)
        + list(rel_rpy.vector) + list(rel.translation)
        + [0.0, 0.0, 0.0] + list(fd_T)
        + list(bw)
        + [state.contact.f_z, state.contact.tau_x]
        + list(state.contact.normal_forces)
    )


def run_contact_scenario(scenario: ContactScenario) -> tuple:
    """Run one contact scenario; returns (rows, summary).

    Rows follow `trace_header` order. On a simulation error the partial
    rows are returned inside the raised error (`.rows`) so the CLI can
    flush a truncated trace.
    """
    plant = Plant(
        scenario.tool,
        scenario.environment,
        scenario.stiffness_true,
        welded=scenario.mode == "welded",
        repeatability_sigma=scenario.repeatability_sigma,
        seed=scenario.seed,
    )
    tilt = _tilt_transform(scenario)
    dt = scenario.controller.dt
    n_steps = int(round(scenario.duration / dt))

    cmd = _nominal_command(scenario, 0.0)
    rows = []
    state = None
    try:
        for i in range(n_steps + 1):
            t = i * dt
            if scenario.mode == "closed-loop":
                if state is not None:
                    y = plant.observe_relative_pose(state)
                    cmd = hybrid_control_step(y, cmd, _hybrid_spec(scenario, t), scenario.controller)
            else:
                cmd = _nominal_command(scenario, t)
            realized_input = tilt @ cmd
            if state is None:
                state = plant.initial_state(realized_input, time=t)
            else:
                state = plant.step(state, realized_input, dt)
            rows.append(_trace_row(t, cmd, state, scenario))
    except Seed6dError as exc:
        exc.rows = rows
        exc.step_index = len(rows)
        raise
    return rows, summarize_trace(rows, scenario)


def summarize_trace(rows: list, scenario: ContactScenario) -> dict:
    """Steady-state force errors per setpoint, torque stats, convergence."""
    arr = np.asarray(rows, dtype=float)
    t = arr[:, 0]
    f_z = arr[:, len(TRACE_FIELDS) - 2]
    tau_x = arr[:, len(TRACE_FIELDS) - 1]

    boundaries = [sp.time for sp in scenario.setpoints] + [scenario.duration + scenario.controller.dt]
    per_setpoint = []
    for k, sp in enumerate(scenario.setpoints):
        t0, t1 = boundaries[k], boundaries[k + 1]
        window = (t >= t0 + scenario.settle_fraction * (t1 - t0)) & (t < t1)
        if not window.any():
            continue
        achieved = float(f_z[window].mean())
        err = abs(achieved - sp.f_z) / sp.f_z if sp.f_z != 0.0 else abs(achieved)
        per_setpoint.append(
            {
                "time": sp.time,
                "commanded_f_z": sp.f_z,
                "achieved_f_z": achieved,
                "relative_error": err,
            }
        )

    settle = t >= scenario.settle_fraction * scenario.duration
    f_d0 = scenario.setpoints[0].f_z
    conv_time = None
    if f_d0 != 0.0:
        within = np.nonzero(np.abs(f_z - f_d0) < 0.05 * abs(f_d0))[0]
        if within.size:
            conv_time = float(t[within[0]])
    return {
        "name": scenario.name,
        "mode": scenario.mode,
        "setpoints": per_setpoint,
        "mean_abs_tau_x": float(np.abs(tau_x[settle]).mean()),
        "max_abs_tau_x": float(np.abs(tau_x[settle]).max()),
        "convergence_time": conv_time,
        "steps": len(rows),
        "truncated": False,
    }


def write_trace(path: Path | str, rows: list, n_contacts: int, truncated_note: str | None = None) -> None:
    """CSV trace: header row + %.9g values; optional truncation marker."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(trace_header(n_contacts)) + "\n")
        for row in rows:
            fh.write(",".join("%.9g" % v for v in row) + "\n")
        if truncated_note is not None:
            fh.write(f"# truncated: {truncated_note}\n")


# --- sysid runner ----------------------------------------------------------


def run_sysid_scenario(scenario: SysIdScenario) -> tuple:
    """Generate excitation, synthesize wrenches, identify; returns (samples, report)."""
    poses = generate_excitation(list(scenario.axes), list(scenario.amplitude), scenario.count)
    rng = np.random.default_rng(scenario.seed)
    samples = []
    for pose in poses:
        theta = rotation_to_rpy(pose.rotation)
        wrench = stiffness_forward(theta, pose.translation, scenario.stiffness_true)
        if scenario.noise > 0.0:
            factor = 1.0 + scenario.noise * rng.standard_normal(6)
            vec = wrench.vector * factor
            wrench = type(wrench)(vec[:3], vec[3:], wrench.frame)
        samples.append(SysIdSample(pose, wrench))
    report = identify_stiffness(samples, seed=scenario.seed)
    return samples, report


# --- estimator evaluation runner -------------------------------------------


def _sweep_pose(axis: str, value: float) -> RigidTransform:
    q = np.zeros(6)
    q[_AXIS_INDEX[axis]] = value
    return RigidTransform(
        rpy_to_rotation(RollPitchYaw(q[0], q[1], q[2])), q[3:6], "G", "C"
    )


def build_calibration(scenario: EstimatorScenario) -> EstimatorCalibration:
    """Render the reference frame and calibrate the full pipeline."""
    overrides = dict(scenario.calibration_overrides)
    flow_kwargs = {
        "stride": int(overrides.get("flow_stride", 8)),
        "window": int(overrides.get("flow_window", 15)),
        "search_radius": int(overrides.get("flow_search_radius", 12)),
    }
    crop = int(overrides.get("flow_crop", 46))
    k_curl = calibrate_curl_gain(scenario.rig, seed=scenario.seed, crop=crop, flow_kwargs=flow_kwargs)
    reference = render_synthetic(RigidTransform.identity("G", "C"), scenario.rig, scenario.seed)
    return calibrate_reference(
        reference,
        k_curl,
        patch_threshold=float(overrides.get("patch_threshold", 1e-3)),
        patch_kernel=int(overrides.get("patch_kernel", 5)),
        patch_min_pixels=int(overrides.get("patch_min_pixels", 20)),
        flow_stride=flow_kwargs["stride"],
        flow_window=flow_kwargs["window"],
        flow_search_radius=flow_kwargs["search_radius"],
        flow_crop=crop,
    )


def sweep_values(spec: SweepSpec) -> np.ndarray:
    return np.linspace(-spec.amplitude, spec.amplitude, spec.count)


def run_estimator_eval(scenario: EstimatorScenario) -> dict:
    """Per-axis error tables over the configured pose sweeps.

    Returns {"sweeps": [...], "rows": [...]}; each row holds the sweep
    axis, the true 6-vector and the estimated 6-vector (rpy + xyz).
    """
    cal = build_calibration(scenario)
    reference = render_synthetic(RigidTransform.identity("G", "C"), scenario.rig, scenario.seed)

    rows = []
    tables = []
    for spec in scenario.sweeps:
        idx = _AXIS_INDEX[spec.axis]
        errors, truths, estimates = [], [], []
        for value in sweep_values(spec):
            pose = _sweep_pose(spec.axis, value)
            frame = render_synthetic(pose, scenario.rig, scenario.seed)
            est = estimate_relative_pose(frame, reference, cal)
            est_rpy = rotation_to_rpy(est.rotation)
            est_q = np.concatenate([est_rpy.vector, est.translation])
            true_q = np.zeros(6)
            true_q[idx] = value
            if spec.axis == "pitch":
                # Ground truth for the flow channel is the residual
                # rotation about the zero-pitch frame's y axis.
                true_q[1] = true_pitch(pose)
            rows.append({"axis": spec.axis, "true": list(true_q), "estimate": list(est_q)})
            errors.append(est_q[idx] - true_q[idx])
            truths.append(true_q[idx])
            estimates.append(est_q[idx])
        errors = np.asarray(errors)
        truths = np.asarray(truths)
        nonzero = np.abs(truths) > 1e-12
        signed_bias = float((errors[nonzero] * np.sign(truths[nonzero])).mean()) if nonzero.any() else 0.0
        tables.append(
            {
                "axis": spec.axis,
                "amplitude": spec.amplitude,
                "count": spec.count,
                "rms": float(np.sqrt(np.mean(errors**2))),
                "mean_error": float(errors.mean()),
                # Negative when the estimator underestimates the sweep axis.
                "signed_bias": signed_bias,
            }
        )
    return {"sweeps": tables, "rows": rows, "k_curl": cal.k_curl}


def generate_corpus(scenario: EstimatorScenario, out_dir: Path | str) -> int:
    """Render every sweep frame to disk; returns the frame count."""
    out_dir = Path(out_dir)
    count = 0
    for spec in scenario.sweeps:
        for j, value in enumerate(sweep_values(spec)):
            pose = _sweep_pose(spec.axis, value)
            frame = render_synthetic(pose, scenario.rig, scenario.seed)
            save_frame(out_dir, f"{spec.axis}_{j:03d}", frame, ground_truth=pose, rig=scenario.rig)
            count += 1
    return count


def write_estimator_report(path: Path | str, report: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
