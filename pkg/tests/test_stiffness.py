import math

import numpy as np
import pytest

from conftest import random_rpy, random_stiffness
from seed6d import (
    HybridSpec,
    OutOfRangeError,
    RollPitchYaw,
    RotationMode,
    SpatialForce,
    StiffnessParams,
    gimbal_matrix,
    hybrid_orientation_1t2a,
    hybrid_orientation_2t1a,
    hybrid_position,
    stiffness_forward,
    stiffness_inverse,
    stiffness_jacobian_det,
)

PARAMS = StiffnessParams([2.0, 3.0, 4.0], [100.0, 100.0, 100.0])


def test_forward_undeformed():
    w = stiffness_forward(RollPitchYaw(0, 0, 0), np.zeros(3), PARAMS)
    assert np.allclose(w.vector, 0.0)


def test_forward_translational_spring():
    w = stiffness_forward(RollPitchYaw(0, 0, 0), [0.01, 0, 0], PARAMS)
    assert w.force == pytest.approx([1.0, 0, 0])
    assert w.torque == pytest.approx([0, 0, 0])


def test_forward_torque_independent_evaluation():
    # tau = N(theta)^T K theta with N written out longhand here.
    theta = RollPitchYaw(0.1, 0.2, 0.3)
    sec_p, tan_p = 1 / math.cos(0.2), math.tan(0.2)
    cw, sw = math.cos(0.3), math.sin(0.3)
    n = np.array([[cw * sec_p, sw * sec_p, 0], [-sw, cw, 0], [cw * tan_p, sw * tan_p, 1]])
    expected = n.T @ (np.array([2.0, 3.0, 4.0]) * theta.vector)
    w = stiffness_forward(theta, np.zeros(3), PARAMS)
    assert np.allclose(w.torque, expected, atol=1e-14)


def test_inverse_zero_wrench():
    theta, x = stiffness_inverse(SpatialForce.zero(), PARAMS)
    assert theta.vector == pytest.approx([0, 0, 0])
    assert x == pytest.approx([0, 0, 0])


def test_inverse_pure_yaw_torque():
    params = StiffnessParams([1.0, 1.0, 2.0], [1.0, 1.0, 1.0])
    theta, _ = stiffness_inverse(SpatialForce([0, 0, 0.5], [0, 0, 0]), params)
    assert theta.yaw == pytest.approx(0.25)
    assert theta.roll == pytest.approx(0.0)
    assert theta.pitch == pytest.approx(0.0)


def test_round_trip_random():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        params = random_stiffness(rng)
        theta = random_rpy(rng)
        x = rng.uniform(-0.05, 0.05, 3)
        w = stiffness_forward(theta, x, params)
        theta2, x2 = stiffness_inverse(w, params)
        assert np.abs(theta2.vector - theta.vector).max() < 1e-9
        assert np.abs(x2 - x).max() < 1e-9


def _newton_inverse(wrench: SpatialForce, params: StiffnessParams) -> np.ndarray:
    """Independent oracle: Newton on the forward torque map with FD Jacobian."""
    q = np.zeros(3)
    for _ in range(100):
        tau = stiffness_forward(RollPitchYaw(*q), np.zeros(3), params).torque
        resid = tau - wrench.torque
        if np.abs(resid).max() < 1e-12:
            break
        jac = np.empty((3, 3))
        h = 1e-7
        for j in range(3):
            dq = np.zeros(3)
            dq[j] = h
            tp = stiffness_forward(RollPitchYaw(*(q + dq)), np.zeros(3), params).torque
            tm = stiffness_forward(RollPitchYaw(*(q - dq)), np.zeros(3), params).torque
            jac[:, j] = (tp - tm) / (2 * h)
        q = q - np.linalg.solve(jac, resid)
    return q


def test_inverse_against_newton_oracle():
    rng = np.random.default_rng(3)
    for _ in range(50):
        theta = random_rpy(rng, max_pitch=math.pi / 4)
        w = stiffness_forward(theta, np.zeros(3), PARAMS)
        closed = stiffness_inverse(w, PARAMS)[0].vector
        oracle = _newton_inverse(w, PARAMS)
        assert np.abs(closed - oracle).max() < 1e-7


def test_inverse_out_of_range():
    # A y-torque too large for |pitch| < pi/2 must fail loudly.
    with pytest.raises(OutOfRangeError):
        stiffness_inverse(SpatialForce([0, 10.0, 0], [0, 0, 0]), PARAMS)


def test_jacobian_det_examples():
    assert stiffness_jacobian_det(RollPitchYaw(0.5, 0, 1.0), PARAMS) == pytest.approx(24.0)
    unit = StiffnessParams([1, 1, 1], [1, 1, 1])
    assert stiffness_jacobian_det(RollPitchYaw(0, math.pi / 3, 0), unit) == pytest.approx(2.0)


def _fd_jacobian_det(theta: RollPitchYaw, params: StiffnessParams, h: float = 1e-6) -> float:
    jac = np.empty((3, 3))
    for j in range(3):
        dq = np.zeros(3)
        dq[j] = h
        tp = stiffness_forward(RollPitchYaw(*(theta.vector + dq)), np.zeros(3), params).torque
        tm = stiffness_forward(RollPitchYaw(*(theta.vector - dq)), np.zeros(3), params).torque
        jac[:, j] = (tp - tm) / (2 * h)
    return float(np.linalg.det(jac))


def test_jacobian_det_matches_finite_differences():
    rng = np.random.default_rng(9)
    for _ in range(200):
        theta = random_rpy(rng)
        params = random_stiffness(rng)
        analytic = stiffness_jacobian_det(theta, params)
        fd = _fd_jacobian_det(theta, params)
        assert analytic == pytest.approx(fd, rel=1e-4)


def test_translation_ray_linearity():
    x = np.array([0.01, -0.02, 0.005])
    f1 = stiffness_forward(RollPitchYaw(0, 0, 0), x, PARAMS).force
    f3 = stiffness_forward(RollPitchYaw(0, 0, 0), 3 * x, PARAMS).force
    assert np.allclose(f3, 3 * f1)


def test_orientation_ray_monotonicity():
    rng = np.random.default_rng(21)
    for _ in range(20):
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        alphas = np.linspace(0.05, 1.0, 12)
        norms = []
        for a in alphas:
            q = a * direction
            if abs(q[1]) >= math.pi / 3:
                break
            tau = stiffness_forward(RollPitchYaw(*q), np.zeros(3), PARAMS).torque
            norms.append(np.linalg.norm(tau))
        assert all(b > a for a, b in zip(norms, norms[1:]))


def test_hybrid_position_pure_position():
    spec_p = np.eye(3)
    spec = HybridSpec(spec_p, RotationMode.ALL_ANGLES, [0.1, 0.2, 0.3], [9, 9, 9], np.zeros(3), np.zeros(3))
    assert hybrid_position(spec, [0.1, 0.2, 0.3], [9, 9, 9], PARAMS) == pytest.approx([0.1, 0.2, 0.3])


def test_hybrid_position_pure_force():
    params = StiffnessParams([1, 1, 1], [1000.0, 1000.0, 1000.0])
    spec = HybridSpec(np.zeros((3, 3)), RotationMode.ALL_TORQUES, np.zeros(3), [0, 0, 10.0], np.zeros(3), np.zeros(3))
    assert hybrid_position(spec, np.zeros(3), [0, 0, 10.0], params) == pytest.approx([0, 0, 0.01])


def test_hybrid_position_mixed():
    params = StiffnessParams([1, 1, 1], [500.0, 500.0, 500.0])
    p = np.diag([1.0, 1.0, 0.0])
    spec = HybridSpec(p, RotationMode.ALL_TORQUES, np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))
    out = hybrid_position(spec, [0.1, 0.2, 9.0], [9.0, 9.0, 5.0], params)
    assert out == pytest.approx([0.1, 0.2, 0.01])


def test_hybrid_spec_rejects_non_projection():
    with pytest.raises(ValueError):
        HybridSpec(np.diag([1.0, 0.5, 0.0]), RotationMode.ALL_ANGLES, np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))


def test_2t1a_trivial():
    theta = hybrid_orientation_2t1a(0.0, 0.0, 0.0, PARAMS)
    assert theta.vector == pytest.approx([0, 0, 0])


def test_2t1a_zero_torques_nonzero_yaw():
    theta = hybrid_orientation_2t1a(0.0, 0.0, 0.4, PARAMS)
    assert theta.yaw == pytest.approx(0.4)
    assert theta.pitch == pytest.approx(0.0)
    assert theta.roll == pytest.approx(0.0)


def test_2t1a_forward_map_residual():
    rng = np.random.default_rng(31)
    for _ in range(100):
        tau_x, tau_y = rng.uniform(-1.0, 1.0, 2)
        yaw = rng.uniform(-0.8, 0.8)
        theta = hybrid_orientation_2t1a(tau_x, tau_y, yaw, PARAMS)
        w = stiffness_forward(theta, np.zeros(3), PARAMS)
        assert w.torque[0] == pytest.approx(tau_x, abs=1e-8)
        assert w.torque[1] == pytest.approx(tau_y, abs=1e-8)
        assert theta.yaw == pytest.approx(yaw)


def test_1t2a_direct():
    params = StiffnessParams([1, 1, 4.0], [1, 1, 1])
    theta = hybrid_orientation_1t2a(1.0, 0.1, 0.2, params)
    assert theta.vector == pytest.approx([0.1, 0.2, 0.25])
    # The bottom row of N makes tau_z = k_y * yaw exactly.
    w = stiffness_forward(theta, np.zeros(3), params)
    assert w.torque[2] == pytest.approx(1.0, abs=1e-12)


def test_stiffness_params_reject_nonpositive():
    with pytest.raises(ValueError):
        StiffnessParams([1, 0, 1], [1, 1, 1])
