import math

import numpy as np
import pytest

from conftest import random_rpy
from seed6d import (
    GimbalLockError,
    RigidTransform,
    RollPitchYaw,
    SpatialForce,
    gimbal_matrix,
    gimbal_rates_to_angular_velocity,
    reexpress_spatial_force,
    rotation_to_rpy,
    rpy_to_rotation,
)
from seed6d.se3 import axis_angle_to_rotation, rotation_to_axis_angle, skew


def test_rpy_identity():
    assert np.allclose(rpy_to_rotation(RollPitchYaw(0, 0, 0)), np.eye(3))
    rpy = rotation_to_rpy(np.eye(3))
    assert rpy.vector == pytest.approx([0, 0, 0])


def test_rpy_pure_roll_axis_permutation():
    r = rpy_to_rotation(RollPitchYaw(math.pi / 2, 0, 0))
    assert np.allclose(r @ [0, 1, 0], [0, 0, 1], atol=1e-15)
    assert np.allclose(r @ [0, 0, 1], [0, -1, 0], atol=1e-15)


def test_rpy_pure_yaw():
    r = rpy_to_rotation(RollPitchYaw(0, 0, 0.3))
    rpy = rotation_to_rpy(r)
    assert rpy.vector == pytest.approx([0, 0, 0.3], abs=1e-12)


def test_rpy_round_trip_random():
    rng = np.random.default_rng(42)
    for _ in range(500):
        theta = random_rpy(rng)
        back = rotation_to_rpy(rpy_to_rotation(theta))
        assert np.abs(back.vector - theta.vector).max() < 1e-10


def test_rotation_to_rpy_gimbal_lock():
    with pytest.raises(GimbalLockError):
        rotation_to_rpy(rpy_to_rotation(RollPitchYaw(0.1, math.pi / 2, 0.2)))


def test_gimbal_matrix_identity_at_zero_pitch_yaw():
    assert np.allclose(gimbal_matrix(RollPitchYaw(1.2, 0, 0)), np.eye(3))


def test_gimbal_matrix_quarter_yaw():
    n = gimbal_matrix(RollPitchYaw(0, 0, math.pi / 2))
    assert np.allclose(n, [[0, 1, 0], [-1, 0, 0], [0, 0, 1]], atol=1e-15)


def test_gimbal_rates_trivial():
    assert gimbal_rates_to_angular_velocity(RollPitchYaw(0, 0, 0), [1, 0, 0]) == pytest.approx([1, 0, 0])
    theta = RollPitchYaw(0.3, -0.2, 1.1)
    assert gimbal_rates_to_angular_velocity(theta, [0, 0, 0]) == pytest.approx([0, 0, 0])


def _fd_angular_velocity(theta: RollPitchYaw, rates: np.ndarray, h: float = 1e-6) -> np.ndarray:
    # omega from Rdot R^T with central differences along the gimbal path.
    tp = RollPitchYaw(*(theta.vector + h * rates))
    tm = RollPitchYaw(*(theta.vector - h * rates))
    rdot = (rpy_to_rotation(tp) - rpy_to_rotation(tm)) / (2 * h)
    w = rdot @ rpy_to_rotation(theta).T
    return np.array([w[2, 1], w[0, 2], w[1, 0]])


def test_gimbal_rates_match_finite_differences():
    rng = np.random.default_rng(7)
    for _ in range(50):
        theta = random_rpy(rng)
        rates = rng.uniform(-1, 1, 3)
        omega = gimbal_rates_to_angular_velocity(theta, rates)
        assert np.abs(omega - _fd_angular_velocity(theta, rates)).max() < 1e-6


def test_power_balance():
    # Spatial power tau . omega equals gimbal power tau_g . theta_dot.
    rng = np.random.default_rng(123)
    for _ in range(1000):
        theta = random_rpy(rng)
        rates = rng.uniform(-2, 2, 3)
        tau_g = rng.uniform(-5, 5, 3)
        tau_spatial = gimbal_matrix(theta).T @ tau_g
        omega = gimbal_rates_to_angular_velocity(theta, rates)
        p_spatial = float(tau_spatial @ omega)
        p_gimbal = float(tau_g @ rates)
        assert p_spatial == pytest.approx(p_gimbal, rel=1e-8, abs=1e-12)


def test_reexpress_identity():
    f = SpatialForce([1, 2, 3], [4, 5, 6])
    out = reexpress_spatial_force(RigidTransform.identity(), f)
    assert np.allclose(out.vector, f.vector)


def test_reexpress_lever_arm():
    x = RigidTransform(np.eye(3), [0, 0, 1])
    out = reexpress_spatial_force(x, SpatialForce([0, 0, 0], [1, 0, 0]))
    assert out.torque == pytest.approx([0, 1, 0])
    assert out.force == pytest.approx([1, 0, 0])


def test_reexpress_invertible():
    rng = np.random.default_rng(5)
    for _ in range(100):
        x = RigidTransform(rpy_to_rotation(random_rpy(rng)), rng.uniform(-1, 1, 3))
        f = SpatialForce(rng.uniform(-5, 5, 3), rng.uniform(-5, 5, 3))
        back = reexpress_spatial_force(x.inverse(), reexpress_spatial_force(x, f))
        assert np.abs(back.vector - f.vector).max() < 1e-12


def test_compose_frame_label_mismatch():
    a = RigidTransform.identity("W", "T")
    b = RigidTransform.identity("C", "G")
    with pytest.raises(ValueError):
        a @ b
    # Matching inner labels compose and propagate outer labels.
    c = a @ RigidTransform.identity("T", "C")
    assert (c.parent, c.child) == ("W", "C")


def test_transform_apply_and_inverse():
    rng = np.random.default_rng(11)
    x = RigidTransform(rpy_to_rotation(random_rpy(rng)), rng.uniform(-1, 1, 3))
    p = rng.uniform(-1, 1, 3)
    assert np.allclose(x.inverse().apply(x.apply(p)), p, atol=1e-12)


def test_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        RigidTransform(np.eye(3) * 1.01, np.zeros(3))


def test_axis_angle_round_trip():
    rng = np.random.default_rng(17)
    for _ in range(200):
        axis = rng.standard_normal(3)
        axis /= np.linalg.norm(axis)
        w = axis * rng.uniform(0.0, 3.0)  # keep the angle below pi
        r = axis_angle_to_rotation(w)
        assert np.allclose(r.T @ r, np.eye(3), atol=1e-12)
        back = rotation_to_axis_angle(r)
        assert np.allclose(back, w, atol=1e-8)


def test_skew_matches_cross_product():
    rng = np.random.default_rng(2)
    a, b = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
    assert np.allclose(skew(a) @ b, np.cross(a, b))
