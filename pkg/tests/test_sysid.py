import numpy as np
import pytest

from seed6d import (
    RigidTransform,
    SpatialForce,
    StiffnessParams,
    SysIdSample,
    generate_excitation,
    identify_stiffness,
    stiffness_forward,
    rotation_to_rpy,
)

TRUE = StiffnessParams([2.0, 2.5, 3.0], [300.0, 350.0, 400.0])


def _samples_from_poses(poses, params=TRUE, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    samples = []
    for pose in poses:
        theta = rotation_to_rpy(pose.rotation)
        w = stiffness_forward(theta, pose.translation, params)
        vec = w.vector * (1.0 + noise * rng.standard_normal(6))
        samples.append(SysIdSample(pose, SpatialForce(vec[:3], vec[3:], w.frame)))
    return samples


def test_noiseless_recovery_exact():
    poses = generate_excitation([0, 1, 2, 3, 4, 5], [0.3, 0.3, 0.3, 0.02, 0.02, 0.02], 20)
    report = identify_stiffness(_samples_from_poses(poses))
    assert not report.unidentifiable
    est = np.concatenate([report.k_tau, report.k_f])
    truth = np.concatenate([TRUE.k_tau, TRUE.k_f])
    assert np.abs(est / truth - 1.0).max() < 1e-3
    assert np.nanmax(report.residual_rms) < 1e-10


def test_partial_excitation_flags_unidentifiable():
    poses = generate_excitation([3], 0.02, 15)
    report = identify_stiffness(_samples_from_poses(poses))
    assert report.k_f[0] == pytest.approx(300.0)
    assert set(report.unidentifiable) == {"tau_r", "tau_p", "tau_y", "f_y", "f_z"}
    assert np.isnan(report.k_tau).all()
    with pytest.raises(ValueError):
        report.stiffness


def test_noisy_recovery_with_bootstrap():
    poses = generate_excitation([0, 1, 2, 3, 4, 5], [0.3, 0.3, 0.3, 0.02, 0.02, 0.02], 20)
    report = identify_stiffness(_samples_from_poses(poses, noise=0.05, seed=2), seed=7)
    est = np.concatenate([report.k_tau, report.k_f])
    truth = np.concatenate([TRUE.k_tau, TRUE.k_f])
    rel = np.abs(est / truth - 1.0)
    assert rel.max() < 0.02
    std = report.bootstrap_std
    assert np.all(std > 0.0)
    # Bootstrap spread should roughly bracket the realized error.
    rel_std = std / truth
    assert np.all(rel.max() < 6 * rel_std.max())


def test_order_and_duplication_invariance():
    poses = generate_excitation([0, 3], [0.3, 0.02], 12)
    samples = _samples_from_poses(poses)
    a = identify_stiffness(samples, bootstrap=0)
    b = identify_stiffness(samples[::-1], bootstrap=0)
    c = identify_stiffness(samples + samples, bootstrap=0)
    assert a.k_tau[0] == pytest.approx(b.k_tau[0], rel=1e-12)
    assert a.k_tau[0] == pytest.approx(c.k_tau[0], rel=1e-12)
    assert a.k_f[0] == pytest.approx(b.k_f[0], rel=1e-12)


def test_generate_excitation_zero_amplitude_identities():
    poses = generate_excitation([0], 0.0, 5)
    for pose in poses:
        assert np.allclose(pose.rotation, np.eye(3))
        assert np.allclose(pose.translation, 0.0)


def test_generate_excitation_single_axis_ramp():
    poses = generate_excitation([0], 0.3, 10)
    rolls = [rotation_to_rpy(p.rotation).roll for p in poses]
    assert rolls == pytest.approx(list(np.linspace(-0.3, 0.3, 10)))
    for p in poses:
        assert rotation_to_rpy(p.rotation).pitch == pytest.approx(0.0)
        assert np.allclose(p.translation, 0.0)


def test_generate_excitation_mixed_block():
    poses = generate_excitation([0, 3], [0.3, 0.02], 10)
    assert len(poses) == 30  # two axis ramps plus one mixed ramp
    mixed = poses[-1]
    assert rotation_to_rpy(mixed.rotation).roll == pytest.approx(0.25 * 0.3)
    assert mixed.translation[0] == pytest.approx(0.25 * 0.02)


def test_minimum_sample_count():
    poses = generate_excitation([3], 0.02, 2)
    with pytest.raises(ValueError):
        identify_stiffness(_samples_from_poses(poses)[:1])
