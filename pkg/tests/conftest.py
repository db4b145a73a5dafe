"""Shared helpers: random samplers and small reference simulations."""

from __future__ import annotations

import math

import numpy as np

from seed6d import RollPitchYaw, Sea1dState, StiffnessParams, sea_1d_force_step


def random_rpy(rng: np.random.Generator, max_pitch: float = math.pi / 3) -> RollPitchYaw:
    r, y = rng.uniform(-math.pi, math.pi, size=2)
    p = rng.uniform(-max_pitch, max_pitch)
    return RollPitchYaw(r, p, y)


def random_stiffness(rng: np.random.Generator) -> StiffnessParams:
    # Log-uniform diagonals in [0.1, 100].
    vals = 10.0 ** rng.uniform(-1.0, 2.0, size=6)
    return StiffnessParams(vals[:3], vals[3:])


def simulate_sea_1d(
    f_d: float,
    k: float = 100.0,
    k_p: float = 2e4,
    k_d: float = 250.0,
    mass: float = 1.0,
    k_wall: float = 1e4,
    dt: float = 1e-4,
    t_end: float = 2.0,
    x0: float = 0.02,
):
    """Forward-Euler 1D gripper mass + series spring + massless tool on a wall.

    Wall at x = 0, pressing from above (negative gripper positions deform
    the spring). Returns (times, contact_forces).
    """
    x_t = x0
    v = 0.0
    n = int(round(t_end / dt))
    times = np.empty(n)
    forces = np.empty(n)
    for i in range(n):
        # Massless tool equilibrium: free, or wall penalty vs spring.
        x_c = x_t if x_t >= 0.0 else k * x_t / (k + k_wall)
        d = x_c - x_t
        state = Sea1dState(k=k, k_p=k_p, k_d=k_d, x_gripper=x_t, x_deformation=d, v_gripper=v)
        u = sea_1d_force_step(state, f_d)
        a = (u + k * d) / mass
        v += a * dt
        x_t += v * dt
        times[i] = (i + 1) * dt
        forces[i] = k_wall * max(0.0, -x_c)
    return times, forces
