"""Brute-force ground truth for the benchmark planes.

Each labeller maps parameter vectors to an integer class without any
clustering: the pendulum by its energy relative to the separatrix, the
Lorenz system by whether the trajectory settles on a fixed point, and the
Duffing oscillator by which stable branch its steady-state amplitude is
closer to.
"""
from __future__ import annotations

import numpy as np

from . import dynamics
from .dynamics import SystemSpec

CLASS_NAMES = {
    "pendulum": ("oscillation", "rotation"),
    "lorenz": ("steady", "chaotic"),
    "duffing": ("low_amplitude", "high_amplitude"),
}

CHUNK = 2000


def _free_or_fixed(spec: SystemSpec, thetas: np.ndarray, name: str) -> np.ndarray:
    for i, ax in enumerate(spec.free_axes):
        if ax.name == name:
            return thetas[:, i]
    fixed = {**spec.coefficients, **spec.initial_conditions}
    return np.full(len(thetas), float(fixed[name]))


def pendulum_labels(spec: SystemSpec, thetas) -> np.ndarray:
    """1 (rotation) where the energy reaches the separatrix level ``2 omega^2``, else 0.

    Energy is ``v0^2/2 + omega^2 (1 - cos x0)``; the test is only exact
    for the undamped pendulum.
    """
    thetas = spec.check_theta(thetas)
    x0 = _free_or_fixed(spec, thetas, "x0")
    v0 = _free_or_fixed(spec, thetas, "v0")
    omega = _free_or_fixed(spec, thetas, "omega")
    return (dynamics.pendulum_energy(x0, v0, omega) >= 2.0 * omega**2).astype(int)


def lorenz_labels(spec: SystemSpec, thetas, ratio: float = 1e-3) -> np.ndarray:
    """1 (chaotic) unless every channel's last-quarter variance is below ``ratio`` of the total."""
    thetas = spec.check_theta(thetas)
    out = np.empty(len(thetas), dtype=int)
    for start in range(0, len(thetas), CHUNK):
        values, _ = dynamics.simulate_batch(spec, thetas[start:start + CHUNK])
        out[start:start + CHUNK] = ~dynamics.converged_to_fixed_point(values, ratio)
    return out


def duffing_threshold(sigma: float, coefficients) -> tuple[float, int | None]:
    """Amplitude threshold at ``sigma`` and the forced label when only one branch exists."""
    branches = dynamics.duffing_stable_branches(sigma, coefficients)
    if len(branches) == 2:
        return 0.5 * (branches["low"] + branches["high"]), None
    return float("nan"), int("high" in branches)


def duffing_labels(spec: SystemSpec, thetas) -> np.ndarray:
    """1 (high amplitude) where the long-run amplitude exceeds the branch midpoint."""
    thetas = spec.check_theta(thetas)
    sigma = _free_or_fixed(spec, thetas, "sigma")
    thresholds = [duffing_threshold(s, spec.coefficients | {"sigma": s}) for s in sigma]
    out = np.empty(len(thetas), dtype=int)
    pending = []
    for i, (thr, forced) in enumerate(thresholds):
        if forced is None:
            pending.append(i)
        else:
            out[i] = forced
    pending = np.array(pending, dtype=int)
    for start in range(0, len(pending), CHUNK):
        idx = pending[start:start + CHUNK]
        amps = dynamics.duffing_amplitudes(spec, thetas[idx])
        out[idx] = amps > np.array([thresholds[i][0] for i in idx])
    return out


LABELLERS = {"pendulum": pendulum_labels, "lorenz": lorenz_labels, "duffing": duffing_labels}


def oracle_labels(spec: SystemSpec, thetas) -> np.ndarray:
    if spec.kind not in LABELLERS:
        raise ValueError(f"no oracle for system {spec.kind!r}")
    return LABELLERS[spec.kind](spec, thetas)


def grid_axes(spec: SystemSpec, resolution: int) -> list[np.ndarray]:
    return [np.linspace(ax.lower, ax.upper, resolution) for ax in spec.free_axes]


def grid_points(axes) -> np.ndarray:
    """All nodes of the grid, first axis varying fastest."""
    mesh = np.meshgrid(*axes, indexing="xy") if len(axes) == 2 else np.meshgrid(*axes, indexing="ij")
    if len(axes) == 2:
        return np.column_stack([mesh[0].ravel(), mesh[1].ravel()])
    return np.column_stack([m.ravel(order="F") for m in mesh])


def oracle_grid(spec: SystemSpec, resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """Label an ``R x R`` grid over a 2-D box. Returns ``(points, labels)``."""
    if spec.dim != 2:
        raise ValueError("oracle grids need a two-dimensional parameter space")
    points = grid_points(grid_axes(spec, resolution))
    return points, oracle_labels(spec, points)
