"""Benchmark dynamical systems and a fixed-step RK4 integrator.

Four systems are available: the nonlinear pendulum, the Lorenz system,
the weakly forced Duffing oscillator and a harmonic test oscillator used
for convergence checks. A :class:`SystemSpec` binds every coefficient and
initial condition either to a fixed value or to a free axis of the search
box; a parameter vector supplies the free values in axis order.

Everything here is a pure function of its arguments. Trajectories are
integrated in batches (one row per parameter vector) so oracle grids can
be labelled without a Python loop per point; a single :func:`simulate`
call is just a batch of one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigInvalid, NegativeDiscriminant, NonFinite

BLOWUP = 1e12


# Right-hand sides take the state as a tuple of components, each either a
# float (single run, evaluated with ``math``) or a (B,) array (batch, with
# ``numpy``); ``sin`` is the matching sine.
def _pendulum_prepare(p):
    return {"lam": p["lam"], "w2": p["omega"] ** 2}


def _pendulum_rhs(t, y, p, sin):
    x, v = y
    return v, -p["lam"] * v - p["w2"] * sin(x)


def _lorenz_rhs(t, y, p, sin):
    x, v, z = y
    return p["s"] * (v - x), x * (p["rho"] - z) - v, x * v - p["b"] * z


def _duffing_prepare(p):
    eps = p["eps"]
    return {"w": 1.0 + eps * p["sigma"], "f": eps * p["F"], "c": 2.0 * eps * p["lam"], "a": eps * p["alpha"]}


def _duffing_rhs(t, y, p, sin):
    x, v = y
    return v, p["f"] * sin(p["w"] * t) - p["c"] * v - x - p["a"] * (x * x * x)


def _harmonic_prepare(p):
    return {"w2": p["omega"] ** 2}


def _harmonic_rhs(t, y, p, sin):
    x, v = y
    return v, -p["w2"] * x


@dataclass(frozen=True)
class Model:
    coefficients: tuple[str, ...]
    initial_conditions: tuple[str, ...]
    channels: tuple[str, ...]
    observed: tuple[int, ...]
    rhs: Callable
    prepare: Callable = dict


MODELS: dict[str, Model] = {
    "pendulum": Model(("omega", "lam"), ("x0", "v0"), ("x",), (0,), _pendulum_rhs, _pendulum_prepare),
    "lorenz": Model(("s", "b", "rho"), ("x0", "y0", "z0"), ("x", "y", "z"), (0, 1, 2), _lorenz_rhs),
    "duffing": Model(("eps", "sigma", "F", "alpha", "lam"), ("x0", "v0"), ("x",), (0,), _duffing_rhs, _duffing_prepare),
    "harmonic": Model(("omega",), ("x0", "v0"), ("x",), (0,), _harmonic_rhs, _harmonic_prepare),
}


@dataclass(frozen=True)
class Axis:
    name: str
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class SystemSpec:
    """A benchmark system with its search box and integration horizon.

    ``horizon_units="forcing_periods"`` (Duffing only) measures ``t_f`` in
    periods of the forcing, so every run covers the same number of
    forcing cycles whatever the detuning. ``substeps`` RK4 steps are taken
    between consecutive output samples.
    """

    kind: str
    coefficients: Mapping[str, float]
    initial_conditions: Mapping[str, float]
    free_axes: tuple[Axis, ...]
    t_f: float
    n_t: int
    substeps: int = 1
    horizon_units: str = "time"
    _path: str = field(default="system", repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "free_axes", tuple(self.free_axes))
        object.__setattr__(self, "coefficients", dict(self.coefficients))
        object.__setattr__(self, "initial_conditions", dict(self.initial_conditions))
        p = self._path
        if self.kind not in MODELS:
            raise ConfigInvalid(f"unknown system kind {self.kind!r}", f"{p}.kind")
        model = MODELS[self.kind]
        for i, ax in enumerate(self.free_axes):
            if not (math.isfinite(ax.lower) and math.isfinite(ax.upper)) or not ax.lower < ax.upper:
                raise ConfigInvalid(
                    f"axis {ax.name!r} needs finite bounds with min < max", f"{p}.free_axes[{i}]"
                )
        names = [ax.name for ax in self.free_axes]
        everything = model.coefficients + model.initial_conditions
        for key, section in ((self.coefficients, "coefficients"), (self.initial_conditions, "ics")):
            allowed = model.coefficients if section == "coefficients" else model.initial_conditions
            for name in key:
                if name not in allowed:
                    raise ConfigInvalid(f"{self.kind} has no {name!r}", f"{p}.{section}.{name}")
        for i, name in enumerate(names):
            if name not in everything:
                raise ConfigInvalid(f"{self.kind} has no {name!r}", f"{p}.free_axes[{i}]")
        for name in everything:
            bound = (name in self.coefficients) + (name in self.initial_conditions) + names.count(name)
            if bound != 1:
                raise ConfigInvalid(f"{name!r} must be bound exactly once (found {bound})", p)
        if not (self.t_f > 0 and math.isfinite(self.t_f)):
            raise ConfigInvalid("t_f must be positive", f"{p}.t_f")
        if int(self.n_t) != self.n_t or self.n_t < 2:
            raise ConfigInvalid("n_t must be an integer >= 2", f"{p}.n_t")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ConfigInvalid("substeps must be a positive integer", f"{p}.substeps")
        if self.horizon_units not in ("time", "forcing_periods"):
            raise ConfigInvalid("horizon_units must be 'time' or 'forcing_periods'", f"{p}.horizon_units")
        if self.horizon_units == "forcing_periods" and self.kind != "duffing":
            raise ConfigInvalid("forcing_periods horizon needs a forced system", f"{p}.horizon_units")

    @property
    def model(self) -> Model:
        return MODELS[self.kind]

    @property
    def dim(self) -> int:
        return len(self.free_axes)

    @property
    def channels(self) -> tuple[str, ...]:
        return self.model.channels

    @property
    def lower(self) -> np.ndarray:
        return np.array([ax.lower for ax in self.free_axes])

    @property
    def upper(self) -> np.ndarray:
        return np.array([ax.upper for ax in self.free_axes])

    def replace(self, **changes) -> "SystemSpec":
        fields = dict(
            kind=self.kind,
            coefficients=self.coefficients,
            initial_conditions=self.initial_conditions,
            free_axes=self.free_axes,
            t_f=self.t_f,
            n_t=self.n_t,
            substeps=self.substeps,
            horizon_units=self.horizon_units,
        )
        fields.update(changes)
        return SystemSpec(**fields)

    def check_theta(self, theta) -> np.ndarray:
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        if theta.shape[1] != self.dim:
            raise ValueError(f"parameter vector has {theta.shape[1]} components, expected {self.dim}")
        outside = (theta < self.lower) | (theta > self.upper)
        if outside.any():
            row, col = np.argwhere(outside)[0]
            ax = self.free_axes[col]
            raise ValueError(
                f"{ax.name}={float(theta[row, col])!r} outside [{ax.lower}, {ax.upper}]"
            )
        return theta

    def bind(self, thetas) -> tuple[np.ndarray, dict[str, np.ndarray]]:
        """Initial states ``(B, d)`` and per-row coefficient arrays for a batch."""
        thetas = self.check_theta(thetas)
        batch = thetas.shape[0]
        free = {ax.name: thetas[:, i] for i, ax in enumerate(self.free_axes)}

        def value(name, fixed):
            if name in free:
                return free[name].astype(float)
            return np.full(batch, float(fixed[name]))

        params = {name: value(name, self.coefficients) for name in self.model.coefficients}
        y0 = np.stack(
            [value(name, self.initial_conditions) for name in self.model.initial_conditions], axis=1
        )
        return y0, params

    def horizon(self, params: Mapping[str, np.ndarray]) -> np.ndarray:
        """Termination time per batch row."""
        batch = len(next(iter(params.values())))
        if self.horizon_units == "forcing_periods":
            freq = 1.0 + params["eps"] * params["sigma"]
            if np.any(freq <= 0):
                raise ValueError("forcing frequency 1 + eps*sigma must be positive")
            return self.t_f * 2.0 * np.pi / freq
        return np.full(batch, float(self.t_f))


@dataclass(frozen=True)
class TimeSeries:
    dt: float
    channels: tuple[str, ...]
    values: np.ndarray  # (N, n_t)

    @property
    def n_t(self) -> int:
        return self.values.shape[1]

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n_t) * self.dt


def _integrate(rhs, y0, params, dt, n_t, substeps, keep_from=0):
    """Classical RK4 with ``substeps`` steps per output interval.

    ``y0`` is ``(B, d)``. Returns samples ``keep_from .. n_t-1`` as
    ``(n_keep, d, B)``. A batch of one runs on Python floats, which is
    much faster than numpy for tiny arrays.
    """
    y0 = np.asarray(y0, dtype=float)
    batch, dim = y0.shape
    out = np.empty((n_t - keep_from, dim, batch))
    if batch == 1:
        y = tuple(float(c) for c in y0[0])
        p = {k: float(np.asarray(v).reshape(-1)[0]) for k, v in params.items()}
        h = float(np.asarray(dt).reshape(-1)[0]) / substeps
        sin = math.sin

        def finite(state):
            return all(abs(c) <= BLOWUP for c in state)

        def bad_row(state):
            return 0
    else:
        y = tuple(np.array(c) for c in y0.T)
        p = params
        h = np.asarray(dt, dtype=float) / substeps
        sin = np.sin

        def finite(state):
            return all(bool((np.abs(c) <= BLOWUP).all()) for c in state)

        def bad_row(state):
            ok = np.logical_and.reduce([np.abs(c) <= BLOWUP for c in state])
            return int(np.flatnonzero(~ok)[0])

    half = 0.5 * h
    sixth = h / 6.0
    if keep_from == 0:
        out[0] = np.reshape(y, (dim, -1))
    k = 0
    try:
        for k in range(1, n_t):
            for j in range(substeps):
                # absolute step index keeps time exact instead of accumulating h
                t = ((k - 1) * substeps + j) * h
                k1 = rhs(t, y, p, sin)
                k2 = rhs(t + half, tuple(a + half * b for a, b in zip(y, k1)), p, sin)
                k3 = rhs(t + half, tuple(a + half * b for a, b in zip(y, k2)), p, sin)
                k4 = rhs(t + h, tuple(a + h * b for a, b in zip(y, k3)), p, sin)
                y = tuple(a + sixth * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
                          for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))
            if not finite(y):
                idx = bad_row(y)
                raise NonFinite(f"state left the finite range at step {k} (batch row {idx})", step=k, index=idx)
            if k >= keep_from:
                out[k - keep_from] = np.reshape(y, (dim, -1))
    except (ValueError, OverflowError) as exc:
        # math.sin(inf) and friends on the float path
        raise NonFinite(f"state left the finite range at step {k} (batch row 0)", step=k, index=0) from exc
    return out


def simulate_batch(spec: SystemSpec, thetas, keep_from: int = 0, n_t: int | None = None,
                   t_scale: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Integrate every row of ``thetas``.

    Returns ``(values, dt)`` with ``values`` of shape ``(B, N, n_keep)``
    holding only the observed channels, and ``dt`` the per-row step.
    """
    y0, params = spec.bind(thetas)
    n_t = spec.n_t if n_t is None else n_t
    dt = spec.horizon(params) * t_scale / (n_t - 1)
    states = _integrate(spec.model.rhs, y0, spec.model.prepare(params), dt, n_t, spec.substeps, keep_from)
    observed = states[:, list(spec.model.observed), :]
    return np.ascontiguousarray(observed.transpose(2, 1, 0)), dt


def simulate(spec: SystemSpec, theta) -> TimeSeries:
    """Response of ``spec`` at one parameter vector, sampled at ``spec.n_t`` points."""
    theta = np.asarray(theta, dtype=float).reshape(1, -1)
    values, dt = simulate_batch(spec, theta)
    return TimeSeries(float(dt[0]), spec.channels, values[0])


def pendulum_separatrix(x0, omega: float = 1.0):
    """Positive branch ``omega*sqrt(2(1 - cos x0))`` of the undamped separatrix.

    This is the curve with the angle measured from the inverted position.
    For ``x'' = -omega^2 sin x`` (hanging equilibrium at 0) the separatrix
    is the same curve shifted by pi, i.e. ``pendulum_separatrix(x0 + pi)``,
    equivalently the level set ``pendulum_energy == 2 omega^2``.
    """
    return omega * np.sqrt(2.0 * (1.0 - np.cos(x0)))


def pendulum_energy(x, v, omega: float = 1.0):
    return 0.5 * np.asarray(v) ** 2 + omega**2 * (1.0 - np.cos(x))


def _duffing_coeffs(params) -> dict[str, float]:
    if isinstance(params, SystemSpec):
        return {k: float(v) for k, v in params.coefficients.items()}
    return {k: float(v) for k, v in params.items()}


def duffing_frc(a: float, params) -> tuple[float, float]:
    """Detuning values ``(sigma_minus, sigma_plus)`` at which amplitude ``a`` is a steady state.

    Raises :class:`NegativeDiscriminant` when ``a`` lies outside the
    frequency-response curve.
    """
    c = _duffing_coeffs(params)
    if a <= 0:
        raise ValueError("amplitude must be positive")
    disc = c["F"] ** 2 / (4.0 * a * a) - c["lam"] ** 2
    if disc < 0:
        raise NegativeDiscriminant(f"amplitude {a} is beyond the response curve peak")
    backbone = 3.0 * c["alpha"] / 8.0 * a * a
    root = math.sqrt(disc)
    return backbone - root, backbone + root


def duffing_steady_amplitudes(sigma: float, params) -> np.ndarray:
    """All positive steady-state amplitudes at detuning ``sigma``, ascending.

    Squaring the response curve with ``p = a**2`` gives the cubic
    ``c^2 p^3 - 2 c sigma p^2 + (sigma^2 + lam^2) p - F^2/4 = 0`` with
    ``c = 3 alpha / 8``.
    """
    c = _duffing_coeffs(params)
    k = 3.0 * c["alpha"] / 8.0
    roots = np.roots([k * k, -2.0 * k * sigma, sigma**2 + c["lam"] ** 2, -(c["F"] ** 2) / 4.0])
    real = roots[np.abs(roots.imag) <= 1e-9 * np.maximum(1.0, np.abs(roots))].real
    return np.sort(np.sqrt(real[real > 0]))


def duffing_stable_branches(sigma: float, params) -> dict[str, float]:
    """Stable steady-state amplitudes keyed by branch, ``'high'`` and/or ``'low'``.

    With three coexisting solutions the middle one is the unstable
    saddle. A lone solution is assigned by which sign of the response
    curve it satisfies: the minus branch is the resonant (high) one.
    """
    c = _duffing_coeffs(params)
    amps = duffing_steady_amplitudes(sigma, c)
    if len(amps) >= 3:
        return {"low": float(amps[0]), "high": float(amps[-1])}
    if len(amps) == 0:
        return {}
    a = float(amps[-1])
    on_minus = sigma < 3.0 * c["alpha"] / 8.0 * a * a
    return {"high": a} if on_minus else {"low": a}


def duffing_amplitude_oracle(spec: SystemSpec, theta) -> float:
    """Steady-state amplitude: max |x| over the last quarter of a run four times as long."""
    return float(duffing_amplitudes(spec, np.asarray(theta, dtype=float).reshape(1, -1))[0])


def duffing_amplitudes(spec: SystemSpec, thetas) -> np.ndarray:
    n_long = 4 * (spec.n_t - 1) + 1
    keep = n_long - n_long // 4
    values, _ = simulate_batch(spec, thetas, keep_from=keep, n_t=n_long, t_scale=4.0)
    return np.abs(values[:, 0, :]).max(axis=1)


def converged_to_fixed_point(values: np.ndarray, ratio: float = 1e-3) -> np.ndarray | bool:
    """Steady-state test: every channel's last-quarter variance is below ``ratio`` of its full variance.

    ``values`` is ``(N, n_t)`` or a batch ``(B, N, n_t)``.
    """
    values = np.asarray(values)
    tail = values[..., values.shape[-1] - values.shape[-1] // 4:]
    ok = tail.var(axis=-1) <= ratio * values.var(axis=-1)
    return ok.all(axis=-1)


def harmonic_spec(t_f: float, n_t: int, substeps: int = 1) -> SystemSpec:
    """Unit-frequency harmonic oscillator with ``x0`` free in ``[-2, 2]``; exact solution ``x0*cos(t)``."""
    return SystemSpec(
        kind="harmonic",
        coefficients={"omega": 1.0},
        initial_conditions={"v0": 0.0},
        free_axes=(Axis("x0", -2.0, 2.0),),
        t_f=t_f,
        n_t=n_t,
        substeps=substeps,
    )


def as_axes(items: Sequence) -> tuple[Axis, ...]:
    return tuple(ax if isinstance(ax, Axis) else Axis(*ax) for ax in items)
