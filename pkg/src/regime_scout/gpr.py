"""Gaussian-process surrogate for the regime-label field.

Zero prior mean, isotropic squared-exponential kernel on inputs rescaled
to the unit hypercube, Gaussian observation noise. Hyperparameters are
chosen by minimising the negative log marginal likelihood with a
derivative-free multi-start coordinate search in log space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import ndtr
from scipy.stats import qmc

from .errors import NotPositiveDefinite

JITTER_START = 1e-10
JITTER_MAX = 1e-4
_LOG_2PI = math.log(2.0 * math.pi)
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Hyperparameters:
    sigma_n: float
    length: float
    sigma_l: float

    def __post_init__(self):
        for name in ("sigma_n", "length", "sigma_l"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value}")

    @property
    def log(self) -> np.ndarray:
        return np.log([self.sigma_n, self.length, self.sigma_l])

    @classmethod
    def from_log(cls, v) -> "Hyperparameters":
        return cls(*(float(x) for x in np.exp(v)))

    def as_dict(self) -> dict:
        return {"sigma_n": self.sigma_n, "length": self.length, "sigma_l": self.sigma_l}


@dataclass(frozen=True)
class SearchBox:
    """Bounds for the hyperparameter search.

    ``sigma_l`` has no fixed upper bound by default; it is set from the
    spread of the targets being fitted.
    """

    sigma_n: tuple[float, float] = (1e-4, 0.5)
    length: tuple[float, float] = (0.01, 2.0)
    sigma_l: tuple[float, float | None] = (0.05, None)

    def log_bounds(self, targets) -> np.ndarray:
        targets = np.asarray(targets, dtype=float)
        lo_l, hi_l = self.sigma_l
        if hi_l is None:
            spread = float(targets.max() - targets.min()) if targets.size else 0.0
            hi_l = 3.0 * spread + lo_l
        bounds = np.array([self.sigma_n, self.length, (lo_l, hi_l)], dtype=float)
        if np.any(bounds <= 0) or np.any(bounds[:, 0] > bounds[:, 1]):
            raise ValueError(f"invalid hyperparameter box {bounds.tolist()}")
        return np.log(bounds)


def kernel(x, x2, hyper: Hyperparameters) -> float:
    d = np.asarray(x, dtype=float) - np.asarray(x2, dtype=float)
    return hyper.sigma_l**2 * math.exp(-float(d @ d) / (2.0 * hyper.length**2))


def sq_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def kernel_matrix(A, B, hyper: Hyperparameters) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    return hyper.sigma_l**2 * np.exp(-sq_distances(A, B) / (2.0 * hyper.length**2))


def _cholesky(K: np.ndarray, hyper: Hyperparameters) -> tuple[np.ndarray, float]:
    """Factor ``K + sigma_n^2 I + jitter I``, escalating jitter tenfold on failure."""
    base = K + hyper.sigma_n**2 * np.eye(len(K))
    scale = hyper.sigma_l**2
    jitter = JITTER_START
    while jitter <= JITTER_MAX * (1 + 1e-9):
        try:
            L = np.linalg.cholesky(base + jitter * scale * np.eye(len(K)))
            return L, jitter * scale
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise NotPositiveDefinite("covariance is not positive definite even with maximal jitter")


def _nlml_from_sq(hyper: Hyperparameters, sqd: np.ndarray, y: np.ndarray) -> float:
    K = hyper.sigma_l**2 * np.exp(-sqd / (2.0 * hyper.length**2))
    L, _ = _cholesky(K, hyper)
    alpha = cho_solve((L, True), y)
    return float(0.5 * y @ alpha + np.log(np.diag(L)).sum() + 0.5 * len(y) * _LOG_2PI)


def nlml(hyper: Hyperparameters, inputs, targets) -> float:
    """Negative log marginal likelihood of ``targets`` at unit-cube ``inputs``."""
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    return _nlml_from_sq(hyper, sq_distances(X, X), np.asarray(targets, dtype=float))


def _golden_section(f, lo, hi, tol):
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _local_search(objective, x0, bounds, tol=4e-3, max_cycles=8):
    x = np.array(x0, dtype=float)
    fx = objective(x)
    width = (bounds[:, 1] - bounds[:, 0]) / 2.0
    for _ in range(max_cycles):
        before = fx
        for i in range(len(x)):
            if bounds[i, 1] - bounds[i, 0] <= 0:
                continue
            lo = max(bounds[i, 0], x[i] - width[i])
            hi = min(bounds[i, 1], x[i] + width[i])

            def along(v, i=i):
                trial = x.copy()
                trial[i] = v
                return objective(trial)

            v, fv = _golden_section(along, lo, hi, tol * (bounds[i, 1] - bounds[i, 0]))
            if fv < fx:
                x[i], fx = v, fv
        width = width / 2.0
        if before - fx < 1e-7 * (1.0 + abs(fx)):
            break
    return x, fx


def fit(inputs, targets, search_box: SearchBox | None = None, n_starts: int = 8, seed: int = 0,
        warm_start: Hyperparameters | None = None) -> Hyperparameters:
    """Minimise :func:`nlml` over the log-space box from ``n_starts`` Sobol starts.

    ``warm_start`` is appended as one extra start. Ties go to the lowest
    start index.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float)
    if len(y) < 2:
        raise ValueError("fitting hyperparameters needs at least two training points")
    bounds = (search_box or SearchBox()).log_bounds(y)
    sqd = sq_distances(X, X)

    def objective(v):
        try:
            return _nlml_from_sq(Hyperparameters.from_log(v), sqd, y)
        except NotPositiveDefinite:
            return math.inf

    sampler = qmc.Sobol(d=3, scramble=True, seed=seed)
    # a degenerate interval (e.g. constant targets pin sigma_l) just pins that coordinate
    starts = bounds[:, 0] + sampler.random(n_starts) * (bounds[:, 1] - bounds[:, 0]) if n_starts \
        else np.empty((0, 3))
    if warm_start is not None:
        starts = np.vstack([starts, np.clip(warm_start.log, bounds[:, 0], bounds[:, 1])])
    best_x, best_f = None, math.inf
    for start in starts:
        x, fx = _local_search(objective, start, bounds)
        if fx < best_f:
            best_x, best_f = x, fx
    if best_x is None:
        raise NotPositiveDefinite("every hyperparameter start failed to factor")
    return Hyperparameters.from_log(best_x)


@dataclass(frozen=True)
class Posterior:
    mean: float
    std: float


class GPModel:
    """A conditioned GP. Query points are given in original parameter units."""

    def __init__(self, thetas, targets, hyper: Hyperparameters, lower, upper):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.inputs = self.to_unit(thetas)
        self.targets = np.asarray(targets, dtype=float)
        if len(self.inputs) != len(self.targets) or len(self.targets) < 1:
            raise ValueError("need matching, non-empty inputs and targets")
        self.hyper = hyper
        K = kernel_matrix(self.inputs, self.inputs, hyper)
        self.chol, self.jitter = _cholesky(K, hyper)
        self.alpha = cho_solve((self.chol, True), self.targets)

    def to_unit(self, thetas) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        return (thetas - self.lower) / (self.upper - self.lower)

    def predict_many(self, thetas) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and standard deviation at each row of ``thetas``."""
        U = self.to_unit(thetas)
        Ks = kernel_matrix(U, self.inputs, self.hyper)
        mean = Ks @ self.alpha
        v = solve_triangular(self.chol, Ks.T, lower=True)
        var = self.hyper.sigma_l**2 - np.einsum("ij,ij->j", v, v)
        return mean, np.sqrt(np.clip(var, 0.0, None))

    def nlml(self) -> float:
        return float(0.5 * self.targets @ self.alpha + np.log(np.diag(self.chol)).sum()
                     + 0.5 * len(self.targets) * _LOG_2PI)


def predict(model: GPModel, theta) -> Posterior:
    mean, std = model.predict_many(np.asarray(theta, dtype=float).reshape(1, -1))
    return Posterior(float(mean[0]), float(std[0]))


def expected_improvement_array(mean, std, beta_max: float, zeta: float) -> np.ndarray:
    """Expected improvement over ``beta_max + zeta``, elementwise; zero where ``std`` is zero."""
    mu = np.asarray(mean, dtype=float)
    sd = np.asarray(std, dtype=float)
    gain = mu - beta_max - zeta
    positive = sd > 0
    safe = np.where(positive, sd, 1.0)
    z = gain / safe
    pdf = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    ei = np.where(positive, gain * ndtr(z) + safe * pdf, 0.0)
    # the two terms cancel deep in the lower tail; the exact value is >= 0
    return np.maximum(ei, 0.0)


def expected_improvement(post: Posterior, beta_max: float, zeta: float) -> float:
    return float(expected_improvement_array(post.mean, post.std, beta_max, zeta))
