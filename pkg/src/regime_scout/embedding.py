"""Frequency-magnitude embedding of responses and a 2-D PCA projector."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, TooShort


@dataclass(frozen=True)
class EmbeddingConfig:
    n_f: int = 1024
    transient_fraction: float = 0.5

    def __post_init__(self):
        n = int(self.n_f)
        if n != self.n_f or n < 1 or n & (n - 1):
            raise ValueError(f"n_f must be a power of two, got {self.n_f}")
        if not 0.0 <= self.transient_fraction < 1.0:
            raise ValueError("transient_fraction must lie in [0, 1)")


def _bit_reverse(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def fft(x) -> np.ndarray:
    """Radix-2 decimation-in-time DFT along the last axis.

    The length must be a power of two. Leading axes are treated as a batch.
    """
    a = np.asarray(x, dtype=complex)
    n = a.shape[-1]
    if n & (n - 1) or n == 0:
        raise ValueError(f"length {n} is not a power of two")
    lead = a.shape[:-1]
    a = a[..., _bit_reverse(n)]
    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = a.reshape(lead + (n // size, size))
        even = blocks[..., :half]
        odd = blocks[..., half:] * twiddle
        a = np.concatenate([even + odd, even - odd], axis=-1).reshape(lead + (n,))
        size *= 2
    return a


def _window(samples: np.ndarray, cfg: EmbeddingConfig) -> np.ndarray:
    n = samples.shape[-1]
    start = int(np.floor(cfg.transient_fraction * n))
    remaining = n - start
    if remaining < cfg.n_f:
        raise TooShort(f"{remaining} samples left after dropping the transient, need {cfg.n_f}")
    stride = remaining // cfg.n_f
    return samples[..., start:start + stride * cfg.n_f:stride]


def fft_magnitude(samples, cfg: EmbeddingConfig) -> np.ndarray:
    """Magnitudes of the ``n_f``-point DFT of the post-transient, decimated record.

    No normalisation is applied: response amplitude is carried straight
    into the spectrum magnitudes.
    """
    return np.abs(fft(_window(np.asarray(samples, dtype=float), cfg)))


def embed(ts, cfg: EmbeddingConfig) -> np.ndarray:
    """Concatenate per-channel magnitude spectra in channel order (length ``N * n_f``)."""
    values = ts.values if hasattr(ts, "values") else np.asarray(ts)
    return fft_magnitude(values, cfg).reshape(-1)


def embed_batch(values: np.ndarray, cfg: EmbeddingConfig) -> np.ndarray:
    """Embed a ``(B, N, n_t)`` batch of responses into ``(B, N * n_f)``."""
    values = np.asarray(values, dtype=float)
    return fft_magnitude(values, cfg).reshape(values.shape[0], -1)


@dataclass(frozen=True)
class PCAResult:
    coordinates: np.ndarray
    explained_variance: np.ndarray
    components: np.ndarray
    degenerate: bool = False


def pca_project(vectors, k: int = 2) -> PCAResult:
    """Project onto the top-``k`` eigenvectors of the sample covariance.

    Each eigenvector's first non-negligible entry is made positive, so the
    projection is reproducible. When there are fewer vectors than
    dimensions the eigenproblem is solved on the (smaller) Gram matrix;
    the nonzero spectrum is the same.
    """
    X = np.asarray(vectors, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch("expected a list of equal-length vectors")
    n, m = X.shape
    if n < 2:
        raise ValueError("PCA needs at least two vectors")
    if not 1 <= k <= min(n, m):
        raise ValueError(f"k={k} must be in [1, {min(n, m)}]")
    centred = X - X.mean(axis=0)
    if n < m:
        gram = centred @ centred.T / (n - 1)
        evals, u = np.linalg.eigh(gram)
        order = np.argsort(evals)[::-1]
        evals, u = evals[order], u[:, order]
        evals = np.clip(evals, 0.0, None)
        comps = centred.T @ u[:, :k]
        norms = np.linalg.norm(comps, axis=0)
        comps = np.divide(comps, norms, out=np.zeros_like(comps), where=norms > 0)
    else:
        cov = centred.T @ centred / (n - 1)
        evals, vecs = np.linalg.eigh(cov)
        order = np.argsort(evals)[::-1]
        evals, comps = np.clip(evals[order], 0.0, None), vecs[:, order[:k]]
    total = evals.sum()
    if total <= 0.0:
        warnings.warn("all embedding vectors are identical; PCA is degenerate", RuntimeWarning)
        return PCAResult(np.zeros((n, k)), np.zeros(k), np.zeros((m, k)), degenerate=True)
    for j in range(k):
        col = comps[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-12 * np.abs(col).max()) if col.any() else []
        if len(big) and col[big[0]] < 0:
            comps[:, j] = -col
    return PCAResult(centred @ comps, evals[:k] / total, comps)
