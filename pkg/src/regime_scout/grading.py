"""Scoring a finished run against brute-force oracle labels.

Learned regime labels are arbitrary integers, so each label is first
mapped to the oracle class held by most of the sampled points that carry
it. Accuracy is then measured on a grid, leaving out a thin band around a
reference boundary where a grid-resolution classifier cannot be expected
to be right.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import oracles
from .dynamics import SystemSpec
from .explorer import RunReport


def majority_mapping(labels, classes) -> dict[int, int]:
    """Oracle class per learned label by majority vote; ties go to the smaller class."""
    labels = np.asarray(labels)
    classes = np.asarray(classes)
    mapping = {}
    for lab in np.unique(labels[labels >= 0]):
        votes = np.bincount(classes[labels == lab])
        mapping[int(lab)] = int(np.argmax(votes))
    return mapping


def apply_mapping(predicted, mapping: dict[int, int]) -> np.ndarray:
    """Map learned labels to classes; a label no sample carries takes its nearest neighbour's class."""
    known = np.array(sorted(mapping))
    predicted = np.asarray(predicted)
    nearest = known[np.abs(predicted[:, None] - known[None, :]).argmin(axis=1)]
    return np.array([mapping[int(k)] for k in nearest], dtype=int)


def to_unit(points, spec: SystemSpec) -> np.ndarray:
    return (np.asarray(points, dtype=float) - spec.lower) / (spec.upper - spec.lower)


def distance_to_segments(points, polylines) -> np.ndarray:
    """Euclidean distance from each point to the nearest segment of any polyline."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    segs = [(p[:-1], p[1:]) for p in polylines if len(p) >= 2]
    singles = [p for p in polylines if len(p) == 1]
    best = np.full(len(points), np.inf)
    if segs:
        a = np.vstack([s[0] for s in segs])
        b = np.vstack([s[1] for s in segs])
        ab = b - a
        length2 = np.einsum("ij,ij->i", ab, ab)
        safe = np.where(length2 > 0, length2, 1.0)
        for start in range(0, len(points), 512):
            p = points[start:start + 512]
            ap = p[:, None, :] - a[None, :, :]
            s = np.clip(np.einsum("pij,ij->pi", ap, ab) / safe, 0.0, 1.0)
            closest = a[None] + s[..., None] * ab[None]
            d = np.sqrt(((p[:, None, :] - closest) ** 2).sum(axis=2))
            best[start:start + 512] = d.min(axis=1)
    for p in singles:
        best = np.minimum(best, np.sqrt(((points - p[0]) ** 2).sum(axis=1)))
    return best


def pendulum_separatrix_curves(spec: SystemSpec, n: int = 4001) -> list[np.ndarray]:
    """Upper and lower separatrix branches ``v = +-2 omega |cos(x/2)|`` across the box.

    Assumes the free axes are ``(x0, v0)`` in that order.
    """
    omega = float(spec.coefficients.get("omega", 1.0))
    xs = np.linspace(spec.lower[0], spec.upper[0], n)
    v = 2.0 * omega * np.abs(np.cos(xs / 2.0))
    return [np.column_stack([xs, v]), np.column_stack([xs, -v])]


@dataclass
class Score:
    accuracy: float
    kept: int
    total: int
    mapping: dict

    def __str__(self) -> str:
        return f"{self.accuracy:.4f} on {self.kept}/{self.total} grid points (mapping {self.mapping})"


def score(report: RunReport, points, truth, reference_curves, band: float = 0.05,
          sample_truth=None) -> Score:
    """Accuracy of the learned classifier on ``points`` outside a band around ``reference_curves``.

    ``reference_curves`` are polylines in parameter units; the band width is
    measured in unit-box coordinates. ``sample_truth`` gives the oracle class
    of every sample in the report and defaults to the oracle itself.
    """
    spec = report.config.system
    if sample_truth is None:
        ok = report.labels >= 0
        sample_truth = np.zeros(len(report.labels), dtype=int)
        sample_truth[ok] = oracles.oracle_labels(spec, report.thetas[ok])
    mapping = majority_mapping(report.labels, sample_truth)
    predicted = apply_mapping(report.classify(points), mapping)
    unit_curves = [to_unit(c, spec) for c in reference_curves]
    keep = distance_to_segments(to_unit(points, spec), unit_curves) > band if unit_curves else \
        np.ones(len(points), dtype=bool)
    truth = np.asarray(truth)
    accuracy = float(np.mean(predicted[keep] == truth[keep])) if keep.any() else float("nan")
    return Score(accuracy, int(keep.sum()), len(points), mapping)


def learned_half_contour(report: RunReport) -> list[np.ndarray]:
    return list(report.boundaries.get(0.5, []))
