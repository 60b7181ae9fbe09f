"""Density-based regime discovery with insertion-stable labels.

Labels are integers ``0, 1, ...`` with :data:`NOISE` (``-1``) for points
that belong to no dense region. :func:`recluster` reruns DBSCAN on the
whole dataset and then maps the fresh clusters back onto the labels used
in the previous round, so a regime keeps its integer for the lifetime of
an exploration run.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch

NOISE = -1


@dataclass(frozen=True)
class ClusterParams:
    eps: float
    min_pts: int

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if int(self.min_pts) != self.min_pts or self.min_pts < 1:
            raise ValueError("min_pts must be an integer >= 1")


@dataclass
class Labeling:
    labels: np.ndarray
    merge_log: list = field(default_factory=list)
    next_label: int | None = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int)
        if self.next_label is None:
            self.next_label = int(self.labels.max()) + 1 if self.labels.size and self.labels.max() >= 0 else 0

    @property
    def regimes(self) -> list[int]:
        return sorted(set(int(v) for v in self.labels) - {NOISE})

    @property
    def n_regimes(self) -> int:
        return len(self.regimes)


def distances_to(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    diff = points - x
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def pairwise_distances(points) -> np.ndarray:
    X = np.asarray(points, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch("points must share one dimension")
    D = np.empty((len(X), len(X)))
    for i in range(len(X)):
        D[i] = distances_to(X, X[i])
    return D


def dbscan_distances(D: np.ndarray, params: ClusterParams) -> np.ndarray:
    """DBSCAN on a precomputed Euclidean distance matrix.

    Neighbourhoods are closed balls (``d <= eps``) that include the point
    itself. Core points are clustered by breadth-first expansion in index
    order; each border point joins the cluster of its lowest-index core
    neighbour.
    """
    n = len(D)
    near = D <= params.eps
    core = near.sum(axis=1) >= params.min_pts
    labels = np.full(n, NOISE, dtype=int)
    current = 0
    for i in range(n):
        if not core[i] or labels[i] != NOISE:
            continue
        labels[i] = current
        queue = deque([i])
        while queue:
            j = queue.popleft()
            for k in np.flatnonzero(near[j] & core):
                if labels[k] == NOISE:
                    labels[k] = current
                    queue.append(k)
        current += 1
    for i in np.flatnonzero(~core):
        hits = np.flatnonzero(near[i] & core)
        if len(hits):
            labels[i] = labels[hits[0]]
    return labels


def dbscan(points, params: ClusterParams) -> np.ndarray:
    try:
        X = np.asarray(points, dtype=float)
    except ValueError as exc:
        raise DimensionMismatch("points must share one dimension") from exc
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or len(X) == 0:
        raise DimensionMismatch("expected a non-empty list of equal-length vectors")
    return dbscan_distances(pairwise_distances(X), params)


def canonicalize(raw_labels) -> Labeling:
    """Relabel clusters by order of first appearance; noise stays noise."""
    raw = np.asarray(raw_labels)
    mapping: dict = {}
    out = np.full(len(raw), NOISE, dtype=int)
    for i, lab in enumerate(raw):
        if lab == NOISE or (isinstance(lab, str) and lab == "NOISE"):
            continue
        key = lab.item() if hasattr(lab, "item") else lab
        if key not in mapping:
            mapping[key] = len(mapping)
        out[i] = mapping[key]
    return Labeling(out)


def reconcile(fresh: Labeling, previous: Labeling, iteration: int = 0) -> Labeling:
    """Carry the previous round's labels over to a fresh clustering.

    Only the first ``len(previous.labels)`` points existed before. A fresh
    cluster containing old members of several previous labels keeps the
    smallest of them and the rest are logged as absorbed. When two fresh
    clusters claim the same previous label, the one holding more of its
    members keeps it. Clusters left without a label get the next integer
    never issued before.
    """
    old = previous.labels
    n_old = len(old)
    new = fresh.labels
    clusters = fresh.regimes
    overlap = {}
    for c in clusters:
        members = old[np.flatnonzero(new[:n_old] == c)]
        members = members[members != NOISE]
        labs, counts = np.unique(members, return_counts=True)
        overlap[c] = dict(zip(labs.tolist(), counts.tolist()))

    claims: dict[int, list[int]] = {}
    for c in clusters:
        if overlap[c]:
            claims.setdefault(min(overlap[c]), []).append(c)
    assigned: dict[int, int] = {}
    for lab in sorted(claims):
        contenders = sorted(claims[lab], key=lambda c: (-overlap[c][lab], c))
        assigned[contenders[0]] = lab

    taken = set(assigned.values())
    next_label = previous.next_label
    merge_log = list(previous.merge_log)
    for c in clusters:
        if c in assigned:
            continue
        spare = sorted(
            (lab for lab in overlap[c] if lab not in taken),
            key=lambda lab: (-overlap[c][lab], lab),
        )
        if spare:
            assigned[c] = spare[0]
        else:
            assigned[c] = next_label
            next_label += 1
        taken.add(assigned[c])

    for c in clusters:
        for lab in sorted(overlap[c]):
            if lab != assigned[c] and lab not in taken:
                merge_log.append((iteration, lab, assigned[c]))
                taken.add(lab)

    out = np.full(len(new), NOISE, dtype=int)
    for c in clusters:
        out[new == c] = assigned[c]
    return Labeling(out, merge_log, max(next_label, previous.next_label))


def recluster(embeddings=None, params: ClusterParams | None = None, previous: Labeling | None = None,
              iteration: int = 0, distances: np.ndarray | None = None) -> Labeling:
    """Cluster the full dataset and reconcile with ``previous`` when given."""
    if distances is None:
        distances = pairwise_distances(embeddings)
    fresh = canonicalize(dbscan_distances(distances, params))
    if previous is None:
        return fresh
    return reconcile(fresh, previous, iteration)
