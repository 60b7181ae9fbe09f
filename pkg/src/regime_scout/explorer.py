"""Active exploration loop.

An initial random batch is simulated, embedded and clustered, a GP is
fitted to the regime labels, and then one point at a time is added where
expected improvement over the highest label seen so far is largest. The
loop stops when the GP is confident everywhere on a monitor grid, after a
fixed number of iterations, or when the sample budget runs out.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import contours, embedding, gpr
from .clustering import NOISE, ClusterParams, Labeling, distances_to, pairwise_distances, recluster
from .dynamics import SystemSpec, simulate_batch
from .embedding import EmbeddingConfig, PCAResult
from .errors import ConfigInvalid, DegenerateClustering, EmptyPool, NonFinite
from .gpr import GPModel, Hyperparameters, SearchBox

FAILED = -2


@dataclass(frozen=True)
class ExplorationConfig:
    system: SystemSpec
    embedding: EmbeddingConfig
    cluster: ClusterParams
    budget: int
    zeta_stop: float | None = None
    t_max: int | None = None
    gp_box: SearchBox = field(default_factory=SearchBox)
    zeta_ei: float = 0.01
    initial_fraction: float = 0.2
    n_candidates: int = 2048
    grid_resolution: int = 101
    seed: int = 0
    gp_n_starts: int = 8
    refit_every: int = 1

    def __post_init__(self):
        if not 0 < self.initial_fraction < 1:
            raise ConfigInvalid("must lie strictly between 0 and 1", "sampling.initial_fraction")
        if int(self.budget) != self.budget or self.budget < self.cluster.min_pts + 2:
            raise ConfigInvalid(f"must be an integer >= min_pts + 2 = {self.cluster.min_pts + 2}",
                                "sampling.budget")
        if self.zeta_stop is None and self.t_max is None:
            raise ConfigInvalid("give zeta_stop, t_max or both", "stop")
        if self.zeta_stop is not None and not (self.zeta_stop >= 0 and math.isfinite(self.zeta_stop)):
            raise ConfigInvalid("must be a finite number >= 0", "stop.zeta_stop")
        if self.t_max is not None and (int(self.t_max) != self.t_max or self.t_max < 0):
            raise ConfigInvalid("must be an integer >= 0", "stop.t_max")
        if not self.zeta_ei >= 0:
            raise ConfigInvalid("must be >= 0", "gp.zeta_ei")
        if int(self.n_candidates) != self.n_candidates or self.n_candidates < 1:
            raise ConfigInvalid("must be a positive integer", "sampling.n_candidates")
        if int(self.grid_resolution) != self.grid_resolution or self.grid_resolution < 2:
            raise ConfigInvalid("must be an integer >= 2", "sampling.grid_resolution")
        if int(self.gp_n_starts) != self.gp_n_starts or self.gp_n_starts < 0:
            raise ConfigInvalid("must be an integer >= 0", "gp.n_starts")
        if int(self.refit_every) != self.refit_every or self.refit_every < 1:
            raise ConfigInvalid("must be a positive integer", "gp.refit_every")
        n_t = self.system.n_t
        if n_t - int(math.floor(self.embedding.transient_fraction * n_t)) < self.embedding.n_f:
            raise ConfigInvalid(f"n_f = {self.embedding.n_f} needs more samples than system.n_t leaves "
                                "after the transient is dropped", "embedding.n_f")

    @property
    def n_initial(self) -> int:
        # round first so that 0.2 * 300 does not become 60.000000000000004
        return min(self.budget, max(1, math.ceil(round(self.initial_fraction * self.budget, 9))))


def initial_sample(lower, upper, n0: int, seed: int) -> np.ndarray:
    """``n0`` points uniform in the box, one per row."""
    if n0 < 1:
        raise ValueError("n0 must be at least 1")
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    rng = np.random.default_rng(seed)
    return lower + rng.random((n0, len(lower))) * (upper - lower)


def candidate_pool(lower, upper, size: int, seed: int, iteration: int) -> np.ndarray:
    rng = np.random.default_rng([seed, iteration])
    return lower + rng.random((size, len(lower))) * (upper - lower)


def _choose(model: GPModel, sampled, candidates, beta_max: float, zeta_ei: float) -> tuple[int, float]:
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    keep = np.array([tuple(c) not in sampled for c in candidates], dtype=bool)
    if not keep.any():
        raise EmptyPool("every candidate has already been sampled")
    mean, std = model.predict_many(candidates)
    ei = gpr.expected_improvement_array(mean, std, beta_max, zeta_ei)
    ei = np.where(keep, ei, -np.inf)
    best = int(np.argmax(ei))
    if ei[best] > 0:
        return best, float(ei[best])
    # nothing is expected to improve: go where the model knows least
    best = int(np.argmax(np.where(keep, std, -np.inf)))
    return best, 0.0


def select_next(model: GPModel, sampled, candidates, beta_max: float, zeta_ei: float) -> np.ndarray:
    """Candidate with the largest expected improvement, excluding exact repeats.

    Ties go to the lowest index. When every candidate scores zero the one
    with the largest posterior standard deviation is returned instead.
    """
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    index, _ = _choose(model, {tuple(np.asarray(s, dtype=float)) for s in sampled}, candidates,
                       beta_max, zeta_ei)
    return candidates[index]


def classify(model: GPModel, theta, n_regimes: int) -> int:
    mean = gpr.predict(model, theta).mean
    rounded = math.floor(abs(mean) + 0.5) * (1 if mean >= 0 else -1)
    return int(min(max(rounded, 0), max(n_regimes - 1, 0)))


def boundary_levels(top_label: int) -> list[float]:
    return [k + 0.5 for k in range(top_label)]


def contour_levels(axes, mean_grid, top_label: int) -> dict[float, list[np.ndarray]]:
    """Half-integer iso-lines of a gridded mean; ``mean_grid[j, i]`` sits at ``(axes[0][i], axes[1][j])``."""
    return {level: contours.marching_squares(axes[0], axes[1], mean_grid, level)
            for level in boundary_levels(top_label)}


def extract_boundaries(model: GPModel, axes, n_regimes: int) -> dict[float, list[np.ndarray]]:
    """Contours of the posterior mean at 0.5, 1.5, ... up to ``n_regimes - 1.5``.

    Only two-dimensional boxes produce contours; otherwise the result is
    empty.
    """
    if len(axes) != 2:
        return {}
    from .oracles import grid_points

    mean, _ = model.predict_many(grid_points(axes))
    return contour_levels(axes, mean.reshape(len(axes[1]), len(axes[0])), n_regimes - 1)


@dataclass
class IterationRecord:
    iteration: int
    theta: list
    ei: float
    label: int
    max_std: float
    n_regimes: int
    merges: list
    nlml: float | None

    def as_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "theta": self.theta,
            "ei": self.ei,
            "label": label_name(self.label),
            "max_std": self.max_std,
            "n_regimes": self.n_regimes,
            "merges": [list(m) for m in self.merges],
            "nlml": self.nlml,
        }


def label_name(label: int):
    return {NOISE: "NOISE", FAILED: "FAILED"}.get(int(label), int(label))


@dataclass
class State:
    """Everything one exploration run owns.

    ``labeling`` covers only samples that simulated successfully, in
    insertion order; ``embedded`` maps those rows back to sample indices.
    """

    config: ExplorationConfig
    thetas: np.ndarray
    iterations: list
    eis: list
    embeddings: np.ndarray
    embedded: list
    distances: np.ndarray
    labeling: Labeling
    hyper: Hyperparameters
    model: GPModel
    grid_axes: list
    grid: np.ndarray
    grid_mean: np.ndarray = None
    grid_std: np.ndarray = None
    iteration: int = 0
    log: list = field(default_factory=list)
    last_nlml: float | None = None

    @property
    def labels(self) -> np.ndarray:
        """Label per sample, with FAILED for samples whose simulation blew up."""
        out = np.full(len(self.thetas), FAILED, dtype=int)
        out[self.embedded] = self.labeling.labels
        return out

    @property
    def n_samples(self) -> int:
        return len(self.thetas)

    @property
    def max_std(self) -> float:
        return float(self.grid_std.max())


def _training_set(thetas, labels):
    mask = labels >= 0
    return thetas[mask], labels[mask].astype(float)


def _default_hyper(box: SearchBox, targets) -> Hyperparameters:
    return Hyperparameters.from_log(box.log_bounds(targets).mean(axis=1))


def _fit_model(cfg: ExplorationConfig, thetas, labels, warm: Hyperparameters | None, refit: bool):
    X, y = _training_set(thetas, labels)
    spec = cfg.system
    hyper = warm
    if refit or hyper is None:
        if len(y) >= 2:
            unit = (X - spec.lower) / (spec.upper - spec.lower)
            hyper = gpr.fit(unit, y, cfg.gp_box, cfg.gp_n_starts, cfg.seed, warm_start=warm)
        elif hyper is None:
            hyper = _default_hyper(cfg.gp_box, y)
    return hyper, GPModel(X, y, hyper, spec.lower, spec.upper)


def _simulate_embed(cfg: ExplorationConfig, thetas) -> list:
    """Embedding per row, or None where the simulation blew up."""
    try:
        values, _ = simulate_batch(cfg.system, thetas)
        return list(embedding.embed_batch(values, cfg.embedding))
    except NonFinite:
        if len(thetas) == 1:
            return [None]
    return [_simulate_embed(cfg, row[None, :])[0] for row in thetas]


def _refresh_grid(state: State) -> None:
    mean, std = state.model.predict_many(state.grid)
    state.grid_mean, state.grid_std = mean, std


def start(cfg: ExplorationConfig) -> State:
    """Initial batch, first clustering and first GP fit."""
    from .oracles import grid_axes, grid_points

    spec = cfg.system
    thetas = initial_sample(spec.lower, spec.upper, cfg.n_initial, cfg.seed)
    vectors = _simulate_embed(cfg, thetas)
    embedded = [i for i, v in enumerate(vectors) if v is not None]
    E = np.array([vectors[i] for i in embedded]) if embedded else np.empty((0, 0))
    if not embedded:
        raise DegenerateClustering("every initial simulation diverged; shrink the search box")
    D = pairwise_distances(E)
    labeling = recluster(params=cfg.cluster, distances=D)
    if labeling.n_regimes == 0:
        raise DegenerateClustering(
            f"the initial batch of {len(thetas)} samples is all noise; "
            f"increase cluster.eps (now {cfg.cluster.eps}) or decrease cluster.min_pts "
            f"(now {cfg.cluster.min_pts})"
        )
    labels = np.full(len(thetas), FAILED, dtype=int)
    labels[embedded] = labeling.labels
    hyper, model = _fit_model(cfg, thetas, labels, None, True)
    axes = grid_axes(spec, cfg.grid_resolution)
    state = State(cfg, thetas, [0] * len(thetas), [None] * len(thetas), E, embedded, D, labeling,
                  hyper, model, axes, grid_points(axes), last_nlml=model.nlml())
    _refresh_grid(state)
    return state


def step(state: State) -> State:
    """One acquisition: choose, simulate, embed, recluster, refit, log."""
    cfg = state.config
    spec = cfg.system
    t = state.iteration + 1
    labels = state.labels
    trained = labels[labels >= 0]
    beta_max = float(trained.max())
    pool = candidate_pool(spec.lower, spec.upper, cfg.n_candidates, cfg.seed, t)
    sampled = {tuple(row) for row in state.thetas}
    index, ei = _choose(state.model, sampled, pool, beta_max, cfg.zeta_ei)
    theta = pool[index]

    state.thetas = np.vstack([state.thetas, theta])
    state.iterations.append(t)
    state.eis.append(ei)
    vector = _simulate_embed(cfg, theta[None, :])[0]
    merges_before = len(state.labeling.merge_log)
    if vector is not None:
        E = np.vstack([state.embeddings, vector])
        row = distances_to(E, vector)
        n = len(E)
        D = np.empty((n, n))
        D[:-1, :-1] = state.distances
        D[-1, :] = row
        D[:-1, -1] = row[:-1]
        state.embeddings, state.distances = E, D
        state.embedded.append(state.n_samples - 1)
        state.labeling = recluster(params=cfg.cluster, previous=state.labeling, iteration=t, distances=D)

    refit = t % cfg.refit_every == 0
    labels = state.labels
    state.hyper, state.model = _fit_model(cfg, state.thetas, labels, state.hyper, refit)
    state.last_nlml = state.model.nlml() if refit else None
    _refresh_grid(state)
    state.iteration = t
    state.log.append(IterationRecord(
        iteration=t,
        theta=[float(v) for v in theta],
        ei=ei,
        label=int(labels[-1]),
        max_std=state.max_std,
        n_regimes=state.labeling.n_regimes,
        merges=state.labeling.merge_log[merges_before:],
        nlml=state.last_nlml,
    ))
    return state


def stop_reason(state: State) -> str | None:
    cfg = state.config
    if cfg.zeta_stop is not None and state.max_std < cfg.zeta_stop:
        return "uncertainty"
    if cfg.t_max is not None and state.iteration >= cfg.t_max:
        return "t_max"
    if state.n_samples >= cfg.budget:
        return "budget"
    return None


@dataclass
class RunReport:
    config: ExplorationConfig
    thetas: np.ndarray
    labels: np.ndarray
    iterations: list
    eis: list
    model: GPModel
    labeling: Labeling
    n_regimes: int
    top_label: int
    grid_axes: list
    grid_mean: np.ndarray
    grid_std: np.ndarray
    boundaries: dict
    log: list
    stop_reason: str
    pca: PCAResult
    embedded: list

    @property
    def hyper(self) -> Hyperparameters:
        return self.model.hyper

    def classify(self, thetas) -> np.ndarray:
        """Rounded, clamped posterior mean for each row of ``thetas``."""
        mean, _ = self.model.predict_many(thetas)
        rounded = np.sign(mean) * np.floor(np.abs(mean) + 0.5)
        return np.clip(rounded, 0, self.top_label).astype(int)


def finish(state: State, reason: str) -> RunReport:
    labels = state.labels
    top = int(state.labeling.labels.max())
    axes = state.grid_axes
    if len(axes) == 2:
        mean_grid = state.grid_mean.reshape(len(axes[1]), len(axes[0]))
        boundaries = contour_levels(axes, mean_grid, top)
    else:
        boundaries = {}
    return RunReport(
        config=state.config,
        thetas=state.thetas,
        labels=labels,
        iterations=list(state.iterations),
        eis=list(state.eis),
        model=state.model,
        labeling=state.labeling,
        n_regimes=state.labeling.n_regimes,
        top_label=top,
        grid_axes=axes,
        grid_mean=state.grid_mean,
        grid_std=state.grid_std,
        boundaries=boundaries,
        log=state.log,
        stop_reason=reason,
        pca=embedding.pca_project(state.embeddings, 2),
        embedded=list(state.embedded),
    )


def run(cfg: ExplorationConfig, progress=None) -> RunReport:
    """Explore until a stopping rule fires and report the learned regimes.

    ``progress``, if given, is called with the state after every step.
    """
    state = start(cfg)
    while (reason := stop_reason(state)) is None:
        step(state)
        if progress is not None:
            progress(state)
    return finish(state, reason)
