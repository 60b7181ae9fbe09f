import dataclasses

import pytest

from regime_scout.clustering import ClusterParams
from regime_scout.dynamics import Axis, SystemSpec
from regime_scout.embedding import EmbeddingConfig
from regime_scout.explorer import ExplorationConfig, run


def small_pendulum_config(**changes) -> ExplorationConfig:
    """A pendulum exploration small enough to run in a couple of seconds."""
    spec = SystemSpec("pendulum", {"omega": 1.0, "lam": 0.0}, {},
                      (Axis("x0", -3.5, 3.5), Axis("v0", -2.5, 2.5)), 50.0, 256, 4)
    cfg = ExplorationConfig(
        system=spec,
        embedding=EmbeddingConfig(256, 0.0),
        cluster=ClusterParams(3000.0, 4),
        budget=40,
        zeta_stop=0.0,
        n_candidates=256,
        grid_resolution=21,
        seed=3,
        gp_n_starts=2,
        refit_every=1,
    )
    return dataclasses.replace(cfg, **changes)


@pytest.fixture
def small_config():
    return small_pendulum_config


@pytest.fixture(scope="session")
def small_report():
    return run(small_pendulum_config())
