"""Automatic discovery of response regimes in dynamical systems.

Responses are embedded by their FFT magnitudes, grouped with DBSCAN, and
the regime label is learned over the parameter box by a Gaussian process
that is refined with expected-improvement sampling.
"""
from .clustering import NOISE, ClusterParams, Labeling, canonicalize, dbscan, recluster
from .dynamics import Axis, SystemSpec, TimeSeries, simulate
from .embedding import EmbeddingConfig, embed, fft_magnitude, pca_project
from .errors import (
    ConfigInvalid,
    DegenerateClustering,
    DimensionMismatch,
    EmptyPool,
    NegativeDiscriminant,
    NonFinite,
    NotPositiveDefinite,
    RegimeScoutError,
    TooShort,
)
from .explorer import FAILED, ExplorationConfig, RunReport, classify, extract_boundaries, run
from .gpr import GPModel, Hyperparameters, SearchBox, expected_improvement, fit, nlml, predict

__version__ = "0.1.0"
