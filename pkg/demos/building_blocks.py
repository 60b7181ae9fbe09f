"""The pieces of the pipeline on toy inputs, each in well under a second."""
import numpy as np

from regime_scout import gpr
from regime_scout.clustering import ClusterParams, dbscan
from regime_scout.contours import marching_squares
from regime_scout.dynamics import simulate
from regime_scout.config import load_preset
from regime_scout.embedding import EmbeddingConfig, embed, pca_project

spec = load_preset("pendulum").system
cfg = EmbeddingConfig(1024, 0.0)
thetas = [[0.5, 0.0], [1.0, 0.0], [0.0, 2.2], [0.0, 2.4]]
vectors = np.array([embed(simulate(spec, t), cfg) for t in thetas])
print("spectrum peaks:", [int(np.argmax(v[1:512])) + 1 for v in vectors])

distances = np.linalg.norm(vectors[:, None] - vectors[None], axis=2)
print("pairwise spectral distances:\n", np.round(distances).astype(int))
print("DBSCAN labels:", dbscan(vectors, ClusterParams(4e4, 1)).tolist())
print("PCA coordinates:\n", np.round(pca_project(vectors, 2).coordinates, 1))

X = np.array(thetas)
y = np.array([0.0, 0.0, 1.0, 1.0])
hyper = gpr.fit((X - spec.lower) / (spec.upper - spec.lower), y, seed=0)
model = gpr.GPModel(X, y, hyper, spec.lower, spec.upper)
print("fitted hyperparameters:", hyper)
xs = np.linspace(-3.5, 3.5, 41)
vs = np.linspace(-2.5, 2.5, 31)
mean, _ = model.predict_many(np.array([[x, v] for v in vs for x in xs]))
lines = marching_squares(xs, vs, mean.reshape(len(vs), len(xs)), 0.5)
print("half-level contour pieces:", [len(line) for line in lines])
