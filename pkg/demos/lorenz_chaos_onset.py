"""Find where the Lorenz system stops settling and turns chaotic.

The free axes are the initial x and the Rayleigh number rho. The run takes a
few minutes; the learned one-half contour should sit near rho = 24.
"""
import numpy as np

from regime_scout import dynamics, explorer
from regime_scout.config import load_preset

cfg = load_preset("lorenz")
for rho in (23.0, 25.0):
    ts = dynamics.simulate(cfg.system, [1.0, rho])
    print(f"rho {rho}: settles to a fixed point? {dynamics.converged_to_fixed_point(ts.values)}")

report = explorer.run(cfg)
print(f"{report.stop_reason}: {len(report.thetas)} samples, {report.n_regimes} regimes")
for line in report.boundaries.get(0.5, []):
    print(f"  boundary piece with {len(line)} vertices, rho from {line[:, 1].min():.2f} to {line[:, 1].max():.2f}")
print("probe labels", report.classify(np.array([[1.0, 23.0], [1.0, 25.0]])).tolist())
