"""Map oscillation and rotation of the undamped pendulum from 200 simulations.

Runs the bundled pendulum preset, prints how the learned boundary compares
with the exact energy separatrix, and writes the run directory plus an SVG
of the sampled points under ``out/pendulum``.

    python demos/pendulum_regimes.py
"""
from pathlib import Path

import numpy as np

from regime_scout import explorer, grading, oracles
from regime_scout.config import load_preset
from regime_scout.outputs import write_run
from regime_scout.svg import render

out = Path("out/pendulum")
cfg = load_preset("pendulum")
print(f"box {cfg.system.lower} to {cfg.system.upper}, budget {cfg.budget}, {cfg.n_initial} up front")

report = explorer.run(cfg, progress=lambda s: print(f"  iteration {s.iteration:3d}  max std {s.max_std:.3f}")
                      if s.iteration % 20 == 0 else None)
print(f"stopped on {report.stop_reason} with {len(report.thetas)} samples and {report.n_regimes} regimes")

points, truth = oracles.oracle_grid(cfg.system, 100)
result = grading.score(report, points, truth, grading.pendulum_separatrix_curves(cfg.system))
print(f"agreement with the separatrix away from the boundary: {result}")

for theta in ([0.0, 0.1], [0.0, 2.4], [2.0, 2.0]):
    print(f"  theta {theta} -> label {report.classify(np.array([theta]))[0]}")

write_run(out, report)
(out / "regimes.svg").write_text(render(out, "regimes"))
print(f"wrote {out}")
