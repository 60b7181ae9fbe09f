"""Two coexisting steady states of a forced Duffing oscillator.

Prints the frequency response curve, the stable branch amplitudes at the
centre of the bistable band, and which branch two nearby starting points
reach; then learns the basin boundary over (detuning, x0).
"""
import numpy as np

from regime_scout import dynamics, explorer
from regime_scout.config import load_preset

cfg = load_preset("duffing")
coeffs = cfg.system.coefficients
for a in (0.5, 1.0, 1.5, 2.0):
    lo, hi = dynamics.duffing_frc(a, coeffs)
    print(f"amplitude {a}: detuning {lo:.3f} or {hi:.3f}")
print("stable branches at detuning 6:", dynamics.duffing_stable_branches(6.0, coeffs))
for x0 in (-1.4, -1.6):
    print(f"x0 {x0}: steady amplitude {dynamics.duffing_amplitude_oracle(cfg.system, [6.0, x0]):.3f}")

report = explorer.run(cfg)
print(f"{report.stop_reason}: {len(report.thetas)} samples, {report.n_regimes} regimes")
print("probe labels", report.classify(np.array([[6.0, -1.4], [6.0, -1.6]])).tolist())
