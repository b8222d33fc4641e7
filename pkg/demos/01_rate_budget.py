"""Rate budget of the single-spin readout, from cavity parameters to S/N."""
import numpy as np

from cavityspin import rates
from cavityspin.config import TWO_PI, ExperimentConfig

cfg = ExperimentConfig()

# %% The analytic chain at the default operating point
report = rates.rate_report(cfg)
for key, value in report.to_dict().items():
    print(f"{key:>16s}  {value:.5g}")

# The cavity linewidth follows from the mirror data alone
kappa = rates.kappa_from_mirrors(cfg.cavity.transmittance, cfg.cavity.loss, cfg.cavity.length)
print(f"\nkappa from mirrors = 2pi x {kappa / TWO_PI / 1e6:.3f} MHz")

# %% How S/N depends on the Zeeman shift
# Only the flip rate depends on Delta, and the two flip channels balance at A/2.
grid = rates.design_grid(cfg, 9)
curve = rates.sn_curve(grid, cfg)
for d, sn in zip(curve.deltas, curve.sn):
    print(f"Delta = 2pi x {d / TWO_PI / 1e9:5.2f} GHz   S/N = {sn:9.4g}")
print(f"bound at A/2: {curve.bound:.4g}")

# %% Excitation power: emission saturates, flips do not
for p in np.array([0.1, 0.3, 0.9, 2.7, 8.1]) * 1e-6:
    omega = rates.rabi_from_power(p, cfg.drive)
    emit = rates.saturating_rate(cfg.cavity.g_max, omega, cfg.cavity.kappa, cfg.atom.gamma)
    flip = rates.spin_flip_rate(cfg.field.delta, cfg.atom.hyperfine, cfg.atom.gamma, omega)
    print(f"P = {p * 1e6:4.1f} uW   emission {emit:9.3g} /s   flips {flip:7.3g} /s   ratio {emit / flip:8.3g}")
