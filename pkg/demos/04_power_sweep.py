"""Excitation-power sweep: saturation of the bright state and the spin-flip floor."""
from cavityspin import experiments as exp
from cavityspin import rates
from cavityspin.config import ExperimentConfig

cfg = ExperimentConfig()
seed = cfg.sim.seed
n_drops = 4000

# %% How far can dark counts go before the ratio drops below 4e2?
dark = exp.calibrate_dark_rate(cfg, seed, target_ratio=400.0, n_drops=n_drops)
print(f"ratio from spin flips alone: {dark.flip_only_ratio:.0f}")
print(f"dark rate for ratio 400: {dark.r_dark:.3g} /s (reachable: {dark.attainable})")
cfg = dark.apply(cfg)

# %% Sweep
powers = [0.1e-6, 0.3e-6, 0.9e-6, 2.7e-6, 8.1e-6]
res = exp.run_power_sweep(powers, cfg, seed, n_drops)
print("\n P (uW)   N_minus    N_plus")
for p, nm, npl in res.rows():
    print(f"{p * 1e6:7.1f}  {nm:8.3f}  {npl:8.4f}")
print(f"\nlow-power slope of N_minus: {res.slope_minus * 1e-6:.3g} per uW")
print(f"N_plus fit: {res.slope_plus * 1e-6:.3g} per uW + {res.intercept_plus:.3g}")

# %% Lower limit of S/N and the systematic error of the projections
print(f"sn_lower = {res.sn_lower:.0f} (analytic S/N {rates.rate_report(cfg).sn:.0f})")
print(f"delta |beta|^2 <= {res.delta_beta2:.3f}")
