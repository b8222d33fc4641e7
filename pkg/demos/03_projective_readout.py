"""Projective measurement of prepared spin states after a heralding coincidence."""
from cavityspin import experiments as exp
from cavityspin import rates
from cavityspin.config import ExperimentConfig

cfg = ExperimentConfig()
seed = cfg.sim.seed

# %% Calibrate the rate factor so a DOWN atom gives 4 counts on average
cal = exp.calibrate_eta0_zeta(4.0, cfg, seed=seed, n_trials=1000)
print(f"zeta = {cal.zeta:.4f} +- {cal.zeta_err:.4f}, mean N_count = {cal.mean_n_count:.2f}")
print(f"eta0 = {cal.eta0:.3f} +- {cal.eta0_err:.3f}; a pure Poisson atom would give "
      f"{1 - rates.readout_error(4.0):.3f}")
cfg = cal.apply(cfg)

# %% Readout failures: the Poisson zero-count probability per trial
check = exp.readout_failure_check(cfg, seed, 2000)
print(f"failure fraction {check.failure_fraction:.4f}, expected {check.predicted_fraction:.4f} "
      f"(z = {check.z_score:+.2f})")

# %% Three preparations, estimated with the eta0 prior 0.86 +- 0.09
for kind in ("sigma_minus", "sigma_perp", "sigma_plus"):
    r = exp.run_projective_campaign(kind, 100, 0.86, cfg, seed)
    print(f"{kind:<12s} N_suc = {r.n_suc:3d}/{r.n_in}   |beta|^2 = {r.beta2_hat:.3f} +- {r.sigma_beta2:.3f}")
