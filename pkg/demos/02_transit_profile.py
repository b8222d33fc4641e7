"""Atoms falling through the cavity: heralding coincidences and the rate profile."""
import numpy as np

from cavityspin import experiments as exp
from cavityspin import readout, stream
from cavityspin.config import ExperimentConfig
from cavityspin.rng import Stream, substream

cfg = ExperimentConfig()

# %% One drop, seen as a detector record
drop = stream.simulate_drops(substream(1, Stream.MISC), cfg, 1)[0]
counts = drop.events.counts_by_origin()
print(f"{len(drop.atoms)} atoms crossed in {cfg.detection.t_hold * 1e3:.0f} ms, events: {counts}")
coins = readout.detect_coincidences(drop.events, cfg.detection.t_coin, cfg.detection.t_win)
for c in coins[:5]:
    print(f"coincidence at {c.t0 / 1e3:9.2f} us, window until {c.window_end / 1e3:9.2f} us")

# %% Many drops: photon rate around each coincidence
stats = exp.run_transit_campaign(5000, cfg, seed=cfg.sim.seed)
fit = stats.gauss_fit
print(f"\n{stats.n_coincidences} coincidences in {stats.n_drops} drops")
print(f"Gaussian fit: peak {fit.t_peak * 1e6:.1f} us after the trigger, "
      f"half width {fit.sigma_t * 1e6:.1f} us, offset {fit.offset:.3g} /s")
print(f"eta(6 us, 36 us) = {stats.eta:.3f}, eta over the transit = {stats.eta_transit:.3f}")
print(f"counts per transit = {stats.mean_counts_per_transit:.2f}")

# A coarse text rendering of the profile
step = 5
peak = stats.profile_rate.max()
for t, r in zip(stats.profile_t[::step], stats.profile_rate[::step]):
    print(f"{t * 1e6:7.1f} us  {'#' * int(40 * r / peak)}")

# %% Photon statistics of bright atoms
timelines = [d.events for d in exp.g2_drops(200, cfg, seed=2)]
g2 = exp.g2_histogram(timelines, bin_ns=50, max_lag_ns=1000)
print("\nlag (ns)   g2")
for lag, v in zip(g2.lags_ns[:8], g2.g2[:8]):
    print(f"{lag:8.0f}  {v:5.2f}")
