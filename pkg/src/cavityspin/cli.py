"""Command-line entry point: ``cavityspin <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import experiments as exp
from . import io, rates, readout
from .config import TWO_PI, load_config
from .errors import ConfigError, FitError, StatisticsError, UsageError
from .readout import PulseKind

EXIT_OK, EXIT_USAGE, EXIT_STATS, EXIT_IO = 0, 2, 3, 4
DEFAULT_POWERS_UW = (0.1, 0.3, 0.9, 2.7, 8.1)


def _global_flags(suppress):
    """Flags accepted before or after the subcommand.

    The subcommand copy suppresses defaults so it cannot overwrite values
    given before the subcommand.
    """
    def d(value):
        return argparse.SUPPRESS if suppress else value

    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="PATH", default=d(None),
                   help="INI config file (frequencies in Hz)")
    p.add_argument("--seed", type=int, default=d(None), help="master seed (default: sim.seed)")
    p.add_argument("--threads", type=int, default=d(None), help="worker threads (default: sim.threads)")
    p.add_argument("--out", metavar="DIR", default=d("."), help="output directory")
    p.add_argument("--format", choices=("json", "csv"), default=d("json"))
    p.add_argument("--set", action="append", default=d([]), metavar="KEY=VALUE",
                   help="override a config value, e.g. detection.q=0.3 (repeatable)")
    return p


def build_parser():
    common = _global_flags(suppress=True)
    parser = argparse.ArgumentParser(prog="cavityspin", parents=[_global_flags(suppress=False)],
                                     description="Cavity-QED nuclear spin readout toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    sub.add_parser("rates", parents=[common], help="analytic rate report")

    p = sub.add_parser("transit", parents=[common], help="coincidence-aligned transit profile")
    p.add_argument("--drops", type=int, help="number of drops (default: sim.drops)")
    p.add_argument("--dump-events", metavar="PATH", help="write the event timeline CSV")
    p.add_argument("--dump-trajectories", metavar="PATH", help="write sampled trajectories CSV")

    p = sub.add_parser("coincide", parents=[common], help="offline coincidence windows from an event CSV")
    p.add_argument("events", help="event CSV with header t_ns,detector,origin")
    p.add_argument("--t-coin-ns", type=int, default=600)
    p.add_argument("--t-win-us", type=float, default=36.0)

    p = sub.add_parser("measure", parents=[common], help="projective measurement campaign")
    p.add_argument("--pulse", action="append", choices=[k.value for k in PulseKind],
                   help="preparation pulse (repeatable; default: sigma_minus, sigma_perp, sigma_plus)")
    p.add_argument("--n-in", type=int, default=100)
    p.add_argument("--eta0", type=float, default=exp.ETA0_PRIOR[0])

    p = sub.add_parser("sweep", parents=[common], help="excitation power sweep")
    p.add_argument("--powers-uw", type=float, nargs="+", default=list(DEFAULT_POWERS_UW))
    p.add_argument("--drops", type=int, help="drops per power and initialization (default: sim.drops)")
    p.add_argument("--mean-n-count", type=float, default=4.0)
    p.add_argument("--calibrate-dark", action="store_true",
                   help="set the dark rate from the reference-power count ratio first")

    p = sub.add_parser("design", parents=[common], help="S/N versus Zeeman shift")
    p.add_argument("--grid", type=int, default=512)

    p = sub.add_parser("g2", parents=[common], help="photon correlation of DOWN-atom transits")
    p.add_argument("--drops", type=int, help="number of drops (default: sim.drops)")
    p.add_argument("--bin-ns", type=int, default=50)
    p.add_argument("--max-lag-ns", type=int, default=2000)
    return parser


def _emit(args, manifest, name, doc, table=None):
    """Write the JSON document or the CSV table (with a JSON config echo)."""
    if args.format == "json" or table is None:
        io.write_json(doc, manifest.add(os.path.join(args.out, f"{name}.json")))
    else:
        fname, rows = table
        io.write_results(rows, "csv", manifest.add(os.path.join(args.out, fname)))
        echo = {k: v for k, v in doc.items() if k != "result"}
        io.write_json(echo, manifest.add(os.path.join(args.out, f"{name}.config.json")))


def cmd_rates(args, config, seed, manifest):
    report = rates.rate_report(config).to_dict()
    width = max(map(len, report))
    for k in sorted(report):
        print(f"{k:<{width}}  {io.fmt(report[k])}")
    doc = io.result_document("rates", seed, config, report)
    print(io.dumps_json(report), end="")
    _emit(args, manifest, "rates", doc)


def cmd_transit(args, config, seed, manifest):
    n = args.drops or config.sim.drops
    stats = exp.run_transit_campaign(n, config, seed, args.threads)
    fit = stats.gauss_fit
    result = {
        "counts_per_transit": stats.counts_per_transit,
        "mean_counts_per_transit": stats.mean_counts_per_transit,
        "rate_profile": {"t_s": stats.profile_t, "rate_per_s": stats.profile_rate},
        "gauss_fit": {"amplitude": fit.amplitude, "t_peak": fit.t_peak,
                      "half_width_1_sqrt_e": fit.sigma_t, "offset": fit.offset},
        "eta": stats.eta,
        "eta_transit": stats.eta_transit,
        "n_coincidences": stats.n_coincidences,
        "n_drops": stats.n_drops,
    }
    rows = zip((stats.profile_t * 1e6).tolist(), stats.profile_rate.tolist())
    _emit(args, manifest, "transit", io.result_document("transit", seed, config, result),
          ("fig3e_profile.csv", rows))
    if args.dump_events or args.dump_trajectories:
        tl, atoms = exp.concatenate_drops(exp.transit_drops(n, config, seed), config)
        if args.dump_events:
            io.write_events(tl, manifest.add(args.dump_events))
            det = config.detection
            coins = readout.detect_coincidences(tl, det.t_coin, det.t_win)
            base = os.path.splitext(args.dump_events)[0]
            io.write_windows(tl, coins, manifest.add(base + ".windows.csv"))
        if args.dump_trajectories:
            io.write_trajectories(atoms, manifest.add(args.dump_trajectories))
    print(f"t_peak = {fit.t_peak * 1e6:.2f} us, half width = {fit.sigma_t * 1e6:.2f} us, "
          f"eta(6,36) = {stats.eta:.3f}, counts/transit = {stats.mean_counts_per_transit:.2f}")


def cmd_coincide(args, config, seed, manifest):
    tl = io.read_events(args.events)
    coins = readout.detect_coincidences(tl, args.t_coin_ns * 1e-9, args.t_win_us * 1e-6)
    path = manifest.add(os.path.join(args.out, "windows.csv"))
    io.write_windows(tl, coins, path)
    print(f"{len(coins)} windows -> {path}")


def cmd_measure(args, config, seed, manifest):
    kinds = args.pulse or [PulseKind.SIGMA_MINUS.value, PulseKind.SIGMA_PERP.value,
                           PulseKind.SIGMA_PLUS.value]
    results = []
    for kind in kinds:
        r = exp.run_projective_campaign(kind, args.n_in, args.eta0, config, seed,
                                        threads=args.threads)
        results.append(r)
        print(f"{kind:<12} N_suc={r.n_suc:>5}/{r.n_in:<5} beta2_hat={r.beta2_hat:.3f} +- {r.sigma_beta2:.3f}")
    rows = [(r.pulse_kind, r.beta2_hat, r.sigma_beta2) for r in results]
    _emit(args, manifest, "measure", io.result_document("measure", seed, config, results),
          ("fig4b.csv", rows))


def cmd_sweep(args, config, seed, manifest):
    n = args.drops or config.sim.drops
    dark = None
    if args.calibrate_dark:
        dark = exp.calibrate_dark_rate(config, seed, n_drops=n, threads=args.threads)
        config = dark.apply(config)
        print(f"dark rate {dark.r_dark:.4g} /s (flip-only ratio {dark.flip_only_ratio:.4g}, "
              f"target reachable: {dark.attainable})")
    powers = [p * 1e-6 for p in args.powers_uw]
    if not any(np.isclose(powers, config.drive.p_ref, rtol=1e-9)):
        powers.append(config.drive.p_ref)
    res = exp.run_power_sweep(powers, config, seed, n, args.mean_n_count, threads=args.threads)
    result = {"sweep": res, "dark_calibration": dark}
    rows = [(p * 1e6, a, b) for p, a, b in res.rows()]
    _emit(args, manifest, "sweep", io.result_document("sweep", seed, config, result),
          ("fig5.csv", rows))
    print(f"sn_lower = {res.sn_lower:.4g}, delta_beta2 <= {res.delta_beta2:.3g}")


def cmd_design(args, config, seed, manifest):
    grid = rates.design_grid(config, args.grid)
    curve = rates.sn_curve(grid, config)
    result = {"deltas_hz": curve.deltas / TWO_PI, "sn": curve.sn,
              "argmax_delta_hz": curve.argmax_delta / TWO_PI, "bound": curve.bound,
              "half_hyperfine_hz": config.atom.hyperfine / TWO_PI / 2}
    rows = zip((curve.deltas / TWO_PI).tolist(), curve.sn.tolist())
    _emit(args, manifest, "design", io.result_document("design", seed, config, result),
          ("design.csv", rows))
    print(f"argmax Delta = 2pi x {curve.argmax_delta / TWO_PI / 1e6:.4f} MHz, "
          f"max S/N = {curve.sn.max():.4g}, bound = {curve.bound:.4g}")


def cmd_g2(args, config, seed, manifest):
    n = args.drops or config.sim.drops
    timelines = [d.events for d in exp.g2_drops(n, config, seed)]
    g2 = exp.g2_histogram(timelines, args.bin_ns, args.max_lag_ns)
    rows = zip(g2.lags_ns.tolist(), g2.g2.tolist(), g2.pair_counts.tolist())
    _emit(args, manifest, "g2", io.result_document("g2", seed, config, g2), ("g2.csv", rows))
    print(f"g2(first bin) = {g2.g2[0]:.3g}, baseline pairs/bin = {g2.baseline:.4g}")


COMMANDS = {
    "rates": cmd_rates, "transit": cmd_transit, "coincide": cmd_coincide,
    "measure": cmd_measure, "sweep": cmd_sweep, "design": cmd_design, "g2": cmd_g2,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        config = load_config(args.config, args.set)
        seed = config.sim.seed if args.seed is None else args.seed
        if seed < 0:
            raise UsageError("--seed must be a non-negative integer")
        args.threads = args.threads or config.sim.threads
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        os.makedirs(args.out, exist_ok=True)
        manifest = io.RunManifest.start(config, seed, args.command)
        COMMANDS[args.command](args, config, seed, manifest)
        manifest.finish(args.out)
    except (ConfigError, UsageError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (StatisticsError, FitError) as e:
        print(f"statistics error: {e}", file=sys.stderr)
        return EXIT_STATS
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
