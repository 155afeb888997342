"""Command-line benchmark harness.

Subcommands::

    simulate       one trial, prints truth vs. estimate per method
    sweep-snr      Monte-Carlo MAE sweep over SNR values
    sweep-sources  Monte-Carlo MAE sweep over the source count
    bench-timing   spectrum-evaluation wall time per method
    beam-demo      far-field beamformer gain toward a near/far source

Sweeps write ``<out>_trials.csv`` and ``<out>_summary.csv`` plus a
rendered figure next to them (suppress with ``--no-plot``).
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

from . import bench
from .config import RunConfig, load_profile, override, parse_config
from .errors import ConfigError
from .geometry import field_boundaries, position_from_polar, ula
from .grids import axis_values


def _add_common(parser):
    parser.add_argument("--config", metavar="PATH",
                        help="flat key=value scenario file")
    parser.add_argument("--profile", default="desk",
                        help="built-in profile: desk, paper, desk-upa, paper-upa")
    parser.add_argument("--method", action="append", dest="methods",
                        choices=["music2d", "music3d", "modified", "proposed"],
                        help="estimator to run (repeatable)")
    parser.add_argument("--distance-model", choices=["exact", "fresnel"])
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", metavar="PATH", help="output base path")
    parser.add_argument("--subarrays", type=int)
    parser.add_argument("--az-step-deg", type=float)
    parser.add_argument("--el-step-deg", type=float)
    parser.add_argument("--dist-step-m", type=float)
    parser.add_argument("--snapshots", type=int)
    parser.add_argument("--sources", type=int, dest="k")
    parser.add_argument("--snr-db", type=float)
    parser.add_argument("--no-plot", action="store_true",
                        help="skip figure rendering")
    parser.add_argument("--no-timing", action="store_true",
                        help="zero the elapsed-time columns (byte-identical reruns)")


def _resolve_config(args) -> RunConfig:
    cfg = load_profile(args.profile)
    if args.config:
        cfg = parse_config(args.config, base=cfg)
    cfg = override(cfg,
                   distance_model=args.distance_model, trials=args.trials,
                   seed=args.seed, subarrays=args.subarrays,
                   az_step_deg=args.az_step_deg, el_step_deg=args.el_step_deg,
                   dist_step_m=args.dist_step_m, snapshots=args.snapshots,
                   k=args.k, snr_db=args.snr_db)
    if args.methods:
        cfg = override(cfg, methods=tuple(args.methods))
    return cfg


def _out_base(args, default: str) -> Path:
    base = Path(args.out) if args.out else Path(default)
    base.parent.mkdir(parents=True, exist_ok=True)
    return base


def _run_sweep_command(args, variable, values, default_out, xlabel):
    cfg = _resolve_config(args)
    spec = bench.SweepSpec(config=cfg, variable=variable, values=values,
                           trials=cfg.trials, methods=cfg.methods,
                           master_seed=cfg.seed,
                           record_timing=not args.no_timing)
    records, summaries = bench.run_sweep(spec)
    base = _out_base(args, default_out)
    trials_path = base.parent / f"{base.name}_trials.csv"
    summary_path = base.parent / f"{base.name}_summary.csv"
    bench.emit_trials_csv(records, trials_path)
    bench.emit_summary_csv(summaries, summary_path)
    print(f"wrote {trials_path} and {summary_path}")
    for row in summaries:
        print(f"  {variable}={row.sweep_value:g} {row.method:<9s}"
              f" mae={row.mae_m:.4g} m (+-{row.mae_stderr:.2g})"
              f" degraded={row.degradation_rate:.0%}")
    if not args.no_plot:
        from . import plots
        fig_path = base.parent / f"{base.name}_mae.png"
        plots.mae_plot(summaries, fig_path, xlabel)
        print(f"wrote {fig_path}")
    return 0


def _cmd_sweep_snr(args):
    values = tuple(float(v) for v in args.snrs.split(",")) if args.snrs \
        else _resolve_config(args).snr_list
    return _run_sweep_command(args, "snr_db", values, "sweep_snr", "SNR [dB]")


def _cmd_sweep_sources(args):
    values = tuple(int(v) for v in args.counts.split(",")) if args.counts \
        else _resolve_config(args).sources_list
    return _run_sweep_command(args, "source_count", values, "sweep_sources",
                              "concurrent sources")


def _cmd_simulate(args):
    cfg = _resolve_config(args)
    spec = bench.SweepSpec(config=cfg, variable="snr_db",
                           values=(cfg.snr_db,), trials=1,
                           methods=cfg.methods, master_seed=cfg.seed,
                           record_timing=not args.no_timing)
    records, _ = bench.run_sweep(spec)
    print(f"single trial at {cfg.snr_db:g} dB, {cfg.k} sources, seed {cfg.seed}")
    for r in sorted(records, key=lambda r: (r.method, r.source_idx)):
        est = "failed" if math.isnan(r.err_m) else (
            f"({r.est_x:+.4f}, {r.est_y:+.4f}, {r.est_z:+.4f})"
            f"  err={r.err_m * 100:.2f} cm")
        print(f"  {r.method:<9s} src{r.source_idx}"
              f" true=({r.true_x:+.4f}, {r.true_y:+.4f}, {r.true_z:+.4f})"
              f" est={est}")
    if args.out:
        base = _out_base(args, "simulate")
        path = base.parent / f"{base.name}_trials.csv"
        bench.emit_trials_csv(records, path)
        print(f"wrote {path}")
    return 0


def _cmd_bench_timing(args):
    cfg = _resolve_config(args)
    if args.repetitions:
        cfg = override(cfg, repetitions=args.repetitions)
    rows = []
    for method in cfg.methods:
        mean, std = bench.time_spectrum_evaluation(method, cfg,
                                                   repetitions=cfg.repetitions)
        rows.append((method, mean, std))
        print(f"  {method:<9s} {mean / 1000.0:8.3f} ms  (std {std / 1000.0:.3f} ms)")
    base = _out_base(args, "bench_timing")
    path = base.parent / f"{base.name}.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "time_mean_us", "time_std_us"])
        for method, mean, std in rows:
            writer.writerow([method, f"{mean:.9g}", f"{std:.9g}"])
    print(f"wrote {path}")
    if not args.no_plot:
        from . import plots
        fig_path = base.parent / f"{base.name}.png"
        plots.timing_plot(rows, fig_path)
        print(f"wrote {fig_path}")
    return 0


def _cmd_beam_demo(args):
    geom = ula(args.m, args.spacing_over_lambda * args.lambda_m, args.lambda_m)
    bounds = field_boundaries(geom)
    r_near = args.range_m if args.range_m else bounds.fraunhofer / 20.0
    bearing = math.radians(args.bearing_deg)
    angles = axis_values((math.radians(-60.0), math.radians(60.0),
                          math.radians(args.step_deg)))
    near = bench.beam_gain_sweep(
        geom, position_from_polar(r_near, bearing), angles)
    far = bench.beam_gain_sweep(
        geom, position_from_polar(100.0 * bounds.fraunhofer, bearing), angles)
    base = _out_base(args, "beam_demo")
    path = base.parent / f"{base.name}.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["azimuth_rad", "gain_nearfield", "gain_farfield"])
        for row in zip(angles, near, far):
            writer.writerow([f"{x:.9g}" for x in row])
    half = near.max() / 2.0
    print(f"near-field source at r={r_near:.3g} m "
          f"(boundaries: gain-flat {bounds.bjornson:.3g} m, "
          f"far-field {bounds.fraunhofer:.3g} m)")
    print(f"3-dB support: near-field {int((near >= half).sum())} cells, "
          f"far-field {int((far >= far.max() / 2.0).sum())} cells")
    print(f"wrote {path}")
    if not args.no_plot:
        from . import plots
        fig_path = base.parent / f"{base.name}.png"
        plots.beam_plot(angles, {"near-field": near, "far-field": far}, fig_path)
        print(f"wrote {fig_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nfmusic",
        description="near-field multi-source localization benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one trial and print estimates")
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep-snr", help="MAE versus SNR")
    _add_common(p)
    p.add_argument("--snrs", help="comma list of SNR values in dB")
    p.set_defaults(func=_cmd_sweep_snr)

    p = sub.add_parser("sweep-sources", help="MAE versus source count")
    _add_common(p)
    p.add_argument("--counts", help="comma list of source counts")
    p.set_defaults(func=_cmd_sweep_sources)

    p = sub.add_parser("bench-timing", help="time the spectrum searches")
    _add_common(p)
    p.add_argument("--repetitions", type=int)
    p.set_defaults(func=_cmd_bench_timing)

    p = sub.add_parser("beam-demo", help="near- vs far-field beam gain")
    p.add_argument("--m", type=int, default=128)
    p.add_argument("--spacing-over-lambda", type=float, default=0.5)
    p.add_argument("--lambda-m", type=float, default=0.1)
    p.add_argument("--bearing-deg", type=float, default=0.0)
    p.add_argument("--range-m", type=float,
                   help="near-field source range (default: far-field bound / 20)")
    p.add_argument("--step-deg", type=float, default=0.1)
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=_cmd_beam_demo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
