"""Command-line entry point wiring the toolkit's workflows together.

Exit codes: 0 success, 1 data/runtime error, 2 usage error.
"""

import argparse
import sys

from . import alerts, ann, evaluate, geo, ingest, simulate as sim, stats
from .errors import DrivestyleError
from .records import (
    ClassScheme,
    Dataset,
    DrivingStyle,
    FEATURE_SETS,
    apply_scheme,
)

SCHEME_NAMES = {
    "3c": ClassScheme.THREE_CLASS,
    "drop-con": ClassScheme.DROP_CON,
    "merged": ClassScheme.MERGED,
}

STAT_VARS = ("velocity", "fax", "fay", "faz", "fgx", "fgy", "fgz")


def _parse_time_of_day(text: str) -> float:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("time must be HH:MM:SS or seconds")
        h, m, s = int(parts[0]), int(parts[1]), float(parts[2])
        return h * 3600.0 + m * 60.0 + s
    return float(text)


def _parse_hidden(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError("hidden sizes must be comma-separated ints")
    if not sizes:
        raise argparse.ArgumentTypeError("need at least one hidden layer size")
    return sizes


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers")


def _route_for(args) -> sim.RouteSpec:
    if args.route == "default":
        return sim.default_route(args.seed)
    return sim.read_route(args.route)


def _cmd_simulate(args) -> int:
    route = _route_for(args)
    if args.style == "experiment":
        data = sim.simulate_experiment(route, args.seed,
                                       start_time_of_day=args.start_time)
    else:
        style = DrivingStyle.from_label(args.style)
        cfg = sim.SimConfig(route=route, profile=sim.style_profile(style),
                            seed=args.seed, start_time_of_day=args.start_time)
        data = sim.simulate(cfg)
    ingest.write_log(data, args.out)
    if args.route_out:
        sim.write_route(route, args.route_out)
    print(f"wrote {len(data)} registers to {args.out}")
    return 0


def _cmd_ingest(args) -> int:
    with open(args.nmea, "r", encoding="utf-8") as fh:
        fixes, skipped = ingest.read_nmea_lines(fh)
    samples = ingest.read_imu_csv(args.imu)
    result = ingest.fuse(fixes, samples, gyro_lsb_per_dps=args.gyro_scale)
    ingest.write_log(result.dataset(), args.out)
    if skipped:
        print(f"warning: skipped {skipped} unparseable NMEA lines", file=sys.stderr)
    if result.dropped:
        print(f"warning: dropped {result.dropped} fixes with no IMU data in window",
              file=sys.stderr)
    print(f"wrote {len(result.registers)} registers to {args.out} "
          f"({result.valid_fixes} valid fixes)")
    return 0


def _grouped_by_style(data: Dataset, var: str):
    data.require_labeled()
    groups = []
    labels = []
    for style in (DrivingStyle.CON, DrivingStyle.NOR, DrivingStyle.AGG):
        values = [getattr(r, var) for r in data if r.label is style]
        if values:
            groups.append(values)
            labels.append(style.name)
    return labels, groups


def _cmd_stats(args) -> int:
    data = ingest.read_log(args.infile)
    labels, groups = _grouped_by_style(data, args.var)
    if len(groups) < 2:
        raise DrivestyleError("need at least two styles present to compare")
    kw = stats.kruskal_wallis(groups)
    pairs = stats.posthoc_bonferroni(groups)

    if args.format == "csv":
        print("kind,var,groups,statistic,df,p_raw,p_adjusted,significant")
        print(f"kw,{args.var},{'|'.join(labels)},{kw.statistic:.6f},{kw.df},"
              f"{kw.p_value:.6e},,")
        for name, m, n in zip(labels, kw.medians, kw.sizes):
            print(f"median,{args.var},{name},{m:.6f},,,,{n}")
        for pc in pairs:
            print(f"pair,{args.var},{labels[pc.group_a]}|{labels[pc.group_b]},"
                  f"{pc.z:.6f},,{pc.p_raw:.6e},{pc.p_adjusted:.6e},"
                  f"{'yes' if pc.significant else 'no'}")
        return 0

    print(f"Kruskal-Wallis test for {args.var} across driving styles")
    print(f"  H = {kw.statistic:.6f}   df = {kw.df}   p = {kw.p_value:.6e}")
    print(f"  {'style':<7}{'n':>7}{'median':>14}")
    for name, m, n in zip(labels, kw.medians, kw.sizes):
        print(f"  {name:<7}{n:>7}{m:>14.6f}")
    print(f"Pairwise rank z tests (Bonferroni x{len(pairs)}):")
    for pc in pairs:
        verdict = "significant" if pc.significant else "not significant"
        print(f"  {labels[pc.group_a]} vs {labels[pc.group_b]}:  "
              f"z = {pc.z:+.4f}  p_raw = {pc.p_raw:.6e}  "
              f"p_adj = {pc.p_adjusted:.6e}  {verdict}")
    return 0


def _train_config(args) -> ann.TrainConfig:
    return ann.TrainConfig(
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        minibatch_size=args.batch,
        seed=args.seed,
    )


def _cmd_train(args) -> int:
    data = ingest.read_log(args.infile)
    fs = FEATURE_SETS[args.features]
    scheme = SCHEME_NAMES[args.scheme]
    topology = ann.Topology(len(fs), args.hidden, len(scheme.classes))
    net = ann.train(data, fs, scheme, topology, _train_config(args))
    ann.save_model(net, args.out)
    print(f"trained on {len(data)} registers "
          f"(features={fs.name}, scheme={scheme.value}); "
          f"final loss {net.loss_curve[-1]:.6f}; model saved to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    net = ann.load_model(args.model)
    data = ingest.read_log(args.infile)
    if args.apply_scheme:
        data = apply_scheme(data, net.scheme)
    matrix = evaluate.confusion(net, data)
    if args.format == "csv":
        names = [c.name for c in matrix.classes]
        print("true,size," + ",".join(f"pred_{n}" for n in names))
        for i, cls in enumerate(matrix.classes):
            row = ",".join(str(matrix.counts[i][j]) for j in range(len(names)))
            print(f"{cls.name},{matrix.row_total(i)},{row}")
        print(f"accuracy,,{matrix.accuracy:.6f}")
    else:
        print(matrix.format_table())
    return 0


def _cmd_sweep(args) -> int:
    data = ingest.read_log(args.infile)
    feature_sets = [FEATURE_SETS[name] for name in args.features]
    cells = evaluate.run_sweep(
        data, feature_sets, sizes=args.sizes, reps=args.reps,
        seed=args.seed, cfg=_train_config(args), hidden=args.hidden,
    )
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(evaluate.report_rows(cells)) + "\n")
    print(evaluate.format_cells(cells))
    print(f"per-repetition rows written to {args.out}")
    return 0


def _cmd_variants(args) -> int:
    data = ingest.read_log(args.infile)
    cells = evaluate.run_variants(
        data, seed=args.seed, train_size=args.train_size, reps=args.reps,
        cfg=_train_config(args), hidden=args.hidden,
    )
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(evaluate.report_rows(cells)) + "\n")
    print(evaluate.format_cells(cells))
    print(f"per-repetition rows written to {args.out}")
    return 0


def _cmd_stream(args) -> int:
    net = ann.load_model(args.model)
    triggers = frozenset(DrivingStyle.from_label(t) for t in args.trigger.split(","))
    policy = alerts.AlertPolicy(trigger_styles=triggers,
                                consecutive=args.consecutive,
                                cooldown_s=args.cooldown)
    state = alerts.AlertState()
    for lineno, raw in enumerate(sys.stdin, start=1):
        line = raw.strip()
        if not line or line == ingest.LOG_HEADER:
            continue
        register = ingest.parse_log_row(line, lineno)
        state, event, style = alerts.step(state, net, register, policy)
        print(f"{register.time_of_day:.1f}, {style.name}")
        if event is not None:
            print(f"ALERT {event.time_of_day:.1f} {event.style.name} {event.message}")
    return 0


def _cmd_export_geojson(args) -> int:
    data = ingest.read_log(args.infile)
    geo.write_geojson(data, args.var, args.out)
    print(f"wrote {len(data)} point features to {args.out}")
    return 0


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    harness = evaluate.HARNESS_TRAIN_CONFIG
    p.add_argument("--epochs", type=int, default=harness.epochs,
                   help="training epochs (default %(default)s)")
    p.add_argument("--learning-rate", type=float, default=harness.learning_rate,
                   help="gradient step size (default %(default)s)")
    p.add_argument("--batch", type=int, default=harness.minibatch_size,
                   help="minibatch size (default %(default)s)")
    p.add_argument("--hidden", type=_parse_hidden, default=(16, 8),
                   help="hidden layer sizes, comma separated (default 16,8)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drivestyle",
        description="Driving-style recognition toolkit: simulate drives, "
                    "ingest sensor captures, analyse, train, evaluate, alert.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a labeled synthetic drive")
    p.add_argument("--route", default="default",
                   help="route file, or 'default' for the seeded 10 km route")
    p.add_argument("--style", required=True,
                   choices=["con", "nor", "agg", "experiment"],
                   help="single style, or 'experiment' for 3 styles x 3 runs")
    p.add_argument("--seed", type=int, default=0, help="simulation seed")
    p.add_argument("--start-time", type=_parse_time_of_day, default=32400.0,
                   help="trip start as HH:MM:SS or seconds (default 09:00:00)")
    p.add_argument("--out", required=True, help="output register CSV")
    p.add_argument("--route-out", default=None,
                   help="also write the route used to this file")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("ingest", help="fuse raw NMEA + IMU captures into a log")
    p.add_argument("--nmea", required=True, help="NMEA 0183 text capture")
    p.add_argument("--imu", required=True,
                   help="IMU CSV: timestamp_s,ax,ay,az,gx,gy,gz raw counts")
    p.add_argument("--gyro-scale", type=float, default=ingest.GYRO_LSB_PER_DPS,
                   help="gyro LSB per deg/s (default %(default)s)")
    p.add_argument("--out", required=True, help="output register CSV")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("stats", help="rank tests of a channel across styles")
    p.add_argument("--in", dest="infile", required=True, help="labeled register CSV")
    p.add_argument("--var", required=True, choices=STAT_VARS,
                   help="channel to compare")
    p.add_argument("--format", choices=["text", "csv"], default="text")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("train", help="train a classifier and save the model")
    p.add_argument("--in", dest="infile", required=True, help="labeled register CSV")
    p.add_argument("--features", required=True, choices=sorted(FEATURE_SETS),
                   help="input feature set")
    p.add_argument("--scheme", default="3c", choices=sorted(SCHEME_NAMES),
                   help="class scheme (default %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="training seed")
    p.add_argument("--out", required=True, help="output model file")
    _add_train_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="confusion matrix of a model on a log")
    p.add_argument("--in", dest="infile", required=True, help="labeled register CSV")
    p.add_argument("--model", required=True, help="model file from train")
    p.add_argument("--apply-scheme", action="store_true",
                   help="apply the model's class scheme to the data first")
    p.add_argument("--format", choices=["text", "csv"], default="text")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="training-size sweep with repetitions")
    p.add_argument("--in", dest="infile", required=True, help="labeled register CSV")
    p.add_argument("--features", type=lambda s: s.split(","),
                   default=["gyro7", "acc7", "full10"],
                   help="comma-separated feature sets (default gyro7,acc7,full10)")
    p.add_argument("--sizes", type=_parse_int_list,
                   default=evaluate.DEFAULT_SWEEP_SIZES,
                   help="training sizes (default 500,1500,2500,3500,4500)")
    p.add_argument("--reps", type=int, default=evaluate.DEFAULT_REPS,
                   help="repetitions per cell (default %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", required=True, help="output report CSV")
    _add_train_flags(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("variants",
                       help="two-class variants and geo/time ablation grid")
    p.add_argument("--in", dest="infile", required=True, help="labeled register CSV")
    p.add_argument("--train-size", type=int, default=4500)
    p.add_argument("--reps", type=int, default=evaluate.DEFAULT_REPS,
                   help="repetitions per cell (default %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", required=True, help="output report CSV")
    _add_train_flags(p)
    p.set_defaults(func=_cmd_variants)

    p = sub.add_parser("stream",
                       help="classify register CSV rows from stdin, with alerts")
    p.add_argument("--model", required=True, help="model file from train")
    p.add_argument("--trigger", default="agg",
                   help="comma-separated styles that trigger alerts (default agg)")
    p.add_argument("--consecutive", type=int, default=3,
                   help="registers of a trigger style before alerting")
    p.add_argument("--cooldown", type=float, default=30.0,
                   help="minimum seconds between alerts")
    p.set_defaults(func=_cmd_stream)

    p = sub.add_parser("export-geojson",
                       help="write registers as GeoJSON point features")
    p.add_argument("--in", dest="infile", required=True, help="register CSV")
    p.add_argument("--var", required=True, choices=geo.EXPORTABLE_VARS,
                   help="channel stored in each feature's 'value' property")
    p.add_argument("--out", required=True, help="output .geojson file")
    p.set_defaults(func=_cmd_export_geojson)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return int(args.func(args) or 0)
    except DrivestyleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
