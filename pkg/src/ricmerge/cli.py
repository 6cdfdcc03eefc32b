"""Command-line entry point.

Subcommands: ``run`` (one scenario comparison), ``sweep`` (one axis),
``calibrate`` (fit a power model to measured points), and the live-mode
roles ``broker``, ``node``, ``xapp``. Results go to stdout or ``--out``
as CSV or JSON; identical invocations with the same seed produce
byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from . import scenario, wire
from .power import MeasurementPoint, calibrate
from .scenario import ConfigError, SweepAxis


def _parse_address(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"bad address (want host:port): {text!r}")
    return host, int(port)


def _parse_range(text: str, axis: SweepAxis) -> list[float]:
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise ConfigError(f"bad range (want start:stop[:step]): {text!r}")
    try:
        start, stop = float(parts[0]), float(parts[1])
        if axis is SweepAxis.REDUNDANCY:
            step = float(parts[2]) if len(parts) == 3 else 0.1
        else:
            step = float(parts[2]) if len(parts) == 3 else 1.0
    except ValueError as exc:
        raise ConfigError(f"bad range: {text!r}") from exc
    if step <= 0 or stop < start:
        raise ConfigError(f"bad range: {text!r}")
    values = []
    value = start
    while value <= stop + 1e-9:
        values.append(round(value, 9))
        value += step
    return values


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)


def _render(rows, fmt: str) -> str:
    if fmt == "json":
        return scenario.rows_to_json(rows)
    return scenario.rows_to_csv(rows)


def _cmd_run(args: argparse.Namespace) -> int:
    spec, model, sim_cfg = scenario.load_config(args.config)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    report = scenario.compare(spec, model, sim_cfg)
    _emit(_render(scenario.comparison_rows(report), args.format), args.out)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    spec, model, sim_cfg = scenario.load_config(args.config)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    axis = SweepAxis(args.axis)
    values = _parse_range(args.range, axis) if args.range else None
    rows = scenario.sweep(spec, model, sim_cfg, axis, values)
    _emit(_render(rows, args.format), args.out)
    return 0


def _cmd_calibrate(args: argparse.Namespace) -> int:
    points = []
    try:
        with open(args.points, encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                first, second = (f.strip() for f in line.split(",", 1))
                try:
                    points.append(MeasurementPoint(float(first), float(second)))
                except ValueError:
                    continue  # tolerate a header line
    except OSError as exc:
        raise ConfigError(f"cannot read {args.points}: {exc.strerror or exc}") from exc
    try:
        model = calibrate(points)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.format == "json":
        text = json.dumps(
            {
                "ric_static_watts": model.p_ric_static_watts,
                "watts_per_sample_rate": model.watts_per_sample_rate,
            },
            indent=2,
        ) + "\n"
    else:
        text = (
            "ric_static_watts,watts_per_sample_rate\n"
            f"{model.p_ric_static_watts:.6g},{model.watts_per_sample_rate:.6g}\n"
        )
    _emit(text, args.out)
    return 0


def _cmd_broker(args: argparse.Namespace) -> int:
    model = scenario.load_config(args.config)[1] if args.config else None
    host, port = _parse_address(args.listen)
    wire.broker_serve(host, port, model)
    return 0


def _cmd_node(args: argparse.Namespace) -> int:
    host, port = _parse_address(args.broker)
    catalog = tuple(f"KPI{k:04d}" for k in range(args.kpis))
    try:
        wire.node_emulate(host, port, args.node_id, catalog)
    except ConnectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _cmd_xapp(args: argparse.Namespace) -> int:
    host, port = _parse_address(args.broker)
    xapp, node, items = scenario.load_subscribe(args.subscribe)
    try:
        counters = wire.xapp_run(host, port, xapp, node, items, args.duration)
    except (ConnectionError, RuntimeError, TimeoutError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(counters))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ricmerge",
        description="KPI subscription merging, traffic and power analysis for RICs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_output_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", metavar="FILE", default=None)

    p_run = sub.add_parser("run", help="run one scenario comparison")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None)
    add_output_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep one scenario axis")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--axis", choices=[a.value for a in SweepAxis], required=True)
    p_sweep.add_argument("--range", metavar="START:STOP[:STEP]", default=None)
    p_sweep.add_argument("--seed", type=int, default=None)
    add_output_flags(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_cal = sub.add_parser("calibrate", help="fit the power model to rate,watts points")
    p_cal.add_argument("points")
    add_output_flags(p_cal)
    p_cal.set_defaults(func=_cmd_calibrate)

    p_broker = sub.add_parser("broker", help="run the live-mode broker")
    p_broker.add_argument("--listen", required=True, metavar="HOST:PORT")
    p_broker.add_argument("--config", default=None)
    p_broker.set_defaults(func=_cmd_broker)

    p_node = sub.add_parser("node", help="run a node emulator")
    p_node.add_argument("--broker", required=True, metavar="HOST:PORT")
    p_node.add_argument("--node-id", type=int, required=True)
    p_node.add_argument("--kpis", type=int, default=7)
    p_node.set_defaults(func=_cmd_node)

    p_xapp = sub.add_parser("xapp", help="run an xApp client")
    p_xapp.add_argument("--broker", required=True, metavar="HOST:PORT")
    p_xapp.add_argument("--subscribe", required=True, metavar="FILE")
    p_xapp.add_argument("--duration", type=float, default=None, metavar="SECONDS")
    p_xapp.set_defaults(func=_cmd_xapp)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(asctime)s %(name)s %(levelname)s %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
