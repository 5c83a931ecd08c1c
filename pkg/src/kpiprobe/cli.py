"""kpiprobe command line: emulate CPE devices, run collection campaigns,
analyze recorded series, or do all three as one pipeline.

Exit codes are a stable contract for CI: 0 success, 1 usage error,
2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

from . import analysis
from .clock import SimulatedClock, SystemClock
from .collector import read_series_csv, run_campaign
from .config import (
    CampaignConfig,
    DeviceConfig,
    build_collectors,
    build_emulator,
    export_series,
    load_config,
    read_manifest,
    write_manifest,
)
from .emulator import ScenarioModel
from .model import CPE_A, CPE_B

log = logging.getLogger("kpiprobe")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; our contract reserves 2 for runtime
    failures, so remap usage errors to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_ports(text: str) -> dict[str, int]:
    ports = {}
    for part in text.split(","):
        name, _, value = part.partition("=")
        if name.strip() not in ("web", "at", "tm") or not value.strip().isdigit():
            raise argparse.ArgumentTypeError(
                f"expected web=PORT,at=PORT,tm=PORT, got {text!r}"
            )
        ports[name.strip()] = int(value.strip())
    return ports


def _noise_flag(text: str) -> bool:
    if text.lower() in ("on", "true", "1"):
        return True
    if text.lower() in ("off", "false", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {text!r}")


def create_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="kpiprobe",
        description="Network-KPI extraction test bench: CPE emulator, "
                    "multi-backend collectors, and comparison analytics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="campaign TOML file")
    common.add_argument("--seed", type=int, help="scenario random seed")
    common.add_argument("--noise", type=_noise_flag, metavar="on|off",
                        help="enable or disable measurement noise")
    common.add_argument("--rotation-period", type=float, dest="rotation_period",
                        metavar="S", help="seconds per full azimuth revolution")

    emulate = sub.add_parser("emulate", parents=[common],
                             help="serve the emulated device interfaces (foreground)")
    emulate.add_argument("--profile", choices=[CPE_A, CPE_B], action="append",
                         dest="profiles", help="device profile(s) to serve")
    emulate.add_argument("--ports", type=_parse_ports,
                         metavar="web=8080,at=9923,tm=9925",
                         help="listener ports for the (single) profile")
    emulate.set_defaults(handler=cmd_emulate)

    collect = sub.add_parser("collect", parents=[common],
                             help="run a polling campaign against live endpoints")
    collect.add_argument("--out", metavar="DIR", help="output directory")
    collect.add_argument("--duration", type=float, metavar="S",
                         help="campaign duration in seconds")
    collect.set_defaults(handler=cmd_collect)

    analyze = sub.add_parser("analyze", parents=[common],
                             help="compute comparison metrics over recorded series")
    analyze.add_argument("input_dir", metavar="DIR", help="directory with series CSVs")
    analyze.add_argument("--out", metavar="DIR", help="report directory (default: input)")
    analyze.add_argument("--svg", action="store_true", help="also write trace overlay SVG")
    analyze.set_defaults(handler=cmd_analyze)

    pipeline = sub.add_parser("all", parents=[common],
                              help="emulate + collect + analyze in one process")
    pipeline.add_argument("--out", metavar="DIR", help="output directory")
    pipeline.add_argument("--duration", type=float, metavar="S")
    pipeline.add_argument("--svg", action="store_true")
    pipeline.add_argument("--realtime", action="store_true",
                          help="run on the system clock instead of simulated time")
    pipeline.set_defaults(handler=cmd_all)
    return parser


def _load(args, **extra) -> CampaignConfig:
    return load_config(
        args.config,
        seed=args.seed,
        noise=args.noise,
        rotation_period=args.rotation_period,
        **extra,
    )


def cmd_emulate(args) -> int:
    config = _load(args)
    if args.profiles:
        config.devices = [
            next((d for d in config.devices if d.device == p), DeviceConfig(device=p))
            for p in args.profiles
        ]
    if args.ports:
        if len(config.devices) != 1:
            print("kpiprobe: --ports applies to a single profile", file=sys.stderr)
            return EXIT_USAGE
        device = config.devices[0]
        device.web_port = args.ports.get("web", device.web_port)
        device.at_port = args.ports.get("at", device.at_port)
        device.tm_port = args.ports.get("tm", device.tm_port)

    emulators = []
    try:
        for device in config.devices:
            emulator = build_emulator(device, config.scenario)
            emulator.start()
            emulators.append(emulator)
            print(f"{device.device}: web=http://{emulator.host}:{emulator.web_port} "
                  f"at={emulator.host}:{emulator.at_port} "
                  f"tm={emulator.host}:{emulator.tm_port}", flush=True)
    except OSError as exc:
        for emulator in emulators:
            emulator.stop()
        print(f"kpiprobe: cannot bind emulator port: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        for emulator in emulators:
            emulator.stop()
    return EXIT_OK


def _collect_into(config: CampaignConfig, out_dir: str, clock, ports=None) -> int:
    collectors = build_collectors(config, clock=clock, ports=ports)
    campaign_start = clock.wall()
    series_map = run_campaign(collectors, duration=config.duration, clock=clock)
    os.makedirs(out_dir, exist_ok=True)
    export_series(series_map, out_dir)
    write_manifest(out_dir, config, series_map, campaign_start)
    total = sum(len(series) for series in series_map.values())
    for series in series_map.values():
        print(f"{series.descriptor.name}: {len(series)} samples, "
              f"{series.error_count()} errors", flush=True)
    if total == 0:
        print("kpiprobe: no collector produced any samples", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_collect(args) -> int:
    config = _load(args, duration=args.duration, out_dir=args.out)
    return _collect_into(config, config.out_dir, SystemClock())


def cmd_analyze(args) -> int:
    input_dir = args.input_dir
    out_dir = args.out or input_dir
    if not os.path.isdir(input_dir):
        print(f"kpiprobe: {input_dir}: not a directory", file=sys.stderr)
        return EXIT_RUNTIME
    manifest = read_manifest(input_dir)

    truth = None
    t0 = None
    duration = None
    if manifest is not None:
        scenario = ScenarioModel(**manifest["scenario"])
        # Tracking fidelity is judged against the noise-free pattern: the
        # noise term is the device's measurement noise, not signal truth.
        truth = scenario.clean().rsrp_extended
        t0 = manifest["campaign_start_unix"]
        duration = manifest.get("duration")

    entries: list[tuple[str, int]] = []
    if manifest is not None:
        for item in manifest["series"]:
            entries.append((os.path.join(input_dir, item["csv"]), item["errors"]))
    else:
        entries = [
            (os.path.join(input_dir, name), 0)
            for name in sorted(os.listdir(input_dir))
            if name.endswith(".csv") and not name.startswith(("report", "trace-", "truth"))
        ]
    if not entries:
        print(f"kpiprobe: {input_dir}: no series CSVs found", file=sys.stderr)
        return EXIT_RUNTIME

    metrics = []
    traces = {}
    os.makedirs(out_dir, exist_ok=True)
    for path, error_count in entries:
        try:
            series = read_series_csv(path)
        except ValueError as exc:
            if manifest is not None and _manifest_samples(manifest, path) == 0:
                metrics.append(_empty_metrics(manifest, path, error_count))
                continue
            print(f"kpiprobe: {path}: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        metric = analysis.compute_metrics(series, truth=truth, t0=t0,
                                          error_count=error_count)
        metrics.append(metric)
        base = t0 if t0 is not None else series.times[0]
        times = [t - base for t, row in zip(series.times, series.rows)
                 if row.get("rsrp_dbm") is not None]
        values = [row["rsrp_dbm"] for row in series.rows if row.get("rsrp_dbm") is not None]
        traces[series.name] = (times, values)
        analysis.write_trace_csv(series, os.path.join(out_dir, f"trace-{series.name}.csv"),
                                 t0=base)

    if truth is not None and duration:
        analysis.write_truth_csv(truth, duration, os.path.join(out_dir, "truth.csv"))
    report = analysis.build_report(metrics, out_dir)
    print(report, end="", flush=True)
    if args.svg and traces:
        analysis.write_overlay_svg(traces, os.path.join(out_dir, "traces.svg"))
    return EXIT_OK


def _manifest_samples(manifest: dict, path: str) -> int:
    name = os.path.basename(path)
    for item in manifest["series"]:
        if item["csv"] == name:
            return item["samples"]
    return -1


def _empty_metrics(manifest: dict, path: str, error_count: int):
    from .model import Method

    name = os.path.basename(path)
    for item in manifest["series"]:
        if item["csv"] == name:
            return analysis.MethodMetrics(
                method=Method(item["method"]),
                device=item["device"],
                sample_count=0,
                error_count=error_count,
            )
    raise ValueError(f"{path} not described by manifest")


def cmd_all(args) -> int:
    config = _load(args, duration=args.duration, out_dir=args.out)
    clock = SystemClock() if args.realtime else SimulatedClock()
    emulators = []
    ports = {}
    try:
        for device in config.devices:
            emulator = build_emulator(device, config.scenario, clock=clock, ephemeral=True)
            emulator.start()
            emulators.append(emulator)
            ports[device.device] = {
                "web": emulator.web_port, "at": emulator.at_port, "tm": emulator.tm_port,
            }
        status = _collect_into(config, config.out_dir, clock, ports=ports)
    finally:
        for emulator in emulators:
            emulator.stop()
    if status != EXIT_OK:
        return status

    analyze_args = argparse.Namespace(
        input_dir=config.out_dir, out=config.out_dir, svg=args.svg,
        config=None, seed=None, noise=None, rotation_period=None,
    )
    return cmd_analyze(analyze_args)


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("KPIPROBE_LOG", "WARNING").upper(),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    parser = create_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except KeyboardInterrupt:
        return EXIT_RUNTIME
    except Exception as exc:  # stable nonzero exit for CI
        log.debug("unhandled failure", exc_info=True)
        print(f"kpiprobe: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
