"""Command line: ``snapsim run | sweep | verify``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigInvalid, ConsistencyViolation
from .harness import (ALGORITHM_NAMES, AFTER_FIRST_SEND, INTERVAL_MODELS,
                      LATENCY_MODELS, ExperimentConfig, SweepSpec,
                      default_interval, default_latency, emit_csv,
                      run_experiment, run_sweep, summary_table)
from .latency import (Arima, Constant, InvalidParameters, LatencyModel, Pareto,
                      Poisson, PoissonProcess, Weibull)
from .metrics import durations, verify_consistent_cut
from .trace import TraceFormatError, parse_trace

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("snapsim")


def read_config_file(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigInvalid(f"{path}:{lineno}: expected key=value")
        out[key.strip()] = value.strip()
    return out


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _names(text: str, allowed) -> tuple[str, ...]:
    names = tuple(x.strip().lower() for x in text.split(",") if x.strip())
    for name in names:
        if allowed is not None and name not in allowed:
            raise ConfigInvalid(f"unknown name {name!r}; expected one of {', '.join(allowed)}")
    return names


def latency_from(settings: dict[str, str], name: str) -> LatencyModel:
    g = settings.get
    floor = float(g("floor", "0.1"))
    if name == "poisson":
        kind = Poisson(float(g("poisson.lambda", Poisson.lam)))
    elif name == "pareto":
        kind = Pareto(float(g("pareto.xm", Pareto.xm)), float(g("pareto.alpha", Pareto.alpha)))
    elif name == "weibull":
        kind = Weibull(float(g("weibull.k", Weibull.k)), float(g("weibull.lambda", Weibull.lam)))
    elif name == "arima":
        d = Arima()
        kind = Arima(int(g("arima.p", d.p)), int(g("arima.d", d.d)), int(g("arima.q", d.q)),
                     _floats(g("arima.ar", ",".join(map(str, d.ar)))),
                     _floats(g("arima.ma", ",".join(map(str, d.ma)))),
                     float(g("arima.mean", d.mean)), float(g("arima.sd", d.innovation_sd)))
    else:
        return default_latency(name)
    try:
        return LatencyModel(kind, floor)
    except InvalidParameters as exc:
        raise ConfigInvalid(str(exc)) from None


def interval_from(settings: dict[str, str], name: str):
    if name == "constant":
        return Constant(float(settings.get("interval.gap", Constant.gap)))
    if name == "poisson":
        return PoissonProcess(float(settings.get("interval.rate", PoissonProcess.rate)))
    return default_interval(name)


_FLAG_KEYS = {"algorithm": "algorithm", "latency": "latency", "interval": "interval",
              "hosts": "hosts", "messages": "messages", "seed": "seed", "out": "out",
              "replications": "replications", "algorithms": "algorithms",
              "latencies": "latencies", "intervals": "intervals", "workers": "workers"}


def merged_settings(args: argparse.Namespace) -> dict[str, str]:
    settings = read_config_file(args.config) if args.config else {}
    for attr, key in _FLAG_KEYS.items():
        value = getattr(args, attr, None)
        if value is not None:
            settings[key] = str(value)
    return settings


def config_from(settings: dict[str, str]) -> ExperimentConfig:
    try:
        initiation = settings.get("initiation", AFTER_FIRST_SEND)
        if initiation != AFTER_FIRST_SEND:
            initiation = float(initiation)
        cfg = ExperimentConfig(
            hosts=int(settings.get("hosts", 90)),
            messages_per_host=int(settings.get("messages", 10)),
            algorithm=settings.get("algorithm", "chandy-lamport"),
            latency=latency_from(settings, settings.get("latency", "poisson").lower()),
            interval=interval_from(settings, settings.get("interval", "constant").lower()),
            initiator=int(settings.get("initiator", 0)),
            initiation=initiation,
            seed=int(settings.get("seed", 0)),
            replications=int(settings.get("replications", 1)),
        )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigInvalid):
            raise
        raise ConfigInvalid(str(exc)) from None
    cfg.validate()
    return cfg


def cmd_run(args: argparse.Namespace) -> int:
    settings = merged_settings(args)
    cfg = config_from(settings)
    results = []
    for rep in range(cfg.replications):
        one = replace(cfg, seed=cfg.seed + rep)
        want_trace = args.trace is not None
        res = run_experiment(one, trace=want_trace)
        results.append(res)
        if want_trace:
            path = Path(args.trace)
            if cfg.replications > 1:
                path = path.with_name(f"{path.stem}-seed{one.seed}{path.suffix}")
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text("\n".join(res.trace) + "\n")
        print(f"{one.algorithm_name} seed={one.seed} hosts={one.hosts} "
              f"stddev={res.stats.stddev:.6f} mean={res.stats.mean:.6f} "
              f"finalized={res.stats.finalized_count}")
    emit_csv(results, settings.get("out", "out"))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    settings = merged_settings(args)
    base = config_from(settings)
    lat_names = _names(settings.get("latencies", ",".join(LATENCY_MODELS)), LATENCY_MODELS)
    iv_names = _names(settings.get("intervals", ",".join(INTERVAL_MODELS)), INTERVAL_MODELS)
    algos = _names(settings.get("algorithms", ",".join(ALGORITHM_NAMES)), None)
    spec = SweepSpec(
        latency_models=lat_names, algorithms=algos, interval_models=iv_names,
        base_seed=base.seed, replications=base.replications, base=base,
        latency_overrides={n: latency_from(settings, n) for n in lat_names},
        interval_overrides={n: interval_from(settings, n) for n in iv_names},
    )
    result = run_sweep(spec, workers=int(settings.get("workers", 1)))
    emit_csv(result, settings.get("out", "out"))
    table = summary_table(result.rows)
    for (iv, lat), by_algo in table.items():
        cells = " ".join(f"{a}={by_algo[a]:.3f}" for a in algos if a in by_algo)
        print(f"interval={iv} latency={lat} {cells}")
    for row in result.failed:
        print(f"FAILED {row.algorithm} {row.latency_model} {row.interval_model} "
              f"seed={row.seed}: {row.error}", file=sys.stderr)
    return EXIT_FAILED if result.failed else EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        with open(args.trace_file) as fh:
            parsed = parse_trace(fh)
    except TraceFormatError as exc:
        print(f"bad trace: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        parsed.log.check()
        violation = verify_consistent_cut(parsed.snapshot, parsed.log)
    except ValueError as exc:
        print(f"incomplete trace: {exc}", file=sys.stderr)
        return EXIT_FAILED
    if violation is not None:
        print(f"INCONSISTENT rule={violation.rule} msg={violation.msg_id}: {violation.detail}")
        return EXIT_FAILED
    line = f"consistent algo={parsed.algorithm} n={parsed.n} events={len(parsed.log)}"
    if parsed.windows:
        stats = durations(parsed.windows, parsed.n)
        line += f" stddev={stats.stddev:.6f} mean={stats.mean:.6f}"
    print(line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="snapsim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--latency", choices=LATENCY_MODELS)
        p.add_argument("--interval", choices=INTERVAL_MODELS)
        p.add_argument("--hosts", type=int)
        p.add_argument("--messages", type=int, help="messages sent per host")
        p.add_argument("--seed", type=int, help="seed (sweep: base seed)")
        p.add_argument("--replications", type=int)
        p.add_argument("--out", help="output directory for windows.csv/summary.csv")

    run = sub.add_parser("run", help="run one experiment")
    common(run)
    run.add_argument("--algorithm")
    run.add_argument("--trace", help="write the trace log to this file")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="latency x algorithm x interval grid")
    common(sweep)
    sweep.add_argument("--algorithm", help=argparse.SUPPRESS)
    sweep.add_argument("--algorithms", help="comma-separated subset")
    sweep.add_argument("--latencies", help="comma-separated subset")
    sweep.add_argument("--intervals", help="comma-separated subset")
    sweep.add_argument("--workers", type=int)
    sweep.set_defaults(func=cmd_sweep)

    verify = sub.add_parser("verify", help="re-check a trace log")
    verify.add_argument("trace_file")
    verify.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConsistencyViolation as exc:
        print(f"consistency violation: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
