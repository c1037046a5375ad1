"""Experiment configuration, single runs, the latency x interval sweep, CSV output."""

from __future__ import annotations

import csv
import io
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .engine import DEFAULT_EVENT_LIMIT, RngStream
from .errors import ConfigInvalid, ConsistencyViolation
from .latency import (Arima, Constant, IntervalModel, InvalidParameters,
                      LatencyModel, LatencySampler, Pareto, Poisson,
                      PoissonProcess, Weibull, interval_name, next_send_gap,
                      validate_interval)
from .metrics import DurationStats, EventLog, durations, verify_consistent_cut
from .records import GlobalSnapshot, RecordingWindow
from .sim import PlannedSend, Simulation
from .snapshots import resolve
from .transport import ChannelOrdering

log = logging.getLogger(__name__)

LATENCY_MODELS = ("poisson", "pareto", "weibull", "arima")
INTERVAL_MODELS = ("constant", "poisson")
ALGORITHM_NAMES = ("chandy-lamport", "lai-yang", "mattern", "abav")

AFTER_FIRST_SEND = "after-first-send"


def default_latency(name: str, floor: float = 0.1) -> LatencyModel:
    kinds = {"poisson": Poisson, "pareto": Pareto, "weibull": Weibull, "arima": Arima}
    try:
        return LatencyModel(kinds[name](), floor)
    except KeyError:
        raise ConfigInvalid(f"unknown latency model {name!r}") from None


def default_interval(name: str) -> IntervalModel:
    if name == "constant":
        return Constant()
    if name == "poisson":
        return PoissonProcess()
    raise ConfigInvalid(f"unknown interval model {name!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    hosts: int = 90
    messages_per_host: int = 10
    algorithm: str = "chandy-lamport"
    latency: LatencyModel = field(default_factory=lambda: default_latency("poisson"))
    interval: IntervalModel = field(default_factory=Constant)
    initiator: int = 0
    initiation: str | float = AFTER_FIRST_SEND
    seed: int = 0
    replications: int = 1
    ordering: ChannelOrdering | None = None
    event_limit: int = DEFAULT_EVENT_LIMIT

    def validate(self) -> None:
        try:
            algo = resolve(self.algorithm)
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from None
        if self.hosts < 1:
            raise ConfigInvalid("hosts must be >= 1")
        if self.hosts < 2 and self.messages_per_host > 0:
            raise ConfigInvalid("a single host has nobody to send messages to")
        if self.messages_per_host < 0:
            raise ConfigInvalid("messages_per_host must be >= 0")
        if not 0 <= self.initiator < self.hosts:
            raise ConfigInvalid(f"initiator {self.initiator} outside 0..{self.hosts - 1}")
        if not 0 <= self.seed < 2**64:
            raise ConfigInvalid("seed must fit in 64 unsigned bits")
        if self.replications < 1:
            raise ConfigInvalid("replications must be >= 1")
        if self.ordering is not None and self.ordering is not algo.ordering:
            raise ConfigInvalid(f"{algo.name} requires {algo.ordering.value} channels, "
                                f"not {self.ordering.value}")
        if not (self.initiation == AFTER_FIRST_SEND
                or (isinstance(self.initiation, (int, float)) and self.initiation >= 0)):
            raise ConfigInvalid(f"bad initiation rule {self.initiation!r}")
        try:
            validate_interval(self.interval)
        except InvalidParameters as exc:
            raise ConfigInvalid(str(exc)) from None

    @property
    def algorithm_name(self) -> str:
        return resolve(self.algorithm).name


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    snapshot: GlobalSnapshot
    stats: DurationStats
    log: EventLog
    windows: list[RecordingWindow]
    trace: list[str] | None = None


def build_workload(cfg: ExperimentConfig) -> list[PlannedSend]:
    """Send times, destinations and latencies of the application traffic.

    Each concern draws from its own named stream and nothing here depends on
    the algorithm, so every algorithm in a sweep cell sees the same workload.
    Each process sends its first message at t=0; later sends follow the
    interval model. Latencies are drawn in global send order, which makes an
    ARIMA latency model one time series over the whole platform.
    """
    n, m = cfg.hosts, cfg.messages_per_host
    intervals = RngStream(cfg.seed, "intervals")
    destinations = RngStream(cfg.seed, "destinations")
    plans = []
    for p in range(n):
        t = 0.0
        for k in range(m):
            if k:
                t += next_send_gap(cfg.interval, intervals)
            d = destinations.randrange(n - 1)
            plans.append((t, p, k, d if d < p else d + 1))
    plans.sort()
    latency = LatencySampler(cfg.latency, RngStream(cfg.seed, "latency"))
    return [PlannedSend(i, t, p, d, latency()) for i, (t, p, _, d) in enumerate(plans)]


def initiation_time(cfg: ExperimentConfig, workload: Sequence[PlannedSend]) -> float:
    if cfg.initiation != AFTER_FIRST_SEND:
        return float(cfg.initiation)
    first: dict[int, float] = {}
    for ps in workload:
        first.setdefault(ps.src, ps.time)
    return max(first.values(), default=0.0)


def run_experiment(cfg: ExperimentConfig, trace: bool = False) -> ExperimentResult:
    cfg.validate()
    workload = build_workload(cfg)
    control = LatencySampler(cfg.latency, RngStream(cfg.seed, "control-latency"))
    relay = LatencySampler(cfg.latency, RngStream(cfg.seed, "relay-latency"))
    sim = Simulation(cfg.hosts, cfg.algorithm, workload,
                     control_latency=control, relay_latency=relay,
                     initiator=cfg.initiator,
                     initiation_time=initiation_time(cfg, workload),
                     ordering=cfg.ordering, trace=trace, event_limit=cfg.event_limit)
    res = sim.run()
    violation = verify_consistent_cut(res.snapshot, res.log)
    if violation is not None:
        raise ConsistencyViolation(
            f"{cfg.algorithm_name} seed={cfg.seed}: rule {violation.rule}: {violation.detail}")
    stats = durations(res.windows, cfg.hosts)
    return ExperimentResult(cfg, res.snapshot, stats, res.log, res.windows, res.trace)


@dataclass(frozen=True)
class SweepSpec:
    """Grid of latency model x algorithm x interval model.

    A cell is one (interval, latency, replication) combination; all algorithms
    in a cell share its seed, ``base_seed + cell index``.
    """

    latency_models: tuple[str, ...] = LATENCY_MODELS
    algorithms: tuple[str, ...] = ALGORITHM_NAMES
    interval_models: tuple[str, ...] = INTERVAL_MODELS
    base_seed: int = 0
    replications: int = 1
    base: ExperimentConfig = field(default_factory=ExperimentConfig)
    latency_overrides: dict = field(default_factory=dict)
    interval_overrides: dict = field(default_factory=dict)

    def cells(self) -> list[tuple[int, str, str, int]]:
        """``(seed, interval, latency, replication)`` in grid order."""
        out = []
        idx = 0
        for rep in range(self.replications):
            for iv in self.interval_models:
                for lat in self.latency_models:
                    out.append((self.base_seed + idx, iv, lat, rep))
                    idx += 1
        return out

    def config_for(self, seed: int, interval: str, latency: str, algorithm: str) -> ExperimentConfig:
        lat = self.latency_overrides.get(latency) or default_latency(latency, self.base.latency.floor)
        iv = self.interval_overrides.get(interval) or default_interval(interval)
        return replace(self.base, algorithm=algorithm, latency=lat, interval=iv, seed=seed)


@dataclass
class SweepRow:
    algorithm: str
    latency_model: str
    interval_model: str
    seed: int
    stats: DurationStats | None
    windows: list[RecordingWindow] = field(default_factory=list)
    error: str | None = None


@dataclass
class SweepResult:
    rows: list[SweepRow]

    @property
    def failed(self) -> list[SweepRow]:
        return [r for r in self.rows if r.error is not None]


def _run_cell(args) -> list[SweepRow]:
    spec, seed, iv, lat = args
    rows = []
    for algo in spec.algorithms:
        try:
            cfg = spec.config_for(seed, iv, lat, algo)
            res = run_experiment(cfg)
            rows.append(SweepRow(cfg.algorithm_name, lat, iv, seed, res.stats, res.windows))
        except Exception as exc:  # noqa: BLE001 - one bad cell must not sink the sweep
            log.error("cell %s/%s/%s seed=%d failed: %s", algo, lat, iv, seed, exc)
            rows.append(SweepRow(algo, lat, iv, seed, None, error=f"{type(exc).__name__}: {exc}"))
    return rows


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Run every cell; a failing cell is logged and recorded, the rest still run."""
    jobs = [(spec, seed, iv, lat) for seed, iv, lat, _ in spec.cells()]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_cell, jobs))
    else:
        chunks = [_run_cell(job) for job in jobs]
    return SweepResult([row for chunk in chunks for row in chunk])


WINDOW_COLUMNS = ("algorithm", "latency_model", "interval_model", "seed",
                  "pid", "start", "end", "duration", "finalized")
SUMMARY_COLUMNS = ("algorithm", "latency_model", "interval_model", "seed",
                   "stddev", "mean", "finalized_count")


def _num(x: float) -> str:
    return f"{x:.6f}"


def _rows_of(results) -> list[SweepRow]:
    if isinstance(results, SweepResult):
        return results.rows
    if isinstance(results, ExperimentResult):
        results = [results]
    rows = []
    for r in results:
        if isinstance(r, SweepRow):
            rows.append(r)
        else:
            cfg = r.config
            rows.append(SweepRow(cfg.algorithm_name, cfg.latency.name,
                                 interval_name(cfg.interval), cfg.seed, r.stats, r.windows))
    return rows


def render_csv(results) -> tuple[str, str]:
    """``(windows.csv, summary.csv)`` contents; failed rows are left out."""
    win = io.StringIO()
    summ = io.StringIO()
    ww = csv.writer(win, lineterminator="\n")
    sw = csv.writer(summ, lineterminator="\n")
    ww.writerow(WINDOW_COLUMNS)
    sw.writerow(SUMMARY_COLUMNS)
    for row in _rows_of(results):
        if row.stats is None:
            continue
        key = [row.algorithm, row.latency_model, row.interval_model, row.seed]
        for w in sorted(row.windows, key=lambda w: w.pid):
            ww.writerow(key + [w.pid, _num(w.start), _num(w.end), _num(w.duration),
                               str(w.finalized_at_quiescence).lower()])
        sw.writerow(key + [_num(row.stats.stddev), _num(row.stats.mean),
                           row.stats.finalized_count])
    return win.getvalue(), summ.getvalue()


def emit_csv(results, out_dir: str | os.PathLike) -> tuple[Path, Path]:
    """Write ``windows.csv`` and ``summary.csv``; raises ``OSError`` on I/O failure."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    windows_text, summary_text = render_csv(results)
    wpath, spath = out / "windows.csv", out / "summary.csv"
    wpath.write_text(windows_text)
    spath.write_text(summary_text)
    return wpath, spath


def summary_table(rows: Iterable[SweepRow]) -> dict[tuple[str, str], dict[str, float]]:
    """``{(interval, latency): {algorithm: mean stddev over replications}}``."""
    acc: dict[tuple[str, str], dict[str, list[float]]] = {}
    for r in rows:
        if r.stats is None:
            continue
        acc.setdefault((r.interval_model, r.latency_model), {}).setdefault(
            r.algorithm, []).append(r.stats.stddev)
    return {k: {a: sum(v) / len(v) for a, v in d.items()} for k, d in acc.items()}
