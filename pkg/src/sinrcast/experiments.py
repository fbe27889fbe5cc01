"""Seeded multi-trial batches, per-n aggregates and CSV/JSON export.

Trial ``t`` at size ``n`` generates its network from
``derive_seed(base_seed, n, t)`` and drives the protocol with a seed derived
from that one. Every output is a pure function of the config, so reruns give
byte-identical files whatever the worker count.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from .engine import Protocol, run
from .network import Network, eccentricity, gen_social, gen_uniform
from .protocols import (Backoff, RandBroadcast, UnknownBroadcast, iteration_rounds,
                        rand_broadcast_defaults, unknown_broadcast_defaults)
from .sinr import SinrParams
from .streams import derive_seed

WORKERS_ENV = "SINRCAST_WORKERS"
PROTOCOLS = ("rand", "unknown", "backoff")
GENERATORS = ("uniform", "social")
TRIAL_HEADER = ("n", "trial", "seed", "D", "time", "ratio", "protocol", "complete")
AGGREGATE_HEADER = ("n", "mean_time", "mean_ratio", "complete_rate")
# purpose tag separating the protocol seed from the generation seed
_RUN_STREAM = 1


@dataclass
class ExperimentConfig:
    n_values: list = field(default_factory=lambda: [200])
    trials: int = 20
    generator: str = "uniform"
    p_pref: float = 0.5
    side: float = 6.0
    alpha: float = 2.5
    beta: float = 1.0
    noise: float = 1.0
    eps: float = 0.2
    protocol: str = "rand"
    d: Optional[int] = 10
    dbar: Optional[int] = None
    T: Optional[int] = None
    delta_fail: float = 0.05
    base_seed: int = 0
    max_rounds_factor: float = 50.0
    stop_when_informed: bool = False
    workers: Optional[int] = None
    trials_csv: Optional[str] = None
    aggregate_csv: Optional[str] = None
    json_out: Optional[str] = None

    def __post_init__(self):
        self.n_values = [int(n) for n in self.n_values]
        if not self.n_values or min(self.n_values) < 1:
            raise ValueError("n_values must be a nonempty list of positive sizes")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.generator not in GENERATORS:
            raise ValueError(f"generator must be one of {GENERATORS}, got {self.generator!r}")
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if not 0 <= self.p_pref <= 1:
            raise ValueError(f"p_pref must lie in [0, 1], got {self.p_pref}")
        if not self.side > 0:
            raise ValueError(f"side must be positive, got {self.side}")
        if not 0 < self.delta_fail <= 1:
            raise ValueError(f"delta_fail must lie in (0, 1], got {self.delta_fail}")
        if not self.max_rounds_factor > 0:
            raise ValueError("max_rounds_factor must be positive")
        for name in ("d", "dbar", "T"):
            v = getattr(self, name)
            if v is not None and v < (0 if name == "T" else 1):
                raise ValueError(f"{name} out of range: {v}")
        self.sinr_params()

    def sinr_params(self) -> SinrParams:
        return SinrParams(self.alpha, self.beta, self.noise, self.eps)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(doc) - known
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass
class ExperimentRecord:
    n: int
    trial: int
    seed: int
    D: int
    completion: Optional[int]
    done_round: Optional[int]
    rounds: int
    protocol: str
    params: dict
    wall_time: float = 0.0
    error: Optional[str] = None

    @property
    def complete(self) -> bool:
        return self.completion is not None

    @property
    def ratio(self) -> Optional[float]:
        if not self.complete or self.D <= 0:
            return None
        return self.completion / self.D

    def to_json(self) -> dict:
        # wall time stays out of exported files so reruns compare equal
        out = asdict(self)
        del out["wall_time"]
        out["complete"] = self.complete
        out["ratio"] = self.ratio
        return out


def generate(config: ExperimentConfig, n: int, seed: int) -> Network:
    prm = config.sinr_params()
    if config.generator == "social":
        return gen_social(n, config.side, prm, config.p_pref, seed)
    return gen_uniform(n, config.side, prm, seed)


def build_protocol(config: ExperimentConfig, net: Network, D: int) -> tuple[Protocol, int]:
    """The configured protocol and the number of rounds it is predicted to need."""
    prm = net.params
    if config.protocol == "unknown":
        d, dbar, T = unknown_broadcast_defaults(prm.eps, prm.alpha, prm.noise, prm.power, net.n, D,
                                                config.delta_fail, config.d, config.dbar)
        T = T if config.T is None else config.T
        return UnknownBroadcast(d, dbar, T), T * iteration_rounds(d, dbar, net.n)
    d, T = rand_broadcast_defaults(net, target_delta_fail=config.delta_fail, d=config.d, D=D)
    T = T if config.T is None else config.T
    # backoff has no closed-form budget; it borrows the known-density one
    proto = RandBroadcast(d, T) if config.protocol == "rand" else Backoff()
    return proto, T * d * d


def run_trial(config: ExperimentConfig, n: int, trial: int) -> ExperimentRecord:
    seed = derive_seed(config.base_seed, n, trial)
    started = time.perf_counter()
    try:
        net = generate(config, n, seed)
        D = eccentricity(net)
        proto, predicted = build_protocol(config, net, D)
        budget = max(1, math.ceil(config.max_rounds_factor * max(predicted, 1)))
        res = run(net, proto, derive_seed(seed, _RUN_STREAM), budget,
                  stop_when_informed=config.stop_when_informed)
    except Exception as exc:
        return ExperimentRecord(n, trial, seed, -1, None, None, 0, config.protocol, {},
                                time.perf_counter() - started, f"{type(exc).__name__}: {exc}")
    return ExperimentRecord(n, trial, seed, D, res.completion_round, res.done_round, res.rounds,
                            config.protocol, res.metadata, time.perf_counter() - started)


def _run_key(args):
    return run_trial(*args)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def run_batch(config: ExperimentConfig, workers: Optional[int] = None) -> list[ExperimentRecord]:
    """All trials of ``config``, sorted by ``(n, trial)``."""
    jobs = [(config, n, t) for n in config.n_values for t in range(config.trials)]
    workers = workers or config.workers or default_workers()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_key, jobs))
    else:
        records = [_run_key(j) for j in jobs]
    return sorted(records, key=lambda r: (r.n, r.trial))


@dataclass
class Aggregate:
    n: int
    trials: int
    completed: int
    errors: int
    mean_time: Optional[float]
    min_time: Optional[int]
    max_time: Optional[int]
    mean_ratio: Optional[float]

    @property
    def complete_rate(self) -> float:
        return self.completed / self.trials

    def to_json(self) -> dict:
        out = asdict(self)
        out["complete_rate"] = self.complete_rate
        return out


def aggregate(records: list[ExperimentRecord]) -> list[Aggregate]:
    """Per-n summaries over complete runs; incomplete runs only lower the rate."""
    out = []
    for n in sorted({r.n for r in records}):
        rows = [r for r in records if r.n == n]
        done = [r for r in rows if r.complete]
        times = [r.completion for r in done]
        ratios = [r.ratio for r in done if r.ratio is not None]
        out.append(Aggregate(
            n, len(rows), len(done), sum(r.error is not None for r in rows),
            math.fsum(times) / len(times) if times else None,
            min(times) if times else None, max(times) if times else None,
            math.fsum(ratios) / len(ratios) if ratios else None))
    return out


def _cell(x) -> str:
    if x is None:
        return "-1"
    if isinstance(x, bool):
        return "true" if x else "false"
    return repr(x) if isinstance(x, float) else str(x)


def trials_csv(records: list[ExperimentRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRIAL_HEADER)
    for r in records:
        w.writerow([_cell(v) for v in (r.n, r.trial, r.seed, r.D, r.completion, r.ratio,
                                       r.protocol, r.complete)])
    return buf.getvalue()


def aggregate_csv(aggs: list[Aggregate]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AGGREGATE_HEADER)
    for a in aggs:
        w.writerow([_cell(v) for v in (a.n, a.mean_time, a.mean_ratio, a.complete_rate)])
    return buf.getvalue()


def to_json_document(config: ExperimentConfig, records: list[ExperimentRecord]) -> dict:
    return {"config": config.to_json(),
            "records": [r.to_json() for r in records],
            "aggregate": [a.to_json() for a in aggregate(records)]}


def _write(path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def export(records: list[ExperimentRecord], config: ExperimentConfig, *, trials_path=None,
           aggregate_path=None, json_path=None) -> list[Path]:
    """Write whichever outputs have a path; returns the files written."""
    if not records:
        raise ValueError("nothing to export")
    written = []
    if trials_path:
        _write(trials_path, trials_csv(records))
        written.append(Path(trials_path))
    if aggregate_path:
        _write(aggregate_path, aggregate_csv(aggregate(records)))
        written.append(Path(aggregate_path))
    if json_path:
        _write(json_path, json.dumps(to_json_document(config, records), indent=1,
                                     sort_keys=True) + "\n")
        written.append(Path(json_path))
    return written
