"""Monte Carlo sweeps over (N, c), consensus-time statistics, exponential fit."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Iterable, Sequence

import numpy as np

from markov_consensus.consensus import check_alpha
from markov_consensus.engine import EpisodeConfig, run_episode
from markov_consensus.errors import ConfigError
from markov_consensus.rng import derive_seed

STATS_HEADER = [
    "N", "c", "density", "runs", "mean_tc_s", "std_tc_s",
    "min_tc_s", "median_tc_s", "max_tc_s", "unconverged",
]
FIT_MODEL = "mu = a*exp(b*density)"


@dataclass(frozen=True)
class Summary:
    count: int
    mean: float
    std: float
    min: float
    median: float
    max: float


def summarize(times: Iterable[float]) -> Summary:
    """Sample mean, unbiased std (0 for a single value) and order statistics."""
    x = np.asarray(list(times), dtype=float)
    if x.size == 0:
        raise ValueError("cannot summarize an empty sample")
    std = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    return Summary(int(x.size), float(np.mean(x)), std, float(x.min()), float(np.median(x)), float(x.max()))


@dataclass(frozen=True)
class ScenarioSweep:
    agents: tuple[int, ...]
    sides: tuple[int, ...]
    runs: int = 1000
    base_seed: int = 0
    # EpisodeConfig fields shared by every run (everything except c, N, seed)
    episode: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(int(n) for n in self.agents))
        object.__setattr__(self, "sides", tuple(int(c) for c in self.sides))
        if not self.agents or not self.sides:
            raise ConfigError("sweep needs at least one N and one c")
        if int(self.runs) != self.runs or self.runs < 1:
            raise ConfigError(f"runs must be a positive integer, got {self.runs!r}")
        bad = {"c", "N", "seed", "record_history"} & set(self.episode)
        if bad:
            raise ConfigError(f"episode template may not set {', '.join(sorted(bad))}")
        alpha = self.episode.get("alpha", EpisodeConfig.__dataclass_fields__["alpha"].default)
        for n in self.agents:
            check_alpha(alpha, n)
        for n in self.agents:
            for c in self.sides:
                self.config_for(n, c, 0)

    def config_for(self, n: int, c: int, run_index: int) -> EpisodeConfig:
        return EpisodeConfig(c=c, N=n, seed=derive_seed(self.base_seed, n, c, run_index), **self.episode)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["agents"] = list(self.agents)
        out["sides"] = list(self.sides)
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioSweep":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown sweep field '{key}'")
        for key in ("agents", "sides"):
            if key not in data:
                raise ConfigError(f"missing sweep field '{key}'")
            if not isinstance(data[key], list) or not all(isinstance(v, int) for v in data[key]):
                raise ConfigError(f"sweep field '{key}' must be a list of integers")
        for key in ("runs", "base_seed"):
            if key in data and (not isinstance(data[key], int) or isinstance(data[key], bool)):
                raise ConfigError(f"sweep field '{key}' must be an integer")
        if "episode" in data and not isinstance(data["episode"], dict):
            raise ConfigError("sweep field 'episode' must be an object")
        return cls(**data)


@dataclass(frozen=True)
class EnsembleStats:
    N: int
    c: int
    runs: int
    mean_tc_s: float
    std_tc_s: float
    min_tc_s: float
    median_tc_s: float
    max_tc_s: float
    unconverged: int

    @property
    def density(self) -> float:
        return self.N / self.c**2

    def csv_row(self) -> list[str]:
        return [
            str(self.N), str(self.c), repr(self.density), str(self.runs),
            *(repr(v) for v in (self.mean_tc_s, self.std_tc_s, self.min_tc_s, self.median_tc_s, self.max_tc_s)),
            str(self.unconverged),
        ]


def scenario_times(sweep: ScenarioSweep, n: int, c: int) -> tuple[list[float], int]:
    """Consensus times (s) of converged runs, in run order, plus the cap-hit count."""
    times, missed = [], 0
    for r in range(sweep.runs):
        res = run_episode(sweep.config_for(n, c, r))
        if res.reached:
            times.append(res.consensus_time_s)
        else:
            missed += 1
    return times, missed


def _scenario_stats(args) -> EnsembleStats:
    sweep, n, c = args
    times, missed = scenario_times(sweep, n, c)
    if times:
        s = summarize(times)
        vals = (s.mean, s.std, s.min, s.median, s.max)
    else:
        vals = (math.nan,) * 5
    return EnsembleStats(n, c, sweep.runs, *vals, unconverged=missed)


def resolve_workers(parallel: int | str | None) -> int:
    if parallel in (None, "", 1, "1"):
        return 1
    if parallel == "auto":
        return os.cpu_count() or 1
    n = int(parallel)
    if n < 1:
        raise ConfigError(f"--parallel must be >= 1 or 'auto', got {parallel}")
    return n


def run_ensemble(sweep: ScenarioSweep, parallel: int | str | None = 1) -> list[EnsembleStats]:
    """One stats row per (N, c), ordered by N then c.

    Each run's seed depends only on (base_seed, N, c, run index), so the
    output does not depend on the worker count.
    """
    jobs = [(sweep, n, c) for n in sweep.agents for c in sweep.sides]
    workers = resolve_workers(parallel)
    if workers == 1 or len(jobs) == 1:
        rows = [_scenario_stats(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_scenario_stats, jobs))
    return sorted(rows, key=lambda r: (r.N, r.c))


def stats_to_csv(rows: Sequence[EnsembleStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STATS_HEADER)
    for r in rows:
        w.writerow(r.csv_row())
    return buf.getvalue()


def write_stats_csv(rows: Sequence[EnsembleStats], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(stats_to_csv(rows))


def read_stats_csv(path) -> list[EnsembleStats]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != STATS_HEADER:
            raise ConfigError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            EnsembleStats(
                N=int(r["N"]), c=int(r["c"]), runs=int(r["runs"]),
                mean_tc_s=float(r["mean_tc_s"]), std_tc_s=float(r["std_tc_s"]),
                min_tc_s=float(r["min_tc_s"]), median_tc_s=float(r["median_tc_s"]),
                max_tc_s=float(r["max_tc_s"]), unconverged=int(r["unconverged"]),
            )
            for r in reader
        ]


@dataclass(frozen=True)
class ExpFit:
    a: float
    b: float
    r2: float

    def to_dict(self) -> dict[str, Any]:
        return {"a": self.a, "b": self.b, "r2": self.r2, "model": FIT_MODEL}

    def __call__(self, density):
        return self.a * np.exp(self.b * np.asarray(density))


def fit_exponential(rows: Sequence[EnsembleStats] | Sequence[tuple[float, float]]) -> ExpFit:
    """Least squares of ``ln mu`` on density; ``r2`` is measured in log space.

    Accepts stats rows or plain ``(density, mu)`` pairs. Rows without a
    finite positive mean are dropped before the minimum-size check.
    """
    pts = [(r.density, r.mean_tc_s) if isinstance(r, EnsembleStats) else (float(r[0]), float(r[1])) for r in rows]
    pts = [(x, y) for x, y in pts if math.isfinite(y) and y > 0]
    if len(pts) < 3:
        raise ConfigError(f"need at least 3 rows with positive mean, got {len(pts)}")
    x = np.array([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    if np.ptp(x) == 0:
        raise ConfigError("all densities are equal; slope is undefined")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ExpFit(float(math.exp(intercept)), float(slope), r2)


def fit_to_json(fit: ExpFit) -> str:
    return json.dumps(fit.to_dict())
