"""Monte Carlo harness: parameter sweeps, finite-vs-limit comparison, CSV.

A sweep runs every requested strategy over a (beta, epsilon, SNR) grid.  At
each grid point the per-cell user count is K = round(beta * N) (half reuse
draws twice that, since its slots serve the comparison loading at double
density) and the budget is P = snr * sigma2.  Rows record the achieved
balanced SINR and the normalized rate beta_actual * log(1 + gamma), in nats
and bits; half-reuse rows already include the 1/2 time share.

Draws are independent tasks keyed by a deterministic stream id, so repeated
runs of one spec produce byte-identical CSV output (row wall times are
written as 0 unless timing is explicitly enabled).  A failed draw turns into
a row with converged=false and never aborts the sweep.
"""

from __future__ import annotations

import enum
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import asymptotic
from .baselines import Baseline, baseline_max_min
from .channel import SystemConfig, sample_channels
from .downlink import max_min_sinr
from .dual_uplink import Scheme, SolverSettings
from .exceptions import CellbeamError

__all__ = ["ExperimentMode", "ExperimentSpec", "ResultRow", "run_experiment",
           "summarize", "write_csv", "CSV_HEADER"]

CSV_HEADER = ("scheme,beta,epsilon,snr_db,draw_id,gamma,rate_nats,rate_bits,"
              "per_bs_power_1,per_bs_power_2,converged,wall_time_ms")

_SCHEME_NAMES = {s.value for s in Scheme}
_BASELINE_NAMES = {b.value for b in Baseline}


class ExperimentMode(str, enum.Enum):
    OPTIMIZED = "optimized"          # full max-min solve per draw
    ASYMPTOTIC_BF = "asymptotic_bf"  # limit-derived beamformers applied at finite N
    LSA_ONLY = "lsa_only"            # closed forms only, no channel draws

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ExperimentSpec:
    """Sweep description: strategies, grids, draw count and base scenario."""

    schemes: tuple
    beta_grid: tuple
    epsilon_grid: tuple
    snr_db_grid: tuple
    n_draws: int
    config: SystemConfig
    mode: ExperimentMode = ExperimentMode.OPTIMIZED
    output_path: str | None = None
    record_timing: bool = False
    settings: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        object.__setattr__(self, "schemes", tuple(str(s).lower() for s in self.schemes))
        object.__setattr__(self, "beta_grid", tuple(float(b) for b in self.beta_grid))
        object.__setattr__(self, "epsilon_grid", tuple(float(e) for e in self.epsilon_grid))
        object.__setattr__(self, "snr_db_grid", tuple(float(s) for s in self.snr_db_grid))
        object.__setattr__(self, "mode", ExperimentMode(str(self.mode).lower()))
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        unknown = [s for s in self.schemes
                   if s not in _SCHEME_NAMES and s not in _BASELINE_NAMES]
        if unknown:
            raise ValueError(f"unknown schemes: {unknown}")
        if not (self.beta_grid and self.epsilon_grid and self.snr_db_grid):
            raise ValueError("all parameter grids must be nonempty")
        if any(b <= 0 for b in self.beta_grid):
            raise ValueError("beta grid values must be positive")
        if any(e < 0 for e in self.epsilon_grid):
            raise ValueError("epsilon grid values must be nonnegative")
        if self.mode is not ExperimentMode.LSA_ONLY and self.n_draws < 1:
            raise ValueError("n_draws must be at least 1 for Monte Carlo modes")
        if self.mode is ExperimentMode.ASYMPTOTIC_BF:
            bad = [s for s in self.schemes if s not in _SCHEME_NAMES]
            if bad:
                raise ValueError(f"limit-derived beamformers are undefined for {bad}")
        if self.mode is ExperimentMode.LSA_ONLY:
            bad = [s for s in self.schemes
                   if s not in _SCHEME_NAMES and s != Baseline.TD_SCP.value]
            if bad:
                raise ValueError(f"no closed-form curves for {bad}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        solver = data.get("solver", {})
        return cls(
            schemes=tuple(data["schemes"]),
            beta_grid=tuple(data["beta_grid"]),
            epsilon_grid=tuple(data["epsilon_grid"]),
            snr_db_grid=tuple(data["snr_db_grid"]),
            n_draws=int(data.get("n_draws", 1)),
            config=SystemConfig.from_dict(data["config"]),
            mode=data.get("mode", "optimized"),
            output_path=data.get("output_path"),
            record_timing=bool(data.get("record_timing", False)),
            settings=SolverSettings(**solver),
        )

    @classmethod
    def from_file(cls, path: str) -> "ExperimentSpec":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    beta: float
    epsilon: float
    snr_db: float
    draw_id: int
    gamma: float
    rate_nats: float
    rate_bits: float
    per_bs_power: tuple
    converged: bool
    wall_time_ms: float

    def csv_line(self) -> str:
        fields = [self.scheme, repr(float(self.beta)), repr(float(self.epsilon)),
                  repr(float(self.snr_db)), str(int(self.draw_id)),
                  repr(float(self.gamma)), repr(float(self.rate_nats)),
                  repr(float(self.rate_bits)), repr(float(self.per_bs_power[0])),
                  repr(float(self.per_bs_power[1])),
                  "true" if self.converged else "false",
                  repr(float(self.wall_time_ms))]
        return ",".join(fields)


def _point_config(spec: ExperimentSpec, scheme: str, beta, epsilon, snr_db) -> SystemConfig:
    n = spec.config.n_antennas
    factor = 2.0 if scheme == Baseline.TD_SCP.value else 1.0
    k = max(1, round(factor * beta * n))
    power = 10.0 ** (snr_db / 10.0) * spec.config.sigma2
    return SystemConfig(n_antennas=n, n_users=k, epsilon=epsilon,
                        sigma2=spec.config.sigma2, power=power, seed=spec.config.seed)


def _lsa_row(scheme: str, beta, epsilon, snr_db) -> ResultRow:
    snr = 10.0 ** (snr_db / 10.0)
    if scheme == Baseline.TD_SCP.value:
        gamma = asymptotic.td_gamma_star(beta, snr)
        rate = asymptotic.td_rate(beta, snr)
        per_bs = (2.0 * snr, 2.0 * snr)  # per-slot budget in units of sigma2
        feasible = True
    else:
        point = asymptotic.operating_point(scheme, beta, epsilon, snr, sigma2=1.0)
        gamma, feasible = point.gamma_star, point.feasible
        rate = beta * math.log1p(gamma) if feasible else 0.0
        per_bs = (point.big_p_bar, point.big_p_bar) if feasible else (0.0, 0.0)
    return ResultRow(scheme=scheme, beta=beta, epsilon=epsilon, snr_db=snr_db,
                     draw_id=0, gamma=gamma if feasible else 0.0, rate_nats=rate,
                     rate_bits=rate / math.log(2.0), per_bs_power=per_bs,
                     converged=feasible, wall_time_ms=0.0)


def _run_task(task) -> ResultRow:
    spec, scheme, beta, epsilon, snr_db, draw_id, stream_id = task
    if spec.mode is ExperimentMode.LSA_ONLY:
        return _lsa_row(scheme, beta, epsilon, snr_db)
    config = _point_config(spec, scheme, beta, epsilon, snr_db)
    started = time.perf_counter()
    gamma, per_bs, converged = 0.0, (0.0, 0.0), False
    rate_factor = config.beta
    if scheme == Baseline.TD_SCP.value:
        rate_factor = 0.5 * config.beta  # time share; comparison loading is beta_TD/2
    try:
        channels = sample_channels(config, stream_id)
        if spec.mode is ExperimentMode.ASYMPTOTIC_BF:
            target = asymptotic.gamma_star(scheme, config.beta, epsilon,
                                           config.power / config.sigma2)
            solution = asymptotic.asymptotic_beamformers(scheme, channels, target, config)
            gamma = float(np.min(solution.sinrs))
            per_bs = (float(solution.per_bs_power[0]), float(solution.per_bs_power[1]))
            converged = True
        else:
            if scheme in _SCHEME_NAMES:
                result = max_min_sinr(scheme, channels, config, spec.settings)
            else:
                result = baseline_max_min(scheme, channels, config, spec.settings)
            if result.solution is not None:
                gamma = result.gamma_star
                per_bs = (float(result.solution.per_bs_power[0]),
                          float(result.solution.per_bs_power[1]))
                converged = True
    except (CellbeamError, np.linalg.LinAlgError):
        converged = False
    elapsed_ms = (time.perf_counter() - started) * 1e3
    rate = rate_factor * math.log1p(gamma) if converged else 0.0
    return ResultRow(scheme=scheme, beta=beta, epsilon=epsilon, snr_db=snr_db,
                     draw_id=draw_id, gamma=gamma, rate_nats=rate,
                     rate_bits=rate / math.log(2.0), per_bs_power=per_bs,
                     converged=converged,
                     wall_time_ms=elapsed_ms if spec.record_timing else 0.0)


def _worker_count() -> int:
    env = os.environ.get("CELLBEAM_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_experiment(spec: ExperimentSpec) -> list[ResultRow]:
    """Execute a sweep and return rows in deterministic (grid, draw) order.

    Draws are independent tasks dispatched to a process pool (worker count
    from CELLBEAM_THREADS, default the available parallelism); results merge
    in task order regardless of completion order.
    """
    draws = 1 if spec.mode is ExperimentMode.LSA_ONLY else spec.n_draws
    tasks = []
    grid = list(product(spec.beta_grid, spec.epsilon_grid, spec.snr_db_grid))
    for scheme in spec.schemes:
        for grid_idx, (beta, epsilon, snr_db) in enumerate(grid):
            for draw in range(draws):
                stream = grid_idx * draws + draw
                tasks.append((spec, scheme, beta, epsilon, snr_db, draw, stream))
    workers = _worker_count()
    if workers == 1 or len(tasks) <= 1 or spec.mode is ExperimentMode.LSA_ONLY:
        return [_run_task(t) for t in tasks]
    chunk = max(1, len(tasks) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_task, tasks, chunksize=chunk))


def summarize(rows) -> list[dict]:
    """Per-grid-point means and standard errors of the normalized rate.

    Statistics run over converged rows; a point where more than half the
    draws failed is flagged degenerate.  The standard error is null for a
    single draw.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("cannot summarize an empty result table")
    groups: dict = {}
    for row in rows:
        groups.setdefault((row.scheme, row.beta, row.epsilon, row.snr_db), []).append(row)
    def _mean(values):
        # a constant column averages to the constant, bit for bit
        if values.size and values.min() == values.max():
            return float(values[0])
        return float(values.mean())

    def _stderr(values):
        if values.size < 2:
            return None
        if values.min() == values.max():
            return 0.0
        return float(values.std(ddof=1) / math.sqrt(values.size))

    out = []
    for (scheme, beta, epsilon, snr_db), members in groups.items():
        good = [r for r in members if r.converged]
        rates = np.array([r.rate_nats for r in good])
        gammas = np.array([r.gamma for r in good])
        entry = {
            "scheme": scheme, "beta": beta, "epsilon": epsilon, "snr_db": snr_db,
            "n_draws": len(members), "n_failed": len(members) - len(good),
            "degenerate": (len(members) - len(good)) * 2 > len(members),
            "mean_rate_nats": _mean(rates) if good else None,
            "stderr_rate_nats": _stderr(rates),
            "mean_gamma": _mean(gammas) if good else None,
            "rate_definition": "beta*log1p(min_user_sinr), half reuse scaled by 1/2",
        }
        out.append(entry)
    return out


def write_csv(rows, target) -> None:
    """Write rows under the fixed header; ``target`` is a path or file."""
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            write_csv(rows, fh)
        return
    target.write(CSV_HEADER + "\n")
    for row in rows:
        target.write(row.csv_line() + "\n")
