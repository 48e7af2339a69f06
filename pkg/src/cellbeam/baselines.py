"""Zero-forcing reference precoders and finite-system half reuse.

Three pure nulling strategies bracket the optimized schemes: per-cell zero
forcing (own-cell interference only), generalized zero forcing (each BS
nulls every user it can see) and joint zero forcing over the stacked
antennas.  Directions come from the minimum-norm pseudo-inverse of the
nulling matrix; powers then balance the SINRs under the per-BS budget using
the same linear systems as the optimized schemes.  Half reuse gives each BS
its own slot at power 2P, removing cross-cell interference at the cost of
half the time share.
"""

from __future__ import annotations

import enum

import numpy as np
import scipy.linalg as sla

from .channel import ChannelSet, SystemConfig
from .downlink import (MaxMinResult, PrecodingSolution, assemble_solution,
                       cbf_downlink_powers, gamma_upper_bound, mcp_downlink_powers,
                       scp_downlink_powers)
from .dual_uplink import Scheme, SolverSettings, scp_dual_powers, scp_mmse_direction
from .exceptions import DimensionError, InfeasibleError, NotConvergedError, RankError

__all__ = ["Baseline", "zf_directions", "baseline_max_min"]

BUDGET_SLACK = 1e-9


class Baseline(str, enum.Enum):
    """Reference transmission strategies."""

    SCP_ZF = "scp_zf"   # null own-cell interference, ignore the other cell
    GZF = "gzf"         # each BS independently nulls all 2K-1 other users
    MCP_ZF = "mcp_zf"   # both BSs jointly null everything
    TD_SCP = "td_scp"   # half reuse: one BS per slot at power 2P

    def __str__(self):
        return self.value


def _pinv_columns(rows):
    """Columns of the conjugate-transposed pseudo-inverse: column k is the
    minimum-norm vector hitting row k and nulling every other row."""
    gram = rows @ rows.conj().T
    gram = 0.5 * (gram + gram.conj().T)
    try:
        factor = sla.cho_factor(gram, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise RankError("nulling rows are rank deficient") from exc
    return rows.conj().T @ sla.cho_solve(factor, np.eye(rows.shape[0]), check_finite=False)


def zf_directions(baseline, channels: ChannelSet, config: SystemConfig) -> np.ndarray:
    """Unit zero-forcing directions for every user (2K rows).

    Row lengths are N for the per-BS variants and 2N for joint nulling.
    Raises DimensionError when the antennas cannot support the required
    nulls and RankError on degenerate draws.
    """
    baseline = Baseline(baseline)
    k, n = channels.n_users, channels.n_antennas
    if baseline is Baseline.TD_SCP:
        raise ValueError("half reuse has no fixed nulling directions")
    if baseline is Baseline.SCP_ZF:
        if k > n:
            raise DimensionError(f"per-cell nulling needs K <= N, got K={k}, N={n}")
        dirs = np.empty((2 * k, n), dtype=np.complex128)
        for cell in (0, 1):
            cols = _pinv_columns(channels.block(cell, cell))
            dirs[cell * k:(cell + 1) * k] = cols.T
    elif baseline is Baseline.GZF:
        if 2 * k > n:
            raise DimensionError(f"independent full nulling needs 2K <= N, got K={k}, N={n}")
        dirs = np.empty((2 * k, n), dtype=np.complex128)
        for cell in (0, 1):
            cols = _pinv_columns(channels.bs_view(cell))
            served = slice(cell * k, (cell + 1) * k)
            dirs[served] = cols[:, served].T
    else:
        if k > n:
            raise DimensionError(f"joint nulling needs 2K <= 2N, got K={k}, N={n}")
        dirs = _pinv_columns(channels.stacked()).T
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def _bisect_fixed_directions(solve_powers, hi, budget, settings):
    """Max-min bisection with fixed directions: a target is feasible when
    the balancing powers exist, are nonnegative and fit the budget."""
    def attempt(gamma):
        try:
            solution = solve_powers(gamma)
        except (InfeasibleError, NotConvergedError):
            return None
        if float(np.max(solution.per_bs_power)) > budget * (1.0 + BUDGET_SLACK):
            return None
        return solution

    lo, best = 0.0, None
    for _ in range(60):
        top = attempt(hi)
        if top is None:
            break
        lo, best = hi, top
        hi *= 2.0
    iterations = 0
    while hi - lo > settings.gamma_tolerance:
        mid = 0.5 * (lo + hi)
        result = attempt(mid)
        iterations += 1
        if result is not None:
            lo, best = mid, result
        else:
            hi = mid
    return MaxMinResult(gamma_star=lo, solution=best,
                        bisection_iterations=iterations, bracket_width=hi - lo)


def _equal_power_solution(baseline, channels, config, directions):
    """Alternative power policy: uniform per-user power filling the tightest
    per-BS budget; the reported target is the worst achieved SINR."""
    k, n = channels.n_users, channels.n_antennas
    scheme = _zf_scheme(baseline)
    powers = np.full(2 * k, n * config.power / k)
    probe = assemble_solution(scheme, channels, directions, powers, 1.0, config.sigma2)
    powers = powers * (config.power / float(np.max(probe.per_bs_power)))
    probe = assemble_solution(scheme, channels, directions, powers, 1.0, config.sigma2)
    gamma = float(np.min(probe.sinrs))
    solution = PrecodingSolution(scheme=scheme, directions=directions, powers=powers,
                                 per_bs_power=probe.per_bs_power, sinrs=probe.sinrs,
                                 gamma_target=gamma)
    return MaxMinResult(gamma_star=gamma, solution=solution,
                        bisection_iterations=0, bracket_width=0.0)


def _zf_scheme(baseline):
    return {Baseline.SCP_ZF: Scheme.SCP, Baseline.GZF: Scheme.CBF,
            Baseline.MCP_ZF: Scheme.MCP}[Baseline(baseline)]


def _td_cell_max_min(cell_rows, config, settings):
    """Single-cell max-min at per-slot budget 2P: by per-cell strong duality
    the minimum total power at target gamma equals sigma^2 sum(lambda)/N, so
    the budget check runs on the dual objective alone."""
    budget = 2.0 * config.power

    def attempt(gamma):
        try:
            dual = scp_dual_powers(cell_rows, gamma, settings)
        except (InfeasibleError, NotConvergedError):
            return None
        if dual.dual_objective * config.sigma2 > budget * (1.0 + BUDGET_SLACK):
            return None
        return dual

    norms = np.sum(np.abs(cell_rows) ** 2, axis=1)
    hi = 2.0 * config.power * float(np.max(norms)) / (cell_rows.shape[1] * config.sigma2)
    lo, best = 0.0, None
    for _ in range(60):
        top = attempt(hi)
        if top is None:
            break
        lo, best = hi, top
        hi *= 2.0
    while hi - lo > settings.gamma_tolerance:
        mid = 0.5 * (lo + hi)
        result = attempt(mid)
        if result is not None:
            lo, best = mid, result
        else:
            hi = mid
    return lo, best, hi - lo


def _td_max_min(channels, config, settings):
    """Half reuse: each cell solves its own slot; the network-wide balanced
    SINR is the worse of the two slots."""
    k, n = channels.n_users, channels.n_antennas
    gammas, duals = [], []
    for cell in (0, 1):
        gamma_cell, dual, _ = _td_cell_max_min(channels.block(cell, cell), config, settings)
        gammas.append(gamma_cell)
        duals.append(dual)
    gamma = min(gammas)
    if gamma <= 0 or any(d is None for d in duals):
        return MaxMinResult(gamma_star=0.0, solution=None, bisection_iterations=0,
                            bracket_width=0.0)
    directions = np.empty((2 * k, n), dtype=np.complex128)
    powers = np.empty(2 * k)
    sinrs = np.empty(2 * k)
    per_bs = np.empty(2)
    for cell in (0, 1):
        rows = channels.block(cell, cell)
        dual = scp_dual_powers(rows, gamma, settings, initial=duals[cell].lambdas)
        served = slice(cell * k, (cell + 1) * k)
        for j in range(k):
            directions[cell * k + j] = scp_mmse_direction(rows, dual.lambdas, j)
        gains = np.abs(rows @ directions[served].T) ** 2
        mat = -gains.copy()
        mat[np.diag_indices(k)] = np.diag(gains) / gamma
        p = np.linalg.solve(mat, np.full(k, n * config.sigma2))
        if np.any(p < 0):
            raise InfeasibleError("negative slot powers in half reuse")
        powers[served] = p
        received = gains * (p / n)
        signal = np.diag(received).copy()
        sinrs[served] = signal / (config.sigma2 + received.sum(axis=1) - signal)
        per_bs[cell] = float(np.sum(p) / n)
    solution = PrecodingSolution(scheme=Scheme.SCP, directions=directions, powers=powers,
                                 per_bs_power=per_bs, sinrs=sinrs, gamma_target=gamma)
    return MaxMinResult(gamma_star=gamma, solution=solution, bisection_iterations=0,
                        bracket_width=0.0)


def baseline_max_min(baseline, channels: ChannelSet, config: SystemConfig,
                     settings: SolverSettings | None = None,
                     equal_power: bool = False) -> MaxMinResult:
    """Max-min SINR of a reference strategy under the per-BS budget.

    Zero-forcing variants keep their fixed directions and balance powers
    (or, with ``equal_power``, split power uniformly).  Half reuse runs one
    single-cell problem per slot at budget 2P; its rate must be halved for
    the time share when compared with full-reuse schemes.
    """
    baseline = Baseline(baseline)
    settings = settings or SolverSettings()
    if baseline is Baseline.TD_SCP:
        return _td_max_min(channels, config, settings)
    directions = zf_directions(baseline, channels, config)
    if equal_power:
        return _equal_power_solution(baseline, channels, config, directions)
    scheme = _zf_scheme(baseline)
    if scheme is Scheme.SCP:
        def solve_powers(gamma):
            return scp_downlink_powers(channels, directions, gamma, config, settings)
    elif scheme is Scheme.CBF:
        def solve_powers(gamma):
            return cbf_downlink_powers(channels, directions, gamma, config, settings)
    else:
        def solve_powers(gamma):
            return mcp_downlink_powers(channels, directions, gamma, config, settings)
    return _bisect_fixed_directions(solve_powers, gamma_upper_bound(channels, config),
                                    config.power, settings)
