"""Downlink beamformers, power recovery and max-min SINR bisection.

The dual multipliers fix the beamforming directions (MMSE receive vectors,
reused as transmit directions).  With unit directions the per-user downlink
powers follow from the SINR-equality equations, a linear system per cell for
single-cell processing (coupled across cells through the other-cell
interference, resolved by Gauss-Seidel rounds) and one 2K x 2K system for
the coordinated and joint schemes.  Max-min SINR is then a bisection on the
target, feasible when the recovered powers are nonnegative and within the
per-BS budget.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channel import ChannelSet, SystemConfig
from .dual_uplink import (DualSolution, Scheme, SolverSettings, solve_dual)
from .exceptions import InfeasibleError, NotConvergedError

__all__ = [
    "PrecodingSolution",
    "MaxMinResult",
    "mmse_directions",
    "scp_downlink_powers",
    "cbf_downlink_powers",
    "mcp_downlink_powers",
    "evaluate_sinrs",
    "assemble_solution",
    "duality_gap",
    "max_min_sinr",
    "solve_pair",
    "solve_at_gamma",
    "gamma_upper_bound",
]

OUTER_TOL = 1e-9      # relative power change stopping the two-cell rounds
OUTER_MAX = 1000
BUDGET_SLACK = 1e-9   # relative slack accepted on the per-BS budget


@dataclass(frozen=True)
class PrecodingSolution:
    """Beamforming directions and powers for one scheme at one target.

    ``directions`` has one unit row per user (length N, or 2N for joint
    transmission); user u transmits with power ``powers[u] / N`` so its
    beamformer is sqrt(powers[u]/N) * directions[u].
    """

    scheme: Scheme
    directions: np.ndarray
    powers: np.ndarray
    per_bs_power: np.ndarray
    sinrs: np.ndarray
    gamma_target: float

    def to_dict(self) -> dict:
        return {
            "scheme": str(self.scheme),
            "directions": [[[float(v.real), float(v.imag)] for v in row]
                           for row in self.directions],
            "powers": [float(v) for v in self.powers],
            "per_bs_power": [float(v) for v in self.per_bs_power],
            "sinrs": [float(v) for v in self.sinrs],
            "gamma_target": float(self.gamma_target),
        }


@dataclass(frozen=True)
class MaxMinResult:
    """Outcome of the max-min SINR bisection."""

    gamma_star: float
    solution: PrecodingSolution | None
    bisection_iterations: int
    bracket_width: float

    def to_dict(self) -> dict:
        return {
            "gamma_star": float(self.gamma_star),
            "solution": None if self.solution is None else self.solution.to_dict(),
            "bisection_iterations": int(self.bisection_iterations),
            "bracket_width": float(self.bracket_width),
        }


def mmse_directions(scheme, channels: ChannelSet, dual: DualSolution) -> np.ndarray:
    """Unit transmit directions from a dual solution (one row per user).

    Removing a user's own rank-one term from the regularizing matrix only
    rescales the solved vector, so the full matrix is factored once per BS.
    """
    scheme = Scheme(scheme)
    k, n = channels.n_users, channels.n_antennas
    lam = dual.lambdas
    if scheme is Scheme.MCP:
        rows = channels.stacked()
        a = (rows.conj().T * (lam / n)) @ rows
        a[np.diag_indices_from(a)] += np.repeat(np.asarray(dual.mus, dtype=float), n)
        dirs = np.linalg.solve(a, rows.conj().T).T
    else:
        dirs = np.empty((2 * k, n), dtype=np.complex128)
        for cell in (0, 1):
            served = slice(cell * k, (cell + 1) * k)
            if scheme is Scheme.SCP:
                rows = channels.block(cell, cell)
                a = (rows.conj().T * (lam[served] / n)) @ rows
                a[np.diag_indices_from(a)] += 1.0
            else:
                rows = channels.bs_view(cell)
                a = (rows.conj().T * (lam / n)) @ rows
                a[np.diag_indices_from(a)] += float(dual.mus[cell])
            own = channels.block(cell, cell)
            dirs[served] = np.linalg.solve(a, own.conj().T).T
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def _coupling_matrix(scheme, channels: ChannelSet, directions) -> np.ndarray:
    """G[u, v] = |<channel of user u from beam v's transmitter, dir_v>|^2."""
    scheme = Scheme(scheme)
    k = channels.n_users
    if scheme is Scheme.MCP:
        return np.abs(channels.stacked() @ directions.T) ** 2
    gains = np.empty((2 * k, 2 * k))
    for bs in (0, 1):
        cols = slice(bs * k, (bs + 1) * k)
        gains[:, cols] = np.abs(channels.bs_view(bs) @ directions[cols].T) ** 2
    return gains


def _per_bs_power(scheme, directions, powers, n_antennas) -> np.ndarray:
    scheme = Scheme(scheme)
    k = powers.shape[0] // 2
    if scheme is Scheme.MCP:
        split = np.sum(np.abs(directions[:, :n_antennas]) ** 2, axis=1)
        bs1 = float(np.sum(powers / n_antennas * split))
        bs2 = float(np.sum(powers / n_antennas * (1.0 - split)))
        return np.array([bs1, bs2])
    return np.array([float(np.sum(powers[:k])), float(np.sum(powers[k:]))]) / n_antennas


def _sinrs_from(scheme, channels, directions, powers, sigma2) -> np.ndarray:
    gains = _coupling_matrix(scheme, channels, directions)
    received = gains * (powers / channels.n_antennas)
    signal = np.diag(received).copy()
    interference = received.sum(axis=1) - signal
    return signal / (sigma2 + interference)


def assemble_solution(scheme, channels, directions, powers, gamma, sigma2) -> PrecodingSolution:
    """Package fixed directions and powers into a solution with achieved
    SINRs and per-BS powers (plumbing shared with the baseline precoders)."""
    powers = np.asarray(powers, dtype=float)
    return PrecodingSolution(
        scheme=Scheme(scheme), directions=directions, powers=powers,
        per_bs_power=_per_bs_power(scheme, directions, powers, channels.n_antennas),
        sinrs=_sinrs_from(scheme, channels, directions, powers, sigma2),
        gamma_target=float(gamma))


def evaluate_sinrs(scheme, channels: ChannelSet, solution: PrecodingSolution,
                   sigma2: float) -> np.ndarray:
    """Achieved downlink SINR of every user under a precoding solution."""
    return _sinrs_from(scheme, channels, solution.directions, solution.powers, sigma2)


def scp_downlink_powers(channels: ChannelSet, directions, gamma, config: SystemConfig,
                        settings: SolverSettings | None = None) -> PrecodingSolution:
    """Per-user powers for single-cell processing at target ``gamma``.

    Each cell solves its K x K SINR-equality system given the other cell's
    interference; the two cells are swept Gauss-Seidel style until the joint
    power vector is a fixed point.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    k, n = channels.n_users, channels.n_antennas
    gains = _coupling_matrix(Scheme.SCP, channels, directions)
    systems, cross = [], []
    for cell in (0, 1):
        served = slice(cell * k, (cell + 1) * k)
        other = slice((1 - cell) * k, (2 - cell) * k)
        own = gains[served, served]
        mat = -own.copy()
        mat[np.diag_indices(k)] = np.diag(own) / gamma
        systems.append(mat)
        cross.append(gains[served, other])
    # beyond any budget-relevant scale the coupled rounds are diverging
    power_cap = 1e9 * n * config.power
    powers = np.zeros((2, k))
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(OUTER_MAX):
            previous = powers.copy()
            for cell in (0, 1):
                noise = config.sigma2 + cross[cell] @ (powers[1 - cell] / n)
                try:
                    powers[cell] = np.linalg.solve(systems[cell], n * noise)
                except np.linalg.LinAlgError as exc:
                    raise InfeasibleError(f"singular power system at gamma={gamma}") from exc
                if not np.all(np.isfinite(powers[cell])) or np.any(powers[cell] < 0):
                    raise InfeasibleError(f"no nonnegative power solution at gamma={gamma}")
            if float(np.max(powers)) > power_cap:
                raise InfeasibleError(f"coupled powers diverged at gamma={gamma}")
            change = np.max(np.abs(powers - previous) / np.maximum(np.abs(powers), 1e-30))
            if change <= OUTER_TOL:
                return assemble_solution(Scheme.SCP, channels, directions, powers.ravel(),
                                         gamma, config.sigma2)
    raise InfeasibleError(f"two-cell power rounds did not settle at gamma={gamma}")


def _one_shot_powers(scheme, channels, directions, gamma, config) -> PrecodingSolution:
    k, n = channels.n_users, channels.n_antennas
    gains = _coupling_matrix(scheme, channels, directions)
    mat = -gains.copy()
    mat[np.diag_indices(2 * k)] = np.diag(gains) / gamma
    try:
        powers = np.linalg.solve(mat, np.full(2 * k, n * config.sigma2))
    except np.linalg.LinAlgError as exc:
        raise InfeasibleError(f"singular power system at gamma={gamma}") from exc
    if not np.all(np.isfinite(powers)) or np.any(powers < 0):
        raise InfeasibleError(f"no nonnegative power solution at gamma={gamma}")
    return assemble_solution(scheme, channels, directions, powers, gamma, config.sigma2)


def cbf_downlink_powers(channels: ChannelSet, directions, gamma, config: SystemConfig,
                        settings: SolverSettings | None = None) -> PrecodingSolution:
    """Per-user powers for coordinated beamforming: one 2K x 2K solve."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return _one_shot_powers(Scheme.CBF, channels, directions, gamma, config)


def mcp_downlink_powers(channels: ChannelSet, directions, gamma, config: SystemConfig,
                        settings: SolverSettings | None = None) -> PrecodingSolution:
    """Per-user powers for joint transmission over the stacked antennas."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return _one_shot_powers(Scheme.MCP, channels, directions, gamma, config)


def _scp_noise_terms(channels, solution, config):
    """Per-user noise plus other-cell interference under a solution."""
    k, n = channels.n_users, channels.n_antennas
    gains = _coupling_matrix(Scheme.SCP, channels, solution.directions)
    out = np.empty(2 * k)
    for cell in (0, 1):
        served = slice(cell * k, (cell + 1) * k)
        other = slice((1 - cell) * k, (2 - cell) * k)
        out[served] = config.sigma2 + gains[served, other] @ (solution.powers[other] / n)
    return out


def duality_gap(dual: DualSolution, primal: PrecodingSolution, channels: ChannelSet,
                config: SystemConfig) -> float:
    """Relative gap between primal transmit power and the dual objective.

    Zero (to numerical precision) at jointly converged pairs.  For the
    coordinated and joint schemes the primal objective is twice the maximum
    per-BS power and the dual objective is sum(lambda) sigma^2 / N at the
    optimized noise split.  Single-cell processing is checked per cell
    against sum(lambda_k sigma_k^2) / N with the noise-plus-other-cell terms
    taken from the converged primal.
    """
    if abs(dual.gamma_target - primal.gamma_target) > 1e-12 * max(1.0, abs(dual.gamma_target)):
        raise ValueError("dual and primal were solved at different targets")
    k, n = channels.n_users, channels.n_antennas
    if primal.scheme is Scheme.SCP:
        noise = _scp_noise_terms(channels, primal, config)
        worst = 0.0
        for cell in (0, 1):
            served = slice(cell * k, (cell + 1) * k)
            dual_obj = float(dual.lambdas[served] @ noise[served]) / n
            primal_obj = float(primal.per_bs_power[cell])
            worst = max(worst, abs(primal_obj - dual_obj) / max(primal_obj, dual_obj))
        return worst
    primal_obj = 2.0 * float(np.max(primal.per_bs_power))
    dual_obj = dual.dual_objective * config.sigma2
    return abs(primal_obj - dual_obj) / max(primal_obj, dual_obj)


def _recover_primal(scheme, channels, config, gamma, dual, settings):
    directions = mmse_directions(scheme, channels, dual)
    scheme = Scheme(scheme)
    if scheme is Scheme.SCP:
        return scp_downlink_powers(channels, directions, gamma, config, settings)
    if scheme is Scheme.CBF:
        return cbf_downlink_powers(channels, directions, gamma, config, settings)
    return mcp_downlink_powers(channels, directions, gamma, config, settings)


def _polish_noise_split(scheme, channels, config, gamma, dual, primal, settings):
    """Secant refinement of the noise split on the per-BS power imbalance.

    The golden-section search localizes the split only to the scale where
    the (flat) dual objective drowns in fixed-point noise.  At an interior
    optimum both budget constraints bind, so driving P1 - P2 to zero pins
    the split to first order and closes the duality gap.
    """
    lo, hi = 1e-3, 2.0 - 1e-3

    def imbalance(pair):
        return float(pair[1].per_bs_power[0] - pair[1].per_bs_power[1])

    def solve_split(mu1, warm):
        d = solve_dual(scheme, channels, gamma, settings, mus=(mu1, 2.0 - mu1), initial=warm)
        return d, _recover_primal(scheme, channels, config, gamma, d, settings)

    best = (dual, primal)
    g_a = imbalance(best)
    scale = max(float(np.max(primal.per_bs_power)), 1e-300)
    mu_a = float(dual.mus[0])
    mu_b = min(max(mu_a - np.sign(g_a) * 1e-3, lo), hi)
    if abs(g_a) <= 1e-11 * scale or mu_b == mu_a:
        return best
    try:
        pair_b = solve_split(mu_b, best[0].lambdas)
    except (InfeasibleError, NotConvergedError):
        return best
    g_b = imbalance(pair_b)
    if abs(g_b) < abs(g_a):
        best = pair_b
    for _ in range(40):
        if g_b == g_a:
            break
        mu_c = mu_b - g_b * (mu_b - mu_a) / (g_b - g_a)
        mu_c = min(max(mu_c, lo), hi)
        if abs(mu_c - mu_b) < 1e-14:
            break
        try:
            pair_c = solve_split(mu_c, best[0].lambdas)
        except (InfeasibleError, NotConvergedError):
            break
        g_c = imbalance(pair_c)
        if abs(g_c) < abs(imbalance(best)):
            best = pair_c
        mu_a, g_a, mu_b, g_b = mu_b, g_b, mu_c, g_c
        if abs(g_c) <= 1e-11 * scale:
            break
    return best


def solve_pair(scheme, channels: ChannelSet, config: SystemConfig, gamma,
               settings: SolverSettings | None = None, initial=None, mus=None,
               initial_mus=None):
    """Dual and recovered primal at a fixed target.

    With ``mus=None`` the coordinated and joint schemes optimize the noise
    split (golden section, then a power-balance polish).  ``initial_mus``
    short-circuits the golden stage with a known-good starting split: the
    dual objective is concave along the split, so its derivative (the per-BS
    power imbalance) has a unique root and the polish alone reaches the
    interior optimum; any failure falls back to the full search.  Raises
    InfeasibleError when the target cannot be met at any power."""
    scheme = Scheme(scheme)
    settings = settings or SolverSettings()
    if scheme is not Scheme.SCP and mus is None and initial_mus is not None:
        try:
            dual = solve_dual(scheme, channels, gamma, settings, mus=initial_mus,
                              initial=initial)
            primal = _recover_primal(scheme, channels, config, gamma, dual, settings)
            dual, primal = _polish_noise_split(scheme, channels, config, gamma,
                                               dual, primal, settings)
            imbalance = abs(float(primal.per_bs_power[0] - primal.per_bs_power[1]))
            if imbalance <= 1e-6 * float(np.max(primal.per_bs_power)):
                return dual, primal
        except (InfeasibleError, NotConvergedError):
            pass
    search = settings
    if scheme is not Scheme.SCP and mus is None:
        # the polish supersedes golden-section precision on the noise split
        search = replace(settings, mu_tolerance=max(settings.mu_tolerance, 0.02))
    dual = solve_dual(scheme, channels, gamma, search, mus=mus, initial=initial)
    primal = _recover_primal(scheme, channels, config, gamma, dual, settings)
    if scheme is not Scheme.SCP and mus is None:
        dual, primal = _polish_noise_split(scheme, channels, config, gamma,
                                           dual, primal, settings)
    return dual, primal


def solve_at_gamma(scheme, channels: ChannelSet, config: SystemConfig, gamma,
                   settings: SolverSettings | None = None, initial=None):
    """Dual plus recovered primal at a fixed target; raises InfeasibleError
    when the target cannot be met regardless of the power budget."""
    return solve_pair(scheme, channels, config, gamma, settings, initial=initial)


def gamma_upper_bound(channels: ChannelSet, config: SystemConfig) -> float:
    """Initial bisection bracket from a single-user matched-filter estimate;
    the bisection still extends the bracket while the top stays feasible."""
    stacked_norms = np.sum(np.abs(channels.stacked()) ** 2, axis=1)
    return ((1.0 + config.epsilon) * config.power * float(np.max(stacked_norms))
            / (channels.n_antennas * config.sigma2))


def max_min_sinr(scheme, channels: ChannelSet, config: SystemConfig,
                 settings: SolverSettings | None = None) -> MaxMinResult:
    """Largest common SINR supportable within the per-BS power budget.

    Feasibility of a trial target is decided dual-first (divergence of the
    multipliers is a fast infeasibility signal), then by recovering downlink
    powers and checking them against the budget.
    """
    scheme = Scheme(scheme)
    settings = settings or SolverSettings()
    budget = config.power * (1.0 + BUDGET_SLACK)
    warm = {"lam": None, "gamma": None, "mus": None}

    def attempt(gamma):
        initial = None
        if warm["lam"] is not None:
            # multipliers scale superlinearly in the target; a proportional
            # rescale is a good sweep starting point
            initial = warm["lam"] * (gamma / warm["gamma"])
        try:
            dual, primal = solve_pair(scheme, channels, config, gamma, settings,
                                      initial=initial, initial_mus=warm["mus"])
        except (InfeasibleError, NotConvergedError):
            return None
        warm["lam"], warm["gamma"], warm["mus"] = dual.lambdas, gamma, dual.mus
        if float(np.max(primal.per_bs_power)) > budget:
            return None
        return primal

    lo, best = 0.0, None
    hi = gamma_upper_bound(channels, config)
    for _ in range(60):
        top = attempt(hi)
        if top is None:
            break
        lo, best = hi, top
        hi *= 2.0
    else:
        raise NotConvergedError("max-min bracket kept extending; budget check ineffective")

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
