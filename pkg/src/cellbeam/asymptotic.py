"""Large-system limits: closed-form SINRs, powers, feasibility and loading.

When the antenna count N and the per-cell user count K grow together at a
fixed loading beta = K/N, the dual multipliers and downlink powers of every
scheme concentrate on constants, and the balanced SINR under the per-BS
budget P solves a scalar fixed-point equation

    gamma = (1/beta) / D(gamma),

where D collects the per-user resource costs: the own-cell term
1/(1+gamma), a scheme-dependent cross-cell term, and the power cost
sigma^2/P.  The module evaluates these limits, the effective-interference
feasibility tests, the optimal cell loading, the half-reuse (time division)
reference curves, the scalar resolvent-trace fixed points used as
validation oracles, and finite-N constructors for the asymptotically
optimal regularized zero-forcing beamformers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .channel import ChannelSet, SystemConfig
from .downlink import PrecodingSolution, assemble_solution
from .dual_uplink import Scheme
from .exceptions import InfeasibleError, NotConvergedError

__all__ = [
    "AsymptoticPoint",
    "LoadingRegime",
    "LoadingResult",
    "CURVE_HEADER",
    "effective_bandwidth_load",
    "export_curve",
    "lambda_bar",
    "p_bar",
    "gamma_star",
    "gamma_star_residual",
    "effective_interference",
    "is_feasible",
    "operating_point",
    "optimal_beta",
    "td_gamma_star",
    "td_rate",
    "t_fixed_point",
    "t_mcp_symmetric",
    "asymptotic_beamformers",
]

BETA_FLOOR = 1e-3   # lower end of the loading line search


@dataclass(frozen=True)
class AsymptoticPoint:
    """Limiting operating point of one scheme at (beta, epsilon, SNR)."""

    scheme: Scheme
    gamma_star: float
    lambda_bar: float
    p_bar: float
    big_p_bar: float
    feasible: bool


class LoadingRegime(str, enum.Enum):
    NOISE_LIMITED = "noise_limited"       # rate grows with loading forever
    INTERIOR_OPTIMUM = "interior_optimum"  # a finite loading maximizes rate

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class LoadingResult:
    """Outcome of the cell-loading optimization for one scheme.

    ``beta_star`` is ``inf`` in the noise-limited regime, where the
    normalized rate increases toward ``rate_at_star`` as loading grows.
    """

    beta_star: float
    rate_at_star: float
    regime: LoadingRegime

    def to_dict(self) -> dict:
        return {
            "beta_star": None if math.isinf(self.beta_star) else float(self.beta_star),
            "rate_at_star": float(self.rate_at_star),
            "regime": str(self.regime),
        }


def effective_bandwidth_load(scheme, gamma, epsilon) -> float:
    """Per-user effective bandwidth: own-cell cost gamma/(1+gamma) plus the
    scheme's cross-cell cost.  A target is supportable with unlimited power
    iff beta times this load stays below 1."""
    scheme = Scheme(scheme)
    own = gamma / (1.0 + gamma)
    if scheme is Scheme.SCP:
        return own + epsilon * gamma
    if scheme is Scheme.CBF:
        return own + epsilon * gamma / (1.0 + epsilon * gamma)
    return own


def lambda_bar(scheme, gamma, beta, epsilon) -> float | None:
    """Limiting dual multiplier, or None when the target is infeasible."""
    scheme = Scheme(scheme)
    if not (gamma > 0 and beta > 0 and epsilon >= 0):
        raise ValueError("need gamma > 0, beta > 0, epsilon >= 0")
    if beta * effective_bandwidth_load(scheme, gamma, epsilon) >= 1.0:
        return None
    own = 1.0 - beta * gamma / (1.0 + gamma)
    if scheme is Scheme.SCP:
        return gamma / own
    if scheme is Scheme.CBF:
        return gamma / (1.0 - beta * effective_bandwidth_load(scheme, gamma, epsilon))
    return gamma / ((1.0 + epsilon) * own)


def p_bar(scheme, gamma, beta, epsilon, sigma2=1.0) -> float | None:
    """Limiting per-user downlink power, or None when infeasible.

    Equals lambda_bar * sigma2 for the coordinated and joint schemes; for
    single-cell processing the other-cell interference inflates it to
    sigma2 * gamma / (1 - beta * (gamma/(1+gamma) + epsilon*gamma))."""
    scheme = Scheme(scheme)
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    lam = lambda_bar(scheme, gamma, beta, epsilon)
    if lam is None:
        return None
    if scheme is Scheme.SCP:
        return sigma2 * gamma / (1.0 - beta * effective_bandwidth_load(scheme, gamma, epsilon))
    return lam * sigma2


def _power_cost(scheme, epsilon, snr) -> float:
    """sigma^2/P term entering the balanced-SINR equation (the joint scheme
    enjoys a (1+epsilon) combining gain)."""
    if Scheme(scheme) is Scheme.MCP:
        return 1.0 / ((1.0 + epsilon) * snr)
    return 1.0 / snr


def _denominator(scheme, gamma, epsilon, snr) -> float:
    scheme = Scheme(scheme)
    base = _power_cost(scheme, epsilon, snr) + 1.0 / (1.0 + gamma)
    if scheme is Scheme.SCP:
        return base + epsilon
    if scheme is Scheme.CBF:
        return base + epsilon / (1.0 + epsilon * gamma)
    return base


def gamma_star_residual(scheme, gamma, beta, epsilon, snr) -> float:
    """Residual gamma - (1/beta)/D(gamma) of the defining fixed point."""
    return gamma - 1.0 / (beta * _denominator(scheme, gamma, epsilon, snr))


def _positive_quadratic_root(a2, b, c) -> float:
    """Positive root of a2*x^2 + b*x - c = 0 with a2, c > 0 (cancellation
    free for either sign of b)."""
    disc = math.sqrt(b * b + 4.0 * a2 * c)
    if b >= 0:
        return 2.0 * c / (b + disc)
    return (disc - b) / (2.0 * a2)


def _newton_polish(scheme, gamma, beta, epsilon, snr, steps=3) -> float:
    for _ in range(steps):
        d = _denominator(scheme, gamma, epsilon, snr)
        if Scheme(scheme) is Scheme.CBF:
            dprime = -(epsilon ** 2) / (1.0 + epsilon * gamma) ** 2 - 1.0 / (1.0 + gamma) ** 2
        else:
            dprime = -1.0 / (1.0 + gamma) ** 2
        f = gamma - 1.0 / (beta * d)
        fprime = 1.0 + dprime / (beta * d * d)
        step = f / fprime
        if not math.isfinite(step):
            break
        gamma -= step
        if abs(step) < 1e-15 * max(1.0, gamma):
            break
    return gamma


def gamma_star(scheme, beta, epsilon, snr) -> float:
    """Maximum balanced SINR under the per-BS budget in the limit.

    Single-cell and joint transmission reduce to explicit quadratics; the
    coordinated scheme's cubic is solved by bracketed root finding on its
    strictly increasing residual.  All roots are polished to satisfy the
    fixed point to about 1e-12.
    """
    scheme = Scheme(scheme)
    if not (beta > 0 and snr > 0 and epsilon >= 0):
        raise ValueError("need beta > 0, snr > 0, epsilon >= 0")
    if scheme is Scheme.CBF:
        hi = gamma_star(Scheme.MCP, beta, epsilon, snr)
        if gamma_star_residual(scheme, hi, beta, epsilon, snr) <= 0:
            root = hi
        else:
            root = brentq(lambda g: gamma_star_residual(scheme, g, beta, epsilon, snr),
                          0.0, hi, xtol=1e-14, rtol=8.9e-16)
    else:
        eta = _power_cost(scheme, epsilon, snr) + (epsilon if scheme is Scheme.SCP else 0.0)
        root = _positive_quadratic_root(eta, eta + 1.0 - 1.0 / beta, 1.0 / beta)
    return _newton_polish(scheme, root, beta, epsilon, snr)


def effective_interference(scheme, snr, epsilon, gamma, beta) -> float:
    """Scalar interference summary at a target SINR: the target is feasible
    under the budget iff snr (times 1+epsilon for joint transmission)
    exceeds gamma times this quantity... expressed as the ratio test in
    :func:`is_feasible`."""
    scheme = Scheme(scheme)
    own = snr / (1.0 + gamma)
    if scheme is Scheme.SCP:
        cross = epsilon * snr
    elif scheme is Scheme.CBF:
        cross = epsilon * snr / (1.0 + epsilon * gamma)
    else:
        cross = epsilon * snr / (1.0 + gamma)
    return beta * (1.0 + own + cross)


def is_feasible(scheme, gamma, beta, epsilon, snr=None) -> bool:
    """Whether a target SINR is supportable in the large-system limit.

    With ``snr=None`` this is the unlimited-power effective-bandwidth test
    beta * load < 1; otherwise the power-constrained ratio test."""
    scheme = Scheme(scheme)
    if snr is None:
        return beta * effective_bandwidth_load(scheme, gamma, epsilon) < 1.0
    i_eff = effective_interference(scheme, snr, epsilon, gamma, beta)
    gain = (1.0 + epsilon) if scheme is Scheme.MCP else 1.0
    return gain * snr / i_eff > gamma


def operating_point(scheme, beta, epsilon, snr, sigma2=1.0) -> AsymptoticPoint:
    """Limiting max-min operating point (gamma*, lambda_bar, p_bar, beta*p_bar)."""
    scheme = Scheme(scheme)
    gstar = gamma_star(scheme, beta, epsilon, snr)
    lam = lambda_bar(scheme, gstar, beta, epsilon)
    per_user = p_bar(scheme, gstar, beta, epsilon, sigma2)
    feasible = lam is not None and per_user is not None
    return AsymptoticPoint(scheme=scheme, gamma_star=gstar,
                           lambda_bar=lam if feasible else math.inf,
                           p_bar=per_user if feasible else math.inf,
                           big_p_bar=beta * per_user if feasible else math.inf,
                           feasible=feasible)


def _rate(scheme, beta, epsilon, snr) -> float:
    return beta * math.log1p(gamma_star(scheme, beta, epsilon, snr))


def _noise_limited_rate(scheme, epsilon, snr) -> float:
    """Supremum of the normalized rate as loading grows without bound."""
    scheme = Scheme(scheme)
    cross_at_zero = 0.0 if scheme is Scheme.MCP else epsilon
    return 1.0 / (1.0 + cross_at_zero + _power_cost(scheme, epsilon, snr))


def _golden_max(fun, lo, hi, tol):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = fun(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = fun(x1)
    x = 0.5 * (lo + hi)
    return x, fun(x)


def optimal_beta(scheme, snr, epsilon, beta_tolerance=1e-8) -> LoadingResult:
    """Cell loading maximizing the normalized rate beta * log(1 + gamma*).

    When noise (plus cross-cell leakage) dominates, the rate increases in
    beta without bound and the result is tagged noise-limited; otherwise the
    unimodal rate curve is maximized by a golden-section line search over a
    bracket grown by doubling.
    """
    scheme = Scheme(scheme)
    if snr <= 0:
        raise ValueError("snr must be positive")
    a = 1.0 / snr
    if scheme is Scheme.SCP:
        unbounded = epsilon + a >= 1.0
    elif scheme is Scheme.CBF:
        unbounded = a + epsilon - 2.0 * epsilon ** 2 - 1.0 >= 0.0
    else:
        unbounded = a >= 1.0 + epsilon
    if unbounded:
        return LoadingResult(beta_star=math.inf,
                             rate_at_star=_noise_limited_rate(scheme, epsilon, snr),
                             regime=LoadingRegime.NOISE_LIMITED)
    hi = 1.0
    while _rate(scheme, 2.0 * hi, epsilon, snr) >= _rate(scheme, hi, epsilon, snr):
        hi *= 2.0
        if hi > 2 ** 40:
            raise NotConvergedError("loading bracket kept growing in a bounded regime")
    beta_star, rate = _golden_max(lambda b: _rate(scheme, b, epsilon, snr),
                                  BETA_FLOOR, 2.0 * hi, beta_tolerance)
    return LoadingResult(beta_star=beta_star, rate_at_star=rate,
                         regime=LoadingRegime.INTERIOR_OPTIMUM)


def td_gamma_star(beta, snr) -> float:
    """Balanced SINR of half reuse: each BS gets its own slot at power 2P,
    and ``beta`` is the equivalent full-reuse loading (half the users served
    per slot-owning cell)."""
    if not (beta > 0 and snr > 0):
        raise ValueError("need beta > 0, snr > 0")
    a = 1.0 / snr
    return _positive_quadratic_root(a, a + 2.0 - 1.0 / beta, 1.0 / beta)


def td_rate(beta, snr) -> float:
    """Normalized rate of the half-reuse scheme at equivalent loading beta."""
    return beta * math.log1p(td_gamma_star(beta, snr))


def _damped_scalar_fixed_point(g, start, tol=1e-12, max_iter=200_000):
    t = start
    for _ in range(max_iter):
        new = 0.5 * t + 0.5 * g(t)
        if abs(new - t) <= tol * max(1.0, abs(new)):
            return new
        t = new
    raise NotConvergedError("scalar resolvent fixed point stalled", partial=t)


def t_fixed_point(scheme, rho, lam, mus, beta, epsilon):
    """Resolvent-trace fixed point(s) at argument -rho.

    Scalar for the per-BS schemes (``lam`` is the own-cell multiplier, or an
    (own, other) pair for the coordinated scheme); for joint transmission
    ``lam`` and ``mus`` are pairs and a coupled 2-vector (t1, t2) is
    returned.  At the limiting operating points these satisfy
    lambda_bar * t = gamma (with the (1+epsilon) combining factor for joint
    transmission).
    """
    scheme = Scheme(scheme)
    if rho <= 0:
        raise ValueError("rho must be positive")
    if scheme is Scheme.SCP:
        lam = float(lam if np.isscalar(lam) else np.asarray(lam).ravel()[0])
        return _damped_scalar_fixed_point(
            lambda t: 1.0 / (rho + beta * lam / (1.0 + lam * t)), 1.0 / rho)
    if scheme is Scheme.CBF:
        l1, l2 = (float(lam), float(lam)) if np.isscalar(lam) else (float(lam[0]), float(lam[1]))
        return _damped_scalar_fixed_point(
            lambda t: 1.0 / (rho + beta * l1 / (1.0 + l1 * t)
                             + beta * epsilon * l2 / (1.0 + epsilon * l2 * t)), 1.0 / rho)
    l1, l2 = float(lam[0]), float(lam[1])
    m1, m2 = float(mus[0]), float(mus[1])
    t = np.array([1.0 / rho, 1.0 / rho])
    for _ in range(200_000):
        t1, t2 = t
        new1 = 1.0 / (rho
                      + beta * (l1 / m1) / (1.0 + (l1 / m1) * t1 + (epsilon / m2) * l1 * t2)
                      + epsilon * beta * (l2 / m1) / (1.0 + epsilon * (l2 / m1) * t1 + (l2 / m2) * t2))
        new2 = 1.0 / (rho
                      + beta * epsilon * (l1 / m2) / (1.0 + (l1 / m1) * t1 + epsilon * (l1 / m2) * t2)
                      + beta * (l2 / m2) / (1.0 + (epsilon / m1) * l2 * t1 + (l2 / m2) * t2))
        new = 0.5 * t + 0.5 * np.array([new1, new2])
        if np.max(np.abs(new - t)) <= 1e-12 * max(1.0, float(np.max(np.abs(new)))):
            return float(new[0]), float(new[1])
        t = new
    raise NotConvergedError("coupled resolvent fixed point stalled", partial=t)


def t_mcp_symmetric(rho, mu, lam, beta, epsilon) -> float:
    """Scalar reduction of the joint-transmission resolvent trace when both
    cells share one multiplier and one noise level."""
    return _damped_scalar_fixed_point(
        lambda t: 1.0 / (rho + (1.0 + epsilon) * beta * lam / (mu + (1.0 + epsilon) * lam * t)),
        1.0 / rho)


CURVE_HEADER = "scheme,beta,epsilon,snr_db,gamma_star,rate,feasible"


def export_curve(schemes, beta_grid, epsilon_grid, snr_db_grid) -> str:
    """Closed-form curves as CSV text (one row per scheme and grid point;
    ``rate`` is the normalized rate in nats)."""
    lines = [CURVE_HEADER]
    for scheme in schemes:
        name = str(Scheme(scheme))
        for beta in beta_grid:
            for epsilon in epsilon_grid:
                for snr_db in snr_db_grid:
                    snr = 10.0 ** (snr_db / 10.0)
                    gstar = gamma_star(name, beta, epsilon, snr)
                    rate = beta * math.log1p(gstar)
                    lines.append(",".join([
                        name, repr(float(beta)), repr(float(epsilon)),
                        repr(float(snr_db)), repr(float(gstar)),
                        repr(float(rate)), "true"]))
    return "\n".join(lines) + "\n"


def asymptotic_beamformers(scheme, channels: ChannelSet, gamma,
                           config: SystemConfig) -> PrecodingSolution:
    """Finite-N precoder built from the limiting regularizer and powers.

    Directions are (generalized) regularized zero-forcing: the matched
    filter through the inverse of identity plus lambda_bar/N times the Gram
    matrix of the regularizing channels (own cell; both cells as seen from
    the serving BS; or all stacked channels).  Every user gets power
    p_bar / N.  For joint transmission the realized per-BS split is random,
    so both powers are scaled by a common factor if either budget is
    exceeded, preserving directions and balance.
    """
    scheme = Scheme(scheme)
    beta = config.beta
    lam = lambda_bar(scheme, gamma, beta, config.epsilon)
    per_user = p_bar(scheme, gamma, beta, config.epsilon, config.sigma2)
    if lam is None or per_user is None:
        raise InfeasibleError(f"target gamma={gamma} infeasible at beta={beta}, "
                              f"epsilon={config.epsilon}")
    k, n = channels.n_users, channels.n_antennas
    if scheme is Scheme.MCP:
        rows = channels.stacked()
        a = (lam / n) * (rows.conj().T @ rows)
        a[np.diag_indices_from(a)] += 1.0
        dirs = np.linalg.solve(a, rows.conj().T).T
    else:
        dirs = np.empty((2 * k, n), dtype=np.complex128)
        for cell in (0, 1):
            served = slice(cell * k, (cell + 1) * k)
            reg = channels.block(cell, cell) if scheme is Scheme.SCP else channels.bs_view(cell)
            a = (lam / n) * (reg.conj().T @ reg)
            a[np.diag_indices_from(a)] += 1.0
            dirs[served] = np.linalg.solve(a, channels.block(cell, cell).conj().T).T
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    powers = np.full(2 * k, per_user)
    solution = assemble_solution(scheme, channels, dirs, powers, gamma, config.sigma2)
    if scheme is Scheme.MCP:
        worst = float(np.max(solution.per_bs_power))
        if worst > config.power:
            powers = powers * (config.power / worst)
            solution = assemble_solution(scheme, channels, dirs, powers, gamma, config.sigma2)
    return solution
