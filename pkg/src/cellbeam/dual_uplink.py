"""Virtual-uplink duals of the downlink SINR-constrained power problems.

For a target SINR ``gamma`` each cooperation scheme has a dual uplink in
which user (k, c) transmits with power ``lambda[u] / N`` toward an MMSE
receiver, and the optimal multipliers solve a fixed-point equation

    lambda_u = gamma * N / qdef_u(lambda),

where ``qdef_u`` is the quadratic form of user u's channel through the
inverse of the interference-plus-noise matrix that excludes user u.  The
right-hand side is a standard interference function, so plain sweeps
converge from any starting point whenever the target is feasible; from the
zero vector the iterates increase monotonically to the fixed point.

Scheme differences are confined to which channel rows enter the matrix and
which noise it carries:

* single-cell: own-cell rows only, unit noise, one decoupled fixed point
  per cell;
* coordinated: all 2K rows as seen from the serving BS, noise ``mu[j]``
  at BS j with ``mu[0] + mu[1] = 2``;
* multicell: stacked 2N-antenna rows, block noise diag(mu[0] I, mu[1] I).

The sweeps factor each interference-plus-noise matrix once and remove each
user's own rank-one term with the matrix inversion lemma; results agree
with per-user direct solves to rounding error.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .exceptions import InfeasibleError, NotConvergedError

__all__ = [
    "Scheme",
    "SolverSettings",
    "DualSolution",
    "scp_dual_powers",
    "scp_mmse_direction",
    "cbf_dual_powers",
    "cbf_mu_search",
    "mcp_dual_powers",
    "mcp_mu_search",
    "uplink_sinr",
    "solve_dual",
    "scp_interference_map",
    "cbf_interference_map",
    "mcp_interference_map",
]

MU_FLOOR = 1e-3        # noise-split search bracket is [MU_FLOOR, 2 - MU_FLOOR]
DIVERGENCE_FACTOR = 1e6
STALL_SWEEPS = 50


class Scheme(str, enum.Enum):
    """Cooperation level between the two base stations."""

    SCP = "scp"   # each BS serves its own users, blind to the other cell
    CBF = "cbf"   # per-cell data, shared CSI: interference-aware beamforming
    MCP = "mcp"   # joint transmission from both BSs over 2N antennas

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SolverSettings:
    """Numerical knobs shared by the dual and primal iterations.

    ``tolerance`` is the relative fixed-point residual, ``damping`` mixes the
    previous iterate into each sweep (0 = undamped), ``mu_tolerance`` is the
    bracket width at which the noise-split search stops and
    ``gamma_tolerance`` the absolute bracket width for max-min bisection.
    """

    tolerance: float = 1e-10
    max_iterations: int = 10_000
    damping: float = 0.0
    mu_tolerance: float = 1e-9
    gamma_tolerance: float = 1e-6

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not 0 <= self.damping < 1:
            raise ValueError("damping must lie in [0, 1)")


@dataclass(frozen=True)
class DualSolution:
    """Converged dual-uplink multipliers for one scheme at one target.

    ``lambdas`` are normalized so user u transmits ``lambdas[u] / N`` on the
    virtual uplink.  ``dual_objective`` is ``sum(lambdas) / N``; multiply by
    the noise power to get the dual objective of the coordinated and
    multicell problems in power units.
    """

    lambdas: np.ndarray
    mus: tuple[float, float]
    dual_objective: float
    iterations: int
    converged: bool
    residual: float
    gamma_target: float

    def to_dict(self) -> dict:
        return {
            "lambdas": [float(v) for v in self.lambdas],
            "mus": [float(self.mus[0]), float(self.mus[1])],
            "dual_objective": float(self.dual_objective),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "residual": float(self.residual),
            "gamma_target": float(self.gamma_target),
        }


def _downdate(q_full, weights, n_antennas):
    """Remove each user's own rank-one term from its quadratic form via the
    matrix inversion lemma; the denominator lies in (0, 1] exactly."""
    denom = 1.0 - (weights / n_antennas) * q_full
    return q_full / np.maximum(denom, 1e-300)


def _scp_quadforms(cell_rows):
    """Closure computing h_u inv(A_u) h_u^H for one cell at unit noise; the
    full matrix is factored once per sweep and own terms downdated."""
    rows = np.ascontiguousarray(cell_rows)
    rows_h = rows.conj().T.copy()
    k, n = rows.shape

    def qdef(lam):
        a = (rows_h * (lam / n)) @ rows
        a.flat[::n + 1] += 1.0
        v = np.linalg.solve(a, rows_h)
        q = np.einsum("ij,ji->i", rows, v).real
        return _downdate(q, lam, n)

    return qdef


def _cbf_quadforms(channels: ChannelSet, mus):
    """Closure for the coordinated sweep: both per-BS matrices (all 2K rows
    seen from each BS, noise mu[j]) are factored as one batched solve."""
    k, n = channels.n_users, channels.n_antennas
    rows = np.stack([channels.bs_view(0), channels.bs_view(1)])
    rows_h = np.ascontiguousarray(rows.conj().transpose(0, 2, 1))
    noise = np.asarray(mus, dtype=float)
    diag = np.arange(n)

    def qdef(lam):
        a = (rows_h * (lam / n)) @ rows
        a[:, diag, diag] += noise[:, None]
        v = np.linalg.solve(a, rows_h)
        q_both = np.einsum("bki,bik->bk", rows, v).real
        q = np.concatenate([q_both[0, :k], q_both[1, k:]])
        return _downdate(q, lam, n)

    return qdef


def _mcp_quadforms(channels: ChannelSet, mus):
    """Closure for the joint-transmission sweep on stacked 2N channels with
    block noise diag(mu[0] I, mu[1] I)."""
    n = channels.n_antennas
    rows = channels.stacked()
    rows_h = rows.conj().T.copy()
    noise = np.repeat(np.asarray(mus, dtype=float), n)

    def qdef(lam):
        a = (rows_h * (lam / n)) @ rows
        a.flat[::2 * n + 1] += noise
        v = np.linalg.solve(a, rows_h)
        q = np.einsum("ij,ji->i", rows, v).real
        return _downdate(q, lam, n)

    return qdef


def scp_interference_map(cell_rows, gamma, lambdas):
    """One sweep of the single-cell fixed point on a K x N channel block."""
    rows = np.asarray(cell_rows, dtype=np.complex128)
    return gamma * rows.shape[1] / _scp_quadforms(rows)(np.asarray(lambdas, dtype=float))


def cbf_interference_map(channels: ChannelSet, gamma, mus, lambdas):
    """One sweep of the coordinated fixed point over all 2K users."""
    n = channels.n_antennas
    return gamma * n / _cbf_quadforms(channels, mus)(np.asarray(lambdas, dtype=float))


def mcp_interference_map(channels: ChannelSet, gamma, mus, lambdas):
    """One sweep of the joint-transmission fixed point on stacked channels."""
    n = channels.n_antennas
    return gamma * n / _mcp_quadforms(channels, mus)(np.asarray(lambdas, dtype=float))


def _run_fixed_point(int_map, size, gamma, settings, initial, lam_cap):
    """Iterate ``lambda <- int_map(lambda)`` with damping until the relative
    change falls below tolerance.  Raises InfeasibleError when the iterates
    blow past ``lam_cap`` or keep growing while the residual has stalled for
    STALL_SWEEPS sweeps, NotConvergedError on sweep-budget exhaustion."""
    if initial is None:
        lam = np.zeros(size)
    else:
        lam = np.array(initial, dtype=float)
        if lam.shape != (size,) or np.any(lam < 0):
            raise ValueError("initial multipliers must be a nonnegative vector of matching size")
    d = settings.damping
    best_residual = np.inf
    stall = 0
    residual = np.inf
    for it in range(1, settings.max_iterations + 1):
        target = int_map(lam)
        new = target if d == 0.0 else (1.0 - d) * target + d * lam
        residual = float(np.max(np.abs(new - lam) / np.maximum(np.abs(new), 1e-30)))
        grew = float(np.sum(new)) > float(np.sum(lam))
        lam = new
        if float(np.max(lam)) > lam_cap:
            raise InfeasibleError(
                f"dual powers exceeded the divergence cap at sweep {it}; "
                f"target gamma={gamma} is infeasible")
        if residual <= settings.tolerance:
            return lam, it, residual
        if residual < best_residual * (1.0 - 1e-12):
            best_residual = residual
            stall = 0
        else:
            stall = stall + 1 if grew else 0
            if stall >= STALL_SWEEPS:
                raise InfeasibleError(
                    f"dual powers keep growing with a stalled residual "
                    f"({residual:.3e}) at sweep {it}; gamma={gamma} looks infeasible")
    raise NotConvergedError(
        f"dual fixed point missed tolerance {settings.tolerance} within "
        f"{settings.max_iterations} sweeps (residual {residual:.3e})",
        partial=lam, residual=residual)


def _lam_cap(gamma, n_antennas, own_norms_sq):
    smallest = float(np.min(own_norms_sq))
    if smallest <= 0:
        raise ValueError("every user needs a nonzero channel row")
    return DIVERGENCE_FACTOR * gamma * n_antennas / smallest


def _check_gamma(gamma):
    if not gamma > 0:
        raise ValueError("gamma must be positive")


def scp_dual_powers(cell_rows, gamma, settings=None, initial=None) -> DualSolution:
    """Dual multipliers of one cell's power-minimizing beamforming problem.

    ``cell_rows`` is the K x N block of own-cell channels.  The solution does
    not depend on the other cell: interference from there enters the primal
    only through the per-user noise terms.
    """
    settings = settings or SolverSettings()
    _check_gamma(gamma)
    rows = np.asarray(cell_rows, dtype=np.complex128)
    k, n = rows.shape
    cap = _lam_cap(gamma, n, np.sum(np.abs(rows) ** 2, axis=1))
    qdef = _scp_quadforms(rows)
    lam, iters, residual = _run_fixed_point(
        lambda l: gamma * n / qdef(l), k, gamma, settings, initial, cap)
    return DualSolution(lambdas=lam, mus=(1.0, 1.0), dual_objective=float(lam.sum() / n),
                        iterations=iters, converged=True, residual=residual,
                        gamma_target=float(gamma))


def scp_mmse_direction(cell_rows, lambdas, user) -> np.ndarray:
    """Unit-norm MMSE receive direction for one user of a single cell.

    Collinear with inv(I + sum_{k' != user} (lambda_k'/N) h^H h) h_user^H.
    """
    rows = np.asarray(cell_rows, dtype=np.complex128)
    k, n = rows.shape
    lam = np.asarray(lambdas, dtype=float)
    if np.any(lam < 0):
        raise ValueError("lambdas must be nonnegative")
    weights = lam.copy()
    weights[user] = 0.0
    a = (rows.conj().T * (weights / n)) @ rows
    a[np.diag_indices_from(a)] += 1.0
    direction = np.linalg.solve(a, rows[user].conj())
    return direction / np.linalg.norm(direction)


def cbf_dual_powers(channels: ChannelSet, gamma, mus, settings=None, initial=None) -> DualSolution:
    """Dual multipliers of the coordinated two-cell problem at a fixed noise
    split (mu[0], mu[1])."""
    settings = settings or SolverSettings()
    _check_gamma(gamma)
    if min(mus) <= 0:
        raise ValueError("both mu values must be positive")
    k, n = channels.n_users, channels.n_antennas
    own = np.concatenate([channels.block(c, c) for c in (0, 1)], axis=0)
    cap = _lam_cap(gamma, n, np.sum(np.abs(own) ** 2, axis=1))
    qdef = _cbf_quadforms(channels, mus)
    lam, iters, residual = _run_fixed_point(
        lambda l: gamma * n / qdef(l), 2 * k, gamma, settings, initial, cap)
    return DualSolution(lambdas=lam, mus=(float(mus[0]), float(mus[1])),
                        dual_objective=float(lam.sum() / n), iterations=iters,
                        converged=True, residual=residual, gamma_target=float(gamma))


def mcp_dual_powers(channels: ChannelSet, gamma, mus, settings=None, initial=None) -> DualSolution:
    """Dual multipliers of the joint-transmission problem at a fixed noise
    split, using stacked 2N-antenna channels."""
    settings = settings or SolverSettings()
    _check_gamma(gamma)
    if min(mus) <= 0:
        raise ValueError("both mu values must be positive")
    k, n = channels.n_users, channels.n_antennas
    stacked = channels.stacked()
    cap = _lam_cap(gamma, n, np.sum(np.abs(stacked) ** 2, axis=1))
    qdef = _mcp_quadforms(channels, mus)
    lam, iters, residual = _run_fixed_point(
        lambda l: gamma * n / qdef(l), 2 * k, gamma, settings, initial, cap)
    return DualSolution(lambdas=lam, mus=(float(mus[0]), float(mus[1])),
                        dual_objective=float(lam.sum() / n), iterations=iters,
                        converged=True, residual=residual, gamma_target=float(gamma))


def _mu_search(solve_at, settings, initial):
    """Golden-section maximization of the dual objective over the noise
    split mu[0] in [MU_FLOOR, 2 - MU_FLOOR] with mu[1] = 2 - mu[0].

    The inner fixed point at each probe warm-starts from the multipliers of
    the nearest previously evaluated split.  The dual objective is concave
    along the split (partial maximum of a linear program), so the search is
    certified once one feasible point is known.
    """
    lo, hi = MU_FLOOR, 2.0 - MU_FLOOR
    evaluated: dict[float, DualSolution | None] = {}
    carried = {"lam": initial}

    def objective(mu1):
        if mu1 in evaluated:
            sol = evaluated[mu1]
            return -np.inf if sol is None else sol.dual_objective
        start = carried["lam"]
        feasible = [(abs(m - mu1), s) for m, s in evaluated.items() if s is not None]
        if feasible:
            start = min(feasible)[1].lambdas
        try:
            sol = solve_at((mu1, 2.0 - mu1), start)
        except (InfeasibleError, NotConvergedError):
            sol = None
        evaluated[mu1] = sol
        return -np.inf if sol is None else sol.dual_objective

    if objective(1.0) == -np.inf:
        # the symmetric split is the asymptotic optimum; scan before giving up
        if all(objective(m) == -np.inf for m in np.linspace(lo, hi, 9)):
            raise InfeasibleError("target gamma infeasible for every sampled noise split")

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = objective(x1), objective(x2)
    while hi - lo > settings.mu_tolerance:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = objective(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = objective(x1)
    best_mu = max((m for m, s in evaluated.items() if s is not None),
                  key=lambda m: evaluated[m].dual_objective)
    return (best_mu, 2.0 - best_mu), evaluated[best_mu]


def cbf_mu_search(channels: ChannelSet, gamma, settings=None, initial=None):
    """Optimal noise split and dual solution for the coordinated scheme."""
    settings = settings or SolverSettings()
    return _mu_search(
        lambda mus, init: cbf_dual_powers(channels, gamma, mus, settings, initial=init),
        settings, initial)


def mcp_mu_search(channels: ChannelSet, gamma, settings=None, initial=None):
    """Optimal noise split and dual solution for joint transmission."""
    settings = settings or SolverSettings()
    return _mu_search(
        lambda mus, init: mcp_dual_powers(channels, gamma, mus, settings, initial=init),
        settings, initial)


def uplink_sinr(scheme, channels: ChannelSet, lambdas, mus, user, cell) -> float:
    """Virtual-uplink SINR of one user at the given multipliers.

    Evaluated through a direct per-user matrix solve, independent of the
    shared-factorization path used inside the sweeps.
    """
    scheme = Scheme(scheme)
    k, n = channels.n_users, channels.n_antennas
    lam = np.asarray(lambdas, dtype=float)
    u = cell * k + user
    if scheme is Scheme.SCP:
        rows = channels.block(cell, cell)
        weights = lam[cell * k:(cell + 1) * k].copy()
        own_idx, own_lam = user, weights[user]
        noise = np.ones(n)
    elif scheme is Scheme.CBF:
        rows = channels.bs_view(cell)
        weights = lam.copy()
        own_idx, own_lam = u, weights[u]
        noise = np.full(n, float(mus[cell]))
    else:
        rows = channels.stacked()
        weights = lam.copy()
        own_idx, own_lam = u, weights[u]
        noise = np.repeat(np.asarray(mus, dtype=float), n)
    weights[own_idx] = 0.0
    a = (rows.conj().T * (weights / n)) @ rows
    a[np.diag_indices_from(a)] += noise
    own = rows[own_idx]
    qdef = float(np.real(own @ np.linalg.solve(a, own.conj())))
    return own_lam / n * qdef


def solve_dual(scheme, channels: ChannelSet, gamma, settings=None, mus=None, initial=None) -> DualSolution:
    """Solve the dual of any scheme at one target, returning 2K multipliers.

    For the single-cell scheme this runs the two decoupled per-cell fixed
    points.  For the others a fixed noise split may be supplied; with
    ``mus=None`` the split is optimized.
    """
    scheme = Scheme(scheme)
    settings = settings or SolverSettings()
    k = channels.n_users
    if scheme is Scheme.SCP:
        parts = []
        for cell in (0, 1):
            init = None if initial is None else initial[cell * k:(cell + 1) * k]
            parts.append(scp_dual_powers(channels.block(cell, cell), gamma, settings, init))
        lam = np.concatenate([p.lambdas for p in parts])
        return DualSolution(lambdas=lam, mus=(1.0, 1.0),
                            dual_objective=float(lam.sum() / channels.n_antennas),
                            iterations=max(p.iterations for p in parts),
                            converged=all(p.converged for p in parts),
                            residual=max(p.residual for p in parts),
                            gamma_target=float(gamma))
    if scheme is Scheme.CBF:
        if mus is not None:
            return cbf_dual_powers(channels, gamma, mus, settings, initial)
        return cbf_mu_search(channels, gamma, settings, initial)[1]
    if mus is not None:
        return mcp_dual_powers(channels, gamma, mus, settings, initial)
    return mcp_mu_search(channels, gamma, settings, initial)[1]
