import math

import numpy as np
import pytest

from cellbeam import (InfeasibleError, LoadingRegime, SystemConfig,
                      asymptotic_beamformers, effective_bandwidth_load,
                      effective_interference, gamma_star, gamma_star_residual,
                      is_feasible, lambda_bar, operating_point, optimal_beta, p_bar,
                      sample_channels, t_fixed_point, t_mcp_symmetric, td_gamma_star,
                      td_rate)


def test_lambda_bar_values():
    assert np.isclose(lambda_bar("scp", 1.0, 0.5, 0.3), 4.0 / 3.0, rtol=1e-12)
    assert np.isclose(lambda_bar("mcp", 1.0, 0.5, 1.0), 2.0 / 3.0, rtol=1e-12)
    for gamma in (0.3, 1.0, 2.5):
        for beta in (0.25, 0.75, 1.5):
            cbf = lambda_bar("cbf", gamma, beta, 0.0)
            scp = lambda_bar("scp", gamma, beta, 0.0)
            if cbf is None:
                assert scp is None
            else:
                assert np.isclose(cbf, scp, rtol=1e-12)


def test_lambda_bar_infeasible_is_none():
    # boundary: beta*(gamma/(1+gamma) + eps*gamma) = 1 exactly
    assert lambda_bar("scp", 1.0, 1.0, 0.5) is None
    assert p_bar("scp", 1.0, 1.0, 0.5) is None


def test_p_bar_values():
    assert np.isclose(p_bar("scp", 1.0, 0.5, 0.5, 1.0), 2.0, rtol=1e-12)
    for scheme in ("cbf", "mcp"):
        lam = lambda_bar(scheme, 0.8, 0.6, 0.4)
        assert np.isclose(p_bar(scheme, 0.8, 0.6, 0.4, 2.5), lam * 2.5, rtol=1e-12)
    assert np.isclose(p_bar("mcp", 0.7, 0.5, 0.0, 1.0),
                      p_bar("scp", 0.7, 0.5, 0.0, 1.0), rtol=1e-12)


def test_gamma_star_closed_form_regression():
    assert abs(gamma_star("scp", 1.0, 0.0, 10.0) - (-1 + math.sqrt(41)) / 2) < 1e-9
    assert abs(gamma_star("mcp", 1.0, 1.0, 10.0) - 4.0) < 1e-9
    assert abs(gamma_star("cbf", 1.0, 1.0, 10.0) - (-11 + math.sqrt(161)) / 2) < 1e-9


def test_gamma_star_residual_on_grid():
    for scheme in ("scp", "cbf", "mcp"):
        for beta in (0.25, 1.0, 2.0):
            for eps in (0.0, 0.5, 1.0):
                for snr in (1.0, 10.0, 100.0):
                    g = gamma_star(scheme, beta, eps, snr)
                    assert abs(gamma_star_residual(scheme, g, beta, eps, snr)) <= 1e-12


def test_gamma_star_strict_ordering_with_cross_gain():
    for beta in (0.5, 1.0, 2.0):
        for eps in (0.1, 0.5, 1.0):
            for snr in (1.0, 10.0, 100.0):
                s = gamma_star("scp", beta, eps, snr)
                c = gamma_star("cbf", beta, eps, snr)
                m = gamma_star("mcp", beta, eps, snr)
                assert s < c < m


def test_gamma_star_monotonicity():
    betas = np.linspace(0.25, 2.0, 8)
    epss = np.linspace(0.05, 1.5, 8)
    for scheme in ("scp", "cbf"):
        gb = [gamma_star(scheme, b, 0.5, 10.0) for b in betas]
        assert np.all(np.diff(gb) < 0)
        ge = [gamma_star(scheme, 1.0, e, 10.0) for e in epss]
        assert np.all(np.diff(ge) < 0)
    gm = [gamma_star("mcp", 1.0, e, 10.0) for e in epss]
    assert np.all(np.diff(gm) > 0)
    gmb = [gamma_star("mcp", b, 0.5, 10.0) for b in betas]
    assert np.all(np.diff(gmb) < 0)


def test_high_snr_limit_approaches_bandwidth_boundary():
    # root of beta*(g/(1+g) + eps*g) = 1 at beta=0.8, eps=0.4
    beta, eps = 0.8, 0.4
    coeffs = [beta * eps, beta * (1 + eps) - 1, -1.0]
    boundary = max(np.roots(coeffs).real)
    assert abs(gamma_star("scp", beta, eps, 1e6) - boundary) < 1e-3


def test_effective_interference_values():
    assert np.isclose(effective_interference("scp", 10.0, 0.1, 1.0, 1.0), 7.0,
                      rtol=1e-12)
    for gamma in (0.5, 2.0):
        assert np.isclose(effective_interference("mcp", 10.0, 0.0, gamma, 0.7),
                          effective_interference("cbf", 10.0, 0.0, gamma, 0.7),
                          rtol=1e-12)


def test_effective_interference_consistent_with_gamma_star():
    for scheme in ("scp", "cbf", "mcp"):
        for beta, eps, snr in ((0.5, 0.3, 10.0), (1.0, 1.0, 5.0), (2.0, 0.2, 50.0)):
            g = gamma_star(scheme, beta, eps, snr)
            i_eff = effective_interference(scheme, snr, eps, g, beta)
            gain = 1.0 + eps if scheme == "mcp" else 1.0
            assert abs(gain * snr / i_eff - g) < 1e-9 * max(1.0, g)


def test_feasibility_tests():
    assert not is_feasible("scp", 1.0, 1.0, 0.5)           # exactly at the boundary
    assert is_feasible("mcp", 1e6, 0.999, 0.7)             # beta <= 1 always feasible
    assert is_feasible("scp", 1.0, 1.0, 0.1, snr=10.0)     # 10/7 > 1
    # the flip happens exactly where beta * load crosses 1
    gamma, eps = 0.8, 0.6
    load = effective_bandwidth_load("cbf", gamma, eps)
    assert is_feasible("cbf", gamma, (1.0 - 1e-9) / load, eps)
    assert not is_feasible("cbf", gamma, (1.0 + 1e-9) / load, eps)


def test_operating_point_uses_full_budget():
    for scheme in ("scp", "cbf", "mcp"):
        point = operating_point(scheme, 0.75, 0.5, 10.0, sigma2=2.0)
        assert point.feasible
        # beta * p_bar equals the budget P = snr * sigma2 at the optimum
        assert np.isclose(point.big_p_bar, 20.0, rtol=1e-9)


def test_optimal_beta_thresholds():
    assert optimal_beta("scp", 2.0, 0.6).regime is LoadingRegime.NOISE_LIMITED
    assert math.isinf(optimal_beta("scp", 2.0, 0.6).beta_star)
    assert optimal_beta("mcp", 0.4, 1.0).regime is LoadingRegime.NOISE_LIMITED
    assert optimal_beta("cbf", 1.0 / 1.1, 0.2).regime is LoadingRegime.NOISE_LIMITED
    result = optimal_beta("scp", 10.0, 0.1)
    assert result.regime is LoadingRegime.INTERIOR_OPTIMUM


def test_optimal_beta_agrees_with_grid_scan():
    result = optimal_beta("scp", 10.0, 0.1)
    grid = np.arange(1e-3, 20.0, 1e-3)
    rates = [b * math.log1p(gamma_star("scp", b, 0.1, 10.0)) for b in grid]
    assert abs(grid[int(np.argmax(rates))] - result.beta_star) <= 1e-2


def test_optimal_beta_is_local_max():
    result = optimal_beta("cbf", 10.0, 0.3)
    b = result.beta_star
    for other in (b / 2, 2 * b):
        assert result.rate_at_star >= other * math.log1p(gamma_star("cbf", other, 0.3, 10.0))


def test_td_quadratic_and_limits():
    assert abs(td_gamma_star(1.0, 10.0) - (-11 + math.sqrt(161)) / 2) < 1e-12
    # infinite-power limit solves 2*beta*g/(1+g) = 1
    g = td_gamma_star(1.0, 1e9)
    assert abs(2 * g / (1 + g) - 1.0) < 1e-6


def test_td_ties_cbf_at_unit_cross_gain():
    for beta in np.linspace(0.25, 2.0, 8):
        assert abs(td_rate(beta, 10.0)
                   - beta * math.log1p(gamma_star("cbf", beta, 1.0, 10.0))) < 1e-12
        # strict advantage for coordination below unit cross gain
        assert beta * math.log1p(gamma_star("cbf", beta, 0.5, 10.0)) > td_rate(beta, 10.0)


def test_t_fixed_point_no_interference():
    assert abs(t_fixed_point("scp", 1.0, 0.0, None, 0.5, 0.0) - 1.0) < 1e-12


def test_t_fixed_point_validates_limits():
    gamma, beta = 1.0, 0.5
    lam = lambda_bar("scp", gamma, beta, 0.0)
    t = t_fixed_point("scp", 1.0, lam, None, beta, 0.0)
    assert abs(lam * t - gamma) < 1e-9

    eps = 0.4
    lam_c = lambda_bar("cbf", gamma, beta, eps)
    t_c = t_fixed_point("cbf", 1.0, (lam_c, lam_c), None, beta, eps)
    assert abs(lam_c * t_c - gamma) < 1e-9

    lam_m = lambda_bar("mcp", gamma, beta, eps)
    t1, t2 = t_fixed_point("mcp", 1.0, (lam_m, lam_m), (1.0, 1.0), beta, eps)
    assert abs(t1 - t2) < 1e-12
    assert abs(lam_m * (1.0 + eps) * t1 - gamma) < 1e-9


def test_t_mcp_symmetric_matches_coupled_solve():
    beta, eps = 0.75, 0.6
    t1, t2 = t_fixed_point("mcp", 1.3, (0.8, 0.8), (1.1, 1.1), beta, eps)
    scalar = t_mcp_symmetric(1.3, 1.1, 0.8, beta, eps)
    assert abs(t1 - scalar) < 1e-11 and abs(t2 - scalar) < 1e-11


def test_asymptotic_beamformer_single_user_is_matched_filter():
    config = SystemConfig(8, 1, 0.0, 1.0, 10.0, 41)
    channels = sample_channels(config, 0)
    sol = asymptotic_beamformers("scp", channels, 0.5, config)
    for cell in (0, 1):
        h = channels.block(cell, cell)[0]
        align = abs(np.vdot(h.conj() / np.linalg.norm(h), sol.directions[cell]))
        assert np.isclose(align, 1.0, atol=1e-10)


def test_grzf_equals_rzf_without_cross_gain():
    config = SystemConfig(6, 3, 0.0, 1.0, 10.0, 43)
    channels = sample_channels(config, 0)
    scp = asymptotic_beamformers("scp", channels, 0.4, config)
    cbf = asymptotic_beamformers("cbf", channels, 0.4, config)
    overlap = np.abs(np.sum(scp.directions * cbf.directions.conj(), axis=1))
    assert np.allclose(overlap, 1.0, atol=1e-10)


def test_asymptotic_beamformer_infeasible_target_raises():
    config = SystemConfig(4, 4, 0.5, 1.0, 10.0, 47)
    channels = sample_channels(config, 0)
    with pytest.raises(InfeasibleError):
        asymptotic_beamformers("scp", channels, 1.0, config)


def test_asymptotic_beamformer_concentration():
    # SINRs fluctuate O(1/sqrt(N)) around the target under uniform powers:
    # the mean concentrates tightly, the minimum hangs a few sigma below.
    # Thresholds frozen from this oracle run (20 draws at N=64).
    config = SystemConfig(64, 48, 0.5, 1.0, 10.0, 53)
    hits_mean, hits_min = 0, 0
    draws = 10
    for scheme in ("scp", "cbf", "mcp"):
        target = 0.9 * gamma_star(scheme, 0.75, 0.5, 10.0)
        for stream in range(draws):
            channels = sample_channels(config, stream)
            sol = asymptotic_beamformers(scheme, channels, target, config)
            if abs(np.mean(sol.sinrs) / target - 1.0) < 0.10:
                hits_mean += 1
            if np.min(sol.sinrs) >= 0.45 * target:
                hits_min += 1
    assert hits_mean >= 0.9 * 3 * draws
    assert hits_min >= 0.9 * 3 * draws


def test_export_curve_format():
    from cellbeam import CURVE_HEADER, export_curve
    text = export_curve(["scp", "mcp"], [0.5, 1.0], [0.5], [10.0])
    lines = text.strip().splitlines()
    assert lines[0] == CURVE_HEADER == "scheme,beta,epsilon,snr_db,gamma_star,rate,feasible"
    assert len(lines) == 5
    first = lines[1].split(",")
    assert first[0] == "scp"
    assert float(first[4]) == gamma_star("scp", 0.5, 0.5, 10.0)
    assert float(first[5]) == 0.5 * math.log1p(float(first[4]))


def test_mcp_asymptotic_beamformer_respects_budget():
    config = SystemConfig(32, 24, 0.5, 1.0, 10.0, 59)
    channels = sample_channels(config, 0)
    target = 0.98 * gamma_star("mcp", 0.75, 0.5, 10.0)
    sol = asymptotic_beamformers("mcp", channels, target, config)
    assert np.max(sol.per_bs_power) <= config.power * (1 + 1e-12)
