import numpy as np
import pytest

from cellbeam import (Baseline, DimensionError, SolverSettings, SystemConfig,
                      baseline_max_min, evaluate_sinrs, max_min_sinr,
                      sample_channels, td_rate, zf_directions)
from cellbeam.channel import ChannelSet


@pytest.fixture
def roomy_config():
    # 2K <= N so every nulling variant exists
    return SystemConfig(n_antennas=8, n_users=3, epsilon=0.5, sigma2=1.0,
                        power=10.0, seed=101)


def _relative_leakage(rows, dirs, own_index):
    gains = np.abs(rows @ dirs.T) ** 2
    signal = gains[own_index, np.arange(dirs.shape[0])]
    mask = np.ones_like(gains, dtype=bool)
    mask[own_index, np.arange(dirs.shape[0])] = False
    return np.max(gains[mask]) / np.min(signal)


def test_scp_zf_nulls_own_cell(roomy_config):
    channels = sample_channels(roomy_config, 0)
    dirs = zf_directions("scp_zf", channels, roomy_config)
    for cell in (0, 1):
        block = channels.block(cell, cell)
        sub = dirs[cell * 3:(cell + 1) * 3]
        assert _relative_leakage(block, sub, np.arange(3)) < 1e-12


def test_gzf_nulls_everything_each_bs_sees(roomy_config):
    channels = sample_channels(roomy_config, 0)
    dirs = zf_directions("gzf", channels, roomy_config)
    for bs in (0, 1):
        rows = channels.bs_view(bs)
        sub = dirs[bs * 3:(bs + 1) * 3]
        own = np.arange(bs * 3, (bs + 1) * 3)
        assert _relative_leakage(rows, sub, own) < 1e-12


def test_mcp_zf_nulls_all_stacked(roomy_config):
    channels = sample_channels(roomy_config, 0)
    dirs = zf_directions("mcp_zf", channels, roomy_config)
    assert _relative_leakage(channels.stacked(), dirs, np.arange(6)) < 1e-12


def test_single_user_reduces_to_matched_filter():
    # nothing to null in effect: the channels to be nulled are orthogonal
    # to every desired channel, so each direction is the matched filter
    blocks = np.zeros((2, 2, 1, 4), dtype=complex)
    blocks[0, 0, 0] = [1.0 + 0.5j, 0, 0, 0]   # cell-1 user from its BS
    blocks[1, 0, 0] = [0, 0, 0, 1.0]          # cell-2 user seen from BS 1
    blocks[1, 1, 0] = [0, 0, 2.0, 0]          # cell-2 user from its BS
    blocks[0, 1, 0] = [0, 1.0, 0, 0]          # cell-1 user seen from BS 2
    channels = ChannelSet(blocks=blocks)
    config = SystemConfig(4, 1, 0.3, 1.0, 1.0, 7)
    for name in ("scp_zf", "gzf", "mcp_zf"):
        dirs = zf_directions(name, channels, config)
        for cell in (0, 1):
            h = channels.block(cell, cell)[0] if name != "mcp_zf" \
                else channels.stacked()[cell]
            align = abs(np.sum(h * dirs[cell])) / np.linalg.norm(h)
            assert np.isclose(align, 1.0, atol=1e-10)


def test_single_user_per_cell_nulls_the_other_user():
    config = SystemConfig(4, 1, 0.3, 1.0, 1.0, 7)
    channels = sample_channels(config, 0)
    dirs = zf_directions("mcp_zf", channels, config)
    gains = np.abs(channels.stacked() @ dirs.T) ** 2
    assert gains[0, 1] / gains[0, 0] < 1e-12
    assert gains[1, 0] / gains[1, 1] < 1e-12


def test_orthogonal_rows_give_matched_filters():
    blocks = np.zeros((2, 2, 2, 4), dtype=complex)
    blocks[0, 0] = np.array([[1.0, 0, 0, 0], [0, 2.0, 0, 0]])
    blocks[1, 1] = np.array([[0, 0, 1.5, 0], [0, 0, 0, 1.0]])
    channels = ChannelSet(blocks=blocks)
    config = SystemConfig(4, 2, 0.0, 1.0, 1.0, 0)
    dirs = zf_directions("scp_zf", channels, config)
    expected = np.eye(4)[[0, 1, 2, 3]]
    assert np.allclose(np.abs(dirs), expected, atol=1e-12)


def test_dimension_errors():
    config = SystemConfig(2, 3, 0.5, 1.0, 1.0, 3)
    channels = sample_channels(config, 0)
    with pytest.raises(DimensionError):
        zf_directions("scp_zf", channels, config)
    tight = SystemConfig(4, 3, 0.5, 1.0, 1.0, 3)
    with pytest.raises(DimensionError):
        zf_directions("gzf", sample_channels(tight, 0), tight)
    with pytest.raises(ValueError):
        zf_directions("td_scp", channels, config)


def test_gzf_max_min_interference_free(roomy_config, fast_settings):
    channels = sample_channels(roomy_config, 0)
    result = baseline_max_min("gzf", channels, roomy_config, fast_settings)
    sol = result.solution
    # with every cross beam nulled the SINR collapses to signal / noise,
    # so the implied interference power at each user is ~0
    sinrs = evaluate_sinrs("cbf", channels, sol, roomy_config.sigma2)
    signal = sol.powers / 8 * np.concatenate([
        np.abs(np.sum(channels.block(0, 0) * sol.directions[:3], axis=1)) ** 2,
        np.abs(np.sum(channels.block(1, 1) * sol.directions[3:], axis=1)) ** 2])
    interference = signal / sinrs - roomy_config.sigma2
    assert np.max(np.abs(interference)) < 1e-18 + 1e-14 * signal.max()


def test_optimized_schemes_dominate_their_zf_versions(roomy_config, fast_settings):
    pairs = {"scp_zf": "scp", "gzf": "cbf", "mcp_zf": "mcp"}
    for stream in range(3):
        channels = sample_channels(roomy_config, stream)
        for zf_name, scheme in pairs.items():
            zf = baseline_max_min(zf_name, channels, roomy_config, fast_settings)
            opt = max_min_sinr(scheme, channels, roomy_config, fast_settings)
            assert opt.gamma_star >= zf.gamma_star * (1 - 1e-6)


def test_mcp_zf_matches_optimal_when_interference_absent(fast_settings):
    # orthogonal stacked channels: the null is free, ZF = matched filter = optimal
    blocks = np.zeros((2, 2, 1, 4), dtype=complex)
    blocks[0, 0, 0] = [1.0, 0.8, 0, 0]
    blocks[1, 1, 0] = [0, 0, 1.2, -0.5]
    channels = ChannelSet(blocks=blocks)
    config = SystemConfig(4, 1, 0.0, 1.0, 10.0, 71)
    tight = SolverSettings(gamma_tolerance=1e-7)
    zf = baseline_max_min("mcp_zf", channels, config, tight)
    opt = max_min_sinr("mcp", channels, config, tight)
    assert abs(zf.gamma_star - opt.gamma_star) <= 1e-5 * opt.gamma_star


def test_td_uses_per_slot_budget(roomy_config, fast_settings):
    channels = sample_channels(roomy_config, 0)
    result = baseline_max_min("td_scp", channels, roomy_config, fast_settings)
    sol = result.solution
    assert np.max(sol.per_bs_power) <= 2 * roomy_config.power * (1 + 1e-6)
    assert np.max(sol.per_bs_power) >= 1.9 * roomy_config.power
    # per-slot SINRs are balanced at the network max-min in the tight slot
    assert abs(np.min(sol.sinrs) - result.gamma_star) < 1e-6 * result.gamma_star


def test_equal_power_policy_is_weaker(roomy_config, fast_settings):
    channels = sample_channels(roomy_config, 0)
    balanced = baseline_max_min("scp_zf", channels, roomy_config, fast_settings)
    uniform = baseline_max_min("scp_zf", channels, roomy_config, fast_settings,
                               equal_power=True)
    assert uniform.gamma_star <= balanced.gamma_star * (1 + 1e-9)
    assert np.max(uniform.solution.per_bs_power) <= roomy_config.power * (1 + 1e-9)


def test_baseline_enum_exhaustive():
    assert {b.value for b in Baseline} == {"scp_zf", "gzf", "mcp_zf", "td_scp"}
