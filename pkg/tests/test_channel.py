import json

import numpy as np
import pytest

from cellbeam import ChannelSet, SystemConfig, sample_channels, stacked_channel


def test_identical_key_reproduces_bit_identical_draw():
    config = SystemConfig(n_antennas=4, n_users=3, epsilon=0.5, sigma2=1.0,
                          power=1.0, seed=7)
    first = sample_channels(config, 0)
    second = sample_channels(config, 0)
    assert np.array_equal(first.blocks, second.blocks)


def test_distinct_streams_differ():
    config = SystemConfig(4, 3, 0.5, 1.0, 1.0, 7)
    assert not np.array_equal(sample_channels(config, 0).blocks,
                              sample_channels(config, 1).blocks)


def test_zero_cross_gain_gives_exactly_zero_cross_blocks():
    config = SystemConfig(4, 3, 0.0, 1.0, 1.0, 3)
    channels = sample_channels(config, 0)
    assert np.all(channels.block(0, 1) == 0)
    assert np.all(channels.block(1, 0) == 0)
    assert np.any(channels.block(0, 0) != 0)


def test_empirical_variances_match_channel_statistics():
    # law of large numbers at K*N ~ 3e3 entries, 3-sigma tolerance
    config = SystemConfig(64, 48, 0.5, 1.0, 1.0, 11)
    channels = sample_channels(config, 0)
    entries = 64 * 48
    own = np.mean(np.abs(channels.block(0, 0)) ** 2)
    cross = np.mean(np.abs(channels.block(0, 1)) ** 2)
    assert abs(own - 1.0) <= 3.0 / np.sqrt(entries)
    assert abs(cross - 0.5) <= 3.0 * 0.5 / np.sqrt(entries)


def test_stacked_channel_concatenates_in_bs_order():
    blocks = np.zeros((2, 2, 1, 1), dtype=complex)
    blocks[0, 0, 0, 0] = 1 + 2j  # from BS 1
    blocks[0, 1, 0, 0] = 3 - 1j  # from BS 2
    channels = ChannelSet(blocks=blocks)
    assert np.array_equal(stacked_channel(channels, 0, 0), np.array([1 + 2j, 3 - 1j]))


def test_stacked_channel_norm_is_pythagorean():
    config = SystemConfig(5, 2, 0.3, 1.0, 1.0, 9)
    channels = sample_channels(config, 0)
    h = stacked_channel(channels, 1, 1)
    parts = (np.linalg.norm(channels.block(1, 0)[1]) ** 2
             + np.linalg.norm(channels.block(1, 1)[1]) ** 2)
    assert np.isclose(np.linalg.norm(h) ** 2, parts, rtol=1e-12)


def test_stacked_channel_zero_cross_part():
    config = SystemConfig(4, 2, 0.0, 1.0, 1.0, 5)
    channels = sample_channels(config, 0)
    h = stacked_channel(channels, 0, 0)
    assert np.all(h[4:] == 0)


def test_stacked_channel_range_errors():
    config = SystemConfig(4, 2, 0.1, 1.0, 1.0, 5)
    channels = sample_channels(config, 0)
    with pytest.raises(IndexError):
        stacked_channel(channels, 2, 0)
    with pytest.raises(IndexError):
        stacked_channel(channels, 0, 2)


@pytest.mark.parametrize("field,value", [
    ("n_antennas", 0), ("n_users", 0), ("epsilon", -0.1),
    ("sigma2", 0.0), ("power", 0.0), ("seed", -1),
])
def test_config_validation(field, value):
    kwargs = dict(n_antennas=4, n_users=3, epsilon=0.5, sigma2=1.0, power=1.0, seed=0)
    kwargs[field] = value
    with pytest.raises(ValueError):
        SystemConfig(**kwargs)


def test_config_beta_is_exact_ratio():
    assert SystemConfig(4, 3, 0.5, 1.0, 1.0, 0).beta == 3 / 4


def test_config_from_json_and_keyvalue(tmp_path):
    data = {"n_antennas": 6, "n_users": 2, "epsilon": 0.25,
            "sigma2": 0.5, "power": 4.0, "seed": 42}
    json_path = tmp_path / "c.json"
    json_path.write_text(json.dumps(data))
    kv_path = tmp_path / "c.cfg"
    kv_path.write_text("\n".join(f"{k}={v}" for k, v in data.items()) + "\n# comment\n")
    assert SystemConfig.from_file(str(json_path)) == SystemConfig.from_file(str(kv_path))
    with pytest.raises(ValueError):
        SystemConfig.from_dict({**data, "bogus": 1})


def test_channelset_json_roundtrip_is_exact():
    config = SystemConfig(3, 2, 0.7, 1.0, 1.0, 8)
    channels = sample_channels(config, 4)
    clone = ChannelSet.from_json(channels.to_json())
    assert np.array_equal(clone.blocks, channels.blocks)


def test_channelset_is_immutable():
    config = SystemConfig(3, 2, 0.7, 1.0, 1.0, 8)
    channels = sample_channels(config, 0)
    with pytest.raises(ValueError):
        channels.blocks[0, 0, 0, 0] = 0

    with pytest.raises(ValueError):
        ChannelSet(blocks=np.zeros((2, 3, 2, 2)))


def test_negative_stream_rejected():
    config = SystemConfig(3, 2, 0.7, 1.0, 1.0, 8)
    with pytest.raises(ValueError):
        sample_channels(config, -1)
