import numpy as np
import pytest

from hybridbf import io
from hybridbf.channel import ChannelParams, generate_channels
from hybridbf.hdnn import build_hdnn, realize
from hybridbf.numerics import RngStream

from conftest import random_complex


def test_pairs_roundtrip_bitwise():
    a = random_complex((3, 4), 0) * 1e-7
    np.testing.assert_array_equal(io.from_pairs(io.pairs(a), a.shape), a)


def test_matrix_roundtrip():
    a = random_complex((2, 5), 1)
    d = io.matrix_to_dict(a)
    assert (d["rows"], d["cols"]) == (2, 5)
    np.testing.assert_array_equal(io.matrix_from_dict(d), a)


def test_channel_file_roundtrip(tmp_path):
    ch = generate_channels(ChannelParams(8, 2, seed=5), 2)[1]
    io.save_channel(ch, tmp_path / "c.json")
    back = io.load_channel(tmp_path / "c.json")
    np.testing.assert_array_equal(back.h, ch.h)
    np.testing.assert_array_equal(back.gains, ch.gains)
    np.testing.assert_array_equal(back.ray_angles_tx, ch.ray_angles_tx)
    assert back.params == ch.params and back.spawn_key == ch.spawn_key
    # a channel file is also accepted where a matrix file is expected
    np.testing.assert_array_equal(io.matrix_from_dict(io.load(tmp_path / "c.json")), ch.h)


def test_model_roundtrip_bitwise(tmp_path):
    m = realize(build_hdnn("standard", 8, 2, rng=RngStream(3), direction="uplink"))
    m.metadata["note"] = "x"
    io.save_model(m, tmp_path / "m.json")
    back = io.load_model(tmp_path / "m.json")
    for a, b in zip(m.network().params(), back.network().params()):
        np.testing.assert_array_equal(a, b)
    assert back.direction == "uplink" and back.n_rf == 2 and back.metadata["note"] == "x"
    assert back.realization.cumulative_scale == m.realization.cumulative_scale
    np.testing.assert_allclose(back.realization.layers[0].decomposition.r1, m.realization.layers[0].decomposition.r1, atol=1e-15)
    io.save_model(back, tmp_path / "m2.json")
    assert (tmp_path / "m.json").read_bytes() == (tmp_path / "m2.json").read_bytes()


def test_unrealized_model_has_no_block():
    assert "realization" not in io.hdnn_to_dict(build_hdnn("standard", 4, 2, rng=RngStream(0)))


def test_config_hash_is_canonical():
    assert io.config_hash({"a": 1, "b": [1, 2]}) == io.config_hash({"b": [1, 2], "a": 1})
    assert io.config_hash({"a": 1}) != io.config_hash({"a": 2})
    assert len(io.config_hash({})) == 16
