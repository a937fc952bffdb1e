import numpy as np

from hybridbf.channel import ChannelParams, generate_channels
from hybridbf.pipeline import TRAIN_NAMESPACE, train_grid
from hybridbf.numerics import derive_seed
from hybridbf.trainer import TrainConfig

CFG = TrainConfig(n_samples=500, batch_size=50, epochs=1)


def test_train_grid_keys_and_seeds():
    chans = dict(zip(["b", "a"], generate_channels(ChannelParams(8, 2, seed=1), 2)))
    models = train_grid(chans, [0.0, 5.0], "downlink", "standard", CFG, seed=7)
    assert sorted(models) == [("a", 0.0), ("a", 5.0), ("b", 0.0), ("b", 5.0)]
    md = models[("b", 5.0)].metadata
    # channels are indexed in sorted-id order
    assert md["seed"] == derive_seed(7, TRAIN_NAMESPACE, 1, 1)
    assert md["channel_id"] == "b" and md["snr_db"] == 5.0
    assert models[("a", 0.0)].realization is not None


def test_uplink_cells_use_channel_rows_as_bs_antennas():
    chans = {"u": generate_channels(ChannelParams(2, 8, seed=2), 1)[0]}
    model = train_grid(chans, [0.0], "uplink", "standard", CFG, seed=1)[("u", 0.0)]
    assert (model.in_dim, model.out_dim) == (8, 2)
    assert model.metadata["data"]["rho"] == 1.0


def test_train_grid_reproducible():
    chans = {"c": generate_channels(ChannelParams(8, 2, seed=1), 1)[0]}
    a = train_grid(chans, [3.0], "downlink", "standard", CFG, seed=2)[("c", 3.0)]
    b = train_grid(chans, [3.0], "downlink", "standard", CFG, seed=2)[("c", 3.0)]
    for p, q in zip(a.network().params(), b.network().params()):
        np.testing.assert_array_equal(p, q)
