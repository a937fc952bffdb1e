"""JSON file formats for channels, matrices, networks and HDNN models.

Complex arrays are written as ``[re, im]`` pairs in row-major order.
Floats use Python's shortest round-trip repr, so a load reproduces the
saved value bit for bit.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .beamforming import UnitModulusDecomposition
from .channel import ChannelParams, ChannelRealization
from .cvnn import CvnnNetwork, Layer
from .hdnn import AdnnLayer, AdnnRealization, HdnnModel, realize_adnn

FORMAT_VERSION = 1


def pairs(a) -> list:
    a = np.asarray(a, dtype=np.complex128).ravel()
    return [[float(z.real), float(z.imag)] for z in a]


def from_pairs(data, shape) -> np.ndarray:
    arr = np.asarray(data, dtype=float).reshape(-1, 2)
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(shape)


def matrix_to_dict(a) -> dict:
    a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    return {"rows": a.shape[0], "cols": a.shape[1], "data": pairs(a)}


def matrix_from_dict(d: dict) -> np.ndarray:
    if "h" in d:  # channel file
        d = d["h"]
    return from_pairs(d["data"], (d["rows"], d["cols"]))


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()[:16]


def dump(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def load(path) -> dict:
    return json.loads(Path(path).read_text())


def channel_to_dict(ch: ChannelRealization) -> dict:
    return {
        "kind": "channel",
        "version": FORMAT_VERSION,
        "params": ch.params.to_dict(),
        "seed": ch.params.seed,
        "spawn_key": list(ch.spawn_key),
        "h": matrix_to_dict(ch.h),
        "cluster_means_tx": ch.cluster_means_tx.tolist(),
        "cluster_means_rx": ch.cluster_means_rx.tolist(),
        "ray_angles_tx": ch.ray_angles_tx.tolist(),
        "ray_angles_rx": ch.ray_angles_rx.tolist(),
        "gains": pairs(ch.gains),
    }


def channel_from_dict(d: dict) -> ChannelRealization:
    params = ChannelParams(**d["params"])
    shape = (params.n_clusters, params.n_rays)
    return ChannelRealization(
        h=matrix_from_dict(d["h"]),
        params=params,
        cluster_means_tx=np.asarray(d["cluster_means_tx"], dtype=float),
        cluster_means_rx=np.asarray(d["cluster_means_rx"], dtype=float),
        ray_angles_tx=np.asarray(d["ray_angles_tx"], dtype=float).reshape(shape),
        ray_angles_rx=np.asarray(d["ray_angles_rx"], dtype=float).reshape(shape),
        gains=from_pairs(d["gains"], shape),
        spawn_key=tuple(d.get("spawn_key", ())),
    )


def network_to_dict(net: CvnnNetwork) -> dict:
    return {
        "layers": [
            {
                "in_dim": int(layer.weight.shape[1]),
                "out_dim": int(layer.weight.shape[0]),
                "activation": layer.activation,
                "slope": float(layer.slope[0]),
                "weight": pairs(layer.weight),
                "bias": pairs(layer.bias),
            }
            for layer in net.layers
        ]
    }


def network_from_dict(d: dict) -> CvnnNetwork:
    layers = []
    for ld in d["layers"]:
        layers.append(
            Layer(
                weight=from_pairs(ld["weight"], (ld["out_dim"], ld["in_dim"])),
                bias=from_pairs(ld["bias"], (ld["out_dim"],)),
                activation=ld["activation"],
                slope=np.array([ld["slope"]], dtype=float),
            )
        )
    return CvnnNetwork(layers)


def realization_to_dict(real: AdnnRealization) -> dict:
    return {
        "cumulative_scale": real.cumulative_scale,
        "layers": [
            {
                "c": layer.decomposition.c,
                "scale": layer.scale,
                "bias_level": layer.bias_level,
                "activation": layer.activation,
                "slope": layer.slope,
                "rows": int(layer.decomposition.r1.shape[0]),
                "cols": int(layer.decomposition.r1.shape[1]),
                "phases_r1": np.angle(layer.decomposition.r1).ravel().tolist(),
                "phases_r2": np.angle(layer.decomposition.r2).ravel().tolist(),
            }
            for layer in real.layers
        ],
    }


def realization_from_dict(d: dict) -> AdnnRealization:
    layers = []
    for ld in d["layers"]:
        shape = (ld["rows"], ld["cols"])
        dec = UnitModulusDecomposition(
            c=ld["c"],
            r1=np.exp(1j * np.asarray(ld["phases_r1"]).reshape(shape)),
            r2=np.exp(1j * np.asarray(ld["phases_r2"]).reshape(shape)),
        )
        layers.append(AdnnLayer(dec, ld["scale"], ld["bias_level"], ld["activation"], ld["slope"]))
    return AdnnRealization(layers=layers, cumulative_scale=d["cumulative_scale"])


def hdnn_to_dict(model: HdnnModel) -> dict:
    out = {
        "kind": "hdnn",
        "version": FORMAT_VERSION,
        "preset": model.preset,
        "direction": model.direction,
        "n_rf": model.n_rf,
        "digital": network_to_dict(model.digital),
        "analog": network_to_dict(model.analog),
        "metadata": model.metadata,
    }
    if model.realization is not None:
        out["realization"] = realization_to_dict(model.realization)
    return out


def _check_realization(stored: AdnnRealization, derived: AdnnRealization, tol: float = 1e-9) -> None:
    if len(stored.layers) != len(derived.layers):
        raise ValueError("realization block does not match the analog network depth")
    for a, b in zip(stored.layers, derived.layers):
        da, db = a.decomposition, b.decomposition
        if da.r1.shape != db.r1.shape or abs(da.c - db.c) > tol * db.c:
            raise ValueError("realization block does not match the analog network")
        for x, y in ((da.r1, db.r1), (da.r2, db.r2)):
            if np.max(np.abs(x - y)) > tol:
                raise ValueError("stored phases do not match the analog network")


def hdnn_from_dict(d: dict) -> HdnnModel:
    """Rebuild a model; a stored realization is re-derived from the analog
    weights (bit-exact) and checked against the stored phases."""
    analog = network_from_dict(d["analog"])
    real = None
    if d.get("realization"):
        real = realize_adnn(analog)
        _check_realization(realization_from_dict(d["realization"]), real)
    return HdnnModel(
        digital=network_from_dict(d["digital"]),
        analog=analog,
        n_rf=d["n_rf"],
        direction=d["direction"],
        preset=d["preset"],
        realization=real,
        metadata=d.get("metadata", {}),
    )


def save_channel(ch: ChannelRealization, path) -> None:
    dump(channel_to_dict(ch), path)


def load_channel(path) -> ChannelRealization:
    return channel_from_dict(load(path))


def save_model(model: HdnnModel, path) -> None:
    dump(hdnn_to_dict(model), path)


def load_model(path) -> HdnnModel:
    return hdnn_from_dict(load(path))
