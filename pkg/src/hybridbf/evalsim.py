"""Monte Carlo BER and spectral-efficiency evaluation.

Fully-digital (FD) and HDNN systems are compared under common random
numbers: evaluating either system with the same ``RngStream`` draws the
same bits and noise in the same order.

HDNN spectral efficiency is a measurement convention: the network is
replaced by the least-squares linear map that best explains its outputs,
and that map is scored with the FD log-det formula.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .beamforming import fd_combiner, fd_precoder, se_downlink, se_uplink
from .errors import DimensionMismatch, IllConditioned, UntrainedModel
from .hdnn import HdnnModel, hdnn_apply
from .modulation import QAM4, qam4_detect, qam4_map, random_bits, random_symbols
from .numerics import RngStream, complex_gaussian, db2lin

__all__ = [
    "QAM4", "qam4_map", "qam4_detect", "EvalConfig", "EvalResult", "BerEstimate",
    "ber_downlink", "ber_uplink", "nmse", "fit_effective_linear_map", "se_curve",
    "evaluate", "parse_snr_grid", "snr_at_ber",
]

NMSE_FLOOR_DB = -120.0
N_NORM_PROBES = 10_000
MAX_GRAM_COND = 1e12

# child-stream indices; bits and noise are drawn from the stream itself
_PROBE_STREAM = 7


@dataclass(frozen=True)
class EvalConfig:
    snr_grid_db: tuple[float, ...] = (0.0, 4.0, 8.0)
    n_symbol_trials: int = 50_000
    n_channels: int = 5
    constellation: str = "qam4"
    seed: int = 0
    scale: str = "desk"

    def __post_init__(self):
        if self.n_symbol_trials < 1:
            raise ValueError("n_symbol_trials must be >= 1")
        if not all(math.isfinite(s) for s in self.snr_grid_db):
            raise ValueError("SNR grid must be finite")
        if self.constellation != "qam4":
            raise ValueError("only 4-QAM is supported")
        if self.scale not in ("desk", "paper"):
            raise ValueError("scale must be 'desk' or 'paper'")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["snr_grid_db"] = list(self.snr_grid_db)
        return d


@dataclass(frozen=True)
class BerEstimate:
    errors: int
    bits: int

    @property
    def ber(self) -> float:
        return self.errors / self.bits

    @property
    def stderr(self) -> float:
        p = self.ber
        return math.sqrt(p * (1 - p) / self.bits)

    def __float__(self) -> float:
        return self.ber

    def __add__(self, other: "BerEstimate") -> "BerEstimate":
        return BerEstimate(self.errors + other.errors, self.bits + other.bits)


def parse_snr_grid(text: str) -> list[float]:
    """``"a:step:b"`` (inclusive) or a comma-separated list, in dB."""
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[1] == 0:
            raise ValueError(f"bad SNR range {text!r}; expected start:step:stop")
        start, step, stop = parts
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        if n < 1:
            raise ValueError(f"empty SNR range {text!r}")
        return [round(start + i * step, 12) for i in range(n)]
    return [float(p) for p in text.split(",") if p.strip()]


def _check_trained(model: HdnnModel, require_trained: bool):
    if require_trained and "train" not in model.metadata:
        raise UntrainedModel("model has no training record")


def _power_gain(f: Callable, n_s: int, rng: RngStream, n_probe: int = N_NORM_PROBES) -> float:
    """Gain ``g`` with ``E||g f(s)||^2 = 1`` over random 4-QAM probes."""
    s = random_symbols(n_probe, n_s, rng)
    power = np.mean(np.sum(np.abs(f(s)) ** 2, axis=1))
    if not power > 0:
        raise UntrainedModel("model output has zero power")
    return 1.0 / math.sqrt(power)


def _equalize_detect(z, gains):
    """Scale stream ``k`` by ``1/gains[k]`` (skipping unpowered streams) and detect."""
    safe = np.where(gains > 0, gains, 1.0)
    return qam4_detect(z / safe)


def ber_downlink(
    system,
    h,
    rho: float,
    n_trials: int,
    rng: RngStream,
    n_s: int | None = None,
    noise: bool = True,
    require_trained: bool = True,
) -> BerEstimate:
    """BS -> UE bit error rate for an FD precoder or a downlink HDNN.

    ``system`` is ``None`` (FD eigen-precoder at ``rho``), an
    :class:`~hybridbf.beamforming.FdPrecoder`, or an
    :class:`~hybridbf.hdnn.HdnnModel`. The UE applies the FD eigen-combiner
    and equalizes each stream by ``sqrt(rho) sigma_k sqrt(p_k)``.
    """
    hm = np.asarray(getattr(h, "h", h), dtype=np.complex128)
    if isinstance(system, HdnnModel):
        _check_trained(system, require_trained)
        if system.direction != "downlink":
            raise DimensionMismatch("expected a downlink model")
        n_s = system.in_dim
        if system.out_dim != hm.shape[1]:
            raise DimensionMismatch("model output does not match n_tx")
    elif system is not None:
        n_s = system.n_s
    n_s = n_s if n_s is not None else hm.shape[0]
    fd = fd_precoder(hm, n_s, rho)
    if isinstance(system, HdnnModel):
        def tx(s):
            return hdnn_apply(system, s)
        g = _power_gain(tx, n_s, rng.child(_PROBE_STREAM))
    else:
        p = (fd if system is None else system).p

        def tx(s):
            return s @ p.T
        g = 1.0
    bits = random_bits((n_trials, n_s), rng)
    s = qam4_map(bits)
    y = math.sqrt(rho) * g * tx(s) @ hm.T
    if noise:
        y = y + complex_gaussian((n_trials, hm.shape[0]), rng)
    z = y @ fd.svd.u[:, :n_s].conj()
    detected = _equalize_detect(z, math.sqrt(rho) * fd.stream_gains)
    return BerEstimate(int(np.count_nonzero(detected != bits)), bits.size)


def ber_uplink(
    system,
    h,
    rho: float,
    n_trials: int,
    rng: RngStream,
    noise: bool = True,
    require_trained: bool = True,
) -> BerEstimate:
    """UE -> BS bit error rate for the FD combiner or an uplink HDNN.

    ``h`` is the ``n_bs x n_ue`` uplink channel. The UE sends ``n_ue``
    streams with its FD eigen-precoder; the BS combines with ``system``
    (``None`` or an FdCombiner for FD) and equalizes per stream.
    """
    hm = np.asarray(getattr(h, "h", h), dtype=np.complex128)
    n_s = hm.shape[1]
    fd = fd_precoder(hm, n_s, rho)
    if isinstance(system, HdnnModel):
        _check_trained(system, require_trained)
        if system.direction != "uplink" or system.in_dim != hm.shape[0]:
            raise DimensionMismatch("model does not match the uplink channel")

        def rx(y):
            return hdnn_apply(system, y)
    else:
        c = (fd_combiner(hm, n_s) if system is None else system).c

        def rx(y):
            return y @ c.T
    bits = random_bits((n_trials, n_s), rng)
    s = qam4_map(bits)
    y = math.sqrt(rho) * s @ (hm @ fd.p).T
    if noise:
        y = y + complex_gaussian((n_trials, hm.shape[0]), rng)
    detected = _equalize_detect(rx(y), math.sqrt(rho) * fd.stream_gains)
    return BerEstimate(int(np.count_nonzero(detected != bits)), bits.size)


def _constellation_sampler(n_in: int):
    def sample(n, rng):
        return random_symbols(n, n_in, rng)
    return sample


def uplink_sampler(rho: float, n_in: int):
    """Inputs ``rho z + noise`` as used to train uplink models."""
    def sample(n, rng):
        return rho * complex_gaussian((n, n_in), rng.child(0)) + complex_gaussian((n, n_in), rng.child(1))
    return sample


def nmse(f: Callable, reference, n_probe: int, rng: RngStream, sampler=None) -> float:
    """``10 log10(E||f(s) - M s||^2 / E||M s||^2)`` in dB, floored at -120 dB."""
    m = np.asarray(reference, dtype=np.complex128)
    sampler = sampler or _constellation_sampler(m.shape[1])
    s = sampler(n_probe, rng)
    target = s @ m.T
    err = np.sum(np.abs(f(s) - target) ** 2)
    ref = np.sum(np.abs(target) ** 2)
    if err == 0:
        return NMSE_FLOOR_DB
    return max(10 * math.log10(err / ref), NMSE_FLOOR_DB)


def fit_effective_linear_map(f: Callable, n_in: int, n_probe: int, rng: RngStream, sampler=None):
    """Least-squares ``T`` minimizing ``sum ||f(s) - T s||^2``.

    Returns ``(T, relative_residual)``.
    """
    if n_probe < n_in:
        raise IllConditioned(f"{n_probe} probes cannot identify a map with {n_in} inputs")
    sampler = sampler or _constellation_sampler(n_in)
    s = sampler(n_probe, rng)
    out = f(s)
    cond = np.linalg.cond(s.conj().T @ s)
    if not cond < MAX_GRAM_COND:
        raise IllConditioned(f"probe Gram condition number {cond:.3g}")
    tt, *_ = np.linalg.lstsq(s, out, rcond=None)
    resid = np.linalg.norm(out - s @ tt) / max(np.linalg.norm(out), 1e-300)
    return tt.T, float(resid)


def _model_for(system, snr_db):
    if isinstance(system, dict):
        return system[snr_db]
    return system


def se_curve(system, h, snr_grid_db, rng: RngStream, direction: str = "downlink",
             n_s: int | None = None, n_probe: int = 4096) -> list[float]:
    """Spectral efficiency per SNR.

    ``system`` is ``None`` for FD, an :class:`HdnnModel` used at every SNR,
    or a dict mapping SNR (dB) to a model trained at that SNR.
    """
    hm = np.asarray(getattr(h, "h", h), dtype=np.complex128)
    out = []
    for i, snr in enumerate(snr_grid_db):
        rho = float(db2lin(snr))
        model = _model_for(system, snr)
        if direction == "downlink":
            ns = model.in_dim if model is not None else (n_s or hm.shape[0])
            if model is None:
                out.append(se_downlink(hm, fd_precoder(hm, ns, rho), rho))
                continue
            t, _ = fit_effective_linear_map(lambda s: hdnn_apply(model, s), ns, n_probe, rng.child(i))
            t = t / math.sqrt(np.real(np.trace(t @ t.conj().T)))
            out.append(se_downlink(hm, t, rho))
        else:
            ns = n_s or hm.shape[1]
            if model is None:
                out.append(se_uplink(hm, fd_combiner(hm, ns), rho))
                continue
            train_rho = model.metadata.get("data", {}).get("rho", rho)
            t, _ = fit_effective_linear_map(
                lambda y: hdnn_apply(model, y), hm.shape[0], n_probe, rng.child(i),
                sampler=uplink_sampler(train_rho, hm.shape[0]),
            )
            out.append(se_uplink(hm, t, rho))
    return out


def snr_at_ber(snr_db, ber, target: float = 1e-3) -> float | None:
    """SNR where the BER curve first crosses ``target`` (log-BER linear interpolation)."""
    snr_db = np.asarray(snr_db, dtype=float)
    ber = np.asarray(ber, dtype=float)
    for i in range(len(snr_db) - 1):
        b0, b1 = ber[i], ber[i + 1]
        if b0 >= target > b1:
            if b1 <= 0:
                return float(snr_db[i + 1])
            t = (math.log10(b0) - math.log10(target)) / (math.log10(b0) - math.log10(b1))
            return float(snr_db[i] + t * (snr_db[i + 1] - snr_db[i]))
    return None


@dataclass
class EvalResult:
    """Long-format records plus per-SNR aggregates and provenance."""

    records: list[dict] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    CSV_COLUMNS = ("channel_id", "snr_db", "metric", "value", "stderr")

    def add(self, channel_id, snr_db, metric, value, stderr=0.0):
        self.records.append(
            {"channel_id": channel_id, "snr_db": float(snr_db), "metric": metric,
             "value": float(value), "stderr": float(stderr)}
        )

    def metric(self, name: str, channel_id=None) -> dict[float, list[float]]:
        out: dict[float, list[float]] = {}
        for r in self.records:
            if r["metric"] == name and (channel_id is None or r["channel_id"] == channel_id):
                out.setdefault(r["snr_db"], []).append(r["value"])
        return out

    def aggregates(self) -> list[dict]:
        keys = sorted({(r["metric"], r["snr_db"]) for r in self.records})
        rows = []
        for metric, snr in keys:
            vals = [r["value"] for r in self.records if r["metric"] == metric and r["snr_db"] == snr]
            rows.append({"metric": metric, "snr_db": snr, "mean": float(np.mean(vals)), "count": len(vals)})
        return rows

    def write_csv(self, path, comments=()) -> None:
        """Long-format CSV; ``comments`` become leading ``# ...`` lines."""
        with open(path, "w", newline="") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.CSV_COLUMNS)
            for r in sorted(self.records, key=lambda r: (r["channel_id"], r["snr_db"], r["metric"])):
                w.writerow([r["channel_id"], repr(r["snr_db"]), r["metric"], repr(r["value"]), repr(r["stderr"])])

    def summary(self) -> dict:
        return {"provenance": self.provenance, "aggregates": self.aggregates()}


def evaluate_cell(direction: str, channel, snr_db: float, model, cfg: EvalConfig, rng: RngStream,
                  metrics=("ber", "se", "nmse")) -> list[tuple]:
    """All metrics for one (channel, SNR) cell; FD and HDNN share draws."""
    rho = float(db2lin(snr_db))
    rows = []
    ber_fn = ber_downlink if direction == "downlink" else ber_uplink
    if "ber" in metrics:
        fd = ber_fn(None, channel, rho, cfg.n_symbol_trials, rng.child(0))
        rows.append(("ber_fd", fd.ber, fd.stderr))
        if model is not None:
            hd = ber_fn(model, channel, rho, cfg.n_symbol_trials, rng.child(0))
            rows.append(("ber_hdnn", hd.ber, hd.stderr))
    if "se" in metrics:
        rows.append(("se_fd", se_curve(None, channel, [snr_db], rng.child(1), direction)[0], 0.0))
        if model is not None:
            rows.append(("se_hdnn", se_curve(model, channel, [snr_db], rng.child(1), direction)[0], 0.0))
    if "nmse" in metrics and model is not None:
        hm = channel.h if hasattr(channel, "h") else channel
        if direction == "downlink":
            ref = fd_precoder(hm, model.in_dim, rho).p
            val = nmse(lambda s: hdnn_apply(model, s), ref, 4096, rng.child(2))
        else:
            ref = fd_combiner(hm, hm.shape[1]).c
            train_rho = model.metadata.get("data", {}).get("rho", rho)
            val = nmse(lambda y: hdnn_apply(model, y), ref, 4096, rng.child(2),
                       sampler=uplink_sampler(train_rho, hm.shape[0]))
        rows.append(("nmse_db", val, 0.0))
    return rows


def _run_cell(args):
    direction, cid, channel, snr, model, cfg, seed, key, metrics = args
    return cid, snr, evaluate_cell(direction, channel, snr, model, cfg, RngStream(seed, key), metrics)


def evaluate(direction: str, channels: dict, models: dict | None, cfg: EvalConfig,
             metrics=("ber", "se", "nmse"), threads: int = 1) -> EvalResult:
    """Evaluate every (channel, SNR) cell.

    ``channels`` maps channel id to a realization; ``models`` maps
    ``(channel_id, snr_db)`` to a trained model (missing entries are FD
    only). Cell ``(i, j)`` uses stream ``RngStream(cfg.seed).child(i).child(j)``
    and results are merged in key order, so output does not depend on
    ``threads``.
    """
    root = RngStream(cfg.seed)
    tasks = []
    for i, cid in enumerate(sorted(channels)):
        for j, snr in enumerate(cfg.snr_grid_db):
            model = (models or {}).get((cid, float(snr)))
            key = root.child(i).child(j).spawn_key
            tasks.append((direction, cid, channels[cid], float(snr), model, cfg, cfg.seed, key, metrics))
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            outputs = list(pool.map(_run_cell, tasks))
    else:
        outputs = [_run_cell(t) for t in tasks]
    result = EvalResult(provenance={"direction": direction, "config": cfg.to_dict()})
    for cid, snr, rows in outputs:
        for metric, value, err in rows:
            result.add(cid, snr, metric, value, err)
    return result
