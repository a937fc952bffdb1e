"""Command-line interface.

Exit codes: 0 success, 1 invalid configuration or usage, 2 runtime
failure, 3 selftest failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .beamforming import decompose_unit_modulus
from .channel import ChannelParams, generate_channels
from .config import RunConfig, build_config, read_ini
from .errors import HybridBFError, InvalidConfig, InvalidPreset, OddStreams
from .evalsim import evaluate
from .pipeline import train_grid
from .selftest import CHECKS, run_selftest

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_SELFTEST = 0, 1, 2, 3

log = logging.getLogger("hybridbf")


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the invalid-configuration code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


# flag destination -> (config section, field)
FLAG_FIELDS = {
    "nt": ("channel", "n_tx"),
    "nr": ("channel", "n_rx"),
    "clusters": ("channel", "n_clusters"),
    "rays": ("channel", "n_rays"),
    "spread_deg": ("channel", "spread_deg"),
    "channels": ("channel", "n_channels"),
    "channel_seed": ("channel", "seed"),
    "preset": ("model", "preset"),
    "direction": ("model", "direction"),
    "ns": ("model", "n_s"),
    "nrf": ("model", "n_rf"),
    "samples": ("train", "n_samples"),
    "batch": ("train", "batch_size"),
    "epochs": ("train", "epochs"),
    "lr": ("train", "learning_rate"),
    "snr": ("eval", "snr_grid_db"),
    "trials": ("eval", "n_symbol_trials"),
    "eval_metrics": ("eval", "metrics"),
    "seed": ("run", "seed"),
    "threads": ("run", "threads"),
    "out": ("run", "out"),
}


FLAG_FOR = {name: dest for dest, (_, name) in FLAG_FIELDS.items() if dest != "channel_seed"}


def resolve_config(args) -> RunConfig:
    file_values = read_ini(args.config) if getattr(args, "config", None) else {}
    overrides: dict[str, dict] = {}
    for dest, (section, name) in FLAG_FIELDS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides.setdefault(section, {})[name] = value
    return build_config(file_values, overrides)


def _json_files(paths, kind: str) -> list[Path]:
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out += [q for q in sorted(p.glob("*.json")) if io.load(q).get("kind") == kind]
        else:
            out.append(p)
    if not out:
        raise InvalidConfig(f"no {kind} files found in {list(paths)}", field=kind)
    return out


def load_channels(paths) -> dict:
    """Channel realizations keyed by file stem."""
    files = _json_files(paths, "channel")
    stems = [f.stem for f in files]
    if len(set(stems)) != len(stems):
        raise InvalidConfig("channel file names must be unique", field="channel")
    return {f.stem: io.load_channel(f) for f in files}


def channel_provenance(channels: dict) -> dict:
    return {cid: {"seed": ch.params.seed, "spawn_key": list(ch.spawn_key)} for cid, ch in channels.items()}


def model_filename(channel_id: str, snr_db: float) -> str:
    return f"{channel_id}_snr{snr_db:g}.json"


# --------------------------------------------------------------------------- commands


def cmd_gen_channel(args) -> int:
    cfg = resolve_config(args).require("channel.n_tx", "channel.n_rx")
    c = cfg.channel
    params = ChannelParams(c.n_tx, c.n_rx, c.n_clusters, c.n_rays, float(np.deg2rad(c.spread_deg)), c.seed)
    out = Path(cfg.run.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, ch in enumerate(generate_channels(params, c.n_channels)):
        d = io.channel_to_dict(ch)
        d["config_hash"] = cfg.hash
        path = out / f"channel_{i:03d}.json"
        io.dump(d, path)
        print(path)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    channels = load_channels(args.channel)
    m = cfg.model

    timings = {}

    def progress(cid, snr, res):
        timings[(cid, float(snr))] = res.epoch_seconds
        print(f"trained {cid} at {snr:g} dB: final loss {res.final_loss:.5g}", file=sys.stderr)

    models = train_grid(
        channels, cfg.eval.snr_grid_db, m.direction, m.preset, cfg.train_config(), cfg.run.seed,
        n_s=m.n_s, n_rf=m.n_rf, progress=progress,
    )
    out = Path(cfg.run.out)
    out.mkdir(parents=True, exist_ok=True)
    metrics = {"config": cfg.to_dict(), "config_hash": cfg.hash, "models": []}
    for (cid, snr), model in sorted(models.items()):
        model.metadata["config_hash"] = cfg.hash
        model.metadata["channel"] = channel_provenance({cid: channels[cid]})[cid]
        path = out / model_filename(cid, snr)
        io.save_model(model, path)
        metrics["models"].append({
            "file": path.name, "channel_id": cid, "snr_db": snr,
            "seed": model.metadata["seed"], "epoch_losses": model.metadata["epoch_losses"],
            "epoch_seconds": timings[(cid, snr)],
        })
        print(path)
    io.dump(metrics, args.metrics or out / "train_metrics.json")
    return EXIT_OK


def _load_models(paths, direction: str) -> dict:
    models = {}
    for f in _json_files(paths, "hdnn"):
        model = io.load_model(f)
        if model.direction != direction:
            raise InvalidConfig(f"{f} is a {model.direction} model, expected {direction}", field="direction")
        md = model.metadata
        if "channel_id" not in md or "snr_db" not in md:
            raise InvalidConfig(f"{f} lacks channel_id/snr_db metadata", field="model")
        models[(md["channel_id"], float(md["snr_db"]))] = (model, io.config_hash(io.hdnn_to_dict(model)))
    return models


def _cmd_eval(args, metrics) -> int:
    cfg = resolve_config(args)
    channels = load_channels(args.channel)
    loaded = _load_models(args.model, cfg.model.direction) if args.model else {}
    ecfg = replace(cfg.eval_config(), n_channels=len(channels))
    chosen = tuple(m for m in metrics if m in cfg.eval.metrics) or metrics
    result = evaluate(
        cfg.model.direction, channels, {k: v[0] for k, v in loaded.items()}, ecfg,
        metrics=chosen, threads=cfg.run.threads,
    )
    result.provenance.update({
        "config_hash": cfg.hash,
        "seed": cfg.run.seed,
        "channels": channel_provenance(channels),
        "models": {f"{cid}@{snr:g}": mid for (cid, snr), (_, mid) in sorted(loaded.items())},
        "hdnn_se_convention": "effective linear map (least-squares fit) scored with the FD formula",
    })
    out = Path(args.csv)
    out.parent.mkdir(parents=True, exist_ok=True)
    result.write_csv(out, comments=[
        f"config_hash={cfg.hash} seed={cfg.run.seed} direction={cfg.model.direction}",
        "provenance=" + io.canonical_json(result.provenance),
    ])
    io.dump(result.summary(), args.summary or out.with_suffix(".json"))
    print(out)
    return EXIT_OK


def cmd_eval_ber(args) -> int:
    return _cmd_eval(args, ("ber", "nmse"))


def cmd_eval_se(args) -> int:
    return _cmd_eval(args, ("se",))


def cmd_decompose_check(args) -> int:
    try:
        a = io.matrix_from_dict(io.load(args.matrix))
    except (KeyError, ValueError) as exc:
        raise InvalidConfig(f"{args.matrix} is not a matrix file: {exc}", field="matrix") from exc
    dec = decompose_unit_modulus(a)
    report = {
        "c": dec.c,
        "reconstruction_error": float(np.linalg.norm(a - dec.reconstruct())),
        "max_modulus_deviation": float(max(np.abs(np.abs(dec.r1) - 1).max(), np.abs(np.abs(dec.r2) - 1).max())),
    }
    print(json.dumps(report, indent=1))
    if args.out:
        report.update({"r1": io.matrix_to_dict(dec.r1), "r2": io.matrix_to_dict(dec.r2)})
        io.dump(report, args.out)
    return EXIT_OK


def cmd_selftest(args) -> int:
    results = run_selftest(seed=args.seed or 0, corrupt=args.corrupt)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("selftest FAILED: " + ", ".join(failed))
        return EXIT_SELFTEST
    print("selftest passed")
    return EXIT_OK


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hybridbf", description="Hybrid analog/digital beamforming with complex-valued networks.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *, out_help="output directory", seed_help="master seed for training/evaluation streams"):
        p.add_argument("--config", help="INI file with [channel] [model] [train] [eval] [run] sections")
        p.add_argument("--seed", type=int, help=seed_help)
        p.add_argument("--out", help=out_help)

    g = sub.add_parser("gen-channel", help="generate clustered mmWave channel files")
    common(g, seed_help="seed for the channel draws")
    g.add_argument("--nt", type=int, help="transmit antennas (required)")
    g.add_argument("--nr", type=int, help="receive antennas (required)")
    g.add_argument("--channels", type=int, help="number of realizations (default 1)")
    g.add_argument("--clusters", type=int)
    g.add_argument("--rays", type=int)
    g.add_argument("--spread-deg", type=float)
    g.set_defaults(func=cmd_gen_channel)

    t = sub.add_parser("train", help="train one HDNN per (channel, SNR)")
    common(t)
    t.add_argument("--channel", nargs="+", required=True, help="channel files or directories")
    t.add_argument("--preset", choices=("standard", "half_rf"))
    t.add_argument("--direction", choices=("downlink", "uplink"))
    t.add_argument("--ns", type=int, help="data streams (default: UE antennas)")
    t.add_argument("--nrf", type=int, help="RF chains (standard preset only)")
    t.add_argument("--snr", help="training SNR grid in dB: 'a:step:b' or 'a,b,c'")
    t.add_argument("--samples", type=int)
    t.add_argument("--batch", type=int)
    t.add_argument("--epochs", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--metrics", help="training metrics JSON (default OUT/train_metrics.json)")
    t.set_defaults(func=cmd_train)

    for name, func, helptext in (
        ("eval-ber", cmd_eval_ber, "Monte Carlo BER (and NMSE) of FD and HDNN"),
        ("eval-se", cmd_eval_se, "spectral efficiency of FD and HDNN"),
    ):
        e = sub.add_parser(name, help=helptext)
        e.add_argument("--config")
        e.add_argument("--seed", type=int)
        e.add_argument("--channel", nargs="+", required=True)
        e.add_argument("--model", nargs="*", help="model files or directories; omit for FD only")
        e.add_argument("--direction", choices=("downlink", "uplink"))
        e.add_argument("--snr")
        e.add_argument("--trials", type=int, help="symbol vectors per (channel, SNR)")
        e.add_argument("--threads", type=int, help="parallel evaluation processes")
        e.add_argument("--csv", required=True, help="output CSV path")
        e.add_argument("--summary", help="JSON summary path (default: CSV path with .json)")
        e.set_defaults(func=func)

    d = sub.add_parser("decompose-check", help="unit-modulus decomposition of a matrix file")
    d.add_argument("--matrix", required=True, help="JSON matrix or channel file")
    d.add_argument("--out")
    d.set_defaults(func=cmd_decompose_check)

    s = sub.add_parser("selftest", help="fast invariant checks")
    s.add_argument("--seed", type=int)
    s.add_argument("--corrupt", choices=sorted(CHECKS), help="test hook: make one check's tolerance unattainable")
    s.set_defaults(func=cmd_selftest)
    return parser


def _attach_values(argv: list[str]) -> list[str]:
    """Rewrite ``--snr -10:2:10`` as ``--snr=-10:2:10`` so negative grids parse."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--snr" and i + 1 < len(argv):
            out.append(f"--snr={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_attach_values(list(sys.argv[1:] if argv is None else argv)))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if args.command == "gen-channel":  # --seed seeds the channel draws here
        args.channel_seed, args.seed = args.seed, None
    try:
        return args.func(args)
    except (InvalidConfig, InvalidPreset, OddStreams) as exc:
        hint = FLAG_FOR.get(getattr(exc, "field", None))
        hint = f" (flag --{hint.replace('_', '-')})" if hint else ""
        print(f"hybridbf: invalid configuration: {exc}{hint}", file=sys.stderr)
        return EXIT_CONFIG
    except (HybridBFError, OSError, ValueError) as exc:
        print(f"hybridbf: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
