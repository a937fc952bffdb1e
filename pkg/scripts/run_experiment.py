#!/usr/bin/env python3
"""Run the full pipeline (channels -> training -> BER and SE evaluation).

Desk scale (default) mirrors the acceptance setup and takes a few minutes
per direction on one core. Paper scale uses 128 BS antennas and 500k
training samples per (channel, SNR) model and takes many hours.

    python scripts/run_experiment.py --out runs/desk
    python scripts/run_experiment.py --scale paper --direction uplink --out runs/paper_ul
"""

from __future__ import annotations

import argparse
import csv
import json
import time
from collections import defaultdict
from pathlib import Path

import numpy as np

from hybridbf.cli import main as cli
from hybridbf.evalsim import parse_snr_grid

SCALES = {
    "desk": {"n_bs": 16, "channels": 5, "samples": 100_000, "trials": 50_000,
             "ber_grid": "0:2:10", "se_grid": "-10:5:10"},
    "paper": {"n_bs": 128, "channels": 10, "samples": 500_000, "trials": 200_000,
              "ber_grid": "-10:2:10", "se_grid": "-10:2:10"},
}


def _step(argv: list[str]) -> None:
    t0 = time.perf_counter()
    code = cli(argv)
    if code != 0:
        raise SystemExit(f"hybridbf {argv[0]} failed with exit code {code}")
    print(f"  {argv[0]}: {time.perf_counter() - t0:.1f} s")


def _summarize(path: Path) -> dict[float, dict[str, float]]:
    """Median over channels of every metric, per SNR."""
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    values = defaultdict(lambda: defaultdict(list))
    for row in csv.DictReader(lines):
        values[float(row["snr_db"])][row["metric"]].append(float(row["value"]))
    return {snr: {m: float(np.median(v)) for m, v in ms.items()} for snr, ms in sorted(values.items())}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", choices=sorted(SCALES), default="desk")
    ap.add_argument("--direction", choices=("downlink", "uplink"), default="downlink")
    ap.add_argument("--ns", type=int, default=2, help="streams (= UE antennas)")
    ap.add_argument("--preset", default="standard")
    ap.add_argument("--epochs", type=int, default=5)
    ap.add_argument("--samples", type=int, help="override the training-set size")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("runs/experiment"))
    args = ap.parse_args()

    s = dict(SCALES[args.scale])
    if args.samples:
        s["samples"] = args.samples
    out = args.out
    ch, models, res = out / "channels", out / "models", out / "results"
    # uplink channels are stored receiver x transmitter: BS antennas x UE antennas
    n_tx, n_rx = (s["n_bs"], args.ns) if args.direction == "downlink" else (args.ns, s["n_bs"])
    grids = sorted(set(np.round(parse_snr_grid(s["ber_grid"]) + parse_snr_grid(s["se_grid"]), 9)))
    train_grid = ",".join(f"{g:g}" for g in grids)

    print(f"{args.scale} scale, {args.direction}, {s['n_bs']} BS antennas, {args.ns} streams")
    _step(["gen-channel", "--nt", str(n_tx), "--nr", str(n_rx), "--channels", str(s["channels"]),
           "--seed", str(args.seed), "--out", str(ch)])
    _step(["train", "--channel", str(ch), "--direction", args.direction, "--preset", args.preset,
           "--ns", str(args.ns), "--snr", train_grid, "--samples", str(s["samples"]),
           "--epochs", str(args.epochs), "--seed", str(args.seed), "--out", str(models)])
    _step(["eval-ber", "--channel", str(ch), "--model", str(models), "--direction", args.direction,
           "--snr", s["ber_grid"], "--trials", str(s["trials"]), "--seed", str(args.seed),
           "--csv", str(res / "ber.csv")])
    _step(["eval-se", "--channel", str(ch), "--model", str(models), "--direction", args.direction,
           "--snr", s["se_grid"], "--seed", str(args.seed), "--csv", str(res / "se.csv")])

    summary = {"ber": _summarize(res / "ber.csv"), "se": _summarize(res / "se.csv")}
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    for kind, table in summary.items():
        print(f"\nmedian over channels ({kind})")
        for snr, metrics in table.items():
            print(f"  {snr:6.1f} dB  " + "  ".join(f"{m}={v:.4g}" for m, v in sorted(metrics.items())))


if __name__ == "__main__":
    main()
