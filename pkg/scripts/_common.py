"""Shared helpers for the experiment scripts."""
from __future__ import annotations

import argparse
from collections import defaultdict
from pathlib import Path

from ocdm.cli import records_to_csv
from ocdm.config import build_configs, load_config
from ocdm.sim import default_workers, ebn0_at_ber, run_sweeps

HERE = Path(__file__).resolve().parent


def parse_args(default_config: str, default_out: str) -> argparse.Namespace:
    p = argparse.ArgumentParser()
    p.add_argument("--config", default=str(HERE / "configs" / default_config))
    p.add_argument("--out", default=default_out)
    p.add_argument("--blocks", type=int, help="override max_blocks")
    p.add_argument("--workers", type=int, default=default_workers())
    p.add_argument("--plot", help="optional PNG path (needs matplotlib)")
    return p.parse_args()


def run(args):
    cfg = load_config(args.config)
    if args.blocks:
        cfg["stop"]["max_blocks"] = args.blocks
    records = run_sweeps(build_configs(cfg), workers=args.workers)
    Path(args.out).write_text(records_to_csv(records))
    curves = defaultdict(list)
    for r in records:
        curves[(r.system, r.receiver, r.equalizer, r.antennas)].append(r)
    return curves


def print_table(curves, target: float = 1e-3) -> None:
    keys = list(curves)
    grid = [r.ebn0_db for r in curves[keys[0]]]
    names = [f"{s}-{e}-{a}Rx" for s, _, e, a in keys]
    print("Eb/N0  " + "  ".join(f"{n:>14s}" for n in names))
    for i, e in enumerate(grid):
        print(f"{e:5.1f}  " + "  ".join(f"{curves[k][i].ber:14.3e}" for k in keys))
    print(f"Eb/N0 at BER {target:g}: " + ", ".join(
        f"{n} {ebn0_at_ber(curves[k], target):.2f} dB" for n, k in zip(names, keys)))


def plot(curves, path: str, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots()
    for (s, _, e, a), recs in curves.items():
        pts = [(r.ebn0_db, r.ber) for r in recs if r.ber > 0]
        ax.semilogy(*zip(*pts), marker="o", label=f"{s} {e} {a}Rx")
    ax.set_xlabel("Eb/N0 (dB)")
    ax.set_ylabel("BER")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.savefig(path, dpi=120)
