"""Command-line front end.

Subcommands::

    ocdm run --config eva.yaml [--seed 7] [--out results.csv] [--workers 4]
    ocdm dump-waveform --n 64 --symbols impulse:5 --out wave.bin
    ocdm selftest

Worker count defaults to ``$OCDM_WORKERS`` (else 1).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import ConfigError, build_configs, load_config
from .dfnt import circular_convolve, dfnt, dfnt_matrix, eigencheck, idfnt, make_plan
from .equalize import SingularChannelError
from .modem import add_guard, map_bits, ocdm_modulate, ofdm_modulate, qam
from .sim import BerRecord, SweepError, default_workers, run_sweeps

CSV_COLUMNS = (
    "ebn0_db", "system", "receiver", "equalizer", "channel", "qam",
    "antennas", "blocks", "bits_sent", "bit_errors", "ber", "seed",
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_SINGULAR = 0, 1, 2, 3


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def records_to_csv(records: Sequence[BerRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        row = [getattr(r, c) for c in CSV_COLUMNS]
        if r.bit_errors == 0:
            row[CSV_COLUMNS.index("ber")] = 0
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_waveform(path, samples) -> None:
    """Raw little-endian float64 (re, im) pairs, no header."""
    Path(path).write_bytes(np.asarray(samples, dtype="<c16").tobytes())


def read_waveform(path) -> np.ndarray:
    return np.frombuffer(Path(path).read_bytes(), dtype="<c16").astype(np.complex128)


def _manifest_path(out: Path) -> Path:
    return out.with_name(out.stem + ".manifest.json")


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.abort_on_singular:
            cfg["on_singular"] = "abort"
        configs = build_configs(cfg)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    workers = args.workers if args.workers is not None else default_workers()
    started = datetime.now(timezone.utc)
    try:
        records = run_sweeps(configs, workers=workers)
    except SweepError as exc:
        singular = any(isinstance(e, SingularChannelError) for e in exc.failures.values())
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR if singular else EXIT_FAIL
    finished = datetime.now(timezone.utc)

    out = Path(args.out)
    out.write_text(records_to_csv(records))
    manifest = {
        "tool": "ocdm",
        "version": __version__,
        "started": started.isoformat(),
        "finished": finished.isoformat(),
        "workers": workers,
        "config": cfg,
        "points": [
            {
                "ebn0_db": r.ebn0_db,
                "system": r.system,
                "receiver": r.receiver,
                "equalizer": r.equalizer,
                "qam": r.qam,
                "antennas": r.antennas,
                "singular_blocks": r.singular_blocks,
                "runtime_s": r.runtime_s,
            }
            for r in records
        ],
    }
    manifest_path = Path(args.manifest) if args.manifest else _manifest_path(out)
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    for r in records:
        if r.singular_blocks:
            print(
                f"warning: {r.system}/{r.equalizer} at {r.ebn0_db:g} dB skipped "
                f"{r.singular_blocks} singular block(s)",
                file=sys.stderr,
            )
    print(f"wrote {len(records)} rows to {out} and manifest {manifest_path}")
    return EXIT_OK


def _symbols(spec: str, n: int, order: int) -> np.ndarray:
    kind, _, arg = spec.partition(":")
    if kind == "impulse":
        k = int(arg or 0)
        if not 0 <= k < n:
            raise ValueError(f"impulse index {k} outside [0, {n})")
        x = np.zeros(n, dtype=np.complex128)
        x[k] = 1.0
        return x
    if kind == "random":
        rng = np.random.default_rng(int(arg or 0))
        c = qam(order)
        return map_bits(c, rng.integers(0, 2, n * c.bits_per_symbol))
    raise ValueError(f"unknown symbol spec {spec!r}; use impulse:K or random:SEED")


def cmd_dump(args) -> int:
    try:
        x = _symbols(args.symbols, args.n, args.qam)
        s = ocdm_modulate(make_plan(args.n), x) if args.system == "OCDM" else ofdm_modulate(x)
        if args.guard:
            s = add_guard(s, args.guard, args.mode).samples
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    write_waveform(args.out, s)
    print(f"wrote {len(s)} samples to {args.out}")
    return EXIT_OK


SELFTEST_SIZES = tuple(range(1, 17)) + (64, 256, 1024)


def selftest(out=None) -> bool:
    """Check the transform against its dense definition; prints one line per size."""
    out = out if out is not None else sys.stdout
    rng = np.random.default_rng(0)
    ok = True
    for n in SELFTEST_SIZES:
        plan = make_plan(n)
        phi = dfnt_matrix(n)
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        unitary = np.abs(phi.conj().T @ phi - np.eye(n)).max()
        fwd = np.abs(dfnt(plan, x) - phi @ x).max()
        inv = np.abs(idfnt(plan, x) - phi.conj().T @ x).max()
        conv = np.abs(dfnt(plan, circular_convolve(h, x)) - circular_convolve(h, dfnt(plan, x))).max()
        eig = eigencheck(plan)
        passed = unitary < 1e-10 and fwd < 1e-9 and inv < 1e-9 and conv < 1e-9 and eig < 1e-9
        ok &= passed
        print(
            f"{'PASS' if passed else 'FAIL'} n={n:<5d} unitarity={unitary:.1e} fwd={fwd:.1e} "
            f"inv={inv:.1e} conv={conv:.1e} eig={eig:.1e}",
            file=out,
        )
    return ok


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ocdm", description="OCDM/OFDM link simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a BER sweep from a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", default="results.csv")
    run.add_argument("--manifest", help="manifest path (default: <out stem>.manifest.json)")
    run.add_argument("--workers", type=int)
    run.add_argument("--abort-on-singular", action="store_true",
                     help="fail instead of skipping blocks with a ZF spectral null")
    run.set_defaults(func=cmd_run)

    dump = sub.add_parser("dump-waveform", help="write one modulated block as raw complex128")
    dump.add_argument("--n", type=int, default=64)
    dump.add_argument("--symbols", default="impulse:0", help="impulse:K or random:SEED")
    dump.add_argument("--system", choices=("OCDM", "OFDM"), default="OCDM")
    dump.add_argument("--qam", type=int, default=4)
    dump.add_argument("--guard", type=int, default=0)
    dump.add_argument("--mode", choices=("CP", "ZP"), default="CP")
    dump.add_argument("--out", required=True)
    dump.set_defaults(func=cmd_dump)

    st = sub.add_parser("selftest", help="verify the transform against its dense definition")
    st.set_defaults(func=lambda args: EXIT_OK if selftest() else EXIT_FAIL)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
