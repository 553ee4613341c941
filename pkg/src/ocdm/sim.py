"""Monte Carlo BER engine.

Every block draws its randomness from ``default_rng([seed, point, block])``
so results do not depend on scheduling or worker count, and different
system variants with the same seed see identical bits, channels and noise.
The per-block draw order is: one channel realization per antenna, the
information bits, then receiver noise per antenna.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from statistics import NormalDist
from typing import Iterable, Optional, Sequence

import numpy as np

from .channel import ChannelModel, apply, normalize_branches, realize
from .dfnt import make_plan
from .equalize import EqualizerSpec, SingularChannelError
from .modem import (
    GUARD_MODES,
    QAM_ORDERS,
    ReceiverSpec,
    add_guard,
    demap_symbols,
    map_bits,
    ocdm_modulate,
    ocdm_receive,
    ofdm_modulate,
    ofdm_receive,
    qam,
    strip_guard,
)

SYSTEMS = ("OCDM", "OFDM")
WORKERS_ENV = "OCDM_WORKERS"


@dataclass(frozen=True)
class SimConfig:
    n: int = 1024
    bandwidth_hz: float = 1e7
    qam_order: int = 4
    guard_length: int = 64
    guard_mode: str = "CP"
    system: str = "OCDM"
    receiver: ReceiverSpec = field(default_factory=ReceiverSpec)
    channel: ChannelModel = field(default_factory=ChannelModel)
    antennas: int = 1
    ebn0_grid_db: tuple[float, ...] = ()
    seed: int = 0
    min_bit_errors: Optional[int] = 200
    max_blocks: int = 20000
    on_singular: str = "count"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.qam_order not in QAM_ORDERS:
            raise ValueError(f"qam_order must be one of {QAM_ORDERS}")
        if self.guard_mode not in GUARD_MODES:
            raise ValueError(f"guard_mode must be one of {GUARD_MODES}")
        if not 0 <= self.guard_length <= self.n:
            raise ValueError("guard_length must lie in [0, n]")
        if self.system not in SYSTEMS:
            raise ValueError(f"system must be one of {SYSTEMS}")
        if self.system == "OFDM" and self.receiver.equalizer.kind == "TDE":
            raise ValueError("OFDM baseline supports only single-tap equalizers")
        if self.antennas < 1:
            raise ValueError("antennas must be >= 1")
        if self.max_blocks < 1:
            raise ValueError("max_blocks must be >= 1")
        if self.on_singular not in ("count", "abort"):
            raise ValueError("on_singular must be 'count' or 'abort'")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        grid = tuple(float(e) for e in self.ebn0_grid_db)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("ebn0_grid_db must be strictly increasing")
        object.__setattr__(self, "ebn0_grid_db", grid)
        if self.channel.sample_rate != self.bandwidth_hz:
            object.__setattr__(self, "channel", replace(self.channel, sample_rate=self.bandwidth_hz))

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.qam_order))

    @property
    def receiver_label(self) -> str:
        return "DFT" if self.system == "OFDM" else self.receiver.variant

    @property
    def equalizer_label(self) -> str:
        eq = self.receiver.equalizer
        return f"TDE{eq.taps}" if eq.kind == "TDE" else eq.kind


@dataclass(frozen=True)
class BerRecord:
    ebn0_db: float
    system: str
    receiver: str
    equalizer: str
    channel: str
    qam: int
    antennas: int
    blocks: int
    bits_sent: int
    bit_errors: int
    ber: float
    seed: int
    singular_blocks: int = 0
    runtime_s: float = field(default=0.0, compare=False)

    def interval(self, confidence: float = 0.95) -> tuple[float, float]:
        return wilson_interval(self.bit_errors, self.bits_sent, confidence)


def ebn0_to_sigma2(ebn0_db: float, qam_order: int) -> float:
    """Complex noise variance per sample for unit-energy symbols."""
    if qam_order not in QAM_ORDERS:
        raise ValueError(f"unsupported QAM order {qam_order}")
    if math.isinf(ebn0_db) and ebn0_db > 0:
        return 0.0
    return 1.0 / (math.log2(qam_order) * 10.0 ** (ebn0_db / 10.0))


def block_rng(seed: int, point: int, block: int) -> np.random.Generator:
    return np.random.default_rng([seed, point, block])


def simulate_block(cfg: SimConfig, point: int, block: int, sigma2: float, plan=None):
    """Run one block end to end; returns ``(bits, detected_bits)``."""
    rng = block_rng(cfg.seed, point, block)
    n, g = cfg.n, cfg.guard_length
    reals = normalize_branches([realize(cfg.channel, rng, n) for _ in range(cfg.antennas)])
    const = qam(cfg.qam_order)
    bits = rng.integers(0, 2, n * const.bits_per_symbol, dtype=np.uint8)
    x = map_bits(const, bits)
    if cfg.system == "OCDM":
        plan = plan if plan is not None else make_plan(n)
        s = ocdm_modulate(plan, x)
    else:
        s = ofdm_modulate(x)
    frame = add_guard(s, g, cfg.guard_mode)
    r = np.stack([strip_guard(apply(re, frame, rng, sigma2), g, cfg.guard_mode, n) for re in reals])
    rho = math.inf if sigma2 == 0 else 1.0 / sigma2
    if cfg.system == "OCDM":
        xh = ocdm_receive(plan, cfg.receiver, r, reals, rho)
    else:
        xh = ofdm_receive(cfg.receiver.equalizer, r, reals, rho)
    return bits, demap_symbols(const, xh)


def run_point(cfg: SimConfig, ebn0_db: float, point: int = 0) -> BerRecord:
    """Simulate blocks until the stop rule fires.

    Stops once ``bit_errors >= min_bit_errors`` (if set) or after
    ``max_blocks`` blocks. Blocks on which zero forcing meets an exactly
    singular bin are tallied in ``singular_blocks`` and carry no bits, unless
    ``on_singular == "abort"``, in which case the error propagates.
    """
    t0 = time.perf_counter()
    sigma2 = ebn0_to_sigma2(ebn0_db, cfg.qam_order)
    plan = make_plan(cfg.n) if cfg.system == "OCDM" else None
    errors = sent = blocks = singular = 0
    for t in range(cfg.max_blocks):
        if cfg.min_bit_errors is not None and errors >= cfg.min_bit_errors:
            break
        try:
            bits, detected = simulate_block(cfg, point, t, sigma2, plan)
        except SingularChannelError:
            if cfg.on_singular == "abort":
                raise
            singular += 1
            continue
        blocks += 1
        sent += bits.size
        errors += int(np.count_nonzero(bits != detected))
    return BerRecord(
        ebn0_db=float(ebn0_db),
        system=cfg.system,
        receiver=cfg.receiver_label,
        equalizer=cfg.equalizer_label,
        channel=cfg.channel.label,
        qam=cfg.qam_order,
        antennas=cfg.antennas,
        blocks=blocks,
        bits_sent=sent,
        bit_errors=errors,
        ber=errors / sent if sent else float("nan"),
        seed=cfg.seed,
        singular_blocks=singular,
        runtime_s=time.perf_counter() - t0,
    )


class SweepError(RuntimeError):
    """One or more sweep points failed; ``failures`` maps labels to errors."""

    def __init__(self, failures: dict[str, BaseException]):
        self.failures = failures
        lines = "; ".join(f"{k}: {v}" for k, v in failures.items())
        super().__init__(f"{len(failures)} sweep point(s) failed: {lines}")


def _point_task(args):
    cfg, ebn0, idx = args
    return run_point(cfg, ebn0, idx)


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    return max(1, int(value)) if value else 1


def run_sweeps(configs: Sequence[SimConfig], workers: Optional[int] = None) -> list[BerRecord]:
    """Run several variants over their grids.

    Rows come back point-major: all variants at the first grid index, then
    the second, and so on.
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    tasks = [
        (i, v, (cfg, e, i))
        for v, cfg in enumerate(configs)
        for i, e in enumerate(cfg.ebn0_grid_db)
    ]
    tasks.sort(key=lambda t: (t[0], t[1]))
    results: list[Optional[BerRecord]] = [None] * len(tasks)
    failures: dict[str, BaseException] = {}

    def label(task) -> str:
        cfg, e, _ = task[2]
        return f"{cfg.system}/{cfg.receiver_label}/{cfg.equalizer_label}@{e:g}dB"

    if workers == 1 or len(tasks) <= 1:
        for k, task in enumerate(tasks):
            try:
                results[k] = _point_task(task[2])
            except Exception as exc:  # collected and re-raised below
                failures[label(task)] = exc
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_point_task, task[2]) for task in tasks]
            for k, (task, fut) in enumerate(zip(tasks, futures)):
                try:
                    results[k] = fut.result()
                except Exception as exc:
                    failures[label(task)] = exc
    if failures:
        raise SweepError(failures)
    return list(results)


def run_sweep(cfg: SimConfig, workers: Optional[int] = None) -> list[BerRecord]:
    return run_sweeps([cfg], workers)


# -- result analysis --------------------------------------------------------

def wilson_interval(errors: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return (0.0, 1.0)
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = errors / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))


def ebn0_at_ber(records: Iterable[BerRecord], target: float) -> float:
    """Eb/N0 where a BER curve crosses ``target``, by log-linear interpolation.

    Returns ``nan`` if the curve never brackets the target.
    """
    pts = sorted((r.ebn0_db, r.ber) for r in records)
    for (e0, b0), (e1, b1) in zip(pts, pts[1:]):
        if b0 >= target >= b1 and b0 > 0:
            if b1 <= 0:
                return e1
            l0, l1, lt = math.log10(b0), math.log10(b1), math.log10(target)
            if l0 == l1:
                return e0
            return e0 + (lt - l0) * (e1 - e0) / (l1 - l0)
    return float("nan")
