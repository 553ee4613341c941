"""Gray QAM mapping, block framing and the OCDM/OFDM transceivers.

Square M-QAM uses an independent Gray code on each axis. The first half of
each symbol's bits (MSB first) selects the in-phase level, the second half
the quadrature level, and an all-zero axis code maps to the largest
positive amplitude. For 4-QAM this gives::

    00 -> (+1+1j)/sqrt(2)    01 -> (+1-1j)/sqrt(2)
    10 -> (-1+1j)/sqrt(2)    11 -> (-1-1j)/sqrt(2)

and for 16-QAM the per-axis table is ``00:+3, 01:+1, 11:-1, 10:-3`` (before
scaling by ``1/sqrt(10)``). Constellation index ``i`` is the integer whose
binary expansion is the symbol's bit pattern.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .channel import ChannelRealization, mrc_combine
from .dfnt import DfntPlan, dfnt, idfnt
from .equalize import EqualizerSpec, coeffs, fde_apply, tde_apply, tde_design

QAM_ORDERS = (4, 16, 64)
GUARD_MODES = ("CP", "ZP")
RECEIVER_VARIANTS = ("R1_TDE", "R1_FDE", "R2")


def _gray(i: np.ndarray) -> np.ndarray:
    return i ^ (i >> 1)


@dataclass(frozen=True, eq=False)
class Constellation:
    order: int
    points: np.ndarray = field(repr=False)
    bit_map: np.ndarray = field(repr=False)

    @property
    def bits_per_symbol(self) -> int:
        return int(self.bit_map.shape[1])


@lru_cache(maxsize=None)
def qam(order: int) -> Constellation:
    if order not in QAM_ORDERS:
        raise ValueError(f"unsupported QAM order {order}; choose from {QAM_ORDERS}")
    k = int(np.log2(order))
    half = k // 2
    side = 1 << half
    levels = np.arange(side)
    # amplitude of level index j is side-1-2j; axis code of j is gray(j)
    amp_of_code = np.empty(side)
    amp_of_code[_gray(levels)] = side - 1 - 2 * levels
    idx = np.arange(order)
    i_code, q_code = idx >> half, idx & (side - 1)
    points = amp_of_code[i_code] + 1j * amp_of_code[q_code]
    points = points / np.sqrt(np.mean(np.abs(points) ** 2))
    bit_map = (idx[:, None] >> np.arange(k - 1, -1, -1)[None, :]) & 1
    points.setflags(write=False)
    bit_map = bit_map.astype(np.uint8)
    bit_map.setflags(write=False)
    return Constellation(order, points, bit_map)


def map_bits(c: Constellation, bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64).ravel()
    k = c.bits_per_symbol
    if bits.size % k:
        raise ValueError(f"{bits.size} bits is not a multiple of {k} bits per symbol")
    weights = 1 << np.arange(k - 1, -1, -1)
    return c.points[bits.reshape(-1, k) @ weights]


def demap_symbols(c: Constellation, y) -> np.ndarray:
    """Hard minimum-distance decisions; exact ties go to the lowest index."""
    y = np.asarray(y, dtype=np.complex128).ravel()
    d = np.abs(y[:, None] - c.points[None, :]) ** 2
    return c.bit_map[np.argmin(d, axis=1)].ravel()


# -- framing ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FramedBlock:
    samples: np.ndarray
    guard: str
    g: int


def add_guard(s, g: int, mode: str = "CP") -> FramedBlock:
    s = np.asarray(s, dtype=np.complex128)
    n = s.shape[-1]
    if mode not in GUARD_MODES:
        raise ValueError(f"unknown guard mode {mode!r}")
    if not 0 <= g <= n:
        raise ValueError(f"guard length {g} outside [0, {n}]")
    if mode == "CP":
        head = s[..., n - g:]
    else:
        head = np.zeros(s.shape[:-1] + (g,), dtype=np.complex128)
    return FramedBlock(np.concatenate([head, s], axis=-1), mode, int(g))


def strip_guard(r, g: int, mode: str, n: int) -> np.ndarray:
    """Recover the length-``n`` circular block from received samples.

    CP drops the prefix. ZP takes the body and adds up to ``g`` trailing
    samples onto its head (overlap-and-add). Works along the last axis.
    """
    r = np.asarray(r, dtype=np.complex128)
    if mode not in GUARD_MODES:
        raise ValueError(f"unknown guard mode {mode!r}")
    if r.shape[-1] < n + g:
        raise ValueError(f"need at least {n + g} samples, got {r.shape[-1]}")
    body = r[..., g:g + n].copy()
    if mode == "ZP":
        tail = r[..., g + n:g + n + g]
        body[..., : tail.shape[-1]] += tail
    return body


# -- transceivers -----------------------------------------------------------

def ocdm_modulate(plan: DfntPlan, x) -> np.ndarray:
    return idfnt(plan, x)


def ofdm_modulate(x) -> np.ndarray:
    return np.fft.ifft(np.asarray(x, dtype=np.complex128), norm="ortho")


def ofdm_demodulate(r) -> np.ndarray:
    return np.fft.fft(np.asarray(r, dtype=np.complex128), norm="ortho")


@dataclass(frozen=True)
class ReceiverSpec:
    variant: str = "R2"
    equalizer: EqualizerSpec = field(default_factory=EqualizerSpec)

    def __post_init__(self):
        if self.variant not in RECEIVER_VARIANTS:
            raise ValueError(f"unknown receiver variant {self.variant!r}")
        tde = self.equalizer.kind == "TDE"
        if self.variant == "R1_TDE" and not tde:
            raise ValueError("R1_TDE requires a TDE equalizer")
        if self.variant != "R1_TDE" and tde:
            raise ValueError(f"{self.variant} supports only single-tap equalizers")


ChannelInfo = Union[ChannelRealization, Sequence[ChannelRealization]]


def _branches(r, h_info: ChannelInfo, n: int) -> tuple[np.ndarray, list[ChannelRealization]]:
    reals = [h_info] if isinstance(h_info, ChannelRealization) else list(h_info)
    r = np.atleast_2d(np.asarray(r, dtype=np.complex128))
    if r.shape != (len(reals), n):
        raise ValueError(f"expected {len(reals)} branch(es) of {n} samples, got {r.shape}")
    for re in reals:
        if len(re.cfr) != n:
            raise ValueError(f"channel realization is for n={len(re.cfr)}, block is {n}")
    return r, reals


def _single_tap(spec: EqualizerSpec, rho, y, reals, gamma) -> np.ndarray:
    z, cfr = mrc_combine(y, [re.cfr for re in reals])
    g = coeffs(spec, cfr, rho)
    return np.fft.ifft(fde_apply(z, gamma, g), norm="ortho")


def ocdm_receive(plan: DfntPlan, spec: ReceiverSpec, r, h_info: ChannelInfo, rho: float) -> np.ndarray:
    """Recover the symbol block from guard-stripped samples.

    ``r`` is one block or a ``(branches, n)`` array with one realization per
    branch in ``h_info``. ``rho`` is the linear per-symbol SNR used by MMSE
    and the TDE design (``inf`` for noise-free).
    """
    r, reals = _branches(r, h_info, plan.n)
    if spec.variant == "R2":
        y = np.fft.fft(r, axis=-1, norm="ortho")
        return _single_tap(spec.equalizer, rho, y, reals, plan.gamma)
    rp = dfnt(plan, r)
    if spec.variant == "R1_FDE":
        y = np.fft.fft(rp, axis=-1, norm="ortho")
        return _single_tap(spec.equalizer, rho, y, reals, 1.0)
    taps = tde_design([re.cir for re in reals], spec.equalizer.taps, rho, n=plan.n)
    return tde_apply(taps, rp)


def ofdm_receive(spec: EqualizerSpec, r, h_info: ChannelInfo, rho: float) -> np.ndarray:
    """OFDM baseline: DFT, (MRC,) single-tap equalization per subcarrier."""
    r = np.atleast_2d(np.asarray(r, dtype=np.complex128))
    r, reals = _branches(r, h_info, r.shape[-1])
    y = ofdm_demodulate(r)
    z, cfr = mrc_combine(y, [re.cfr for re in reals])
    return coeffs(spec, cfr, rho) * z
