"""Quasi-static multipath channels, AWGN and maximum-ratio combining."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

# Extended Vehicular A power-delay profile: (excess delay ns, relative power dB)
EVA_PDP: tuple[tuple[float, float], ...] = (
    (0.0, 0.0),
    (30.0, -1.5),
    (150.0, -1.4),
    (310.0, -3.6),
    (370.0, -0.6),
    (710.0, -9.1),
    (1090.0, -7.0),
    (1730.0, -12.0),
    (2510.0, -16.9),
)

TEN_RAY_PATHS = 10
TEN_RAY_MAX_DELAY = 5.4e-6

CHANNEL_KINDS = ("ten_ray", "eva", "custom", "awgn")


class GuardTooShortWarning(UserWarning):
    """Channel memory exceeds the guard interval; blocks will see ISI."""


@dataclass(frozen=True)
class ChannelModel:
    """Channel description, independent of any particular draw.

    ``custom`` models take either a power-delay profile (Rayleigh taps) or a
    fixed tap vector ``taps`` at the sample spacing (deterministic).
    """

    kind: str = "eva"
    sample_rate: float = 1e7
    max_excess_delay: float = TEN_RAY_MAX_DELAY
    n_paths: int = TEN_RAY_PATHS
    pdp: Optional[tuple[tuple[float, float], ...]] = None
    taps: Optional[tuple[complex, ...]] = None

    def __post_init__(self):
        if self.kind not in CHANNEL_KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be > 0")
        if self.kind == "eva" and self.pdp is None:
            object.__setattr__(self, "pdp", EVA_PDP)
        if self.kind == "custom" and (self.pdp is None) == (self.taps is None):
            raise ValueError("custom channel needs exactly one of pdp or taps")
        if self.pdp is not None:
            object.__setattr__(self, "pdp", tuple((float(d), float(p)) for d, p in self.pdp))
        if self.taps is not None:
            object.__setattr__(self, "taps", tuple(complex(t) for t in self.taps))

    @property
    def label(self) -> str:
        return self.kind

    def quantized_profile(self) -> tuple[np.ndarray, np.ndarray]:
        """Tap indices and linear average powers after grid quantization.

        Delays are rounded to the nearest sample, colliding taps have their
        powers summed and the result is normalized to unit total power.
        """
        if self.pdp is None:
            raise ValueError(f"{self.kind} model has no power-delay profile")
        delays_ns = np.array([d for d, _ in self.pdp])
        power = 10.0 ** (np.array([p for _, p in self.pdp]) / 10.0)
        idx = np.floor(delays_ns * 1e-9 * self.sample_rate + 0.5).astype(int)
        taps = np.unique(idx)
        merged = np.array([power[idx == t].sum() for t in taps])
        return taps, merged / merged.sum()

    def max_delay_samples(self) -> int:
        """Largest tap index any realization can have."""
        if self.kind == "awgn":
            return 0
        if self.kind == "ten_ray":
            # uniform on [0, max) rounded to nearest
            return int(np.floor(self.max_excess_delay * self.sample_rate + 0.5))
        if self.taps is not None:
            return len(self.taps) - 1
        return int(self.quantized_profile()[0].max())


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    cir: np.ndarray
    n_taps: int
    cfr: np.ndarray = field(repr=False)

    @classmethod
    def from_taps(cls, taps, n: int) -> "ChannelRealization":
        taps = np.asarray(taps, dtype=np.complex128).ravel()
        if len(taps) > n:
            raise ValueError(f"channel has {len(taps)} taps, block only {n} samples")
        cir = np.zeros(n, dtype=np.complex128)
        cir[: len(taps)] = taps
        nz = np.flatnonzero(cir)
        n_taps = int(nz[-1]) + 1 if nz.size else 1
        # fft(cir) diagonalizes the circulant channel under the orthonormal DFT
        cfr = np.fft.fft(cir)
        cir.setflags(write=False)
        cfr.setflags(write=False)
        return cls(cir, n_taps, cfr)

    def scaled(self, factor: float) -> "ChannelRealization":
        return ChannelRealization.from_taps(self.cir[: self.n_taps] * factor, len(self.cir))


def complex_normal(rng: np.random.Generator, size, var: float = 1.0) -> np.ndarray:
    """Circular complex Gaussian samples with total variance ``var``."""
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def realize(model: ChannelModel, rng: np.random.Generator, n: int) -> ChannelRealization:
    """Draw one block-static realization for a block of ``n`` samples."""
    if model.kind == "awgn":
        return ChannelRealization.from_taps([1.0], n)
    if model.kind == "custom" and model.taps is not None:
        return ChannelRealization.from_taps(model.taps, n)
    if model.max_delay_samples() >= n:
        raise ValueError(
            f"channel delay of {model.max_delay_samples()} samples exceeds block of {n}"
        )
    if model.kind == "ten_ray":
        gains = complex_normal(rng, model.n_paths, 1.0 / model.n_paths)
        delays = rng.uniform(0.0, model.max_excess_delay, model.n_paths)
        idx = np.floor(delays * model.sample_rate + 0.5).astype(int)
        taps = np.zeros(idx.max() + 1, dtype=np.complex128)
        np.add.at(taps, idx, gains)
        return ChannelRealization.from_taps(taps, n)
    idx, power = model.quantized_profile()
    taps = np.zeros(idx.max() + 1, dtype=np.complex128)
    taps[idx] = complex_normal(rng, len(idx)) * np.sqrt(power)
    return ChannelRealization.from_taps(taps, n)


def apply(
    re: ChannelRealization,
    frame,
    rng: Optional[np.random.Generator],
    sigma2: float,
    guard: Optional[int] = None,
) -> np.ndarray:
    """Linear convolution with the CIR plus receiver AWGN.

    The output holds ``len(frame) + n_taps - 1`` samples. If ``guard`` is
    given and shorter than the channel memory a :class:`GuardTooShortWarning`
    is issued and the block is still processed.
    """
    samples = np.asarray(getattr(frame, "samples", frame), dtype=np.complex128)
    if guard is None:
        guard = getattr(frame, "g", None)
    if guard is not None and guard < re.n_taps - 1:
        warnings.warn(
            f"guard of {guard} samples shorter than channel memory {re.n_taps - 1}",
            GuardTooShortWarning,
            stacklevel=2,
        )
    out = np.convolve(samples, re.cir[: re.n_taps])
    if sigma2 > 0:
        if rng is None:
            raise ValueError("noise requested without a generator")
        out = out + complex_normal(rng, out.shape, sigma2)
    return out


def normalize_branches(reals: Sequence[ChannelRealization]) -> list[ChannelRealization]:
    """Scale each branch by ``1/sqrt(branches)`` so total receive power is that
    of a single antenna."""
    if len(reals) == 1:
        return list(reals)
    f = 1.0 / np.sqrt(len(reals))
    return [r.scaled(f) for r in reals]


def mrc_combine(y_list, cfr_list) -> tuple[np.ndarray, np.ndarray]:
    """Per-bin maximum-ratio combining of frequency-domain branches.

    Returns ``(z, cfr_eff)`` with ``z = sum(conj(L_i) y_i) / sqrt(sum |L_i|^2)``
    and ``cfr_eff = sqrt(sum |L_i|^2)``. The combined block then looks like
    a single branch through ``cfr_eff`` with the original (white) noise
    level, so the single-branch equalizers apply unchanged, and
    ``z / cfr_eff`` is the usual MRC estimate. A single branch is passed
    through untouched. Branch scaling for power normalization
    (:func:`normalize_branches`) must already be part of ``cfr_list``.
    """
    ys = np.atleast_2d(np.asarray(y_list, dtype=np.complex128))
    cs = np.atleast_2d(np.asarray(cfr_list, dtype=np.complex128))
    if ys.shape != cs.shape:
        raise ValueError(f"branch shape mismatch: {ys.shape} vs {cs.shape}")
    if ys.shape[0] == 1:
        return ys[0].copy(), cs[0].copy()
    power = np.sum(np.abs(cs) ** 2, axis=0)
    amp = np.sqrt(power)
    num = np.sum(cs.conj() * ys, axis=0)
    z = np.zeros_like(num)
    ok = amp > 0
    z[ok] = num[ok] / amp[ok]
    return z, amp.astype(np.complex128)
