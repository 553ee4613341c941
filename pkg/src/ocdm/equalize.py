"""Linear equalizers: single-tap ZF/MMSE in the frequency domain and a
Wiener transversal filter for time-domain equalization."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import solve_toeplitz

#: Bins with ``|cfr| < SINGULAR_TOL`` make zero forcing fail.
SINGULAR_TOL = 1e-12

EQUALIZER_KINDS = ("ZF", "MMSE", "TDE")


class SingularChannelError(ValueError):
    """Zero forcing was asked to invert a spectral null."""

    def __init__(self, bin_index: int, magnitude: float):
        self.bin_index = int(bin_index)
        self.magnitude = float(magnitude)
        super().__init__(
            f"singular channel: |cfr[{self.bin_index}]| = {self.magnitude:.3e} "
            f"< {SINGULAR_TOL:g}; use MMSE"
        )


@dataclass(frozen=True)
class EqualizerSpec:
    kind: str = "ZF"
    rho: Optional[float] = None
    taps: Optional[int] = None

    def __post_init__(self):
        if self.kind not in EQUALIZER_KINDS:
            raise ValueError(f"unknown equalizer kind {self.kind!r}")
        if self.rho is not None and not self.rho > 0:
            raise ValueError("rho must be > 0")
        if self.kind == "TDE" and (self.taps is None or self.taps < 1):
            raise ValueError("TDE needs taps >= 1")


def zf_coeffs(cfr) -> np.ndarray:
    cfr = np.asarray(cfr, dtype=np.complex128)
    mag = np.abs(cfr)
    bad = np.flatnonzero(mag < SINGULAR_TOL)
    if bad.size:
        raise SingularChannelError(bad[0], mag[bad[0]])
    return 1.0 / cfr


def mmse_coeffs(cfr, rho: float) -> np.ndarray:
    """``conj(cfr) / (|cfr|^2 + 1/rho)``; ``rho=inf`` is accepted."""
    if not rho > 0:
        raise ValueError("rho must be > 0")
    cfr = np.asarray(cfr, dtype=np.complex128)
    power = np.abs(cfr) ** 2
    if np.isinf(rho):
        # noise-free limit: ZF on usable bins, zero on nulls
        out = np.zeros_like(cfr)
        ok = power > 0
        out[ok] = 1.0 / cfr[ok]
        return out
    return cfr.conj() / (power + 1.0 / rho)


def coeffs(spec: EqualizerSpec, cfr, rho: Optional[float] = None) -> np.ndarray:
    """Per-bin coefficients for a ZF or MMSE spec.

    ``rho`` falls back to ``spec.rho`` when not given.
    """
    if spec.kind == "ZF":
        return zf_coeffs(cfr)
    if spec.kind == "MMSE":
        r = rho if rho is not None else spec.rho
        if r is None:
            raise ValueError("MMSE needs an SNR (rho)")
        return mmse_coeffs(cfr, r)
    raise ValueError(f"{spec.kind} is not a single-tap equalizer")


def fde_apply(y, gamma, g) -> np.ndarray:
    """``g * gamma * y`` elementwise (pass ``gamma=1`` to skip phase removal)."""
    y = np.asarray(y, dtype=np.complex128)
    gamma = np.broadcast_to(np.asarray(gamma, dtype=np.complex128), y.shape)
    g = np.asarray(g, dtype=np.complex128)
    if g.shape != y.shape:
        raise ValueError(f"length mismatch: y {y.shape} vs g {g.shape}")
    return g * gamma * y


def _as_cir_list(cir) -> list[np.ndarray]:
    if isinstance(cir, np.ndarray) and cir.ndim == 1:
        cirs = [cir.astype(np.complex128)]
    elif isinstance(cir, np.ndarray):
        cirs = [c.astype(np.complex128) for c in cir]
    else:
        cirs = [np.asarray(c, dtype=np.complex128) for c in cir]
        if cirs and cirs[0].ndim == 0:
            cirs = [np.asarray(cir, dtype=np.complex128)]
    for c in cirs:
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite channel impulse response")
    return cirs


def tde_design(cir, taps: int, rho: float, n: Optional[int] = None) -> np.ndarray:
    """MMSE transversal equalizer for a known channel.

    Each filter output estimates one symbol from ``taps`` consecutive
    received samples, centred with decision delay ``taps // 2``. Several
    receive branches may be given (list or 2-D array of CIRs); the result
    then has one row of taps per branch and the branches are combined by
    summation. The design treats the block as circular, which coincides
    with the classical Wiener solution whenever ``taps + len(cir) - 1 <= n``
    and becomes the circular MMSE inverse as ``taps`` approaches ``n``.

    Returns an array of shape ``(branches, taps)``.
    """
    taps = int(taps)
    if taps < 1:
        raise ValueError("taps must be >= 1")
    if not rho > 0:
        raise ValueError("rho must be > 0")
    cirs = _as_cir_list(cir)
    if n is None:
        n = max(taps, max(len(np.trim_zeros(c, "b")) for c in cirs) + taps - 1)
    if taps > n:
        raise ValueError(f"taps ({taps}) cannot exceed block length ({n})")
    delay = taps // 2
    sigma2 = 0.0 if np.isinf(rho) else 1.0 / rho

    # tap i of branch a multiplies r_a(m + delay - i); its contribution to the
    # overall response is h_a circularly shifted by (i - delay)
    hs = []
    for c in cirs:
        h = np.zeros(n, dtype=np.complex128)
        c = np.trim_zeros(c, "b")
        if len(c) > n:
            raise ValueError("channel longer than block")
        h[: len(c)] = c
        hs.append(h)
    # autocorrelation c_ab(d) = sum_m conj(h_a(m)) h_b(m + d), circular
    spectra = [np.fft.fft(h) for h in hs]
    nb = len(hs)
    lags = np.arange(taps)
    if nb == 1:
        acf = np.fft.ifft(np.abs(spectra[0]) ** 2)
        col = acf[lags % n].copy()
        col[0] += sigma2
        rhs = hs[0].conj()[(-(lags - delay)) % n]
        w = solve_toeplitz((col, col.conj()), rhs)
        return w[None, :]
    big = np.zeros((nb * taps, nb * taps), dtype=np.complex128)
    rhs = np.zeros(nb * taps, dtype=np.complex128)
    diff = lags[:, None] - lags[None, :]
    for a in range(nb):
        rhs[a * taps:(a + 1) * taps] = hs[a].conj()[(-(lags - delay)) % n]
        for b in range(nb):
            acf = np.fft.ifft(spectra[a].conj() * spectra[b])
            blk = acf[diff % n]
            big[a * taps:(a + 1) * taps, b * taps:(b + 1) * taps] = blk
    big += sigma2 * np.eye(nb * taps)
    w = np.linalg.solve(big, rhs)
    return w.reshape(nb, taps)


def tde_apply(taps, r) -> np.ndarray:
    """Run the transversal filter(s) circularly over the block(s) ``r``.

    ``taps`` has shape ``(branches, L)`` (or ``(L,)``), ``r`` shape
    ``(branches, n)`` (or ``(n,)``); the decision delay ``L // 2`` is removed.
    """
    w = np.atleast_2d(np.asarray(taps, dtype=np.complex128))
    r = np.atleast_2d(np.asarray(r, dtype=np.complex128))
    if w.shape[0] != r.shape[0]:
        raise ValueError("one tap row per receive branch required")
    nb, ntaps = w.shape
    n = r.shape[-1]
    if ntaps > n:
        raise ValueError("more taps than samples")
    delay = ntaps // 2
    out = np.zeros(n, dtype=np.complex128)
    for a in range(nb):
        f = np.zeros(n, dtype=np.complex128)
        f[:ntaps] = w[a]
        out += np.fft.ifft(np.fft.fft(f) * np.fft.fft(r[a]))
    return np.roll(out, -delay)


def post_eq_mse(estimate, reference) -> float:
    """Mean squared symbol error of one block."""
    d = np.asarray(estimate) - np.asarray(reference)
    return float(np.mean(np.abs(d) ** 2))

