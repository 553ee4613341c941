"""Discrete Fresnel transform.

The fast path factors the transform as a chirp pre-rotation, an orthonormal
FFT (numpy's negative-exponent convention) and a chirp post-rotation::

    dfnt(x)  = theta1 * fft(theta2 * x)
    idfnt(x) = conj(theta2) * ifft(conj(theta1) * x)

Under the same FFT, ``fft(dfnt(ifft(X))) == gamma * X``, which is what the
single-tap receiver relies on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Largest size for which dense-matrix checks are allowed.
ORACLE_LIMIT = 1024


def _unit_phase(num: np.ndarray, n: int) -> np.ndarray:
    """Return ``exp(j*pi*num/n)`` for integer ``num``, reduced mod ``2n``."""
    return np.exp(1j * np.pi * (np.mod(num, 2 * n) / n))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DfntPlan:
    """Precomputed chirp phases and eigenvalues for a size-``n`` transform."""

    n: int
    parity: str
    theta1: np.ndarray
    theta2: np.ndarray
    gamma: np.ndarray

    def __repr__(self) -> str:
        return f"DfntPlan(n={self.n}, parity={self.parity!r})"


def make_plan(n: int) -> DfntPlan:
    n = int(n)
    if n < 1:
        raise ValueError(f"transform size must be >= 1, got {n}")
    k = np.arange(n, dtype=np.int64)
    if n % 2 == 0:
        theta1 = np.exp(-1j * np.pi / 4) * _unit_phase(k * k, n)
        theta2 = _unit_phase(k * k, n)
        gamma = _unit_phase(-(k * k), n)
        parity = "even"
    else:
        const = np.exp(-1j * np.pi / 4) * np.exp(1j * np.pi / (4 * n))
        theta1 = const * _unit_phase(k * k + k, n)
        theta2 = _unit_phase(k * k - k, n)
        gamma = _unit_phase(-(k * (k - 1)), n)
        parity = "odd"
    return DfntPlan(n, parity, _frozen(theta1), _frozen(theta2), _frozen(gamma))


def dfnt_matrix(n: int) -> np.ndarray:
    """Dense transform matrix, evaluated entry by entry.

    This is deliberately the slow, direct form; the tests use it as the
    reference for :func:`dfnt` and :func:`idfnt`.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"transform size must be >= 1, got {n}")
    m = np.arange(n, dtype=float)[:, None]
    col = np.arange(n, dtype=float)[None, :]
    offset = 0.0 if n % 2 == 0 else 0.5
    return np.exp(-1j * np.pi / 4) * np.exp(1j * np.pi / n * (m + offset - col) ** 2) / np.sqrt(n)


def _check(plan: DfntPlan, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim == 0 or x.shape[-1] != plan.n:
        raise ValueError(f"expected last axis of length {plan.n}, got shape {x.shape}")
    return x


def dfnt(plan: DfntPlan, x) -> np.ndarray:
    """Forward transform along the last axis (batched inputs allowed)."""
    x = _check(plan, x)
    return plan.theta1 * np.fft.fft(plan.theta2 * x, norm="ortho")


def idfnt(plan: DfntPlan, x) -> np.ndarray:
    """Inverse (conjugate-transpose) transform along the last axis."""
    x = _check(plan, x)
    return plan.theta2.conj() * np.fft.ifft(plan.theta1.conj() * x, norm="ortho")


def dft_matrix(n: int) -> np.ndarray:
    """Orthonormal DFT matrix in the convention used throughout the package."""
    return np.fft.fft(np.eye(n), axis=0, norm="ortho")


def eigencheck(plan: DfntPlan) -> float:
    """Max-abs deviation of ``F @ Phi @ F^H`` from ``diag(gamma)``."""
    if plan.n > ORACLE_LIMIT:
        raise ValueError(f"dense check limited to n <= {ORACLE_LIMIT}")
    f = dft_matrix(plan.n)
    d = f @ dfnt_matrix(plan.n) @ f.conj().T
    return float(np.max(np.abs(d - np.diag(plan.gamma))))


def circular_convolve(h, s) -> np.ndarray:
    """Circular convolution of two equal-length sequences via the FFT."""
    h = np.asarray(h, dtype=np.complex128)
    s = np.asarray(s, dtype=np.complex128)
    return np.fft.ifft(np.fft.fft(h) * np.fft.fft(s))
