"""Discrete prolate spheroidal (Slepian) sequences.

The eigenvectors come from the symmetric tridiagonal matrix that commutes
with the sinc-kernel Toeplitz matrix; the concentration eigenvalues are the
Rayleigh quotients of those vectors against the Toeplitz matrix itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.signal import fftconvolve

from .errors import InvalidBandwidthError, InvalidCardinalityError

__all__ = ["DpssBasis", "generate_dpss", "sinc_kernel", "toeplitz_matrix", "default_cardinality"]


@dataclass(frozen=True)
class DpssBasis:
    """K orthonormal band-limited sequences of length N.

    ``sequences`` has shape (K, N); row k is the k-th sequence.
    ``eigenvalues`` holds the concentration of each row in (-W, W).
    """

    N: int
    W: float
    sequences: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self):
        self.sequences.setflags(write=False)
        self.eigenvalues.setflags(write=False)

    @property
    def K(self) -> int:
        return self.sequences.shape[0]


def default_cardinality(N: int, W: float) -> int:
    # tolerance guards products such as 2 * 1000 * 0.016 = 31.999999999999996
    return int(np.floor(2 * N * W + 1e-9))


def sinc_kernel(N: int, W: float) -> np.ndarray:
    """First column of the concentration matrix, sin(2 pi W m) / (pi m)."""
    m = np.arange(N, dtype=float)
    col = np.empty(N)
    col[0] = 2 * W
    col[1:] = np.sin(2 * np.pi * W * m[1:]) / (np.pi * m[1:])
    return col


def toeplitz_matrix(N: int, W: float) -> np.ndarray:
    col = sinc_kernel(N, W)
    idx = np.abs(np.subtract.outer(np.arange(N), np.arange(N)))
    return col[idx]


def _toeplitz_apply(col: np.ndarray, V: np.ndarray) -> np.ndarray:
    # symmetric Toeplitz product as a linear convolution with the full kernel
    N = col.size
    kern = np.concatenate([col[:0:-1], col])
    out = fftconvolve(V, kern[None, :], mode="full", axes=1)
    return out[:, N - 1:2 * N - 1]


def _fix_signs(V: np.ndarray) -> np.ndarray:
    for k in range(V.shape[0]):
        v = V[k]
        mean = v.mean()
        if abs(mean) >= 1e-12:
            s = np.sign(mean)
        else:
            # first element that is nonzero relative to the row's scale
            nz = np.flatnonzero(np.abs(v) > 1e-9 * np.abs(v).max())
            s = np.sign(v[nz[0]])
        if s < 0:
            V[k] = -v
    return V


def generate_dpss(N: int, W: float, K: int | None = None) -> DpssBasis:
    """Return the first K Slepian sequences of length N and half-bandwidth W.

    K defaults to floor(2NW). Rows are unit-norm under the plain sum, sorted
    by decreasing concentration, and signed so their mean is positive (or,
    for odd rows, their first significant element).
    """
    N = int(N)
    if N < 1:
        raise InvalidCardinalityError(f"N must be positive, got {N}", key="N")
    if not (0.0 < W < 0.5):
        raise InvalidBandwidthError(f"W must lie in (0, 0.5), got {W}", key="W")
    if K is None:
        K = default_cardinality(N, W)
    K = int(K)
    if K < 1 or K > N:
        raise InvalidCardinalityError(f"K must lie in [1, N={N}], got {K}", key="K")

    if N == 1:
        V = np.ones((1, 1))
    else:
        n = np.arange(N, dtype=float)
        diag = ((N - 1 - 2 * n) / 2.0) ** 2 * np.cos(2 * np.pi * W)
        off = n[1:] * (N - n[1:]) / 2.0
        _, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(N - K, N - 1))
        V = np.ascontiguousarray(vecs[:, ::-1].T)
        V /= np.linalg.norm(V, axis=1, keepdims=True)
    V = _fix_signs(V)

    col = sinc_kernel(N, W)
    if N <= 512:
        AV = V @ toeplitz_matrix(N, W)
    else:
        AV = _toeplitz_apply(col, V)
    lam = np.einsum("kn,kn->k", AV, V)
    # ordering is a property of the exact spectrum; rounding near 0 can invert it
    lam = np.minimum.accumulate(np.clip(lam, 0.0, 1.0))
    return DpssBasis(N=N, W=float(W), sequences=V, eigenvalues=lam)
