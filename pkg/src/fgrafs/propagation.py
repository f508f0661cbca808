"""Control propagator, control-matrix trajectory and filter functions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import NumericalConsistencyError
from .quaternion import SIGMA, rotation_matrices, segment_quaternions, to_matrix
from .waveform import ControlWaveform

__all__ = [
    "Propagation",
    "FilterFunctionTable",
    "propagate",
    "control_propagator",
    "control_matrix_trajectory",
    "control_matrix_from_unitaries",
    "filter_functions",
    "frequency_grid",
    "frequency_domain",
    "waveform_filter_functions",
]


def frequency_grid(N: int) -> np.ndarray:
    return 2 * np.pi * np.arange(N) / N


@dataclass(frozen=True)
class Propagation:
    """Quaternion form of the control propagator of a waveform.

    ``segments[j]`` is the step unitary from t_j to t_{j+1}; ``cumulative[n]``
    is U_C(t_n), with cumulative[0] the identity.
    """

    ax: np.ndarray
    ay: np.ndarray
    segments: np.ndarray
    cumulative: np.ndarray

    @property
    def N(self) -> int:
        return self.segments.shape[0]

    @property
    def final(self) -> np.ndarray:
        return self.cumulative[-1]

    def segment_unitaries(self) -> np.ndarray:
        return to_matrix(self.segments)

    def cumulative_unitaries(self) -> np.ndarray:
        return to_matrix(self.cumulative)


@dataclass(frozen=True)
class FilterFunctionTable:
    """F[mu, m] on the grid omega_m = 2 pi m / N (rows x, y, z)."""

    grid: np.ndarray
    F: np.ndarray


def propagate(ax, ay) -> Propagation:
    ax = np.asarray(ax, dtype=float)
    ay = np.asarray(ay, dtype=float)
    seg = segment_quaternions(ax, ay)
    cum = _backend.cumulative_quaternions(seg)
    return Propagation(ax=ax, ay=ay, segments=seg, cumulative=cum)


def control_propagator(w: ControlWaveform) -> tuple[np.ndarray, np.ndarray]:
    """Segment unitaries (N, 2, 2) and cumulative unitaries (N+1, 2, 2)."""
    p = propagate(*w.xy())
    return p.segment_unitaries(), p.cumulative_unitaries()


def control_matrix_trajectory(p: Propagation) -> np.ndarray:
    """R[n] for n = 0..N-1, evaluated at the left end of each step."""
    return rotation_matrices(p.cumulative[:-1])


def control_matrix_from_unitaries(U: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Trace formula applied to explicit 2x2 unitaries, shape (..., 2, 2)."""
    U = np.asarray(U, dtype=complex)
    Ud = np.conj(np.swapaxes(U, -1, -2))
    R = 0.5 * np.einsum("...ab,mbc,...cd,nda->...mn", Ud, SIGMA, U, SIGMA)
    if np.abs(R.imag).max(initial=0.0) > tol:
        raise NumericalConsistencyError("control matrix has a non-negligible imaginary part")
    return R.real


def frequency_domain(R: np.ndarray) -> np.ndarray:
    """sum_n R[n] exp(-i w_m n); the conjugate of the forward-sign transform."""
    return np.fft.fft(R, axis=0)


def filter_functions(R: np.ndarray) -> FilterFunctionTable:
    Rt = frequency_domain(R)
    F = np.einsum("mab,mab->am", Rt.real, Rt.real) + np.einsum("mab,mab->am", Rt.imag, Rt.imag)
    return FilterFunctionTable(grid=frequency_grid(R.shape[0]), F=F)


def waveform_filter_functions(w: ControlWaveform) -> FilterFunctionTable:
    return filter_functions(control_matrix_trajectory(propagate(*w.xy())))
