"""Scalar figures of merit for a control pulse.

Leakage normalization: with ``convention="parseval"`` (default) a filter
function summed over the whole grid gives 2 pi T per axis, and leakage is
scaled so that a single weighted axis with every bin selected scores 1.
``convention="discrete"`` uses the bare delta_omega / T prefactor instead,
which is 2 pi times larger.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bands import NOISE_AXES, BandSpec, PsdModel
from .errors import DomainError, ValidationError
from .propagation import FilterFunctionTable
from .quaternion import from_matrix, to_matrix

__all__ = [
    "GateTarget",
    "gate",
    "leakage_weights",
    "spectral_leakage",
    "ideal_gate_fidelity",
    "overlap_integral",
    "leakage_fidelity",
    "combined_fidelity",
    "psd_weighted_leakage",
    "target_ff_objective",
    "gaussian_target",
    "analytic_infidelity",
    "phase_invariant_distance",
]

CONVENTIONS = ("parseval", "discrete")


@dataclass(frozen=True)
class GateTarget:
    """Target unitary, stored both as a matrix and as an SU(2) quaternion."""

    label: str
    U: np.ndarray
    quaternion: np.ndarray


_FIXED = {
    "I": np.array([1.0, 0.0, 0.0, 0.0]),
    "X": np.array([0.0, 1.0, 0.0, 0.0]),
    "Y": np.array([0.0, 0.0, 1.0, 0.0]),
    "Z": np.array([0.0, 0.0, 0.0, 1.0]),
    "H": np.array([0.0, 1.0, 0.0, 1.0]) / np.sqrt(2.0),
    "S": np.array([np.cos(np.pi / 4), 0.0, 0.0, np.sin(np.pi / 4)]),
    "T": np.array([np.cos(np.pi / 8), 0.0, 0.0, np.sin(np.pi / 8)]),
}
CLIFFORD_T = tuple(_FIXED)


def gate(label: str, theta: float | None = None) -> GateTarget:
    """Named target gate; ``label="Xtheta"`` takes a rotation angle."""
    if label in _FIXED:
        q = _FIXED[label].copy()
    elif label in ("Xtheta", "Xθ", "Xt"):
        if theta is None:
            raise ValidationError("Xtheta needs an angle", key="theta")
        q = np.array([np.cos(theta / 2), np.sin(theta / 2), 0.0, 0.0])
        label = "Xtheta"
    else:
        raise ValidationError(f"unknown gate {label!r}", key="gate")
    U = to_matrix(q)
    if label in ("H", "S", "T"):
        # conventional phase: H real symmetric, S = diag(1, i), T = diag(1, e^{i pi/4})
        phase = {"H": 1j, "S": np.exp(1j * np.pi / 4), "T": np.exp(1j * np.pi / 8)}[label]
        U = U * phase
    return GateTarget(label=label, U=U, quaternion=q)


def gate_from_matrix(U, label: str = "custom") -> GateTarget:
    return GateTarget(label=label, U=np.asarray(U, dtype=complex), quaternion=from_matrix(U))


def _norm_constant(bands: BandSpec, T: float, convention: str) -> float:
    if convention == "parseval":
        return 1.0 / (2 * np.pi * T * sum(bands.weights.values()))
    if convention == "discrete":
        return 1.0 / T
    raise ValidationError(f"unknown leakage convention {convention!r}", key="convention")


def leakage_weights(bands: BandSpec, N: int, convention: str = "parseval") -> np.ndarray:
    """c[mu, m] such that leakage = sum c * F."""
    T = float(N)
    dw = 2 * np.pi / N
    C = _norm_constant(bands, T, convention)
    c = np.zeros((3, N))
    for i, (mu, idx) in enumerate(bands.bins(N).items()):
        c[i, idx] = C * bands.weights[mu] * dw
    return c


def spectral_leakage(ff: FilterFunctionTable, bands: BandSpec, convention: str = "parseval") -> float:
    N = ff.F.shape[1]
    return float(np.sum(leakage_weights(bands, N, convention) * ff.F))


def ideal_gate_fidelity(U_C, target: GateTarget | np.ndarray) -> float:
    """(1/4) |Tr[U_G^dag U_C]|^2."""
    UG = target.U if isinstance(target, GateTarget) else np.asarray(target, dtype=complex)
    return float(abs(np.trace(UG.conj().T @ np.asarray(U_C))) ** 2 / 4)


def psd_table(psd, N: int) -> np.ndarray:
    """S_mu on the grid, rows x, y, z. ``psd`` is one model or a per-axis mapping."""
    grid = 2 * np.pi * np.arange(N) / N
    S = np.zeros((3, N))
    if isinstance(psd, PsdModel):
        psd = {mu: psd for mu in NOISE_AXES}
    for i, mu in enumerate(NOISE_AXES):
        model = psd.get(mu)
        if model is not None:
            S[i] = model(grid)
    return S


def overlap_integral(ff: FilterFunctionTable, psd) -> float:
    """(1/pi) sum_mu sum_n S_mu F_mu d omega."""
    return psd_weighted_leakage(ff, psd) / np.pi


def psd_weighted_leakage(ff: FilterFunctionTable, psd) -> float:
    N = ff.F.shape[1]
    return float(np.sum(psd_table(psd, N) * ff.F) * 2 * np.pi / N)


def target_ff_objective(ff: FilterFunctionTable, F_target) -> float:
    """sum over axes and bins of (F - F_target)^2 d omega; NaN rows in the target are skipped."""
    N = ff.F.shape[1]
    Ft = np.asarray(F_target, dtype=float)
    mask = ~np.isnan(Ft)
    diff = np.where(mask, ff.F - np.where(mask, Ft, 0.0), 0.0)
    return float(np.sum(diff**2) * 2 * np.pi / N)


def gaussian_target(N: int, center: float, width: float) -> np.ndarray:
    """Gaussian profile A exp(-(w - center)^2 / (2 width^2)) with A = T / (width sqrt(2 pi))."""
    grid = 2 * np.pi * np.arange(N) / N
    A = N / (width * np.sqrt(2 * np.pi))
    return A * np.exp(-((grid - center) ** 2) / (2 * width**2))


def leakage_fidelity(gamma_value: float, P: float, T: float, dw: float) -> float:
    """1/2 [1 + exp(-(P T / d omega) leakage)]."""
    if P <= 0 or T <= 0 or dw <= 0:
        raise DomainError("power, duration and resolution must be positive")
    return 0.5 * (1.0 + np.exp(-(P * T / dw) * gamma_value))


def combined_fidelity(FG: float, FGamma: float) -> float:
    return FG + FGamma


def analytic_infidelity(sigma: float, epsilon: float, omega_h: float, T: float) -> float:
    """T sigma^2 epsilon / (4 omega_H): delta-peak estimate of the residual infidelity."""
    if sigma < 0 or epsilon < 0 or omega_h <= 0 or T <= 0:
        raise DomainError("analytic infidelity needs nonnegative sigma, epsilon and positive omega_H, T")
    return T * sigma**2 * epsilon / (4 * omega_h)


def phase_invariant_distance(U_G, U) -> float:
    """sqrt(1 - |Tr[U_G^dag U]| / 2)."""
    U_G = np.asarray(U_G, dtype=complex)
    U = np.asarray(U, dtype=complex)
    val = 1.0 - 0.5 * abs(np.trace(U_G.conj().T @ U))
    return float(np.sqrt(max(val, 0.0)))
