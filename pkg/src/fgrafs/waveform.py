"""Control waveforms expanded in a Slepian basis."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import DimensionError, EmptyBasisError, ValidationError
from .slepian import DpssBasis, generate_dpss

__all__ = [
    "AXES",
    "ControlWaveform",
    "synthesize_amplitudes",
    "project_to_basis",
    "truncated_basis",
    "waveform_to_json",
    "waveform_from_json",
]

AXES = ("x", "y")


@dataclass
class ControlWaveform:
    """Per-axis Slepian coefficients with cached piecewise-constant amplitudes.

    Amplitudes are recomputed from the coefficients whenever the coefficients
    are replaced through :meth:`set_coeffs`, so the two never disagree.
    """

    basis: DpssBasis
    coeffs: dict[str, np.ndarray]
    _amps: dict[str, np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.coeffs:
            raise ValidationError("a waveform needs at least one control axis", key="axes")
        clean = {}
        for ax in AXES:
            if ax not in self.coeffs:
                continue
            c = np.array(self.coeffs[ax], dtype=float)
            if c.shape != (self.basis.K,):
                raise DimensionError(
                    f"axis {ax}: expected {self.basis.K} coefficients, got {c.shape}", key=f"coeffs.{ax}"
                )
            clean[ax] = c
        unknown = set(self.coeffs) - set(AXES)
        if unknown:
            raise ValidationError(f"unknown control axes {sorted(unknown)}", key="axes")
        self.coeffs = clean
        self._amps = None

    @property
    def axes(self) -> tuple[str, ...]:
        return tuple(self.coeffs)

    @property
    def N(self) -> int:
        return self.basis.N

    @property
    def K(self) -> int:
        return self.basis.K

    def set_coeffs(self, ax: str, values) -> None:
        c = np.array(values, dtype=float)
        if c.shape != (self.basis.K,):
            raise DimensionError(f"axis {ax}: expected {self.basis.K} coefficients", key=f"coeffs.{ax}")
        self.coeffs[ax] = c
        self._amps = None

    @property
    def amplitudes(self) -> dict[str, np.ndarray]:
        if self._amps is None:
            V = self.basis.sequences
            self._amps = {ax: c @ V for ax, c in self.coeffs.items()}
            for a in self._amps.values():
                a.setflags(write=False)
        return self._amps

    def xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Amplitudes on both axes, with zeros for an absent axis."""
        amps = self.amplitudes
        zero = np.zeros(self.N)
        return amps.get("x", zero), amps.get("y", zero)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.coeffs[ax] for ax in self.axes])

    def with_flat(self, vec: np.ndarray) -> "ControlWaveform":
        K = self.K
        vec = np.asarray(vec, dtype=float)
        return ControlWaveform(self.basis, {ax: vec[i * K:(i + 1) * K] for i, ax in enumerate(self.axes)})

    def copy(self) -> "ControlWaveform":
        return ControlWaveform(self.basis, {ax: c.copy() for ax, c in self.coeffs.items()})


def synthesize_amplitudes(coeffs: Mapping[str, np.ndarray], basis: DpssBasis) -> ControlWaveform:
    """Build a waveform whose amplitudes are sum_k coeffs[k] * v_k."""
    return ControlWaveform(basis, dict(coeffs))


def project_to_basis(amplitudes: Mapping[str, np.ndarray], basis: DpssBasis) -> ControlWaveform:
    """Least-squares projection of per-axis amplitude sequences onto the basis."""
    coeffs = {}
    for ax, a in amplitudes.items():
        a = np.asarray(a, dtype=float)
        if a.shape != (basis.N,):
            raise DimensionError(f"axis {ax}: expected {basis.N} samples, got {a.shape}", key=f"amplitudes.{ax}")
        coeffs[ax] = basis.sequences @ a
    return ControlWaveform(basis, coeffs)


def truncated_basis(N: int, W: float, eta: float) -> DpssBasis:
    """Basis at doubled bandwidth, dropping the four least concentrated rows.

    Keeps the first 2*floor(2NW) - 4 sequences at half-bandwidth 2W, then
    discards any whose concentration falls below ``eta``. Sequences built
    this way are small at both ends of the window, so synthesized pulses
    start and stop near zero.
    """
    if not (0.0 <= eta < 1.0):
        raise ValidationError(f"eta must lie in [0, 1), got {eta}", key="eta")
    W2 = 2.0 * W
    K2 = 2 * int(np.floor(N * W2 + 1e-9)) - 4
    if K2 < 1:
        raise ValidationError(f"truncated basis is empty for N={N}, W={W}", key="W")
    full = generate_dpss(N, W2, min(K2, N))
    keep = full.eigenvalues >= eta
    if not keep.any():
        raise EmptyBasisError(f"no sequence reaches concentration {eta}", eta=eta)
    n_keep = int(np.flatnonzero(keep).max()) + 1
    return DpssBasis(
        N=full.N, W=full.W, sequences=full.sequences[:n_keep].copy(), eigenvalues=full.eigenvalues[:n_keep].copy()
    )


def waveform_to_json(w: ControlWaveform, **extra) -> str:
    doc = {
        "N": w.N,
        "W": w.basis.W,
        "K": w.K,
        "axes": list(w.axes),
        "coeffs": {ax: [float(v) for v in c] for ax, c in w.coeffs.items()},
        "amplitudes": {ax: [float(v) for v in a] for ax, a in w.amplitudes.items()},
    }
    if extra:
        doc["meta"] = extra
    return json.dumps(doc, indent=1, sort_keys=True)


def waveform_from_json(text: str, basis: DpssBasis | None = None) -> ControlWaveform:
    doc = json.loads(text)
    for key in ("N", "W", "K", "coeffs"):
        if key not in doc:
            raise ValidationError(f"waveform document lacks '{key}'", key=key)
    if basis is None:
        basis = generate_dpss(int(doc["N"]), float(doc["W"]), int(doc["K"]))
    return ControlWaveform(basis, {ax: np.asarray(c, dtype=float) for ax, c in doc["coeffs"].items()})
