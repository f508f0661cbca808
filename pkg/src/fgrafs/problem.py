"""Evaluation of scores, gradients and least-squares Jacobians for one pulse design task.

A ``PulseProblem`` fixes the basis, the controlled axes, the noise bands,
the target gate and the spectral objective, and maps a flat parameter
vector to everything the optimizers need.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bands import BandSpec
from .errors import ValidationError
from .gradients import ff_adjoint, fidelity_gradient, gate_error_jacobian, spectrum_jacobian
from .objective import GateTarget, leakage_weights, psd_table
from .propagation import Propagation, control_matrix_trajectory, frequency_domain, propagate
from .slepian import DpssBasis
from .waveform import ControlWaveform

__all__ = ["PulseProblem", "Evaluation", "OBJECTIVE_KINDS"]

OBJECTIVE_KINDS = ("leakage", "psd", "target")


@dataclass
class Evaluation:
    x: np.ndarray
    prop: Propagation
    R: np.ndarray
    Rt: np.ndarray
    F: np.ndarray
    spectral: float
    gate_q: np.ndarray

    @property
    def fidelity(self) -> float:
        return float(self.gate_q[0] ** 2)

    @property
    def infidelity(self) -> float:
        return float(np.dot(self.gate_q[1:], self.gate_q[1:]))


class PulseProblem:
    """Design problem over Slepian coefficients.

    ``param`` is "cartesian" (x and y coefficient blocks for the controlled
    axes) or "polar" (amplitude block then phase block, driving both axes).
    ``kind`` selects the spectral score: "leakage" (weighted band sum),
    "psd" (PSD-weighted full-grid sum) or "target" (squared distance to a
    target filter function).
    """

    def __init__(
        self,
        basis: DpssBasis,
        gate: GateTarget,
        bands: BandSpec | None = None,
        axes: tuple[str, ...] = ("x",),
        kind: str = "leakage",
        psd=None,
        F_target=None,
        param: str = "cartesian",
        convention: str = "parseval",
    ):
        if kind not in OBJECTIVE_KINDS:
            raise ValidationError(f"unknown objective kind {kind!r}", key="objective")
        if param not in ("cartesian", "polar"):
            raise ValidationError(f"unknown parametrization {param!r}", key="param")
        if not axes or any(a not in ("x", "y") for a in axes):
            raise ValidationError(f"invalid control axes {axes}", key="axes")
        self.basis = basis
        self.gate = gate
        self.bands = bands
        self.axes = tuple(axes) if param == "cartesian" else ("x", "y")
        self.kind = kind
        self.param = param
        self.convention = convention
        N = basis.N
        self.N = N
        self.dw = 2 * np.pi / N
        if kind == "leakage":
            if bands is None:
                raise ValidationError("leakage objective needs bands", key="bands")
            self.weights = leakage_weights(bands, N, convention)
        elif kind == "psd":
            if psd is None:
                raise ValidationError("psd objective needs a PSD", key="psd")
            self.weights = psd_table(psd, N) * self.dw
        else:
            if F_target is None:
                raise ValidationError("target objective needs a target filter function", key="target")
            Ft = np.asarray(F_target, dtype=float)
            if Ft.shape != (3, N):
                raise ValidationError(f"target must have shape (3, {N})", key="target")
            self.F_target = Ft
            self.target_mask = ~np.isnan(Ft)
        self.n_params = basis.K * (len(self.axes) if param == "cartesian" else 2)

    # parameter handling
    def amplitudes(self, x):
        x = np.asarray(x, dtype=float)
        V = self.basis.sequences
        K = self.basis.K
        if self.param == "polar":
            A = x[:K] @ V
            phi = x[K:] @ V
            return A * np.cos(phi), A * np.sin(phi)
        blocks = {ax: x[i * K:(i + 1) * K] @ V for i, ax in enumerate(self.axes)}
        zero = np.zeros(self.N)
        return blocks.get("x", zero), blocks.get("y", zero)

    def to_coeffs(self, w: ControlWaveform) -> np.ndarray:
        return np.concatenate([w.coeffs.get(ax, np.zeros(self.basis.K)) for ax in self.axes])

    def to_waveform(self, x) -> ControlWaveform:
        if self.param == "polar":
            ax, ay = self.amplitudes(x)
            V = self.basis.sequences
            return ControlWaveform(self.basis, {"x": V @ ax, "y": V @ ay})
        K = self.basis.K
        return ControlWaveform(self.basis, {ax: np.array(x[i * K:(i + 1) * K]) for i, ax in enumerate(self.axes)})

    def _chain(self, x, g_amp: np.ndarray) -> np.ndarray:
        """Per-step amplitude derivatives (2, ..., N) to parameter derivatives (..., n_params)."""
        V = self.basis.sequences
        if self.param == "polar":
            K = self.basis.K
            A = x[:K] @ V
            phi = x[K:] @ V
            c, s = np.cos(phi), np.sin(phi)
            dA = c * g_amp[0] + s * g_amp[1]
            dphi = A * (-s * g_amp[0] + c * g_amp[1])
            return np.concatenate([dA @ V.T, dphi @ V.T], axis=-1)
        parts = [g_amp[0 if ax == "x" else 1] @ V.T for ax in self.axes]
        return np.concatenate(parts, axis=-1)

    # evaluation
    def evaluate(self, x) -> Evaluation:
        x = np.array(x, dtype=float)
        p = propagate(*self.amplitudes(x))
        R = control_matrix_trajectory(p)
        Rt = frequency_domain(R)
        F = np.einsum("mab,mab->am", Rt.real, Rt.real) + np.einsum("mab,mab->am", Rt.imag, Rt.imag)
        if self.kind == "target":
            d = np.where(self.target_mask, F - np.nan_to_num(self.F_target), 0.0)
            spectral = float(np.sum(d * d) * self.dw)
        else:
            spectral = float(np.sum(self.weights * F))
        gq = gate_error_jacobian_value(p, self.gate.quaternion)
        return Evaluation(x=x, prop=p, R=R, Rt=Rt, F=F, spectral=spectral, gate_q=gq)

    def spectral_value(self, x) -> float:
        return self.evaluate(x).spectral

    def fidelity_value(self, x) -> float:
        return self.evaluate(x).fidelity

    def spectral_gradient(self, ev: Evaluation) -> np.ndarray:
        if self.kind == "target":
            c = 2.0 * self.dw * np.where(self.target_mask, ev.F - np.nan_to_num(self.F_target), 0.0)
        else:
            c = self.weights
        g_amp = ff_adjoint(ev.prop, c, ev.R, ev.Rt)
        return self._chain(ev.x, g_amp)

    def fidelity_gradient(self, ev: Evaluation) -> np.ndarray:
        _, g_amp = fidelity_gradient(ev.prop, self.gate.quaternion)
        return self._chain(ev.x, g_amp)

    # least-squares structure
    def _rows(self):
        if self.kind == "target":
            return {mu: np.flatnonzero(self.target_mask[mu]) for mu in range(3) if self.target_mask[mu].any()}
        return {mu: np.flatnonzero(self.weights[mu] > 0) for mu in range(3) if (self.weights[mu] > 0).any()}

    def residuals(self, ev: Evaluation, jacobian: bool = True):
        """Residual vector r with ||r||^2 equal to the spectral score, and dr/dx."""
        rows = self._rows()
        if not rows:
            return np.zeros(0), np.zeros((0, self.n_params))
        jac = spectrum_jacobian(ev.prop, rows, ev.R) if jacobian else None
        r_parts, J_parts = [], []
        for mu, bins in rows.items():
            Rt = ev.Rt[bins, mu, :]
            if self.kind == "target":
                sw = np.sqrt(self.dw)
                r_parts.append(sw * (ev.F[mu, bins] - self.F_target[mu, bins]))
                if jacobian:
                    dF = 2.0 * np.einsum("ml,vmlj->vmj", np.conj(Rt), jac[mu]).real
                    J_parts.append(sw * self._chain(ev.x, dF))
            else:
                sw = np.sqrt(self.weights[mu, bins])[:, None]
                r_parts.append((sw * Rt.real).ravel())
                r_parts.append((sw * Rt.imag).ravel())
                if jacobian:
                    d = jac[mu] * sw[None, :, :, None]
                    J_parts.append(self._chain(ev.x, d.real.reshape(2, -1, self.N)))
                    J_parts.append(self._chain(ev.x, d.imag.reshape(2, -1, self.N)))
        r = np.concatenate(r_parts)
        J = np.concatenate(J_parts, axis=0) if jacobian else None
        return r, J

    def gate_jacobian(self, ev: Evaluation):
        """Quaternion of U_G^dag U_C(T) (length 4) and its parameter Jacobian (4, n_params)."""
        v, J_amp = gate_error_jacobian(ev.prop, self.gate.quaternion)
        return v, self._chain(ev.x, J_amp)


def gate_error_jacobian_value(p: Propagation, g: np.ndarray) -> np.ndarray:
    from .quaternion import qconj, qmul

    return qmul(qconj(g), p.final)
