"""Optimization drivers.

Constrained mode minimizes the spectral score subject to an ideal gate
fidelity of at least 1 - epsilon_G. The score is a sum of squares, so each
step solves a Gauss-Newton (Levenberg-Marquardt damped) model with the
gate error linearized and kept inside a ball; the ball multiplier is found
by bisection. Iterates stay feasible, so the score never increases once the
start has been repaired.

Unconstrained mode maximizes F_G plus a fidelity surrogate of the spectral
score with limited-memory BFGS and a backtracking line search.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import ValidationError
from .problem import Evaluation, PulseProblem
from .waveform import ControlWaveform

__all__ = ["OptimizerConfig", "OptimizationResult", "optimize_constrained", "optimize_unconstrained", "Phi"]


@dataclass(frozen=True)
class OptimizerConfig:
    mode: str = "constrained"
    epsilon_G: float = 1e-10
    grad_tol: float = 1e-12
    max_iters: int = 1000
    memory: int = 10
    restoration_steps: int = 50
    margin: float = 0.5
    rel_tol: float = 0.0

    def __post_init__(self):
        if self.mode not in ("constrained", "unconstrained"):
            raise ValidationError(f"unknown mode {self.mode!r}", key="optimize.mode")
        if self.epsilon_G <= 0:
            raise ValidationError("epsilon_G must be positive", key="optimize.epsilon_G")
        if self.grad_tol <= 0:
            raise ValidationError("grad_tol must be positive", key="optimize.grad_tol")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be at least 1", key="optimize.max_iters")
        if self.memory < 1:
            raise ValidationError("memory must be at least 1", key="optimize.memory")
        if not (0 < self.margin <= 1):
            raise ValidationError("margin must lie in (0, 1]", key="optimize.margin")


@dataclass
class LogRow:
    iteration: int
    gamma: float
    fidelity: float
    grad_norm: float
    wall_time: float


@dataclass
class OptimizationResult:
    waveform: ControlWaveform
    x: np.ndarray
    gamma_history: list[float]
    F_G_final: float
    gamma_final: float
    iterations: int
    termination: str
    log: list[LogRow] = field(default_factory=list)
    objective_history: list[float] = field(default_factory=list)


def _solve(A, b):
    try:
        return cho_solve(cho_factor(A, lower=True, check_finite=False), b, check_finite=False)
    except LinAlgError:
        return np.linalg.lstsq(A, b, rcond=None)[0]


def _restore(problem: PulseProblem, x, target: float, steps: int, weights=(1e-2, 1e-4, 0.0)):
    """Restoration with a decreasing spectral weight, each stage starting where the last stopped."""
    ev = None
    for w in weights:
        ev, ok = _restore_stage(problem, x, target, steps, w)
        if ok:
            return ev, True
        x = ev.x
    return ev, False


def _restore_stage(problem: PulseProblem, x, target: float, steps: int, spectral_weight: float):
    """Gauss-Newton on the gate quaternion until the infidelity is at most ``target``.

    The residual is the quaternion of U_G^dag U_C(T) minus the nearer of +1
    and -1, so the overlap is pushed up even where the infidelity itself is
    flat. The spectral residuals are stacked underneath with a small weight
    so that, among the many ways of fixing the gate, steps that keep the
    score low are preferred. A step is taken only if it lowers the
    infidelity.
    """
    ev = problem.evaluate(x)
    lam = None
    sw = np.sqrt(spectral_weight)
    for _ in range(steps):
        if ev.infidelity <= target:
            return ev, True
        v, Jv = problem.gate_jacobian(ev)
        s = 1.0 if v[0] >= 0 else -1.0
        rs, Js = problem.residuals(ev)
        r = np.concatenate([v - np.array([s, 0.0, 0.0, 0.0]), sw * rs])
        J = np.concatenate([Jv, sw * Js], axis=0)
        JtJ = J.T @ J
        g = J.T @ r
        if lam is None:
            lam = 1e-2 * np.trace(JtJ) / JtJ.shape[0]
        for _ in range(60):
            d = -_solve(JtJ + lam * np.eye(JtJ.shape[0]), g)
            trial = problem.evaluate(x + d)
            if trial.infidelity < ev.infidelity:
                x, ev = x + d, trial
                lam = max(lam / 10, 1e-300)
                break
            lam *= 10
        else:
            return ev, False
    return ev, ev.infidelity <= target


def _ball_step(JtJ, g, Jh, h, lam, radius2):
    """Step d minimizing the damped model with ||h + Jh d||^2 <= radius2."""
    n = JtJ.shape[0]
    A0 = JtJ + lam * np.eye(n)
    HtH = Jh.T @ Jh
    Hth = Jh.T @ h

    def step(mu):
        return -_solve(A0 + mu * HtH, g + mu * Hth)

    def excess(d):
        e = h + Jh @ d
        return float(e @ e) - radius2

    d = step(0.0)
    if excess(d) <= 0:
        return d
    lo, hi = 0.0, 1.0
    d_hi = step(hi)
    while excess(d_hi) > 0:
        lo, hi = hi, hi * 10
        if hi > 1e30:
            return d_hi
        d_hi = step(hi)
    for _ in range(60):
        mid = np.sqrt(lo * hi) if lo > 0 else hi / 10
        d_mid = step(mid)
        if excess(d_mid) > 0:
            lo = mid
        else:
            hi, d_hi = mid, d_mid
        if hi - lo <= 1e-6 * hi:
            break
    return d_hi


def _second_order_correction(problem, x, d, trial, h, Jh, s, eps, rounds: int = 3):
    """Pull an infeasible trial back towards the linearized constraint.

    The minimum-norm correction through Jh removes the curvature part of the
    gate residual, h(x + d) - (h + Jh d). This keeps long steps usable when
    the feasible set is a thin tube.
    """
    want = h + Jh @ d
    for _ in range(rounds):
        err = s * trial.gate_q[1:] - want
        c = -np.linalg.lstsq(Jh, err, rcond=None)[0]
        d = d + c
        trial = problem.evaluate(x + d)
        if trial.infidelity <= eps:
            break
    return d, trial


def _projected_gradient(g, Jh, h, active):
    if not active:
        return g
    n = Jh.T @ h
    nn = float(n @ n)
    if nn == 0 or g @ n >= 0:
        return g
    return g - (g @ n) / nn * n


def optimize_constrained(
    problem: PulseProblem,
    x0,
    cfg: OptimizerConfig = OptimizerConfig(),
    callback=None,
) -> OptimizationResult:
    """Minimize the spectral score subject to F_G >= 1 - epsilon_G."""
    t0 = time.perf_counter()
    eps = cfg.epsilon_G
    x = np.array(x0, dtype=float)
    ev = problem.evaluate(x)
    history: list[float] = []
    log: list[LogRow] = []
    if ev.infidelity > eps:
        ev, ok = _restore(problem, x, cfg.margin * eps, cfg.restoration_steps)
        x = ev.x
        if not ok:
            return _result(problem, ev, [ev.spectral], 0, "infeasible", log)
    radius2 = cfg.margin * eps
    it = 0
    termination = "max-iters"
    r, J = problem.residuals(ev)
    v, Jv = problem.gate_jacobian(ev)
    lam = max(1e-8 * float(np.max(np.sum(J * J, axis=0), initial=0.0)), 1e-15)
    # steps longer than the current waveform can leap to high-power solutions
    step_cap = 1.0 if np.any(x) else 0.0
    history.append(ev.spectral)
    while True:
        g = 2 * J.T @ r
        s = 1.0 if v[0] >= 0 else -1.0
        h, Jh = s * v[1:], s * Jv[1:]
        active = ev.infidelity >= 0.1 * eps
        pg = _projected_gradient(g, Jh, h, active)
        gnorm = float(np.abs(pg).max(initial=0.0))
        log.append(LogRow(it, ev.spectral, ev.fidelity, gnorm, time.perf_counter() - t0))
        if callback is not None:
            callback(it, ev)
        if gnorm <= cfg.grad_tol or ev.spectral == 0.0:
            termination = "converged"
            break
        if it >= cfg.max_iters:
            break
        JtJ = J.T @ J
        gh = J.T @ r
        accepted = False
        while lam < 1e20:
            d = _ball_step(JtJ, gh, Jh, h, lam, radius2)
            if step_cap > 0 and np.linalg.norm(d) > step_cap * np.linalg.norm(x):
                lam *= 4.0
                continue
            pred = float(r @ r) - float(np.sum((r + J @ d) ** 2)) - 0.0
            trial = problem.evaluate(x + d)
            if trial.infidelity > eps and pred > 0:
                d, trial = _second_order_correction(problem, x, d, trial, h, Jh, s, eps)
            actual = ev.spectral - trial.spectral
            if trial.infidelity <= eps and pred > 0 and actual > 1e-4 * pred:
                accepted = True
                break
            lam *= 4.0
        if not accepted:
            termination = "stalled"
            break
        rel = actual / ev.spectral if ev.spectral > 0 else 0.0
        x, ev = x + d, trial
        lam = max(lam / 3.0, 1e-15)
        it += 1
        r, J = problem.residuals(ev)
        v, Jv = problem.gate_jacobian(ev)
        history.append(ev.spectral)
        if rel < cfg.rel_tol:
            termination = "converged"
            log.append(LogRow(it, ev.spectral, ev.fidelity, float("nan"), time.perf_counter() - t0))
            break
    res = _result(problem, ev, history, it, termination, log)
    # infidelity is |v_vec|^2, which stays accurate where 1 - F_G would round
    assert ev.infidelity <= eps, "constrained result violates the fidelity constraint"
    return res


def _result(problem, ev: Evaluation, history, it, termination, log, objective_history=None):
    return OptimizationResult(
        waveform=problem.to_waveform(ev.x),
        x=ev.x,
        gamma_history=list(history),
        F_G_final=ev.fidelity,
        gamma_final=ev.spectral,
        iterations=it,
        termination=termination,
        log=log,
        objective_history=list(objective_history or []),
    )


class Phi:
    """Combined fidelity F_G + F_spec and its gradient.

    F_spec is 1/2 (1 + exp(-kappa * score)); kappa is P T / d omega for the
    leakage score, 1 / pi for the PSD-weighted score (whose value divided
    by pi is the overlap with the noise), and 1 / (2 pi T^2) for the target
    score.
    """

    def __init__(self, problem: PulseProblem, total_power: float | None = None):
        self.problem = problem
        N = problem.N
        if problem.kind == "leakage":
            if total_power is None or total_power <= 0:
                raise ValidationError("combined fidelity needs the total noise power", key="psd")
            self.kappa = total_power * N / problem.dw
        elif problem.kind == "psd":
            self.kappa = 1.0 / np.pi
        else:
            self.kappa = 1.0 / (2 * np.pi * N * N)

    def value(self, x) -> float:
        ev = self.problem.evaluate(x)
        return ev.fidelity + 0.5 * (1 + np.exp(-self.kappa * ev.spectral))

    def value_and_grad(self, x):
        ev = self.problem.evaluate(x)
        e = np.exp(-self.kappa * ev.spectral)
        val = ev.fidelity + 0.5 * (1 + e)
        grad = self.problem.fidelity_gradient(ev) - 0.5 * self.kappa * e * self.problem.spectral_gradient(ev)
        return val, grad, ev


def optimize_unconstrained(
    problem: PulseProblem,
    x0,
    total_power: float | None = None,
    cfg: OptimizerConfig = OptimizerConfig(mode="unconstrained"),
    callback=None,
) -> OptimizationResult:
    """L-BFGS ascent on the combined fidelity with Armijo backtracking."""
    t0 = time.perf_counter()
    phi = Phi(problem, total_power)
    x = np.array(x0, dtype=float)
    f, g, ev = phi.value_and_grad(x)
    S: list[np.ndarray] = []
    Y: list[np.ndarray] = []
    history = [ev.spectral]
    obj = [f]
    log: list[LogRow] = []
    termination = "max-iters"
    it = 0
    while True:
        gnorm = float(np.abs(g).max())
        log.append(LogRow(it, ev.spectral, ev.fidelity, gnorm, time.perf_counter() - t0))
        if callback is not None:
            callback(it, ev)
        if gnorm <= cfg.grad_tol:
            termination = "converged"
            break
        if it >= cfg.max_iters:
            break
        # two-loop recursion on the negated objective
        q = -g.copy()
        alphas = []
        for s, y in zip(reversed(S), reversed(Y)):
            a = (s @ q) / (y @ s)
            alphas.append(a)
            q -= a * y
        if S:
            q *= (S[-1] @ Y[-1]) / (Y[-1] @ Y[-1])
        else:
            q *= 1.0 / max(gnorm, 1e-300) * 1e-2
        for (s, y), a in zip(zip(S, Y), reversed(alphas)):
            b = (y @ q) / (y @ s)
            q += (a - b) * s
        d = -q
        slope = float(g @ d)
        if slope <= 0:
            S.clear()
            Y.clear()
            d = g / max(gnorm, 1e-300) * 1e-2
            slope = float(g @ d)
        t = 1.0
        for _ in range(60):
            f_new, g_new, ev_new = phi.value_and_grad(x + t * d)
            if f_new >= f + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            termination = "stalled"
            break
        s_vec = t * d
        y_vec = -(g_new - g)
        if s_vec @ y_vec > 1e-12 * np.sqrt((s_vec @ s_vec) * (y_vec @ y_vec)):
            S.append(s_vec)
            Y.append(y_vec)
            if len(S) > cfg.memory:
                S.pop(0)
                Y.pop(0)
        x, f, g, ev = x + s_vec, f_new, g_new, ev_new
        it += 1
        history.append(ev.spectral)
        obj.append(f)
    return _result(problem, ev, history, it, termination, log, obj)
