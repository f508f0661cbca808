"""Unit quaternions as SU(2) elements.

q = (w, x, y, z) stands for w*1 - i(x*sx + y*sy + z*sz), so the Hamilton
product matches matrix multiplication of the corresponding unitaries.
"""

import numpy as np

from .errors import DomainError

SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
IDENTITY = np.eye(2, dtype=complex)


def qmul(p, q):
    """Hamilton product, broadcasting over leading axes."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    a, b, c, d = np.moveaxis(p, -1, 0)
    e, f, g, h = np.moveaxis(q, -1, 0)
    return np.stack(
        (
            a * e - b * f - c * g - d * h,
            a * f + b * e + c * h - d * g,
            a * g - b * h + c * e + d * f,
            a * h + b * g - c * f + d * e,
        ),
        axis=-1,
    )


def qconj(q):
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def to_matrix(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    w, x, y, z = np.moveaxis(q, -1, 0)
    U = np.empty(q.shape[:-1] + (2, 2), dtype=complex)
    U[..., 0, 0] = w - 1j * z
    U[..., 0, 1] = -y - 1j * x
    U[..., 1, 0] = y - 1j * x
    U[..., 1, 1] = w + 1j * z
    return U


def from_matrix(U, tol: float = 1e-10) -> np.ndarray:
    """Quaternion of U / sqrt(det U); the overall sign is arbitrary."""
    U = np.asarray(U, dtype=complex)
    if U.shape != (2, 2):
        raise DomainError(f"expected a 2x2 matrix, got shape {U.shape}")
    if np.abs(U.conj().T @ U - IDENTITY).max() > tol:
        raise DomainError("matrix is not unitary")
    V = U / np.sqrt(np.linalg.det(U))
    w = 0.5 * (V[0, 0] + V[1, 1])
    z = 0.5j * (V[0, 0] - V[1, 1])
    x = 0.5j * (V[0, 1] + V[1, 0])
    y = 0.5 * (V[1, 0] - V[0, 1])
    return np.real(np.array([w, x, y, z]))


def rotation_matrices(q) -> np.ndarray:
    """R_{mu nu} = 1/2 Tr[U^dag s_mu U s_nu] for each quaternion in q."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = np.moveaxis(q, -1, 0)
    R = np.empty(q.shape[:-1] + (3, 3))
    ww, xx, yy, zz = w * w, x * x, y * y, z * z
    R[..., 0, 0] = ww + xx - yy - zz
    R[..., 1, 1] = ww - xx + yy - zz
    R[..., 2, 2] = ww - xx - yy + zz
    R[..., 0, 1] = 2 * (x * y - w * z)
    R[..., 1, 0] = 2 * (x * y + w * z)
    R[..., 0, 2] = 2 * (x * z + w * y)
    R[..., 2, 0] = 2 * (x * z - w * y)
    R[..., 1, 2] = 2 * (y * z - w * x)
    R[..., 2, 1] = 2 * (y * z + w * x)
    return R


def rotation_differential(q, dq) -> np.ndarray:
    """Derivative of :func:`rotation_matrices` at q in direction dq."""
    q = np.asarray(q, dtype=float)
    dq = np.asarray(dq, dtype=float)
    w, x, y, z = np.moveaxis(q, -1, 0)
    dw, dx, dy, dz = np.moveaxis(dq, -1, 0)
    D = np.empty(np.broadcast_shapes(q.shape, dq.shape)[:-1] + (3, 3))
    D[..., 0, 0] = 2 * (w * dw + x * dx - y * dy - z * dz)
    D[..., 1, 1] = 2 * (w * dw - x * dx + y * dy - z * dz)
    D[..., 2, 2] = 2 * (w * dw - x * dx - y * dy + z * dz)
    D[..., 0, 1] = 2 * (dx * y + x * dy - dw * z - w * dz)
    D[..., 1, 0] = 2 * (dx * y + x * dy + dw * z + w * dz)
    D[..., 0, 2] = 2 * (dx * z + x * dz + dw * y + w * dy)
    D[..., 2, 0] = 2 * (dx * z + x * dz - dw * y - w * dy)
    D[..., 1, 2] = 2 * (dy * z + y * dz - dw * x - w * dx)
    D[..., 2, 1] = 2 * (dy * z + y * dz + dw * x + w * dx)
    return D


def _sinc_half(theta):
    """s = sin(theta/2)/theta and u = s'(theta)/theta, stable at theta -> 0."""
    theta = np.asarray(theta, dtype=float)
    small = theta < 1e-3
    t = np.where(small, 1.0, theta)
    s = np.where(small, 0.5 - theta**2 / 48.0 + theta**4 / 3840.0, np.sin(t / 2) / t)
    u = np.where(
        small,
        -1.0 / 24.0 + theta**2 / 960.0 - theta**4 / 64512.0,
        (0.5 * t * np.cos(t / 2) - np.sin(t / 2)) / t**3,
    )
    return s, u


def segment_quaternions(ax, ay, dt: float = 1.0) -> np.ndarray:
    """exp(-i dt (ax sx + ay sy)/2) for each step."""
    ax = np.asarray(ax, dtype=float) * dt
    ay = np.asarray(ay, dtype=float) * dt
    theta = np.hypot(ax, ay)
    s, _ = _sinc_half(theta)
    return np.stack((np.cos(theta / 2), s * ax, s * ay, np.zeros_like(ax)), axis=-1)


def segment_quaternion_derivatives(ax, ay, dt: float = 1.0):
    """d(segment)/d(ax) and d(segment)/d(ay), each of shape (N, 4)."""
    ax = np.asarray(ax, dtype=float) * dt
    ay = np.asarray(ay, dtype=float) * dt
    theta = np.hypot(ax, ay)
    s, u = _sinc_half(theta)
    zero = np.zeros_like(ax)
    dx = np.stack((-0.5 * s * ax, s + u * ax * ax, u * ax * ay, zero), axis=-1) * dt
    dy = np.stack((-0.5 * s * ay, u * ax * ay, s + u * ay * ay, zero), axis=-1) * dt
    return dx, dy
