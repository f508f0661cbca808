"""Reference implementations of the hot loops, in numpy.

The compiled module ``_kernels`` exposes the same functions with the same
signatures; ``fgrafs._backend`` picks one at import time.
"""

import numpy as np


def cumulative_quaternions(seg):
    """Running products q[j+1] = seg[j] * q[j] with q[0] = 1.

    seg has shape (N, 4) holding unit quaternions (w, x, y, z).
    """
    seg = np.ascontiguousarray(seg, dtype=float)
    N = seg.shape[0]
    out = np.empty((N + 1, 4))
    a, b, c, d = 1.0, 0.0, 0.0, 0.0
    out[0] = (a, b, c, d)
    for j in range(N):
        e, f, g, h = seg[j]
        a, b, c, d = (
            e * a - f * b - g * c - h * d,
            e * b + f * a + g * d - h * c,
            e * c - f * d + g * a + h * b,
            e * d + f * c - g * b + h * a,
        )
        out[j + 1] = (a, b, c, d)
    return out


def noisy_final_quaternions(ax, ay, beta):
    """Final propagator for each noise realization.

    ax, ay: control amplitudes, shape (N,). beta: noise, shape (R, 3, N).
    Step n applies exp(-i[(ax/2 + bx) sx + (ay/2 + by) sy + bz sz]).
    Returns (R, 4) quaternions.
    """
    beta = np.asarray(beta, dtype=float)
    R, _, N = beta.shape
    q = np.zeros((R, 4))
    q[:, 0] = 1.0
    for n in range(N):
        hx = 0.5 * ax[n] + beta[:, 0, n]
        hy = 0.5 * ay[n] + beta[:, 1, n]
        hz = beta[:, 2, n]
        r = np.sqrt(hx * hx + hy * hy + hz * hz)
        cr = np.cos(r)
        sr = np.where(r > 0.0, np.sin(r) / np.where(r > 0.0, r, 1.0), 1.0)
        e, f, g, h = cr, sr * hx, sr * hy, sr * hz
        a, b, c, d = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
        q = np.stack(
            (
                e * a - f * b - g * c - h * d,
                e * b + f * a + g * d - h * c,
                e * c - f * d + g * a + h * b,
                e * d + f * c - g * b + h * a,
            ),
            axis=1,
        )
    return q


def ou_recursion(beta0, w, decay, gain):
    """beta[0] = beta0; beta[n+1] = decay * beta[n] + gain * w[n] along the last axis."""
    w = np.asarray(w, dtype=float)
    out = np.empty(w.shape[:-1] + (w.shape[-1] + 1,))
    out[..., 0] = beta0
    prev = np.array(beta0, dtype=float)
    for n in range(w.shape[-1]):
        prev = decay * prev + gain * w[..., n]
        out[..., n + 1] = prev
    return out
