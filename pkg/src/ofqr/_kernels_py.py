"""Pure numpy implementations of the hot kernels.

Same signatures and semantics as the compiled ``_ckernels`` module; used when
the extension is unavailable or ``OFQR_PURE_PYTHON=1`` is set.
"""

from __future__ import annotations

import math

import numpy as np


def transfer_block(sx, sy, ex, ey, ez, area):
    """Point-sampled emitter-to-pixel weights area*z^2 / (pi*d^4), shape (P, E)."""
    dx = sx[:, None] - ex[None, :]
    d2 = dx * dx
    dy = sy[:, None] - ey[None, :]
    d2 += dy * dy
    del dx, dy
    ez2 = ez * ez
    d2 += ez2[None, :]
    np.square(d2, out=d2)
    return np.divide((area * ez2 / math.pi)[None, :], d2, out=d2)


def jacobi_sweep(work, v, tol):
    """One cyclic sweep of one-sided Jacobi on the rows of ``work``.

    ``work`` (n, m) holds the columns of the matrix being orthogonalised as
    rows; ``v`` (n, n) accumulates the right rotations, also row-wise.
    Returns the largest relative off-diagonal value seen before rotation.
    """
    n = work.shape[0]
    max_off = 0.0
    for p in range(n - 1):
        for q in range(p + 1, n):
            wp = work[p]
            wq = work[q]
            alpha = float(wp @ wp)
            beta = float(wq @ wq)
            gamma = float(wp @ wq)
            if alpha == 0.0 or beta == 0.0:
                continue
            off = abs(gamma) / math.sqrt(alpha * beta)
            if off > max_off:
                max_off = off
            if off <= tol:
                continue
            zeta = (beta - alpha) / (2.0 * gamma)
            t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
            c = 1.0 / math.sqrt(1.0 + t * t)
            s = c * t
            new_p = c * wp - s * wq
            work[q] = s * wp + c * wq
            work[p] = new_p
            vp = v[p]
            vq = v[q]
            new_vp = c * vp - s * vq
            v[q] = s * vp + c * vq
            v[p] = new_vp
    return max_off


def im2col(xpad, k, stride, ho, wo):
    """(B, C, Hp, Wp) -> (C*k*k, B*ho*wo) patch matrix."""
    b, c = xpad.shape[:2]
    win = np.lib.stride_tricks.sliding_window_view(xpad, (k, k), axis=(2, 3))
    win = win[:, :, : stride * ho : stride, : stride * wo : stride]
    # (B, C, ho, wo, k, k) -> (C, k, k, B, ho, wo)
    return np.ascontiguousarray(win.transpose(1, 4, 5, 0, 2, 3)).reshape(c * k * k, b * ho * wo)


def col2im(cols, b, c, hp, wp, k, stride, ho, wo):
    """Adjoint of :func:`im2col`: scatter-add patches back to (B, C, Hp, Wp)."""
    out = np.zeros((b, c, hp, wp))
    cols6 = cols.reshape(c, k, k, b, ho, wo)
    for ki in range(k):
        for kj in range(k):
            out[:, :, ki : ki + stride * ho : stride, kj : kj + stride * wo : stride] += (
                cols6[:, ki, kj].transpose(1, 0, 2, 3)
            )
    return out
