"""Compiled inner loop for the penalized quadratic subproblem."""
import numpy as np
from numba import njit


@njit(cache=True)
def _sweep(H, c, b, Hb, pen, idx, tol):
    max_change = 0.0
    for t in range(idx.shape[0]):
        j = idx[t]
        hjj = H[j, j]
        old = b[j]
        if hjj <= 0.0:
            new = 0.0
        else:
            r = c[j] - Hb[j] + hjj * old
            if r > pen[j]:
                new = (r - pen[j]) / hjj
            elif r < -pen[j]:
                new = (r + pen[j]) / hjj
            else:
                new = 0.0
        delta = new - old
        if delta != 0.0:
            b[j] = new
            for k in range(Hb.shape[0]):
                Hb[k] += H[k, j] * delta
            ch = abs(delta) * np.sqrt(max(hjj, 1e-300))
            if ch > max_change:
                max_change = ch
    return max_change


@njit(cache=True)
def cd_quadratic(H, c, b0, pen, tol, max_sweeps):
    """Minimise ``0.5 b'Hb - c'b + sum_j pen_j |b_j|`` by cyclic coordinate descent.

    Alternates full sweeps with sweeps over the current nonzero set. Returns
    the solution and the number of sweeps used.
    """
    p = b0.shape[0]
    b = b0.copy()
    Hb = H @ b
    full = np.arange(p)
    sweeps = 0
    while sweeps < max_sweeps:
        ch = _sweep(H, c, b, Hb, pen, full, tol)
        sweeps += 1
        if ch < tol:
            break
        active = np.flatnonzero(b != 0.0)
        while sweeps < max_sweeps:
            ch = _sweep(H, c, b, Hb, pen, active, tol)
            sweeps += 1
            if ch < tol:
                break
    return b, sweeps
