"""Pure numpy kernels. Same contracts as the compiled ``_kernels`` module."""

from __future__ import annotations

import math

import numpy as np

SNAP_EPS = 1e-9


class ConvergenceError(RuntimeError):
    """PCG hit its iteration cap; carries the final relative residual."""

    def __init__(self, iterations: int, residual: float):
        super().__init__(f"PCG did not converge in {iterations} iterations (relative residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


def stencil_matvec(x: np.ndarray, wx: np.ndarray, wy: np.ndarray) -> np.ndarray:
    """``A @ x`` for ``A = I + (weighted graph Laplacian)`` on the 5-point grid.

    ``wx[i, j]`` couples (i, j)-(i+1, j); ``wy[i, j]`` couples (i, j)-(i, j+1).
    Written in flux form so that constant vectors are reproduced exactly.
    """
    y = x.copy()
    fx = wx * (x[:-1, :] - x[1:, :])
    y[:-1, :] += fx
    y[1:, :] -= fx
    fy = wy * (x[:, :-1] - x[:, 1:])
    y[:, :-1] += fy
    y[:, 1:] -= fy
    return y


def pcg(wx, wy, diag, b, x0, tol, max_iter):
    """Jacobi-preconditioned CG on 2-D arrays. Returns ``(x, iterations, relres)``."""
    normb = math.sqrt(float(np.vdot(b, b)))
    if normb == 0.0:
        return np.zeros_like(b), 0, 0.0
    thresh = tol * normb
    x = np.array(x0, dtype=np.float64, copy=True)
    r = b - stencil_matvec(x, wx, wy)
    normr = math.sqrt(float(np.vdot(r, r)))
    if normr <= thresh:
        return x, 0, normr / normb
    inv_d = 1.0 / diag
    z = r * inv_d
    p = z.copy()
    rz = float(np.vdot(r, z))
    for it in range(1, max_iter + 1):
        ap = stencil_matvec(p, wx, wy)
        alpha = rz / float(np.vdot(p, ap))
        x += alpha * p
        r -= alpha * ap
        normr = math.sqrt(float(np.vdot(r, r)))
        if normr <= thresh:
            # guard against drift of the recursive residual
            r = b - stencil_matvec(x, wx, wy)
            normr = math.sqrt(float(np.vdot(r, r)))
            if normr <= thresh:
                return x, it, normr / normb
            z = r * inv_d
            p = z.copy()
            rz = float(np.vdot(r, z))
            continue
        z = r * inv_d
        rz_new = float(np.vdot(r, z))
        p *= rz_new / rz
        p += z
        rz = rz_new
    raise ConvergenceError(max_iter, normr / normb)


def neighbor_offsets(P: int, R: float) -> list[tuple[float, float]]:
    """Offsets ``(-R sin(2 pi p/P), R cos(2 pi p/P))``, snapped to integers within 1e-9."""
    out = []
    for p in range(P):
        ang = 2.0 * math.pi * p / P
        dx = -R * math.sin(ang)
        dy = R * math.cos(ang)
        if abs(dx - round(dx)) < SNAP_EPS:
            dx = float(round(dx))
        if abs(dy - round(dy)) < SNAP_EPS:
            dy = float(round(dy))
        out.append((dx, dy))
    return out


def margin(R: float) -> int:
    return int(math.ceil(R - SNAP_EPS))


def lbp_codes(data: np.ndarray, P: int, R: float) -> np.ndarray:
    """riu2 code for every pixel at distance >= ceil(R) from the border."""
    m, l = data.shape
    c = margin(R)
    rows, cols = m - 2 * c, l - 2 * c
    center = data[c : c + rows, c : c + cols]
    count = np.zeros((rows, cols), dtype=np.int64)
    trans = np.zeros((rows, cols), dtype=np.int64)
    first = prev = None
    for dx, dy in neighbor_offsets(P, R):
        x0 = math.floor(dx)
        y0 = math.floor(dy)
        fx = dx - x0
        fy = dy - y0

        def at(a, b):
            return data[c + a : c + a + rows, c + b : c + b + cols]

        top = at(x0, y0)
        if fy != 0.0:
            top = top + fy * (at(x0, y0 + 1) - top)
        if fx != 0.0:
            bottom = at(x0 + 1, y0)
            if fy != 0.0:
                bottom = bottom + fy * (at(x0 + 1, y0 + 1) - bottom)
            val = top + fx * (bottom - top)
        else:
            val = top
        bit = (val >= center).astype(np.int64)
        count += bit
        if prev is None:
            first = bit
        else:
            trans += bit != prev
        prev = bit
    trans += first != prev
    return np.where(trans <= 2, count, P + 1)
