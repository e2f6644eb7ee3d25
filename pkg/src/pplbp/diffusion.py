"""Implicit pseudo-parabolic diffusion on a pixel grid.

One time step solves the five-point system

    U^{n+1} - (dt + tau) L_G U^{n+1} = U^n - tau L_G U^n

where ``L_G`` is the conservative (flux-form) discrete Laplacian with
interface coefficients ``G``, and fluxes across the image border are zero.
With ``tau = 0`` this is backward-Euler heat flow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .grid import GrayImage, InvalidMeshError, MeshParams
from .kernels import ConvergenceError

__all__ = [
    "ConvergenceError",
    "PentadiagonalSystem",
    "SolverParams",
    "assemble_system",
    "diffusion_step",
    "evolve",
    "interface_coefficients",
    "pcg_solve",
]


@dataclass(frozen=True)
class SolverParams:
    tol: float = 1e-10
    max_iter: int = 1000

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive (got {self.tol})")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1 (got {self.max_iter})")


@dataclass(frozen=True)
class PentadiagonalSystem:
    """Stencil form of the SPD matrix and right-hand side of one step.

    ``off_x[i, j]`` is the (nonpositive) coefficient coupling cells (i, j)
    and (i+1, j); ``off_y[i, j]`` couples (i, j) and (i, j+1). Couplings
    across the border are absent. ``diag`` is ``1 - sum(adjacent off)``.
    Vectors are ordered ``k = j*m + i``.
    """

    off_x: np.ndarray  # (m-1, l)
    off_y: np.ndarray  # (m, l-1)
    diag: np.ndarray  # (m, l)
    rhs: np.ndarray  # (m, l)

    @property
    def shape(self) -> tuple[int, int]:
        return self.diag.shape

    @property
    def n_unknowns(self) -> int:
        return self.diag.size

    def matvec(self, x: np.ndarray) -> np.ndarray:
        m, l = self.shape
        x2 = np.reshape(x, (m, l), order="F")
        y = kernels.stencil_matvec(np.ascontiguousarray(x2), -self.off_x, -self.off_y)
        return y.ravel(order="F")

    @property
    def b(self) -> np.ndarray:
        return self.rhs.ravel(order="F")

    def to_dense(self) -> np.ndarray:
        """Explicit ``n x n`` matrix (for testing and small problems only)."""
        m, l = self.shape
        n = m * l
        A = np.zeros((n, n))
        idx = np.arange(n).reshape((m, l), order="F")
        A[idx.ravel(), idx.ravel()] = self.diag.ravel()
        a, b = idx[:-1, :].ravel(), idx[1:, :].ravel()
        A[a, b] = A[b, a] = self.off_x.ravel()
        a, b = idx[:, :-1].ravel(), idx[:, 1:].ravel()
        A[a, b] = A[b, a] = self.off_y.ravel()
        return A


def _coefficient_field(G, shape) -> np.ndarray:
    if G is None:
        return np.ones(shape)
    G = np.asarray(G.data if isinstance(G, GrayImage) else G, dtype=np.float64)
    if G.shape != tuple(shape):
        raise InvalidMeshError(f"coefficient field shape {G.shape} does not match image {tuple(shape)}")
    return G


def interface_coefficients(G) -> tuple[np.ndarray, np.ndarray]:
    """Arithmetic means of ``G`` on the interior cell interfaces.

    Returns ``(gx, gy)`` with ``gx[i, j] = G_{i+1/2, j}`` and
    ``gy[i, j] = G_{i, j+1/2}``.
    """
    G = np.asarray(G.data if isinstance(G, GrayImage) else G, dtype=np.float64)
    if not np.all(G > 0):
        raise InvalidMeshError("coefficient field must be strictly positive")
    gx = 0.5 * (G[:-1, :] + G[1:, :])
    gy = 0.5 * (G[:, :-1] + G[:, 1:])
    return gx, gy


def _laplacian(u: np.ndarray, kx: np.ndarray, ky: np.ndarray) -> np.ndarray:
    """Flux-form ``sum kx*(u_nb - u) + sum ky*(u_nb - u)`` with zero border flux."""
    out = np.zeros_like(u)
    fx = kx * (u[1:, :] - u[:-1, :])
    out[:-1, :] += fx
    out[1:, :] -= fx
    fy = ky * (u[:, 1:] - u[:, :-1])
    out[:, :-1] += fy
    out[:, 1:] -= fy
    return out


def assemble_system(U_n: GrayImage, params: MeshParams = MeshParams(), G=None) -> PentadiagonalSystem:
    u = U_n.data
    gx, gy = interface_coefficients(_coefficient_field(G, u.shape))
    kx = gx / params.dx**2
    ky = gy / params.dy**2
    scale = params.dt + params.tau
    off_x = -scale * kx
    off_y = -scale * ky
    diag = np.ones_like(u)
    diag[:-1, :] -= off_x
    diag[1:, :] -= off_x
    diag[:, :-1] -= off_y
    diag[:, 1:] -= off_y
    rhs = u - params.tau * _laplacian(u, kx, ky)
    return PentadiagonalSystem(off_x, off_y, diag, rhs)


def pcg_solve(sys: PentadiagonalSystem, x0=None, sp: SolverParams = SolverParams(), *, return_info=False):
    """Solve ``A x = b`` by Jacobi-preconditioned conjugate gradients.

    Stops when ``||b - A x|| <= tol * ||b||``. Raises ConvergenceError
    after ``max_iter`` iterations. With ``return_info`` the iteration count
    and final relative residual are returned as well.
    """
    m, l = sys.shape
    if x0 is None:
        x0 = np.zeros((m, l))
    else:
        x0 = np.asarray(x0, dtype=np.float64)
        if x0.size != m * l:
            raise ValueError(f"x0 has {x0.size} entries, expected {m * l}")
        x0 = np.reshape(x0, (m, l), order="F")
    x, iters, relres = kernels.pcg(
        -sys.off_x, -sys.off_y, sys.diag, sys.rhs, np.ascontiguousarray(x0), sp.tol, sp.max_iter
    )
    x = x.ravel(order="F")
    if return_info:
        return x, iters, relres
    return x


def diffusion_step(
    U_n: GrayImage, params: MeshParams = MeshParams(), sp: SolverParams = SolverParams(), G=None
) -> GrayImage:
    sys = assemble_system(U_n, params, G)
    x = pcg_solve(sys, U_n.as_vector(), sp)
    return GrayImage.from_vector(x, U_n.m, U_n.l)


def evolve(
    U_0: GrayImage, N: int, params: MeshParams = MeshParams(), sp: SolverParams = SolverParams(), G=None
) -> list[GrayImage]:
    """``[U_0, U_1, ..., U_N]``, each obtained from the previous by one step."""
    if N < 1:
        raise ValueError(f"N must be >= 1 (got {N})")
    out = [U_0]
    for _ in range(N):
        out.append(diffusion_step(out[-1], params, sp, G))
    return out
