"""P1 finite elements on a uniform grid of (0, 1) with homogeneous Dirichlet data.

Only interior nodes carry unknowns, so every system is ``K x K`` and
tridiagonal.  Element coefficients use the average of the two nodal values
of ``a``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import lapack

__all__ = [
    "FactorizedTridiagonal",
    "Grid1D",
    "SingularSystemError",
    "TridiagonalSystem",
    "assemble_mass",
    "assemble_stiffness",
    "interpolate",
    "l2_norm",
    "l2_project",
    "prolong_to_fine",
    "restrict_to_coarse",
    "solve_tridiagonal",
]


class SingularSystemError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class Grid1D:
    K: int

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("need at least one interior node")

    @property
    def h(self):
        return 1.0 / (self.K + 1)

    @cached_property
    def nodes(self):
        # k / (K+1) rather than k*h: nested grids then share bit-identical coordinates
        return np.arange(self.K + 2) / (self.K + 1)

    @property
    def interior(self):
        return self.nodes[1:-1]


@dataclass(frozen=True)
class TridiagonalSystem:
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def __post_init__(self):
        n = len(self.diag)
        if len(self.sub) != n - 1 or len(self.sup) != n - 1:
            raise ValueError("off-diagonals must have length len(diag) - 1")

    @property
    def size(self):
        return len(self.diag)

    def matvec(self, x):
        y = self.diag * x
        y[:-1] += self.sup * x[1:]
        y[1:] += self.sub * x[:-1]
        return y

    def __add__(self, other):
        return TridiagonalSystem(self.sub + other.sub, self.diag + other.diag,
                                 self.sup + other.sup)

    def scaled(self, c):
        return TridiagonalSystem(c * self.sub, c * self.diag, c * self.sup)

    def to_dense(self):
        A = np.diag(self.diag)
        if self.size > 1:
            A += np.diag(self.sub, -1) + np.diag(self.sup, 1)
        return A

    def factorize(self):
        return FactorizedTridiagonal(self)


class FactorizedTridiagonal:
    """LU factors (LAPACK ``gttrf``) for repeated solves with one matrix."""

    def __init__(self, A: TridiagonalSystem):
        self.system = A
        self._small = None
        if A.size <= 2:
            # scipy's gttrf wrapper rejects n = 2; solve these directly
            dense = A.to_dense()
            det = np.linalg.det(dense) if A.size == 2 else dense[0, 0]
            if det == 0.0:
                raise SingularSystemError("zero pivot at row 0")
            self._small = dense
            return
        dl, d, du, du2, ipiv, info = lapack.dgttrf(A.sub, A.diag, A.sup)
        if info > 0:
            raise SingularSystemError(f"zero pivot at row {info - 1}")
        if info < 0:
            raise ValueError(f"dgttrf: illegal argument {-info}")
        self._factors = (dl, d, du, du2, ipiv)

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if self._small is not None:
            if len(self._small) == 1:
                return b / self._small[0, 0]
            (a, c), (e, d) = self._small
            det = a * d - c * e
            return np.array([d * b[0] - c * b[1], a * b[1] - e * b[0]]) / det
        x, info = lapack.dgttrs(*self._factors, b)
        if info != 0:
            raise ValueError(f"dgttrs: illegal argument {-info}")
        return x


def solve_tridiagonal(A: TridiagonalSystem, b) -> np.ndarray:
    """Solve ``A x = b``; raises :class:`SingularSystemError` on a zero pivot."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != A.size:
        raise ValueError("right-hand side has the wrong length")
    return A.factorize().solve(b)


def assemble_mass(grid: Grid1D) -> TridiagonalSystem:
    h, K = grid.h, grid.K
    off = np.full(K - 1, h / 6.0)
    return TridiagonalSystem(off, np.full(K, 2.0 * h / 3.0), off.copy())


def assemble_stiffness(grid: Grid1D, a_nodes) -> TridiagonalSystem:
    """Stiffness matrix with ``a`` replaced on each element by its end-point average.

    ``a_nodes`` holds ``a`` at all ``K + 2`` nodes, boundary included.
    """
    a_nodes = np.asarray(a_nodes, dtype=float)
    if a_nodes.shape != (grid.K + 2,):
        raise ValueError(f"a_nodes must have length K+2={grid.K + 2}")
    if not np.all(a_nodes > 0):
        raise ValueError("diffusion coefficient must be positive at every node")
    h = grid.h
    a_elem = 0.5 * (a_nodes[:-1] + a_nodes[1:])  # element k+1 spans [x_k, x_{k+1}]
    diag = (a_elem[:-1] + a_elem[1:]) / h
    off = -a_elem[1:-1] / h
    return TridiagonalSystem(off, diag, off.copy())


def interpolate(func, grid: Grid1D) -> np.ndarray:
    """Interior nodal values of ``func``."""
    return np.asarray(func(grid.interior), dtype=float)


def l2_norm(u, M: TridiagonalSystem) -> float:
    """Exact L2 norm of the P1 function with interior coefficients ``u``."""
    u = np.asarray(u, dtype=float)
    return float(np.sqrt(max(u @ M.matvec(u), 0.0)))


def l2_project(values_at_nodes, M: TridiagonalSystem) -> np.ndarray:
    """L2 projection onto V_h of the nodal interpolant of ``w``.

    The load vector ``(w, phi_i)`` is computed from the interpolant, so
    functions already in V_h come back unchanged.
    """
    w = np.asarray(values_at_nodes, dtype=float)
    if w.shape != (M.size,):
        raise ValueError("values do not match the mass matrix")
    return solve_tridiagonal(M, M.matvec(w))


def _ratio(coarse: Grid1D, fine: Grid1D):
    r, rem = divmod(fine.K + 1, coarse.K + 1)
    if rem or r < 1:
        raise ValueError(f"grids with K={coarse.K} and K={fine.K} are not nested")
    return r


def restrict_to_coarse(fine_u, fine: Grid1D, coarse: Grid1D) -> np.ndarray:
    """Sample a fine-grid function at the coarse nodes."""
    r = _ratio(coarse, fine)
    full = np.concatenate([[0.0], np.asarray(fine_u, dtype=float), [0.0]])
    return full[::r][1:-1].copy()


def prolong_to_fine(coarse_u, coarse: Grid1D, fine: Grid1D) -> np.ndarray:
    """Exact embedding V_H -> V_h by piecewise-linear interpolation."""
    r = _ratio(coarse, fine)
    full = np.concatenate([[0.0], np.asarray(coarse_u, dtype=float), [0.0]])
    if r == 1:
        return full[1:-1].copy()
    # fine node m = k r + s lies between coarse nodes k, k+1 with weight s/r
    s = np.arange(r) / r
    left = full[:-1, None]
    right = full[1:, None]
    vals = ((1.0 - s) * left + s * right).ravel()
    return vals[1:]  # drop x=0; the last coarse interval ends before x=1
