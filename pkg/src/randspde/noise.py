"""Truncated Q-Wiener increments with sine eigenfunctions.

``W(t, x) = sum_j sqrt(q_j) sin(j pi x) beta_j(t)`` with ``q_j = j^-(2 gamma + 1 + eps_q)``,
truncated after ``J`` modes.  Brownian increments are generated once at the
finest time step; coarser steps use exact sums of consecutive fine rows, so
every refinement level sees the same Brownian motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BrownianPath",
    "NoiseSpec",
    "aggregate",
    "default_truncation",
    "eigenvalue",
    "eigenvalues",
    "generate_path",
    "increment_on_grid",
    "mode_matrix",
    "nodal_increments",
]

MAX_MODES = 10_000


@dataclass(frozen=True)
class NoiseSpec:
    """Regularity ``gamma``, eigenvalue offset ``eps_q`` and truncation ``J``.

    ``orthonormal=True`` uses ``sqrt(2) sin(j pi x)`` instead of the plain sines.
    """

    gamma: float = 1.0
    eps_q: float = 0.1
    J: int = 64
    orthonormal: bool = False

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if not self.eps_q > 0:
            raise ValueError("eps_q must be positive")
        if int(self.J) != self.J or self.J < 1:
            raise ValueError("J must be a positive integer")

    @property
    def exponent(self):
        return 2.0 * self.gamma + 1.0 + self.eps_q


def default_truncation(h, gamma, cap=MAX_MODES):
    """``J = ceil(h^(-2/gamma))``, capped; balances ``J^-gamma`` against ``h^2``."""
    if gamma <= 0:
        return cap
    return int(min(cap, math.ceil(h ** (-2.0 / gamma) - 1e-9)))


def eigenvalue(spec: NoiseSpec, j: int) -> float:
    if j < 1:
        raise ValueError("mode index starts at 1")
    return float(j) ** (-spec.exponent)


def eigenvalues(spec: NoiseSpec) -> np.ndarray:
    return np.arange(1, spec.J + 1, dtype=float) ** (-spec.exponent)


@dataclass(frozen=True)
class BrownianPath:
    """Fine-level increments, row ``n`` holds ``beta_j(t_{n+1}) - beta_j(t_n)``."""

    increments: np.ndarray
    dt_fine: float

    @property
    def N_fine(self):
        return self.increments.shape[0]

    @property
    def J(self):
        return self.increments.shape[1]


def generate_path(spec: NoiseSpec, N_fine: int, dt_fine: float, rng, zero=False) -> BrownianPath:
    if N_fine < 1:
        raise ValueError("N_fine must be at least 1")
    if not dt_fine > 0:
        raise ValueError("dt_fine must be positive")
    if zero:
        inc = np.zeros((N_fine, spec.J))
    else:
        inc = rng.standard_normal((N_fine, spec.J))
        inc *= math.sqrt(dt_fine)
    return BrownianPath(increments=inc, dt_fine=float(dt_fine))


def aggregate(path: BrownianPath, r: int) -> np.ndarray:
    """Increments over ``r`` consecutive fine steps (row ``n`` covers fine rows ``nr .. nr+r-1``)."""
    N = path.N_fine
    if r < 1 or N % r:
        raise ValueError(f"ratio r={r} must divide N_fine={N}")
    if r == 1:
        return path.increments
    return path.increments.reshape(N // r, r, path.J).sum(axis=1)


def mode_matrix(spec: NoiseSpec, nodes) -> np.ndarray:
    """``sqrt(q_j) phi_j(x_k)`` as a ``(J, len(nodes))`` array."""
    nodes = np.asarray(nodes, dtype=float)
    j = np.arange(1, spec.J + 1, dtype=float)
    phi = np.sin(np.pi * np.outer(j, nodes))
    if spec.orthonormal:
        phi *= math.sqrt(2.0)
    phi[:, (nodes == 0.0) | (nodes == 1.0)] = 0.0
    return np.sqrt(eigenvalues(spec))[:, None] * phi


def increment_on_grid(spec: NoiseSpec, path: BrownianPath, n: int, r: int, nodes) -> np.ndarray:
    """``P_J Delta W`` over coarse step ``n`` (fine ratio ``r``), evaluated at ``nodes``."""
    if n < 0 or r < 1 or (n + 1) * r > path.N_fine:
        raise IndexError(
            f"coarse step {n} at ratio {r} needs {(n + 1) * r} fine steps, "
            f"path has {path.N_fine}")
    if path.J != spec.J:
        raise ValueError("path and spec disagree on J")
    db = path.increments[n * r:(n + 1) * r].sum(axis=0)
    return db @ mode_matrix(spec, nodes)


def nodal_increments(spec: NoiseSpec, path: BrownianPath, r: int, nodes) -> np.ndarray:
    """All coarse increments at once: ``(N_fine / r, len(nodes))``."""
    return aggregate(path, r) @ mode_matrix(spec, nodes)
