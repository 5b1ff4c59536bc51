"""Semi-implicit Euler-Maruyama in time with P1 elements in space.

One step solves

    (M + dt S) u^{n+1} = M g^n,    g^n = u^n + dt f(u^n) + G(u^n) dW^n,

with ``f`` and ``G`` applied nodally.  ``M + dt S`` does not change along a
trajectory (the coefficient is time independent), so it is factorised once.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .fem import (
    FactorizedTridiagonal,
    Grid1D,
    TridiagonalSystem,
    assemble_mass,
    assemble_stiffness,
    l2_project,
)

__all__ = [
    "DRIFTS",
    "DivergenceError",
    "MULTIPLIERS",
    "ModelSpec",
    "SolverState",
    "Trajectory",
    "evolve",
    "init_state",
    "step",
]

DIVERGENCE_BOUND = 1e8


class DivergenceError(FloatingPointError):
    """A nodal value left ``[-1e8, 1e8]``."""

    def __init__(self, n, k, value=None):
        super().__init__(f"solution diverged at step {n}, interior node {k} (value {value!r})")
        self.n = n
        self.k = k
        self.value = value


def _allen_cahn(u, params):
    return u - u ** 3


def _zero(u, params):
    return np.zeros_like(u)


def _affine(u, params):
    c0, c1 = params
    return c0 + c1 * u


def _half_linear(u):
    return 0.5 * u


def _half_one_minus_sq(u):
    return 0.5 * (1.0 - u * u)


# f(u) = u - u^3 is only locally Lipschitz; the other two are globally Lipschitz.
DRIFTS = {
    "allen_cahn": _allen_cahn,
    "zero": _zero,
    "custom_affine": _affine,
}

MULTIPLIERS = {
    "zero": None,
    "half_linear": _half_linear,
    "half_one_minus_sq": _half_one_minus_sq,
}


@dataclass(frozen=True)
class ModelSpec:
    """Drift ``f``, noise multiplier ``G``, coefficient scale and final time."""

    drift_kind: str = "allen_cahn"
    g_kind: str = "half_one_minus_sq"
    eps_a: float = 1e-3
    T: float = 0.1
    drift_params: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.drift_kind not in DRIFTS:
            raise ValueError(f"unknown drift_kind {self.drift_kind!r}")
        if self.g_kind not in MULTIPLIERS:
            raise ValueError(f"unknown g_kind {self.g_kind!r}")
        if not self.eps_a > 0:
            raise ValueError("eps_a must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")

    def drift(self, u):
        return DRIFTS[self.drift_kind](u, self.drift_params)

    def multiplier(self, u):
        G = MULTIPLIERS[self.g_kind]
        return None if G is None else G(u)


@dataclass(frozen=True)
class SolverState:
    n: int
    u: np.ndarray
    mass: TridiagonalSystem
    iteration_matrix: TridiagonalSystem
    dt: float
    model: ModelSpec
    factors: FactorizedTridiagonal = field(repr=False, compare=False)


def init_state(model: ModelSpec, grid: Grid1D, a_nodes, u0_nodes, dt: float) -> SolverState:
    """Project the initial data and factorise ``M + dt S``.

    ``u0_nodes`` are the interior nodal values of ``u_0``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    mass = assemble_mass(grid)
    stiff = assemble_stiffness(grid, a_nodes)
    it = mass + stiff.scaled(dt)
    u = l2_project(np.asarray(u0_nodes, dtype=float), mass)
    return SolverState(n=0, u=u, mass=mass, iteration_matrix=it, dt=float(dt),
                       model=model, factors=it.factorize())


def _advance(u, dW, dt, model, mass, factors):
    g = u + dt * model.drift(u)
    G = model.multiplier(u)
    if G is not None:
        g = g + G * dW
    return factors.solve(mass.matvec(g))


def step(state: SolverState, noise_increment) -> SolverState:
    dW = np.asarray(noise_increment, dtype=float)
    if dW.shape != state.u.shape:
        raise ValueError(f"noise increment must have length {state.u.size}")
    u = _advance(state.u, dW, state.dt, state.model, state.mass, state.factors)
    _check_bounded(u, state.n + 1)
    return replace(state, n=state.n + 1, u=u)


def _check_bounded(u, n):
    if not np.all(np.abs(u) <= DIVERGENCE_BOUND):
        k = int(np.argmax(~(np.abs(u) <= DIVERGENCE_BOUND)))
        raise DivergenceError(n, k, float(u[k]))


@dataclass
class Trajectory:
    final: np.ndarray
    times: list
    snapshots: list


def evolve(model: ModelSpec, grid: Grid1D, a_nodes, u0_nodes, dt: float, N: int,
           noise=None, snapshot_times=(), check_every=1) -> Trajectory:
    """Run ``N`` steps and record the solution at the requested times.

    Parameters
    ----------
    noise
        ``(N, K)`` array of nodal increments, a callable ``n -> (K,)``, or
        ``None`` for no noise.
    snapshot_times
        Times at which to store the interior coefficients; each is rounded to
        the nearest step.  ``T = N dt`` is always recorded.
    check_every
        Divergence test interval in steps.
    """
    if N < 0:
        raise ValueError("N must be non-negative")
    state = init_state(model, grid, a_nodes, u0_nodes, dt)
    K = grid.K
    if noise is None:
        zeros = np.zeros(K)
        get = lambda n: zeros  # noqa: E731
    elif callable(noise):
        get = noise
    else:
        noise = np.asarray(noise)
        if noise.shape[0] < N or noise.shape[1] != K:
            raise ValueError(f"noise must have shape ({N}, {K})")
        get = noise.__getitem__

    wanted = sorted({min(N, max(0, int(round(t / dt)))) for t in snapshot_times} | {N})
    times, snaps = [], []
    u = state.u
    mass, factors = state.mass, state.factors
    nxt = 0
    for n in range(N + 1):
        while nxt < len(wanted) and wanted[nxt] == n:
            times.append(n * dt)
            snaps.append(u.copy())
            nxt += 1
        if n == N:
            break
        u = _advance(u, get(n), dt, model, mass, factors)
        if (n + 1) % check_every == 0 or n + 1 == N:
            _check_bounded(u, n + 1)
    return Trajectory(final=u, times=times, snapshots=snaps)
