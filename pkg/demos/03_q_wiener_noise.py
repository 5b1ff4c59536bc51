"""Truncated Q-Wiener noise and coupled Brownian paths.

Mode j carries variance q_j = j^-(2 gamma + 1 + eps) along sin(j pi x).
Coarse time steps reuse the fine path by summing blocks of increments, so
all levels of a convergence study see the same Brownian motion.
"""

import numpy as np

from randspde import NoiseSpec, generate_path
from randspde.noise import aggregate, default_truncation, eigenvalues, nodal_increments

spec = NoiseSpec(gamma=1.0, eps_q=0.1, J=64)
q = eigenvalues(spec)
print("q_1..q_4 =", np.round(q[:4], 5), f" sum = {q.sum():.5f}")
print("default J for h = 1/64:", default_truncation(1 / 64, 1.0))

dt = 1e-3
path = generate_path(spec, 8, dt, np.random.default_rng(1))
coarse = aggregate(path, 4)
print("fine path sums to the coarse one:",
      np.array_equal(coarse[0], path.increments[:4].sum(axis=0)))

# E ||dW||^2 = dt * sum(q_j) / 2 with the unnormalised sine basis
nodes = np.linspace(0, 1, 257)
big = generate_path(spec, 5000, dt, np.random.default_rng(2))
w = nodal_increments(spec, big, 1, nodes)
est = np.mean((nodes[1] - nodes[0]) * np.sum(w ** 2, axis=1))
print(f"E||dW||^2: Monte Carlo {est:.3e}, exact {dt * q.sum() / 2:.3e}")
