"""Stochastic Allen-Cahn equation with a log-normal random diffusion coefficient.

Modules
-------
covariance
    Whittle-Matern covariance by spectral quadrature.
grf
    Circulant-embedding sampler for the log-coefficient field.
noise
    Truncated Q-Wiener increments with paths shared across time levels.
fem
    P1 finite elements on (0, 1), tridiagonal algebra.
stepper
    Semi-implicit Euler-Maruyama time stepping.
experiment
    Strong-convergence studies and evolution demos.
cli
    ``randspde`` command-line entry point.
"""

from .covariance import CovarianceSpec, eval_covariance, first_column
from .experiment import ErrorTable, ExperimentConfig, convergence_table, evolve_demo, run_sample
from .fem import Grid1D, assemble_mass, assemble_stiffness, l2_norm, solve_tridiagonal
from .grf import choose_padding, lift_to_coefficient, make_plan, padding_diagnostic, sample_pair
from .noise import NoiseSpec, generate_path
from .stepper import ModelSpec, evolve, init_state, step

__version__ = "0.1.0"

__all__ = [
    "CovarianceSpec",
    "ErrorTable",
    "ExperimentConfig",
    "Grid1D",
    "ModelSpec",
    "NoiseSpec",
    "assemble_mass",
    "assemble_stiffness",
    "choose_padding",
    "convergence_table",
    "eval_covariance",
    "evolve",
    "evolve_demo",
    "first_column",
    "generate_path",
    "init_state",
    "l2_norm",
    "lift_to_coefficient",
    "make_plan",
    "padding_diagnostic",
    "run_sample",
    "sample_pair",
    "solve_tridiagonal",
    "step",
]
