"""Named configurations for the accuracy studies and the evolution demos.

``*_desk`` presets keep the asymptotic regime of the full-size runs but finish
in minutes; ``*_full`` presets use the fine reference meshes of the original
study (``dt = 1e-6``) and take hours.
"""

import math

from .covariance import CovarianceSpec
from .experiment import DemoConfig, DemoVariant, ExperimentConfig
from .noise import NoiseSpec
from .stepper import ModelSpec

G_KINDS = ("half_one_minus_sq", "half_linear")


def _model(g_kind, eps_a=1e-3, T=0.1):
    return ModelSpec(drift_kind="allen_cahn", g_kind=g_kind, eps_a=eps_a, T=T)


def time_desk(g_kind="half_one_minus_sq", samples=100, seed=20240101):
    return ExperimentConfig(
        kind="converge_time", samples=samples, master_seed=seed,
        model=_model(g_kind), cov=CovarianceSpec(2.0),
        noise=NoiseSpec(gamma=1.0, eps_q=0.1),
        n_ref=64, dt_ref=1e-5, dt_levels=(4e-3, 2e-3, 1e-3, 5e-4),
        u0_wavenumber=2)


def time_full(g_kind="half_one_minus_sq", samples=100, seed=20240101):
    return ExperimentConfig(
        kind="converge_time", samples=samples, master_seed=seed,
        model=_model(g_kind), cov=CovarianceSpec(2.0),
        noise=NoiseSpec(gamma=1.0, eps_q=0.1),
        n_ref=128, dt_ref=1e-6, dt_levels=(1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4),
        u0_wavenumber=2)


def space_desk(g_kind="half_one_minus_sq", samples=100, seed=20240101):
    n_ref = 256
    T = 0.1
    # one time step for all meshes, dt ~ h_ref^2
    dt = T / math.ceil(T * n_ref ** 2)
    return ExperimentConfig(
        kind="converge_space", samples=samples, master_seed=seed,
        model=_model(g_kind, T=T), cov=CovarianceSpec(2.0),
        noise=NoiseSpec(gamma=1.0, eps_q=0.1),
        n_ref=n_ref, n_levels=(16, 32, 64, 128), dt_ref=dt,
        u0_wavenumber=2)


def space_full(g_kind="half_one_minus_sq", samples=100, seed=20240101):
    return ExperimentConfig(
        kind="converge_space", samples=samples, master_seed=seed,
        model=_model(g_kind), cov=CovarianceSpec(2.0),
        noise=NoiseSpec(gamma=1.0, eps_q=0.1),
        n_ref=512, n_levels=(16, 32, 64, 128, 256), dt_ref=1e-6,
        u0_wavenumber=2)


def random_diffusion_demo(seed=20240101):
    """Deterministic coefficient versus random fields with q = 0.1 and q = 2, no noise."""
    return DemoConfig(
        model=ModelSpec("allen_cahn", "zero", eps_a=1e-2, T=0.1),
        n=128, dt=1e-5, u0_wavenumber=4, master_seed=seed,
        variants=(DemoVariant("deterministic", random_field=False, noisy=False),
                  DemoVariant("q0.1", q=0.1, noisy=False),
                  DemoVariant("q2", q=2.0, noisy=False)))


def noise_demo(seed=20240101, T=4.0):
    """Deterministic model versus random field plus noise with gamma = 0.5 and gamma = 1."""
    return DemoConfig(
        model=ModelSpec("allen_cahn", "half_one_minus_sq", eps_a=1e-5, T=T),
        n=128, dt=1e-4, q=2.0, u0_wavenumber=4, master_seed=seed,
        variants=(DemoVariant("deterministic", random_field=False, noisy=False),
                  DemoVariant("gamma0.5", gamma=0.5),
                  DemoVariant("gamma1", gamma=1.0)))


STUDIES = {
    "time_desk": time_desk,
    "time_full": time_full,
    "space_desk": space_desk,
    "space_full": space_full,
}

DEMOS = {
    "random_diffusion": random_diffusion_demo,
    "noise": noise_demo,
}
