"""Approximate circulant embedding with padding for the log-coefficient field.

The Toeplitz covariance of ``z`` on ``P`` uniform points is padded to length
``P + M``, embedded in its minimal circulant extension of size
``2 (P + M - 1)`` and diagonalised with the FFT.  Negative eigenvalues are
dropped; their size is reported as ``rho_minus``.  Each draw of complex white
noise gives two independent samples (real and imaginary parts).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import CovarianceSpec, ToeplitzColumn, first_column, lagged_values

__all__ = [
    "EmbeddingError",
    "EmbeddingPlan",
    "FieldSample",
    "build_plan",
    "choose_padding",
    "lift_to_coefficient",
    "make_plan",
    "padding_diagnostic",
    "sample_pair",
]

DEFAULT_RHO_LIMIT = 1e-6


class EmbeddingError(RuntimeError):
    """The padded circulant is too far from non-negative definite."""


@dataclass(frozen=True)
class EmbeddingPlan:
    P: int
    M: int
    circ_first_col: np.ndarray
    d: np.ndarray
    lambda_plus: np.ndarray
    rho_minus: float

    @property
    def ext_len(self):
        return len(self.circ_first_col)


@dataclass(frozen=True)
class FieldSample:
    z: np.ndarray
    a: np.ndarray
    eps_a: float
    a_min_observed: float
    a_max_observed: float


def build_plan(col: ToeplitzColumn, M: int, padding_values=None) -> EmbeddingPlan:
    """Embed the padded Toeplitz matrix into its minimal circulant extension.

    ``padding_values`` (length ``M``) fills the padded part of the first
    column; the default is zeros.  Passing the covariance at lags
    ``P dx, ..., (P + M - 1) dx`` gives the classical padding that drives
    ``rho_minus`` to zero as ``M`` grows.
    """
    values = np.asarray(col.values, dtype=float)
    P = len(values)
    if P < 2:
        raise ValueError("need at least two grid points")
    if M < 0:
        raise ValueError("padding length must be non-negative")
    if padding_values is None:
        pad = np.zeros(M)
    else:
        pad = np.asarray(padding_values, dtype=float)
        if pad.shape != (M,):
            raise ValueError(f"padding_values must have length M={M}")
    padded = np.concatenate([values, pad])
    circ = np.concatenate([padded, padded[-2:0:-1]])
    # even real sequence, so the unnormalised DFT is real
    d = np.fft.fft(circ).real
    lambda_plus = np.maximum(d, 0.0)
    rho_minus = float(max(0.0, -d.min()))
    return EmbeddingPlan(P=P, M=M, circ_first_col=circ, d=d,
                         lambda_plus=lambda_plus, rho_minus=rho_minus)


def make_plan(spec: CovarianceSpec, P: int, M: int, padding="covariance",
              rho_limit=DEFAULT_RHO_LIMIT) -> EmbeddingPlan:
    """Build an embedding plan straight from a covariance spec.

    Raises :class:`EmbeddingError` when ``rho_minus`` exceeds ``rho_limit``.
    """
    col, pad = _column_and_padding(spec, P, M, padding)
    plan = build_plan(col, M, pad)
    if rho_limit is not None and plan.rho_minus > rho_limit:
        raise EmbeddingError(
            f"rho_minus={plan.rho_minus:.3e} exceeds limit {rho_limit:.1e} "
            f"(P={P}, M={M}); increase the padding")
    return plan


def _column_and_padding(spec, P, M, padding):
    if padding == "covariance":
        dx = 1.0 / (P - 1)
        values = lagged_values(spec, P + M, dx)
        return ToeplitzColumn(values[:P], dx), values[P:]
    if padding == "zero":
        return first_column(spec, P), None
    raise ValueError(f"unknown padding mode {padding!r}")


def sample_pair(plan: EmbeddingPlan, rng, xi=None):
    """Draw two independent field samples of length ``P``.

    ``xi`` overrides the complex white noise (used by tests); it must have
    independent standard normal real and imaginary parts.
    """
    n = plan.ext_len
    if xi is None:
        xi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    # inverse unnormalised DFT, scaled by 1/sqrt(n)
    Z = np.fft.ifft(np.sqrt(plan.lambda_plus) * xi) * np.sqrt(n)
    return Z.real[:plan.P].copy(), Z.imag[:plan.P].copy()


def lift_to_coefficient(z, eps_a: float) -> FieldSample:
    if not eps_a > 0:
        raise ValueError("eps_a must be positive")
    z = np.asarray(z, dtype=float)
    a = eps_a * np.exp(z)
    return FieldSample(z=z, a=a, eps_a=float(eps_a),
                       a_min_observed=float(a.min()), a_max_observed=float(a.max()))


def padding_diagnostic(col: ToeplitzColumn, M_list, spec: CovarianceSpec | None = None):
    """``(M, rho_minus)`` for each padding length.

    With ``spec`` the padded entries are covariance values at the extended
    lags; without it they are zeros.
    """
    M_list = list(M_list)
    if not M_list:
        raise ValueError("M_list must not be empty")
    P = len(col.values)
    tail = None
    if spec is not None:
        tail = lagged_values(spec, P + max(M_list), col.dx)[P:]
    rows = []
    for M in M_list:
        pad = None if tail is None else tail[:M]
        rows.append((M, build_plan(col, M, pad).rho_minus))
    return rows


def choose_padding(spec: CovarianceSpec, P: int, tol=1e-10, max_factor=64):
    """Smallest ``M = m (P - 1)`` on a doubling-ish ladder with ``rho_minus <= tol``.

    Returns ``(M, rho_minus)``; raises :class:`EmbeddingError` if no rung
    up to ``max_factor`` qualifies.
    """
    dx = 1.0 / (P - 1)
    ladder = [0, 1, 2, 4, 8, 12, 16, 20, 24, 32, 48, 64, 96, 128]
    ladder = [m for m in ladder if m <= max_factor]
    values = lagged_values(spec, P + ladder[-1] * (P - 1), dx)
    col = ToeplitzColumn(values[:P], dx)
    best = None
    for m in ladder:
        M = m * (P - 1)
        rho = build_plan(col, M, values[P:P + M]).rho_minus
        best = (M, rho)
        if rho <= tol:
            return best
    raise EmbeddingError(
        f"no padding up to M={best[0]} reaches rho_minus <= {tol:g} "
        f"(last rho_minus={best[1]:.3e})")
