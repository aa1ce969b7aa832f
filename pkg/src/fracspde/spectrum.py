"""Fractional spectral transform, truncation and spectral diagnostics.

The operator acts on the Dirichlet eigenbasis through

    lambda_k = P(f(gamma_k)),   f(g) = g**(alpha/2) * (1 + g)**(gamma/2),
    P(f) = c_0 + c_1 f + ... + c_p f**p.

With ``q = p * (alpha + gamma) / n`` the transformed eigenvalues grow like
``k**q``; the diagnostics here compare against that rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn

from .domains import EigenSystem
from .errors import (
    InadmissibleParametersError,
    InsufficientModesError,
    ParameterDomainError,
)
from .mlf import eval_mlf

__all__ = [
    "FracParams",
    "SpectralTruncation",
    "WeylReport",
    "SummabilityReport",
    "transform_eigenvalue",
    "build_truncation",
    "weyl_constant",
    "weyl_diagnostic",
    "summability_check",
    "summability_tail_bound",
]

_LOG_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class FracParams:
    """Exponents of the fractional operator.

    Parameters
    ----------
    beta : float
        Caputo order in ``(0, 1)``; 1 is accepted as the classical limit.
    alpha, gamma : float
        Non-negative exponents of ``(-Delta)**(alpha/2) (I - Delta)**(gamma/2)``.
    poly_coeffs : tuple of float
        ``c_0 .. c_p`` with ``c_p > 0`` and every ``c_l >= 0``.
    """

    beta: float
    alpha: float = 2.0
    gamma: float = 0.0
    poly_coeffs: tuple = (0.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "poly_coeffs", tuple(float(c) for c in self.poly_coeffs))
        if not (0.0 < self.beta <= 1.0):
            raise ParameterDomainError(f"beta must lie in (0, 1], got {self.beta!r}")
        if not (self.alpha >= 0.0 and self.gamma >= 0.0):
            raise ParameterDomainError("alpha and gamma must be non-negative")
        c = self.poly_coeffs
        if len(c) < 2 or c[-1] <= 0.0 or any(ci < 0.0 for ci in c):
            raise ParameterDomainError("polynomial needs c_p > 0 and all c_l >= 0")
        if self.alpha + self.gamma <= 0.0:
            raise ParameterDomainError("alpha + gamma must be positive")

    @property
    def degree(self) -> int:
        return len(self.poly_coeffs) - 1

    @property
    def order(self) -> float:
        """``p * (alpha + gamma)``, the effective differential order."""
        return self.degree * (self.alpha + self.gamma)

    def growth_exponent(self, n: int) -> float:
        return self.order / n

    def admissible_solution(self, n: int) -> bool:
        return self.order > n

    def admissible_temporal(self, n: int) -> bool:
        return self.order > n / 2

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "poly_coeffs": list(self.poly_coeffs),
        }


def transform_eigenvalue(gamma_k, params: FracParams):
    """``P(f(gamma_k))`` for scalar or array ``gamma_k > 0``.

    Overflow is screened in log space first and raises
    :class:`ParameterDomainError`; ``f`` itself uses direct powers, so the
    identity transform returns ``gamma_k`` unchanged.
    """
    g = np.asarray(gamma_k, dtype=float)
    if np.any(~(g > 0)) or not np.all(np.isfinite(g)):
        raise ParameterDomainError("eigenvalues must be finite and positive")
    logf = 0.5 * params.alpha * np.log(g) + 0.5 * params.gamma * np.log1p(g)
    c = params.poly_coeffs
    if np.any(params.degree * logf > _LOG_MAX - math.log(sum(c))):
        raise ParameterDomainError("transformed eigenvalue overflows double precision")
    f = g ** (0.5 * params.alpha)
    if params.gamma:
        f = f * (1.0 + g) ** (0.5 * params.gamma)
    out = np.zeros_like(f)
    for cl in reversed(c):
        out = out * f + cl
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SpectralTruncation:
    """The ``K`` retained modes with transformed eigenvalues.

    ``mode_map[i]`` is the 1-based source mode of ``lambdas[i]``.  The sandwich
    ``L1 k**q <= lambda_k <= L2 k**q`` holds for ``k0 <= k <= K``.
    """

    system: EigenSystem
    params: FracParams
    lambdas: np.ndarray
    mode_map: np.ndarray
    L1: float
    L2: float
    k0: int
    exponent: float = field(default=0.0)

    @property
    def K(self) -> int:
        return int(self.lambdas.size)

    @property
    def gammas(self) -> np.ndarray:
        return self.system.gammas[self.mode_map - 1]

    @property
    def dim(self) -> int:
        return self.system.spec.dim


def _sandwich(lam, q):
    K = lam.size
    k = np.arange(1, K + 1, dtype=float)
    top = slice(K // 2, K)
    logL = float(np.mean(np.log(lam[top]) - q * np.log(k[top])))
    L = math.exp(logL)
    L1, L2 = 0.9 * L, 1.1 * L
    ratio = lam / k**q
    bad = np.nonzero((ratio < L1) | (ratio > L2))[0]
    k0 = int(bad[-1] + 2) if bad.size else 1
    return L1, L2, k0


def build_truncation(sys: EigenSystem, params: FracParams, K: int) -> SpectralTruncation:
    """Keep the ``K`` smallest transformed eigenvalues of ``sys``."""
    if int(K) != K or K < 1:
        raise ParameterDomainError("K must be a positive integer")
    K = int(K)
    if K > sys.K_raw:
        raise InsufficientModesError(f"K={K} exceeds the {sys.K_raw} available modes")
    lam_all = np.asarray(transform_eigenvalue(sys.gammas, params))
    order = np.argsort(lam_all, kind="stable")[:K]
    lam = lam_all[order]
    lam.setflags(write=False)
    mode_map = order + 1
    mode_map.setflags(write=False)
    q = params.growth_exponent(sys.spec.dim)
    L1, L2, k0 = _sandwich(lam, q)
    return SpectralTruncation(sys, params, lam, mode_map, L1, L2, k0, q)


def weyl_constant(n: int, volume: float) -> float:
    """Leading constant of ``gamma_k ~ C k**(2/n)`` for the Dirichlet Laplacian."""
    return 4.0 * math.pi * gamma_fn(1.0 + n / 2.0) ** (2.0 / n) / volume ** (2.0 / n)


@dataclass(frozen=True)
class WeylReport:
    k: np.ndarray
    ratios: np.ndarray
    limit: float
    exponent: float


def weyl_diagnostic(trunc: SpectralTruncation, min_modes: int = 100) -> WeylReport:
    """Ratios ``lambda_k / k**q`` and their theoretical limit.

    The limit composes the Laplacian constant through the leading term of
    the transform: ``c_p * C**(p (alpha + gamma) / 2)``.
    """
    if trunc.K < min_modes:
        raise InsufficientModesError(f"need at least {min_modes} modes, have {trunc.K}")
    spec = trunc.system.spec
    p = trunc.params
    k = np.arange(1, trunc.K + 1)
    ratios = trunc.lambdas / k.astype(float) ** trunc.exponent
    c = weyl_constant(spec.dim, spec.volume)
    limit = p.poly_coeffs[-1] * c ** (0.5 * p.order)
    return WeylReport(k, ratios, float(limit), trunc.exponent)


@dataclass(frozen=True)
class SummabilityReport:
    partial_sums: np.ndarray
    tail_bound: float
    converged: bool
    rtol: float


def _check_summable(trunc, t):
    n = trunc.dim
    if not trunc.params.admissible_solution(n):
        raise InadmissibleParametersError(
            f"p(alpha+gamma)={trunc.params.order} must exceed n={n}"
        )
    if not (t > 0 and np.isfinite(t)):
        raise ParameterDomainError("t must be positive")


def summability_tail_bound(trunc: SpectralTruncation, beta: float, t: float, K: int) -> float:
    """Upper bound on ``sum_{k>K} E_beta(-lambda_k t**beta)``.

    Each term is bounded by the rational envelope ``1/(1 + x/Gamma(1+beta))``.
    Retained modes between ``K`` and ``k0`` are summed directly, the rest
    through ``lambda_k >= L1 k**q`` and an integral comparison.
    """
    _check_summable(trunc, t)
    q = trunc.exponent
    gb = gamma_fn(1.0 + beta)
    tb = t**beta
    start = max(int(K), trunc.k0)
    head = 0.0
    if start > K:
        lam = trunc.lambdas[K:start]
        head = float(np.sum(1.0 / (1.0 + lam * tb / gb)))
    tail = gb / (trunc.L1 * tb) * start ** (1.0 - q) / (q - 1.0)
    return head + tail


def summability_check(
    trunc: SpectralTruncation, beta: float, t: float, rtol: float = 1e-4
) -> SummabilityReport:
    """Partial sums ``S_K = sum_{k<=K} E_beta(-lambda_k t**beta)`` with a tail bound.

    ``converged`` is set when the tail bound falls below ``rtol * S_K``.

    Raises
    ------
    InadmissibleParametersError
        If ``p (alpha + gamma) <= n``, where the series need not converge.
    """
    _check_summable(trunc, t)
    terms = eval_mlf(beta, trunc.lambdas * t**beta)
    sums = np.cumsum(terms)
    bound = summability_tail_bound(trunc, beta, t, trunc.K)
    return SummabilityReport(sums, bound, bool(bound < rtol * sums[-1]), rtol)
