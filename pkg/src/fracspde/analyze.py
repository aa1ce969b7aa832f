"""Scaling fits and regularity-bound checks on variograms and ensembles.

Bounds take the form ``value(lag) <= prefactor * lag**theta``.  Prefactors
are assembled from constants of the truncated system, which makes every
inequality provable for that system:

* temporal: each mode satisfies ``int (dE)^2 + int E^2 <= 2 int_0^h E`` and the
  rational envelope gives ``int_0^h E(lam w^b) dw <= G(1+b) h^(1-b) / ((1-b) lam)``;
* spatial: ``|phi_k(x) - phi_k(y)| <= C_k |x - y|`` with the mode Lipschitz
  constants ``C_k`` and the same time integral with ``h = t``;
* space-time: split ``c(t,x) - c(s,y)`` through ``c(s,x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn

from .domains import mode_holder_constant
from .errors import (
    FitWindowError,
    GridError,
    InadmissibleParametersError,
    InsufficientReplicatesError,
    KindMismatchError,
    ParameterDomainError,
)
from .kernels import VariogramCurve, sup_norm_squared
from .mlf import TimeGrid, caputo_l1, eval_mlf
from .spectrum import FracParams, SpectralTruncation

__all__ = [
    "SlopeFit",
    "BoundSpec",
    "BoundReport",
    "ModulusReport",
    "fit_loglog_slope",
    "calibrated_window",
    "bound_exponent",
    "empirical_prefactor",
    "verify_bound",
    "modulus_stat",
    "caputo_mode_residual",
    "residual_orders",
]


@dataclass(frozen=True)
class SlopeFit:
    window: tuple
    slope: float
    intercept: float
    stderr: float
    r2: float
    n: int


def fit_loglog_slope(curve: VariogramCurve, window) -> SlopeFit:
    """Least-squares slope of ``log(value)`` against ``log(lag)`` inside ``window``.

    Raises
    ------
    FitWindowError
        Fewer than 5 lags in the window, or a non-positive value in it.
    """
    lo, hi = map(float, window)
    if not (0 < lo < hi):
        raise FitWindowError(f"invalid window {window!r}")
    tol = 1e-12
    sel = (curve.lags >= lo * (1 - tol)) & (curve.lags <= hi * (1 + tol))
    n = int(sel.sum())
    if n < 5:
        raise FitWindowError(f"window {window!r} holds {n} lags, need at least 5")
    x, y = curve.lags[sel], curve.values[sel]
    if np.any(y <= 0):
        raise FitWindowError("non-positive variogram value inside the fit window")
    lx, ly = np.log(x), np.log(y)
    mx, my = lx.mean(), ly.mean()
    sxx = np.sum((lx - mx) ** 2)
    slope = float(np.sum((lx - mx) * (ly - my)) / sxx)
    intercept = float(my - slope * mx)
    resid = ly - (intercept + slope * lx)
    ssr = float(np.sum(resid**2))
    sst = float(np.sum((ly - my) ** 2))
    stderr = math.sqrt(ssr / (n - 2) / sxx) if n > 2 else 0.0
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    return SlopeFit((lo, hi), slope, intercept, stderr, r2, n)


def calibrated_window(trunc: SpectralTruncation, beta: float, t: float) -> tuple:
    """Lag window between truncation and saturation effects.

    Below the relaxation time ``lam_K**(-1/beta)`` of the fastest retained
    mode the truncated field is smooth; above that of the slowest mode every
    mode has relaxed.  The window is ``[10 tau_K, 0.1 min(tau_1, t)]``.
    """
    tau = trunc.lambdas ** (-1.0 / beta)
    lo = 10.0 * float(tau[-1])
    hi = 0.1 * min(float(tau[0]), float(t))
    if not lo < hi:
        raise FitWindowError("truncation too small for a scaling window")
    return lo, hi


# ---------------------------------------------------------------------------
# bounds

_CURVE_KIND = {"temporal": "temporal", "spatial": "spatial", "spacetime": "spatiotemporal"}


@dataclass(frozen=True)
class BoundSpec:
    kind: str
    theta: float
    prefactor: float
    notes: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in _CURVE_KIND:
            raise KindMismatchError(f"unknown bound kind {self.kind!r}")
        if not self.prefactor > 0:
            raise ParameterDomainError("prefactor must be positive")


def _temporal_theta(params, n):
    return min(1.0 - params.beta * n / params.order, 1.0 - params.beta)


def _inv_lambda_sum(trunc):
    return float(np.sum(1.0 / trunc.lambdas))


def _time_factor(beta):
    return gamma_fn(1.0 + beta) / (1.0 - beta)


def _temporal_prefactor(trunc, beta, theta, T):
    c2 = sup_norm_squared(trunc.system, trunc.K)
    return 2.0 * c2 * _time_factor(beta) * _inv_lambda_sum(trunc) * T ** (1.0 - beta - theta)


def _spatial_prefactor(trunc, beta, T):
    ck = max(
        mode_holder_constant(trunc.system, int(k)).lipschitz_constant for k in trunc.mode_map
    )
    g = T ** (1.0 - beta) * _time_factor(beta) * _inv_lambda_sum(trunc)
    return ck**2 * g


def bound_exponent(
    params: FracParams,
    n: int,
    kind: str,
    trunc: SpectralTruncation | None = None,
    T: float = 1.0,
) -> BoundSpec:
    """Exponent and truncated-constant prefactor for a regularity bound.

    Parameters
    ----------
    params : FracParams
    n : int
        Spatial dimension.
    kind : {"temporal", "spatial", "spacetime"}
    trunc : SpectralTruncation, optional
        Supplies ``C(D)``, the mode Lipschitz constants and ``sum 1/lambda_k``.
        Without it the prefactor is infinite and only ``theta`` is meaningful.
    T : float
        Time horizon; all lags are assumed to be at most ``T`` (temporal) or
        the space-time diameter (space-time).

    Raises
    ------
    InadmissibleParametersError
        Temporal needs ``beta < 1/2`` and ``p(alpha+gamma) > n/2``; spatial and
        space-time need ``p(alpha+gamma) > n``.
    """
    beta = params.beta
    notes = []
    if kind == "temporal":
        if not beta < 0.5:
            raise InadmissibleParametersError(
                f"temporal bound requires beta < 1/2, got beta={beta}"
            )
        if not params.admissible_temporal(n):
            raise InadmissibleParametersError(
                f"temporal bound requires p(alpha+gamma) > n/2, got {params.order} <= {n / 2}"
            )
        theta = _temporal_theta(params, n)
    elif kind in ("spatial", "spacetime"):
        if not params.admissible_solution(n):
            raise InadmissibleParametersError(
                f"{kind} bound requires p(alpha+gamma) > n, got {params.order} <= {n}"
            )
        if beta >= 1.0:
            raise InadmissibleParametersError(f"{kind} bound requires beta < 1")
        theta = 2.0 if kind == "spatial" else min(_temporal_theta(params, n), 2.0)
    else:
        raise KindMismatchError(f"unknown bound kind {kind!r}")
    if trunc is None:
        notes.append("no truncation supplied; prefactor left infinite")
        return BoundSpec(kind, theta, math.inf, tuple(notes))
    if trunc.dim != n:
        raise ParameterDomainError("dimension does not match the truncation")
    if kind == "temporal":
        pref = _temporal_prefactor(trunc, beta, theta, T)
        notes.append("2 C(D)^2 G(1+b)/(1-b) sum 1/lam_k T^(1-b-theta)")
    elif kind == "spatial":
        pref = _spatial_prefactor(trunc, beta, T)
        notes.append("max_k C_k^2 * T^(1-b) G(1+b)/(1-b) sum 1/lam_k")
    else:
        diam = math.hypot(T, trunc.system.spec.diameter)
        # theta <= 1 - beta, so the temporal constant applies to lags up to T
        pt = _temporal_prefactor(trunc, beta, theta, T)
        ps = _spatial_prefactor(trunc, beta, T) * diam ** (2.0 - theta)
        pref = 8.0 * 2.0 ** (-theta / 2.0) * max(pt, ps)
        notes.append("8 2^(-theta/2) max(temporal, spatial diam^(2-theta)); lag = |(t-s, x-y)|")
    return BoundSpec(kind, theta, float(pref), tuple(notes))


def empirical_prefactor(curve: VariogramCurve, theta: float, window, inflate: float = 2.0) -> float:
    """Geometric-mean constant ``value / lag**theta`` over ``window``, times ``inflate``."""
    lo, hi = window
    sel = (curve.lags >= lo) & (curve.lags <= hi) & (curve.lags > 0)
    if not np.any(sel) or np.any(curve.values[sel] <= 0):
        raise FitWindowError("window holds no positive values")
    logc = np.mean(np.log(curve.values[sel]) - theta * np.log(curve.lags[sel]))
    return float(inflate * math.exp(logc))


@dataclass(frozen=True)
class BoundReport:
    holds: bool
    max_ratio: float
    worst_lag: float
    ratios: np.ndarray


def verify_bound(curve: VariogramCurve, bound: BoundSpec, window=None) -> BoundReport:
    """Check ``value <= prefactor * lag**theta`` at every positive lag.

    ``window`` restricts the check to a lag range.
    """
    if _CURVE_KIND[bound.kind] != curve.kind:
        raise KindMismatchError(f"{bound.kind} bound cannot check a {curve.kind} curve")
    sel = curve.lags > 0
    if window is not None:
        sel &= (curve.lags >= window[0]) & (curve.lags <= window[1])
    if not np.any(sel):
        raise FitWindowError("no positive lags to check")
    lags, vals = curve.lags[sel], curve.values[sel]
    ratios = vals / (bound.prefactor * lags**bound.theta)
    i = int(np.argmax(ratios))
    mr = float(ratios[i])
    return BoundReport(bool(mr <= 1.0), mr, float(lags[i]), ratios)


# ---------------------------------------------------------------------------
# sample-path modulus


@dataclass(frozen=True)
class ModulusReport:
    kind: str
    theta: float
    deltas: np.ndarray
    sups: np.ndarray
    normalized: np.ndarray
    p95: np.ndarray
    consistent: bool

    @property
    def flag(self) -> str:
        return "consistent" if self.consistent else "inconsistent"


def _pairs_within(ens, kind, dmax):
    """Flat index pairs ``a < b`` at distance in ``(0, dmax]``, sorted by distance."""
    t = ens.times
    x = ens.points
    M, P = t.size, x.shape[0]
    dt = np.abs(t[:, None] - t[None, :])
    dx = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=-1)
    ia, ib, dd = [], [], []
    min_dist = np.inf
    for i in range(M):
        # rows of flat index i*P + p against all later flat indices
        if kind == "temporal":
            d = np.where(np.eye(P, dtype=bool)[:, None, :], dt[i][None, :, None], np.inf)
        elif kind == "spatial":
            d = np.full((P, M, P), np.inf)
            d[:, i, :] = dx
        else:
            d = np.hypot(dt[i][None, :, None], dx[:, None, :])
        d = d.reshape(P, M * P)
        rows = i * P + np.arange(P)
        later = np.arange(M * P)[None, :] > rows[:, None]
        d = np.where(later, d, np.inf)
        pos = d[d > 0]
        if pos.size:
            min_dist = min(min_dist, float(pos.min()))
        r, c = np.nonzero((d <= dmax) & (d > 0))
        ia.append(rows[r])
        ib.append(c)
        dd.append(d[r, c])
    ia, ib, dd = (np.concatenate(v) for v in (ia, ib, dd))
    order = np.argsort(dd, kind="stable")
    return ia[order], ib[order], dd[order], min_dist


_PAIR_CHUNK = 1 << 14


def modulus_stat(ens, deltas, kind: str = "spacetime", theta: float | None = None) -> ModulusReport:
    """Normalized sample-path modulus across replicates.

    For each replicate and ``delta`` the sup of ``(c(p) - c(q))**2`` over grid
    pairs with ``0 < dist(p, q) <= delta`` is divided by
    ``delta**theta * (1 + sqrt(log(1/delta)))`` (the log term is dropped for
    ``delta >= 1``).  The run is ``consistent`` when the 95th percentile does
    not increase as ``delta`` shrinks.  Temporal pairs share a site, spatial
    pairs share a time, space-time pairs use the Euclidean distance.

    Raises
    ------
    InsufficientReplicatesError
        Fewer than 100 replicates.
    GridError
        No grid pair is closer than the smallest ``delta``.
    """
    R = ens.values.shape[0]
    if R < 100:
        raise InsufficientReplicatesError(f"modulus statistic needs >= 100 replicates, got {R}")
    if kind not in ("temporal", "spatial", "spacetime"):
        raise KindMismatchError(f"unknown modulus kind {kind!r}")
    deltas = np.asarray(sorted(map(float, deltas), reverse=True))
    if deltas.size == 0 or np.any(deltas <= 0):
        raise ParameterDomainError("deltas must be positive")
    if theta is None:
        p = ens.plan.params
        theta = 2.0 if kind == "spatial" else _temporal_theta(p, ens.plan.trunc.dim)
    ia, ib, dd, min_dist = _pairs_within(ens, kind, deltas[0])
    if not np.isfinite(min_dist) or min_dist >= deltas[-1]:
        raise GridError("grid spacing is not finer than the smallest delta")
    flat = ens.values.reshape(R, -1)
    # running sup over pairs sorted by distance; read off at each delta
    cut = np.searchsorted(dd, deltas[::-1], side="right")
    sups_asc = np.zeros((R, deltas.size))
    run = np.zeros(R)
    start = 0
    for j, stop in enumerate(cut):
        for c0 in range(start, stop, _PAIR_CHUNK):
            c1 = min(stop, c0 + _PAIR_CHUNK)
            diff = flat[:, ia[c0:c1]] - flat[:, ib[c0:c1]]
            run = np.maximum(run, np.max(diff * diff, axis=1))
        sups_asc[:, j] = run
        start = max(start, stop)
    sups = sups_asc[:, ::-1]
    logterm = np.sqrt(np.maximum(np.log(1.0 / deltas), 0.0))
    norm = deltas**theta * (1.0 + logterm)
    normalized = sups / norm[None, :]
    p95 = np.percentile(normalized, 95, axis=0)
    consistent = bool(np.all(np.diff(p95) <= 1e-12 * np.max(np.abs(p95))))
    return ModulusReport(kind, float(theta), deltas, sups, normalized, p95, consistent)


# ---------------------------------------------------------------------------
# mode equation residual


def caputo_mode_residual(lam: float, beta: float, grid, t_min: float | None = None) -> float:
    """Max of ``|D^beta u + lam u|`` for ``u = E_beta(-lam t^beta)`` under the L1 scheme.

    The max runs over grid points ``t >= t_min`` (default: a quarter of the
    horizon).  Near ``t = 0`` the ``t**beta`` start makes the L1 error O(1)
    at every resolution, so only a fixed physical window shows convergence.
    ``beta == 1`` uses backward differences against ``exp(-lam t)``.
    """
    if not isinstance(grid, TimeGrid):
        grid = TimeGrid(np.asarray(grid, dtype=float))
    if len(grid) < 64:
        raise GridError("residual study needs at least 64 grid points")
    if lam < 0:
        raise ParameterDomainError("lambda must be non-negative")
    t = grid.points
    u = eval_mlf(beta, lam * t**beta)
    d = caputo_l1(u, grid, beta)
    res = np.abs(d + lam * u[1:])
    if t_min is None:
        t_min = 0.25 * t[-1]
    sel = t[1:] >= t_min
    return float(np.max(res[sel]))


def residual_orders(lam: float, beta: float, T: float = 1.0, sizes=(128, 256, 512, 1024)) -> np.ndarray:
    """Observed orders ``log2(r_m / r_2m)`` over dyadic grids of ``m + 1`` points."""
    r = [caputo_mode_residual(lam, beta, TimeGrid.uniform(T, m + 1)) for m in sizes]
    r = np.array(r)
    h = T / np.array(sizes, dtype=float)
    return np.log(r[:-1] / r[1:]) / np.log(h[:-1] / h[1:])
