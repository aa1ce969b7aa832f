"""Green kernel, covariance kernel and exact mean-square increments.

Every quantity reduces to per-mode integrals in the lag variable
``w = (t ^ s) - u``:

    I_k(m, d) = int_0^m E(lam_k (w + d)**beta) E(lam_k w**beta) dw,

where ``E(z) = E_beta(-z)``.  Integrands are singular like ``w**beta`` at
``w = 0`` and vary on the scales ``lam_k**(-1/beta)`` and ``d``, so one
geometric mesh from ``1e-12 * min(scales)`` up to ``m`` resolves all modes
at once.  Gauss-Legendre panels are refined until two successive levels
agree to ``1e-8`` relative.

Increment moments are integrated as squares of differences rather than as
combinations of covariances, so they stay accurate when the lag is small.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gamma as gamma_fn

from .domains import DomainSpec, EigenSystem, eigenfunction_matrix
from .errors import (
    InadmissibleParametersError,
    KindMismatchError,
    ParameterDomainError,
    QuadratureError,
)
from .mlf import eval_mlf
from .spectrum import FracParams, SpectralTruncation

__all__ = [
    "ModeTimeIntegral",
    "KernelValue",
    "VariogramCurve",
    "mode_time_integral",
    "mode_time_integrals",
    "mode_covariance_matrices",
    "covariance",
    "green_kernel",
    "temporal_variogram",
    "spatial_variogram",
    "spatiotemporal_variogram",
    "sup_norm_squared",
    "curve_to_csv",
    "curve_from_csv",
]

RTOL = 1e-8
_LEVELS = ((2.0, 8), (2.0, 12), (math.sqrt(2.0), 16), (2.0 ** 0.25, 20))
_EPS_FACTOR = 1e-12


@dataclass(frozen=True)
class ModeTimeIntegral:
    lam: float
    beta: float
    t: float
    s: float
    value: float
    error: float


@dataclass(frozen=True)
class KernelValue:
    """A truncated kernel value with its error budget."""

    value: float
    trunc_error: float
    quad_error: float


# ---------------------------------------------------------------------------
# quadrature engine


@lru_cache(maxsize=None)
def _gl(n):
    return leggauss(n)


def _mesh(m, eps, ratio, n):
    """Nodes and weights on ``[0, m]`` with panels ``[eps r^j, eps r^(j+1)]``."""
    if eps >= m:
        edges = np.array([0.0, m])
    else:
        j = int(math.ceil(math.log(m / eps) / math.log(ratio)))
        edges = np.concatenate([[0.0], m * ratio ** -np.arange(j, -1, -1.0)])
    x, w = _gl(n)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    nodes = (half[:, None] * (x + 1.0) + a[:, None]).ravel()
    weights = (half[:, None] * w).ravel()
    return nodes, weights


def _inner_scale(lams, beta, m, *lags):
    scales = [m, float(np.max(lams)) ** (-1.0 / beta)]
    scales += [h for h in lags if h > 0]
    return _EPS_FACTOR * min(scales)


def _adaptive(fn, m, eps, what, floor=0.0):
    """Run ``fn(nodes, weights)`` on refining meshes until it settles.

    ``floor`` is an absolute tolerance per entry, used when the integral is a
    minor part of a larger sum.
    """
    prev = None
    for ratio, n in _LEVELS:
        nodes, weights = _mesh(m, eps, ratio, n)
        val = fn(nodes, weights)
        if prev is not None:
            diff = np.abs(val - prev)
            scale = np.max(np.abs(val)) if np.size(val) else 0.0
            if np.all(diff <= RTOL * np.abs(val) + 1e-15 * scale + floor):
                return val, diff
        prev = val
    raise QuadratureError(
        f"{what}: quadrature did not reach relative tolerance {RTOL}",
        estimate=val,
        error=float(np.max(diff)),
    )


def _E(lams, beta, w):
    return eval_mlf(beta, np.multiply.outer(lams, w**beta))


def mode_time_integrals(lams, beta, t, s):
    """Vector of ``int_0^{t^s} E(lam (t-u)^beta) E(lam (s-u)^beta) du`` per mode.

    Returns ``(values, errors)``.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    m, d = min(t, s), abs(t - s)
    if m <= 0.0:
        z = np.zeros_like(lams)
        return z, z.copy()
    eps = _inner_scale(lams, beta, m, d)

    def fn(w, wt):
        e0 = _E(lams, beta, w)
        eh = e0 if d == 0.0 else _E(lams, beta, w + d)
        return (e0 * eh) @ wt

    return _adaptive(fn, m, eps, "mode time integral")


def _square_integrals(lams, beta, m):
    """``int_0^m E(lam w^beta)^2 dw`` per mode."""
    return mode_time_integrals(lams, beta, m, m)


def _diff_square_integrals(lams, beta, m, h, a, b, floor=0.0):
    """``int_0^m (a_k E(lam (w+h)^beta) - b_k E(lam w^beta))^2 dw`` per mode.

    For lags far below a mode's time scale the difference is pure rounding
    noise; ``floor`` lets the caller bound it against the companion term.
    """
    lams = np.asarray(lams, dtype=float)
    if m <= 0.0:
        z = np.zeros_like(lams)
        return z, z.copy()
    eps = _inner_scale(lams, beta, m, h)

    def fn(w, wt):
        e0 = _E(lams, beta, w)
        eh = _E(lams, beta, w + h) if h > 0 else e0
        diff = a[:, None] * eh - b[:, None] * e0
        return (diff * diff) @ wt

    return _adaptive(fn, m, eps, "increment integral", floor)


def mode_time_integral(lam: float, beta: float, t: float, s: float) -> ModeTimeIntegral:
    """Single-mode covariance integral.

    Parameters
    ----------
    lam : float
        Transformed eigenvalue, positive.
    beta : float
        Order in ``(0, 1]``.
    t, s : float
        Non-negative times.  The value is symmetric in ``(t, s)`` and zero
        when ``min(t, s) == 0``.

    Raises
    ------
    QuadratureError
        If the refinement sequence does not settle to ``1e-8`` relative.
    """
    if not (lam > 0 and np.isfinite(lam)):
        raise ParameterDomainError("lambda must be positive")
    if not (t >= 0 and s >= 0):
        raise ParameterDomainError("times must be non-negative")
    _check_beta(beta)
    val, err = mode_time_integrals([lam], beta, t, s)
    return ModeTimeIntegral(float(lam), float(beta), float(t), float(s), float(val[0]), float(err[0]))


def _interval_nodes(a, b, eps, ratio, n):
    """Nodes on ``[a, b]`` graded geometrically toward ``b``."""
    w, wt = _mesh(b - a, eps, ratio, n)
    return b - w, wt


def _interp_matrix(src, dst):
    """Barycentric Lagrange matrix mapping values at ``src`` to ``dst``."""
    diff = src[:, None] - src[None, :]
    np.fill_diagonal(diff, 1.0)
    bw = 1.0 / np.prod(diff, axis=1)
    d = dst[:, None] - src[None, :]
    hit = d == 0.0
    d[hit] = 1.0
    P = bw[None, :] / d
    P /= P.sum(axis=1, keepdims=True)
    rows = np.nonzero(hit.any(axis=1))[0]
    P[rows] = hit[rows].astype(float)
    return P


def _far_panels(h, d, xg, wg):
    """Composite Gauss-Legendre nodes in ``w = b - u`` on ``[0, h]``.

    The nearest later time sits at ``w = -d``; panel widths double away from
    ``w = 0`` starting at ``d`` so each panel is at least its own width from
    that singularity.
    """
    cuts = [0.0]
    while cuts[-1] < h:
        cuts.append(min(h, max(d, 2.0 * cuts[-1])))
    lo, hi = np.array(cuts[:-1]), np.array(cuts[1:])
    half = 0.5 * (hi - lo)
    w = ((lo + half)[:, None] + half[:, None] * xg[None, :])
    wt = half[:, None] * wg[None, :]
    return w, wt, np.array(cuts)


def _panel_interp(w_far, cuts, w_dst):
    """Piecewise barycentric map from panel nodes ``w_far`` to ``w_dst``."""
    npan, n = w_far.shape
    P = np.zeros((w_dst.size, npan * n))
    which = np.clip(np.searchsorted(cuts, w_dst, side="right") - 1, 0, npan - 1)
    for j in range(npan):
        sel = which == j
        if np.any(sel):
            P[np.ix_(sel, np.arange(j * n, (j + 1) * n))] = _interp_matrix(w_far[j], w_dst[sel])
    return P


def mode_covariance_matrices(lams, beta, times) -> np.ndarray:
    """Per-mode covariance of the time coefficients on ``times``.

    The integral over ``[0, t_i ^ t_j]`` is split at the grid times.  On an
    interval ``[t_l, t_(l+1)]`` only the kernel row of ``t_(l+1)`` is singular;
    it is integrated on nodes graded toward the right end.  Later rows are
    analytic there, so Gauss-Legendre panels handle their products and a
    piecewise barycentric interpolant carries them onto the graded nodes for
    the mixed terms.  Returns an array of shape ``(K, M, M)``.
    """
    lams = np.asarray(lams, dtype=float)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) <= 0) or np.any(times < 0):
        raise ParameterDomainError("times must be non-negative and strictly increasing")
    edges = np.concatenate([[0.0], times]) if times[0] > 0 else times
    offset = edges.size - times.size
    steps = np.diff(edges)
    eps = _EPS_FACTOR * min(float(steps.min()), float(np.max(lams)) ** (-1.0 / beta))
    K, M = lams.size, times.size

    def E(lag):
        return eval_mlf(beta, lams[:, None, None] * lag[None, :, :] ** beta)

    def build(ratio, n, n_smooth):
        out = np.zeros((K, M, M))
        xg, wg = _gl(n_smooth)
        near_cache, far_cache = {}, {}
        for l in range(edges.size - 1):
            a, b = edges[l], edges[l + 1]
            h = b - a
            i0 = l + 1 - offset  # row of t_(l+1)
            hk = round(h, 13)
            if hk not in near_cache:
                # local coordinate w = b - u; the graded part depends only on h
                w, wt = _mesh(h, eps, ratio, n)
                near = E(w[None, :])[:, 0, :]
                near_cache[hk] = (w, near * wt, (near * near) @ wt)
            w, nearw, diag = near_cache[hk]
            out[:, i0, i0] += diag
            if i0 + 1 >= M:
                continue
            d = times[i0 + 1] - b
            fk = (hk, round(d, 13))
            if fk not in far_cache:
                wf, wtf, cuts = _far_panels(h, d, xg, wg)
                proj = nearw @ _panel_interp(wf, cuts, w)
                far_cache[fk] = (wf.ravel(), wtf.ravel(), proj)
            wf, wtf, proj = far_cache[fk]
            far = E(times[i0 + 1:, None] - (b - wf)[None, :])
            out[:, i0 + 1:, i0 + 1:] += np.matmul(far * wtf, np.swapaxes(far, 1, 2))
            mixed = np.einsum("km,kjm->kj", proj, far)
            out[:, i0, i0 + 1:] += mixed
            out[:, i0 + 1:, i0] += mixed
        return out

    levels = [(r, n, ns) for (r, n), ns in zip(_LEVELS, (20, 24, 28, 32))]
    prev = build(*levels[0])
    for lev in levels[1:]:
        cur = build(*lev)
        scale = np.max(np.abs(cur), axis=(1, 2), keepdims=True)
        if np.all(np.abs(cur - prev) <= RTOL * scale):
            return 0.5 * (cur + np.swapaxes(cur, 1, 2))
        prev = cur
    raise QuadratureError("mode covariance matrices did not settle", estimate=cur)


# ---------------------------------------------------------------------------
# truncation budget


def _check_beta(beta):
    if not (0.0 < beta <= 1.0):
        raise ParameterDomainError(f"beta must lie in (0, 1], got {beta!r}")


def _resolve(trunc: SpectralTruncation, params: FracParams | None):
    p = trunc.params if params is None else params
    tp = trunc.params
    if (p.alpha, p.gamma, p.poly_coeffs) != (tp.alpha, tp.gamma, tp.poly_coeffs):
        raise ParameterDomainError("params differ from those used to build the truncation")
    n = trunc.dim
    if not p.admissible_solution(n):
        raise InadmissibleParametersError(
            f"p(alpha+gamma)={p.order} must exceed n={n} for the solution to exist"
        )
    return p.beta


def sup_norm_squared(sys: EigenSystem, K: int) -> float:
    """Bound on ``max_k sup |phi_k|^2`` over the first ``K`` modes.

    Exact for boxes.  For round domains the sup is taken on a dense radial
    grid over the retained modes only.
    """
    spec = sys.spec
    if spec.kind in ("interval", "rectangle"):
        return float(np.prod([2.0 / L for L in spec.lengths]))
    from .domains import _radial

    R = spec.outer_radius
    r0 = spec.lengths[0] if spec.kind == "annulus" else 0.0
    best = 0.0
    for mode in sys.modes[:K]:
        nu = mode.index[0]
        npts = int(32 * (mode.root * (R - r0) / math.pi + nu + 1)) + 1
        r = np.linspace(r0, R, npts)
        best = max(best, mode.norm * float(np.max(np.abs(_radial(mode, nu, mode.root * r)))))
    return best * best


def _tail_sum_inv(trunc):
    """Bound on ``sum_{k>K} 1/lambda_k`` from the eigenvalue sandwich."""
    q = trunc.exponent
    start = max(trunc.K, trunc.k0)
    return start ** (1.0 - q) / (trunc.L1 * (q - 1.0))


def _tail_integral(trunc, beta, m):
    """Bound on ``sum_{k>K} int_0^m E(lam_k w^beta) dw``."""
    if m <= 0:
        return 0.0
    if beta == 1.0:
        c = 1.0
    else:
        c = gamma_fn(1.0 + beta) * m ** (1.0 - beta) / (1.0 - beta)
    return c * _tail_sum_inv(trunc)


# ---------------------------------------------------------------------------
# kernels


def _phi(trunc, pts):
    """Eigenfunction values at ``pts`` for the retained modes, shape ``(P, K)``."""
    sys = trunc.system
    allphi = eigenfunction_matrix(sys, pts, int(np.max(trunc.mode_map)))
    return allphi[:, trunc.mode_map - 1]


def _point(spec: DomainSpec, x):
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.shape != (spec.dim,):
        raise ParameterDomainError(f"a point in {spec.dim} dimensions is required")
    return p


def covariance(trunc, params, t, s, x, y, full: bool = False):
    """Truncated covariance ``E[c(t, x) c(s, y)]``.

    ``sum_k phi_k(x) phi_k(y) I_k(t, s)``.  With ``full=True`` a
    :class:`KernelValue` carrying the truncation and quadrature errors is
    returned instead of a float.
    """
    beta = _resolve(trunc, params)
    if not (t >= 0 and s >= 0):
        raise ParameterDomainError("times must be non-negative")
    spec = trunc.system.spec
    px, py = _point(spec, x), _point(spec, y)
    phi = _phi(trunc, np.stack([px, py]))
    w = phi[0] * phi[1]
    m = min(t, s)
    if m == 0.0:
        val, qerr = 0.0, 0.0
    else:
        I, err = mode_time_integrals(trunc.lambdas, beta, t, s)
        val = float(np.sum(w * I))
        qerr = float(np.sum(np.abs(w) * err))
    if not full:
        return val
    terr = sup_norm_squared(trunc.system, trunc.K) * _tail_integral(trunc, beta, m)
    return KernelValue(val, terr, qerr)


def green_kernel(trunc, params, t, s, x, y, full: bool = False):
    """Truncated Green kernel ``sum_k E(lam_k (t-s)^beta) phi_k(x) phi_k(y)``.

    Exactly zero when ``s > t``.
    """
    beta = _resolve(trunc, params)
    spec = trunc.system.spec
    px, py = _point(spec, x), _point(spec, y)
    if s > t:
        return KernelValue(0.0, 0.0, 0.0) if full else 0.0
    phi = _phi(trunc, np.stack([px, py]))
    tau = t - s
    e = eval_mlf(beta, trunc.lambdas * tau**beta)
    val = float(np.sum(phi[0] * phi[1] * e))
    if not full:
        return val
    if tau == 0.0:
        terr = math.inf
    else:
        terr = (
            sup_norm_squared(trunc.system, trunc.K)
            * gamma_fn(1.0 + beta) / tau**beta * _tail_sum_inv(trunc)
        )
    return KernelValue(val, terr, 0.0)


# ---------------------------------------------------------------------------
# variograms

_KINDS = ("temporal", "spatial", "spatiotemporal")


@dataclass(frozen=True)
class VariogramCurve:
    """Mean-square increments against lag.

    ``anchor_t``/``anchor_x`` fix one end of every increment; ``other_t`` and
    ``other_x`` hold the moving end.  Entries are sorted by lag.
    """

    kind: str
    anchor_t: float
    anchor_x: tuple
    lags: np.ndarray
    values: np.ndarray
    K: int
    trunc_error: np.ndarray
    other_t: np.ndarray | None = None
    other_x: np.ndarray | None = None
    quad_error: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise KindMismatchError(f"unknown variogram kind {self.kind!r}")
        lags = np.asarray(self.lags, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if lags.shape != vals.shape or lags.ndim != 1:
            raise ParameterDomainError("lags and values must be 1-D of equal length")
        if np.any(lags < 0) or np.any(np.diff(lags) < 0):
            raise ParameterDomainError("lags must be non-negative and ascending")
        if np.any(vals < 0):
            raise ParameterDomainError("variogram values must be non-negative")
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "trunc_error", np.broadcast_to(
            np.asarray(self.trunc_error, dtype=float), lags.shape).copy())
        object.__setattr__(self, "anchor_x", tuple(float(v) for v in self.anchor_x))

    def __len__(self):
        return self.lags.size


def _sorted_curve(kind, t, x, lags, vals, K, terr, other_t, other_x, qerr):
    order = np.argsort(lags, kind="stable")
    return VariogramCurve(
        kind, float(t), tuple(np.atleast_1d(x)), np.asarray(lags)[order],
        np.asarray(vals)[order], K, np.asarray(terr)[order],
        None if other_t is None else np.asarray(other_t, dtype=float)[order],
        None if other_x is None else np.asarray(other_x, dtype=float)[order],
        np.asarray(qerr)[order],
    )


def temporal_variogram(trunc, params, x, t, s_list=None, *, lags=None) -> VariogramCurve:
    """``E[c(t, x) - c(s, x)]^2`` for each ``s`` in ``s_list`` (``0 <= s <= t``).

    Per mode: ``int_0^s (E(lam (w+h)^beta) - E(lam w^beta))^2 dw +
    int_0^h E(lam w^beta)^2 dw`` with ``h = t - s``, weighted by ``phi_k(x)^2``.
    Passing ``lags`` instead of ``s_list`` keeps lags far below ``t * 1e-16``
    exact.
    """
    beta = _resolve(trunc, params)
    spec = trunc.system.spec
    px = _point(spec, x)
    phi2 = _phi(trunc, px[None, :])[0] ** 2
    if (s_list is None) == (lags is None):
        raise ParameterDomainError("give exactly one of s_list and lags")
    if lags is None:
        s_arr = np.atleast_1d(np.asarray(s_list, dtype=float))
        if np.any(s_arr < 0) or np.any(s_arr > t):
            raise ParameterDomainError("every s must satisfy 0 <= s <= t")
        h_arr = t - s_arr
    else:
        h_arr = np.atleast_1d(np.asarray(lags, dtype=float))
        if np.any(h_arr < 0) or np.any(h_arr > t):
            raise ParameterDomainError("every lag must lie in [0, t]")
        s_arr = t - h_arr
    ones = np.ones(trunc.K)
    csq = sup_norm_squared(trunc.system, trunc.K)
    vals, terr, qerr = [], [], []
    for s, h in zip(s_arr, h_arr):
        if h == 0.0:
            vals.append(0.0), terr.append(0.0), qerr.append(0.0)
            continue
        q, qe = _square_integrals(trunc.lambdas, beta, h)
        d, de = _diff_square_integrals(trunc.lambdas, beta, s, h, ones, ones, RTOL * q)
        vals.append(float(np.sum(phi2 * (d + q))))
        qerr.append(float(np.sum(phi2 * (de + qe))))
        terr.append(csq * (_tail_integral(trunc, beta, s) + _tail_integral(trunc, beta, h)))
    return _sorted_curve("temporal", t, px, h_arr, vals, trunc.K, terr, s_arr, None, qerr)


def spatial_variogram(trunc, params, t, x, y_list) -> VariogramCurve:
    """``E[c(t, x) - c(t, y)]^2`` for each ``y``; lag is ``|x - y|``."""
    beta = _resolve(trunc, params)
    spec = trunc.system.spec
    px = _point(spec, x)
    ys = np.asarray(y_list, dtype=float).reshape(-1, spec.dim)
    if not t > 0:
        raise ParameterDomainError("t must be positive")
    phi = _phi(trunc, np.concatenate([px[None, :], ys]))
    v, ve = _square_integrals(trunc.lambdas, beta, t)
    dphi2 = (phi[1:] - phi[0]) ** 2
    vals = dphi2 @ v
    qerr = dphi2 @ ve
    same = np.all(ys == px, axis=1)
    vals[same] = 0.0
    lags = np.linalg.norm(ys - px, axis=1)
    terr = np.where(same, 0.0, 4.0 * sup_norm_squared(trunc.system, trunc.K)
                    * _tail_integral(trunc, beta, t))
    return _sorted_curve("spatial", t, px, lags, vals, trunc.K, terr, np.full(len(ys), t), ys, qerr)


def spatiotemporal_variogram(trunc, params, anchor, others) -> VariogramCurve:
    """``E[c(t, x) - c(s, y)]^2`` for ``anchor=(t, x)`` and each ``(s, y)``.

    The lag is the Euclidean norm of ``(t - s, x - y)``.  With ``y == x`` the
    computation path coincides with :func:`temporal_variogram`.
    """
    beta = _resolve(trunc, params)
    spec = trunc.system.spec
    t, x = anchor
    px = _point(spec, x)
    ss = np.array([float(o[0]) for o in others])
    ys = np.array([_point(spec, o[1]) for o in others]).reshape(-1, spec.dim)
    if np.any(ss < 0) or t < 0:
        raise ParameterDomainError("times must be non-negative")
    phi = _phi(trunc, np.concatenate([px[None, :], ys]))
    csq = sup_norm_squared(trunc.system, trunc.K)
    vals, terr, qerr = [], [], []
    for i, s in enumerate(ss):
        a, b = phi[0], phi[i + 1]
        late, early = t, s
        if s > t:
            a, b, late, early = b, a, s, t
        h = late - early
        if h == 0.0 and np.array_equal(px, ys[i]):
            vals.append(0.0), terr.append(0.0), qerr.append(0.0)
            continue
        if h > 0:
            q, qe = _square_integrals(trunc.lambdas, beta, h)
        else:
            q, qe = np.zeros_like(a), np.zeros_like(a)
        d, de = _diff_square_integrals(trunc.lambdas, beta, early, h, a, b, RTOL * a * a * q)
        v = float(np.sum(d)) + float(np.sum(a * a * q))
        ve = float(np.sum(de)) + float(np.sum(a * a * qe))
        vals.append(v)
        qerr.append(ve)
        terr.append(csq * (4.0 * _tail_integral(trunc, beta, early) + _tail_integral(trunc, beta, h)))
    lags = np.hypot(t - ss, np.linalg.norm(ys - px, axis=1))
    return _sorted_curve("spatiotemporal", t, px, lags, vals, trunc.K, terr, ss, ys, qerr)


# ---------------------------------------------------------------------------
# CSV


def curve_to_csv(curve: VariogramCurve) -> str:
    """CSV text with columns kind, anchor_t, anchor_x0.., lag, value, K, trunc_error."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    nx = len(curve.anchor_x)
    w.writerow(["kind", "anchor_t", *[f"anchor_x{i}" for i in range(nx)],
                "lag", "value", "K", "trunc_error"])
    for lag, val, te in zip(curve.lags, curve.values, curve.trunc_error):
        w.writerow([curve.kind, repr(curve.anchor_t), *map(repr, curve.anchor_x),
                    repr(float(lag)), repr(float(val)), curve.K, repr(float(te))])
    return buf.getvalue()


def curve_from_csv(text: str) -> VariogramCurve:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    nx = sum(1 for h in header if h.startswith("anchor_x"))
    if not body:
        raise ParameterDomainError("empty variogram CSV")
    kinds = {r[0] for r in body}
    if len(kinds) != 1:
        raise KindMismatchError("a curve must have a single kind")
    t = float(body[0][1])
    x = tuple(float(v) for v in body[0][2:2 + nx])
    lags = [float(r[2 + nx]) for r in body]
    vals = [float(r[3 + nx]) for r in body]
    K = int(body[0][4 + nx])
    te = [float(r[5 + nx]) for r in body]
    return VariogramCurve(kinds.pop(), t, x, np.array(lags), np.array(vals), K, np.array(te))
