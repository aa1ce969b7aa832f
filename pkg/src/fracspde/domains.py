"""Dirichlet Laplacian eigen-systems on simple bounded domains.

Supported domains are the interval ``(0, L)``, boxes ``(0, L1) x ... x (0, Ln)``
with ``n <= 3``, the disk of radius ``R`` centred at the origin and the
concentric annulus ``R0 < |x| < R``.  Eigenfunctions are always normalized
in ``L2(D)`` and eigenvalues are returned in ascending order, ties being broken
by the lexicographic order of the multi-index.

Multi-indices are ``(k1, ..., kn)`` with ``ki >= 1`` for boxes and
``(nu, r, c)`` for the round domains, where ``nu`` is the angular order,
``r`` the radial root index and ``c`` selects ``cos(nu*theta)`` (0) or
``sin(nu*theta)`` (1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq
from scipy.special import gamma as gamma_fn
from scipy.special import jv, jvp, yv, yvp

from .errors import (
    BracketError,
    ParameterDomainError,
    PointOutsideDomainError,
    RootFindingError,
    UnsupportedDomainError,
)

__all__ = [
    "DomainSpec",
    "Mode",
    "EigenSystem",
    "ModeHolderData",
    "build_eigensystem",
    "eval_eigenfunction",
    "eigenfunction_matrix",
    "eigenfunction_gradient",
    "bessel_root",
    "mode_holder_constant",
    "gram_matrix",
    "boundary_points",
    "eigensystem_to_json",
    "eigensystem_from_json",
]

KINDS = ("interval", "rectangle", "disk", "annulus")
MAX_ORDER = 50
MAX_ROOT_INDEX = 10_000
_ENUM_MAX_ORDER = 400
_TIE_RTOL = 1e-12
_FORMAT = "fracspde.eigensystem"


@dataclass(frozen=True)
class DomainSpec:
    """Geometry of a bounded domain.

    ``lengths`` holds the side lengths for intervals and boxes and
    ``(R,)`` or ``(R0, R)`` for the disk and annulus.  Prefer the
    classmethod constructors.
    """

    kind: str
    lengths: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedDomainError(f"unsupported domain kind {self.kind!r}")
        vals = tuple(float(v) for v in self.lengths)
        object.__setattr__(self, "lengths", vals)
        if not all(np.isfinite(v) and v > 0 for v in vals):
            raise ParameterDomainError("domain lengths and radii must be positive")
        expected = {"interval": (1,), "rectangle": (1, 2, 3), "disk": (1,), "annulus": (2,)}
        if len(vals) not in expected[self.kind]:
            raise UnsupportedDomainError(
                f"{self.kind} takes {expected[self.kind]} lengths, got {len(vals)}"
            )
        if self.kind == "annulus" and not vals[0] < vals[1]:
            raise ParameterDomainError("annulus needs 0 < R0 < R")

    @classmethod
    def interval(cls, length=1.0):
        return cls("interval", (length,))

    @classmethod
    def rectangle(cls, *lengths):
        return cls("rectangle", tuple(lengths))

    @classmethod
    def disk(cls, radius=1.0):
        return cls("disk", (radius,))

    @classmethod
    def annulus(cls, inner, outer):
        return cls("annulus", (inner, outer))

    @property
    def dim(self) -> int:
        if self.kind in ("disk", "annulus"):
            return 2
        return len(self.lengths)

    @property
    def volume(self) -> float:
        if self.kind == "disk":
            return math.pi * self.lengths[0] ** 2
        if self.kind == "annulus":
            r0, r = self.lengths
            return math.pi * (r * r - r0 * r0)
        return float(np.prod(self.lengths))

    @property
    def diameter(self) -> float:
        if self.kind in ("disk", "annulus"):
            return 2.0 * self.lengths[-1]
        return float(np.sqrt(np.sum(np.square(self.lengths))))

    @property
    def outer_radius(self) -> float:
        return self.lengths[-1]

    def contains(self, points, tol=1e-12) -> np.ndarray:
        """Boolean mask of points in the closed domain (relative tolerance ``tol``)."""
        p = _as_points(points, self.dim)
        if self.kind in ("interval", "rectangle"):
            L = np.asarray(self.lengths)
            return np.all((p >= -tol * L) & (p <= L * (1 + tol)), axis=-1)
        r = np.hypot(p[..., 0], p[..., 1])
        R = self.lengths[-1]
        ok = r <= R * (1 + tol)
        if self.kind == "annulus":
            ok &= r >= self.lengths[0] * (1 - tol)
        return ok

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lengths": list(self.lengths)}

    @classmethod
    def from_dict(cls, d) -> "DomainSpec":
        return cls(d["kind"], tuple(d["lengths"]))


@dataclass(frozen=True)
class Mode:
    """One eigenpair.

    ``norm`` is the L2 normalization constant.  For round domains ``root`` is
    the radial wavenumber (``gamma = root**2``) and ``coef`` the pair ``(a, b)``
    of the radial profile ``a*J_nu(root*r) - b*Y_nu(root*r)``.
    """

    index: tuple
    gamma: float
    norm: float
    root: float | None = None
    coef: tuple | None = None


@dataclass(frozen=True)
class EigenSystem:
    spec: DomainSpec
    modes: tuple
    _gammas: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        g = np.array([m.gamma for m in self.modes], dtype=float)
        g.setflags(write=False)
        object.__setattr__(self, "_gammas", g)

    @property
    def gammas(self) -> np.ndarray:
        return self._gammas

    @property
    def K_raw(self) -> int:
        return len(self.modes)

    def mode(self, k: int) -> Mode:
        """Mode ``k`` counted from 1."""
        if not (1 <= k <= len(self.modes)):
            raise IndexError(f"mode index {k} outside 1..{len(self.modes)}")
        return self.modes[k - 1]


@dataclass(frozen=True)
class ModeHolderData:
    mode_index: int
    lipschitz_constant: float
    upsilon: float = 1.0


# ---------------------------------------------------------------------------
# Bessel roots


def _first_kind_scan(nu, upper):
    """All zeros of J_nu in (0, upper], refined to ~1e-14 absolute."""
    lo = max(float(nu), 1e-3)
    if upper <= lo:
        return np.empty(0)
    grid = np.arange(lo, upper + 0.25, 0.25)
    f = jv(nu, grid)
    return _refine(lambda x: jv(nu, x), grid, f, upper, (nu, "first_kind"))


def _cross(nu, r0, r, k):
    return jv(nu, k * r0) * yv(nu, k * r) - jv(nu, k * r) * yv(nu, k * r0)


def _annulus_scan(nu, r0, r, upper):
    lo = max(nu / r, 1e-6)
    if upper <= lo:
        return np.empty(0)
    step = 0.05 * math.pi / (r - r0)
    grid = np.arange(lo, upper + step, step)
    with np.errstate(all="ignore"):
        f = _cross(nu, r0, r, grid)
    if not np.all(np.isfinite(f)):
        bad = grid[~np.isfinite(f)]
        raise BracketError(
            f"cross product not finite for order {nu}", (float(bad.min()), float(bad.max()))
        )
    return _refine(lambda k: _cross(nu, r0, r, k), grid, f, upper, (nu, "annulus"))


def _refine(fun, grid, f, upper, tag):
    roots = []
    exact = np.nonzero(f == 0.0)[0]
    roots.extend(grid[exact].tolist())
    s = np.sign(f)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    for i in idx:
        a, b = grid[i], grid[i + 1]
        try:
            x = brentq(fun, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        except (RuntimeError, ValueError) as exc:
            raise RootFindingError(f"root refinement failed on [{a}, {b}]", tag) from exc
        roots.append(x)
    out = np.sort(np.array(roots))
    return out[out <= upper]


def bessel_root(order: int, root_index: int, kind: str = "first_kind", radii=None) -> float:
    """Positive root of ``J_order`` or of the annulus cross product.

    Parameters
    ----------
    order : int
        Bessel order, ``0 <= order <= 50``.
    root_index : int
        1-based index of the root, at most 10000.
    kind : {"first_kind", "annulus"}
        ``"annulus"`` solves ``J_n(k R0) Y_n(k R) - J_n(k R) Y_n(k R0) = 0``
        in ``k``; ``radii=(R0, R)`` is then required.

    Raises
    ------
    BracketError
        If no bracket holding the requested root is found.
    """
    if not (0 <= int(order) <= MAX_ORDER) or int(order) != order:
        raise ParameterDomainError(f"order must be an integer in [0, {MAX_ORDER}]")
    if not (1 <= int(root_index) <= MAX_ROOT_INDEX) or int(root_index) != root_index:
        raise ParameterDomainError(f"root_index must be in [1, {MAX_ROOT_INDEX}]")
    order, root_index = int(order), int(root_index)
    if kind == "first_kind":
        upper = (root_index + 0.5 * order + 1.0) * math.pi + 5.0
        scan = lambda u: _first_kind_scan(order, u)  # noqa: E731
    elif kind == "annulus":
        if radii is None or len(radii) != 2 or not (0 < radii[0] < radii[1]):
            raise ParameterDomainError("annulus roots need radii=(R0, R) with 0 < R0 < R")
        r0, r = map(float, radii)
        upper = (root_index + 2.0) * math.pi / (r - r0) + order / r
        scan = lambda u: _annulus_scan(order, r0, r, u)  # noqa: E731
    else:
        raise ParameterDomainError(f"unknown root kind {kind!r}")
    for _ in range(6):
        roots = scan(upper)
        if roots.size >= root_index:
            return float(roots[root_index - 1])
        upper *= 1.5
    raise BracketError(f"root {root_index} of order {order} not bracketed", (0.0, upper))


# ---------------------------------------------------------------------------
# enumeration


def _weyl_level(spec, count):
    """Eigenvalue level expected to hold about ``count`` modes."""
    n = spec.dim
    unit_ball = math.pi ** (n / 2) / gamma_fn(1 + n / 2)
    return (2 * math.pi) ** 2 * (count / (unit_ball * spec.volume)) ** (2.0 / n)


def _box_modes(spec, level):
    L = np.asarray(spec.lengths)
    kmax = np.floor(np.sqrt(level) * L / math.pi).astype(int)
    if np.any(kmax < 1):
        return []
    axes = [np.arange(1, km + 1) for km in kmax]
    grids = np.meshgrid(*axes, indexing="ij")
    ks = np.stack([g.ravel() for g in grids], axis=-1)
    gam = (math.pi**2) * np.sum((ks / L) ** 2, axis=1)
    keep = gam <= level
    norm = float(np.prod(np.sqrt(2.0 / L)))
    return [
        Mode(tuple(int(v) for v in k), float(g), norm)
        for k, g in zip(ks[keep], gam[keep])
    ]


def _round_modes(spec, level):
    kmax = math.sqrt(level)
    R = spec.outer_radius
    out = []
    nu = 0
    while nu / R < kmax:
        if nu > _ENUM_MAX_ORDER:
            raise RootFindingError("angular order beyond supported range", (nu, None))
        if spec.kind == "disk":
            roots = _first_kind_scan(nu, kmax * R) / R
        else:
            r0 = spec.lengths[0]
            roots = _annulus_scan(nu, r0, R, kmax)
        for ridx, k in enumerate(roots, start=1):
            for c in ((0,) if nu == 0 else (0, 1)):
                out.append(_round_mode(spec, nu, ridx, c, float(k)))
        nu += 1
    return out


def _round_mode(spec, nu, ridx, c, k):
    R = spec.outer_radius
    if spec.kind == "disk":
        a, b = 1.0, 0.0
        radial = 0.5 * R**2 * jvp(nu, k * R) ** 2
    else:
        r0 = spec.lengths[0]
        j0, y0 = jv(nu, k * r0), yv(nu, k * r0)
        s = math.hypot(j0, y0)
        a, b = y0 / s, j0 / s

        def dz(x):
            return a * jvp(nu, x) - b * yvp(nu, x)

        radial = 0.5 * (R**2 * dz(k * R) ** 2 - r0**2 * dz(k * r0) ** 2)
    angular = 2 * math.pi if nu == 0 else math.pi
    if not radial > 0:
        raise RootFindingError("non-positive radial norm", (nu, ridx))
    norm = 1.0 / math.sqrt(angular * radial)
    return Mode((nu, ridx, c), k * k, norm, k, (a, b))


def _sort_modes(modes):
    modes = sorted(modes, key=lambda m: (m.gamma, m.index))
    # group near-ties and order them by multi-index
    out, i = [], 0
    while i < len(modes):
        j = i + 1
        while j < len(modes) and modes[j].gamma - modes[i].gamma <= _TIE_RTOL * modes[i].gamma:
            j += 1
        out.extend(sorted(modes[i:j], key=lambda m: m.index))
        i = j
    return out


def build_eigensystem(spec: DomainSpec, K_raw: int) -> EigenSystem:
    """The ``K_raw`` smallest Dirichlet eigenpairs of ``spec``.

    Raises
    ------
    UnsupportedDomainError
        If ``spec`` is not an implemented domain.
    RootFindingError
        If a radial root cannot be refined; ``mode_index`` names ``(nu, r)``.
    """
    if not isinstance(spec, DomainSpec):
        raise UnsupportedDomainError(f"expected a DomainSpec, got {type(spec).__name__}")
    if int(K_raw) != K_raw or K_raw < 1:
        raise ParameterDomainError("K_raw must be a positive integer")
    K_raw = int(K_raw)
    if spec.kind == "interval":
        L = spec.lengths[0]
        norm = math.sqrt(2.0 / L)
        modes = [Mode((k,), (math.pi * k / L) ** 2, norm) for k in range(1, K_raw + 1)]
        return EigenSystem(spec, tuple(modes))
    gen = _box_modes if spec.kind == "rectangle" else _round_modes
    level = 1.2 * _weyl_level(spec, K_raw) + 10.0 / min(spec.lengths) ** 2
    while True:
        modes = gen(spec, level)
        if len(modes) >= K_raw:
            break
        level *= 1.3
    modes = _sort_modes(modes)
    # a mode exactly at the cut level could tie with the K-th; level > gamma_K keeps it exact
    return EigenSystem(spec, tuple(modes[:K_raw]))


# ---------------------------------------------------------------------------
# evaluation


def _as_points(points, dim):
    p = np.asarray(points, dtype=float)
    if dim == 1 and (p.ndim == 0 or p.shape[-1] != 1):
        p = p[..., None]
    if p.shape[-1] != dim:
        raise ParameterDomainError(f"points must have trailing dimension {dim}")
    return p


def _check_inside(spec, p):
    if not np.all(spec.contains(p)):
        raise PointOutsideDomainError("point lies outside the closed domain")


def _eval_box(spec, mode, p):
    L = np.asarray(spec.lengths)
    k = np.asarray(mode.index)
    return mode.norm * np.prod(np.sin(math.pi * k / L * p), axis=-1)


def _radial(mode, nu, x):
    a, b = mode.coef
    if b == 0.0:
        return a * jv(nu, x)
    return a * jv(nu, x) - b * yv(nu, x)


def _radial_prime(mode, nu, x):
    a, b = mode.coef
    if b == 0.0:
        return a * jvp(nu, x)
    return a * jvp(nu, x) - b * yvp(nu, x)


def _eval_round(mode, p):
    nu, _, c = mode.index
    r = np.hypot(p[..., 0], p[..., 1])
    th = np.arctan2(p[..., 1], p[..., 0])
    ang = np.cos(nu * th) if c == 0 else np.sin(nu * th)
    return mode.norm * _radial(mode, nu, mode.root * r) * ang


def _eval(spec, mode, p):
    if spec.kind in ("interval", "rectangle"):
        return _eval_box(spec, mode, p)
    return _eval_round(mode, p)


def eval_eigenfunction(sys: EigenSystem, k: int, point):
    """Value of the normalized eigenfunction ``k`` (1-based) at ``point``.

    ``point`` may be a single coordinate tuple or an array of points with
    trailing dimension ``n``.  Intervals also accept bare scalars.
    """
    p = _as_points(point, sys.spec.dim)
    _check_inside(sys.spec, p)
    val = _eval(sys.spec, sys.mode(k), p)
    return float(val) if np.ndim(val) == 0 else val


def eigenfunction_matrix(sys: EigenSystem, points, K: int | None = None) -> np.ndarray:
    """Matrix ``Phi[i, k] = phi_{k+1}(points[i])`` for the first ``K`` modes."""
    p = _as_points(points, sys.spec.dim).reshape(-1, sys.spec.dim)
    _check_inside(sys.spec, p)
    K = sys.K_raw if K is None else int(K)
    if K > sys.K_raw:
        raise IndexError("K exceeds the number of stored modes")
    spec = sys.spec
    if spec.kind in ("interval", "rectangle"):
        L = np.asarray(spec.lengths)
        ks = np.array([m.index for m in sys.modes[:K]], dtype=float)
        out = np.ones((p.shape[0], K))
        for d in range(spec.dim):
            out *= np.sin(math.pi / L[d] * np.multiply.outer(p[:, d], ks[:, d]))
        return out * np.array([m.norm for m in sys.modes[:K]])
    return np.stack([_eval_round(m, p) for m in sys.modes[:K]], axis=-1)


def eigenfunction_gradient(sys: EigenSystem, k: int, points) -> np.ndarray:
    """Gradient of eigenfunction ``k`` at ``points``, shape ``(..., n)``."""
    spec = sys.spec
    mode = sys.mode(k)
    p = _as_points(points, spec.dim)
    _check_inside(spec, p)
    if spec.kind in ("interval", "rectangle"):
        L = np.asarray(spec.lengths)
        w = math.pi * np.asarray(mode.index) / L
        s, c = np.sin(w * p), np.cos(w * p)
        comps = []
        for d in range(spec.dim):
            f = w[d] * c[..., d]
            for e in range(spec.dim):
                if e != d:
                    f = f * s[..., e]
            comps.append(mode.norm * f)
        return np.stack(comps, axis=-1)
    nu, _, cc = mode.index
    r = np.hypot(p[..., 0], p[..., 1])
    th = np.arctan2(p[..., 1], p[..., 0])
    kk = mode.root
    ang = np.cos(nu * th) if cc == 0 else np.sin(nu * th)
    dang = -nu * np.sin(nu * th) if cc == 0 else nu * np.cos(nu * th)
    dr = mode.norm * kk * _radial_prime(mode, nu, kk * r) * ang
    with np.errstate(invalid="ignore", divide="ignore"):
        dth = mode.norm * _radial(mode, nu, kk * r) * dang / r
    dth = np.where(r > 0, dth, 0.0)
    ct, st = np.cos(th), np.sin(th)
    return np.stack([dr * ct - dth * st, dr * st + dth * ct], axis=-1)


def mode_holder_constant(sys: EigenSystem, k: int, pad: float = 0.05) -> ModeHolderData:
    """Lipschitz constant of eigenfunction ``k`` from a dense-grid gradient sup.

    The grid resolves the mode with at least 32 points per half-wavelength and
    the result is inflated by ``pad`` (5 % by default).
    """
    spec = sys.spec
    mode = sys.mode(k)
    if spec.kind in ("interval", "rectangle"):
        axes = [
            np.linspace(0.0, L, 32 * ki + 1) for L, ki in zip(spec.lengths, mode.index)
        ]
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        g = eigenfunction_gradient(sys, k, pts)
        sup = float(np.max(np.linalg.norm(g, axis=-1)))
    else:
        # |grad|^2 = c^2 (Z'^2 ang^2 + (nu Z / r)^2 dang^2); sup over theta is the max
        nu = mode.index[0]
        r0 = spec.lengths[0] if spec.kind == "annulus" else 0.0
        R = spec.outer_radius
        npts = int(32 * (mode.root * (R - r0) / math.pi + nu + 1)) + 1
        r = np.linspace(r0, R, npts)
        kk = mode.root
        dr = np.abs(kk * _radial_prime(mode, nu, kk * r))
        with np.errstate(invalid="ignore", divide="ignore"):
            tang = np.where(r > 0, np.abs(nu * _radial(mode, nu, kk * r) / r), 0.0)
        if nu == 1 and r0 == 0.0:
            tang[0] = abs(kk) * 0.5 * abs(mode.coef[0])
        sup = mode.norm * float(np.max(np.maximum(dr, tang)))
    if not sup > 0:
        raise RootFindingError("degenerate gradient sup", k)
    return ModeHolderData(k, (1.0 + pad) * sup, 1.0)


# ---------------------------------------------------------------------------
# quadrature checks


def gram_matrix(sys: EigenSystem, K: int | None = None) -> np.ndarray:
    """L2 Gram matrix of the first ``K`` eigenfunctions by tensor quadrature.

    Boxes use Gauss-Legendre in every coordinate; round domains use
    Gauss-Legendre in ``r`` and the trapezoid rule in ``theta`` (exact for the
    trigonometric factors).
    """
    K = sys.K_raw if K is None else int(K)
    spec = sys.spec
    modes = sys.modes[:K]
    if spec.kind in ("interval", "rectangle"):
        kmax = np.max(np.array([m.index for m in modes]), axis=0)
        axes, wts = [], []
        for L, km in zip(spec.lengths, kmax):
            x, w = leggauss(int(4 * km + 32))
            axes.append(0.5 * L * (x + 1))
            wts.append(0.5 * L * w)
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        wg = np.meshgrid(*wts, indexing="ij")
        w = np.prod(np.stack([g.ravel() for g in wg], axis=-1), axis=-1)
    else:
        numax = max(m.index[0] for m in modes)
        kmax = max(m.root for m in modes)
        R = spec.outer_radius
        r0 = spec.lengths[0] if spec.kind == "annulus" else 0.0
        nr = int(2 * kmax * (R - r0) / math.pi + numax + 40)
        x, wr = leggauss(nr)
        r = r0 + 0.5 * (R - r0) * (x + 1)
        wr = 0.5 * (R - r0) * wr * r
        nth = 4 * numax + 16
        th = 2 * math.pi * np.arange(nth) / nth
        rr, tt = np.meshgrid(r, th, indexing="ij")
        pts = np.stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()], axis=-1)
        w = np.outer(wr, np.full(nth, 2 * math.pi / nth)).ravel()
    phi = eigenfunction_matrix(sys, pts, K)
    return phi.T @ (phi * w[:, None])


def boundary_points(spec: DomainSpec, n: int = 64) -> np.ndarray:
    """Sample ``n`` points per boundary piece of ``spec``."""
    if spec.kind == "interval":
        return np.array([[0.0], [spec.lengths[0]]])
    if spec.kind == "rectangle":
        L = np.asarray(spec.lengths)
        rng = np.random.default_rng(0)
        pts = []
        for d in range(spec.dim):
            for side in (0.0, L[d]):
                q = rng.uniform(0, 1, size=(n, spec.dim)) * L
                q[:, d] = side
                pts.append(q)
        return np.concatenate(pts)
    th = 2 * math.pi * np.arange(n) / n
    circles = [spec.outer_radius] + ([spec.lengths[0]] if spec.kind == "annulus" else [])
    return np.concatenate(
        [np.stack([r * np.cos(th), r * np.sin(th)], axis=-1) for r in circles]
    )


# ---------------------------------------------------------------------------
# serialization


def eigensystem_to_json(sys: EigenSystem) -> str:
    """JSON text; floats are written with ``repr`` so reloading is bit-exact."""
    doc = {
        "format": _FORMAT,
        "version": 1,
        "spec": sys.spec.to_dict(),
        "modes": [
            {
                "index": list(m.index),
                "gamma": m.gamma,
                "norm": m.norm,
                "root": m.root,
                "coef": None if m.coef is None else list(m.coef),
            }
            for m in sys.modes
        ],
    }
    return json.dumps(doc, indent=1)


def eigensystem_from_json(text: str) -> EigenSystem:
    doc = json.loads(text)
    if doc.get("format") != _FORMAT:
        raise ParameterDomainError("not an eigensystem document")
    spec = DomainSpec.from_dict(doc["spec"])
    modes = tuple(
        Mode(
            tuple(m["index"]),
            float(m["gamma"]),
            float(m["norm"]),
            None if m["root"] is None else float(m["root"]),
            None if m["coef"] is None else tuple(m["coef"]),
        )
        for m in doc["modes"]
    )
    return EigenSystem(spec, modes)
