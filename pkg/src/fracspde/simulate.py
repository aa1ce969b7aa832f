"""Monte Carlo replicates of the truncated solution field.

The field is ``c(t, x) = sum_k phi_k(x) X_k(t)`` with independent Gaussian
mode processes ``X_k``.  Two samplers are provided:

``cholesky``
    exact in law at the grid times; each ``X_k`` is drawn from the dense
    covariance ``C_k(t_i, t_j)`` computed by :mod:`fracspde.kernels`.
``riemann``
    left-endpoint discretization of the stochastic integral on a uniform
    grid, kept as an independent cross-check.

Random streams follow a counter-based tree: replicate ``r`` and mode ``k``
draw from ``Philox(SeedSequence(seed, spawn_key=(r, k)))``.  All reductions
are elementwise loops in a fixed order (mode, then time), never BLAS calls,
so results do not depend on how replicates are split across threads.
"""

from __future__ import annotations

import csv
import io
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    FactorizationError,
    GridError,
    InsufficientReplicatesError,
    ParameterDomainError,
)
from .kernels import _phi, _resolve, mode_covariance_matrices
from .mlf import TimeGrid, eval_mlf
from .spectrum import FracParams, SpectralTruncation

__all__ = [
    "SimulationPlan",
    "FieldEnsemble",
    "Estimate",
    "sample_ensemble",
    "riemann_sample",
    "riemann_expected_covariance",
    "ensemble_estimate",
    "ensemble_to_csv",
    "write_ensemble_binary",
    "read_ensemble_binary",
    "thread_count",
]

THREADS_ENV = "FRACSPDE_THREADS"
MAX_CHOLESKY_POINTS = 2048
_JITTERS = (1e-14, 1e-13, 1e-12, 1e-11, 1e-10)
_MAGIC = b"FSPDEENS"
_VERSION = 1
_CHUNK = 256


def thread_count(requested: int | None = None) -> int:
    """Worker count: explicit argument, then ``FRACSPDE_THREADS``, then 1."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ParameterDomainError(f"{THREADS_ENV} must be an integer, got {env!r}")
    return 1


@dataclass(frozen=True)
class SimulationPlan:
    """Everything needed to regenerate an ensemble bit for bit."""

    trunc: SpectralTruncation
    params: FracParams
    times: TimeGrid
    points: np.ndarray
    replicates: int
    seed: int
    method: str = "cholesky"

    def __post_init__(self):
        if not isinstance(self.times, TimeGrid):
            object.__setattr__(self, "times", TimeGrid(np.asarray(self.times, dtype=float)))
        dim = self.trunc.dim
        pts = np.asarray(self.points, dtype=float)
        if dim == 1 and pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] != dim or pts.shape[0] < 1:
            raise ParameterDomainError(f"points must have shape (P, {dim})")
        object.__setattr__(self, "points", pts)
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise ParameterDomainError("replicate count must be a positive integer")
        if int(self.seed) != self.seed or not (0 <= self.seed < 2**63):
            raise ParameterDomainError("seed must be an integer in [0, 2**63)")
        if self.method not in ("cholesky", "riemann"):
            raise ParameterDomainError(f"unknown method {self.method!r}")
        if len(self.times) < 2:
            raise GridError("time grid needs at least 2 points")
        _resolve(self.trunc, self.params)

    @property
    def beta(self) -> float:
        return self.params.beta

    @property
    def shape(self) -> tuple:
        return (int(self.replicates), len(self.times), self.points.shape[0])


@dataclass(frozen=True)
class FieldEnsemble:
    """Replicate x time x space values with the plan that produced them."""

    plan: SimulationPlan
    values: np.ndarray
    replicate_seeds: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.plan.times.points

    @property
    def points(self) -> np.ndarray:
        return self.plan.points

    @property
    def replicates(self) -> int:
        return self.values.shape[0]


def _stream(seed, r, k):
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(r), int(k)))
    return np.random.Generator(np.random.Philox(ss))


def _replicate_seeds(seed, R):
    return np.array(
        [np.random.SeedSequence(int(seed), spawn_key=(r,)).generate_state(1, np.uint64)[0]
         for r in range(R)],
        dtype=np.uint64,
    )


def _factor(C, k):
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        pass
    scale = float(np.trace(C)) / C.shape[0]
    eye = np.eye(C.shape[0])
    for j in _JITTERS:
        try:
            return np.linalg.cholesky(C + j * scale * eye)
        except np.linalg.LinAlgError:
            continue
    raise FactorizationError(f"mode {k} covariance is not positive definite", k)


def _synthesize(phi, X):
    """``out[r, i, p] = sum_k phi[p, k] X[k, r, i]`` in ascending-k order."""
    out = np.zeros((X.shape[1], X.shape[2], phi.shape[0]))
    for k in range(X.shape[0]):
        out += X[k][:, :, None] * phi[:, k][None, None, :]
    return out


def _run_chunks(R, work, threads):
    chunks = [(lo, min(lo + _CHUNK, R)) for lo in range(0, R, _CHUNK)]
    if threads <= 1 or len(chunks) == 1:
        return [work(a, b) for a, b in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ab: work(*ab), chunks))


def _mode_factors(plan):
    t = plan.times.points[1:]
    if t.size > MAX_CHOLESKY_POINTS:
        raise GridError(f"cholesky sampling supports at most {MAX_CHOLESKY_POINTS} times")
    C = mode_covariance_matrices(plan.trunc.lambdas, plan.beta, t)
    return [_factor(C[k], k + 1) for k in range(C.shape[0])]


def sample_ensemble(plan: SimulationPlan, threads: int | None = None) -> FieldEnsemble:
    """Draw ``plan.replicates`` fields.

    Uses the method recorded in the plan.  The value at ``t = 0`` is exactly
    zero.  ``threads`` (or ``FRACSPDE_THREADS``) parallelizes over blocks of
    replicates without changing a single bit of the output.

    Raises
    ------
    FactorizationError
        If a mode covariance stays indefinite after jitter ``1e-10``.
    """
    if plan.method == "riemann":
        return riemann_sample(plan, threads)
    factors = _mode_factors(plan)
    phi = _phi(plan.trunc, plan.points)
    K = len(factors)
    M1 = len(plan.times) - 1

    def work(a, b):
        X = np.zeros((K, b - a, M1 + 1))
        for k, L in enumerate(factors):
            Z = np.stack([_stream(plan.seed, r, k).standard_normal(M1) for r in range(a, b)])
            acc = np.zeros((b - a, M1))
            for j in range(M1):
                acc += Z[:, j:j + 1] * L[:, j][None, :]
            X[k, :, 1:] = acc
        return _synthesize(phi, X)

    parts = _run_chunks(plan.replicates, work, thread_count(threads))
    values = np.concatenate(parts, axis=0)
    return FieldEnsemble(plan, values, _replicate_seeds(plan.seed, plan.replicates))


def _riemann_weights(plan):
    h = plan.times.step
    if h is None:
        raise GridError("riemann sampling needs a uniform time grid")
    M1 = len(plan.times) - 1
    lags = h * np.arange(1, M1 + 1)
    return h, eval_mlf(plan.beta, np.multiply.outer(plan.trunc.lambdas, lags**plan.beta))


def riemann_sample(plan: SimulationPlan, threads: int | None = None) -> FieldEnsemble:
    """Left-endpoint sum ``X_k(t_i) = sum_{j<i} E(lam_k (t_i - t_j)^beta) dB_j``."""
    h, E = _riemann_weights(plan)
    phi = _phi(plan.trunc, plan.points)
    K, M1 = E.shape
    sq = np.sqrt(h)

    def work(a, b):
        X = np.zeros((K, b - a, M1 + 1))
        for k in range(K):
            dB = sq * np.stack(
                [_stream(plan.seed, r, k).standard_normal(M1) for r in range(a, b)]
            )
            acc = np.zeros((b - a, M1))
            # lag d couples increment j to time index j + d
            for d in range(M1):
                acc[:, d:] += E[k, d] * dB[:, : M1 - d]
            X[k, :, 1:] = acc
        return _synthesize(phi, X)

    parts = _run_chunks(plan.replicates, work, thread_count(threads))
    values = np.concatenate(parts, axis=0)
    return FieldEnsemble(plan, values, _replicate_seeds(plan.seed, plan.replicates))


def riemann_expected_covariance(plan: SimulationPlan, i: int, j: int, p: int, q: int) -> float:
    """Exact covariance of the riemann sampler between grid nodes ``(i, p)`` and ``(j, q)``."""
    h, E = _riemann_weights(plan)
    phi = _phi(plan.trunc, plan.points)
    m = min(i, j)
    if m == 0:
        return 0.0
    # sum over increments l < m of E[i-l-1] E[j-l-1] h
    li = np.arange(m)
    prod = E[:, i - li - 1] * E[:, j - li - 1]
    return float(np.sum(phi[p] * phi[q] * h * prod.sum(axis=1)))


# ---------------------------------------------------------------------------
# estimators


@dataclass(frozen=True)
class Estimate:
    kind: str
    value: float
    stderr: float


def _locate(ens, t, x):
    times = ens.times
    i = np.nonzero(np.isclose(times, t, rtol=0, atol=1e-12))[0]
    if i.size == 0:
        raise ParameterDomainError(f"time {t} is not on the ensemble grid")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = np.linalg.norm(ens.points - x[None, :], axis=1)
    p = np.nonzero(d <= 1e-12)[0]
    if p.size == 0:
        raise ParameterDomainError(f"point {x.tolist()} is not on the ensemble grid")
    return int(i[0]), int(p[0])


def _jackknife_cov(a, b):
    R = a.size
    sa, sb, sab = a.sum(), b.sum(), (a * b).sum()
    full = (sab - sa * sb / R) / (R - 1)
    loo = ((sab - a * b) - (sa - a) * (sb - b) / (R - 1)) / (R - 2)
    se = np.sqrt((R - 1) / R * np.sum((loo - loo.mean()) ** 2))
    return float(full), float(se)


def ensemble_estimate(ens: FieldEnsemble, targets) -> list:
    """Monte Carlo moments with jackknife standard errors.

    ``targets`` is a list of tuples:

    * ``("mean", (t, x))``
    * ``("covariance", (t, x), (s, y))``: unbiased centred sample covariance
    * ``("increment", (t, x), (s, y))``: mean of ``(c(t,x) - c(s,y))**2``

    Times and points must lie on the ensemble grid.
    """
    R = ens.replicates
    if R < 3:
        raise InsufficientReplicatesError("at least 3 replicates are required")
    out = []
    for tgt in targets:
        kind = tgt[0]
        i, p = _locate(ens, *tgt[1])
        a = ens.values[:, i, p]
        if kind == "mean":
            out.append(Estimate(kind, float(a.mean()), float(a.std(ddof=1) / np.sqrt(R))))
            continue
        j, q = _locate(ens, *tgt[2])
        b = ens.values[:, j, q]
        if kind == "covariance":
            v, se = _jackknife_cov(a, b)
        elif kind == "increment":
            d2 = (a - b) ** 2
            v, se = float(d2.mean()), float(d2.std(ddof=1) / np.sqrt(R))
        else:
            raise ParameterDomainError(f"unknown target kind {kind!r}")
        out.append(Estimate(kind, v, se))
    return out


# ---------------------------------------------------------------------------
# export


def ensemble_to_csv(ens: FieldEnsemble) -> str:
    """Long-format CSV: replicate, t, x0.., value."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = ens.points.shape[1]
    w.writerow(["replicate", "t", *[f"x{i}" for i in range(n)], "value"])
    tr = [repr(float(t)) for t in ens.times]
    pr = [[repr(float(v)) for v in p] for p in ens.points]
    for r in range(ens.replicates):
        for i, t in enumerate(tr):
            for p, xs in enumerate(pr):
                w.writerow([r, t, *xs, repr(float(ens.values[r, i, p]))])
    return buf.getvalue()


def write_ensemble_binary(ens: FieldEnsemble, fh) -> None:
    """Binary layout, little endian.

    ``magic[8] | version u32 | R u64 | M u64 | P u64 | n u64 | seed u64 |
    times f64[M] | points f64[P*n] | values f64[R*M*P]``
    """
    R, M, P = ens.values.shape
    n = ens.points.shape[1]
    fh.write(_MAGIC)
    fh.write(struct.pack("<IQQQQQ", _VERSION, R, M, P, n, int(ens.plan.seed)))
    fh.write(np.ascontiguousarray(ens.times, dtype="<f8").tobytes())
    fh.write(np.ascontiguousarray(ens.points, dtype="<f8").tobytes())
    fh.write(np.ascontiguousarray(ens.values, dtype="<f8").tobytes())


def read_ensemble_binary(fh) -> dict:
    """Inverse of :func:`write_ensemble_binary`; returns the raw arrays."""
    if fh.read(8) != _MAGIC:
        raise ParameterDomainError("not an ensemble file")
    version, R, M, P, n, seed = struct.unpack("<IQQQQQ", fh.read(44))
    if version != _VERSION:
        raise ParameterDomainError(f"unsupported ensemble version {version}")
    times = np.frombuffer(fh.read(8 * M), dtype="<f8")
    points = np.frombuffer(fh.read(8 * P * n), dtype="<f8").reshape(P, n)
    values = np.frombuffer(fh.read(8 * R * M * P), dtype="<f8").reshape(R, M, P)
    return {"seed": seed, "times": times, "points": points, "values": values}
