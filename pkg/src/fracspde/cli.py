"""Batch front-end.

A run is described by one JSON document (see ``config_schema.json`` next to
this module).  Every subcommand stages its files in a sibling directory of
the output and renames it into place only after the whole pipeline finished,
so a failed run leaves nothing behind.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .analyze import (
    bound_exponent,
    calibrated_window,
    fit_loglog_slope,
    modulus_stat,
    verify_bound,
)
from .domains import DomainSpec, build_eigensystem, eigensystem_to_json
from .errors import (
    BracketError,
    ConfigError,
    FactorizationError,
    FitWindowError,
    FracSpdeError,
    InadmissibleParametersError,
    QuadratureError,
    RootFindingError,
)
from .kernels import (
    curve_to_csv,
    spatial_variogram,
    spatiotemporal_variogram,
    temporal_variogram,
)
from .simulate import (
    SimulationPlan,
    ensemble_estimate,
    sample_ensemble,
    write_ensemble_binary,
)
from .spectrum import FracParams, build_truncation, summability_check

__all__ = ["RunConfig", "load_config", "parse_config", "run", "main", "golden_config"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
OUTPUTS = ("diagnostics", "kernels", "ensemble", "analysis")
KINDS = ("temporal", "spatial", "spacetime")
_NUMERIC = (QuadratureError, FactorizationError, RootFindingError, BracketError)

# stages each subcommand runs; ``run`` follows the config's output list
_SUBCOMMAND_OUTPUTS = {
    "eig": (),
    "diag": ("diagnostics",),
    "kernel": ("kernels",),
    "simulate": ("ensemble",),
    "analyze": ("analysis",),
}


class NumericalFailure(FracSpdeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"numerical failure in {stage}: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration.

    Built by :func:`parse_config`; every admissibility check has already run.
    """

    name: str
    domain: DomainSpec
    params: FracParams
    K: int
    K_raw: int
    T: float
    n_times: int
    points: np.ndarray
    seed: int
    replicates: int
    outputs: tuple
    kinds: tuple
    deltas: tuple
    n_lags: int
    out: str | None = None
    raw: dict = field(default_factory=dict, repr=False)


# ---------------------------------------------------------------------------
# parsing


def _get(d, key, path, kind, default=None, required=False):
    name = f"{path}.{key}" if path else key
    if key not in d:
        if required:
            raise ConfigError(f"missing required field '{name}'", name)
        return default
    v = d[key]
    if kind is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"'{name}' must be an integer", name)
    elif kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"'{name}' must be a finite number", name)
        v = float(v)
    elif not isinstance(v, kind):
        raise ConfigError(f"'{name}' has the wrong type", name)
    return v


def _domain(d):
    kind = _get(d, "kind", "domain", str, required=True)
    lengths = _get(d, "lengths", "domain", list, required=True)
    try:
        vals = [float(x) for x in lengths]
        return DomainSpec(kind, tuple(vals))
    except (TypeError, ValueError, FracSpdeError) as exc:
        raise ConfigError(f"invalid domain: {exc}", "domain") from exc


def _params(d):
    try:
        return FracParams(
            beta=_get(d, "beta", "params", float, required=True),
            alpha=_get(d, "alpha", "params", float, 2.0),
            gamma=_get(d, "gamma", "params", float, 0.0),
            poly_coeffs=tuple(_get(d, "poly_coeffs", "params", list, [0.0, 1.0])),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid params: {exc}", "params") from exc


def _anchor(spec: DomainSpec) -> np.ndarray:
    """Reference site: the centre, or the mid radius of an annulus."""
    L = spec.lengths
    if spec.kind in ("interval", "rectangle"):
        return 0.5 * np.array(L)
    if spec.kind == "disk":
        return np.zeros(2)
    return np.array([0.5 * (L[0] + L[1]), 0.0])


def _reach(spec: DomainSpec) -> float:
    """Length of the segment from the anchor along ``+x`` that stays inside."""
    L = spec.lengths
    if spec.kind in ("interval", "rectangle"):
        return 0.5 * L[0]
    if spec.kind == "disk":
        return L[0]
    return 0.5 * (L[1] - L[0])


def _sites(spec: DomainSpec, n: int) -> np.ndarray:
    """``n`` interior sites on the anchor's ``+x`` / ``-x`` line."""
    a = _anchor(spec)
    r = _reach(spec)
    off = np.linspace(-r, r, n + 2)[1:-1]
    pts = np.repeat(a[None, :], n, axis=0)
    pts[:, 0] += off
    return pts


def parse_config(doc: dict, seed_override: int | None = None, out: str | None = None) -> RunConfig:
    """Validate a configuration document.

    Raises
    ------
    ConfigError
        With ``field`` naming the first offending entry.
    """
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object", "")
    name = _get(doc, "name", "", str, "run")
    spec = _domain(_get(doc, "domain", "", dict, required=True))
    params = _params(_get(doc, "params", "", dict, required=True))
    n = spec.dim

    K = _get(doc, "K", "", int, required=True)
    K_raw = _get(doc, "K_raw", "", int, max(K, 2 * K))
    if K < 1:
        raise ConfigError("'K' must be positive", "K")
    if K_raw < K:
        raise ConfigError("'K_raw' must be at least 'K'", "K_raw")

    grids = _get(doc, "grids", "", dict, {})
    T = _get(grids, "T", "grids", float, 1.0)
    if T <= 0:
        raise ConfigError("'grids.T' must be positive", "grids.T")
    n_times = _get(grids, "times", "grids", int, 17)
    if n_times < 3:
        raise ConfigError("'grids.times' needs at least 3 points", "grids.times")
    if "points" in grids:
        pts = np.asarray(_get(grids, "points", "grids", list), dtype=float)
        if pts.ndim == 1 and n == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] != n or pts.shape[0] < 1:
            raise ConfigError(f"'grids.points' must be a list of {n}-vectors", "grids.points")
        if not np.all(spec.contains(pts)):
            raise ConfigError("'grids.points' has a site outside the domain", "grids.points")
    else:
        n_sites = _get(grids, "sites", "grids", int, 9)
        if n_sites < 1:
            raise ConfigError("'grids.sites' must be positive", "grids.sites")
        pts = _sites(spec, n_sites)
    n_lags = _get(grids, "lags", "grids", int, 25)
    if n_lags < 5:
        raise ConfigError("'grids.lags' needs at least 5 lags", "grids.lags")

    seed = _get(doc, "seed", "", int, 0) if seed_override is None else int(seed_override)
    if not 0 <= seed < 2**63:
        raise ConfigError("'seed' must lie in [0, 2**63)", "seed")
    R = _get(doc, "replicates", "", int, 200)
    if R < 1:
        raise ConfigError("'replicates' must be positive", "replicates")

    outputs = tuple(_get(doc, "outputs", "", list, list(OUTPUTS)))
    for o in outputs:
        if o not in OUTPUTS:
            raise ConfigError(f"unknown output {o!r}", "outputs")

    analysis = _get(doc, "analysis", "", dict, {})
    default_kinds = KINDS if params.beta < 0.5 else ("spatial", "spacetime")
    kinds = tuple(_get(analysis, "kinds", "analysis", list, list(default_kinds)))
    for k in kinds:
        if k not in KINDS:
            raise ConfigError(f"unknown analysis kind {k!r}", "analysis.kinds")
    deltas = tuple(float(x) for x in _get(analysis, "deltas", "analysis", list, []))
    if any(not (d > 0) for d in deltas):
        raise ConfigError("'analysis.deltas' must be positive", "analysis.deltas")

    # admissibility, before any computation
    needs_field = any(o in outputs for o in ("kernels", "ensemble", "analysis"))
    if needs_field and not params.admissible_solution(n):
        raise ConfigError(
            f"kernels need the admissibility condition p(alpha+gamma) > n; "
            f"got {params.order} <= {n}",
            "params",
        )
    if needs_field and params.beta >= 1.0 and ("analysis" in outputs):
        raise ConfigError("regularity analysis needs beta < 1", "params.beta")
    if "analysis" in outputs and "temporal" in kinds and not params.beta < 0.5:
        raise ConfigError(
            f"temporal analysis needs the hypothesis beta < 1/2; got beta={params.beta}",
            "params.beta",
        )
    if "ensemble" in outputs and deltas and R < 100:
        raise ConfigError("modulus analysis needs at least 100 replicates", "replicates")

    return RunConfig(
        name=name, domain=spec, params=params, K=K, K_raw=K_raw, T=T,
        n_times=n_times, points=pts, seed=seed, replicates=R, outputs=outputs,
        kinds=kinds, deltas=deltas, n_lags=n_lags,
        out=out if out is not None else doc.get("out"), raw=doc,
    )


def load_config(path, seed_override=None, out=None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", "config") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}", "config") from exc
    return parse_config(doc, seed_override, out)


def golden_config(name: str) -> dict:
    """Shipped configuration document ``name`` (e.g. ``"interval-beta04"``)."""
    res = resources.files(__package__) / "golden" / f"{name}.json"
    if not res.is_file():
        raise ConfigError(f"no golden config named {name!r}", "config")
    return json.loads(res.read_text())


# ---------------------------------------------------------------------------
# stages


def _fmt(x) -> str:
    return repr(float(x))


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


class _Pipeline:
    def __init__(self, cfg: RunConfig, threads: int | None = None):
        self.cfg = cfg
        self.threads = threads
        self.files: dict[str, bytes] = {}
        self._system = None
        self._trunc = None
        self._curves = None
        self._ensemble = None

    def stage(self, label, fn):
        try:
            return fn()
        except _NUMERIC as exc:
            raise NumericalFailure(label, exc) from exc

    @property
    def system(self):
        if self._system is None:
            c = self.cfg
            self._system = self.stage("domains", lambda: build_eigensystem(c.domain, c.K_raw))
        return self._system

    @property
    def trunc(self):
        if self._trunc is None:
            self._trunc = build_truncation(self.system, self.cfg.params, self.cfg.K)
        return self._trunc

    def times(self):
        return np.linspace(0.0, self.cfg.T, self.cfg.n_times)

    # -- eig
    def eig(self):
        sysm = self.system
        self.files["eigensystem.json"] = eigensystem_to_json(sysm).encode()
        rows = []
        for m in sysm.modes:
            rows.append([m.index, _fmt(m.gamma), _fmt(m.norm)])
        self.files["eigenvalues.csv"] = _csv(rows, ["k", "gamma", "norm"]).encode()

    # -- diag
    def diagnostics(self):
        tr = self.trunc
        p = self.cfg.params
        k = np.arange(1, tr.K + 1)
        ratios = tr.lambdas / k.astype(float) ** tr.exponent
        sums = [""] * tr.K
        tail = ""
        if p.admissible_solution(tr.dim):
            rep = self.stage("spectrum", lambda: summability_check(tr, p.beta, self.cfg.T))
            sums = [_fmt(v) for v in rep.partial_sums]
            tail = _fmt(rep.tail_bound)
        rows = [
            [int(k[i]), _fmt(tr.gammas[i]), _fmt(tr.lambdas[i]), _fmt(ratios[i]),
             int(tr.mode_map[i]), sums[i], tail if i == tr.K - 1 else ""]
            for i in range(tr.K)
        ]
        header = ["k", "gamma_k", "lambda_k", "weyl_ratio", "source_mode", "partial_sum", "tail_bound"]
        self.files["diagnostics.csv"] = _csv(rows, header).encode()

    # -- kernels
    def _lag_grid(self, hi, lo=None):
        lo = hi * 1e-4 if lo is None else min(lo, hi * 1e-4)
        return np.geomspace(lo, hi, self.cfg.n_lags)

    def _temporal_lags(self):
        c = self.cfg
        try:
            lo = calibrated_window(self.trunc, c.params.beta, c.T)[0]
        except FitWindowError:
            lo = None
        return self._lag_grid(0.5 * c.T, lo)

    def curves(self):
        if self._curves is not None:
            return self._curves
        c, tr, p = self.cfg, self.trunc, self.cfg.params
        x0 = _anchor(c.domain)
        out = {}

        def work():
            if p.beta < 0.5 and p.admissible_temporal(tr.dim):
                out["temporal"] = temporal_variogram(tr, p, x0, c.T, lags=self._temporal_lags())
            lags_x = self._lag_grid(0.9 * _reach(c.domain))
            ys = np.repeat(x0[None, :], lags_x.size, axis=0)
            ys[:, 0] += lags_x
            out["spatial"] = spatial_variogram(tr, p, c.T, x0, ys)
            if p.beta < 1.0:
                h = self._lag_grid(min(0.5 * c.T, 0.9 * _reach(c.domain))) / math.sqrt(2.0)
                others = []
                for d in h:
                    y = x0.copy()
                    y[0] += d
                    others.append((c.T - d, y))
                out["spacetime"] = spatiotemporal_variogram(tr, p, (c.T, x0), others)

        self.stage("kernels", work)
        self._curves = out
        return out

    def kernels(self):
        parts = [curve_to_csv(cv) for cv in self.curves().values()]
        text = parts[0] + "".join(s.split("\n", 1)[1] for s in parts[1:])
        self.files["variograms.csv"] = text.encode()

    # -- ensemble
    def ensemble(self):
        if self._ensemble is not None:
            return self._ensemble
        c = self.cfg
        plan = SimulationPlan(self.trunc, c.params, self.times(), c.points, c.replicates, c.seed)
        ens = self.stage("simulate", lambda: sample_ensemble(plan, self.threads))
        self._ensemble = ens
        return ens

    def write_ensemble(self):
        ens = self.ensemble()
        buf = io.BytesIO()
        write_ensemble_binary(ens, buf)
        self.files["ensemble.bin"] = buf.getvalue()
        rows = []
        if ens.replicates >= 3:
            for i, t in enumerate(ens.times[1:], start=1):
                for p, x in enumerate(ens.points):
                    est = ensemble_estimate(ens, [("covariance", (t, x), (t, x))])[0]
                    rows.append([_fmt(t), *map(_fmt, x), _fmt(ens.values[:, i, p].mean()),
                                 _fmt(est.value), _fmt(est.stderr)])
        hdr = ["t", *[f"x{i}" for i in range(ens.points.shape[1])], "mean", "variance", "variance_se"]
        self.files["moments.csv"] = _csv(rows, hdr).encode()

    # -- analysis
    def analysis(self):
        c, tr, p = self.cfg, self.trunc, self.cfg.params
        curves = self.curves()
        lines = [f"config {c.name}", f"K {tr.K}", f"beta {p.beta!r}", f"order {p.order!r}"]
        for kind in c.kinds:
            bound = bound_exponent(p, tr.dim, kind, tr, T=c.T)
            cv = curves.get(kind)
            if cv is None:
                lines.append(f"{kind} skipped: no curve")
                continue
            rep = verify_bound(cv, bound)
            lines.append(
                f"{kind} theta {bound.theta!r} prefactor {bound.prefactor!r} "
                f"holds {str(rep.holds).lower()} max_ratio {rep.max_ratio!r} "
                f"worst_lag {rep.worst_lag!r}"
            )
            if kind == "temporal":
                try:
                    win = calibrated_window(tr, p.beta, c.T)
                    fit = fit_loglog_slope(cv, win)
                    lines.append(
                        f"temporal slope {fit.slope!r} window {win[0]!r} {win[1]!r} n {fit.n}"
                    )
                except FitWindowError as exc:
                    lines.append(f"temporal slope unavailable: {exc}")
        if c.deltas and "ensemble" in c.outputs:
            ens = self.ensemble()
            rows = []
            for kind in c.kinds:
                rep = modulus_stat(ens, c.deltas, kind)
                for d, q in zip(rep.deltas, rep.p95):
                    rows.append([kind, _fmt(d), _fmt(q), rep.flag])
                lines.append(f"{kind} modulus {rep.flag}")
            self.files["modulus.csv"] = _csv(rows, ["kind", "delta", "p95", "flag"]).encode()
        self.files["bounds.txt"] = ("\n".join(lines) + "\n").encode()

    def execute(self, outputs, with_eig):
        if with_eig:
            self.eig()
        if "diagnostics" in outputs:
            self.diagnostics()
        if "kernels" in outputs:
            self.kernels()
        if "ensemble" in outputs:
            self.write_ensemble()
        if "analysis" in outputs:
            self.stage("analyze", self.analysis)
        return self.files


# ---------------------------------------------------------------------------
# promotion


def _manifest(cfg: RunConfig, files: dict) -> bytes:
    entries = [
        {"file": name, "bytes": len(data), "sha256": hashlib.sha256(data).hexdigest()}
        for name, data in sorted(files.items())
    ]
    doc = {
        "name": cfg.name,
        "seed": cfg.seed,
        "version": __version__,
        "config_sha256": hashlib.sha256(
            json.dumps(cfg.raw, sort_keys=True).encode()
        ).hexdigest(),
        "files": entries,
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()


def _promote(files: dict, out: Path) -> None:
    out = out.resolve()
    out.parent.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=f".{out.name}.staging-", dir=out.parent))
    try:
        for name, data in files.items():
            (stage / name).write_bytes(data)
        old = None
        if out.exists():
            old = out.with_name(f".{out.name}.old-{os.getpid()}")
            os.replace(out, old)
        os.replace(stage, out)
        if old is not None:
            shutil.rmtree(old, ignore_errors=True)
    except BaseException:
        shutil.rmtree(stage, ignore_errors=True)
        raise


def run(cfg: RunConfig, subcommand: str = "run", threads: int | None = None) -> dict:
    """Run the stages of ``subcommand`` and promote the artifacts.

    Returns the manifest as a dict.  Nothing is written unless every stage
    succeeds.
    """
    if subcommand == "run":
        outputs = cfg.outputs
        with_eig = False
    else:
        outputs = _SUBCOMMAND_OUTPUTS[subcommand]
        with_eig = subcommand == "eig"
    files = dict(_Pipeline(cfg, threads).execute(outputs, with_eig))
    manifest = _manifest(cfg, files)
    files["manifest.json"] = manifest
    if cfg.out is None:
        raise ConfigError("no output directory: pass --out or set 'out'", "out")
    _promote(files, Path(cfg.out))
    return json.loads(manifest)


# ---------------------------------------------------------------------------
# entry point


def _parser():
    ap = argparse.ArgumentParser(prog="fracspde", description="Fractional stochastic heat equation toolkit.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "eig": "Dirichlet eigensystem (eigensystem.json, eigenvalues.csv)",
        "diag": "spectral diagnostics (diagnostics.csv)",
        "kernel": "exact variogram curves (variograms.csv)",
        "simulate": "Monte Carlo ensemble (ensemble.bin, moments.csv)",
        "analyze": "regularity bounds and slopes (bounds.txt)",
        "run": "every output listed in the config",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="path to a JSON run configuration")
        src.add_argument("--golden", help="name of a shipped configuration")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed-override", type=int, default=None, help="replace the config seed")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.golden:
            cfg = parse_config(golden_config(args.golden), args.seed_override, args.out)
        else:
            cfg = load_config(args.config, args.seed_override, args.out)
        if cfg.out is None:
            raise ConfigError("no output directory: pass --out or set 'out'", "out")
        manifest = run(cfg, args.command)
    except ConfigError as exc:
        print(f"config error [{exc.field}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InadmissibleParametersError as exc:
        print(f"config error [params]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NUMERIC
    except FracSpdeError as exc:
        print(f"config error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for entry in manifest["files"]:
        print(f"{entry['sha256']}  {entry['file']}")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
