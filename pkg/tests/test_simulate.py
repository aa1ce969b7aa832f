import io

import numpy as np
import pytest

from fracspde.domains import DomainSpec, build_eigensystem
from fracspde.errors import GridError, InsufficientReplicatesError, ParameterDomainError
from fracspde.kernels import covariance, temporal_variogram
from fracspde.simulate import (
    SimulationPlan,
    ensemble_estimate,
    ensemble_to_csv,
    read_ensemble_binary,
    riemann_expected_covariance,
    riemann_sample,
    sample_ensemble,
    thread_count,
    write_ensemble_binary,
)
from fracspde.spectrum import FracParams, build_truncation


@pytest.fixture(scope="module")
def setup():
    sysm = build_eigensystem(DomainSpec.interval(1.0), 32)
    p = FracParams(0.4, 3.0, 0.0)
    return build_truncation(sysm, p, 8), p


def plan(setup, R=50, seed=3, **kw):
    tr, p = setup
    return SimulationPlan(tr, p, np.linspace(0, 1, 9), np.array([0.2, 0.5, 0.7]), R, seed, **kw)


def test_determinism_and_zero_start(setup):
    a = sample_ensemble(plan(setup, R=1))
    b = sample_ensemble(plan(setup, R=1))
    assert a.values.tobytes() == b.values.tobytes()
    big = sample_ensemble(plan(setup, R=600))
    assert np.all(big.values[:, 0, :] == 0.0)
    # replicate r does not depend on the ensemble size or thread count
    assert np.array_equal(big.values[:1], a.values)
    assert big.values.tobytes() == sample_ensemble(plan(setup, R=600), threads=4).values.tobytes()


def test_seed_changes_output(setup):
    a = sample_ensemble(plan(setup, seed=1))
    b = sample_ensemble(plan(setup, seed=2))
    assert not np.array_equal(a.values, b.values)


def test_moments(setup):
    tr, p = setup
    ens = sample_ensemble(plan(setup, R=4000, seed=11))
    t = ens.times
    targets = [("mean", (t[4], [0.5])), ("mean", (t[8], [0.2]))]
    targets += [("covariance", (t[8], [0.2]), (t[5], [0.7])), ("covariance", (t[3], [0.5]), (t[3], [0.5]))]
    targets += [("increment", (t[8], [0.5]), (t[6], [0.5]))]
    est = ensemble_estimate(ens, targets)
    assert abs(est[0].value) <= 4 * est[0].stderr
    assert abs(est[1].value) <= 4 * est[1].stderr
    ref = covariance(tr, p, t[8], t[5], [0.2], [0.7])
    assert abs(est[2].value - ref) <= 4 * est[2].stderr
    ref = covariance(tr, p, t[3], t[3], [0.5], [0.5])
    assert abs(est[3].value - ref) <= 4 * est[3].stderr
    ref = temporal_variogram(tr, p, [0.5], t[8], [t[6]]).values[0]
    assert abs(est[4].value - ref) <= 4 * est[4].stderr


def test_riemann_monotone_toward_kernel(setup):
    tr, p = setup
    x = np.array([0.3])
    errs = []
    for m in (5, 9, 17, 33):
        pl = SimulationPlan(tr, p, np.linspace(0, 1, m), x, 1, 0, method="riemann")
        v = riemann_expected_covariance(pl, m - 1, m - 1, 0, 0)
        errs.append(abs(v - covariance(tr, p, 1.0, 1.0, x, x)))
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_riemann_sampler_matches_its_covariance(setup):
    tr, p = setup
    pl = SimulationPlan(tr, p, np.linspace(0, 1, 9), np.array([0.4]), 4000, 5, method="riemann")
    ens = riemann_sample(pl)
    assert np.all(ens.values[:, 0, :] == 0.0)
    est = ensemble_estimate(ens, [("covariance", (1.0, [0.4]), (0.5, [0.4]))])[0]
    assert abs(est.value - riemann_expected_covariance(pl, 8, 4, 0, 0)) <= 4 * est.stderr


def test_binary_and_csv(setup):
    ens = sample_ensemble(plan(setup, R=3))
    buf = io.BytesIO()
    write_ensemble_binary(ens, buf)
    buf.seek(0)
    back = read_ensemble_binary(buf)
    assert np.array_equal(back["values"], ens.values) and back["seed"] == 3
    text = ensemble_to_csv(ens)
    assert text.splitlines()[0] == "replicate,t,x0,value"
    assert len(text.splitlines()) == 1 + 3 * 9 * 3


def test_errors(setup, monkeypatch):
    tr, p = setup
    with pytest.raises(ParameterDomainError):
        SimulationPlan(tr, p, np.linspace(0, 1, 5), np.array([0.5]), 0, 1)
    with pytest.raises(GridError):
        SimulationPlan(tr, p, np.array([0.0]), np.array([0.5]), 5, 1)
    with pytest.raises(InsufficientReplicatesError):
        ensemble_estimate(sample_ensemble(plan(setup, R=2)), [("mean", (1.0, [0.5]))])
    monkeypatch.setenv("FRACSPDE_THREADS", "3")
    assert thread_count() == 3
    assert thread_count(2) == 2
