import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracspde.domains import DomainSpec, build_eigensystem
from fracspde.errors import InadmissibleParametersError, InsufficientModesError, ParameterDomainError
from fracspde.spectrum import (
    FracParams,
    build_truncation,
    summability_check,
    summability_tail_bound,
    transform_eigenvalue,
    weyl_constant,
    weyl_diagnostic,
)


def test_transform_examples():
    assert transform_eigenvalue(3.0, FracParams(0.5, 2.0, 0.0)) == pytest.approx(3.0)
    assert transform_eigenvalue(1.0, FracParams(0.5, 1.0, 1.0)) == pytest.approx(math.sqrt(2))
    assert transform_eigenvalue(2.0, FracParams(0.5, 2.0, 0.0, (0, 0, 1))) == pytest.approx(4.0)


def test_transform_overflow_and_domain():
    with pytest.raises(ParameterDomainError):
        transform_eigenvalue(1e300, FracParams(0.5, 4.0, 0.0))
    with pytest.raises(ParameterDomainError):
        transform_eigenvalue(-1.0, FracParams(0.5))


@pytest.mark.parametrize(
    "kw",
    [dict(beta=0.0), dict(beta=1.5), dict(beta=0.5, alpha=-1.0), dict(beta=0.5, poly_coeffs=(1.0, 0.0)),
     dict(beta=0.5, alpha=0.0, gamma=0.0), dict(beta=0.5, poly_coeffs=(-1.0, 1.0))],
)
def test_params_validation(kw):
    with pytest.raises(ParameterDomainError):
        FracParams(**kw)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 1e4), st.floats(0.0, 3.0), st.floats(0.0, 3.0), st.floats(0.0, 2.0))
def test_transform_monotone(g, alpha, gexp, c0):
    if alpha + gexp == 0:
        return
    p = FracParams(0.5, alpha, gexp, (c0, 1.0))
    assert transform_eigenvalue(g * 1.01, p) >= transform_eigenvalue(g, p)


def test_truncation_examples():
    line = build_eigensystem(DomainSpec.interval(1.0), 10)
    tr = build_truncation(line, FracParams(0.5, 2.0, 0.0), 3)
    assert np.allclose(tr.lambdas, np.pi**2 * np.array([1, 4, 9]))
    assert np.array_equal(tr.lambdas, line.gammas[:3])
    sq = build_eigensystem(DomainSpec.rectangle(1.0, 1.0), 5)
    tr = build_truncation(sq, FracParams(0.5, 1.0, 1.0), 2)
    g1, g2 = 2 * np.pi**2, 5 * np.pi**2
    assert tr.lambdas == pytest.approx([math.sqrt(g1 * (1 + g1)), math.sqrt(g2 * (1 + g2))])
    with pytest.raises(InsufficientModesError):
        build_truncation(line, FracParams(0.5), 11)


def test_sandwich_holds():
    sysm = build_eigensystem(DomainSpec.disk(1.0), 300)
    tr = build_truncation(sysm, FracParams(0.3, 2.0, 1.0), 300)
    k = np.arange(1, 301)
    sel = k >= tr.k0
    r = tr.lambdas[sel] / k[sel] ** tr.exponent
    assert np.all(r >= tr.L1) and np.all(r <= tr.L2)


def test_weyl_interval_and_square():
    line = build_eigensystem(DomainSpec.interval(1.0), 200)
    rep = weyl_diagnostic(build_truncation(line, FracParams(0.5), 200))
    assert np.all(np.abs(rep.ratios / np.pi**2 - 1) < 0.01)
    assert rep.limit == pytest.approx(np.pi**2)
    assert weyl_constant(2, 1.0) == pytest.approx(4 * np.pi)
    with pytest.raises(InsufficientModesError):
        weyl_diagnostic(build_truncation(line, FracParams(0.5), 50))


def test_weyl_exponent_doubles_with_square_polynomial():
    sq = build_eigensystem(DomainSpec.rectangle(1.0, 1.0), 400)
    k = np.log(np.arange(200, 401))
    slopes = []
    for coeffs in ((0, 1), (0, 0, 1)):
        tr = build_truncation(sq, FracParams(0.5, 2.0, 0.0, coeffs), 400)
        slopes.append(np.polyfit(k, np.log(tr.lambdas[199:]), 1)[0])
    assert slopes[1] / slopes[0] == pytest.approx(2.0, rel=1e-6)


def test_summability():
    line = build_eigensystem(DomainSpec.interval(1.0), 400)
    p = FracParams(0.5, 2.0, 0.0)
    tr = build_truncation(line, p, 400)
    rep = summability_check(tr, 0.5, 1.0)
    assert np.all(np.diff(rep.partial_sums) > 0)
    later = summability_check(tr, 0.5, 4.0)
    assert later.partial_sums[-1] < rep.partial_sums[-1]
    # the bound dominates the actual remainder
    assert rep.partial_sums[-1] - rep.partial_sums[99] <= summability_tail_bound(tr, 0.5, 1.0, 100)
    with pytest.raises(InadmissibleParametersError):
        summability_check(build_truncation(line, FracParams(0.5, 0.9, 0.0), 10), 0.5, 1.0)
