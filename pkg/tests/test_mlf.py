import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracspde.errors import GridError, ParameterDomainError
from fracspde.mlf import TimeGrid, caputo_l1, eval_mlf, mlf_envelope


def oracle(beta, x):
    """E_beta(-x) in high precision.

    Series for ``x**(1/beta) <= 60``; otherwise the asymptotic expansion,
    whose optimal truncation error is of order ``exp(-x**(1/beta))``.
    """
    y = x ** (1.0 / beta)
    if y <= 60:
        with mpmath.workdps(int(30 + y / 2)):
            b, z = mpmath.mpf(beta), -mpmath.mpf(x)
            return float(mpmath.nsum(lambda j: z**j / mpmath.gamma(b * j + 1), [0, mpmath.inf]))
    with mpmath.workdps(30):
        z = mpmath.mpf(x)
        total = mpmath.mpf(0)
        prev = mpmath.inf
        for k in range(1, 400):
            # |1/Gamma(1 - beta k)| oscillates; stop on its smooth envelope
            env = mpmath.gamma(beta * k) / z**k
            if env > prev:
                break
            prev = env
            g = 1 - beta * k
            if g == int(g) and g <= 0:
                continue  # 1/Gamma vanishes
            total += -((-z) ** (-k)) / mpmath.gamma(g)
        return float(total)


def test_named_values():
    assert eval_mlf(1.0, 1.0) == pytest.approx(math.exp(-1.0), abs=1e-15)
    assert eval_mlf(0.3, 0.0) == 1.0
    assert eval_mlf(0.5, 1.0) == pytest.approx(0.4275835761558070, abs=1e-13)


@pytest.mark.parametrize("beta", [0.1, 0.25, 0.5, 0.7, 0.9, 0.99])
@pytest.mark.parametrize("x", [1e-6, 0.3, 2.0, 7.5, 25.0, 80.0])
def test_against_series_oracle(beta, x):
    assert eval_mlf(beta, x) == pytest.approx(oracle(beta, x), abs=1e-12, rel=1e-10)


def test_array_shape_and_type():
    x = np.linspace(0, 5, 12).reshape(3, 4)
    v = eval_mlf(0.6, x)
    assert v.shape == (3, 4)
    assert isinstance(eval_mlf(0.6, 1.0), float)


@pytest.mark.parametrize("beta,x", [(0.0, 1.0), (1.2, 1.0), (0.5, -1.0), (0.5, float("nan"))])
def test_domain_errors(beta, x):
    with pytest.raises(ParameterDomainError):
        eval_mlf(beta, x)


def test_envelope_examples():
    e = mlf_envelope(0.5, 0.0)
    assert (e.lower, e.upper) == (1.0, 1.0)
    e = mlf_envelope(0.5, 10.0)
    assert e.lower == pytest.approx(1 / (1 + 10 * math.sqrt(math.pi)))
    assert e.upper == pytest.approx(1 / (1 + 10 / math.gamma(1.5)))
    e = mlf_envelope(0.7, 3.2)
    assert e.lower < oracle(0.7, 3.2) < e.upper


def test_envelope_beta_one_convention():
    e = mlf_envelope(1.0, np.array([0.0, 0.5]))
    assert list(e.lower) == [1.0, 0.0]


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.0, 1e5))
def test_inside_envelope_and_unit_interval(beta, x):
    v = eval_mlf(beta, x)
    e = mlf_envelope(beta, x)
    assert e.lower <= v <= e.upper
    assert 0.0 < v <= 1.0


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.0, 1e3), st.floats(1e-6, 10.0))
def test_completely_monotone_decreasing(beta, x, dx):
    assert eval_mlf(beta, x + dx) <= eval_mlf(beta, x)


def test_caputo_constant_is_zero():
    g = TimeGrid.uniform(1.0, 65)
    d = caputo_l1(np.full(65, 3.0), g, 0.4)
    assert d.shape == (64,)
    assert np.max(np.abs(d)) == 0.0


def test_caputo_linear_function():
    g = TimeGrid.uniform(1.0, 257)
    t = g.points
    d = caputo_l1(t, g, 0.5)
    ref = t[1:] ** 0.5 / math.gamma(1.5)
    # the L1 scheme is exact on piecewise-linear data
    assert np.max(np.abs(d - ref)) < 1e-12


def test_caputo_mode_equation_refines():
    res = []
    for m in (129, 257, 513):
        g = TimeGrid.uniform(1.0, m)
        u = eval_mlf(0.6, 2.0 * g.points**0.6)
        r = caputo_l1(u, g, 0.6) + 2.0 * u[1:]
        res.append(np.max(np.abs(r[g.points[1:] >= 0.25])))
    assert res[0] > res[1] > res[2]


def test_caputo_beta_one_backward_difference():
    g = TimeGrid.uniform(1.0, 11)
    u = g.points**2
    assert np.allclose(caputo_l1(u, g, 1.0), np.diff(u) / 0.1)


def test_caputo_errors():
    with pytest.raises(GridError):
        caputo_l1([0.0, 1.0], TimeGrid(np.array([0.0, 1.0])), 0.5)
    with pytest.raises(GridError):
        caputo_l1(np.zeros(4), TimeGrid(np.array([0.0, 0.1, 0.5, 1.0])), 0.5)


def test_timegrid():
    g = TimeGrid.uniform(2.0, 5)
    assert g.is_uniform and g.step == pytest.approx(0.5) and len(g) == 5
    with pytest.raises(GridError):
        TimeGrid(np.array([0.0, 0.5, 0.4]))
