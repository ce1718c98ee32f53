import math

import numpy as np
import pytest

from txnav.numopt import BracketError, OptimizerSettings, bisect, integrate_01, nelder_mead


def quad_objective(target):
    def f(w):
        return float(np.sum((np.asarray(w) - target) ** 2))

    return f


def test_nelder_mead_quadratic():
    settings = OptimizerSettings(tol_f=1e-12, max_iter=2000, max_fev=4000,
                                 lower=[-10, -10], upper=[10, 10])
    x, fx = nelder_mead(quad_objective(np.array([3.0, 4.0])), [0.0, 0.0], settings)
    np.testing.assert_allclose(x, [3.0, 4.0], atol=1e-3)
    assert fx < 1e-6


def test_nelder_mead_descent_from_minimum():
    f = quad_objective(np.array([1.0, -2.0]))
    x, fx = nelder_mead(f, [1.0, -2.0], OptimizerSettings(tol_f=1e-12, lower=[-5, -5], upper=[5, 5]))
    assert fx <= f(np.array([1.0, -2.0]))
    assert fx <= 1e-12


def test_nelder_mead_clamps_to_bounds():
    settings = OptimizerSettings(tol_f=1e-12, max_iter=2000, max_fev=4000,
                                 lower=[-10, -10], upper=[10, 10])
    x, _ = nelder_mead(quad_objective(np.array([20.0, 0.0])), [0.0, 0.0], settings)
    assert x[0] == pytest.approx(10.0, abs=1e-3)
    assert -10.0 <= x[0] <= 10.0 and -10.0 <= x[1] <= 10.0


def test_nelder_mead_never_leaves_box():
    lower, upper = [-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]
    seen = []

    def f(w):
        seen.append(np.array(w))
        return float(np.sum((np.asarray(w) - 5.0) ** 2))

    x, fx = nelder_mead(f, [0.0, 0.0, 0.0], OptimizerSettings(tol_f=1e-10, lower=lower, upper=upper))
    for w in seen:
        assert np.all(w >= -1.0 - 1e-12) and np.all(w <= 1.0 + 1e-12)
    np.testing.assert_allclose(x, [1.0, 1.0, 1.0], atol=1e-3)
    assert fx <= f(np.zeros(3))


def test_nelder_mead_rejects_nonfinite_start():
    with pytest.raises(ValueError):
        nelder_mead(lambda w: float("nan"), [0.0], OptimizerSettings())


def test_integrate_constant_and_linear():
    assert integrate_01(lambda s: 3.5) == pytest.approx(3.5, rel=1e-12)
    assert integrate_01(lambda s: s) == pytest.approx(0.5, rel=1e-12)


def test_integrate_piecewise_kink():
    assert integrate_01(lambda s: max(0.0, 1.0 - 2.0 * s)) == pytest.approx(0.25, rel=1e-8)


@pytest.mark.parametrize("degree", [2, 3, 4, 5])
def test_integrate_polynomials_to_tolerance(degree):
    rng = np.random.default_rng(degree)
    coeffs = rng.uniform(-3, 3, size=degree + 1)
    exact = sum(c / (k + 1) for k, c in enumerate(coeffs))
    got = integrate_01(lambda s: sum(c * s**k for k, c in enumerate(coeffs)))
    assert got == pytest.approx(exact, rel=1e-8, abs=1e-10)


def test_integrate_rejects_nonfinite():
    with pytest.raises(ValueError):
        integrate_01(lambda s: float("inf") if s > 0.4 else 1.0)


def test_bisect_linear_and_sqrt2():
    assert bisect(lambda t: t - 1.0, 0.0, 2.0, tol=1e-12) == pytest.approx(1.0, abs=1e-11)
    assert bisect(lambda t: t * t - 2.0, 0.0, 2.0, tol=1e-12) == pytest.approx(math.sqrt(2), abs=1e-11)


def test_bisect_root_at_endpoint():
    assert bisect(lambda t: t, 0.0, 2.0) == 0.0


def test_bisect_requires_bracket():
    with pytest.raises(BracketError):
        bisect(lambda t: t + 1.0, 0.0, 2.0)


def test_bisect_iteration_bound():
    calls = []

    def g(t):
        calls.append(t)
        return t - math.pi / 4

    tol = 1e-9
    bisect(g, 0.0, 2.0, tol=tol)
    assert len(calls) <= math.ceil(math.log2(2.0 / tol)) + 2
