import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gyron.algebra import validate_params
from gyron.errors import SingularAtPole
from gyron.leaf import (LeafChart, casimir_gradients, classical_coords, classical_density_log,
                        classical_form_density, classical_volume, jacobi_residual, leaf_actions,
                        poisson_tensor, pole_asymptotics_check, solve_alpha, write_leaf_table)

from strategies import COPRIME

points = st.tuples(*[st.floats(0.05, 3.0)] * 4)


@given(st.sampled_from(COPRIME), points)
def test_jacobi_identity(lm, A):
    params = validate_params(*lm, 1.0)
    scale = max(1.0, np.max(np.abs(A))) ** (2 * (lm[0] + lm[1]))
    assert jacobi_residual(A, params) <= 1e-12 * scale


@given(st.sampled_from(COPRIME), points)
def test_casimirs_are_central(lm, A):
    params = validate_params(*lm, 1.0)
    pi = poisson_tensor(A, params)
    gk, gc = casimir_gradients(A, params)
    np.testing.assert_allclose(pi @ gk, 0, atol=1e-12)
    scale = max(1.0, np.max(np.abs(A))) ** (2 * (lm[0] + lm[1]))
    np.testing.assert_allclose(pi @ gc, 0, atol=1e-12 * scale)


@given(st.sampled_from(COPRIME), st.floats(0.1, 5.0), st.floats(-30, 30))
def test_leaf_actions_solve_constraints(lm, E, s):
    l, m = lm
    params = validate_params(l, m, 1.0)
    a1, a2 = leaf_actions(E, None, params, log_x=s)
    assert l * a1 + m * a2 == pytest.approx(E, rel=1e-13)
    assert l * np.log(a2) - m * np.log(a1) == pytest.approx(s, abs=1e-10)


def test_leaf_poles():
    params = validate_params(2, 3, 1.0)
    a1, a2 = leaf_actions(2.0, np.array([0.0, np.inf]), params)
    np.testing.assert_allclose(a1, [1.0, 0.0])
    np.testing.assert_allclose(a2, [0.0, 2.0 / 3.0])


def test_alpha_range_and_monotone():
    params = validate_params(2, 3, 1.0)
    chart = LeafChart(params, 1.5)
    x = np.geomspace(1e-6, 1e6, 200)
    alpha = chart.alpha(x)
    lo, hi = chart.alpha_range
    assert np.all(np.diff(alpha) > 0)
    assert lo < alpha.min() and alpha.max() < hi


@given(st.sampled_from(COPRIME), st.floats(0.2, 3.0))
def test_coords_on_casimir_surface(lm, E):
    l, m = lm
    params = validate_params(l, m, 1.0)
    z0 = np.array([0.3 + 0.2j, -1.5 + 0.7j, 2.0j])
    a1, a2, a3, a4 = classical_coords(E, params, z0)
    np.testing.assert_allclose(l * a1 + m * a2, E, rtol=1e-13)
    np.testing.assert_allclose(a3**2 + a4**2, a1**m * a2**l, rtol=1e-10)


def test_density_consistency():
    params = validate_params(2, 3, 1.0)
    x = np.geomspace(1e-3, 1e3, 50)
    g0 = classical_form_density(1.2, params, x)
    np.testing.assert_allclose(classical_density_log(1.2, params, np.log(x)), x * g0, rtol=1e-13)
    # g0 is the derivative of alpha_E
    h = 1e-6
    fd = (solve_alpha(1.2, params, x * (1 + h)) - solve_alpha(1.2, params, x * (1 - h))) / (2 * h * x)
    np.testing.assert_allclose(fd, g0, rtol=1e-6)


def test_pole_singularity():
    with pytest.raises(SingularAtPole):
        classical_form_density(1.0, validate_params(2, 1, 1.0), 0.0)
    # l = 1 is finite at the pole with the value (E/l)^m
    assert classical_form_density(1.5, validate_params(1, 2, 1.0), 0.0) == pytest.approx(1.5**2)


@pytest.mark.parametrize("lm", COPRIME)
@pytest.mark.parametrize("E", [0.5, 1.0, 3.0])
def test_classical_volume(lm, E):
    l, m = lm
    assert classical_volume(E, validate_params(l, m, 1.0)) == pytest.approx(E / (l * m), rel=1e-8)


@pytest.mark.parametrize("lm", COPRIME)
def test_pole_exponents(lm):
    rep = pole_asymptotics_check(1.0, validate_params(*lm, 1.0))
    for side in ("south", "north"):
        assert abs(rep[side]["slope"] - rep[side]["slope_expected"]) < 0.02


def test_leaf_table(tmp_path):
    path = tmp_path / "leaf.csv"
    write_leaf_table(path, 1.0, validate_params(1, 2, 1.0), np.geomspace(0.1, 10, 7))
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["x", "alpha", "g0", "A1", "A2"]
    assert len(rows) == 8
