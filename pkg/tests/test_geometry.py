import math

import numpy as np
import pytest

from gyron.algebra import build_matrices, make_label, validate_params
from gyron.geometry import (QuantumMetric, SymbolCalculus, _log_L_energy_route, _log_L_raw,
                            classical_limit_deviation, default_grid, first_order_correction,
                            gram_matrix, integral_identities, kernel, measure_density,
                            measure_endpoint_exponents, probability_function, quantum_coords,
                            quantum_restriction, star_product, star_product_quadrature,
                            wick_symbol, write_geometry_table)
from gyron.generators import GeneratorPolynomial

SWEEP = [((l, m), r, q, p) for (l, m) in [(1, 1), (1, 2), (2, 3)] for r in range(7)
         for q in range(l) for p in range(m)]


def _setup(lm, r, q=0, p=0, hbar=1.0, n_phi=None):
    params = validate_params(*lm, hbar)
    label = make_label(params, r, q, p)
    return params, label, default_grid(params, label, n_phi=n_phi)


@pytest.mark.parametrize("lm,r,q,p", SWEEP)
def test_gram_is_identity(lm, r, q, p):
    params, label, grid = _setup(lm, r, q, p)
    measure = measure_density(params, label, grid)
    gram = gram_matrix(measure, grid)
    np.testing.assert_allclose(gram, np.eye(r + 1), atol=1e-6)
    assert measure.ratio == pytest.approx(1.0, rel=1e-6)


@pytest.mark.parametrize("lm,r,q,p", SWEEP[::3])
def test_integral_identities(lm, r, q, p):
    params, label, grid = _setup(lm, r, q, p, hbar=0.37)
    ident = integral_identities(params, label, grid)
    assert ident["omega_integral"] == pytest.approx(r, abs=1e-8)
    assert ident["dm_integral"] == pytest.approx(r + 1, abs=1e-4)
    if r >= 1:
        assert ident["ricci_integral"] == pytest.approx(-2, abs=1e-6)


def test_metric_su2_closed_form():
    params, label, _ = _setup((1, 1), 5, hbar=0.3)
    x = np.geomspace(1e-3, 1e3, 30)
    g = QuantumMetric(kernel(params, label)).g(x)
    np.testing.assert_allclose(g, 0.3 * 5 / (1 + x) ** 2, rtol=1e-12)


@pytest.mark.parametrize("lm,q,p", [((1, 2), 0, 1), ((2, 3), 1, 2), ((3, 4), 2, 0)])
def test_metric_finite_at_poles(lm, q, p):
    (l, m), r, h = lm, 4, 0.5
    params, label, _ = _setup(lm, r, q, p, hbar=h)
    met = QuantumMetric(kernel(params, label))
    g0, ginf = met.pole_values()
    N = p + r * m
    expected = h ** (m - l + 1) * math.factorial(N) * math.factorial(q) / (
        math.factorial(N - m) * math.factorial(q + l))
    assert g0 == pytest.approx(expected, rel=1e-12)
    assert ginf > 0
    assert met.g(np.array([0.0]))[0] == g0
    assert met.g(np.array([1e-14]))[0] == pytest.approx(g0, rel=1e-6)


def test_printed_measure_form_ratio():
    params, label, grid = _setup((2, 3), 3, 1, 2)
    printed = measure_density(params, label, grid, form="printed")
    assert printed.log_ratio == pytest.approx(printed.expected_log_ratio, abs=1e-8)
    # with l != m the printed density does not reproduce the Gram matrix
    raw = measure_density(params, label, grid, form="printed")
    gram = gram_matrix(raw, grid)
    assert np.abs(gram - np.eye(4)).max() > 0.1


def test_energy_route_agrees():
    params, label, grid = _setup((2, 3), 4, 1, 1, hbar=0.5)
    s = grid.s[::7]
    np.testing.assert_allclose(_log_L_energy_route(params, label, s), _log_L_raw(params, label, s),
                               atol=1e-10)


@pytest.mark.parametrize("lm,q,p", [((1, 1), 0, 0), ((1, 2), 0, 1), ((2, 3), 1, 2), ((3, 4), 2, 1)])
def test_measure_endpoint_exponents(lm, q, p):
    params, label, grid = _setup(lm, 3, q, p)
    rep = measure_endpoint_exponents(measure_density(params, label, grid))
    for side in rep.values():
        assert abs(side["slope"] - side["expected"]) < 0.02


def test_symbols_of_simple_operators():
    params, label, grid = _setup((1, 1), 6, hbar=0.2, n_phi=8)
    one = wick_symbol(np.eye(7), params, label, grid)
    np.testing.assert_allclose(one.values, 1.0, atol=1e-12)
    a1 = quantum_coords(params, label, grid)["a1"]
    x = grid.x[:, None]
    np.testing.assert_allclose(a1.values, np.broadcast_to(0.2 * 6 / (1 + x), grid.shape), rtol=1e-10)


def test_casimir_symbol_constant():
    params, label, grid = _setup((2, 3), 5, 1, 2, hbar=0.4, n_phi=8)
    G = build_matrices(params, label)
    sym = wick_symbol(G.energy, params, label, grid)
    np.testing.assert_allclose(sym.values, label.energy, rtol=1e-11)


def test_laplacian_matches_finite_differences():
    params, label, _ = _setup((1, 2), 5, hbar=0.3)
    G = build_matrices(params, label)
    F = G.a_plus @ G.a1 + G.a_minus
    calc = SymbolCalculus(params, label)
    s0, phi0, h = np.array([-0.7, 0.4, 1.3]), 0.37, 1e-3

    def f(s, phi):
        return calc.at_points(F, np.exp(s / 2 + 1j * phi))

    f_ss = (f(s0 + h, phi0) - 2 * f(s0, phi0) + f(s0 - h, phi0)) / h**2
    f_pp = (f(s0, phi0 + h) - 2 * f(s0, phi0) + f(s0, phi0 - h)) / h**2
    _, _, var = kernel(params, label).weights(s0)
    fd = 2 * (f_ss + f_pp / 4) / (params.hbar * var)
    lap = calc.at_points(F, np.exp(s0 / 2 + 1j * phi0), "laplace") * 2 / (params.hbar * var)
    np.testing.assert_allclose(lap, fd, rtol=1e-5)


def test_star_product_quadrature_matches_operator_product():
    params, label, grid = _setup((1, 2), 4, 0, 1, hbar=0.5)
    G = build_matrices(params, label)
    measure = measure_density(params, label, grid)
    a = np.array([0.3 + 0.4j, -1.2 + 0.1j])
    quad = star_product_quadrature(G.a_plus, G.a_minus + G.a1, params, label, a, grid, measure)
    direct = SymbolCalculus(params, label).at_points(G.a_plus @ (G.a_minus + G.a1), a)
    np.testing.assert_allclose(quad, direct, rtol=1e-8)
    sp = star_product(G.a_plus, G.a_minus, params, label, grid)
    assert sp.values.shape == grid.shape


def test_probability_function_normalized():
    params, label, grid = _setup((2, 3), 3, 1, 0, hbar=0.5)
    measure = measure_density(params, label, grid)
    pa = probability_function(params, label, 0.7 - 0.2j, grid).values
    assert np.all(pa <= 1 + 1e-12)
    w = (np.exp(measure.log_dm_s()) * grid.ws)[:, None] * grid.wphi[None, :]
    assert (pa * w).sum() / (2 * np.pi * params.hbar) == pytest.approx(1.0, abs=1e-8)


def _restriction_remainders(lm, key, tensor):
    l, m = lm
    F = GeneratorPolynomial({key: 1.0})
    out = []
    for h in (0.05, 0.025, 0.0125):
        params = validate_params(l, m, h)
        label = make_label(params, int(round(1 / (l * m * h))))
        grid = default_grid(params, label, n_phi=8)
        c = quantum_coords(params, label, grid)
        vals = [c[n].values for n in ("a_plus", "a1", "a2", "a_minus")]
        qr = quantum_restriction(F, params, label, grid).values
        e1 = first_order_correction(F, params, label, grid, tensor).values
        mask = (grid.s > -3) & (grid.s < 3)
        out.append(np.abs(qr - F.evaluate(*vals) - h * e1)[mask].max())
    return np.array(out)


def test_first_order_restriction_diagonal_terms():
    # polynomials in A1, A2 only: both tensors coincide and give O(h^2)
    for tensor in ("symmetric", "ordered"):
        res = _restriction_remainders((1, 2), (0, 2, 1, 0), tensor)
        assert np.all(res[:-1] / res[1:] > 3.2)


def test_first_order_restriction_ordered_tensor():
    res = _restriction_remainders((1, 2), (1, 0, 0, 1), "ordered")
    assert np.all(res[:-1] / res[1:] > 3.2)
    sym = _restriction_remainders((1, 2), (1, 0, 0, 1), "symmetric")
    assert np.all(sym[:-1] / sym[1:] < 2.5)


@pytest.mark.parametrize("lm", [(1, 2), (2, 3), (3, 4)])
def test_classical_limit_halves(lm):
    l, m = lm
    devs = []
    for r in (20, 40):
        params = validate_params(l, m, 1.0 / (l * m * r))
        devs.append(classical_limit_deviation(params, make_label(params, r)))
    assert 1.7 <= devs[0] / devs[1] <= 2.4


def test_geometry_table(tmp_path):
    params, label, grid = _setup((1, 2), 3)
    path = tmp_path / "g.csv"
    write_geometry_table(path, params, label, grid)
    head = path.read_text().splitlines()
    assert head[0] == "x,k,g,rho_d,L,Lk"
    assert len(head) == grid.s.size + 1
