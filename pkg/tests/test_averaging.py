import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gyron.algebra import build_matrices, make_label, validate_params
from gyron.averaging import (BosonicPolynomial, NotExpressed, energy_on_fock, express_in_generators,
                             load_perturbation, normal_order, project_resonant, realize_in_rep,
                             realize_on_fock)
from gyron.errors import CutoffTooSmall, InputError
from gyron.fock import build_ladder
from gyron.generators import GeneratorPolynomial

from strategies import COPRIME, params_and_label

exps = st.tuples(*[st.integers(0, 3)] * 4)
coefs = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)
bosonic = st.dictionaries(exps, coefs, min_size=1, max_size=5).map(BosonicPolynomial)


@st.composite
def resonant_poly(draw, params):
    """Random resonant polynomial built from ``(nu - mu) = k (-m, l)``."""
    l, m = params.l, params.m
    terms = {}
    for _ in range(draw(st.integers(1, 4))):
        k = draw(st.integers(-1, 1))
        mu1, mu2 = draw(st.integers(0, 2)), draw(st.integers(0, 2))
        nu1, nu2 = mu1 - k * m, mu2 + k * l
        if nu1 < 0 or nu2 < 0:
            mu1, mu2 = mu1 + k * m, mu2 - k * l
            nu1, nu2 = mu1 - k * m, mu2 + k * l
        if min(nu1, nu2, mu1, mu2) < 0:
            continue
        terms[(nu1, nu2, mu1, mu2)] = draw(coefs)
    poly = BosonicPolynomial(terms or {(1, 0, 1, 0): 1.0})
    return poly + poly.adjoint()


# worked examples of the first-order average

def test_projection_keeps_exchange_terms():
    B = BosonicPolynomial({(1, 0, 0, 1): 1.0, (0, 1, 1, 0): 1.0})
    assert project_resonant(B, validate_params(1, 1, 1.0)).F1 == B


@pytest.mark.parametrize("lm", COPRIME)
def test_projection_keeps_number_operator(lm):
    B = BosonicPolynomial({(1, 0, 1, 0): 1.0})
    assert project_resonant(B, validate_params(*lm, 1.0)).F1 == B


def test_projection_drops_linear_terms():
    B = BosonicPolynomial({(0, 0, 1, 0): 1.0, (1, 0, 0, 0): 1.0})
    assert project_resonant(B, validate_params(2, 3, 1.0)).F1.terms == {}


def test_exchange_realizes_su2_raising_plus_lowering():
    params = validate_params(1, 1, 1.0)
    label = make_label(params, 2)
    F1 = BosonicPolynomial({(1, 0, 0, 1): 1.0, (0, 1, 1, 0): 1.0})
    H = realize_in_rep(F1, params, label)
    s2 = np.sqrt(2)
    np.testing.assert_allclose(H, [[0, s2, 0], [s2, 0, s2], [0, s2, 0]], atol=1e-13)
    G = build_matrices(params, label)
    np.testing.assert_allclose(H, G.a_plus + G.a_minus, atol=1e-13)


@given(params_and_label(max_r=6, hbars=(1.0, 0.3)))
def test_number_operator_is_a1(pl):
    params, label = pl
    H = realize_in_rep(BosonicPolynomial({(1, 0, 1, 0): 1.0}), params, label)
    G = build_matrices(params, label)
    assert np.allclose(H, np.diag(np.diag(H)))
    np.testing.assert_allclose(H, G.a1, atol=1e-12 * max(1.0, np.abs(G.a1).max()))


# structural properties

@given(st.sampled_from(COPRIME), bosonic, bosonic)
def test_projection_linear_idempotent_and_adjoint(lm, P, Q):
    params = validate_params(*lm, 1.0)
    F = project_resonant(P, params).F1
    assert project_resonant(F, params).F1 == F
    assert project_resonant(P + Q, params).F1 == F + project_resonant(Q, params).F1
    assert project_resonant(P.adjoint(), params).F1 == F.adjoint()
    assert project_resonant(P + P.adjoint(), params).F1.is_hermitian()


@given(st.sampled_from(COPRIME), st.data())
def test_realized_commutes_with_energy(lm, data):
    params = validate_params(*lm, 0.5)
    F = data.draw(resonant_poly(params))
    cutoff = 12
    A = realize_on_fock(F, params, cutoff)
    E = energy_on_fock(params, cutoff)
    # E is diagonal with integer grades times hbar, so the commutator is exactly zero
    assert abs(A @ E - E @ A).max() == 0


@given(params_and_label(max_r=5, hbars=(1.0, 0.5)), st.data())
def test_rep_matrices_hermitian_and_block(pl, data):
    params, label = pl
    F = data.draw(resonant_poly(params))
    H = realize_in_rep(F, params, label)
    assert np.abs(H - H.conj().T).max() <= 1e-13 * max(1.0, np.abs(H).max())
    E = build_matrices(params, label).energy
    np.testing.assert_array_equal(E, label.energy * np.eye(len(E)))


@given(params_and_label(max_r=5, hbars=(1.0, 0.37)), st.data())
def test_express_matches_realize(pl, data):
    params, label = pl
    F = data.draw(resonant_poly(params))
    P = express_in_generators(F, params)
    assert isinstance(P, GeneratorPolynomial)
    direct = realize_in_rep(F, params, label)
    via = P.matrix(build_matrices(params, label))
    scale = max(1.0, np.abs(direct).max())
    assert np.abs(direct - via).max() <= 1e-10 * scale


def test_express_worked_examples():
    p12 = validate_params(1, 2, 1.0)
    assert express_in_generators(BosonicPolynomial({(0, 1, 2, 0): 1.0}), p12) == \
        GeneratorPolynomial.generator("a_plus")
    p11 = validate_params(1, 1, 1.0)
    assert express_in_generators(BosonicPolynomial({(1, 0, 1, 0): 1.0}), p11) == \
        GeneratorPolynomial.generator("a1")
    assert express_in_generators(BosonicPolynomial({(1, 0, 0, 1): 1.0}), p11) == \
        GeneratorPolynomial.generator("a_minus")
    out = express_in_generators(BosonicPolynomial({(1, 0, 0, 0): 1.0}), p11)
    assert isinstance(out, NotExpressed) and out.terms == ((1, 0, 0, 0),)


def test_realize_errors():
    params = validate_params(1, 2, 1.0)
    label = make_label(params, 3, 0, 1)
    with pytest.raises(InputError):
        realize_in_rep(BosonicPolynomial({(1, 0, 0, 0): 1.0}), params, label)
    with pytest.raises(CutoffTooSmall):
        realize_in_rep(BosonicPolynomial({(1, 0, 1, 0): 1.0}), params, label, cutoff=2)


# normal ordering

words = st.lists(st.sampled_from(["b1", "b2", "b1*", "b2*"]), max_size=6)


@given(words, st.sampled_from([1.0, 0.3]))
def test_normal_order_matches_matrix_product(word, hbar):
    params = validate_params(1, 1, hbar)
    cutoff = 14
    lad = build_ladder(params, cutoff)
    mats = {"b1": lad.b1, "b2": lad.b2, "b1*": lad.b1_dag, "b2*": lad.b2_dag}
    prod = np.eye(len(lad.basis))
    for f in word:
        prod = prod @ mats[f].toarray()
    ordered = realize_on_fock(normal_order(word, hbar), params, cutoff).toarray()
    # columns far from the truncation edge are exact
    keep = lad.basis.states.sum(axis=1) <= cutoff - len(word)
    np.testing.assert_allclose(ordered[:, keep], prod[:, keep], atol=1e-10)


def test_normal_order_commutator_and_limit():
    assert normal_order(["b1", "b1*"], 0.5) == BosonicPolynomial({(1, 0, 1, 0): 1.0, (0, 0, 0, 0): 0.5})
    with pytest.raises(InputError):
        normal_order(["b1"] * 9, 1.0)
    with pytest.raises(InputError):
        normal_order(["c1"], 1.0)


def test_product_wick_rule():
    # b1^2 b1*^2 = b1*^2 b1^2 + 4 h b1* b1 + 2 h^2
    P = BosonicPolynomial({(0, 0, 2, 0): 1.0})
    Q = BosonicPolynomial({(2, 0, 0, 0): 1.0})
    assert P.mul(Q, 0.5) == BosonicPolynomial({(2, 0, 2, 0): 1.0, (1, 0, 1, 0): 2.0, (0, 0, 0, 0): 0.5})


def test_perturbation_json(tmp_path):
    B = BosonicPolynomial({(0, 2, 1, 0): 1.5 - 0.5j, (1, 0, 0, 2): 1.5 + 0.5j})
    path = tmp_path / "b.json"
    path.write_text(json.dumps(B.to_json()))
    assert load_perturbation(path) == B
    doc = json.loads(path.read_text())
    assert {"nu", "mu", "re", "im"} <= set(doc["terms"][0])
    path.write_text("{not json")
    with pytest.raises(InputError):
        load_perturbation(path)
