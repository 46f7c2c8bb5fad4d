"""Hypothesis strategies shared by the test modules."""

from hypothesis import strategies as st

from gyron.algebra import make_label, validate_params

COPRIME = [(1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2), (3, 4), (4, 3)]


@st.composite
def params_and_label(draw, max_r=12, hbars=(1.0, 0.1, 0.37, 2.5)):
    l, m = draw(st.sampled_from(COPRIME))
    hbar = draw(st.sampled_from(hbars))
    params = validate_params(l, m, hbar)
    r = draw(st.integers(0, max_r))
    q = draw(st.integers(0, l - 1))
    p = draw(st.integers(0, m - 1))
    return params, make_label(params, r, q, p)
