import csv
import json

import numpy as np
import pytest

from gyron.algebra import build_matrices, make_label, validate_params
from gyron.errors import MultiWell, NotHermitian
from gyron.geometry import integral_identities
from gyron.spectra import (EffectiveSymbol, SpectrumSetup, area_function, bs_spectrum, check_single_well,
                           compare_spectra, convergence_report, exact_spectrum, write_area_csv)


def _rep(lm, r, hbar, q=0, p=0):
    params = validate_params(*lm, hbar)
    label = make_label(params, r, q, p)
    return params, label, build_matrices(params, label)


def test_exact_spectrum_su2():
    params, label, G = _rep((1, 1), 9, 0.2)
    ev = exact_spectrum(G.a_plus + G.a_minus)
    np.testing.assert_allclose(ev, 0.2 * (2 * np.arange(10) - 9), atol=1e-10)


def test_exact_spectrum_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        exact_spectrum(np.array([[0.0, 1.0], [0.0, 0.0]]))


@pytest.mark.parametrize("lm,q,p", [((1, 1), 0, 0), ((1, 2), 0, 1), ((2, 3), 1, 2)])
def test_bs_exact_for_number_operator(lm, q, p):
    params, label, G = _rep(lm, 8, 0.1, q, p)
    rep = compare_spectra(G.a2, params, label)
    assert rep.max_abs_error < 1e-9
    assert rep.root_count == label.r + 1


@pytest.mark.parametrize("r", [5, 12])
def test_bs_exact_for_su2_rotation(r):
    params, label, G = _rep((1, 1), r, 1.0 / r)
    rep = compare_spectra(G.a_plus + G.a_minus, params, label)
    assert rep.max_abs_error < 1e-9


def test_area_function_invariants(tmp_path):
    params, label, G = _rep((1, 2), 10, 0.05)
    H = G.a_plus + G.a_minus
    area = area_function(EffectiveSymbol(H, params, label))
    assert area(area.f_min) == pytest.approx(0.0, abs=1e-10)
    ident = integral_identities(params, label)
    total = ident["omega_integral"] - ident["ricci_integral"] / 2
    assert area(area.f_max) == pytest.approx(total, abs=1e-6)
    assert area.total == pytest.approx(label.r + 1, abs=1e-6)
    assert np.all(np.diff(area.values) >= -1e-12)
    path = tmp_path / "area.csv"
    write_area_csv(path, area)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["lambda", "area"] and len(rows) == len(area.lam) + 1


def test_bs_root_count_and_ordering():
    params, label, G = _rep((1, 2), 12, 1 / 24)
    rep = compare_spectra(G.a_plus + G.a_minus, params, label)
    assert abs(rep.root_count - (label.r + 1)) <= 1
    assert np.all(np.diff(rep.semiclassical) > 0)
    assert rep.middle_third_error < 5e-3


def test_multiwell_detected():
    params, label, G = _rep((1, 1), 10, 0.1)
    X = G.a_plus + G.a_minus
    with pytest.raises(MultiWell):
        check_single_well(EffectiveSymbol(X @ X, params, label))
    check_single_well(EffectiveSymbol(X, params, label))


def test_exact_only_report(tmp_path):
    params, label, G = _rep((2, 3), 3, 0.5, 1, 1)
    rep = compare_spectra(G.a1, params, label, exact_only=True)
    assert rep.semiclassical is None and rep.area is None
    rep.dump(tmp_path / "s.json")
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["label"]["r"] == 3 and len(doc["exact"]) == 4


def test_convergence_report_small_sweep():
    setup = SpectrumSetup(1, 1, 1.0, lambda G: G.a2)
    rep = convergence_report(setup, (4, 8))
    assert [row["r"] for row in rep.convergence] == [4, 8]
    assert all(row["roots"] == row["r"] + 1 for row in rep.convergence)
