"""Bohr-Sommerfeld levels of the gyron Hamiltonian ``A+ + A-``.

The perturbation is written in ladder operators, averaged over the
oscillator flow, realized in one representation and compared with the
exact spectrum.
"""

import numpy as np

from gyron.algebra import make_label, validate_params
from gyron.averaging import BosonicPolynomial, express_in_generators, project_resonant
from gyron.spectra import compare_spectra


def main(l=1, m=2, r=20, E=1.0):
    params = validate_params(l, m, E / (l * m * r))
    label = make_label(params, r)
    # b2*^l b1^m + h.c. together with a non-resonant linear term
    B = BosonicPolynomial({(0, l, m, 0): 1.0, (m, 0, 0, l): 1.0, (1, 0, 0, 0): 0.3, (0, 0, 1, 0): 0.3})
    gyron = project_resonant(B, params)
    print("resonant part:", gyron.F1)
    print("in generators:", express_in_generators(gyron.F1, params))

    rep = compare_spectra(gyron.matrix(label), params, label)
    err = np.abs(rep.semiclassical - rep.exact)
    print(f"{'k':>3} {'exact':>12} {'BS':>12} {'error':>10}")
    for k, (a, b, e) in enumerate(zip(rep.exact, rep.semiclassical, err)):
        print(f"{k:3d} {a:12.8f} {b:12.8f} {e:10.2e}")
    print(f"middle-third error {rep.middle_third_error:.2e}")


if __name__ == "__main__":
    main()
