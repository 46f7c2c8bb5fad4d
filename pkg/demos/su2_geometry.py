"""Quantum geometry of a small representation.

Builds the representation ``(l, m) = (1, 2)``, ``r = 6``, prints the
integral identities and the Gram matrix of the reproducing measure, and
compares the quantum metric with its classical counterpart.
"""

import numpy as np

from gyron.algebra import make_label, validate_params
from gyron.geometry import (QuantumMetric, default_grid, gram_matrix, integral_identities, kernel,
                            measure_density)
from gyron.leaf import classical_form_density


def main():
    params = validate_params(1, 2, 0.1)
    label = make_label(params, 6, 0, 1)
    grid = default_grid(params, label)
    measure = measure_density(params, label, grid)

    ident = integral_identities(params, label, grid, measure)
    print(f"label {label.key}, energy {label.energy:.3f}")
    for key in ("omega_integral", "dm_integral", "ricci_integral"):
        print(f"  {key:15s} {ident[key]: .12f}")

    gram = gram_matrix(measure, grid)
    print(f"  Gram deviation   {np.abs(gram - np.eye(label.r + 1)).max():.2e}")

    x = np.geomspace(0.1, 10, 5)
    g = QuantumMetric(kernel(params, label)).g(x)
    g0 = classical_form_density(label.energy, params, x)
    for xi, a, b in zip(x, g, g0):
        print(f"  x={xi:7.3f}  g={a:.6f}  g0={b:.6f}")


if __name__ == "__main__":
    main()
