"""Resonance gyrons: representations, quantum geometry and spectra of the
l:m resonance algebra of the two-dimensional harmonic oscillator."""

from .algebra import (
    GeneratorMatrices,
    RepLabel,
    ResonanceParams,
    StructureData,
    build_diffop_matrices,
    build_matrices,
    casimir_values,
    check_relations,
    enumerate_reps,
    make_label,
    validate_params,
)
from .averaging import (
    BosonicPolynomial,
    GyronHamiltonian,
    express_in_generators,
    normal_order,
    project_resonant,
    realize_in_rep,
)
from .generators import GeneratorPolynomial
from .geometry import (
    default_grid,
    integral_identities,
    kernel,
    measure_density,
    metric_and_ricci,
    star_product,
    wick_symbol,
)
from .spectra import area_function, bs_spectrum, compare_spectra, convergence_report, exact_spectrum

__version__ = "0.1.0"
