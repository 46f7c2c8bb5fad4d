"""Normal-ordered bosonic perturbations and first-order resonance averaging.

A perturbation ``B = sum beta b*^nu b^mu`` is stored in normal order with
keys ``(nu1, nu2, mu1, mu2)`` meaning ``b1*^nu1 b2*^nu2 b1^mu1 b2^mu2``.
Its first-order average keeps the terms that commute with the oscillator
``E = l A1 + m A2``, those with ``l nu1 + m nu2 = l mu1 + m mu2``.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np
import scipy.sparse as sp

from .algebra import RepLabel, ResonanceParams
from .errors import CutoffTooSmall, InputError
from .fock import build_ladder, invariant_subspace, required_cutoff
from .generators import GeneratorPolynomial

__all__ = [
    "BosonicPolynomial",
    "GyronHamiltonian",
    "NotExpressed",
    "normal_order",
    "project_resonant",
    "realize_in_rep",
    "realize_on_fock",
    "energy_on_fock",
    "express_in_generators",
    "load_perturbation",
]

MAX_FACTORS = 8
Key = tuple[int, int, int, int]


class BosonicPolynomial:
    """Finite sum ``sum beta b1*^nu1 b2*^nu2 b1^mu1 b2^mu2``."""

    def __init__(self, terms=None):
        self.terms: dict[Key, complex] = {}
        for k, v in (terms or {}).items():
            k = tuple(int(i) for i in k)
            if len(k) != 4 or min(k) < 0:
                raise InputError(f"invalid monomial exponents {k}")
            if v != 0:
                self.terms[k] = self.terms.get(k, 0) + v
        self.terms = {k: v for k, v in self.terms.items() if v != 0}

    @classmethod
    def monomial(cls, nu, mu, coef=1.0) -> "BosonicPolynomial":
        return cls({(nu[0], nu[1], mu[0], mu[1]): coef})

    def __repr__(self) -> str:
        return f"BosonicPolynomial({self.terms})"

    def __add__(self, other):
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return BosonicPolynomial(out)

    def __rmul__(self, scalar):
        return BosonicPolynomial({k: scalar * v for k, v in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, BosonicPolynomial):
            return NotImplemented
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0) - other.terms.get(k, 0)) <= 1e-12 for k in keys)

    def adjoint(self) -> "BosonicPolynomial":
        return BosonicPolynomial({(m1, m2, n1, n2): np.conj(c) for (n1, n2, m1, m2), c in self.terms.items()})

    def is_hermitian(self) -> bool:
        return self == self.adjoint()

    def mul(self, other: "BosonicPolynomial", hbar: float) -> "BosonicPolynomial":
        """Normal-ordered product using ``[b_i, b_i*] = hbar``.

        Per mode ``b^a b*^c = sum_k k! C(a,k) C(c,k) hbar^k b*^(c-k) b^(a-k)``.
        """
        out = defaultdict(complex)
        for (n1, n2, m1, m2), c1 in self.terms.items():
            for (p1, p2, q1, q2), c2 in other.terms.items():
                for k1 in range(min(m1, p1) + 1):
                    w1 = factorial(k1) * comb(m1, k1) * comb(p1, k1) * hbar**k1
                    for k2 in range(min(m2, p2) + 1):
                        w2 = factorial(k2) * comb(m2, k2) * comb(p2, k2) * hbar**k2
                        key = (n1 + p1 - k1, n2 + p2 - k2, m1 - k1 + q1, m2 - k2 + q2)
                        out[key] += c1 * c2 * w1 * w2
        return BosonicPolynomial({k: (v.real if v.imag == 0 else v) for k, v in out.items()})

    def is_resonant(self, params: ResonanceParams) -> bool:
        return all(_resonant(k, params) for k in self.terms)

    def to_json(self) -> dict:
        return {"terms": [{"nu": [k[0], k[1]], "mu": [k[2], k[3]],
                           "re": float(np.real(c)), "im": float(np.imag(c))}
                          for k, c in sorted(self.terms.items())]}

    @classmethod
    def from_json(cls, data: dict) -> "BosonicPolynomial":
        try:
            terms = {}
            for t in data["terms"]:
                key = (t["nu"][0], t["nu"][1], t["mu"][0], t["mu"][1])
                c = complex(t.get("re", 0.0), t.get("im", 0.0))
                terms[key] = terms.get(key, 0) + c
        except (KeyError, IndexError, TypeError) as exc:
            raise InputError(f"malformed perturbation: {exc}") from None
        return cls({k: (v.real if v.imag == 0 else v) for k, v in terms.items()})


_FACTOR = {"b1": (0, 0, 1, 0), "b2": (0, 0, 0, 1), "b1*": (1, 0, 0, 0), "b2*": (0, 1, 0, 0)}


def normal_order(word, hbar: float, coef: complex = 1.0) -> BosonicPolynomial:
    """Normal-ordered form of a product of ladder factors.

    ``word`` is a sequence drawn from ``"b1", "b2", "b1*", "b2*"`` read left to
    right; at most eight factors are accepted.
    """
    word = list(word)
    if len(word) > MAX_FACTORS:
        raise InputError(f"normal ordering is limited to {MAX_FACTORS} factors")
    out = BosonicPolynomial({(0, 0, 0, 0): coef})
    for f in word:
        if f not in _FACTOR:
            raise InputError(f"unknown ladder factor {f!r}")
        out = out.mul(BosonicPolynomial({_FACTOR[f]: 1.0}), hbar)
    return out


def _resonant(key: Key, params: ResonanceParams) -> bool:
    n1, n2, m1, m2 = key
    return params.l * n1 + params.m * n2 == params.l * m1 + params.m * m2


@dataclass
class GyronHamiltonian:
    """Resonant part ``F1`` of a perturbation with per-label realizations."""

    F1: BosonicPolynomial
    params: ResonanceParams
    matrices: dict = field(default_factory=dict)

    def matrix(self, label: RepLabel, cutoff: int | None = None) -> np.ndarray:
        if label.key not in self.matrices:
            self.matrices[label.key] = realize_in_rep(self.F1, self.params, label, cutoff)
        return self.matrices[label.key]


def project_resonant(B: BosonicPolynomial, params: ResonanceParams) -> GyronHamiltonian:
    """Keep the terms with ``l nu1 + m nu2 = l mu1 + m mu2``."""
    kept = {k: c for k, c in B.terms.items() if _resonant(k, params)}
    return GyronHamiltonian(BosonicPolynomial(kept), params)


def _monomial_op(key: Key, ladder):
    n1, n2, m1, m2 = key
    dim = ladder.b1.shape[0]
    op = sp.identity(dim, format="csr")
    for mat, k in ((ladder.b2, m2), (ladder.b1, m1), (ladder.b2_dag, n2), (ladder.b1_dag, n1)):
        for _ in range(k):
            op = mat @ op
    return op


def realize_on_fock(F: BosonicPolynomial, params: ResonanceParams, cutoff: int) -> sp.csr_matrix:
    """Sparse operator of ``F`` on the truncated Fock space."""
    lad = build_ladder(params, cutoff)
    dim = lad.b1.shape[0]
    out = sp.csr_matrix((dim, dim), dtype=complex)
    for key, c in F.terms.items():
        out = out + c * _monomial_op(key, lad)
    return out.tocsr()


def energy_on_fock(params: ResonanceParams, cutoff: int) -> sp.csr_matrix:
    """``E = hbar (l n1 + m n2)`` with exact integer grading."""
    basis = build_ladder(params, cutoff).basis
    grade = params.l * basis.states[:, 0] + params.m * basis.states[:, 1]
    return sp.diags(params.hbar * grade.astype(float), format="csr")


def realize_in_rep(F: BosonicPolynomial, params: ResonanceParams, label: RepLabel,
                   cutoff: int | None = None) -> np.ndarray:
    """Matrix of a resonant ``F`` on the invariant subspace of ``label``.

    Normal order lowers before raising, so intermediate states never exceed
    the energy shell and the minimal cutoff is exact.
    """
    if not F.is_resonant(params):
        raise InputError("realize_in_rep needs a resonant polynomial")
    need = required_cutoff(params, label)
    if cutoff is None:
        cutoff = need
    elif cutoff < need:
        raise CutoffTooSmall(f"label {label.key} needs cutoff >= {need}, got {cutoff}")
    idx = invariant_subspace(params, label, cutoff)
    lad = build_ladder(params, cutoff)
    dim = lad.b1.shape[0]
    cols = sp.csr_matrix((np.ones(len(idx)), (idx, np.arange(len(idx)))), shape=(dim, len(idx)))
    out = np.zeros((len(idx), len(idx)), dtype=complex)
    for key, c in F.terms.items():
        v = cols
        n1, n2, m1, m2 = key
        for mat, k in ((lad.b2, m2), (lad.b1, m1), (lad.b2_dag, n2), (lad.b1_dag, n1)):
            for _ in range(k):
                v = mat @ v
        out += c * v[idx].toarray()
    if np.all(out.imag == 0):
        out = out.real
    return out


@dataclass(frozen=True)
class NotExpressed:
    """Returned when some terms have no generator form; lists those terms."""

    terms: tuple


def _falling(var: str, count: int, shift: float, hbar: float) -> GeneratorPolynomial:
    """``prod_{i < count} (A - shift - i hbar)`` for ``A`` in ``{a1, a2}``."""
    pos = 1 if var == "a1" else 2
    out = GeneratorPolynomial.constant(1.0)
    x = GeneratorPolynomial.generator(var)
    for i in range(count):
        factor = x - GeneratorPolynomial.constant(shift + i * hbar)
        terms = defaultdict(complex)
        for k1, c1 in out.terms.items():
            for k2, c2 in factor.terms.items():
                key = list(k1)
                key[pos] += k2[pos]
                terms[tuple(key)] += c1 * c2
        out = GeneratorPolynomial(dict(terms))
    return out


def _times_commuting(P: GeneratorPolynomial, Q: GeneratorPolynomial) -> GeneratorPolynomial:
    """Product of two polynomials in ``A1, A2`` only."""
    terms = defaultdict(complex)
    for k1, c1 in P.terms.items():
        for k2, c2 in Q.terms.items():
            terms[tuple(a + b for a, b in zip(k1, k2))] += c1 * c2
    return GeneratorPolynomial(dict(terms))


def express_in_generators(F: BosonicPolynomial, params: ResonanceParams):
    """Ordered generator polynomial equal to ``F`` in every oscillator representation.

    A resonant monomial has ``(nu - mu) = k (-m, l)``.  With falling
    factorials ``[A]_n = prod_{i<n} (A - i hbar)``:

    * ``k >= 0``: ``A+^k [A1 - k m hbar]_nu1 [A2]_mu2``
    * ``k < 0``: ``[A1 - |k| m hbar]_mu1 [A2]_nu2 A-^|k|``

    Returns :class:`NotExpressed` listing any non-resonant terms.
    """
    bad = tuple(sorted(k for k in F.terms if not _resonant(k, params)))
    if bad:
        return NotExpressed(bad)
    l, m, h = params.l, params.m, params.hbar
    out = GeneratorPolynomial()
    for (n1, n2, m1, m2), c in F.terms.items():
        k = (n2 - m2) // l
        if k >= 0:
            poly = _times_commuting(_falling("a1", n1, k * m * h, h), _falling("a2", m2, 0.0, h))
            term = {(key[0] + k, key[1], key[2], key[3]): v for key, v in poly.terms.items()}
        else:
            poly = _times_commuting(_falling("a1", m1, -k * m * h, h), _falling("a2", n2, 0.0, h))
            term = {(key[0], key[1], key[2], key[3] - k): v for key, v in poly.terms.items()}
        out = out + c * GeneratorPolynomial(term)
    return out


def load_perturbation(path) -> BosonicPolynomial:
    """Read ``{"terms": [{"nu": [..], "mu": [..], "re": .., "im": ..}]}``."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"perturbation file is not valid JSON: {exc}") from None
    return BosonicPolynomial.from_json(data)
