"""Ordered polynomials in the generators ``A+, A1, A2, A-``.

An ordered monomial is ``A+^a A1^i A2^j A-^b`` (``A+`` leftmost, ``A-``
rightmost).  :class:`GeneratorPolynomial` stores a finite sum of such
monomials and realizes it on a representation by substituting generator
matrices in that order.

Products are reduced back to ordered form with the relations

    P(A1, A2) A+ = A+ P(A1 - hbar m, A2 + hbar l),
    A- P(A1, A2) = P(A1 - hbar m, A2 + hbar l) A-,
    A+ A- = rho(A1, A2),   A- A+ = rho(A1 - hbar m, A2 + hbar l),

valid in every oscillator representation (where the Casimir ``C`` is 0).
In reduced form each term carries only ``A+`` or only ``A-`` powers.
"""

from __future__ import annotations

from collections import defaultdict
from math import comb

import numpy as np

from .algebra import GeneratorMatrices, ResonanceParams

__all__ = ["GeneratorPolynomial", "Poly2"]

Key = tuple[int, int, int, int]


class Poly2:
    """Commutative polynomial in ``(A1, A2)``: ``{(i, j): coefficient}``."""

    __slots__ = ("c",)

    def __init__(self, coeffs=None):
        self.c = {k: v for k, v in (coeffs or {}).items() if v != 0}

    @classmethod
    def one(cls):
        return cls({(0, 0): 1.0})

    @classmethod
    def linear(cls, c0, c1, c2):
        return cls({(0, 0): c0, (1, 0): c1, (0, 1): c2})

    def __add__(self, other):
        out = dict(self.c)
        for k, v in other.c.items():
            out[k] = out.get(k, 0) + v
        return Poly2(out)

    def __mul__(self, other):
        if not isinstance(other, Poly2):
            return Poly2({k: v * other for k, v in self.c.items()})
        out = defaultdict(complex)
        for (i1, j1), v1 in self.c.items():
            for (i2, j2), v2 in other.c.items():
                out[(i1 + i2, j1 + j2)] += v1 * v2
        return Poly2(_clean(out))

    __rmul__ = __mul__

    def shift(self, u: float, v: float) -> "Poly2":
        """``P(A1 + u, A2 + v)`` expanded binomially."""
        out = defaultdict(complex)
        for (i, j), c in self.c.items():
            for a in range(i + 1):
                ca = comb(i, a) * u ** (i - a)
                for b in range(j + 1):
                    out[(a, b)] += c * ca * comb(j, b) * v ** (j - b)
        return Poly2(_clean(out))

    def is_zero(self) -> bool:
        return not self.c


def _clean(d):
    out = {}
    for k, v in d.items():
        v = complex(v)
        if v.imag == 0:
            v = v.real
        if v != 0:
            out[k] = v
    return out


class GeneratorPolynomial:
    """Finite sum of ordered monomials ``A+^a A1^i A2^j A-^b``.

    ``terms`` maps ``(a, i, j, b)`` to a complex coefficient.
    """

    VARS = ("a_plus", "a1", "a2", "a_minus")

    def __init__(self, terms=None):
        self.terms: dict[Key, complex] = _clean(dict(terms or {}))

    @classmethod
    def generator(cls, name: str) -> "GeneratorPolynomial":
        key = [0, 0, 0, 0]
        key[cls.VARS.index(name)] = 1
        return cls({tuple(key): 1.0})

    @classmethod
    def constant(cls, value) -> "GeneratorPolynomial":
        return cls({(0, 0, 0, 0): value})

    def __repr__(self) -> str:
        return f"GeneratorPolynomial({self.terms})"

    def __add__(self, other):
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return GeneratorPolynomial(out)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, scalar):
        return GeneratorPolynomial({k: scalar * v for k, v in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, GeneratorPolynomial):
            return NotImplemented
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0) - other.terms.get(k, 0)) <= 1e-12 for k in keys)

    @property
    def degree(self) -> int:
        return max((sum(k) for k in self.terms), default=0)

    def adjoint(self) -> "GeneratorPolynomial":
        return GeneratorPolynomial({(b, i, j, a): np.conj(c) for (a, i, j, b), c in self.terms.items()})

    def is_hermitian(self) -> bool:
        return self == self.adjoint()

    def matrix(self, G: GeneratorMatrices) -> np.ndarray:
        """Substitute the generator matrices in the declared order."""
        mp = np.linalg.matrix_power
        dim = G.a1.shape[0]
        dtype = complex if any(isinstance(c, complex) for c in self.terms.values()) else float
        out = np.zeros((dim, dim), dtype=dtype)
        for (a, i, j, b), c in self.terms.items():
            out += c * (mp(G.a_plus, a) @ mp(G.a1, i) @ mp(G.a2, j) @ mp(G.a_minus, b))
        return out

    def evaluate(self, a_plus, a1, a2, a_minus):
        """Commutative evaluation on arrays (classical or symbol values)."""
        out = 0
        for (a, i, j, b), c in self.terms.items():
            out = out + c * a_plus**a * a1**i * a2**j * a_minus**b
        return out

    def derivative(self, var: int) -> "GeneratorPolynomial":
        """Commutative partial derivative with respect to variable ``var``."""
        out = {}
        for key, c in self.terms.items():
            if key[var] == 0:
                continue
            k = list(key)
            k[var] -= 1
            out[tuple(k)] = out.get(tuple(k), 0) + c * key[var]
        return GeneratorPolynomial(out)

    # ordered product -------------------------------------------------
    def _reduced(self, params):
        red = {}
        for (a, i, j, b), c in self.terms.items():
            poly = Poly2({(i, j): c})
            for k, p in _times({a: Poly2.one()}, _times({0: poly}, {-b: Poly2.one()}, params), params).items():
                red[k] = red[k] + p if k in red else p
        return red

    def product(self, other: "GeneratorPolynomial", params: ResonanceParams) -> "GeneratorPolynomial":
        """Ordered form of ``self * other`` in any oscillator representation."""
        return _from_reduced(_times(self._reduced(params), other._reduced(params), params))

    def reordered(self, params: ResonanceParams) -> "GeneratorPolynomial":
        """Equivalent polynomial with no term containing both ``A+`` and ``A-``."""
        return _from_reduced(self._reduced(params))


def _shift(P: Poly2, t: int, params: ResonanceParams) -> Poly2:
    """``P(A1 - t hbar m, A2 + t hbar l)``."""
    if t == 0:
        return P
    h = params.hbar
    return P.shift(-t * h * params.m, t * h * params.l)


def _rho(params: ResonanceParams) -> Poly2:
    h = params.hbar
    out = Poly2.one()
    for j in range(1, params.m + 1):
        out = out * Poly2.linear(j * h, 1.0, 0.0)
    for s in range(1, params.l + 1):
        out = out * Poly2.linear(-(s - 1) * h, 0.0, 1.0)
    return out


def _ladder_products(params, j, sign):
    """``A+^j A-^j`` (sign -1) or ``A-^j A+^j`` (sign +1) as a polynomial."""
    rho = _rho(params)
    out = Poly2.one()
    if sign < 0:
        for i in range(j):
            out = out * _shift(rho, -i, params)
    else:
        for i in range(1, j + 1):
            out = out * _shift(rho, i, params)
    return out


def _times(X: dict, Y: dict, params) -> dict:
    """Product of reduced forms ``{k: P}`` (k > 0: A+^k P; k < 0: P A-^|k|)."""
    out: dict[int, Poly2] = {}

    def acc(k, p):
        out[k] = out[k] + p if k in out else p

    for k1, P in X.items():
        for k2, Q in Y.items():
            if k1 >= 0 and k2 >= 0:
                acc(k1 + k2, _shift(P, k2, params) * Q)
            elif k1 <= 0 and k2 <= 0:
                acc(k1 + k2, P * _shift(Q, -k1, params))
            elif k1 > 0 > k2:
                a, b = k1, -k2
                if a >= b:
                    acc(a - b, _shift(P * Q, -b, params) * _ladder_products(params, b, -1))
                else:
                    acc(a - b, _shift(P * Q, -a, params) * _ladder_products(params, a, -1))
            else:
                a, c = -k1, k2
                if a >= c:
                    acc(c - a, P * _shift(_ladder_products(params, c, +1) * Q, a - c, params))
                else:
                    acc(c - a, _shift(P * _ladder_products(params, a, +1), c - a, params) * Q)
    return {k: p for k, p in out.items() if not p.is_zero()}


def _from_reduced(red: dict) -> GeneratorPolynomial:
    terms = {}
    for k, P in red.items():
        for (i, j), c in P.c.items():
            key = (k, i, j, 0) if k >= 0 else (0, i, j, -k)
            terms[key] = terms.get(key, 0) + c
    return GeneratorPolynomial(terms)
