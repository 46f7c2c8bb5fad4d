"""Resonance algebra of the l:m oscillator and its irreducible representations.

The algebra is generated by ``A1 = b1* b1``, ``A2 = b2* b2``,
``A+ = (b2*)^l b1^m`` and ``A- = A+*``.  Irreducible Hermitian
representations are labelled by ``(r, q, p)`` with ``0 <= q < l`` and
``0 <= p < m``; each one has dimension ``r + 1`` and lives on the energy
level ``hbar (l m r + l p + m q)`` of ``E = l A1 + m A2``.

All matrices are real and dense.  Matrix index ``n`` corresponds to the
Fock state ``(n1, n2) = (p + (r - n) m, q + n l)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import EntryOverflow, InvalidLabel, NonCoprime, NonPositive

__all__ = [
    "ResonanceParams",
    "RepLabel",
    "StructureData",
    "GeneratorMatrices",
    "RelationReport",
    "CasimirValues",
    "validate_params",
    "make_label",
    "enumerate_reps",
    "build_matrices",
    "build_diffop_matrices",
    "check_relations",
    "casimir_values",
    "log_kernel_coefficients",
    "matrices_to_json",
    "matrices_from_json",
]

_LOG_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class ResonanceParams:
    """Resonance ``l:m`` and Planck constant."""

    l: int
    m: int
    hbar: float

    def oscillator_energy(self, n1, n2):
        return self.hbar * (self.l * np.asarray(n1) + self.m * np.asarray(n2))


@dataclass(frozen=True)
class RepLabel:
    r: int
    q: int
    p: int
    energy: float

    @property
    def dim(self) -> int:
        return self.r + 1

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.r, self.q, self.p)


def validate_params(l: int, m: int, hbar: float) -> ResonanceParams:
    """Check ``l, m`` are coprime positive integers and ``hbar > 0``."""
    if int(l) != l or int(m) != m:
        raise NonPositive(f"l and m must be integers, got l={l}, m={m}")
    l, m = int(l), int(m)
    if l <= 0 or m <= 0:
        raise NonPositive(f"l and m must be positive, got l={l}, m={m}")
    if not hbar > 0:
        raise NonPositive(f"hbar must be positive, got {hbar}")
    if math.gcd(l, m) != 1:
        raise NonCoprime(f"gcd({l}, {m}) = {math.gcd(l, m)} != 1")
    return ResonanceParams(l, m, float(hbar))


def _level(params: ResonanceParams, r: int, q: int, p: int) -> int:
    """Oscillator level ``E / hbar`` as an exact integer."""
    return params.l * params.m * r + params.l * p + params.m * q


def make_label(params: ResonanceParams, r: int, q: int = 0, p: int = 0) -> RepLabel:
    if r < 0 or int(r) != r:
        raise InvalidLabel(f"r must be a non-negative integer, got {r}")
    if not (0 <= q <= params.l - 1):
        raise InvalidLabel(f"q={q} outside [0, {params.l - 1}]")
    if not (0 <= p <= params.m - 1):
        raise InvalidLabel(f"p={p} outside [0, {params.m - 1}]")
    r, q, p = int(r), int(q), int(p)
    return RepLabel(r, q, p, params.hbar * _level(params, r, q, p))


def enumerate_reps(params: ResonanceParams, e_max: float) -> list[RepLabel]:
    """All labels with energy ``<= e_max``, sorted by energy then ``(r, q, p)``."""
    if e_max < 0:
        return []
    # compare exact integer levels; the slack absorbs rounding in e_max / hbar
    n_max = math.floor(e_max / params.hbar * (1 + 1e-12) + 1e-9)
    l, m = params.l, params.m
    found = []
    for r in range(n_max // (l * m) + 1):
        for q in range(l):
            for p in range(m):
                level = _level(params, r, q, p)
                if level <= n_max:
                    found.append((level, r, q, p))
    found.sort()
    return [RepLabel(r, q, p, params.hbar * lev) for lev, r, q, p in found]


class StructureData:
    """Structure polynomials of the algebra for fixed ``(l, m, hbar)``.

    ``rho = rho_plus * rho_minus`` with
    ``rho_plus(A) = prod_{j=1..m} (A1 + j hbar)`` and
    ``rho_minus(A) = prod_{s=1..l} (A2 - (s - 1) hbar)``.
    ``kappa(A) = l A1 + m A2`` is invariant under ``gamma``.
    """

    def __init__(self, params: ResonanceParams):
        self.params = params

    def rho_plus(self, a1):
        h, m = self.params.hbar, self.params.m
        out = np.ones_like(np.asarray(a1, dtype=float))
        for j in range(1, m + 1):
            out = out * (a1 + j * h)
        return out

    def rho_minus(self, a2):
        h, l = self.params.hbar, self.params.l
        out = np.ones_like(np.asarray(a2, dtype=float))
        for s in range(1, l + 1):
            out = out * (a2 - (s - 1) * h)
        return out

    def rho(self, a1, a2):
        return self.rho_plus(a1) * self.rho_minus(a2)

    def kappa(self, a1, a2):
        return self.params.l * np.asarray(a1) + self.params.m * np.asarray(a2)

    def gamma(self, a1, a2, times: int = 1):
        """The shift ``(A1, A2) -> (A1 - hbar m, A2 + hbar l)`` iterated."""
        h = self.params.hbar
        return a1 - times * h * self.params.m, a2 + times * h * self.params.l

    def rho_matrix(self, a1: np.ndarray, a2: np.ndarray) -> np.ndarray:
        """``rho`` of two commuting square matrices, by matrix products."""
        h = self.params.hbar
        eye = np.eye(a1.shape[0])
        out = eye.copy()
        for j in range(1, self.params.m + 1):
            out = out @ (a1 + j * h * eye)
        for s in range(1, self.params.l + 1):
            out = out @ (a2 - (s - 1) * h * eye)
        return out


@dataclass(frozen=True)
class GeneratorMatrices:
    """Matrices of ``a1, a2, a+, a-`` in the orthonormal monomial basis."""

    params: ResonanceParams
    label: RepLabel
    a1: np.ndarray
    a2: np.ndarray
    a_plus: np.ndarray
    a_minus: np.ndarray = field(repr=False)

    @property
    def a3(self) -> np.ndarray:
        return 0.5 * (self.a_plus + self.a_minus)

    @property
    def a4(self) -> np.ndarray:
        return 0.5j * (self.a_plus - self.a_minus)

    @property
    def energy(self) -> np.ndarray:
        return self.params.l * self.a1 + self.params.m * self.a2


def _step_logs(params: ResonanceParams, label: RepLabel):
    """Logs of the factorial ratios entering the step ``n - 1 -> n``, n=1..r.

    Returns ``(log_q, log_p)`` with
    ``log_q[n-1] = log (q+nl)! / (q+(n-1)l)!`` and
    ``log_p[n-1] = log (p+(r-n+1)m)! / (p+(r-n)m)!``.
    Each ratio is a product of ``l`` (resp. ``m``) consecutive integers.
    """
    l, m = params.l, params.m
    r, q, p = label.r, label.q, label.p
    n = np.arange(1, r + 1)
    jl = np.arange(1, l + 1)
    jm = np.arange(1, m + 1)
    log_q = np.log(q + (n[:, None] - 1) * l + jl[None, :]).sum(axis=1)
    log_p = np.log(p + (r - n[:, None]) * m + jm[None, :]).sum(axis=1)
    return log_q, log_p


def log_kernel_coefficients(params: ResonanceParams, label: RepLabel) -> np.ndarray:
    """``log c_n`` for the reproducing kernel ``k(x) = sum c_n x^n``.

    ``c_n = hbar^((m-l) n) q! (p+rm)! / ((q+nl)! (p+(r-n)m)!)``, built as a
    cumulative sum of the per-step ratios so that no large factorial is
    ever formed.
    """
    log_q, log_p = _step_logs(params, label)
    steps = (params.m - params.l) * math.log(params.hbar) + log_p - log_q
    return np.concatenate([[0.0], np.cumsum(steps)])


def build_matrices(params: ResonanceParams, label: RepLabel) -> GeneratorMatrices:
    """Generator matrices of the ``(r, q, p)`` representation."""
    l, m, h = params.l, params.m, params.hbar
    r, q, p = label.r, label.q, label.p
    n = np.arange(r + 1)
    a1 = np.diag(h * (p + (r - n) * m)).astype(float)
    a2 = np.diag(h * (q + n * l)).astype(float)
    a_plus = np.zeros((r + 1, r + 1))
    if r > 0:
        log_q, log_p = _step_logs(params, label)
        log_entry = 0.5 * ((l + m) * math.log(h) + log_q + log_p)
        bad = np.nonzero(log_entry > _LOG_MAX)[0]
        if bad.size:
            i = int(bad[0]) + 1
            raise EntryOverflow(f"a+ entry ({i}, {i - 1}) overflows", index=(i, i - 1))
        a_plus[n[1:], n[:-1]] = np.exp(log_entry)
    return GeneratorMatrices(params, label, a1, a2, a_plus, a_plus.T.copy())


def build_diffop_matrices(params: ResonanceParams, label: RepLabel) -> GeneratorMatrices:
    """Generators built from their differential-operator form.

    The operators act on polynomials in ``zbar`` of degree ``<= r``::

        a1 = hbar (rm + p) - hbar m D          D = zbar d/dzbar
        a2 = hbar q + hbar l D
        a+ = hbar^m prod_{j=1..m} (rm + p + j - m D) . zbar
        a- = hbar^l / zbar . prod_{s=1..l} (q - s + 1 + l D)

    They are first assembled on the plain monomials ``zbar^n`` and then
    conjugated into the orthonormal basis ``sqrt(c_n) zbar^n``.
    """
    l, m, h = params.l, params.m, params.hbar
    r, q, p = label.r, label.q, label.p
    deg = np.arange(r + 2)  # one spare degree to observe invariance

    def euler(f):
        return np.diag(f(deg).astype(float))

    shift_up = np.eye(r + 2, k=-1)  # zbar^n -> zbar^(n+1)
    shift_down = np.eye(r + 2, k=1)  # zbar^n -> zbar^(n-1)

    a1 = euler(lambda d: h * (r * m + p) - h * m * d)
    a2 = euler(lambda d: h * q + h * l * d)
    raise_poly = np.ones(r + 2)
    for j in range(1, m + 1):
        raise_poly = raise_poly * (r * m + p + j - m * deg)
    a_plus = h**m * np.diag(raise_poly) @ shift_up
    lower_poly = np.ones(r + 2)
    for s in range(1, l + 1):
        lower_poly = lower_poly * (q - s + 1 + l * deg)
    a_minus = h**l * shift_down @ np.diag(lower_poly)

    # P_r is invariant: nothing leaks into degree r + 1
    assert a_plus[r + 1, r] == 0.0
    keep = slice(0, r + 1)
    a1, a2 = a1[keep, keep], a2[keep, keep]
    a_plus, a_minus = a_plus[keep, keep], a_minus[keep, keep]

    from scipy.special import gammaln

    k = np.arange(r + 1)
    log_c = ((m - l) * k * math.log(h) + gammaln(q + 1) + gammaln(p + r * m + 1)
             - gammaln(q + k * l + 1) - gammaln(p + (r - k) * m + 1))
    half = 0.5 * log_c
    # O_ns = M_ns sqrt(c_s) / sqrt(c_n)
    ratio = np.exp(half[None, :] - half[:, None])
    return GeneratorMatrices(params, label, a1, a2, a_plus * ratio, a_minus * ratio)


@dataclass
class RelationReport:
    """Absolute residuals of the defining relations plus the scale used."""

    residuals: dict[str, float]
    scale: float

    @property
    def relative(self) -> dict[str, float]:
        return {k: v / self.scale for k, v in self.residuals.items()}

    @property
    def max_relative(self) -> float:
        return max(self.relative.values())

    def ok(self, tol: float = 1e-12) -> bool:
        return self.max_relative <= tol


def _comm(a, b):
    return a @ b - b @ a


def check_relations(G: GeneratorMatrices, S: StructureData | None = None) -> RelationReport:
    """Residuals of the commutation relations as matrix identities.

    Residuals are normalised by ``max(1, ||rho(a1, a2)||_inf)``.
    """
    S = S or StructureData(G.params)
    h, l, m = G.params.hbar, G.params.l, G.params.m
    a1, a2, ap, am = G.a1, G.a2, G.a_plus, G.a_minus
    rho = S.rho_matrix(a1, a2)
    eye = np.eye(a1.shape[0])
    shifted = S.rho_matrix(a1 - h * m * eye, a2 + h * l * eye)
    res = {
        "[a1,a2]": _comm(a1, a2),
        "[a1,a+]": _comm(a1, ap) + h * m * ap,
        "[a1,a-]": _comm(a1, am) - h * m * am,
        "[a2,a+]": _comm(a2, ap) - h * l * ap,
        "[a2,a-]": _comm(a2, am) + h * l * am,
        "[a-,a+]": _comm(am, ap) - (shifted - rho),
    }
    residuals = {k: float(np.abs(v).max(initial=0.0)) for k, v in res.items()}
    scale = max(1.0, float(np.abs(rho).sum(axis=1).max(initial=0.0)))
    return RelationReport(residuals, scale)


class CasimirValues(NamedTuple):
    kappa: float
    c_residual: float
    kappa_residual: float


def casimir_values(G: GeneratorMatrices, S: StructureData | None = None,
                   label: RepLabel | None = None) -> CasimirValues:
    """Value of ``kappa = l a1 + m a2`` and the residual of ``a+ a- - rho``.

    ``kappa_residual`` is the deviation of ``kappa`` from
    ``label.energy * I`` (from its own mean when no label is given).
    """
    S = S or StructureData(G.params)
    kap = S.kappa(G.a1, G.a2)
    diag = np.diag(kap)
    target = label.energy if label is not None else float(diag.mean())
    off = kap - np.diag(diag)
    kappa_res = max(float(np.abs(diag - target).max()), float(np.abs(off).max()))
    c = G.a_plus @ G.a_minus - S.rho_matrix(G.a1, G.a2)
    return CasimirValues(float(diag.mean()), float(np.abs(c).max()), kappa_res)


def matrices_to_json(G: GeneratorMatrices) -> dict:
    lab = G.label
    return {
        "l": G.params.l,
        "m": G.params.m,
        "hbar": G.params.hbar,
        "r": lab.r,
        "q": lab.q,
        "p": lab.p,
        "energy": lab.energy,
        "a1_diag": np.diag(G.a1).tolist(),
        "a2_diag": np.diag(G.a2).tolist(),
        "a_plus_subdiag": np.diag(G.a_plus, k=-1).tolist(),
    }


def matrices_from_json(doc: dict) -> GeneratorMatrices:
    params = validate_params(doc["l"], doc["m"], doc["hbar"])
    label = make_label(params, doc["r"], doc["q"], doc["p"])
    a_plus = np.diag(np.asarray(doc["a_plus_subdiag"], dtype=float), k=-1)
    if a_plus.shape == (0, 0):
        a_plus = np.zeros((1, 1))
    return GeneratorMatrices(
        params,
        label,
        np.diag(np.asarray(doc["a1_diag"], dtype=float)),
        np.diag(np.asarray(doc["a2_diag"], dtype=float)),
        a_plus,
        a_plus.T.copy(),
    )
