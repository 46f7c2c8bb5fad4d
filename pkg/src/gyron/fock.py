"""Truncated two-mode Fock space: the brute-force oracle.

States ``|n1, n2>`` with ``n1 + n2 <= cutoff`` are ordered by total
occupation and then by ``n2``.  Ladder operators act as
``b_i |n> = sqrt(hbar n_i) |n - e_i>``.  All operators are scipy sparse
matrices; the resonance generators are built from ladder products and never
from the closed-form representation formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .algebra import GeneratorMatrices, RepLabel, ResonanceParams, log_kernel_coefficients
from .errors import CutoffTooSmall, InputError, QuadratureNotConverged

__all__ = [
    "FockBasis",
    "Ladder",
    "AOperators",
    "CoherentFamily",
    "required_cutoff",
    "build_ladder",
    "build_A_ops",
    "invariant_subspace",
    "project_generators",
    "coherent_state",
    "coherent_family",
    "coherent_transform",
    "inverse_coherent_transform",
    "coherent_overlap",
    "resolution_of_unity",
]


class FockBasis:
    """Occupation states ``(n1, n2)`` with ``n1 + n2 <= cutoff``."""

    def __init__(self, cutoff: int):
        if cutoff < 1:
            raise InputError("cutoff must be >= 1")
        self.cutoff = int(cutoff)
        states = [(t - n2, n2) for t in range(cutoff + 1) for n2 in range(t + 1)]
        self.states = np.array(states, dtype=np.int64)
        self._index = {s: i for i, s in enumerate(states)}

    def __len__(self) -> int:
        return len(self.states)

    def index(self, n1: int, n2: int) -> int:
        try:
            return self._index[(int(n1), int(n2))]
        except KeyError:
            raise CutoffTooSmall(f"state ({n1}, {n2}) lies beyond cutoff {self.cutoff}") from None

    def basis_vector(self, n1: int, n2: int) -> np.ndarray:
        v = np.zeros(len(self))
        v[self.index(n1, n2)] = 1.0
        return v

    def occupation_json(self, indices) -> list:
        return [[int(a), int(b)] for a, b in self.states[list(indices)]]


class Ladder(NamedTuple):
    basis: FockBasis
    b1: sp.csr_matrix
    b2: sp.csr_matrix
    b1_dag: sp.csr_matrix
    b2_dag: sp.csr_matrix


class AOperators(NamedTuple):
    basis: FockBasis
    a1: sp.csr_matrix
    a2: sp.csr_matrix
    a_plus: sp.csr_matrix
    a_minus: sp.csr_matrix

    @property
    def energy(self):
        raise AttributeError("use energy_operator(params)")

    def energy_operator(self, params: ResonanceParams):
        return params.l * self.a1 + params.m * self.a2


def required_cutoff(params: ResonanceParams, label: RepLabel) -> int:
    """Smallest cutoff that serves ``label`` without touching the boundary."""
    return ((label.p + label.r * params.m) + (label.q + label.r * params.l)
            + max(params.l, params.m))


def _lowering(basis: FockBasis, mode: int, hbar: float) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for j, (n1, n2) in enumerate(basis.states):
        n = (n1, n2)[mode]
        if n == 0:
            continue
        target = (n1 - 1, n2) if mode == 0 else (n1, n2 - 1)
        rows.append(basis.index(*target))
        cols.append(j)
        vals.append(math.sqrt(hbar * n))
    dim = len(basis)
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))


def build_ladder(params: ResonanceParams, cutoff: int) -> Ladder:
    """``b1, b2`` and their adjoints on the truncated space."""
    return _ladder_cached(params, int(cutoff))


@lru_cache(maxsize=16)
def _ladder_cached(params: ResonanceParams, cutoff: int) -> Ladder:
    basis = FockBasis(cutoff)
    b1 = _lowering(basis, 0, params.hbar)
    b2 = _lowering(basis, 1, params.hbar)
    return Ladder(basis, b1, b2, b1.T.tocsr(), b2.T.tocsr())


def _power(op, k: int):
    out = sp.identity(op.shape[0], format="csr")
    for _ in range(k):
        out = op @ out
    return out


def build_A_ops(params: ResonanceParams, cutoff: int) -> AOperators:
    """``A1 = b1* b1``, ``A2 = b2* b2``, ``A+ = (b2*)^l b1^m``, ``A- = A+*``.

    ``A+`` is exact on every state whose image stays inside the cutoff,
    which holds for all states of the labels the cutoff was sized for.
    """
    return _aops_cached(params, int(cutoff))


@lru_cache(maxsize=16)
def _aops_cached(params: ResonanceParams, cutoff: int) -> AOperators:
    lad = build_ladder(params, cutoff)
    a1 = (lad.b1_dag @ lad.b1).tocsr()
    a2 = (lad.b2_dag @ lad.b2).tocsr()
    a_plus = (_power(lad.b2_dag, params.l) @ _power(lad.b1, params.m)).tocsr()
    a_minus = (_power(lad.b1_dag, params.m) @ _power(lad.b2, params.l)).tocsr()
    return AOperators(lad.basis, a1, a2, a_plus, a_minus)


def _check_cutoff(params, label, cutoff):
    need = required_cutoff(params, label)
    if cutoff is None:
        return need
    if cutoff < need:
        raise CutoffTooSmall(f"label {label.key} needs cutoff >= {need}, got {cutoff}")
    return int(cutoff)


def invariant_subspace(params: ResonanceParams, label: RepLabel, cutoff: int | None = None) -> list[int]:
    """Fock indices of ``(p + (r-n) m, q + n l)``, ``n = 0..r``."""
    cutoff = _check_cutoff(params, label, cutoff)
    basis = build_ladder(params, cutoff).basis
    l, m = params.l, params.m
    r, q, p = label.r, label.q, label.p
    return [basis.index(p + (r - n) * m, q + n * l) for n in range(r + 1)]


def project_generators(params: ResonanceParams, label: RepLabel,
                       cutoff: int | None = None) -> GeneratorMatrices:
    """Compress the Fock generators onto the invariant subspace."""
    cutoff = _check_cutoff(params, label, cutoff)
    ops = build_A_ops(params, cutoff)
    idx = invariant_subspace(params, label, cutoff)

    def block(op):
        return op[idx][:, idx].toarray()

    return GeneratorMatrices(params, label, block(ops.a1), block(ops.a2),
                             block(ops.a_plus), block(ops.a_minus))


@dataclass(frozen=True)
class CoherentFamily:
    """Coherent vectors ``P_z`` of one label, sampled at points ``z``.

    ``chain[n]`` stores ``A+^n P_0`` divided by its norm, and ``log_coef[n]``
    the log of the scalar in front of ``z^n`` (so that large ``r`` never
    overflows).
    """

    label: RepLabel
    basis: FockBasis
    chain: np.ndarray
    log_coef: np.ndarray
    z: np.ndarray
    vectors: np.ndarray

    def vector(self, z: complex) -> np.ndarray:
        return _combine(self.chain, self.log_coef, np.atleast_1d(z))[0]


def _combine(chain, log_coef, z):
    z = np.asarray(z, dtype=complex).ravel()
    n = np.arange(len(log_coef))
    with np.errstate(divide="ignore"):
        log_abs = np.log(np.abs(z))
    # coefficient of chain vector n: exp(log_coef_n) z^n
    mag = np.exp(log_coef[None, :] + n[None, :] * log_abs[:, None])
    mag = np.where(np.isnan(mag), 0.0, mag)
    mag[:, 0] = np.exp(log_coef[0])
    coef = mag * np.exp(1j * n[None, :] * np.angle(z)[:, None])
    return coef @ chain


def coherent_family(params: ResonanceParams, label: RepLabel, z=(),
                    cutoff: int | None = None) -> CoherentFamily:
    """``P_z = sum_n q!/(q+ln)! (z / hbar^l)^n A+^n P_0`` for each ``z``.

    ``P_0`` is the Fock state ``(p + rm, q)``.  The chain ``A+^n P_0`` is
    produced by repeated sparse matrix-vector products.
    """
    cutoff = _check_cutoff(params, label, cutoff)
    ops = build_A_ops(params, cutoff)
    basis = ops.basis
    r, q, p = label.r, label.q, label.p
    v = basis.basis_vector(p + r * params.m, q)
    chain = np.zeros((r + 1, len(basis)))
    log_norm = np.zeros(r + 1)
    for n in range(r + 1):
        nrm = np.linalg.norm(v)
        if n > 0:
            log_norm[n] = log_norm[n - 1] + math.log(nrm)
        v = v / nrm
        chain[n] = v
        v = ops.a_plus @ v
    n = np.arange(r + 1)
    from scipy.special import gammaln

    log_w = gammaln(q + 1) - gammaln(q + params.l * n + 1) - params.l * n * math.log(params.hbar)
    log_coef = log_w + log_norm
    z = np.asarray(z, dtype=complex).ravel()
    vectors = _combine(chain, log_coef, z) if z.size else np.zeros((0, len(basis)), complex)
    return CoherentFamily(label, basis, chain, log_coef, z, vectors)


def coherent_state(params: ResonanceParams, label: RepLabel, z: complex,
                   cutoff: int | None = None) -> np.ndarray:
    """The Fock vector ``P_z``."""
    return coherent_family(params, label, [z], cutoff).vectors[0]


def coherent_overlap(family: CoherentFamily, z, w) -> np.ndarray:
    """``<P_z, P_w>`` (linear in ``P_w``), entrywise over broadcast ``z, w``."""
    z, w = np.broadcast_arrays(np.asarray(z, complex), np.asarray(w, complex))
    vz = _combine(family.chain, family.log_coef, z)
    vw = _combine(family.chain, family.log_coef, w)
    return np.einsum("ij,ij->i", vz.conj(), vw).reshape(z.shape)


def coherent_transform(psi, family: CoherentFamily, z) -> np.ndarray:
    """``nu(psi)(zbar) = (psi, P_z)`` sampled at the points ``z``."""
    z = np.asarray(z, dtype=complex)
    vz = _combine(family.chain, family.log_coef, z.ravel())
    return (vz.conj() @ np.asarray(psi)).reshape(z.shape)


def inverse_coherent_transform(values, family: CoherentFamily, grid, measure) -> np.ndarray:
    """Reconstruct ``psi = (1/2 pi hbar) int P_a nu(psi)(abar) L(a) da``.

    ``values`` holds ``nu(psi)`` on ``grid.z`` (shape ``(n_s, n_phi)``) and
    ``measure`` is the calibrated :class:`~gyron.geometry.MeasureDensity`
    tabulated on the same radial nodes.
    """
    values = np.asarray(values)
    if not np.all(np.isfinite(values)):
        raise QuadratureNotConverged("transform samples are not finite")
    hbar = measure.params.hbar
    # weight per node: L(x) x ds dphi / (2 pi hbar)
    w = (np.exp(measure.log_L + grid.s) * grid.ws)[:, None] * grid.wphi[None, :]
    w = w / (2 * math.pi * hbar)
    vz = _combine(family.chain, family.log_coef, grid.z.ravel())
    return (w.ravel() * values.ravel()) @ vz


def resolution_of_unity(params: ResonanceParams, label: RepLabel, grid=None, measure=None,
                        cutoff: int | None = None) -> np.ndarray:
    """``(1/2 pi hbar) int Pi_a dm(a)`` restricted to the invariant subspace.

    ``Pi_a`` is the orthogonal projection on ``P_a`` and ``dm = L k dx dphi``,
    so the integrand is ``P_a P_a^* L``.  The result should be the identity.
    """
    from .geometry import default_grid, measure_density

    if grid is None:
        grid = default_grid(params, label)
    if measure is None:
        measure = measure_density(params, label, grid)
    family = coherent_family(params, label, cutoff=cutoff)
    idx = invariant_subspace(params, label, cutoff)
    chain = family.chain[:, idx]
    # each P_a is rescaled by its largest coefficient; the scale enters the log weight
    n = np.arange(label.r + 1)
    log_mag = family.log_coef[None, :] + grid.s[:, None] * (n[None, :] / 2.0)
    top = log_mag.max(axis=1)
    phase = np.exp(1j * n[None, :] * grid.phi[:, None])
    vz = (np.exp(log_mag - top[:, None])[:, None, :] * phase[None, :, :]).reshape(-1, n.size) @ chain
    log_w = 2 * top + measure.log_L + grid.s + np.log(grid.ws)
    w = (np.exp(log_w)[:, None] * grid.wphi[None, :]).ravel() / (2 * math.pi * params.hbar)
    return (vz.T * w) @ vz.conj()
