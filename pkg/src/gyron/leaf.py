"""Classical symplectic leaves of the polynomial Poisson brackets.

Coordinates ``(A1, A2, A3, A4)`` on R^4 carry the brackets

    {A1, A3} = -m A4,   {A1, A4} = m A3,
    {A2, A3} =  l A4,   {A2, A4} = -l A3,
    {A4, A3} = (l^2 A1 - m^2 A2) A1^(m-1) A2^(l-1) / 2,

with Casimirs ``kappa = l A1 + m A2`` and ``C = A3^2 + A4^2 - A1^m A2^l``.
The leaf ``{kappa = E, C = 0}`` is a sphere charted by
``z0 = (A3 + i A4) / A1^m``; with ``x = |z0|^2`` the actions solve
``x = A2^l / A1^m`` on the segment ``l A1 + m A2 = E``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .algebra import ResonanceParams
from .errors import SingularAtPole

__all__ = [
    "poisson_tensor",
    "poisson_tensor_gradient",
    "poisson_bracket",
    "casimir_gradients",
    "jacobi_residual",
    "leaf_actions",
    "leaf_log_actions",
    "solve_alpha",
    "classical_coords",
    "classical_form_density",
    "classical_density_log",
    "classical_volume",
    "pole_asymptotics_check",
    "LeafChart",
    "write_leaf_table",
]


def poisson_tensor(A, params: ResonanceParams) -> np.ndarray:
    """Antisymmetric 4x4 matrix ``Pi[i, j] = {A_i, A_j}`` at the point ``A``."""
    l, m = params.l, params.m
    a1, a2, a3, a4 = (float(v) for v in A)
    pi = np.zeros((4, 4))
    pi[0, 2], pi[0, 3] = -m * a4, m * a3
    pi[1, 2], pi[1, 3] = l * a4, -l * a3
    pi[3, 2] = 0.5 * (l * l * a1 - m * m * a2) * a1 ** (m - 1) * a2 ** (l - 1)
    return pi - pi.T


def poisson_tensor_gradient(A, params: ResonanceParams) -> np.ndarray:
    """``dPi[k, i, j] = d/dA_k {A_i, A_j}`` from the polynomial entries."""
    l, m = params.l, params.m
    a1, a2, _, _ = (float(v) for v in A)
    d = np.zeros((4, 4, 4))
    d[3, 0, 2], d[2, 0, 3] = -m, m
    d[3, 1, 2], d[2, 1, 3] = l, -l
    # {A4, A3} = (l^2 a1^m a2^(l-1) - m^2 a1^(m-1) a2^l) / 2
    d[0, 3, 2] = 0.5 * (l * l * m * a1 ** (m - 1) * a2 ** (l - 1)
                        - m * m * (m - 1) * _pow(a1, m - 2) * a2**l)
    d[1, 3, 2] = 0.5 * (l * l * (l - 1) * a1**m * _pow(a2, l - 2)
                        - m * m * l * a1 ** (m - 1) * a2 ** (l - 1))
    return d - d.transpose(0, 2, 1)


def _pow(a, k):
    return 0.0 if k < 0 else a**k


def poisson_bracket(grad_f, grad_g, A, params: ResonanceParams) -> float:
    return float(np.asarray(grad_f) @ poisson_tensor(A, params) @ np.asarray(grad_g))


def casimir_gradients(A, params: ResonanceParams):
    """Gradients of ``kappa`` and ``C`` at ``A``."""
    l, m = params.l, params.m
    a1, a2, a3, a4 = (float(v) for v in A)
    grad_kappa = np.array([l, m, 0.0, 0.0])
    grad_c = np.array([-m * a1 ** (m - 1) * a2**l, -l * a1**m * a2 ** (l - 1), 2 * a3, 2 * a4])
    return grad_kappa, grad_c


def jacobi_residual(A, params: ResonanceParams) -> float:
    """Max over ``i, j, k`` of the cyclic Jacobi sum of the bracket."""
    pi = poisson_tensor(A, params)
    d = poisson_tensor_gradient(A, params)
    # T[i, j, k] = sum_l Pi[i, l] dPi[l, j, k]
    t = np.einsum("il,ljk->ijk", pi, d)
    cyc = t + t.transpose(1, 2, 0) + t.transpose(2, 0, 1)
    return float(np.abs(cyc).max())


def _log_sigmoid(w):
    return -np.logaddexp(0.0, -w)


def leaf_actions(E, x, params: ResonanceParams, *, log_x=None):
    """Actions ``(A1, A2)`` on the leaf of energy ``E`` at ``x = |z0|^2``.

    ``log_x`` may be passed instead of ``x`` to reach extreme ratios.
    See :func:`leaf_log_actions` for the solver.
    """
    if log_x is None:
        with np.errstate(divide="ignore"):
            log_x = np.log(np.asarray(x, dtype=float))
    log_a1, log_a2 = leaf_log_actions(E, log_x, params)
    return np.exp(log_a1), np.exp(log_a2)


def leaf_log_actions(E, log_x, params: ResonanceParams):
    """``(log A1, log A2)`` on the leaf of energy ``E`` at ``log x``.

    Solves ``l log A2 - m log A1 = log x`` along ``l A1 + m A2 = E`` in the
    coordinate ``A2 = (E/m) s(w)``, ``A1 = (E/l) s(-w)`` (``s`` the logistic
    function), where the residual is increasing with slope in
    ``[min(l, m), max(l, m)]``.  Safeguarded Newton inside a shrinking
    bracket; both actions keep full relative precision near the poles.
    """
    l, m = params.l, params.m
    E = np.asarray(E, dtype=float)
    log_x = np.asarray(log_x, dtype=float)
    E, log_x = np.broadcast_arrays(E, log_x)
    shape = E.shape
    E, log_x = E.ravel(), log_x.ravel()

    with np.errstate(divide="ignore"):
        const = l * np.log(E / m) - m * np.log(E / l) - log_x
    finite = np.isfinite(const)
    c = np.where(finite, const, 0.0)

    def resid(w):
        return l * _log_sigmoid(w) - m * _log_sigmoid(-w) + c

    slope_min = min(l, m)
    f0 = resid(np.zeros_like(c))
    lo = np.where(f0 < 0, 0.0, -np.abs(f0) / slope_min - 1.0)
    hi = np.where(f0 < 0, np.abs(f0) / slope_min + 1.0, 0.0)
    w = 0.5 * (lo + hi)
    for _ in range(200):
        f = resid(w)
        lo = np.where(f < 0, w, lo)
        hi = np.where(f < 0, hi, w)
        sig = np.exp(_log_sigmoid(w))
        fp = l * (1.0 - sig) + m * sig
        w_new = w - f / fp
        inside = (w_new > lo) & (w_new < hi)
        w_new = np.where(inside, w_new, 0.5 * (lo + hi))
        if np.all(np.abs(w_new - w) <= 1e-15 * np.maximum(1.0, np.abs(w))):
            w = w_new
            break
        w = w_new
    with np.errstate(divide="ignore"):
        log_el, log_em = np.log(E / l), np.log(E / m)
    la2 = log_em + _log_sigmoid(w)
    la1 = log_el + _log_sigmoid(-w)
    # poles: x = 0 gives A2 = 0, x = inf gives A1 = 0
    la1 = np.where(finite, la1, np.where(log_x < 0, log_el, -np.inf))
    la2 = np.where(finite, la2, np.where(log_x < 0, -np.inf, log_em))
    return la1.reshape(shape), la2.reshape(shape)


def solve_alpha(E, params: ResonanceParams, x):
    """The function ``alpha_E(x)`` in ``[-E/2lm, E/2lm]``.

    ``A1 = E/2l - m alpha`` and ``A2 = E/2m + l alpha``.
    """
    a1, a2 = leaf_actions(E, x, params)
    E = np.asarray(E, dtype=float)
    # average both readings so neither action's rounding dominates
    alpha = 0.5 * ((a2 - E / (2 * params.m)) / params.l + (E / (2 * params.l) - a1) / params.m)
    return alpha if alpha.ndim else float(alpha)


def classical_coords(E, params: ResonanceParams, z0):
    """Restriction of ``(A1, A2, A3, A4)`` to the leaf at the chart point ``z0``."""
    z0 = np.asarray(z0, dtype=complex)
    a1, a2 = leaf_actions(E, np.abs(z0) ** 2, params)
    w = z0 * a1**params.m
    return a1, a2, w.real, w.imag


def classical_density_log(E, params: ResonanceParams, s):
    """Density of ``omega0`` per ``ds dphi`` with ``s = log x``.

    Equal to ``x g0(x) = A1 A2 / (l^2 A1 + m^2 A2)``; smooth on the whole line.
    """
    a1, a2 = leaf_actions(E, None, params, log_x=s)
    l, m = params.l, params.m
    return a1 * a2 / (l * l * a1 + m * m * a2)


def classical_form_density(E, params: ResonanceParams, x):
    """``g0 = d alpha_E / dx``, so that ``omega0 = g0 dx ^ dphi``.

    From the implicit-function theorem,
    ``g0 = 1 / (x (l^2 / A2 + m^2 / A1))``.
    """
    x = np.asarray(x, dtype=float)
    l, m = params.l, params.m
    if np.any(x == 0):
        if l > 1:
            raise SingularAtPole("omega0 density diverges at z0 = 0 when l > 1")
    a1, a2 = leaf_actions(E, x, params)
    with np.errstate(divide="ignore", invalid="ignore"):
        g0 = a1 * a2 / (x * (l * l * a1 + m * m * a2))
    if np.any(x == 0):
        # l == 1: A2 ~ x A1^m near the pole
        g0 = np.where(x == 0, (np.asarray(E, dtype=float) / l) ** m, g0)
    return g0 if g0.ndim else float(g0)


def _line_nodes(lo, hi, panel=1.0, order=20):
    """Composite Gauss-Legendre nodes and weights on ``[lo, hi]``."""
    n_panels = max(1, int(math.ceil((hi - lo) / panel)))
    edges = np.linspace(lo, hi, n_panels + 1)
    t, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def classical_volume(E, params: ResonanceParams) -> float:
    """``(1/2 pi) int omega0`` over the leaf by quadrature in ``s = log x``.

    The density per ``ds`` decays like ``x^(1/l)`` at the south pole and
    ``x^(-1/m)`` at the north pole, so the line is cut where both tails are
    below ``e^-45`` of the bulk.
    """
    l, m = params.l, params.m
    centre = l * math.log(E / m) - m * math.log(E / l)
    nodes, weights = _line_nodes(centre - 45 * l - 10, centre + 45 * m + 10)
    return float(weights @ classical_density_log(E, params, nodes))


def pole_asymptotics_check(E, params: ResonanceParams,
                           near=(1e-14, 1e-10), far=(1e10, 1e14), n_points=40) -> dict:
    """Fit the power laws of ``g0`` at both poles and compare to the predicted ones.

    Near ``x = 0`` : ``g0 ~ (1/l^2) (E/l)^(m/l) x^(1/l - 1)``.
    Near ``x = oo``: ``g0 ~ (1/m^2) (E/m)^(l/m) x^(-1 - 1/m)``.
    """
    l, m = params.l, params.m
    out = {}
    cases = {
        "south": (near, -(1 - 1 / l), (E / l) ** (m / l) / l**2),
        "north": (far, -(1 + 1 / m), (E / m) ** (l / m) / m**2),
    }
    for name, ((lo, hi), slope_ref, pref_ref) in cases.items():
        x = np.geomspace(lo, hi, n_points)
        g = classical_form_density(E, params, x)
        slope, intercept = np.polyfit(np.log(x), np.log(g), 1)
        pref = float(np.exp(np.mean(np.log(g) - slope_ref * np.log(x))))
        out[name] = {
            "slope": float(slope),
            "slope_expected": slope_ref,
            "prefactor": pref,
            "prefactor_expected": pref_ref,
            "prefactor_rel_error": abs(pref / pref_ref - 1.0),
        }
    return out


@dataclass(frozen=True)
class LeafChart:
    """The leaf ``{kappa = E, C = 0}`` in the chart ``z0``."""

    params: ResonanceParams
    E: float

    @property
    def alpha_range(self) -> tuple[float, float]:
        h = self.E / (2 * self.params.l * self.params.m)
        return -h, h

    def alpha(self, x):
        return solve_alpha(self.E, self.params, x)

    def actions(self, x):
        return leaf_actions(self.E, x, self.params)

    def coords(self, z0):
        return classical_coords(self.E, self.params, z0)

    def density(self, x):
        return classical_form_density(self.E, self.params, x)

    def volume(self) -> float:
        return classical_volume(self.E, self.params)


def write_leaf_table(path, E, params: ResonanceParams, x) -> None:
    """CSV of ``x, alpha, g0, A1, A2`` for plotting."""
    x = np.asarray(x, dtype=float)
    alpha = np.atleast_1d(solve_alpha(E, params, x))
    a1, a2 = leaf_actions(E, x, params)
    with np.errstate(divide="ignore"):
        g0 = a1 * a2 / (x * (params.l**2 * a1 + params.m**2 * a2))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "alpha", "g0", "A1", "A2"])
        for row in zip(x, alpha, g0, a1, a2):
            w.writerow([f"{v:.17g}" for v in row])
