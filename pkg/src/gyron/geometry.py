"""Quantum Kähler geometry of an irreducible leaf.

Everything is evaluated in the logarithmic radial coordinate ``s = log x``
with ``x = |z|^2`` and ``z = sqrt(x) e^{i phi}``.  The whole sphere minus the
two poles is the line ``s in R``; the poles are the limits ``s -> -oo``
(``z = 0``) and ``s -> +oo`` (``z = oo``).  In these variables

* the kernel weights ``pi_n(s) = c_n x^n / k(x)`` form a probability vector,
  computed by a softmax in log space;
* ``g x = hbar Var_pi(n)`` is the density of ``omega`` per ``ds dphi``;
* ``x rho_d = Var_Q(j) - 2 Var_pi(n)`` is the Ricci density per ``ds dphi``,
  where ``Q(x) = sum_j D_j x^j`` is the numerator of ``g = hbar Q / k^2``;
* Wick symbols split into Fourier bands ``e^{-i d phi}`` with radial
  coefficients ``sum_t F[t+d, t] sqrt(pi_{t+d} pi_t)``.

None of these forms divides by a vanishing quantity at the poles, so the
two-chart bookkeeping reduces to the sign of ``s``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .algebra import RepLabel, ResonanceParams, build_matrices, log_kernel_coefficients
from .errors import QuadratureNotConverged
from .leaf import classical_form_density, leaf_log_actions

__all__ = [
    "KernelFunction",
    "QuantumMetric",
    "MeasureDensity",
    "SphereGrid",
    "SymbolField",
    "SymbolCalculus",
    "kernel",
    "metric_and_ricci",
    "default_grid",
    "measure_density",
    "gram_matrix",
    "integral_identities",
    "wick_symbol",
    "quantum_coords",
    "star_product",
    "star_product_quadrature",
    "probability_function",
    "quantum_restriction",
    "first_order_correction",
    "classical_limit_deviation",
    "measure_endpoint_exponents",
    "write_geometry_table",
]


# ---------------------------------------------------------------------------
# kernel and metric


def _softmax_stats(log_coef: np.ndarray, s: np.ndarray, offset: int = 0):
    """Weights ``pi_j ∝ exp(log_coef_j + j s)`` with their mean and variance."""
    s = np.asarray(s, dtype=float)
    j = np.arange(len(log_coef)) + offset
    logw = log_coef[None, :] + s[:, None] * j[None, :]
    logw -= logw.max(axis=1, keepdims=True)
    w = np.exp(logw)
    w /= w.sum(axis=1, keepdims=True)
    _, centre, shift, var = _centred_moments(w, j)
    return w, centre + shift, var


def _centred_moments(w, j):
    """Moments taken about the dominant index so that a concentrated
    distribution keeps full relative precision in ``j - mean`` and ``var``."""
    centre = j[np.argmax(w, axis=1)].astype(float)
    dev = j[None, :] - centre[:, None]
    shift = np.einsum("ij,ij->i", w, dev)
    var = np.einsum("ij,ij->i", w, dev**2) - shift**2
    return dev - shift[:, None], centre, shift, np.maximum(var, 0.0)


@dataclass(frozen=True)
class KernelFunction:
    """``k(x) = sum_n c_n x^n`` stored through ``log c_n``."""

    params: ResonanceParams
    label: RepLabel
    log_c: np.ndarray

    @property
    def r(self) -> int:
        return self.label.r

    @property
    def coeffs(self) -> np.ndarray:
        return np.exp(self.log_c)

    def log_value(self, s):
        """``log k(e^s)``."""
        s = np.asarray(s, dtype=float)
        n = np.arange(self.r + 1)
        return logsumexp(self.log_c[None, :] + np.atleast_1d(s)[:, None] * n[None, :], axis=1).reshape(s.shape)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.exp(self.log_value(np.log(np.where(x > 0, x, 1.0))))
        return np.where(x > 0, out, 1.0)

    def weights(self, s):
        """``(pi, mean, variance)`` of the kernel weights at ``s``."""
        return _softmax_stats(self.log_c, np.atleast_1d(s))

    @property
    def log_d(self) -> np.ndarray:
        """``log D_j`` with ``D_j = 1/2 sum_{n+t=j+1} c_n c_t (n-t)^2``, ``j = 0..2r-2``."""
        return _log_d(self.log_c)

    def transition(self) -> tuple[float, float]:
        """Points where the first and last monomials stop dominating."""
        r, lc = self.r, self.log_c
        if r == 0:
            return 0.0, 0.0
        n = np.arange(1, r + 1)
        left = float(np.min(-lc[1:] / n))
        k = np.arange(r)
        right = float(np.max((lc[:-1] - lc[-1]) / (r - k)))
        return left, right


def _log_d(log_c):
    r = len(log_c) - 1
    if r < 1:
        return np.array([])
    n = np.arange(r + 1)
    diff = np.abs(n[:, None] - n[None, :])
    with np.errstate(divide="ignore"):
        pair = log_c[:, None] + log_c[None, :] + 2 * np.log(diff) - math.log(2.0)
    tot = n[:, None] + n[None, :]
    out = np.empty(2 * r - 1)
    for j in range(2 * r - 1):
        out[j] = logsumexp(pair[tot == j + 1])
    return out


@lru_cache(maxsize=256)
def kernel(params: ResonanceParams, label: RepLabel) -> KernelFunction:
    """Reproducing kernel ``k(x)`` of the label."""
    return KernelFunction(params, label, log_kernel_coefficients(params, label))


@dataclass(frozen=True)
class QuantumMetric:
    """Quantum metric ``g = hbar (x (ln k)')'`` and its Ricci density.

    Densities come in two flavours: per ``dx dphi`` (``g``, ``ricci``) and
    per ``ds dphi`` (``g_s``, ``ricci_s``); they differ by a factor ``x``.
    The Ricci density is ``(x (ln g)')'``, the same ``i dbar d`` ordering
    as ``omega``; its total over the sphere is ``-2``.
    """

    kernel: KernelFunction

    @property
    def hbar(self) -> float:
        return self.kernel.params.hbar

    def g_s(self, s):
        _, _, var = self.kernel.weights(s)
        return self.hbar * var

    def g(self, x):
        """``g(x) = hbar Q(x) / k(x)^2``, finite at ``x = 0`` (value ``hbar c_1``)."""
        x = np.asarray(x, dtype=float)
        log_d = self.kernel.log_d
        if log_d.size == 0:
            return np.zeros_like(x)
        with np.errstate(divide="ignore"):
            s = np.log(np.where(x > 0, x, 1.0))
        j = np.arange(log_d.size)
        log_q = logsumexp(log_d[None, :] + np.atleast_1d(s)[:, None] * j[None, :], axis=1).reshape(x.shape)
        val = self.hbar * np.exp(log_q - 2 * self.kernel.log_value(s))
        return np.where(x > 0, val, self.pole_values()[0])

    def ricci_s(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        _, _, var_k = self.kernel.weights(s)
        log_d = self.kernel.log_d
        if log_d.size == 0:
            return np.zeros_like(s)
        _, _, var_q = _softmax_stats(log_d, s)
        return var_q - 2 * var_k

    def ricci(self, x):
        x = np.asarray(x, dtype=float)
        return self.ricci_s(np.log(x)).reshape(x.shape) / x

    def pole_values(self) -> tuple[float, float]:
        """``g`` at ``z = 0`` and the chart-``1/z`` value at ``z = oo``."""
        lc, ld = self.kernel.log_c, self.kernel.log_d
        if ld.size == 0:
            return 0.0, 0.0
        return self.hbar * math.exp(ld[0]), self.hbar * math.exp(ld[-1] - 2 * lc[-1])

    def theta(self, z):
        """``dz`` coefficient of ``theta = i hbar d ln K``: ``i hbar mu / z``."""
        z = np.asarray(z, dtype=complex)
        _, mu, _ = self.kernel.weights(np.log(np.abs(z).ravel() ** 2))
        return (1j * self.hbar * mu.reshape(z.shape)) / z

    def ricci_primitive(self, z):
        """``dz`` coefficient of ``i d ln g``: ``i (d/ds ln g) / z``."""
        z = np.asarray(z, dtype=complex)
        s = np.log(np.abs(z).ravel() ** 2)
        _, mu_k, _ = self.kernel.weights(s)
        _, mu_q, _ = _softmax_stats(self.kernel.log_d, s)
        return (1j * (mu_q - 2 * mu_k).reshape(z.shape)) / z


def metric_and_ricci(k: KernelFunction) -> QuantumMetric:
    return QuantumMetric(k)


# ---------------------------------------------------------------------------
# grids


def _gl_panels(lo, hi, panel, order):
    n_panels = max(1, int(math.ceil((hi - lo) / panel)))
    edges = np.linspace(lo, hi, n_panels + 1)
    t, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * t).ravel(), (half[:, None] * w).ravel()


@dataclass(frozen=True)
class SphereGrid:
    """Tensor grid in ``(s, phi)``: composite Gauss-Legendre times uniform.

    Integrals over the sphere read ``int f dx dphi = sum f x ws wphi``.
    """

    s: np.ndarray
    ws: np.ndarray
    phi: np.ndarray
    wphi: np.ndarray

    @classmethod
    def build(cls, s_lo, s_hi, n_phi=16, panel=0.5, order=16):
        s, ws = _gl_panels(s_lo, s_hi, panel, order)
        phi = 2 * np.pi * np.arange(n_phi) / n_phi
        return cls(s, ws, phi, np.full(n_phi, 2 * np.pi / n_phi))

    @property
    def x(self) -> np.ndarray:
        return np.exp(self.s)

    @property
    def z(self) -> np.ndarray:
        return np.exp(0.5 * self.s)[:, None] * np.exp(1j * self.phi)[None, :]

    @property
    def shape(self):
        return (self.s.size, self.phi.size)


def _classical_centre(params: ResonanceParams, label: RepLabel) -> float:
    E = label.energy if label.energy > 0 else params.hbar * params.l * params.m
    return params.l * math.log(E / params.m) - params.m * math.log(E / params.l)


def grid_window(params: ResonanceParams, label: RepLabel, decay: float = 42.0):
    """``s``-interval outside which every density is below ``e^-decay``.

    The curvature densities decay like ``e^{-|s|}`` beyond the kernel's
    transition points, the measure like ``x^((q+1)/l)`` and ``x^(-(p+1)/m)``.
    """
    left, right = kernel(params, label).transition()
    c = _classical_centre(params, label)
    lo, hi = min(left, c), max(right, c)
    rate_lo = min(1.0, (label.q + 1) / params.l)
    rate_hi = min(1.0, (label.p + 1) / params.m)
    return lo - decay / rate_lo - 2.0, hi + decay / rate_hi + 2.0


def default_grid(params: ResonanceParams, label: RepLabel, n_phi: int | None = None,
                 panel: float = 0.5, order: int = 16) -> SphereGrid:
    """Grid resolving every band of an ``(r+1)``-dimensional operator."""
    lo, hi = grid_window(params, label)
    if n_phi is None:
        n_phi = 2 * label.r + 8
    return SphereGrid.build(lo, hi, n_phi=n_phi, panel=panel, order=order)


# ---------------------------------------------------------------------------
# measure


_FORMS = ("derived", "printed")


def _energy_form(form: str, hbar: float):
    """``(log prefactor offset, exponent scale)`` of each density form."""
    if form == "derived":
        return 0.0, hbar
    if form == "printed":
        return -math.log(4.0), 2.0 * hbar
    raise ValueError(f"unknown density form {form!r}; choose from {_FORMS}")


def _log_L_raw(params: ResonanceParams, label: RepLabel, s: np.ndarray,
               form: str = "derived", n_nodes: int = 128, check: bool = True) -> np.ndarray:
    """``log L(x)`` at ``s = log x`` before calibration.

    ``L(x) = c0/(hbar^(N+q+1) N! q! x) int_0^oo A1^N A2^q
    (l^2/A2 + m^2/A1)^(-1) exp(-(A1+A2)/tau) dE`` with ``N = rm + p`` and the
    actions on the leaf of energy ``E`` at ``x``.  ``form="derived"`` uses
    ``c0 = 1, tau = hbar``, which reproduces the Gram of the orthonormal
    monomials for every ``(l, m)``; ``form="printed"`` uses ``c0 = 1/4,
    tau = 2 hbar``, which differs by ``2^(N+q+(l-m)n)`` on ``phi^(n)``.

    At fixed ``x`` the substitution ``E -> t = log A1`` (so that
    ``log A2 = (s + m t)/l`` and ``(l^2/A2 + m^2/A1)^(-1) dE = A1 A2 dt / l``)
    turns the integral into ``int exp(phi(t)) dt`` with
    ``phi = (N+1) t + (q+1)(s + m t)/l - (A1 + A2)/tau``, strictly concave.
    The peak is found by safeguarded Newton, the window where
    ``phi > phi_max - 40`` by bisection, then Gauss-Legendre on the window.
    """
    l, m, h = params.l, params.m, params.hbar
    N = label.r * m + label.p
    q = label.q
    log_c0, tau = _energy_form(form, h)
    s = np.asarray(s, dtype=float)
    a_lin = (N + 1) + (q + 1) * m / l

    def phi(t, sc):
        return a_lin * t + (q + 1) * sc / l - (np.exp(t) + np.exp((sc + m * t) / l)) / tau

    def dphi(t, sc):
        return a_lin - (np.exp(t) + (m / l) * np.exp((sc + m * t) / l)) / tau

    def d2phi(t, sc):
        return -(np.exp(t) + (m / l) ** 2 * np.exp((sc + m * t) / l)) / tau

    # dphi decreases; at the root one of the two terms is >= a_lin tau / 2
    hi = np.full(s.shape, math.log(a_lin * tau)) + 1.0
    lo = np.minimum(math.log(a_lin * tau / 2), (l * math.log(a_lin * tau * l / (2 * m)) - s) / m) - 1.0
    t = 0.5 * (lo + hi)
    for _ in range(100):
        d = dphi(t, s)
        lo = np.where(d > 0, t, lo)
        hi = np.where(d > 0, hi, t)
        t_new = t - d / d2phi(t, s)
        t_new = np.where((t_new > lo) & (t_new < hi), t_new, 0.5 * (lo + hi))
        done = np.all(np.abs(t_new - t) <= 1e-14 * np.maximum(1.0, np.abs(t)))
        t = t_new
        if done:
            break
    peak = phi(t, s)

    def edge(direction):
        # phi is concave: step out until below peak - 40, then bisect
        width = np.ones_like(s)
        for _ in range(60):
            bad = phi(t + direction * width, s) > peak - 40.0
            if not np.any(bad):
                break
            width = np.where(bad, 2 * width, width)
        a, b = np.zeros_like(s), width
        for _ in range(60):
            mid = 0.5 * (a + b)
            above = phi(t + direction * mid, s) > peak - 40.0
            a = np.where(above, mid, a)
            b = np.where(above, b, mid)
        return t + direction * b

    t_a, t_b = edge(-1.0), edge(1.0)
    mid, half = 0.5 * (t_a + t_b), 0.5 * (t_b - t_a)

    def integrate(order):
        x, w = np.polynomial.legendre.leggauss(order)
        tt = mid[:, None] + half[:, None] * x[None, :]
        return logsumexp(phi(tt, s[:, None]) + np.log(w)[None, :], axis=1) + np.log(half)

    val = integrate(n_nodes)
    if check:
        coarse = integrate(n_nodes * 3 // 4)
        if np.any(~np.isfinite(val)) or np.any(np.abs(val - coarse) > 1e-10):
            raise QuadratureNotConverged("energy integral did not converge")
    prefactor = log_c0 - (N + q + 1) * math.log(h) \
        - gammaln(N + 1) - gammaln(q + 1) - math.log(l)
    return prefactor + val - s


def _log_L_energy_route(params: ResonanceParams, label: RepLabel, s, form: str = "derived",
                        n_scan: int = 400, n_nodes: int = 200) -> np.ndarray:
    """The same density integrated over energy nodes with the leaf solver.

    Slow; used to cross-check :func:`_log_L_raw`.  Each energy node needs
    the actions ``A1, A2`` at ``(E, x)``, obtained from ``alpha_E(x)``.
    """
    l, m, h = params.l, params.m, params.hbar
    N = label.r * m + label.p
    q = label.q
    log_c0, tau = _energy_form(form, h)
    K = N + q + 1
    big = max(l, m)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    t_scan = np.linspace(math.log(tau / big) - 80.0, math.log(tau * big * (2 * K + 80)), n_scan)
    gx, gw = np.polynomial.legendre.leggauss(n_nodes)

    def log_f(t, sc):
        la1, la2 = leaf_log_actions(np.exp(t), sc, params)
        a1, a2 = np.exp(la1), np.exp(la2)
        with np.errstate(divide="ignore", invalid="ignore"):
            lf = (N + 1) * la1 + (q + 1) * la2 - np.log(l * l * a1 + m * m * a2) - (a1 + a2) / tau + t
        return np.where(np.isnan(lf), -np.inf, lf)

    lf = log_f(t_scan[None, :], s[:, None])
    above = lf >= lf.max(axis=1, keepdims=True) - 40.0
    first = np.argmax(above, axis=1)
    last = n_scan - 1 - np.argmax(above[:, ::-1], axis=1)
    a = t_scan[np.maximum(first - 1, 0)]
    b = t_scan[np.minimum(last + 1, n_scan - 1)]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    tt = mid[:, None] + half[:, None] * gx[None, :]
    val = logsumexp(log_f(tt, s[:, None]) + np.log(gw)[None, :], axis=1) + np.log(half)
    prefactor = log_c0 - K * math.log(h) - gammaln(N + 1) - gammaln(q + 1)
    return prefactor + val - s


@dataclass(frozen=True)
class MeasureDensity:
    """Density ``L`` of the reproducing measure, tabulated on radial nodes.

    ``log_L`` is calibrated so that the vacuum ``phi^(0) = 1`` has unit norm;
    ``log_ratio`` is the log of the factor applied to the raw density.  For
    the derived form the ratio is 1 up to quadrature error; for the printed
    form it is ``2^-(rm+p+q)`` (see ``expected_log_ratio``).
    """

    params: ResonanceParams
    label: RepLabel
    s: np.ndarray
    log_L: np.ndarray
    log_L_raw: np.ndarray
    log_ratio: float
    form: str = "derived"

    @property
    def ratio(self) -> float:
        return math.exp(self.log_ratio)

    @property
    def expected_log_ratio(self) -> float:
        if self.form == "derived":
            return 0.0
        lab = self.label
        return -(lab.r * self.params.m + lab.p + lab.q) * math.log(2.0)

    def log_dm_s(self) -> np.ndarray:
        """log of ``L k x``: density of ``dm`` per ``ds dphi``."""
        return self.log_L + kernel(self.params, self.label).log_value(self.s) + self.s

    def L(self) -> np.ndarray:
        return np.exp(self.log_L)


@lru_cache(maxsize=256)
def _calibration(params: ResonanceParams, label: RepLabel, form: str) -> float:
    lo, hi = grid_window(params, label)
    s, ws = _gl_panels(lo, hi, 0.5, 16)
    log_raw = _log_L_raw(params, label, s, form)
    # ||phi0||^2 = (1/2 pi hbar) int L dx dphi = (1/hbar) int L x ds
    log_norm = logsumexp(log_raw + s + np.log(ws)) - math.log(params.hbar)
    return -float(log_norm)


def measure_density(params: ResonanceParams, label: RepLabel,
                    grid: SphereGrid | None = None, calibrate: bool = True,
                    form: str = "derived") -> MeasureDensity:
    """Tabulate ``L`` on the radial nodes of ``grid``.

    With ``calibrate`` the density is rescaled so that ``||phi^(0)|| = 1``
    and the factor is reported as ``ratio``.
    """
    if grid is None:
        grid = default_grid(params, label)
    log_raw = _log_L_raw(params, label, grid.s, form)
    log_ratio = _calibration(params, label, form) if calibrate else 0.0
    return MeasureDensity(params, label, grid.s, log_raw + log_ratio, log_raw, log_ratio, form)


def gram_matrix(measure: MeasureDensity, grid: SphereGrid) -> np.ndarray:
    """Gram matrix of ``phi^(n) = sqrt(c_n) zbar^n`` under the integral scalar product.

    ``(phi, phi') = (1/2 pi hbar) int phi conj(phi') L dx dphi`` evaluated as a
    genuine 2D tensor quadrature (radial part times angular part).
    """
    k = kernel(measure.params, measure.label)
    n = np.arange(k.r + 1)
    log_rad = (0.5 * (k.log_c[:, None, None] + k.log_c[None, :, None])
               + 0.5 * (n[:, None, None] + n[None, :, None]) * grid.s[None, None, :]
               + measure.log_L[None, None, :] + grid.s[None, None, :])
    radial = np.exp(log_rad) @ grid.ws
    # phi^(n) conj(phi^(t)) carries exp(-i (n - t) phi)
    phase = np.exp(-1j * (n[:, None, None] - n[None, :, None]) * grid.phi[None, None, :])
    angular = phase @ grid.wphi
    return radial * angular / (2 * np.pi * measure.params.hbar)


def integral_identities(params: ResonanceParams, label: RepLabel,
                        grid: SphereGrid | None = None,
                        measure: MeasureDensity | None = None) -> dict:
    """Totals of ``omega``, ``dm`` and Ricci over the sphere.

    Expected: ``omega_integral = r``, ``dm_integral = r + 1`` and
    ``ricci_integral = -2`` (for ``r >= 1``).
    """
    if grid is None:
        grid = default_grid(params, label)
    if measure is None:
        measure = measure_density(params, label, grid)
    met = QuantumMetric(kernel(params, label))
    h = params.hbar
    omega = float(grid.ws @ met.g_s(grid.s)) / h
    ricci = float(grid.ws @ met.ricci_s(grid.s))
    dm = float(grid.ws @ np.exp(measure.log_dm_s())) / h
    return {
        "omega_integral": omega,
        "dm_integral": dm,
        "ricci_integral": ricci,
        "r": label.r,
        "calibration_ratio": measure.ratio,
        "tolerances": {"omega": 1e-8, "dm": 1e-4, "ricci": 1e-6},
    }


def measure_endpoint_exponents(measure: MeasureDensity, span: float = 10.0, offset: float = 20.0) -> dict:
    """Fitted power laws of ``L k`` (per ``dx dphi``) at both poles.

    The fit windows sit ``offset`` to ``offset + span`` units of ``s``
    outside the kernel's transition region.
    """
    params, label = measure.params, measure.label
    left, right = kernel(params, label).transition()
    c = _classical_centre(params, label)
    lo, hi = min(left, c), max(right, c)
    out = {}
    for name, window, expected in (
        ("south", (lo - offset - span, lo - offset), (label.q + 1) / params.l - 1),
        ("north", (hi + offset, hi + offset + span), -(label.p + 1) / params.m - 1),
    ):
        s = np.linspace(*window, 25)
        log_lk = (_log_L_raw(params, label, s, measure.form) + measure.log_ratio
                  + kernel(params, label).log_value(s))
        slope = float(np.polyfit(s, log_lk, 1)[0])
        out[name] = {"slope": slope, "expected": expected}
    return out


# ---------------------------------------------------------------------------
# symbols


@dataclass
class SymbolField:
    """Values of a function on the sphere over an ``(s, phi)`` grid.

    ``values[i, j]`` is the value at ``z = exp(s_i / 2 + i phi_j)``.  The
    second chart ``w = 1/z`` is ``(1/x, -phi)``, see :meth:`north_chart`.
    """

    grid: SphereGrid
    values: np.ndarray
    source: str = ""

    @property
    def x(self):
        return self.grid.x

    def north_chart(self):
        """``(x_w, phi_w, values)`` in the chart ``w = 1/z``."""
        return np.exp(-self.grid.s), -self.grid.phi, self.values

    def real(self) -> np.ndarray:
        return self.values.real


class SymbolCalculus:
    """Band decomposition of symbols of ``(r+1) x (r+1)`` matrices.

    For a matrix ``F`` the Wick symbol is ``sum_d B_d(s) e^{-i d phi}`` with
    ``B_d = sum_t F[t+d, t] w_{t+d, t}`` and ``w_{nt} = sqrt(pi_n pi_t)``.
    Derivatives act on the radial weights in closed form:

    * ``(d_s + i/2 d_phi)`` multiplies term ``(n, t)`` by ``n - mu``,
    * ``(d_s - i/2 d_phi)`` by ``t - mu``,
    * ``(d_s^2 + d_phi^2 / 4)`` by ``(n - mu)(t - mu) - var``,

    with ``mu``, ``var`` the kernel mean and variance.  Since
    ``dz dzbar = (1/x)(d_s^2 + d_phi^2/4)``, ``dz = (1/z)(d_s - i/2 d_phi)``,
    and ``g = hbar var / x``, no factor of ``x`` survives.
    """

    KINDS = ("f", "dz", "dzbar", "laplace", "eff")

    def __init__(self, params: ResonanceParams, label: RepLabel):
        self.params = params
        self.label = label
        self.kernel = kernel(params, label)

    def weights(self, s):
        pi, mu, var = self.kernel.weights(s)
        return np.sqrt(pi), mu, var

    def bands(self, F, s, kind: str = "f") -> dict[int, np.ndarray]:
        if kind not in self.KINDS:
            raise ValueError(f"unknown kind {kind!r}")
        F = np.asarray(F)
        r = self.label.r
        pi = self.kernel.weights(s)[0]
        W = np.sqrt(pi)
        dev, _, _, var = _centred_moments(pi, np.arange(r + 1))
        tiny = np.finfo(float).tiny
        out = {}
        for d in range(-r, r + 1):
            diag = np.diagonal(F, offset=-d)
            if not np.any(diag):
                continue
            n = np.arange(diag.size) + max(d, 0)
            t = n - d
            w = W[:, n] * W[:, t]
            if kind == "dzbar":
                w = w * dev[:, n]
            elif kind == "dz":
                w = w * dev[:, t]
            elif kind in ("laplace", "eff"):
                lap = dev[:, n] * dev[:, t] - var[:, None]
                if kind == "laplace":
                    w = w * lap
                else:
                    w = w * (1.0 - lap / (2.0 * np.maximum(var, tiny))[:, None])
            out[d] = w @ diag
        return out

    @staticmethod
    def assemble(bands: dict, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        first = next(iter(bands.values()), None)
        if first is None:
            return np.zeros((0, phi.size))
        out = np.zeros((first.size, phi.size), dtype=complex)
        for d, b in bands.items():
            out += b[:, None] * np.exp(-1j * d * phi)[None, :]
        return out

    def field(self, F, grid: SphereGrid, kind: str = "f", source: str = "") -> SymbolField:
        vals = self.assemble(self.bands(F, grid.s, kind), grid.phi)
        if kind == "laplace":
            # Delta f = (2/g) dz dzbar f = 2 (d_s^2 + d_phi^2/4) f / (hbar var)
            _, _, var = self.kernel.weights(grid.s)
            vals = 2 * vals / (self.params.hbar * var[:, None])
        return SymbolField(grid, vals, source or kind)

    def at_points(self, F, z, kind: str = "f") -> np.ndarray:
        """Evaluate at arbitrary points ``z`` (``z != 0``)."""
        z = np.asarray(z, dtype=complex)
        s = np.log(np.abs(z).ravel() ** 2)
        phi = np.angle(z).ravel()
        b = self.bands(F, s, kind)
        out = np.zeros(s.size, dtype=complex)
        for d, v in b.items():
            out += v * np.exp(-1j * d * phi)
        return out.reshape(z.shape)


def wick_symbol(F, params: ResonanceParams, label: RepLabel, grid: SphereGrid,
                source: str = "") -> SymbolField:
    """``f = sum F_ns phi^(n)(zbar) conj(phi^(s)(zbar)) / K`` on the grid."""
    return SymbolCalculus(params, label).field(F, grid, "f", source)


def quantum_coords(params: ResonanceParams, label: RepLabel, grid: SphereGrid) -> dict[str, SymbolField]:
    """Symbols of ``a1, a2, a+, a-``."""
    G = build_matrices(params, label)
    calc = SymbolCalculus(params, label)
    return {name: calc.field(getattr(G, name), grid, "f", name)
            for name in ("a1", "a2", "a_plus", "a_minus")}


def star_product(F, G, params: ResonanceParams, label: RepLabel, grid: SphereGrid) -> SymbolField:
    """``f * g`` realized as the symbol of the operator product."""
    return wick_symbol(np.asarray(F) @ np.asarray(G), params, label, grid, "star")


def _coherent_vectors(k: KernelFunction, z):
    z = np.asarray(z, dtype=complex).ravel()
    pi, _, _ = k.weights(np.log(np.abs(z) ** 2))
    n = np.arange(k.r + 1)
    return np.sqrt(pi) * np.exp(1j * np.angle(z)[:, None] * n[None, :])


def star_product_quadrature(F1, F2, params: ResonanceParams, label: RepLabel, a,
                            grid: SphereGrid, measure: MeasureDensity) -> np.ndarray:
    """``(f1 * f2)(a) = (1/2 pi hbar) int f1#(a|b) f2#(b|a) p_a(b) dm(b)``.

    With normalized coherent vectors ``xi`` the integrand collapses to
    ``<xi_a|F1|xi_b><xi_b|F2|xi_a>``; the integral is a plain 2D quadrature.
    """
    k = kernel(params, label)
    xa = _coherent_vectors(k, a)
    xb = _coherent_vectors(k, grid.z)
    w = (np.exp(measure.log_dm_s()) * grid.ws)[:, None] * grid.wphi[None, :]
    w = w.ravel() / (2 * np.pi * params.hbar)
    left = xa.conj() @ np.asarray(F1) @ xb.T  # (na, nb)
    right = (xb.conj() @ np.asarray(F2) @ xa.T).T  # (na, nb)
    return (left * right) @ w


def probability_function(params: ResonanceParams, label: RepLabel, a: complex,
                         grid: SphereGrid) -> SymbolField:
    """``p_a(b) = |K#(a|b)|^2 / (K(a) K(b))`` over the grid points ``b``."""
    k = kernel(params, label)
    xa = _coherent_vectors(k, [a])[0]
    xb = _coherent_vectors(k, grid.z)
    vals = np.abs(xb @ xa.conj()) ** 2
    return SymbolField(grid, vals.reshape(grid.shape), "p_a")


def quantum_restriction(F, params: ResonanceParams, label: RepLabel, grid: SphereGrid) -> SymbolField:
    """Symbol of the ordered realization ``F(a)`` of a generator polynomial."""
    G = build_matrices(params, label)
    return wick_symbol(F.matrix(G), params, label, grid, "restriction")


def first_order_correction(F, params: ResonanceParams, label: RepLabel, grid: SphereGrid,
                           tensor: str = "symmetric") -> SymbolField:
    """First-order term ``e1(F)`` of the quantum restriction.

    With ``T_jl = g^-1 d a_j dbar a_l`` (in band form
    ``(D- a_j)(D+ a_l) / (hbar var)``):

    * ``tensor="symmetric"``: ``e1 = 1/2 sum_jl Re(T_jl) d_j d_l F``;
    * ``tensor="ordered"``: ``e1 = 1/2 sum_j T_jj d_j^2 F + sum_{j<l} T_jl d_j d_l F``
      with the variables in the order ``(A+, A1, A2, A-)`` of the ordered
      monomials.

    Both agree on polynomials in ``A1, A2`` alone.  Terms mixing ``A+`` and
    ``A-`` need the ordered tensor to reach an ``O(hbar^2)`` remainder.
    """
    if tensor not in ("symmetric", "ordered"):
        raise ValueError(f"unknown tensor {tensor!r}")
    G = build_matrices(params, label)
    calc = SymbolCalculus(params, label)
    names = ("a_plus", "a1", "a2", "a_minus")
    mats = [getattr(G, n) for n in names]
    vals = [calc.field(M, grid, "f").values for M in mats]
    d_minus = [calc.field(M, grid, "dz").values for M in mats]
    d_plus = [calc.field(M, grid, "dzbar").values for M in mats]
    _, _, var = kernel(params, label).weights(grid.s)
    scale = 1.0 / (params.hbar * var)[:, None]
    out = np.zeros(grid.shape, dtype=complex)
    for j in range(4):
        dj = F.derivative(j)
        for l_ in range(4):
            djl = dj.derivative(l_)
            if not djl.terms:
                continue
            T = d_minus[j] * d_plus[l_] * scale
            if tensor == "symmetric":
                coef = 0.5 * np.real(T)
            elif j == l_:
                coef = 0.5 * T
            elif j < l_:
                coef = T
            else:
                continue
            out += coef * djl.evaluate(*vals)
    return SymbolField(grid, out, "e1")


def classical_limit_deviation(params: ResonanceParams, label: RepLabel,
                              x_range=(0.1, 10.0), n_points: int = 401) -> float:
    """``sup |g - g0| / g0`` over the annulus, with ``E`` the label energy."""
    x = np.geomspace(*x_range, n_points)
    g = QuantumMetric(kernel(params, label)).g(x)
    g0 = classical_form_density(label.energy, params, x)
    return float(np.max(np.abs(g - g0) / g0))


def write_geometry_table(path, params: ResonanceParams, label: RepLabel,
                         grid: SphereGrid | None = None,
                         measure: MeasureDensity | None = None) -> None:
    """CSV of ``x, k, g, rho_d, L, L k`` on the radial nodes."""
    if grid is None:
        grid = default_grid(params, label)
    if measure is None:
        measure = measure_density(params, label, grid)
    k = kernel(params, label)
    met = QuantumMetric(k)
    x = grid.x
    log_k = k.log_value(grid.s)
    cols = {
        "x": x,
        "k": np.exp(log_k),
        "g": met.g_s(grid.s) / x,
        "rho_d": met.ricci_s(grid.s) / x,
        "L": np.exp(measure.log_L),
        "Lk": np.exp(measure.log_L + log_k),
    }
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(cols))
        for row in zip(*cols.values()):
            w.writerow([f"{v:.17g}" for v in row])


def identities_json(path, report: dict) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2)
