"""Gyron spectra: exact diagonalization and Bohr-Sommerfeld quantization.

The semiclassical levels solve ``A(lambda) = k + 1/2`` where

    A(lambda) = (1/2 pi hbar) int_{F_eff <= lambda} (omega - (hbar/2) rho)

and ``F_eff = f - (hbar/4) Delta f`` with ``Delta = (2/g) d dbar``.  Per
``ds dphi`` the integrand is ``sigma(s) / 2 pi`` with
``sigma = 2 Var_k - Var_Q / 2``, whose primitive is known in closed form,
``Sigma(s) = 2 mu_k(s) - mu_Q(s) / 2``, rising from 0 to ``r + 1``.

The area is computed ring by ring: for each ``s`` the angular measure
``m(s, lambda)`` of ``{phi : F_eff(s, phi) <= lambda}`` is exact (closed form
for band width 1), rings fully inside the region contribute through
``Sigma``, and the partial rings are integrated with Gauss-Legendre after
a cosine substitution that absorbs the square-root behaviour at the
turning rings.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.ndimage import label as label_components
from scipy.optimize import minimize_scalar

from .algebra import GeneratorMatrices, RepLabel, ResonanceParams, build_matrices, make_label
from .errors import GyronError, MultiWell, NotHermitian, RootBracketFailure
from .geometry import (SphereGrid, SymbolCalculus, SymbolField, _centred_moments, _softmax_stats,
                       grid_window, kernel)

__all__ = [
    "exact_spectrum",
    "effective_symbol",
    "EffectiveSymbol",
    "AreaFunction",
    "area_function",
    "bs_spectrum",
    "check_single_well",
    "SpectrumReport",
    "SpectrumSetup",
    "compare_spectra",
    "convergence_report",
    "write_area_csv",
]


def exact_spectrum(H, tol: float = 1e-12) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix.

    Raises :class:`NotHermitian` when ``|H - H^*| > tol |H|``.
    """
    H = np.asarray(H)
    scale = max(np.abs(H).max(initial=0.0), np.finfo(float).tiny)
    if np.abs(H - H.conj().T).max(initial=0.0) > tol * scale:
        raise NotHermitian("matrix is not Hermitian to the requested tolerance")
    Hs = 0.5 * (H + H.conj().T)
    w, v = np.linalg.eigh(Hs)
    resid = np.linalg.norm(Hs @ v - v * w, axis=0)
    norm = np.linalg.norm(Hs, 2) if Hs.size else 0.0
    if np.any(resid > 1e-10 * max(norm, np.finfo(float).tiny)):
        raise GyronError("eigensolver residual above 1e-10 |H|")
    return w


class EffectiveSymbol:
    """``F_eff = f - (hbar/4) Delta f`` of a Hermitian matrix, evaluable anywhere.

    In band form the weight of matrix element ``(n, t)`` is
    ``1 - ((n - mu)(t - mu) - var) / (2 var)``; ``hbar`` cancels.
    """

    def __init__(self, F, params: ResonanceParams, label: RepLabel):
        F = np.asarray(F)
        if np.abs(F - F.conj().T).max(initial=0.0) > 1e-12 * max(1.0, np.abs(F).max(initial=0.0)):
            raise NotHermitian("effective symbol needs a Hermitian matrix")
        self.F = F
        self.params = params
        self.label = label
        self.calc = SymbolCalculus(params, label)
        self._diags = []
        for d in range(label.r + 1):
            diag = np.diagonal(F, offset=-d)
            if np.any(diag):
                n = np.arange(diag.size) + d
                self._diags.append((d, n, n - d, diag))
        self.bandwidth = max((d for d, *_ in self._diags), default=0)

    def bands(self, s) -> dict[int, np.ndarray]:
        """Bands ``B_d(s)`` for ``d >= 0``; ``B_-d`` is the conjugate of ``B_d``."""
        pi = self.calc.kernel.weights(np.atleast_1d(np.asarray(s, float)))[0]
        W = np.sqrt(pi)
        dev, _, _, var = _centred_moments(pi, np.arange(self.label.r + 1))
        inv = 1.0 / (2.0 * np.maximum(var, np.finfo(float).tiny))[:, None]
        out = {}
        for d, n, t, diag in self._diags:
            w = W[:, n] * W[:, t] * (1.0 - (dev[:, n] * dev[:, t] - var[:, None]) * inv)
            out[d] = w @ diag
        return out

    @staticmethod
    def _sum_bands(b, phi):
        out = 0.0
        for d, v in b.items():
            term = np.real(v * np.exp(-1j * d * phi))
            out = out + (term if d == 0 else 2 * term)
        return out

    def __call__(self, s, phi):
        s, phi = np.broadcast_arrays(np.asarray(s, float), np.asarray(phi, float))
        b = self.bands(s.ravel())
        return (self._sum_bands(b, phi.ravel()) + np.zeros(s.size)).reshape(s.shape)

    def field(self, grid: SphereGrid) -> SymbolField:
        return self.calc.field(self.F, grid, "eff", "F_eff")

    # ring quantities -------------------------------------------------
    def _b0_b1(self, s):
        b = self.bands(s)
        zero = np.zeros(np.size(s))
        b0 = np.real(b.get(0, zero))
        b1 = b.get(1, zero.astype(complex))
        return b0, b1

    def ring_extrema(self, s):
        """Minimum and maximum of ``F_eff`` over ``phi`` on the rings ``s``."""
        s = np.atleast_1d(np.asarray(s, float))
        if self.bandwidth <= 1:
            b0, b1 = self._b0_b1(s)
            amp = 2 * np.abs(b1)
            return b0 - amp, b0 + amp
        vals, _ = self._ring_samples(s)
        return vals.min(axis=1), vals.max(axis=1)

    def _ring_samples(self, s, per_band: int = 64):
        n_phi = per_band * self.bandwidth
        phi = 2 * np.pi * np.arange(n_phi) / n_phi
        b = {d: v[:, None] for d, v in self.bands(s).items()}
        vals = self._sum_bands(b, phi[None, :]) + np.zeros((s.size, n_phi))
        return vals, phi

    def phi_measure(self, s, lam):
        """Angular measure of ``{F_eff(s, .) <= lam}``, elementwise."""
        s = np.atleast_1d(np.asarray(s, float))
        lam = np.broadcast_to(np.asarray(lam, float), s.shape)
        if self.bandwidth == 0:
            b0, _ = self._b0_b1(s)
            return np.where(b0 <= lam, 2 * np.pi, 0.0)
        if self.bandwidth == 1:
            b0, b1 = self._b0_b1(s)
            amp = 2 * np.abs(b1)
            with np.errstate(divide="ignore", invalid="ignore"):
                c = (lam - b0) / amp
            c = np.where(amp > 0, c, np.where(lam >= b0, 1.0, -1.0))
            return 2 * np.pi - 2 * np.arccos(np.clip(c, -1.0, 1.0))
        return self._phi_measure_sampled(s, lam)

    def _phi_measure_sampled(self, s, lam):
        vals, phi = self._ring_samples(s)
        g = vals - lam[:, None]
        g_next = np.roll(g, -1, axis=1)
        h = phi[1] - phi[0]
        below = (g <= 0) & (g_next <= 0)
        total = below.sum(axis=1) * h
        cross = (g <= 0) != (g_next <= 0)
        rows, cols = np.nonzero(cross)
        if rows.size:
            b = self.bands(s[rows])
            lam_r = lam[rows]

            def f(p):
                return self._sum_bands(b, p) - lam_r

            a = phi[cols]
            c = a + h
            fa, fc = g[rows, cols], g_next[rows, cols]
            for _ in range(60):  # Illinois regula falsi
                p = c - fc * (c - a) / (fc - fa)
                fp = f(p)
                same = np.sign(fp) == np.sign(fc)
                a = np.where(same, a, c)
                fa = np.where(same, fa * 0.5, fc)
                c, fc = p, fp
                if np.all(np.abs(c - a) < 1e-14):
                    break
            root = c
            start_below = g[rows, cols] <= 0
            frac = np.where(start_below, root - phi[cols], phi[cols] + h - root)
            np.add.at(total, rows, frac)
        return total


def effective_symbol(F, params: ResonanceParams, label: RepLabel, grid: SphereGrid) -> SymbolField:
    """``F_eff = f - (hbar/4) Delta f`` tabulated on ``grid``."""
    return EffectiveSymbol(F, params, label).field(grid)


# ---------------------------------------------------------------------------
# area


def _area_primitive(params, label, s):
    """``Sigma(s) = 2 mu_k - mu_Q / 2`` and its density ``sigma``."""
    k = kernel(params, label)
    _, mu_k, var_k = k.weights(s)
    log_d = k.log_d
    if log_d.size:
        _, mu_q, var_q = _softmax_stats(log_d, np.atleast_1d(s))
    else:
        mu_q = var_q = np.zeros_like(mu_k)
    return 2 * mu_k - 0.5 * mu_q, 2 * var_k - 0.5 * var_q


@dataclass
class AreaFunction:
    """``lambda -> A(lambda)`` of a single-well effective symbol.

    ``__call__`` evaluates the area exactly (up to quadrature); ``lam`` and
    ``values`` hold samples used for the monotone interpolant and the CSV.
    """

    symbol: EffectiveSymbol
    window: tuple[float, float]
    f_min: float
    f_max: float
    s_min: float
    s_max: float
    total: float
    table: tuple = ()
    lam: np.ndarray = field(default_factory=lambda: np.zeros(0))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    panels_per_unit: float = 1.5
    order: int = 12

    @property
    def params(self):
        return self.symbol.params

    @property
    def label(self):
        return self.symbol.label

    def interpolant(self) -> PchipInterpolator:
        return PchipInterpolator(self.lam, self.values)

    def sigma_cumulative(self, s):
        return _area_primitive(self.params, self.label, np.atleast_1d(s))[0]

    def __call__(self, lam):
        lam = np.atleast_1d(np.asarray(lam, float))
        out = np.empty(lam.size)
        for start in range(0, lam.size, 16):
            out[start:start + 16] = self._area(lam[start:start + 16])
        return out

    def _area(self, lam):
        sym = self.symbol
        S0, S1 = self.window
        if sym.bandwidth == 0:
            return self._area_axisymmetric(lam)
        # Fmin falls then rises around s_min; Fmax rises then falls around s_max
        a1 = self._branch_root(0, lam, S0, self.s_min, decreasing=True)
        a2 = self._branch_root(0, lam, self.s_min, S1, decreasing=False)
        b1 = self._branch_root(1, lam, S0, self.s_max, decreasing=False)
        b2 = self._branch_root(1, lam, self.s_max, S1, decreasing=True)
        bps = np.sort(np.stack([np.full_like(lam, S0), a1, a2, b1, b2, np.full_like(lam, S1)], axis=1), axis=1)
        total = np.zeros_like(lam)
        for j in range(5):
            u, v = bps[:, j], bps[:, j + 1]
            width = v - u
            live = width > 1e-15
            if not np.any(live):
                continue
            mid = 0.5 * (u + v)
            lo_r, hi_r = sym.ring_extrema(mid)
            full = live & (hi_r <= lam)
            part = live & (lo_r < lam) & (hi_r > lam)
            if np.any(full):
                sig = self.sigma_cumulative(np.concatenate([v[full], u[full]]))
                n = int(full.sum())
                total[full] += sig[:n] - sig[n:]
            if np.any(part):
                total[part] += self._partial(u[part], v[part], lam[part]) / (2 * np.pi)
        return total

    def _partial(self, u, v, lam):
        """``int_u^v sigma(s) m(s, lam) ds`` with ``s = u + (v-u)(1 - cos th)/2``."""
        width = float(np.max(v - u))
        n_pan = int(np.clip(math.ceil(width * self.panels_per_unit), 8, 256))
        t, w = np.polynomial.legendre.leggauss(self.order)
        edges = np.linspace(0.0, np.pi, n_pan + 1)
        th = (0.5 * (edges[1:] + edges[:-1])[:, None] + 0.5 * np.diff(edges)[:, None] * t).ravel()
        wt = (0.5 * np.diff(edges)[:, None] * w).ravel()
        half = 0.5 * (v - u)
        s = u[:, None] + half[:, None] * (1 - np.cos(th))[None, :]
        jac = half[:, None] * np.sin(th)[None, :]
        lam_b = np.broadcast_to(lam[:, None], s.shape)
        m = self.symbol.phi_measure(s.ravel(), lam_b.ravel()).reshape(s.shape)
        sig = _area_primitive(self.params, self.label, s.ravel())[1].reshape(s.shape)
        return (sig * m * jac) @ wt

    def _area_axisymmetric(self, lam):
        sym = self.symbol
        S0, S1 = self.window
        f = lambda s: sym.ring_extrema(s)[0]
        increasing = f(np.array([S1]))[0] >= f(np.array([S0]))[0]
        root = self._branch_root(0, lam, S0, S1, decreasing=not increasing)
        cum = self.sigma_cumulative(root)
        ends = self.sigma_cumulative(np.array([S0, S1]))
        return (cum - ends[0]) if increasing else (ends[1] - cum)


    def _branch_root(self, which: int, lam, lo: float, hi: float, decreasing: bool):
        """Root of ``ring_extrema(s)[which] = lam`` on a monotone branch ``[lo, hi]``.

        The tabulated profile brackets each root within one table cell and
        Illinois iterations on the exact profile polish it.  Values of ``lam``
        outside the branch range clamp to the matching end.
        """
        fun = lambda s: self.symbol.ring_extrema(s)[which]
        s_tab, f_tab = self.table[0], self.table[1 + which]
        inside = (s_tab > lo) & (s_tab < hi)
        ss = np.concatenate([[lo], s_tab[inside], [hi]])
        ff = np.concatenate([fun(np.array([lo])), f_tab[inside], fun(np.array([hi]))])
        sign = -1.0 if decreasing else 1.0
        g = np.maximum.accumulate(sign * ff)
        target = sign * lam
        idx = np.searchsorted(g, target)
        out = np.where(idx == 0, lo, hi).astype(float)
        mid = (idx > 0) & (idx < ss.size)
        if not np.any(mid):
            return out
        j = idx[mid]
        tgt = target[mid]
        a, c = ss[j - 1], ss[j]
        fa, fc = g[j - 1] - tgt, g[j] - tgt
        h = lambda s: sign * fun(s) - tgt
        for _ in range(50):
            denom = np.where(fc != fa, fc - fa, 1.0)
            p = c - fc * (c - a) / denom
            p = np.where((p - a) * (p - c) <= 0, p, 0.5 * (a + c))
            fp = h(p)
            same = np.sign(fp) == np.sign(fc)
            a = np.where(same, a, c)
            fa = np.where(same, fa * 0.5, fc)
            c, fc = p, fp
            if np.all((np.abs(c - a) < 1e-13) | (fc == 0)):
                break
        out[mid] = c
        return out


def _check_unimodal(vals, kind: str, tol: float) -> None:
    i = int(np.argmin(vals) if kind == "min" else np.argmax(vals))
    d = np.diff(vals)
    if kind == "max":
        d = -d
    if np.any(d[:i] > tol) or np.any(d[i:] < -tol):
        raise MultiWell(f"ring {kind}imum of F_eff is not unimodal; level sets have several components")


def _components(mask: np.ndarray) -> int:
    """Connected components of a mask on the ``(s, phi)`` sphere chart.

    Columns wrap around in ``phi``; the first and last rows each collapse
    to a pole point.
    """
    lab, n = label_components(mask)
    if n <= 1:
        return n
    parent = list(range(n + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        if a and b:
            parent[find(a)] = find(b)

    for a, b in zip(lab[:, 0], lab[:, -1]):
        union(a, b)
    for row in (lab[0], lab[-1]):
        live = row[row > 0]
        for a in live[1:]:
            union(a, live[0])
    return len({find(a) for a in range(1, n + 1)})


def check_single_well(symbol: EffectiveSymbol, window=None, n_s: int = 400, n_lam: int = 41) -> None:
    """Raise :class:`MultiWell` when some sampled level splits into several curves.

    For levels strictly between the extremes, both ``{F_eff <= lam}`` and
    ``{F_eff > lam}`` must be connected on the sphere.
    """
    if window is None:
        window = grid_window(symbol.params, symbol.label)
    s = np.linspace(*window, n_s)
    n_phi = 64 * max(1, symbol.bandwidth)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    vals = symbol(s[:, None] + 0 * phi[None, :], phi[None, :] + 0 * s[:, None])
    lo, hi = vals.min(), vals.max()
    if hi - lo <= 1e-12 * max(1.0, abs(hi)):
        return
    for lam in np.linspace(lo, hi, n_lam + 2)[1:-1]:
        below = vals <= lam
        if _components(below) > 1 or _components(~below) > 1:
            raise MultiWell(f"level F_eff = {lam:.6g} has several components")


def area_function(symbol: EffectiveSymbol, lam_grid=None, n_lam: int = 201,
                  n_check: int = 2001) -> AreaFunction:
    """Build the area function of a single-well effective symbol.

    Raises :class:`MultiWell` when the ring minimum or maximum of ``F_eff``
    has more than one local extremum in ``s`` (or, for an axisymmetric
    symbol, when ``F_eff`` is not monotone in ``s``).
    """
    params, label = symbol.params, symbol.label
    S0, S1 = grid_window(params, label)
    s = np.linspace(S0, S1, n_check)
    lo, hi = symbol.ring_extrema(s)
    scale = max(np.abs(lo).max(), np.abs(hi).max(), 1e-300)
    tol = 1e-11 * scale
    check_single_well(symbol, (S0, S1))
    if symbol.bandwidth == 0:
        d = np.diff(lo)
        if not (np.all(d >= -tol) or np.all(d <= tol)):
            raise MultiWell("axisymmetric F_eff is not monotone along the meridian")
    else:
        _check_unimodal(lo, "min", tol)
        _check_unimodal(hi, "max", tol)

    def refine(fun, i, sign):
        a, b = s[max(i - 1, 0)], s[min(i + 1, s.size - 1)]
        if a == b:
            return a, float(fun(np.array([a]))[0])
        res = minimize_scalar(lambda t: sign * fun(np.array([t]))[0], bounds=(a, b),
                              method="bounded", options={"xatol": 1e-12})
        cand = [(float(sign * fun(np.array([p]))[0]), p) for p in (a, b, res.x)]
        best = min(cand)
        return best[1], sign * best[0]

    s_min, f_min = refine(lambda t: symbol.ring_extrema(t)[0], int(np.argmin(lo)), 1.0)
    s_max, f_max = refine(lambda t: symbol.ring_extrema(t)[1], int(np.argmax(hi)), -1.0)
    ends = _area_primitive(params, label, np.array([S0, S1]))[0]
    area = AreaFunction(symbol, (S0, S1), f_min, f_max, s_min, s_max, float(ends[1] - ends[0]),
                        table=(s, lo, hi))
    if lam_grid is None:
        lam_grid = np.linspace(f_min, f_max, n_lam)
    lam_grid = np.asarray(lam_grid, float)
    vals = area(lam_grid)
    vals = np.where(lam_grid <= f_min, 0.0, np.where(lam_grid >= f_max, area.total, vals))
    area.lam, area.values = lam_grid, np.maximum.accumulate(vals)
    return area


def bs_spectrum(area: AreaFunction, params: ResonanceParams | None = None, tol: float = 1e-13) -> np.ndarray:
    """Solve ``A(lambda) = k + 1/2`` for every ``k`` with ``k + 1/2 <= A_max``.

    Brackets come from the sampled monotone interpolant; each root is then
    polished on the exact area function by vectorized Illinois iterations.
    """
    if area.label.r == 0:
        return np.array([float(np.real(area.symbol.F[0, 0]))])
    targets = np.arange(0, int(math.floor(area.total - 0.5 + 1e-9)) + 1) + 0.5
    lam, vals = area.lam, area.values
    idx = np.searchsorted(vals, targets)
    if np.any(idx == 0) or np.any(idx >= lam.size):
        raise RootBracketFailure("target area outside the sampled range")
    a, c = lam[idx - 1].copy(), lam[idx].copy()
    fa = vals[idx - 1] - targets
    fc = vals[idx] - targets
    # sampled values are exact evaluations, so [a, c] brackets each root
    for _ in range(100):
        p = c - fc * (c - a) / np.where(fc - fa == 0, 1.0, fc - fa)
        p = np.where((p > np.minimum(a, c)) & (p < np.maximum(a, c)), p, 0.5 * (a + c))
        fp = area(p) - targets
        same = np.sign(fp) == np.sign(fc)
        a = np.where(same, a, c)
        fa = np.where(same, fa * 0.5, fc)
        c, fc = p, fp
        if np.all(np.abs(c - a) <= tol * max(1.0, abs(area.f_max - area.f_min))):
            break
    return np.sort(c)


# ---------------------------------------------------------------------------
# reports


@dataclass
class SpectrumReport:
    label: RepLabel
    params: ResonanceParams
    exact: np.ndarray
    semiclassical: np.ndarray | None = None
    pairs: list = field(default_factory=list)
    max_abs_error: float | None = None
    middle_third_error: float | None = None
    convergence: list = field(default_factory=list)
    slope: float | None = None
    ratios: list = field(default_factory=list)
    area: AreaFunction | None = None

    @property
    def root_count(self) -> int | None:
        return None if self.semiclassical is None else int(len(self.semiclassical))

    def to_json(self) -> dict:
        lab = self.label
        return {
            "label": {"l": self.params.l, "m": self.params.m, "hbar": self.params.hbar,
                      "r": lab.r, "q": lab.q, "p": lab.p, "energy": lab.energy},
            "exact": [float(v) for v in self.exact],
            "semiclassical": None if self.semiclassical is None else [float(v) for v in self.semiclassical],
            "pairs": [[int(i), int(j)] for i, j in self.pairs],
            "max_abs_error": self.max_abs_error,
            "middle_third_error": self.middle_third_error,
            "convergence": self.convergence,
            "slope": self.slope,
            "ratios": self.ratios,
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)


def _middle_third(n: int) -> slice:
    return slice(n // 3, n - n // 3) if n >= 3 else slice(0, n)


def compare_spectra(H, params: ResonanceParams, label: RepLabel, exact_only: bool = False) -> SpectrumReport:
    """Exact and Bohr-Sommerfeld spectra of ``H`` on one label."""
    exact = exact_spectrum(H)
    rep = SpectrumReport(label, params, exact)
    if exact_only:
        return rep
    sym = EffectiveSymbol(H, params, label)
    area = area_function(sym)
    bs = bs_spectrum(area)
    n = min(len(bs), len(exact))
    rep.semiclassical = bs
    rep.pairs = [(i, i) for i in range(n)]
    err = np.abs(bs[:n] - exact[:n])
    rep.max_abs_error = float(err.max()) if n else None
    rep.middle_third_error = float(err[_middle_third(n)].max()) if n else None
    rep.area = area
    return rep


@dataclass(frozen=True)
class SpectrumSetup:
    """A Hamiltonian family swept in ``r`` at fixed classical energy ``E``.

    ``hbar = E / (l m r)`` and the label is ``(r, 0, 0)``, whose energy is
    exactly ``E``.  ``hamiltonian`` maps generator matrices to a matrix.
    """

    l: int
    m: int
    E: float
    hamiltonian: Callable[[GeneratorMatrices], np.ndarray]

    def build(self, r: int):
        from .algebra import validate_params

        params = validate_params(self.l, self.m, self.E / (self.l * self.m * r))
        label = make_label(params, r)
        return params, label, self.hamiltonian(build_matrices(params, label))


def convergence_report(setup: SpectrumSetup, r_list=(10, 20, 40, 80)) -> SpectrumReport:
    """Middle-third Bohr-Sommerfeld error along an ``r`` sweep.

    The fitted log-log slope of the error against ``r`` (``-2`` for an
    ``O(hbar^2)`` error) and the error ratios between consecutive sweep
    entries are stored on the report of the largest ``r``.
    """
    rows, reports = [], []
    for r in r_list:
        params, label, H = setup.build(r)
        rep = compare_spectra(H, params, label)
        reports.append(rep)
        rows.append({"r": int(r), "hbar": params.hbar, "err": rep.middle_third_error,
                     "max_abs_error": rep.max_abs_error, "roots": rep.root_count})
    final = reports[-1]
    final.convergence = rows
    errs = np.array([row["err"] for row in rows], float)
    rs = np.array([row["r"] for row in rows], float)
    if np.all(errs > 0) and len(rows) > 1:
        final.slope = float(np.polyfit(np.log(rs), np.log(errs), 1)[0])
        final.ratios = [float(v) for v in errs[:-1] / errs[1:]]
    return final


def write_area_csv(path, area: AreaFunction) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "area"])
        for a, b in zip(area.lam, area.values):
            w.writerow([f"{a:.17g}", f"{b:.17g}"])
