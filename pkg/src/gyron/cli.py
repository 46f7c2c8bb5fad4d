"""Command line front end: ``gyron rep | geometry | spectrum``.

Every command accepts ``--config file.json`` whose keys mirror the long
flags (dashes become underscores); explicit flags take precedence.
Exit codes: 0 success, 1 tolerance failure, 2 input error,
3 quadrature failure, 4 multi-well symbol.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field

from .algebra import (build_matrices, casimir_values, check_relations, enumerate_reps, make_label,
                      matrices_to_json, validate_params)
from .averaging import BosonicPolynomial, load_perturbation, project_resonant
from .errors import GyronError, InputError, MultiWell, QuadratureNotConverged
from .geometry import (default_grid, identities_json, integral_identities, measure_density,
                       write_geometry_table)
from .leaf import classical_volume, write_leaf_table
from .spectra import SpectrumSetup, compare_spectra, convergence_report, write_area_csv

log = logging.getLogger("gyron")

EXIT_OK, EXIT_TOL, EXIT_INPUT, EXIT_QUAD, EXIT_MULTIWELL = 0, 1, 2, 3, 4

DEFAULTS = {
    "l": 1, "m": 1, "hbar": 1.0, "r": None, "q": 0, "p": 0, "emax": None,
    "grid_x": 16, "grid_phi": None, "tol_rel": 1e-12, "tol_omega": 1e-8, "tol_dm": 1e-4,
    "tol_ricci": 1e-6, "perturbation": None, "out": None, "sweep_r": None, "energy": 1.0,
    "exact_only": False, "form": "derived",
}


@dataclass
class RunConfig:
    l: int
    m: int
    hbar: float
    r: int | None = None
    q: int = 0
    p: int = 0
    emax: float | None = None
    grid_x: int = 16
    grid_phi: int | None = None
    tol_rel: float = 1e-12
    tol_omega: float = 1e-8
    tol_dm: float = 1e-4
    tol_ricci: float = 1e-6
    perturbation: str | None = None
    out: str | None = None
    sweep_r: list = field(default_factory=list)
    energy: float = 1.0
    exact_only: bool = False
    form: str = "derived"

    def params(self):
        return validate_params(self.l, self.m, self.hbar)

    def labels(self):
        params = self.params()
        if self.r is not None:
            return [make_label(params, self.r, self.q, self.p)]
        if self.emax is not None:
            return enumerate_reps(params, self.emax)
        raise InputError("give either --r or --emax")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with the same keys as the flags")
    common.add_argument("--l", type=int)
    common.add_argument("--m", type=int)
    common.add_argument("--hbar", type=float)
    common.add_argument("--r", type=int)
    common.add_argument("--q", type=int)
    common.add_argument("--p", type=int)
    common.add_argument("--emax", type=float, help="select every label with energy <= emax")
    common.add_argument("--out", help="output file (rep) or directory (geometry, spectrum)")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="gyron", description="Resonance algebra representations, "
                                 "quantum geometry and spectra.")
    sub = ap.add_subparsers(dest="command", required=True)

    rep = sub.add_parser("rep", parents=[common], help="build representations and check relations")
    rep.add_argument("--tol-rel", type=float)

    geo = sub.add_parser("geometry", parents=[common], help="geometry tables and integral identities")
    geo.add_argument("--grid-x", type=int, help="Gauss-Legendre nodes per radial panel")
    geo.add_argument("--grid-phi", type=int, help="angular nodes")
    geo.add_argument("--tol-omega", type=float)
    geo.add_argument("--tol-dm", type=float)
    geo.add_argument("--tol-ricci", type=float)
    geo.add_argument("--form", choices=["derived", "printed"], help="measure density form")

    spc = sub.add_parser("spectrum", parents=[common], help="exact and Bohr-Sommerfeld spectra")
    spc.add_argument("--perturbation", help="JSON perturbation file")
    spc.add_argument("--sweep-r", help="comma separated r values at fixed --energy")
    spc.add_argument("--energy", type=float, help="classical energy for --sweep-r")
    spc.add_argument("--exact-only", action="store_true", default=None)
    return ap


def build_config(ns: argparse.Namespace) -> RunConfig:
    """Merge defaults, the optional config file and explicit flags."""
    values = dict(DEFAULTS)
    if ns.config:
        try:
            with open(ns.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {ns.config}: {exc}") from None
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        values.update(loaded)
    for key in DEFAULTS:
        v = getattr(ns, key, None)
        if v is not None:
            values[key] = v
    sweep = values["sweep_r"]
    if isinstance(sweep, str):
        try:
            sweep = [int(t) for t in sweep.split(",") if t.strip()]
        except ValueError:
            raise InputError(f"bad --sweep-r value {values['sweep_r']!r}") from None
    values["sweep_r"] = list(sweep or [])
    cfg = RunConfig(**values)
    for name in ("tol_rel", "tol_omega", "tol_dm", "tol_ricci"):
        if not getattr(cfg, name) > 0:
            raise InputError(f"{name} must be positive")
    if cfg.perturbation is not None and not os.path.isfile(cfg.perturbation):
        raise InputError(f"perturbation file not found: {cfg.perturbation}")
    if cfg.out is not None:
        parent = os.path.dirname(os.path.abspath(cfg.out))
        if not os.path.isdir(parent):
            raise InputError(f"output location not found: {parent}")
    return cfg


def _write_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _outdir(cfg: RunConfig, default: str) -> str:
    path = cfg.out or default
    os.makedirs(path, exist_ok=True)
    return path


def cmd_rep(cfg: RunConfig) -> int:
    params = cfg.params()
    reps, failures = [], []
    for label in cfg.labels():
        log.info("rep %s", label.key)
        G = build_matrices(params, label)
        rel = check_relations(G)
        cas = casimir_values(G, label=label)
        scale = rel.scale
        casimir = {"C": cas.c_residual / scale, "kappa": cas.kappa_residual / max(1.0, abs(label.energy))}
        ok = rel.ok(cfg.tol_rel) and max(casimir.values()) <= cfg.tol_rel
        entry = {"matrices": matrices_to_json(G), "relations": rel.relative, "casimir": casimir,
                 "kappa": cas.kappa, "ok": ok}
        reps.append(entry)
        if not ok:
            bad = {k: v for k, v in {**rel.relative, **casimir}.items() if v > cfg.tol_rel}
            failures.append({"label": list(label.key), "residuals": bad})
    doc = {"l": params.l, "m": params.m, "hbar": params.hbar, "tolerance": cfg.tol_rel,
           "representations": reps, "failures": failures, "ok": not failures}
    _write_json(cfg.out or "rep.json", doc)
    if failures:
        json.dump({"failures": failures}, sys.stderr)
        sys.stderr.write("\n")
    return EXIT_OK if not failures else EXIT_TOL


def cmd_geometry(cfg: RunConfig) -> int:
    params = cfg.params()
    out = _outdir(cfg, "geometry_out")
    failures = []
    tol = {"omega": cfg.tol_omega, "dm": cfg.tol_dm, "ricci": cfg.tol_ricci}
    for label in cfg.labels():
        tag = f"r{label.r}_q{label.q}_p{label.p}"
        log.info("geometry %s", label.key)
        grid = default_grid(params, label, n_phi=cfg.grid_phi, order=cfg.grid_x)
        measure = measure_density(params, label, grid, form=cfg.form)
        ident = integral_identities(params, label, grid, measure)
        ident["tolerances"] = tol
        err = {"omega": abs(ident["omega_integral"] - label.r),
               "dm": abs(ident["dm_integral"] - (label.r + 1))}
        if label.r >= 1:
            err["ricci"] = abs(ident["ricci_integral"] + 2)
        ident["errors"] = err
        ident["ok"] = all(err[k] <= tol[k] for k in err)
        ident["classical_volume"] = classical_volume(label.energy, params) if label.energy > 0 else 0.0
        identities_json(os.path.join(out, f"identities_{tag}.json"), ident)
        write_geometry_table(os.path.join(out, f"geometry_{tag}.csv"), params, label, grid, measure)
        if label.energy > 0:
            write_leaf_table(os.path.join(out, f"leaf_{tag}.csv"), label.energy, params, grid.x)
        if not ident["ok"]:
            failures.append({"label": list(label.key), "errors": err})
    if failures:
        json.dump({"failures": failures}, sys.stderr)
        sys.stderr.write("\n")
    return EXIT_OK if not failures else EXIT_TOL


def _perturbation(cfg: RunConfig) -> BosonicPolynomial:
    if cfg.perturbation is None:
        # default: the basic gyron Hamiltonian A+ + A- written in ladder operators
        l, m = cfg.l, cfg.m
        return BosonicPolynomial({(0, l, m, 0): 1.0, (m, 0, 0, l): 1.0})
    return load_perturbation(cfg.perturbation)


def cmd_spectrum(cfg: RunConfig) -> int:
    out = _outdir(cfg, "spectrum_out")
    B = _perturbation(cfg)
    if cfg.sweep_r:
        params0 = validate_params(cfg.l, cfg.m, 1.0)
        F1 = project_resonant(B, params0).F1

        def hamiltonian(G):
            from .averaging import realize_in_rep

            return realize_in_rep(F1, G.params, G.label)

        setup = SpectrumSetup(cfg.l, cfg.m, cfg.energy, hamiltonian)
        report = convergence_report(setup, cfg.sweep_r)
        doc = report.to_json()
        doc["perturbation"] = F1.to_json()
        _write_json(os.path.join(out, "convergence.json"), doc)
        return EXIT_OK
    params = cfg.params()
    gyron = project_resonant(B, params)
    reports = []
    for label in cfg.labels():
        H = gyron.matrix(label)
        rep = compare_spectra(H, params, label, exact_only=cfg.exact_only)
        tag = f"r{label.r}_q{label.q}_p{label.p}"
        _write_json(os.path.join(out, f"spectrum_{tag}.json"), rep.to_json())
        if rep.area is not None:
            write_area_csv(os.path.join(out, f"area_{tag}.csv"), rep.area)
        reports.append(rep.to_json())
    _write_json(os.path.join(out, "summary.json"), {"perturbation": gyron.F1.to_json(), "labels": reports})
    return EXIT_OK


COMMANDS = {"rep": cmd_rep, "geometry": cmd_geometry, "spectrum": cmd_spectrum}


def main(argv=None) -> int:
    ns = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(ns)
        return COMMANDS[ns.command](cfg)
    except InputError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except QuadratureNotConverged as exc:
        print(f"error: QuadratureNotConverged: {exc}", file=sys.stderr)
        return EXIT_QUAD
    except MultiWell as exc:
        print(f"error: MultiWell: {exc}", file=sys.stderr)
        return EXIT_MULTIWELL
    except GyronError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_TOL


if __name__ == "__main__":
    sys.exit(main())
