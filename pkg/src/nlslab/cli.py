"""Command-line front door: solve, evolve, classify, sweep, selftest.

Every subcommand writes a run manifest adjacent to its primary output
(the resolved parameters including measured thresholds, input/output
digests, counters); re-running with that manifest as --config
reproduces the outputs bit-identically.  Exit codes: 0 success, 2
config/input error, 3 numerical failure, 4 undecided under --strict.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import os
import sys
import tempfile
from dataclasses import replace
from time import perf_counter

import numpy as np

from . import __version__
from .classify import ClassifyConfig, build_threshold_table, classify_run
from .errors import (DomainError, FormatError, NlslabError, NonFiniteData,
                     OutOfRange, ParseError)
from .evolve import EvolveConfig, run
from .functionals import ModelParams
from .grid import RadialField, norm_L2
from .groundstate import build_mcurve, certify_profile, solve_phi
from .modes import calibrate_delta_E, decompose, project_mass_sphere
from .spectrum import SpectralData, assemble_operators, solve_mu
from .store import (Config, RunManifest, decay_r_max, jsonable,
                    load_config, manifest_path, read_json_record,
                    read_manifest, read_snapshot, validate_config,
                    write_json_record, write_manifest, write_mcurve,
                    write_snapshot, write_table, write_trajectory,
                    INDEX_COLUMNS, config_from_parameters,
                    manifest_from_json, parse_config)

# node factors of the m-curve built for threshold tables: bracket omega
# on both sides, top node = 2 omega so the default omega_star is interior
_MCURVE_FACTORS = (0.6, 0.8, 1.0, 1.3, 1.6, 2.0, 2.4)

# classify-stage solver settings (on top of the config's dt/t_max/stride):
# grid-arrested collapse pins the step long before the gradient grows
# 1000-fold, so blowup certification tightens both terminal triggers
_CLASSIFY_BLOWUP_RATIO = 30.0
_CLASSIFY_DT_FLOOR = 1e-6
_CLASSIFY_MAX_STEPS = 200_000


def _sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _config_doc(cfg: Config) -> dict:
    doc = {"d": cfg.d, "p": cfg.p, "omega": cfg.omega, "n": cfg.n,
           "r_max": cfg.r_max, "dt": cfg.dt, "t_max": cfg.t_max,
           "t_far": cfg.t_far, "stride": cfg.stride, "seed": cfg.seed,
           "strict": cfg.strict}
    if cfg.inits:
        doc["inits"] = list(cfg.inits)
    return doc


def _emit_manifest(primary_out: str, parameters: dict, inputs: list,
                   outputs: list, counters: dict) -> None:
    digests = {}
    for p in inputs:
        digests[f"in:{os.path.basename(p)}"] = _sha256_file(p)
    for p in outputs:
        digests[f"out:{os.path.basename(p)}"] = _sha256_file(p)
    man = RunManifest(tool_version=__version__,
                      parameters=jsonable(parameters),
                      digests=digests, counters=jsonable(counters))
    write_manifest(man, manifest_path(primary_out))


def _resolve_config(args, flags: tuple) -> Config:
    """Defaults < --config file < explicit flags, with the decay-scale
    r_max rule applied when omega is given without r_max or config."""
    cfg = load_config(args.config) if getattr(args, "config", None) \
        else Config()
    updates = {}
    for attr, key in flags:
        v = getattr(args, attr, None)
        if v is not None:
            updates[key] = v
    if "omega" in updates and "r_max" not in updates \
            and getattr(args, "config", None) is None:
        updates["r_max"] = decay_r_max(updates["omega"])
    if updates:
        cfg = replace(cfg, **updates)
    validate_config(cfg)
    return cfg


def _parse_init(text: str, grid, gs, spec) -> RadialField:
    """Initial-data grammar: phi-scaled:LAM, phi-plus-mode:EPS,
    gaussian:A,SIGMA, file:PATH."""
    kind, _, arg = text.partition(":")
    try:
        if kind == "phi-scaled":
            lam = float(arg)
            return RadialField(grid, lam * gs.profile.values + 0.0j)
        if kind == "phi-plus-mode":
            eps = float(arg)
            uplus = spec.f1.values + 1j * spec.f2.values
            return RadialField(grid, gs.profile.values + eps * uplus)
        if kind == "gaussian":
            a_txt, _, s_txt = arg.partition(",")
            a, sigma = float(a_txt), float(s_txt)
            if sigma <= 0:
                raise DomainError(f"gaussian width must be positive, "
                                  f"got {sigma}")
            return RadialField(grid,
                               a * np.exp(-(grid.r / sigma) ** 2) + 0.0j)
        if kind == "file":
            f = read_snapshot(arg)
            if not f.grid.same_geometry(grid):
                raise DomainError(f"{arg}: snapshot grid (d={f.grid.d}, "
                                  f"n={f.grid.n}, r_max={f.grid.r_max:g}) "
                                  f"does not match the run grid")
            return f
    except ValueError:
        raise DomainError(f"cannot read the numbers in init spec "
                          f"{text!r}") from None
    raise DomainError(f"unknown init spec {text!r}; expected one of "
                      f"phi-scaled:LAM, phi-plus-mode:EPS, "
                      f"gaussian:A,SIGMA, file:PATH")


def _load_gs(phi_path: str):
    """Snapshot + adjacent manifest -> certified ground state."""
    field = read_snapshot(phi_path)
    mpath = manifest_path(phi_path)
    if not os.path.exists(mpath):
        raise ParseError(f"{phi_path}: no adjacent manifest {mpath}; "
                         f"(p, omega) come from the manifest the "
                         f"groundstate run wrote")
    pcfg = config_from_parameters(read_manifest(mpath).parameters)
    if pcfg.d != field.grid.d:
        raise DomainError(f"{phi_path}: manifest d = {pcfg.d} but the "
                          f"snapshot grid has d = {field.grid.d}")
    prm = ModelParams(field.grid.d, pcfg.p, pcfg.omega)
    return certify_profile(field, prm), pcfg


def _load_spectrum(spec_path: str, gs) -> SpectralData:
    """spec.json + companion .nlsr files -> SpectralData.

    The minimizer is rebuilt from its documented relation to f1 (unit
    L^2 norm, f1 a negative multiple); everything downstream reads only
    f1, f2, mu.
    """
    rec = read_json_record(spec_path)
    for key in ("omega", "nu", "mu", "companions"):
        if key not in rec:
            raise ParseError(f"{spec_path}: missing key {key!r}")
    base = os.path.dirname(os.path.abspath(spec_path))
    pair = {}
    for name in ("f1", "f2"):
        if name not in rec["companions"]:
            raise ParseError(f"{spec_path}: missing companion {name!r}")
        f = read_snapshot(os.path.join(base, rec["companions"][name]))
        if not f.grid.same_geometry(gs.profile.grid):
            raise DomainError(f"{spec_path}: companion {name} grid does "
                              f"not match the profile grid")
        pair[name] = RadialField(f.grid, np.real(f.values))
    if abs(rec["omega"] - gs.params.omega) > 1e-12:
        raise DomainError(f"{spec_path}: spectrum omega = {rec['omega']} "
                          f"but the profile has omega = {gs.params.omega}")
    f1 = pair["f1"]
    u = RadialField(f1.grid, -f1.values / norm_L2(f1))
    return SpectralData(params=gs.params, nu=float(rec["nu"]),
                        mu=float(rec["mu"]), f1=f1, f2=pair["f2"],
                        minimizer=u, diagnostics=rec.get("diagnostics", {}))


# -- subcommands -------------------------------------------------------------

def cmd_groundstate(args) -> int:
    cfg = _resolve_config(args, (("d", "d"), ("p", "p"),
                                 ("omega", "omega"), ("n", "n"),
                                 ("rmax", "r_max")))
    t0 = perf_counter()
    gs = solve_phi(cfg.grid(), cfg.params())
    write_snapshot(gs.profile, args.out)
    parameters = {"tool": "groundstate", **_config_doc(cfg)}
    counters = {"wall_seconds": perf_counter() - t0,
                "newton_iters": gs.newton_iters,
                "residual_h1": gs.residual_h1}
    _emit_manifest(args.out, parameters, [], [args.out], counters)
    print(f"groundstate omega={cfg.omega:g}: m={gs.m:.9g} "
          f"mass={gs.mass:.9g} residual_h1={gs.residual_h1:.3e} "
          f"-> {args.out}")
    return 0


def cmd_mcurve(args) -> int:
    cfg = _resolve_config(args, (("d", "d"), ("p", "p"), ("n", "n"),
                                 ("rmax", "r_max"),
                                 ("omega_min", "omega")))
    if args.samples < 2:
        raise DomainError(f"samples must be >= 2, got {args.samples}")
    if not args.omega_min < args.omega_max:
        raise DomainError("need omega-min < omega-max")
    t0 = perf_counter()
    omegas = np.linspace(args.omega_min, args.omega_max, args.samples)
    mc = build_mcurve(cfg.grid(), cfg.params(), omegas)
    write_mcurve(mc, args.out)
    parameters = {"tool": "mcurve", **_config_doc(cfg),
                  "omega_min": args.omega_min,
                  "omega_max": args.omega_max, "samples": args.samples}
    counters = {"wall_seconds": perf_counter() - t0,
                "residual_max": float(np.max(mc.residual))}
    _emit_manifest(args.out, parameters, [], [args.out], counters)
    print(f"mcurve {args.omega_min:g}..{args.omega_max:g} "
          f"({args.samples} samples) -> {args.out}")
    return 0


def cmd_spectrum(args) -> int:
    t0 = perf_counter()
    gs, pcfg = _load_gs(args.phi)
    spec = solve_mu(assemble_operators(gs), gs)
    base = args.out[:-5] if args.out.endswith(".json") else args.out
    companions = {"f1": os.path.basename(base) + ".f1.nlsr",
                  "f2": os.path.basename(base) + ".f2.nlsr"}
    out_dir = os.path.dirname(os.path.abspath(args.out))
    f1_path = os.path.join(out_dir, companions["f1"])
    f2_path = os.path.join(out_dir, companions["f2"])
    write_snapshot(spec.f1, f1_path)
    write_snapshot(spec.f2, f2_path)
    record = {"omega": gs.params.omega, "nu": spec.nu, "mu": spec.mu,
              "companions": companions, "diagnostics": spec.diagnostics}
    write_json_record(record, args.out)
    parameters = {"tool": "spectrum", **_config_doc(pcfg)}
    counters = {"wall_seconds": perf_counter() - t0,
                "iterations": spec.diagnostics.get("iterations", 0)}
    _emit_manifest(args.out, parameters, [args.phi],
                   [args.out, f1_path, f2_path], counters)
    print(f"spectrum omega={gs.params.omega:g}: nu={spec.nu:.9g} "
          f"mu={spec.mu:.9g} -> {args.out}")
    return 0


def cmd_evolve(args) -> int:
    t0 = perf_counter()
    gs, pcfg = _load_gs(args.phi)
    spec = _load_spectrum(args.spec, gs)
    cfg = pcfg if args.config is None else load_config(args.config)
    dt = args.dt if args.dt is not None else cfg.dt
    tmax = args.tmax if args.tmax is not None else cfg.t_max
    dist = calibrate_delta_E(gs, spec)
    psi0 = _parse_init(args.init, gs.profile.grid, gs, spec)
    rec = run(psi0, EvolveConfig(dt=dt, t_max=tmax, stride=cfg.stride),
              gs.params, gs, spec, dist)
    write_trajectory(rec, args.out)
    parameters = {"tool": "evolve", **_config_doc(cfg),
                  "d": gs.params.d, "p": gs.params.p,
                  "omega": gs.params.omega, "dt": dt, "t_max": tmax,
                  "init": args.init, "delta_E": dist.delta_E}
    inputs = [args.phi, args.spec]
    if args.init.startswith("file:"):
        inputs.append(args.init[5:])
    counters = {"wall_seconds": perf_counter() - t0,
                "n_steps": rec.n_steps,
                "mass_drift": rec.mass_drift,
                "hamiltonian_drift": rec.hamiltonian_drift}
    _emit_manifest(args.out, parameters, inputs, [args.out], counters)
    print(f"evolve {args.init}: status={rec.status} "
          f"t_end={rec.t[-1]:.6g} steps={rec.n_steps} -> {args.out}")
    return 0


def _classify_stack(cfg: Config):
    """Ground state, spectrum, calibration, m-curve, threshold table,
    classify config -- the full per-frequency stack."""
    grid, prm = cfg.grid(), cfg.params()
    gs = solve_phi(grid, prm)
    spec = solve_mu(assemble_operators(gs), gs)
    dist = calibrate_delta_E(gs, spec)
    nodes = [cfg.omega * f for f in _MCURVE_FACTORS]
    mc = build_mcurve(grid, prm, nodes)
    table = build_threshold_table(mc, cfg.omega, delta_E=dist.delta_E)
    ccfg = ClassifyConfig(
        gs=gs, spec=spec, dist=dist, table=table,
        evolve=EvolveConfig(dt=cfg.dt, t_max=cfg.t_max, stride=cfg.stride,
                            blowup_ratio=_CLASSIFY_BLOWUP_RATIO,
                            dt_floor=_CLASSIFY_DT_FLOOR,
                            max_steps=_CLASSIFY_MAX_STEPS),
        t_far=cfg.t_far, strict=cfg.strict)
    return gs, spec, dist, table, ccfg


def _classify_parameters(tool: str, cfg: Config, dist, table,
                         ccfg: ClassifyConfig) -> dict:
    return {"tool": tool, **_config_doc(cfg),
            "delta_E": dist.delta_E, "delta_star": ccfg.delta_star,
            "eps_omega_margin": float(table.eps_of_omega(cfg.omega)),
            "mcurve_nodes": [float(w) for w in table.mcurve.omega],
            "omega_star": table.omega_star,
            "lam_tol": ccfg.lam_tol, "k_tol": ccfg.k_tol,
            "decay_factor": ccfg.decay_factor,
            "blowup_ratio": _CLASSIFY_BLOWUP_RATIO,
            "dt_floor": _CLASSIFY_DT_FLOOR}


def _class_record(init_spec: str, c) -> dict:
    return {"init_spec": init_spec, "forward": c.forward,
            "backward": c.backward, "scenario": c.scenario,
            "evidence": c.evidence}


def cmd_classify(args) -> int:
    cfg = _resolve_config(args, (("d", "d"), ("p", "p"),
                                 ("omega", "omega")))
    if args.strict:
        cfg = replace(cfg, strict=True)
    t0 = perf_counter()
    gs, spec, dist, table, ccfg = _classify_stack(cfg)
    psi0 = _parse_init(args.init, gs.profile.grid, gs, spec)
    c = classify_run(psi0, gs.params, ccfg)
    write_json_record(_class_record(args.init, c), args.out)
    parameters = {**_classify_parameters("classify", cfg, dist, table,
                                         ccfg), "init": args.init}
    counters = {"wall_seconds": perf_counter() - t0}
    inputs = [args.init[5:]] if args.init.startswith("file:") else []
    _emit_manifest(args.out, parameters, inputs, [args.out], counters)
    print(f"classify {args.init}: forward={c.forward} "
          f"backward={c.backward} scenario={c.scenario} -> {args.out}")
    if cfg.strict and c.scenario == "Undecided":
        return 4
    return 0


def _cell_filename(init_spec: str) -> str:
    safe = init_spec.replace(":", "-").replace(",", "_").replace("/", "_")
    return f"{safe}.class.json"


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if not cfg.inits:
        raise DomainError("sweep config needs a non-empty `inits` list "
                          "(whitespace-separated init specs)")
    os.makedirs(args.out, exist_ok=True)
    t0 = perf_counter()
    gs, spec, dist, table, ccfg = _classify_stack(cfg)
    rows = {name: [] for name in INDEX_COLUMNS}
    outputs = []
    undecided = 0
    for init_spec in cfg.inits:
        psi0 = _parse_init(init_spec, gs.profile.grid, gs, spec)
        c = classify_run(psi0, gs.params, ccfg)
        cell = os.path.join(args.out, _cell_filename(init_spec))
        write_json_record(_class_record(init_spec, c), cell)
        outputs.append(cell)
        rows["init_spec"].append(init_spec)
        rows["forward"].append(c.forward)
        rows["backward"].append(c.backward)
        rows["scenario"].append(str(c.scenario))
        rows["S_omega"].append(c.evidence["S_omega"])
        rows["mass"].append(c.evidence["mass"])
        rows["epsilon_omega"].append(c.evidence.get("epsilon_omega"))
        undecided += c.scenario == "Undecided"
        print(f"  {init_spec}: {c.forward}/{c.backward} -> {c.scenario}")
    index = os.path.join(args.out, "index.csv")
    write_table({k: np.asarray(v, dtype=object) for k, v in rows.items()},
                index, order=INDEX_COLUMNS)
    outputs.append(index)
    parameters = _classify_parameters("sweep", cfg, dist, table, ccfg)
    counters = {"wall_seconds": perf_counter() - t0,
                "cells": len(cfg.inits), "undecided": undecided}
    _emit_manifest(index, parameters, [args.config], outputs, counters)
    print(f"sweep: {len(cfg.inits)} cells, {undecided} undecided "
          f"-> {index}")
    if cfg.strict and undecided:
        return 4
    return 0


def cmd_selftest(args) -> int:
    """Fast invariant battery on a coarse grid; prints one line each."""
    failures = 0

    def check(name, fn):
        nonlocal failures
        try:
            fn()
            print(f"PASS {name}")
        except Exception as exc:  # noqa: BLE001 - report, don't die
            failures += 1
            print(f"FAIL {name}: {type(exc).__name__}: {exc}")

    cfg = Config(n=1024)
    grid, prm = cfg.grid(), cfg.params()
    state = {}

    def snapshot_roundtrip():
        rng = np.random.default_rng(cfg.seed)
        f = RadialField(grid, rng.standard_normal(grid.n)
                        + 1j * rng.standard_normal(grid.n))
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "f.nlsr")
            write_snapshot(f, path)
            g = read_snapshot(path)
            assert np.array_equal(g.values, f.values)
            blob = open(path, "rb").read()
            open(path, "wb").write(blob[:-8])
            try:
                read_snapshot(path)
                raise AssertionError("truncation not detected")
            except FormatError:
                pass

    def config_rules():
        assert parse_config("") == Config()
        assert parse_config("omega = 0.02").r_max >= 12.0 / math.sqrt(0.02)
        try:
            parse_config("p = 3.5")
            raise AssertionError("inadmissible p accepted")
        except DomainError:
            pass
        try:
            parse_config("nonsense = 1")
            raise AssertionError("unknown key accepted")
        except ParseError:
            pass

    def manifest_roundtrip():
        man = RunManifest(tool_version=__version__,
                          parameters={"d": 4, "p": 2.5},
                          digests={"out:a": "00"},
                          counters={"wall_seconds": 0.25})
        text = man.to_json()
        assert manifest_from_json(text).to_json() == text

    def groundstate_certificate():
        gs = solve_phi(grid, prm)
        assert gs.residual_h1 < 1e-6 * norm_L2(gs.profile)
        # K identity is O(h^2); ~1.5e-4 on the n=1024 grid.
        assert abs(gs.k_rel) < 1e-3 and abs(gs.nehari_rel) < 1e-6
        state["gs"] = gs

    def spectrum_certificate():
        spec = solve_mu(assemble_operators(state["gs"]), state["gs"])
        assert spec.nu < 0 and spec.mu == math.sqrt(-spec.nu)
        assert abs(spec.diagnostics["pairing"] - 1.0) < 1e-6
        state["spec"] = spec

    def mode_calibration():
        gs, spec = state["gs"], state["spec"]
        dist = calibrate_delta_E(gs, spec)
        eps = 1e-3
        psi = project_mass_sphere(
            RadialField(grid, gs.profile.values
                        + eps * (spec.f1.values + 1j * spec.f2.values)),
            gs)
        coords = decompose(psi, gs, spec, dist)
        assert abs(coords.d_omega / eps - math.sqrt(spec.mu / 2.0)) < 0.01
        state["dist"] = dist

    def delta_chain():
        ccfg = ClassifyConfig(gs=state["gs"], spec=state["spec"],
                              dist=state["dist"])
        assert 0 < ccfg.eps_star < ccfg.r_star < ccfg.delta_star \
            < ccfg.delta_E

    check("snapshot round-trip and truncation detection",
          snapshot_roundtrip)
    check("config defaults, decay rule, rejections", config_rules)
    check("manifest round-trip is byte-identical", manifest_roundtrip)
    check("ground-state certificate (n=1024)", groundstate_certificate)
    if "gs" in state:
        check("spectrum certificate (n=1024)", spectrum_certificate)
    if "spec" in state:
        check("mode-coordinate calibration", mode_calibration)
    if "dist" in state:
        check("delta chain ordering", delta_chain)
    print(f"selftest: {'ok' if failures == 0 else f'{failures} failed'}")
    return 0 if failures == 0 else 3


# -- parser ------------------------------------------------------------------

def _add_config(sp) -> None:
    sp.add_argument("--config", default=None,
                    help="key = value file or a run manifest")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="nlslab",
        description="Radial lab for the combined-power nonlinear "
                    "Schroedinger equation")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("groundstate", help="solve the profile at omega")
    sp.add_argument("--d", type=int, default=None)
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--omega", type=float, default=None)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--rmax", type=float, default=None)
    sp.add_argument("--out", required=True, help="output FILE.nlsr")
    _add_config(sp)
    sp.set_defaults(func=cmd_groundstate)

    sp = sub.add_parser("mcurve", help="action/mass curve over omega")
    sp.add_argument("--d", type=int, default=None)
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--omega-min", type=float, required=True)
    sp.add_argument("--omega-max", type=float, required=True)
    sp.add_argument("--samples", type=int, required=True)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--rmax", type=float, default=None)
    sp.add_argument("--out", required=True, help="output mcurve.csv")
    _add_config(sp)
    sp.set_defaults(func=cmd_mcurve)

    sp = sub.add_parser("spectrum",
                        help="unstable eigenpair of a stored profile")
    sp.add_argument("--phi", required=True,
                    help="profile FILE.nlsr (manifest adjacent)")
    sp.add_argument("--out", required=True, help="output spec.json")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("evolve", help="integrate an initial state")
    sp.add_argument("--init", required=True,
                    help="phi-scaled:LAM | phi-plus-mode:EPS | "
                         "gaussian:A,SIGMA | file:PATH")
    sp.add_argument("--phi", required=True,
                    help="profile FILE.nlsr (manifest adjacent)")
    sp.add_argument("--spec", required=True, help="spec.json")
    sp.add_argument("--dt", type=float, default=None)
    sp.add_argument("--tmax", type=float, default=None)
    sp.add_argument("--out", required=True, help="output traj.csv")
    _add_config(sp)
    sp.set_defaults(func=cmd_evolve)

    sp = sub.add_parser("classify",
                        help="label forward/backward behavior")
    sp.add_argument("--init", required=True)
    sp.add_argument("--d", type=int, default=None)
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--omega", type=float, default=None)
    sp.add_argument("--strict", action="store_true",
                    help="refuse data above the variational threshold")
    sp.add_argument("--out", required=True, help="output class.json")
    _add_config(sp)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("sweep", help="classify a grid of initial data")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("selftest", help="run the invariant battery")
    sp.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, FormatError, NonFiniteData, DomainError,
            OutOfRange) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NlslabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
