"""Batch command-line front end.

    gaugecraft <spectrum|gauge-check|detect|evolve|modes>
               --config PATH --out DIR [--jobs N] [--set key=value ...]

Configs and metadata are JSON, tabular results are CSV (UTF-8, LF, header
row).  Runs are deterministic given (config, seed); every metadata file
carries the sha256 of the resolved config.  Exit codes: 0 success, 2 config
error, 3 numerical non-convergence, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .detect import DetectorSpec, detection_rate, rate_table, significant_transitions
from .dynamics import evolve, td_gauge_equivalence
from .errors import ConfigError, ConvergenceError, GaugecraftError, InvariantViolation
from .gaugecheck import (ambiguity_scan, converged_ground_energy, gauge_unitary,
                         verify_spectral_equivalence)
from .hamiltonians import (COULOMB, MULTIPOLAR, GaugeParam, build_beyond_dipole,
                           build_dipole, build_naive, build_time_dependent, couplings)
from .modes import build_from_grid, chi_from_qnm, completeness_residual, qnm_frequency_grid, solve_dielectric_1d
from .scenario import (Scenario, decode_complex_matrix, dielectric_from_json,
                       modeset_to_json, polariton_grid_from_json, qnm_from_json,
                       save_modeset)

COMMANDS = ("spectrum", "gauge-check", "detect", "evolve", "modes")


@dataclass(frozen=True)
class RunConfig:
    command: str
    config_path: Path
    out_dir: Path
    jobs: int
    overrides: tuple
    scenario: Scenario
    config_hash: str


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_metadata(cfg: RunConfig, extra: dict):
    meta = {
        "tool": "gaugecraft",
        "version": __version__,
        "command": cfg.command,
        "config_hash": cfg.config_hash,
        "seed": cfg.scenario.seed,
        "jobs": cfg.jobs,
    }
    meta.update(extra)
    (cfg.out_dir / "metadata.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2, default=str) + "\n",
        encoding="utf-8", newline="\n")


def apply_override(doc: dict, key: str, raw: str):
    """Set a dotted key path; values parse as JSON, falling back to string."""
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    parts = key.split(".")
    node = doc
    for p in parts[:-1]:
        if not isinstance(node, dict):
            raise ConfigError(f"override '{key}': '{p}' is not an object")
        node = node.setdefault(p, {})
    if not isinstance(node, dict):
        raise ConfigError(f"override '{key}' does not address an object")
    node[parts[-1]] = value


def parse_args(argv) -> RunConfig:
    parser = argparse.ArgumentParser(prog="gaugecraft", description=__doc__)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--out", required=True, type=Path)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE")
    args = parser.parse_args(argv)
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    scenario = Scenario.load(args.config)
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        apply_override(scenario.doc, key, raw)
    digest = hashlib.sha256(
        json.dumps(scenario.doc, sort_keys=True).encode("utf-8")).hexdigest()
    args.out.mkdir(parents=True, exist_ok=True)
    return RunConfig(args.command, args.config, args.out, args.jobs,
                     tuple(args.overrides), scenario, digest)


def _build_system(cfg: RunConfig):
    sc = cfg.scenario
    ms = sc.modeset()
    em = sc.emitter()
    g = sc.gauge()
    cutoffs = sc.cutoffs(ms.n_modes)
    bd = sc.section("beyond_dipole", required=False)
    if bd:
        fns = _beyond_dipole_profiles(bd, ms.n_modes)
        gauge_label = "coulomb" if g.theta == 0.0 else "multipolar"
        nodes = bd.get("quadrature_order", 65)
        return ms, em, build_beyond_dipole(ms.chi, fns, em, gauge_label, cutoffs,
                                           quad_nodes=int(nodes))
    if sc.truncation() == "naive":
        return ms, em, build_naive(ms, em, g, cutoffs, order=sc.naive_order())
    return ms, em, build_dipole(ms, em, g, cutoffs, longitudinal=sc.longitudinal())


def _beyond_dipole_profiles(section, n_modes):
    descriptors = section.get("profile")
    if descriptors is None:
        raise ConfigError("missing key 'beyond_dipole.profile'")
    if isinstance(descriptors, dict):
        descriptors = [descriptors] * n_modes
    if len(descriptors) != n_modes:
        raise ConfigError(f"'beyond_dipole.profile' needs {n_modes} descriptors")
    fns = []
    for k, desc in enumerate(descriptors):
        kind = desc.get("kind")
        path = f"beyond_dipole.profile[{k}]"
        if kind == "constant":
            value = decode_complex_matrix(desc.get("value"), f"{path}.value", (3,))
            fns.append(lambda x, v=value: v)
        elif kind == "cosine":
            amp = decode_complex_matrix(desc.get("amplitude"), f"{path}.amplitude", (3,))
            kvec = np.asarray(desc.get("k"), dtype=float).reshape(3)
            fns.append(lambda x, a=amp, kv=kvec: a * np.cos(kv @ np.asarray(x, dtype=float)))
        else:
            raise ConfigError(f"'{path}.kind' must be 'constant' or 'cosine'")
    return fns


def cmd_spectrum(cfg: RunConfig) -> int:
    ms, em, bundle = _build_system(cfg)
    vals = bundle.eigenvalues()
    write_csv(cfg.out_dir / "eigenvalues.csv", ("index", "energy"),
              [(k, float(v)) for k, v in enumerate(vals)])
    write_metadata(cfg, {
        "builder": bundle.metadata.get("builder"),
        "truncation": bundle.metadata.get("truncation"),
        "cutoffs": list(bundle.metadata.get("cutoffs", ())),
        "gauge_theta": bundle.gauge.theta,
        "couplings": [[v.real, v.imag] for v in (bundle.metadata.get("eta") or [])],
        "dimension": bundle.space.dim,
    })
    return 0


def cmd_gauge_check(cfg: RunConfig) -> int:
    sc = cfg.scenario
    ms, em = sc.modeset(), sc.emitter()
    if em.n_levels != 2:
        raise ConfigError("'emitter' must be a two-level system for gauge-check")
    section = sc.section("gauge_check", required=False)
    chi = float(ms.chi_diag[0])
    if ms.n_modes != 1:
        raise ConfigError("gauge-check runs on single-mode scenarios")
    omega0 = float(em.levels[0] - em.levels[1])
    spectral_tol = float(section.get("spectral_tol", 1e-6)) * chi
    ground_tol = float(section.get("ground_tol", 1e-7)) * chi
    k = int(section.get("k", 5))
    eta_grid = section.get("eta_grid")
    if eta_grid is None:
        eta_grid = [float(abs(couplings(ms, em).scalars[0]))]
    order = sc.naive_order()

    def scan_one(eta):
        return ambiguity_scan(chi, omega0, [float(eta)], tol=ground_tol, order=order)[0]

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(scan_one, eta_grid))
    else:
        rows = [scan_one(eta) for eta in eta_grid]
    write_csv(cfg.out_dir / "gauge_report.csv",
              ("eta", "naive_gap", "correct_gap", "cutoff", "converged"),
              [(r.eta, r.naive_gap, r.correct_gap, r.cutoff, r.converged) for r in rows])

    cutoffs = sc.cutoffs(1)
    if sc.truncation() == "naive":
        h_a = build_naive(ms, em, COULOMB, cutoffs, order=order)
    else:
        h_a = build_dipole(ms, em, COULOMB, cutoffs)
    h_b = build_dipole(ms, em, MULTIPOLAR, cutoffs)
    rep = verify_spectral_equivalence(h_a, h_b, k=k, tol=spectral_tol,
                                      cs=couplings(ms, em))
    worst_correct = max(r.correct_gap for r in rows)
    passed = rep.max_abs_diff < spectral_tol and worst_correct < spectral_tol
    verdict = "PASS" if passed else "FAIL"
    summary = (f"{verdict}: max eigenvalue diff {rep.max_abs_diff:.3e}, "
               f"max correct gap {worst_correct:.3e}, tolerance {spectral_tol:.3e}")
    print(summary)
    (cfg.out_dir / "gauge_summary.txt").write_text(summary + "\n",
                                                   encoding="utf-8", newline="\n")
    write_metadata(cfg, {
        "verdict": verdict,
        "max_abs_diff": rep.max_abs_diff,
        "operator_residual": rep.operator_residual,
        "spectral_tol": spectral_tol,
        "truncation": sc.truncation(),
    })
    return 0


def cmd_detect(cfg: RunConfig) -> int:
    sc = cfg.scenario
    ms, em = sc.modeset(), sc.emitter()
    cutoffs = sc.cutoffs(ms.n_modes)
    section = sc.section("detector")
    d_d = np.asarray(section.get("dipole", (0.0, 0.0, 0.0)), dtype=float)
    if d_d.shape != (3,):
        raise ConfigError("'detector.dipole' must be a 3-vector")
    r_d = section.get("position_label", "detector")
    if r_d not in ms.profiles:
        raise ConfigError(f"'detector.position_label' {r_d!r} has no stored profiles")
    det = DetectorSpec(float(section.get("omega_d", 1.0)), d_d, r_d)
    bundle_c = build_dipole(ms, em, COULOMB, cutoffs)
    bundle_mp = build_dipole(ms, em, MULTIPOLAR, cutoffs)
    transitions = section.get("transitions")
    if transitions is None:
        count = int(section.get("count", 3))
        transitions = significant_transitions(bundle_c, ms, det, count, em=em)
    else:
        transitions = [(int(i), int(j)) for i, j in transitions]
    rows = rate_table(bundle_c, bundle_mp, ms, em, det, transitions)
    write_csv(cfg.out_dir / "rates.csv",
              ("i", "j", "omega_ij", "R_coulomb", "R_multipolar", "rel_diff"),
              [(r.i, r.j, r.omega_ij, r.rate_coulomb, r.rate_multipolar, r.rel_diff)
               for r in rows])
    write_metadata(cfg, {"cutoffs": list(cutoffs), "transitions": [list(t) for t in transitions]})
    return 0


def cmd_evolve(cfg: RunConfig) -> int:
    sc = cfg.scenario
    ms, em = sc.modeset(), sc.emitter()
    cutoffs = sc.cutoffs(ms.n_modes)
    section = sc.section("evolve")
    t_max = float(section.get("t_max", 10.0))
    n_times = int(section.get("n_times", 101))
    gauge_label = section.get("gauge", "coulomb")
    if gauge_label not in ("coulomb", "multipolar"):
        raise ConfigError("'evolve.gauge' must be 'coulomb' or 'multipolar'")
    profile = sc.time_profile()
    tdh = build_time_dependent(ms, em, gauge_label, profile, cutoffs)
    t_grid = np.linspace(0.0, t_max, n_times)
    initial = section.get("initial", "ground")
    if initial == "ground":
        vals, vecs = np.linalg.eigh(tdh.matrix(0.0))
        psi0 = vecs[:, 0].astype(complex)
    elif initial == "vacuum":
        psi0 = np.zeros(tdh.space.dim, dtype=complex)
        psi0[0] = 1.0  # |0...0> (x) first matter level
    else:
        raise ConfigError("'evolve.initial' must be 'ground' or 'vacuum'")
    traj = evolve(tdh, psi0, t_grid, tol=float(section.get("tol", 1e-8)))
    labels = sorted(traj.observables)
    write_csv(cfg.out_dir / "trajectory.csv", ["time"] + labels,
              [[float(t)] + [float(traj.observables[l][k]) for l in labels]
               for k, t in enumerate(traj.times)])
    checkpoints = section.get("state_checkpoints", [])
    if checkpoints:
        dump = []
        for idx in checkpoints:
            idx = int(idx)
            dump.append({"time": float(traj.times[idx]),
                         "state": [[float(c.real), float(c.imag)] for c in traj.states[idx]]})
        (cfg.out_dir / "states.json").write_text(
            json.dumps(dump, sort_keys=True, indent=2) + "\n", encoding="utf-8", newline="\n")
    write_metadata(cfg, {"cutoffs": list(cutoffs), "gauge": gauge_label,
                         "t_max": t_max, "n_times": n_times,
                         "profile_kind": profile.kind})
    return 0


def cmd_modes(cfg: RunConfig) -> int:
    sc = cfg.scenario
    section = sc.section("modes")
    meta = {}
    if "grid" in section:
        grid = polariton_grid_from_json(section["grid"])
        profile_points = {}
        for label, pairs in section.get("profile_points", {}).items():
            profile_points[label] = decode_complex_matrix(
                pairs, f"modes.profile_points.{label}", (grid.n_modes, 3))
        ms = build_from_grid(grid, profile_points)
        save_modeset(ms, cfg.out_dir / "modeset.json")
        meta["completeness_residual"] = completeness_residual(ms, grid)
        meta["n_modes"] = ms.n_modes
    elif "qnm" in section:
        qnm = qnm_from_json(section["qnm"])
        grid_opts = section.get("frequency_grid", {})
        freq_grid = qnm_frequency_grid(
            qnm,
            span_factor=float(grid_opts.get("span_factor", 3.0)),
            points_per_gamma=float(grid_opts.get("points_per_gamma", 40.0)),
            pole_halfwidth=float(grid_opts.get("pole_halfwidth", 50.0)),
            n_background=int(grid_opts.get("n_background", 4001)))
        result = chi_from_qnm(qnm, freq_grid)
        save_modeset(result.modeset, cfg.out_dir / "modeset.json")
        write_csv(cfg.out_dir / "qnm_deviation.csv",
                  ("mode", "omega", "chi_diag", "rel_deviation"),
                  [(mu, float(qnm.omega[mu]), float(result.modeset.chi_diag[mu]),
                    float(result.relative_deviation[mu]))
                   for mu in range(qnm.n_modes)])
        meta["max_rel_deviation"] = float(result.relative_deviation.max())
        meta["n_modes"] = qnm.n_modes
    elif "dielectric" in section:
        diel = dielectric_from_json(section["dielectric"], "modes.dielectric")
        n_modes = int(section.get("n_modes", 5))
        nm = solve_dielectric_1d(diel, n_modes)
        write_csv(cfg.out_dir / "modes1d.csv", ("mode", "omega"),
                  [(mu, float(nm.omega[mu])) for mu in range(nm.n_modes)])
        gram = nm.dx * np.einsum("k,mk,nk->mn", nm.eps, nm.profiles, nm.profiles)
        meta["orthonormality_residual"] = float(np.abs(gram - np.eye(nm.n_modes)).max())
        meta["n_modes"] = nm.n_modes
    else:
        raise ConfigError("'modes' section needs one of: grid, qnm, dielectric")
    write_metadata(cfg, meta)
    return 0


DISPATCH = {
    "spectrum": cmd_spectrum,
    "gauge-check": cmd_gauge_check,
    "detect": cmd_detect,
    "evolve": cmd_evolve,
    "modes": cmd_modes,
}


def main(argv=None) -> int:
    try:
        cfg = parse_args(argv if argv is not None else sys.argv[1:])
        return DISPATCH[cfg.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 3
    except (InvariantViolation, GaugecraftError) as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
