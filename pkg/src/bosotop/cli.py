"""``bosotop`` command-line interface.

Every subcommand computes all of its results in memory first and only then
writes files, so a validation or resolution failure leaves no partial
output behind.  Exit codes: 0 success, 1 invalid input, 2 numerical
resolution failure.
"""
import argparse
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .config import (EXPERIMENTS, build_bloch, load_config_file, load_preset, preset_names,
                     resolve, sublattice_matrix, time_reversal_matrix)
from .diagonalize import (Stability, bogoliubov_diagonalize, chaudhary_deformation,
                          classify_stability, compute_W, deformation_path, williamson_diagonalize)
from .errors import BosotopError, ResolutionError, ValidationError
from .lattice1d import (Boundary, ChainSpec, DisorderKind, build_chain, disorder_ensemble,
                        edge_mode_ansatz, obc_spectrum_sweep)
from .nambu import PrototypeParams, encode_complex_matrix, quadrature_form
from .spectroscopy import (Band, band_windows, classify_topology_from_trace,
                           correlation_numeric, correlation_pbc_analytic, default_omega_grid,
                           detect_midgap_peak, extract_envelope, prototype_resonances, sum_rule)
from .symmetry import (check_sublattice, check_symmetry, chiral, lemma1_preservation_test,
                       particle_hole, sublattice, time_reversal)
from .topology import analyze_topology


def thread_count(requested=None):
    """Worker count: ``--threads`` capped by ``BOSOTOP_THREADS`` (default 1)."""
    cap = os.environ.get("BOSOTOP_THREADS")
    n = requested or (int(cap) if cap else 1)
    if cap:
        n = min(n, int(cap))
    return max(1, n)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if not math.isfinite(obj) else float(obj)
    if hasattr(obj, "value"):
        return obj.value
    return obj


def dump_json(obj):
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def dump_csv(header, rows):
    buf = io.StringIO()
    np.savetxt(buf, np.asarray(rows, dtype=float).reshape(-1, len(header)), fmt="%.17g",
               delimiter=",", header=",".join(header), comments="")
    return buf.getvalue()


def _prototype(cfg):
    m = cfg["model"]
    return PrototypeParams(m["mu"], m["t1"], m["t2"], m["xi_abs"], m["xi_phase"])


def _chain(cfg, t2=None, boundary=None):
    m = cfg["model"]
    return ChainSpec.clean(cfg["chain"]["L"], m["mu"], m["t1"], m["t2"] if t2 is None else t2,
                           m["xi_abs"], m["xi_phase"], boundary or cfg["chain"]["boundary"])


def run_bands(cfg, threads):
    bloch = build_bloch(cfg)
    with ThreadPoolExecutor(threads) as pool:
        bogs = list(pool.map(lambda i: bogoliubov_diagonalize(bloch.H(i)), range(bloch.n_k)))
    n = bloch.n_modes
    header = ["k"] + [f"E_{b}" for b in range(n)]
    rows = [[k] + list(b.E_plus) for k, b in zip(bloch.k, bogs)]
    stable = all(b.stability is Stability.THERMO_AND_DYNAMICAL for b in bogs)
    summary = {"n_k": bloch.n_k, "thermodynamically_stable": stable}
    if cfg["model"]["type"] == "prototype" and cfg["regularization"] == 0:
        lo, hi = _prototype(cfg).bands(bloch.k)
        header += ["E_minus_closed", "E_plus_closed"]
        rows = [r + [a, b] for r, a, b in zip(rows, lo, hi)]
        err = max(max(abs(b.E_plus[0] - a), abs(b.E_plus[1] - c)) for b, a, c in zip(bogs, lo, hi))
        summary["max_error_closed_form"] = err
    return {"bands.csv": dump_csv(header, rows), "bands.json": dump_json(summary)}


def run_topology(cfg, threads):
    bloch = build_bloch(cfg)
    S = sublattice_matrix(cfg, bloch.n_modes)
    if S is None:
        raise ValidationError("winding/polarization need symmetry.S_tilde for a general model")
    res = analyze_topology(bloch, S, cfg["n_bands"], cfg["tolerances"]["tol_sym"])
    q = res.q_trace
    return {"topology.json": dump_json(res.to_dict()),
            "q_trace.csv": dump_csv(["k", "re_q", "im_q"], np.column_stack([bloch.k, q.real, q.imag]))}


def _envelope_dict(trace, window, band, tol_env):
    try:
        env = extract_envelope(trace, window, band, tol_env)
    except ResolutionError as exc:
        return {"error": str(exc)}
    return {"peak_freqs": env.peak_freqs, "peak_heights": env.peak_heights,
            "monotonic": env.monotonic, "direction": env.direction,
            "height_ratio": env.height_ratio}


def run_correlation(cfg, threads):
    p = _prototype(cfg)
    L = cfg["chain"]["L"]
    kappa = cfg["kappa"]
    E, _ = prototype_resonances(p, L)
    omega = default_omega_grid(E, kappa, cfg["omega_points"])
    analytic = correlation_pbc_analytic(p, L, omega, kappa)
    numeric = correlation_numeric(build_chain(_chain(cfg, boundary=Boundary.PERIODIC)),
                                  cfg["cell"], omega, kappa, "Periodic")
    dev = float(np.max(np.abs(numeric.minus_im_C - analytic.minus_im_C))
                / np.max(analytic.minus_im_C))
    lower, upper = band_windows(analytic)
    tol = cfg["tolerances"]
    area, weight = sum_rule(analytic)
    report = {
        "classification": classify_topology_from_trace(analytic, tol["threshold_ratio"], tol["tol_env"]),
        "lower": _envelope_dict(analytic, lower, Band.LOWER, tol["tol_env"]),
        "upper": _envelope_dict(analytic, upper, Band.UPPER, tol["tol_env"]),
        "analytic_vs_numeric": dev, "sum_rule": {"integral": area, "weights": weight},
        "kappa": kappa, "L": L, "cell": cfg["cell"],
    }
    header = ["omega", "minus_im_C"]
    return {"correlation_analytic.csv": dump_csv(header, np.column_stack([omega, analytic.minus_im_C])),
            "correlation_numeric.csv": dump_csv(header, np.column_stack([omega, numeric.minus_im_C])),
            "envelope.json": dump_json(report)}


def run_obc(cfg, threads):
    spec = _chain(cfg, boundary=Boundary.OPEN)
    sweep = obc_spectrum_sweep(spec, cfg["t2_values"])
    rows = [[pt.t2, i, e] for pt in sweep for i, e in enumerate(pt.E_plus)]
    out = {"obc_sweep.csv": dump_csv(["t2", "index", "E"], rows)}
    summary = {"mu_tilde": spec.mu_tilde,
               "sweep": [{"t2": pt.t2, "stability": pt.stability, "midgap": pt.midgap,
                          "critical": pt.critical} for pt in sweep]}
    H = build_chain(spec).H
    bog = bogoliubov_diagonalize(H)
    m = cfg["model"]
    if m["t1"] < m["t2"]:
        idx = np.argsort(np.abs(bog.E_plus - spec.mu_tilde), kind="stable")[:2]
        modes = [edge_mode_ansatz(spec, side) for side in ("Left", "Right")]
        summary["edge_modes"] = [{"side": e.side, "energy": e.energy, "residual": e.residual,
                                  "residual_flat_hole": e.residual_flat_hole,
                                  "overlap": e.overlap(bog.V[:, idx])} for e in modes]
        cols = [np.arange(2 * spec.L)]
        for e in modes:
            cols += [e.amplitudes_particle.real, e.amplitudes_particle.imag,
                     e.amplitudes_hole.real, e.amplitudes_hole.imag]
        header = ["site"] + [f"{s}_{part}_{c}" for s in ("left", "right")
                             for part in ("particle", "hole") for c in ("re", "im")]
        out["edge_modes.csv"] = dump_csv(header, np.column_stack(cols))
    trace = correlation_numeric(None, cfg["cell"], None, cfg["kappa"], "Open", bog=bog)
    omega = default_omega_grid(trace.mode_energies, cfg["kappa"], cfg["omega_points"])
    trace = correlation_numeric(None, cfg["cell"], omega, cfg["kappa"], "Open", bog=bog)
    peak = detect_midgap_peak(trace, spec.mu_tilde, 0.25 * m["t1"])
    summary["midgap_peak"] = {"present": peak.present, "freq": peak.freq, "height": peak.height,
                              "reference_height": peak.reference_height}
    out["obc_correlation.csv"] = dump_csv(["omega", "minus_im_C"],
                                          np.column_stack([omega, trace.minus_im_C]))
    out["obc.json"] = dump_json(summary)
    return out


def run_disorder(cfg, threads):
    spec = _chain(cfg, boundary=Boundary.OPEN)
    d = cfg["disorder"]
    ens = disorder_ensemble(spec, DisorderKind(d["kind"]), d["D_values"], d["n_samples"],
                            cfg["seed"], threads)
    rows = [[e.strength, i, j, E] for e in ens for i, spec_i in enumerate(e.spectra)
            for j, E in enumerate(spec_i)]
    summary = {"kind": d["kind"], "mu_tilde": spec.mu_tilde, "seed": cfg["seed"],
               "ensembles": [{"D": e.strength, "mean_spectrum": e.mean_spectrum,
                              "max_edge_deviation": e.max_edge_deviation,
                              "mean_edge_splitting": e.mean_edge_splitting,
                              "edges_in_gap": int(e.edge_in_gap.sum()),
                              "max_sublattice_residual": float(np.max(e.sublattice_residuals)),
                              "rejections": e.rejections} for e in ens]}
    return {"disorder_spectra.csv": dump_csv(["D", "sample_index", "eigen_index", "E"], rows),
            "disorder_summary.json": dump_json(summary)}


def run_stability(cfg, threads):
    bloch = build_bloch(cfg)
    per_k = []
    for i, k in enumerate(bloch.k):
        H = bloch.H(i)
        per_k.append({"k": k, "class": classify_stability(H, tol_pd=cfg["tolerances"]["tol_pd"]),
                      "min_eig_H": float(np.linalg.eigvalsh(H)[0])})
    classes = sorted({p["class"].value for p in per_k})
    return {"stability.json": dump_json({"classes": classes, "per_k": per_k})}


def run_symmetry(cfg, threads):
    bloch = build_bloch(cfg)
    n = bloch.n_modes
    tol = cfg["tolerances"]["tol_sym"]
    T = time_reversal_matrix(cfg, n)
    ops = {"particle_hole": particle_hole(n), "time_reversal": time_reversal(T), "chiral": chiral(T)}
    report = {}
    pd = all(np.linalg.eigvalsh(bloch.H(i))[0] > 0 for i in range(bloch.n_k))
    sqs = [compute_W(bloch.H(i)) for i in range(bloch.n_k)] if pd else None
    for name, op in ops.items():
        r = check_symmetry(bloch, op, tol)
        entry = {"residual": r.residual, "holds": r.holds}
        if r.holds and pd:
            lem = lemma1_preservation_test(bloch, op, tol, sqs)
            entry["lemma1"] = {"w_residual": lem.w_residual,
                               "reduced_residual": lem.reduced_residual, "holds": lem.holds}
        report[name] = entry
    S = sublattice_matrix(cfg, n)
    if S is not None and pd:
        s = check_sublattice(sqs, S, tol)
        entry = {"epsilon": s.epsilon, "residual": s.residual, "holds": s.holds,
                 "epsilon_spread": s.epsilon_spread, "diagnostic": s.diagnostic}
        if s.holds:
            lem = lemma1_preservation_test(bloch, sublattice(S), tol, sqs)
            entry["lemma1"] = {"w_residual": lem.w_residual,
                               "reduced_residual": lem.reduced_residual, "holds": lem.holds}
        report["sublattice"] = entry
    return {"symmetry.json": dump_json(report)}


def run_reduce(cfg, threads):
    bloch = build_bloch(cfg)
    lambdas = np.linspace(0, 1, cfg["lambdas"])
    n = bloch.n_modes
    n_lower = n // 2 if cfg["n_bands"] is None else cfg["n_bands"]
    per_k, dev, gap_sim, gap_ch = [], 0.0, np.inf, np.inf
    for i, k in enumerate(bloch.k):
        H = bloch.H(i)
        sq = compute_W(H)
        path = deformation_path(H, sq, lambdas, n_lower)
        ch = chaudhary_deformation(H, sq, lambdas, n_lower)
        dev = max(dev, path.max_spectral_deviation)
        gap_sim, gap_ch = min(gap_sim, path.min_gap), min(gap_ch, ch.min_gap)
        per_k.append({"k": k, "epsilon": sq.epsilon, "E_reduced": sq.E,
                      "cross_residual": sq.cross_residual, "block_residual": sq.block_residual,
                      "K_tilde": encode_complex_matrix(sq.K_tilde)})
    _, Rp = williamson_diagonalize(quadrature_form(bloch.H(0)))
    wil = np.sort(np.diag(Rp))[::2]
    bog = bogoliubov_diagonalize(bloch.H(0))
    summary = {"regularization": bloch.regularization, "per_k": per_k,
               "similarity_path_max_deviation": dev, "similarity_path_min_gap": gap_sim,
               "replacement_path_min_gap": gap_ch,
               "williamson_vs_bogoliubov_k0": float(np.max(np.abs(wil - bog.E_plus)))}
    return {"reduce.json": dump_json(summary)}


RUNNERS = {"bands": run_bands, "winding": run_topology, "polarization": run_topology,
           "correlation": run_correlation, "obc": run_obc, "disorder": run_disorder,
           "stability": run_stability, "symmetry": run_symmetry, "reduce": run_reduce}


def execute(cfg, output_dir, threads=1):
    """Run a resolved config and write its files plus ``manifest.json``."""
    files = RUNNERS[cfg["experiment"]](cfg, threads)
    files["manifest.json"] = dump_json({"bosotop_version": __version__, "config": cfg})
    os.makedirs(output_dir, exist_ok=True)
    for name in sorted(files):
        with open(os.path.join(output_dir, name), "w", newline="") as fh:
            fh.write(files[name])
    return sorted(files)


def _parser():
    parser = argparse.ArgumentParser(prog="bosotop", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run",) + EXPERIMENTS:
        p = sub.add_parser(name, help="experiment from config" if name == "run" else f"{name} experiment")
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="path to a JSON config (or a manifest.json)")
        src.add_argument("--preset", help=f"shipped preset: {', '.join(preset_names())}")
        p.add_argument("--output-dir", default="bosotop_out")
        p.add_argument("--kappa", type=float, help="Lorentzian linewidth override")
        p.add_argument("--seed", type=int, help="RNG seed override")
        p.add_argument("--threads", type=int, help="worker threads (capped by BOSOTOP_THREADS)")
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        raw = load_preset(args.preset) if args.preset else load_config_file(args.config)
        if isinstance(raw, dict) and set(raw) == {"bosotop_version", "config"}:
            raw = raw["config"]
        experiment = None if args.command == "run" else args.command
        cfg = resolve(raw, experiment, {"kappa": args.kappa, "seed": args.seed})
        files = execute(cfg, args.output_dir, thread_count(args.threads))
    except ValidationError as exc:
        print(f"bosotop: invalid input: {exc}", file=sys.stderr)
        return 1
    except ResolutionError as exc:
        print(f"bosotop: numerical resolution failure: {exc}", file=sys.stderr)
        return 2
    except BosotopError as exc:
        print(f"bosotop: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(files)} files to {args.output_dir}: {', '.join(files)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
