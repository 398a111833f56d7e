"""Command-line orchestration: config loading, pipelines, sweeps, manifest.

One JSON config file drives every pipeline; CLI flags override config
keys with dotted paths.  Every physical quantity key carries a unit
suffix (_hz, _s, _k, _db, _w, _a, _f, _h); unknown keys are rejected.
Exit codes: 0 success, 2 config error, 3 pipeline error.  Numeric
output files (CSV/JSON data) are byte-identical for identical config
and master seed regardless of worker count; the manifest records a
config hash and a content hash for every output file.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__, circuit, detection, detector_stats, fokker_planck
from . import langevin, potential as pot
from .errors import ConfigInvalid, KjpaError, PipelineError, SweepAborted
from .langevin import stable_seed

TWO_PI = 2.0 * math.pi

_UNIT_SUFFIXES = ("_hz", "_s", "_k", "_db", "_w", "_a", "_f", "_h",
                  "_rad", "_sqrthz")
_DIMENSIONLESS = {"flux_ratio", "alpha_ratio", "n_thermal", "n_bar",
                  "q_threshold", "n_points", "n_pulses", "n_bins",
                  "master_seed", "workers", "ensemble_size", "n_snapshots",
                  "n_thresholds", "scale", "readout_noise_var",
                  "extent_factor", "steps", "values", "path", "axes",
                  "min", "max", "r2_min", "fold_signs"}


class _Key:
    """One schema entry: expected type, default (None = required)."""

    def __init__(self, typ, default=None, required=False):
        self.typ = typ
        self.default = default
        self.required = required


_OP_SCHEMA = {
    "delta_hz": _Key(float, 0.7e6),
    "alpha_ratio": _Key(float, 0.51),
    "theta_p_rad": _Key(float, 0.0),
    "kappa_hz": _Key(float, 4.44e6),
    "gamma_hz": _Key(float, 2.30e6),
    "kerr_hz": _Key(float, -208.0),
    "n_thermal": _Key(float, 0.0),
}

_CIRCUIT_SCHEMA = {
    "l_cav_h": _Key(float, 2.023e-9),
    "c_cav_f": _Key(float, 809.2e-15),
    "i_c_a": _Key(float, 8e-6),
    "f_plasma_hz": _Key(float, 80e9),
    "l_loop_h": _Key(float, 4.846e-12),
    "c_s_f": _Key(float, 0.0),          # 0 = derive from i_c and f_plasma
}

_PULSE_SCHEMA = {
    "pump_duration_s": _Key(float, 2.0e-6),
    "probe_delay_s": _Key(float, 0.228e-6),
    "probe_duration_s": _Key(float, 1.0e-6),
    "readout_start_s": _Key(float, -1.0),   # <0 = default to probe delay
    "readout_duration_s": _Key(float, 1.5e-6),
    "dead_time_s": _Key(float, 3.0e-6),
    "latency_s": _Key(float, 0.0),
}

_SWEEP_SCHEMA = {"axes": _Key(list, [])}

SCHEMAS = {
    "circuit": {"circuit": _CIRCUIT_SCHEMA, "flux_ratio": _Key(float, 0.3618),
                "f_op_hz": _Key(float, 0.0), "sweep": _SWEEP_SCHEMA},
    "dc-fit": {"circuit": _CIRCUIT_SCHEMA, "data_csv": _Key(str, required=True),
               "sweep": _SWEEP_SCHEMA},
    "potential": {"op": _OP_SCHEMA, "b_mag_sqrthz": _Key(float, 0.0),
                  "n_points": _Key(int, 4001), "sweep": _SWEEP_SCHEMA},
    "phase-diagram": {"op": _OP_SCHEMA,
                      "alpha_ratio_axis": {"min": _Key(float, 0.30),
                                           "max": _Key(float, 0.75),
                                           "steps": _Key(int, 10)},
                      "delta_axis_hz": {"min": _Key(float, -6e6),
                                        "max": _Key(float, 6e6),
                                        "steps": _Key(int, 9)},
                      "ensemble_size": _Key(int, 48),
                      "duration_s": _Key(float, 40e-6),
                      "dt_s": _Key(float, 1.25e-9),
                      "fold_signs": _Key(bool, False),
                      "master_seed": _Key(int, 0), "sweep": _SWEEP_SCHEMA},
    "fp": {"op": _OP_SCHEMA, "n_bar": _Key(float, 0.0),
           "pump_duration_s": _Key(float, 2.0e-6),
           "probe_delay_s": _Key(float, 0.228e-6),
           "probe_duration_s": _Key(float, 1.0e-6),
           "n_points": _Key(int, 2049), "dt_s": _Key(float, 0.5e-9),
           "q_threshold": _Key(float, 0.0),      # 0 = barrier top
           "extent_factor": _Key(float, 1.5),
           "n_snapshots": _Key(int, 200), "r2_min": _Key(float, 0.99),
           "sweep": _SWEEP_SCHEMA},
    "detect": {"op": _OP_SCHEMA, "pulse": _PULSE_SCHEMA,
               "n_bar": _Key(float, 0.0), "n_pulses": _Key(int, 2000),
               "dt_s": _Key(float, 1e-9),
               "readout_noise_var": _Key(float, -1.0),  # <0 = default
               "master_seed": _Key(int, 0), "sweep": _SWEEP_SCHEMA},
    "roc": {"op": _OP_SCHEMA, "pulse": _PULSE_SCHEMA,
            "n_bar": _Key(float, 1.0), "n_pulses": _Key(int, 2000),
            "dt_s": _Key(float, 1e-9), "n_thresholds": _Key(int, 200),
            "readout_noise_var": _Key(float, -1.0),
            "tau_s": _Key(float, 1.0e-6),
            "master_seed": _Key(int, 0), "sweep": _SWEEP_SCHEMA},
    "calibrate": {"gain_csv": _Key(str, required=True),
                  "s21_db": _Key(float, -14.8),
                  "sigma_db_components": _Key(list, [0.2, 0.2, 0.2]),
                  "probe_power_w": _Key(float, 4.0e-18),
                  "tau_s": _Key(float, 1.0e-6),
                  "f_signal_hz": _Key(float, 6.042e9),
                  "sweep": _SWEEP_SCHEMA},
    "figures": {"op": _OP_SCHEMA, "master_seed": _Key(int, 0),
                "n_pulses": _Key(int, 1000), "ensemble_size": _Key(int, 24),
                "sweep": _SWEEP_SCHEMA},
}


def _validate(node, schema, path, violations, out):
    if not isinstance(node, dict):
        violations.append(f"{path or '<root>'}: expected an object")
        return
    for key, val in node.items():
        where = f"{path}.{key}" if path else key
        if key not in schema:
            violations.append(f"{where}: unknown key")
            continue
        spec = schema[key]
        if isinstance(spec, dict):
            sub = {}
            _validate(val, spec, where, violations, sub)
            out[key] = sub
            continue
        if isinstance(val, (int, float)) and not isinstance(val, bool) \
                and spec.typ in (int, float):
            if (not key.endswith(_UNIT_SUFFIXES)
                    and key not in _DIMENSIONLESS):
                violations.append(f"{where}: numeric key lacks a unit suffix")
            out[key] = spec.typ(val)
        elif spec.typ is bool and isinstance(val, bool):
            out[key] = val
        elif spec.typ is str and isinstance(val, str):
            out[key] = val
        elif spec.typ is list and isinstance(val, list):
            out[key] = val
        else:
            violations.append(f"{where}: expected {spec.typ.__name__}")
    for key, spec in schema.items():
        if key in node:
            continue
        if isinstance(spec, dict):
            sub = {}
            _validate({}, spec, f"{path}.{key}" if path else key,
                      violations, sub)
            out[key] = sub
        elif spec.required:
            violations.append(f"{path + '.' if path else ''}{key}: required key missing")
        else:
            out[key] = spec.default


def validate_config(cfg: dict, subcommand: str) -> dict:
    """Strict-schema validation; returns the defaulted config tree."""
    if subcommand not in SCHEMAS:
        raise ConfigInvalid([f"unknown subcommand {subcommand}"])
    violations: list[str] = []
    out: dict = {}
    _validate(cfg, SCHEMAS[subcommand], "", violations, out)
    if violations:
        raise ConfigInvalid(violations)
    return out


def _apply_override(cfg: dict, dotted: str, raw: str) -> None:
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    try:
        node[keys[-1]] = json.loads(raw)
    except json.JSONDecodeError:
        node[keys[-1]] = raw


def _op_from_cfg(c: dict) -> pot.OperatingPoint:
    kappa = TWO_PI * c["kappa_hz"]
    gamma = TWO_PI * c["gamma_hz"]
    return pot.OperatingPoint(delta=TWO_PI * c["delta_hz"],
                              alpha_mag=c["alpha_ratio"] * (kappa + gamma),
                              theta_p=c["theta_p_rad"], kappa=kappa,
                              gamma=gamma, kerr=TWO_PI * c["kerr_hz"],
                              n_thermal=c["n_thermal"])


def _circuit_from_cfg(c: dict) -> circuit.CircuitParams:
    return circuit.CircuitParams(
        L_cav=c["l_cav_h"], C_cav=c["c_cav_f"], I_c=c["i_c_a"],
        omega_pl=TWO_PI * c["f_plasma_hz"], L_loop=c["l_loop_h"],
        C_S=c["c_s_f"] if c["c_s_f"] > 0.0 else None)


def _pulse_from_cfg(c: dict) -> detection.PulseSequence:
    ro = c["readout_start_s"]
    return detection.build_pulse_sequence(
        pump_duration=c["pump_duration_s"], probe_delay=c["probe_delay_s"],
        probe_duration=c["probe_duration_s"],
        readout_start=None if ro < 0.0 else ro,
        readout_duration=c["readout_duration_s"],
        dead_time=c["dead_time_s"], latency=c["latency_s"])


def _write_csv(path, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.12g}" if isinstance(v, (int, float))
                              else str(v) for v in row) + "\n")


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------- pipelines

def _run_circuit(cfg, outdir):
    params = _circuit_from_cfg(cfg["circuit"])
    flux = cfg["flux_ratio"]
    if cfg["f_op_hz"] > 0.0:
        mode = circuit.mode_from_resonance(params, TWO_PI * cfg["f_op_hz"])
    else:
        mode = circuit.solve_mode_constraint(params, flux)
    summary = circuit.mode_summary_hz(params, flux, mode)
    summary["f_quarter_hz"] = params.omega_quarter / TWO_PI
    summary["f_zero_flux_hz"] = circuit.resonance_frequency(params, 0.0) / TWO_PI
    summary["l_squid_h"] = circuit.squid_inductance(params, flux)
    _write_json(os.path.join(outdir, "mode.json"), summary)
    return ["mode.json"]


def _run_dc_fit(cfg, outdir):
    data = np.loadtxt(cfg["data_csv"], delimiter=",", skiprows=1)
    pairs = [(row[0], TWO_PI * row[1]) for row in np.atleast_2d(data)]
    guess = _circuit_from_cfg(cfg["circuit"])
    fit = circuit.fit_dc_sweep(pairs, guess)
    _write_json(os.path.join(outdir, "fit.json"), {
        "f_quarter_hz": fit.omega_quarter / TWO_PI,
        "i_c_a": fit.I_c, "l_cav_h": fit.params.L_cav,
        "rel_residual": fit.rel_residual,
        "covariance": fit.covariance.tolist()})
    _write_csv(os.path.join(outdir, "residuals.csv"), "flux_ratio,residual_hz",
               [(p[0], r) for p, r in zip(pairs, fit.residuals_hz)])
    return ["fit.json", "residuals.csv"]


def _run_potential(cfg, outdir):
    op = _op_from_cfg(cfg["op"])
    tilt = pot.probe_tilt(op.kappa, cfg["b_mag_sqrthz"])
    prof = pot.build_profile(op, tilt, n_points=cfg["n_points"])
    _write_csv(os.path.join(outdir, "potential.csv"), "q,u_rad_per_s",
               zip(prof.q_grid, prof.u_values))
    _write_json(os.path.join(outdir, "extrema.json"), {
        "tilt_rad_per_s": tilt,
        "region": pot.classify_region(op.alpha_mag, op.delta, op.kappa,
                                      op.gamma),
        "extrema": [{"q": q, "u_rad_per_s": u, "kind": k}
                    for q, u, k in prof.extrema]})
    return ["potential.csv", "extrema.json"]


def _run_phase_diagram(cfg, outdir):
    op = _op_from_cfg(cfg["op"])
    ax_a = cfg["alpha_ratio_axis"]
    ax_d = cfg["delta_axis_hz"]
    ratios = np.linspace(ax_a["min"], ax_a["max"], ax_a["steps"])
    deltas = TWO_PI * np.linspace(ax_d["min"], ax_d["max"], ax_d["steps"])
    cells = langevin.map_phase_diagram(
        op, ratios, deltas, ensemble_size=cfg["ensemble_size"],
        duration=cfg["duration_s"], dt=cfg["dt_s"],
        master_seed=cfg["master_seed"], fold_signs=cfg["fold_signs"])
    rows = []
    for c in cells:
        m = c.moments
        rows.append((c.alpha_ratio, c.delta / TWO_PI,
                     m.mean_x if m else float("nan"),
                     m.mean_y if m else float("nan"),
                     m.var_x if m else float("nan"),
                     m.var_y if m else float("nan"), c.label))
    _write_csv(os.path.join(outdir, "phase_diagram.csv"),
               "alpha_ratio,delta_hz,mean_x,mean_y,var_x,var_y,label", rows)
    _write_csv(os.path.join(outdir, "switching.csv"),
               "alpha_ratio,delta_hz,switched_fraction",
               [(c.alpha_ratio, c.delta / TWO_PI,
                 c.switched_fraction if c.switched_fraction is not None
                 else float("nan")) for c in cells])
    return ["phase_diagram.csv", "switching.csv"]


def _run_fp(cfg, outdir):
    op = _op_from_cfg(cfg["op"])
    qth = cfg["q_threshold"] if cfg["q_threshold"] > 0.0 else None
    fcfg = fokker_planck.config_for(op, n_points=cfg["n_points"],
                                    dt=cfg["dt_s"], q_threshold=qth,
                                    extent_factor=cfg["extent_factor"])
    tau = cfg["probe_duration_s"]
    b = math.sqrt(cfg["n_bar"] / tau) if cfg["n_bar"] > 0.0 else 0.0
    t0 = cfg["probe_delay_s"]
    res = fokker_planck.detection_probabilities(
        op, b, cfg["pump_duration_s"], fcfg, probe_window=(t0, t0 + tau),
        n_snapshots=cfg["n_snapshots"])
    _write_csv(os.path.join(outdir, "survival.csv"), "time_s,survival",
               res.survival_off)
    files = ["survival.csv", "rates.json", "probabilities.json"]
    try:
        fit = fokker_planck.escape_rate(res.survival_off,
                                        r2_min=cfg["r2_min"])
        rates = {"gamma_hz": fit.gamma, "r2": fit.r_squared,
                 "window": list(fit.window)}
    except KjpaError as exc:
        rates = {"gamma_hz": float("nan"), "r2": float("nan"),
                 "error": str(exc)}
    _write_json(os.path.join(outdir, "rates.json"), rates)
    _write_json(os.path.join(outdir, "probabilities.json"), {
        "n_bar": cfg["n_bar"], "p_click": res.p_click,
        "p_dark": res.p_dark, "p_ideal": res.p_ideal,
        "q_threshold": fcfg.q_threshold})
    return files


def _run_detect(cfg, outdir):
    op = _op_from_cfg(cfg["op"])
    pulse = _pulse_from_cfg(cfg["pulse"])
    noise = cfg["readout_noise_var"]
    rec = detection.run_detection_experiment(
        op, cfg["n_bar"], pulse, cfg["n_pulses"],
        seed=stable_seed(cfg["master_seed"], "detect"),
        dt=cfg["dt_s"], readout_noise_var=None if noise < 0.0 else noise)
    rec.save(os.path.join(outdir, "results.csv"),
             os.path.join(outdir, "summary.json"))
    return ["results.csv", "summary.json"]


def _run_roc(cfg, outdir):
    op = _op_from_cfg(cfg["op"])
    pulse = _pulse_from_cfg(cfg["pulse"])
    noise = cfg["readout_noise_var"]
    noise = None if noise < 0.0 else noise
    seed = cfg["master_seed"]
    rec_on = detection.run_detection_experiment(
        op, cfg["n_bar"], pulse, cfg["n_pulses"],
        seed=stable_seed(seed, "on"), dt=cfg["dt_s"],
        readout_noise_var=noise)
    rec_off = detection.run_detection_experiment(
        op, 0.0, pulse, cfg["n_pulses"], seed=stable_seed(seed, "off"),
        dt=cfg["dt_s"], readout_noise_var=noise)
    r_hi = max(rec_on.results.max(), rec_off.results.max())
    ths = np.linspace(0.0, r_hi, cfg["n_thresholds"])
    points, auc = detector_stats.roc_curve(rec_on, rec_off, ths)
    best, obj = detector_stats.optimize_threshold(rec_on, rec_off, ths)
    _write_csv(os.path.join(outdir, "roc.csv"),
               "threshold,true_positive,false_positive",
               [(p.threshold, p.true_positive, p.false_positive)
                for p in points])
    _write_csv(os.path.join(outdir, "objective.csv"),
               "threshold,p1_times_no_dark", zip(ths, obj))
    p_dark = rec_off.click_fraction_at(best)
    p1 = rec_on.click_fraction_at(best)
    summary = {"auc": auc, "best_threshold": best, "p_dark": p_dark,
               "p_click": p1, "n_bar": cfg["n_bar"]}
    if p1 > p_dark and cfg["n_bar"] > 0.0:
        summary["eta"] = detector_stats.efficiency_from_counts(
            p1, p_dark, cfg["n_bar"])
    _write_json(os.path.join(outdir, "summary.json"), summary)
    return ["roc.csv", "objective.csv", "summary.json"]


def _run_calibrate(cfg, outdir):
    from . import calibration
    data = np.loadtxt(cfg["gain_csv"], delimiter=",", skiprows=1)
    fit = calibration.fit_system_gain(np.atleast_2d(data))
    atten = calibration.attenuation(cfg["s21_db"], fit.gain_db)
    power = cfg["probe_power_w"]
    omega = TWO_PI * cfg["f_signal_hz"]
    chain = calibration.CalibrationChain(
        gain_db=fit.gain_db, t_preamp=fit.t_preamp, attenuation_db=atten,
        sigma_db_components=cfg["sigma_db_components"])
    ledger = chain.to_json()
    ledger.update({
        "gain_db_err": fit.gain_db_err, "t_preamp_err_k": fit.t_preamp_err,
        "n_bar": calibration.photons_per_pulse(power, cfg["tau_s"], omega),
        "b_mag_sqrthz": calibration.probe_amplitude(power, omega)})
    _write_json(os.path.join(outdir, "calibration.json"), ledger)
    return ["calibration.json"]


def _run_figures(cfg, outdir):
    """Reduced-scale plot-ready data bundle for every figure family."""
    files = []
    op_cfg = cfg["op"]
    seed = cfg["master_seed"]
    # potential profiles in the three regions
    for tag, ratio, delta_hz in (("below", 0.40, 0.7e6),
                                 ("tristable", 0.51, 0.7e6),
                                 ("secondorder", 0.60, -2.0e6)):
        sub = dict(op_cfg)
        sub.update(alpha_ratio=ratio, delta_hz=delta_hz)
        op = _op_from_cfg(sub)
        prof = pot.build_profile(op, n_points=801)
        name = f"potential_{tag}.csv"
        _write_csv(os.path.join(outdir, name), "q,u_rad_per_s",
                   zip(prof.q_grid, prof.u_values))
        files.append(name)
    # small phase diagram
    pd_cfg = validate_config({"op": op_cfg,
                              "alpha_ratio_axis": {"steps": 8},
                              "delta_axis_hz": {"steps": 5},
                              "ensemble_size": cfg["ensemble_size"],
                              "duration_s": 25e-6,
                              "master_seed": seed}, "phase-diagram")
    files += _run_phase_diagram(pd_cfg, outdir)
    # detection histograms at a few photon numbers
    pulse = detection.build_pulse_sequence()
    op = _op_from_cfg(op_cfg)
    rows = []
    for nb in (0.0, 1.0, 3.0):
        rec = detection.run_detection_experiment(
            op, nb, pulse, cfg["n_pulses"], seed=stable_seed(seed, nb))
        edges, h = detection.histogram(rec, n_bins=60, r_max=40.0)
        rows += [(nb, 0.5 * (edges[i] + edges[i + 1]), h[i])
                 for i in range(len(h))]
    _write_csv(os.path.join(outdir, "histograms.csv"),
               "n_bar,r_center,fraction", rows)
    files.append("histograms.csv")
    # FP efficiency curve
    fcfg = fokker_planck.config_for(op, dt=4e-9)
    rows = []
    for nb in np.linspace(0.0, 4.0, 9):
        b = math.sqrt(nb / 1e-6) if nb > 0 else 0.0
        res = fokker_planck.detection_probabilities(
            op, b, 2e-6, fcfg, probe_window=(0.228e-6, 1.228e-6),
            n_snapshots=2)
        rows.append((nb, res.p_click, res.p_dark, res.p_ideal))
    _write_csv(os.path.join(outdir, "efficiency_curve.csv"),
               "n_bar,p_click,p_dark,p_ideal", rows)
    files.append("efficiency_curve.csv")
    return files


_PIPELINES = {
    "circuit": _run_circuit, "dc-fit": _run_dc_fit,
    "potential": _run_potential, "phase-diagram": _run_phase_diagram,
    "fp": _run_fp, "detect": _run_detect, "roc": _run_roc,
    "calibrate": _run_calibrate, "figures": _run_figures,
}


# ------------------------------------------------------------------- sweeps

def _set_dotted(cfg: dict, dotted: str, value) -> None:
    node = cfg
    keys = dotted.split(".")
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def _run_cell(args):
    subcommand, cell_cfg, cell_dir, index = args
    os.makedirs(cell_dir, exist_ok=True)
    try:
        files = _PIPELINES[subcommand](cell_cfg, cell_dir)
        return index, [os.path.join(os.path.basename(cell_dir), f)
                       for f in files], None
    except Exception as exc:
        return index, [], f"{type(exc).__name__}: {exc}"


def run_sweep(subcommand: str, cfg: dict, outdir: str, workers: int):
    """Cartesian sweep over the configured axes; cells run concurrently.

    Per-cell seed = hash(master seed, cell index).  Failed cells are
    flagged and the sweep completes unless more than half fail.
    """
    axes = cfg["sweep"]["axes"]
    paths = [a["path"] for a in axes]
    grids = [a["values"] for a in axes]
    combos = [[]]
    for g in grids:
        combos = [c + [v] for c in combos for v in g]
    master = cfg.get("master_seed", 0)
    tasks = []
    for i, combo in enumerate(combos):
        cell = json.loads(json.dumps(cfg))
        del cell["sweep"]
        for p, v in zip(paths, combo):
            _set_dotted(cell, p, v)
        if "master_seed" in cell:
            cell["master_seed"] = stable_seed(master, i) % (2**31)
        tasks.append((subcommand, cell, os.path.join(outdir, f"cell_{i:04d}"), i))

    results = [None] * len(tasks)
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            for idx, files, err in ex.map(_run_cell, tasks):
                results[idx] = (files, err)
    else:
        for t in tasks:
            idx, files, err = _run_cell(t)
            results[idx] = (files, err)

    failed = [i for i, (_, err) in enumerate(results) if err]
    index_rows = []
    all_files = []
    for i, combo in enumerate(combos):
        files, err = results[i]
        index_rows.append(tuple(combo) + (("failed: " + err) if err else "ok",))
        all_files += files
    _write_csv(os.path.join(outdir, "sweep_index.csv"),
               ",".join(paths) + ",status", index_rows)
    all_files.append("sweep_index.csv")
    if len(failed) * 2 > len(tasks):
        raise SweepAborted(f"{len(failed)}/{len(tasks)} cells failed")
    return all_files


# ------------------------------------------------------------------- driver

def _sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kjpa",
        description="Kerr parametric oscillator photon-detector toolkit")
    parser.add_argument("subcommand", choices=sorted(_PIPELINES))
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--set", action="append", default=[],
                        metavar="PATH=VALUE",
                        help="override a config key by dotted path")
    parser.add_argument("--output-dir", default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--master-seed", type=int, default=None)
    args = parser.parse_args(argv)

    outdir = (args.output_dir or os.environ.get("KJPA_OUTPUT_DIR")
              or f"out_{args.subcommand}")
    workers = args.workers if args.workers is not None else \
        int(os.environ.get("KJPA_WORKERS", "1"))

    raw = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
    for ov in args.set:
        if "=" not in ov:
            print(f"config error: bad --set {ov!r}", file=sys.stderr)
            return 2
        _apply_override(raw, *ov.split("=", 1))
    if args.master_seed is not None:
        raw["master_seed"] = args.master_seed

    try:
        cfg = validate_config(raw, args.subcommand)
    except ConfigInvalid as exc:
        print(str(exc), file=sys.stderr)
        return 2

    os.makedirs(outdir, exist_ok=True)
    t_start = time.time()
    try:
        if cfg.get("sweep", {}).get("axes"):
            files = run_sweep(args.subcommand, cfg, outdir, workers)
        else:
            files = _PIPELINES[args.subcommand](cfg, outdir)
    except KjpaError as exc:
        print(f"pipeline error [{args.subcommand}]: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:
        print(f"pipeline error [{args.subcommand}]: "
              f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3

    manifest = {
        "subcommand": args.subcommand,
        "config_sha256": hashlib.sha256(
            json.dumps(cfg, sort_keys=True).encode()).hexdigest(),
        "master_seed": cfg.get("master_seed", 0),
        "version": __version__,
        "wall_time_s": round(time.time() - t_start, 3),
        "outputs": {f: _sha256_file(os.path.join(outdir, f))
                    for f in sorted(files)},
    }
    _write_json(os.path.join(outdir, "manifest.json"), manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
