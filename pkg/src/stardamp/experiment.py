"""Config-driven runs: single experiments, seeded ensembles and parameter sweeps.

Every output is a deterministic function of the configuration: no
timestamps or absolute paths are written, and ensemble members are reduced
in seed order whether or not they were computed in parallel.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import statistics
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .analysis import (contraction_prediction, decay_fit, energy_identity, estimate_c,
                       is_monotone, lemma31_check, observability_ratio, measured_factor,
                       ObservabilityReport)
from .config import ExperimentConfig, numeric_path
from .duhamel import HorizonInputs, local_time_horizon, picard_solve
from .dynamics import BlowUpError, SimParams, evolve
from .graph import (DampingProfile, GraphState, StarGraph, build_star, indicator_damping,
                    ramp_damping)
from .initial import eigenmode, gaussian_packets
from .io import read_checkpoint, read_damping_table, write_checkpoint, write_trajectory_csv
from .norms import energy_trace, lp_norm, lp_norm_series

log = logging.getLogger(__name__)

CHAIN_SLACK = 5e-3
IDENTITY_TOL = 5e-3


def build_graph(cfg: ExperimentConfig, dx: float | None = None) -> StarGraph:
    g = cfg.graph
    return build_star(int(g.n_edges), g.L, g.dx if dx is None else dx, allow_small=g.allow_small)


def build_damping(cfg: ExperimentConfig, g: StarGraph) -> DampingProfile:
    d = cfg.damping
    if d.profile == "indicator_beyond_R":
        return indicator_damping(g, d.alpha0, d.R, d.all_edges)
    if d.profile == "smooth_ramp":
        return ramp_damping(g, d.alpha0, d.R, d.all_edges)
    active = tuple(range(g.n_edges)) if d.all_edges else (0,)
    return read_damping_table(d.table, g, d.alpha0, d.R, active)


def build_initial(cfg: ExperimentConfig, g: StarGraph) -> GraphState:
    ini = cfg.initial_data
    if ini.kind == "gaussian_packet":
        return gaussian_packets(g, int(ini.seed), ini.amplitude, ini.center, ini.wavenumber,
                                ini.width, ini.edge_weights)
    if ini.kind == "eigenmode":
        return eigenmode(g, int(ini.mode), ini.amplitude, ini.edge_weights)
    state, g2 = read_checkpoint(ini.table)
    state.check_on(g)
    return state


def build_params(cfg: ExperimentConfig, **over) -> SimParams:
    p = cfg.params
    kw = dict(lam=p.lam, alpha=int(p.alpha), dt=p.dt, t_final=p.t_final, scheme=p.scheme,
              stride=int(cfg.output.stride), allow_large_dt=p.allow_large_dt)
    kw.update(over)
    return SimParams(**kw)


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def small_data_warnings(cfg: ExperimentConfig, phi_l2: float) -> list[str]:
    out = []
    thr = cfg.analysis.small_data_threshold
    if int(cfg.params.alpha) == 5 and phi_l2 > thr:
        msg = (f"alpha = 5 with ||phi||_L2 = {phi_l2:.4g} > {thr:g}: global existence and "
               "decay are only guaranteed for small data")
        warnings.warn(msg, stacklevel=3)
        out.append(msg)
    return out


def _analyse(cfg: ExperimentConfig, traj, d: DampingProfile, T_list=()):
    """Diagnostics of one trajectory as a JSON-ready dict."""
    a = cfg.analysis
    tr = energy_trace(traj, d)
    ident = energy_identity(traj, d)
    e0 = float(tr.total_energy[0])
    rec = {
        "energy": {"initial": e0, "final": float(tr.total_energy[-1]),
                   "per_edge_final": tr.per_edge_energy[:, -1].tolist()},
        "energy_identity": {"residual": ident.value, "absolute": ident.absolute},
        "monotone": is_monotone(traj.step_mass),
        "degenerate": e0 == 0.0,
    }
    T = a.T_obs
    l31 = lemma31_check(traj, d, T)
    rec["lemma31"] = {"t": T, "lhs": l31.lhs, "rhs": l31.rhs, "slack": l31.slack,
                      "eps_quad": l31.eps_quad, "holds": l31.holds}
    obs = observability_ratio(traj, d, T)
    rec["observability"] = obs.to_dict()
    rec["ratio_vs_T"] = [observability_ratio(traj, d, t).to_dict() for t in T_list]
    if e0 > 0:
        fit = decay_fit(tr, skip_fraction=a.fit_window_fraction)
        rec["decay_fit"] = fit.to_dict()
        rec["measured_factor"] = measured_factor(tr, T)
    else:
        rec["decay_fit"] = None
        rec["measured_factor"] = None
    if obs.ratio is not None and obs.ratio > 0:
        fac, om = contraction_prediction(obs.ratio, d.alpha0, T)
        rec["contraction"] = {"c_hat": obs.ratio, "predicted_factor": fac, "omega_pred": om}
    else:
        rec["contraction"] = None
    return rec, tr


def _checks(rec) -> dict:
    ok_ident = rec["energy_identity"]["residual"] <= IDENTITY_TOL
    ratio = rec["observability"]["ratio"]
    chain = None
    if rec["contraction"] is not None and rec["measured_factor"] is not None:
        chain = rec["measured_factor"] <= rec["contraction"]["predicted_factor"] + CHAIN_SLACK
    return {
        "energy_identity": ok_ident,
        "monotone": rec["monotone"],
        "lemma31": rec["lemma31"]["holds"],
        "observability_positive": None if ratio is None else ratio > 0,
        "decay_chain": chain,
    }


def _run_picard(cfg: ExperimentConfig) -> dict:
    pc = cfg.analysis.picard
    g = build_graph(cfg, pc.dx)
    d = build_damping(cfg, g)
    phi = build_initial(cfg, g)
    p = build_params(cfg, dt=pc.dt or cfg.params.dt, t_final=pc.T, stride=1,
                     allow_large_dt=True)
    u, rep = picard_solve(phi, g, d, p, pc.tol, int(pc.max_iter))
    ref = evolve(phi, g, d, p)
    scale = float(lp_norm_series(ref, 2).max())
    dist = float(lp_norm_series(u - ref, 2).max())
    phi_l2 = lp_norm(phi, g, 2)
    out = rep.to_dict()
    out.update({
        "T": pc.T, "dx": g.dx, "dt": p.dt, "phi_l2": phi_l2, "C": pc.C,
        "horizon": local_time_horizon(HorizonInputs(pc.C, phi_l2, int(cfg.params.alpha)))
        if int(cfg.params.alpha) <= 5 else None,
        "relative_sup_l2_vs_evolve": dist / scale if scale > 0 else dist,
    })
    return out


def run_experiment(cfg: ExperimentConfig, out_dir=None, write: bool = True,
                   T_list=None):
    """Run one simulation with all diagnostics.

    Returns ``(exit_status, summary)``; status 0 means every check passed,
    1 a failed check or blow-up.
    """
    out = Path(cfg.output.directory if out_dir is None else out_dir)
    g = build_graph(cfg)
    d = build_damping(cfg, g)
    phi = build_initial(cfg, g)
    p = build_params(cfg)
    phi_l2 = lp_norm(phi, g, 2)
    summary = {"version": __version__, "kernel_backend": kernels.BACKEND,
               "config": cfg.to_dict(), "n_steps": p.n_steps, "phi_l2": phi_l2,
               "warnings": small_data_warnings(cfg, phi_l2)}
    if write:
        out.mkdir(parents=True, exist_ok=True)
    try:
        traj = evolve(phi, g, d, p)
    except BlowUpError as exc:
        summary.update(status="blow_up", blow_up={"step": exc.step, "time": exc.time})
        if write:
            (out / "summary.json").write_text(dumps(summary))
        return 1, _clean(summary)
    T_list = cfg.analysis.T_sweep if T_list is None else T_list
    rec, tr = _analyse(cfg, traj, d, T_list)
    summary.update(rec)
    summary["status"] = "ok"
    summary["blow_up"] = None
    summary["checks"] = _checks(rec)
    if cfg.analysis.picard.enabled:
        summary["picard"] = _run_picard(cfg)
    if write:
        fmts = cfg.output.formats
        if "csv" in fmts:
            tr.to_csv(out / "energy_trace.csv")
        if "trajectory_csv" in fmts:
            write_trajectory_csv(traj, out / "trajectory.csv")
        if "checkpoint" in fmts:
            write_checkpoint(traj[len(traj) - 1], g, out / "checkpoint.json")
        (out / "observability.json").write_text(dumps(rec["observability"]))
        if "picard" in summary:
            (out / "picard_report.json").write_text(dumps(summary["picard"]))
        (out / "summary.json").write_text(dumps(summary))
    failed = [k for k, v in summary["checks"].items() if v is False]
    return (1 if failed else 0), _clean(summary)


def _member(args):
    cfg_dict, seed, out_dir, write = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    cfg.initial_data.seed = seed
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            status, summ = run_experiment(cfg, out_dir, write=write)
    except Exception as exc:  # reported in the ensemble failure list
        return {"seed": seed, "error": f"{type(exc).__name__}: {exc}"}
    summ["seed"] = seed
    summ["exit_status"] = status
    return summ


def run_ensemble(cfg: ExperimentConfig, n: int | None = None, out_dir=None,
                 write: bool = True, workers: int | None = None) -> dict:
    """Seeded ensemble ``seed, seed+1, ..., seed+n-1`` with deterministic reduction."""
    n = int(cfg.analysis.ensemble_size if n is None else n)
    if n < 1:
        raise ValueError("ensemble size must be >= 1")
    workers = int(cfg.analysis.workers if workers is None else workers)
    out = Path(cfg.output.directory if out_dir is None else out_dir)
    base = int(cfg.initial_data.seed)
    seeds = [base + k for k in range(n)]
    jobs = [(cfg.to_dict(), s, out / f"run_{s:04d}", write) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            members = list(ex.map(_member, jobs))
    else:
        members = [_member(j) for j in jobs]

    ok = [m for m in members if "error" not in m and m.get("status") == "ok"]
    failures = [{"seed": m["seed"], "error": m.get("error", m.get("status"))}
                for m in members if m not in ok]
    alpha0, T = cfg.damping.alpha0, cfg.analysis.T_obs
    reports = [ObservabilityReport(**m["observability"]) for m in ok]
    summary = {"version": __version__, "kernel_backend": kernels.BACKEND,
               "config": cfg.to_dict(), "n": n, "seeds": seeds, "T_obs": T,
               "failures": failures}
    try:
        c_hat = estimate_c(reports)
    except ValueError:
        c_hat = None
    summary["c_hat"] = c_hat
    pred = contraction_prediction(c_hat, alpha0, T) if c_hat and c_hat > 0 else None
    summary["predicted"] = None if pred is None else {"factor": pred[0], "omega": pred[1]}

    rows = []
    for m in ok:
        fit = m["decay_fit"] or {}
        mf = m["measured_factor"]
        rows.append({
            "seed": m["seed"],
            "ratio": m["observability"]["ratio"],
            "measured_factor": mf,
            "predicted_factor": None if pred is None else pred[0],
            "chain_ok": None if (pred is None or mf is None) else mf <= pred[0] + CHAIN_SLACK,
            "omega_fit": fit.get("omega_fit"),
            "c_fit": fit.get("c_fit"),
            "r_squared": fit.get("r_squared"),
            "model_comparison": fit.get("model_comparison"),
            "energy_identity": m["energy_identity"]["residual"],
            "monotone": m["monotone"],
            "lemma31_slack": m["lemma31"]["slack"],
            "lemma31_eps": m["lemma31"]["eps_quad"],
            "lemma31_holds": m["lemma31"]["holds"],
        })
    summary["runs"] = rows

    curve = []
    for j, t in enumerate(cfg.analysis.T_sweep):
        reps = [ObservabilityReport(**m["ratio_vs_T"][j]) for m in ok]
        try:
            ct = estimate_c(reps)
        except ValueError:
            ct = None
        curve.append({"T": t, "c_hat": ct, "ratios": [r.ratio for r in reps]})
    summary["ratio_vs_T"] = curve

    omegas = [r["omega_fit"] for r in rows if r["omega_fit"] is not None]
    r2 = [r["r_squared"] for r in rows if r["r_squared"] is not None]
    summary["decay"] = {
        "omega_min": min(omegas) if omegas else None,
        "omega_median": statistics.median(omegas) if omegas else None,
        "r_squared_min": min(r2) if r2 else None,
        "r_squared_median": statistics.median(r2) if r2 else None,
    }
    summary["checks"] = {
        "c_hat_positive": c_hat is not None and c_hat > 0,
        "decay_chain_all": bool(rows) and all(r["chain_ok"] for r in rows),
        "lemma31_all": all(r["lemma31_holds"] for r in rows),
        "monotone_all": all(r["monotone"] for r in rows),
        "energy_identity_all": all(r["energy_identity"] <= IDENTITY_TOL for r in rows),
    }
    summary = _clean(summary)
    if write:
        out.mkdir(parents=True, exist_ok=True)
        (out / "ensemble_summary.json").write_text(dumps(summary))
        _write_csv(out / "decay_summary.csv",
                   ["run_id", "omega_fit", "c_fit", "r_squared", "c_hat",
                    "predicted_factor", "measured_factor"],
                   [[r["seed"], r["omega_fit"], r["c_fit"], r["r_squared"], c_hat,
                     r["predicted_factor"], r["measured_factor"]] for r in rows])
        _write_csv(out / "ratio_vs_T.csv", ["T", "c_hat"] + [f"seed_{s}" for s in seeds
                                                             if s in {r["seed"] for r in rows}],
                   [[c["T"], c["c_hat"]] + c["ratios"] for c in curve])
    return summary


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _coerce(cfg: ExperimentConfig, axis: str, value):
    from .config import get_path
    cur = get_path(cfg.to_dict(), axis)
    if isinstance(cur, int) and not isinstance(cur, bool) and float(value) == int(value):
        return int(value)
    return float(value)


SWEEP_COLUMNS = ["value", "omega_fit", "c_hat", "factor_measured", "factor_predicted",
                 "energy_identity_residual", "r_squared", "status"]


def sweep(cfg: ExperimentConfig, axis: str, values, out_dir=None, write: bool = True):
    """One run per value of the numeric config field ``axis``; returns the table rows."""
    if not numeric_path(cfg, axis):
        raise KeyError(f"unknown or non-numeric config field {axis!r}")
    # validate every variant before running any
    variants = [cfg.replace_path(axis, _coerce(cfg, axis, v)) for v in values]
    out = Path(cfg.output.directory if out_dir is None else out_dir)
    rows = []
    for k, (v, c) in enumerate(zip(values, variants)):
        status, s = run_experiment(c, out / f"sweep_{k:03d}", write=write)
        if s.get("status") != "ok":
            rows.append([v, None, None, None, None, None, None, s.get("status")])
            continue
        contr = s["contraction"] or {}
        fit = s["decay_fit"] or {}
        rows.append([v, fit.get("omega_fit"), contr.get("c_hat"), s["measured_factor"],
                     contr.get("predicted_factor"), s["energy_identity"]["residual"],
                     fit.get("r_squared"), "ok" if status == 0 else "check_failed"])
    if write:
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
    return [dict(zip(SWEEP_COLUMNS, r)) for r in rows]
