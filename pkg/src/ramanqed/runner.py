"""Command bodies behind the CLI: pure computations returning tables and summaries.

Nothing here touches the file system; :mod:`ramanqed.cli` writes the results.
"""

from __future__ import annotations

import copy
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .analytic import closed_form_trajectory, ww_params
from .config import ScenarioConfig, absolute_config, resolve
from .core import GridDiagnostics, ModeGrid, params_digest, validate_grid
from .dynamics import (
    AmplitudeState,
    HamiltonianMatrix,
    Trajectory,
    assemble_hamiltonian,
    propagate_expm,
    propagate_rk4,
)
from .errors import FitFailed, InvalidArgument, InvalidSeries, RamanQEDError
from .full_model import (
    FullParams,
    FullState,
    adiabaticity_report,
    assemble_full_hamiltonian,
    effective_system,
    stark_corrected_hamiltonian,
)
from .observables import (
    SpectrumSeries,
    concurrence,
    fit_exponential,
    fit_lorentzian,
    populations,
    reduced_atomic_density,
    reduced_atomic_density_full,
)

FIT_WINDOW = (0.5, 3.0)  # in units of 1/gamma
RK4_EXPM_TOL = 1e-6
ANALYTIC_TOL = 0.05
PHASE_TOL = 0.05

NOTES_MULTI_ATOM = "n_atoms > 2 uses the sqrt(N) collective coupling (extension of the two-atom model)"
NOTES_WINDOW = "frequency shift integrates over the grid window only"


class GridRejected(RamanQEDError):
    """Grid fails the continuum checks and --force was not given."""

    def __init__(self, diagnostics: list):
        self.diagnostics = diagnostics
        super().__init__("grid validation failed: " + "; ".join(_diag_reason(d) for d in diagnostics))


def _diag_reason(d: GridDiagnostics) -> str:
    parts = []
    if not d.recurrence_ok:
        parts.append(f"recurrence time {d.recurrence_time:.4g} <= 2 t_max = {2 * d.t_max:.4g}")
    if not d.bandwidth_ok:
        parts.append(f"bandwidth/gamma = {d.bandwidth_over_gamma:.4g} < 20")
    return ", ".join(parts) or "ok"


@dataclass
class Table:
    """CSV-ready table; column names carry their units in brackets."""

    columns: list
    rows: list


@dataclass
class Result:
    tables: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    lines: list = field(default_factory=list)
    runtimes: dict = field(default_factory=dict)


# -- shared pieces -----------------------------------------------------------


def _units(cfg: ScenarioConfig) -> tuple[str, str]:
    label = cfg.params.frequency_unit_label
    if label == "1":
        return "1", "1"
    return label, f"1/({label})"


def _check_grid(cfg: ScenarioConfig, grid: ModeGrid, gamma: float, force: bool) -> GridDiagnostics:
    diag = validate_grid(grid, cfg.integrator.t_max, cfg.params.n_atoms, gamma=gamma)
    if cfg.grid.validate and not diag.passed and not force:
        raise GridRejected([diag])
    return diag


def _aligned_rk4(h: HamiltonianMatrix, initial, cfg: ScenarioConfig) -> Trajectory:
    """RK4 sampled at exactly the configured sample times."""
    it = cfg.integrator
    interval = it.t_max / (it.samples - 1)
    per_sample = max(1, math.ceil(interval / it.dt - 1e-9))
    traj = propagate_rk4(h, initial, interval / per_sample, it.t_max, sample_every=per_sample)
    # replace the accumulated step times by the exact sample grid
    return traj.replace(times=it.times)


def propagate(h: HamiltonianMatrix, initial, cfg: ScenarioConfig, method: Optional[str] = None) -> Trajectory:
    if (method or cfg.integrator.method) == "rk4":
        return _aligned_rk4(h, initial, cfg)
    return propagate_expm(h, initial, cfg.integrator.times)


def fitted_rate(times: np.ndarray, p0: np.ndarray, gamma: float) -> tuple[Optional[float], str]:
    """Exponential fit of P0 over [0.5/gamma, 3/gamma]; (None, reason) when impossible."""
    if not gamma > 0:
        return None, "no decay (gamma = 0)"
    lo, hi = FIT_WINDOW[0] / gamma, FIT_WINDOW[1] / gamma
    keep = (times >= lo - 1e-12) & (times <= hi + 1e-12)
    try:
        rate = fit_exponential(times[keep], p0[keep]).rate
    except InvalidSeries as exc:
        return None, str(exc)
    if not rate > 0:
        return None, "no exponential decay in the fit window"
    return rate, ""


def _lorentz_summary(series: SpectrumSeries, gamma: float, t: float) -> dict:
    if not gamma > 0 or gamma * t < 10:
        return {"skipped": "gamma*t_max < 10; spectrum still transient"}
    try:
        fit = fit_lorentzian(series)
    except (FitFailed, InvalidSeries) as exc:
        return {"skipped": str(exc)}
    return {
        "center": fit.center,
        "fwhm": fit.fwhm,
        "fwhm_over_gamma": fit.fwhm / gamma,
        "peak": fit.peak,
        "rms_residual": fit.rms_residual,
        "iterations": fit.iterations,
    }


def _notes(cfg: ScenarioConfig) -> list:
    notes = [NOTES_WINDOW]
    if cfg.params.n_atoms > 2:
        notes.append(NOTES_MULTI_ATOM)
    return notes


# -- effective model ---------------------------------------------------------


def effective_run(cfg: ScenarioConfig, force: bool = False, method: Optional[str] = None) -> dict:
    grid = cfg.build_grid()
    ww = ww_params(cfg.params, grid)
    diag = _check_grid(cfg, grid, ww.gamma, force)
    h = assemble_hamiltonian(cfg.params, grid, include_dark=cfg.grid.include_dark)
    init = AmplitudeState.initial(grid.n_modes, include_dark=cfg.grid.include_dark)
    traj = propagate(h, init, cfg, method)
    return {"grid": grid, "ww": ww, "diag": diag, "h": h, "traj": traj}


def _effective_tables(cfg: ScenarioConfig, run: dict) -> tuple[Table, Table, dict]:
    traj, grid, ww = run["traj"], run["grid"], run["ww"]
    f_unit, t_unit = _units(cfg)
    pops = populations(traj)
    conc = np.array([concurrence(reduced_atomic_density(s, cfg.params.n_atoms)) for s in traj.samples])
    columns = [
        f"t [{t_unit}]", "re_c0 [1]", "im_c0 [1]", "p0 [1]", "p_stokes [1]", "concurrence [1]", "norm [1]",
    ]
    dark = cfg.grid.include_dark
    if dark:
        columns.append("max_dark_amplitude [1]")
        dark_max = np.max(np.abs(traj.dark), axis=1)
    rows = []
    for i, t in enumerate(traj.times):
        row = [t, traj.c0[i].real, traj.c0[i].imag, pops.p0[i], pops.ps[i], conc[i], traj.norms[i]]
        if dark:
            row.append(dark_max[i])
        rows.append(row)
    last = traj.sample(len(traj) - 1)
    weights = np.abs(last.ck) ** 2
    spectrum = Table([f"omega [{f_unit}]", "weight [1]"], [[w, p] for w, p in zip(grid.frequencies, weights)])
    rate, reason = fitted_rate(traj.times, pops.p0, ww.gamma)
    info = {
        "gamma_formula": ww.gamma,
        "gamma_fit": rate,
        "gamma_fit_ratio": rate / ww.gamma if rate is not None and ww.gamma > 0 else None,
        "delta": ww.delta,
        "final": {"p0": pops.p0[-1], "p_stokes": pops.ps[-1], "concurrence": conc[-1]},
        "max_norm_deviation": float(np.max(np.abs(traj.norms - 1))),
        "spectrum_fit": _lorentz_summary(SpectrumSeries(grid.frequencies, weights), ww.gamma, last.time),
    }
    if reason:
        info["gamma_fit_note"] = reason
    if dark:
        info["max_dark_amplitude"] = float(np.max(dark_max)) if dark_max.size else 0.0
    return Table(columns, rows), spectrum, info


# -- full model --------------------------------------------------------------


def full_run(cfg: ScenarioConfig, fp: FullParams, grid: ModeGrid) -> dict:
    h = assemble_full_hamiltonian(fp, grid)
    traj = propagate(h, FullState.initial(grid.n_modes), cfg)
    eff = propagate_expm(stark_corrected_hamiltonian(fp, grid), AmplitudeState.initial(grid.n_modes), cfg.integrator.times)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = adiabaticity_report(traj, eff, fp, grid)
    return {"traj": traj, "eff": eff, "report": report}


def _full_table(cfg: ScenarioConfig, traj: Trajectory) -> Table:
    _, t_unit = _units(cfg)
    pops = populations(traj)
    rows = []
    for i, s in enumerate(traj.samples):
        rho, weight = reduced_atomic_density_full(s, cfg.params.n_atoms)
        rows.append([
            traj.times[i], s.b0.real, s.b0.imag, pops.p0[i], pops.p1[i], pops.ps[i],
            concurrence(rho), weight, traj.norms[i],
        ])
    columns = [
        f"t [{t_unit}]", "re_b0 [1]", "im_b0 [1]", "p0 [1]", "p1 [1]", "p_stokes [1]",
        "concurrence_13 [1]", "weight_13 [1]", "norm [1]",
    ]
    return Table(columns, rows)


def _report_dict(report) -> dict:
    return report.to_dict()


# -- commands ----------------------------------------------------------------


def cmd_simulate(cfg: ScenarioConfig, force: bool = False) -> Result:
    res = Result()
    start = time.perf_counter()
    base = {
        "command": "simulate",
        "config_digest": cfg.digest,
        "model": cfg.model,
        "frequency_unit": cfg.params.frequency_unit_label,
        "notes": _notes(cfg),
    }
    grid = cfg.build_grid()
    if cfg.model in ("effective",):
        run = effective_run(cfg, force)
        traj_table, spectrum, info = _effective_tables(cfg, run)
        res.tables["trajectory.csv"] = traj_table
        res.tables["spectrum.csv"] = spectrum
        base.update(info)
        base["params_digest"] = params_digest(cfg.params, run["grid"])
        base["grid_diagnostics"] = run["diag"].to_dict()
    else:
        fp = cfg.full
        eff_params, eff_grid = effective_system(fp, grid)
        ww = ww_params(eff_params, eff_grid)
        diag = _check_grid(cfg, eff_grid, ww.gamma, force)
        run = full_run(cfg, fp, grid)
        res.tables["trajectory_full.csv" if cfg.model == "both" else "trajectory.csv"] = _full_table(cfg, run["traj"])
        f_unit, _ = _units(cfg)
        weights = np.abs(run["traj"].stokes[-1]) ** 2
        res.tables["spectrum.csv"] = Table(
            [f"omega [{f_unit}]", "weight [1]"], [[w, p] for w, p in zip(grid.frequencies, weights)]
        )
        rate, reason = fitted_rate(run["traj"].times, np.abs(run["traj"].c0) ** 2, ww.gamma)
        base.update(
            gamma_formula=ww.gamma,
            gamma_fit=rate,
            gamma_fit_ratio=rate / ww.gamma if rate is not None and ww.gamma > 0 else None,
            delta=ww.delta,
            adiabaticity=_report_dict(run["report"]),
            full_params={
                "g_p": fp.g_p,
                "collective_pump_coupling": fp.collective_pump_coupling,
                "detuning2": fp.detuning2,
                "max_g_s": float(np.max(fp.stokes_couplings(grid))),
            },
            max_norm_deviation=float(np.max(np.abs(run["traj"].norms - 1))),
            grid_diagnostics=diag.to_dict(),
            params_digest=params_digest(eff_params, eff_grid),
        )
        if reason:
            base["gamma_fit_note"] = reason
        if cfg.model == "both":
            eff_traj = run["eff"]
            eff_run = {"traj": eff_traj, "grid": eff_grid, "ww": ww}
            table, _, info = _effective_tables(cfg, eff_run)
            res.tables["trajectory.csv"] = table
            base["effective"] = info
    res.summary = base
    res.runtimes["simulate"] = time.perf_counter() - start
    g = base.get("gamma_formula")
    r = base.get("gamma_fit_ratio")
    res.lines.append(
        f"simulate: gamma formula {g:.6g}, fitted/formula "
        + (f"{r:.4f}" if r is not None else "n/a")
        + f", grid check {'passed' if base['grid_diagnostics']['passed'] else 'FAILED'}"
    )
    return res


def cmd_compare(cfg: ScenarioConfig, force: bool = False) -> Result:
    if cfg.model != "effective":
        raise InvalidArgument("compare needs model: effective")
    res = Result()
    t0 = time.perf_counter()
    ex = effective_run(cfg, force, method="expm")
    res.runtimes["expm"] = time.perf_counter() - t0
    t1 = time.perf_counter()
    init = AmplitudeState.initial(ex["grid"].n_modes, include_dark=cfg.grid.include_dark)
    rk = _aligned_rk4(ex["h"], init, cfg)
    res.runtimes["rk4"] = time.perf_counter() - t1
    ana = closed_form_trajectory(cfg.integrator.times, cfg.params, ex["grid"], ex["ww"])
    c_ex, c_rk, c_an = ex["traj"].c0, rk.c0, ana.c0
    p_ex, p_rk, p_an = (np.abs(c) ** 2 for c in (c_ex, c_rk, c_an))
    d_rk = np.abs(c_rk - c_ex)
    d_an = np.abs(p_ex - p_an)
    phase = np.abs(np.angle(c_ex * np.conj(c_an)))
    _, t_unit = _units(cfg)
    rows = [
        [t, a, b, c, d, e, f]
        for t, a, b, c, d, e, f in zip(cfg.integrator.times, p_ex, p_rk, p_an, d_rk, d_an, phase)
    ]
    res.tables["compare.csv"] = Table(
        [
            f"t [{t_unit}]", "p0_expm [1]", "p0_rk4 [1]", "p0_analytic [1]",
            "abs_dc0_rk4_expm [1]", "abs_dp0_expm_analytic [1]", "phase_expm_analytic [rad]",
        ],
        rows,
    )
    sup = {
        "rk4_vs_expm_c0": float(np.max(d_rk)),
        "rk4_vs_analytic_p0": float(np.max(np.abs(p_rk - p_an))),
        "expm_vs_analytic_p0": float(np.max(d_an)),
        "expm_vs_analytic_phase": float(np.max(phase)),
    }
    verdicts = {
        "rk4_vs_expm": sup["rk4_vs_expm_c0"] < RK4_EXPM_TOL,
        "numeric_vs_analytic": sup["expm_vs_analytic_p0"] < ANALYTIC_TOL,
        "phase": sup["expm_vs_analytic_phase"] < PHASE_TOL,
    }
    res.summary = {
        "command": "compare",
        "config_digest": cfg.digest,
        "gamma_formula": ex["ww"].gamma,
        "delta": ex["ww"].delta,
        "rk4_dt": rk.info["dt"],
        "sup_deviation": sup,
        "thresholds": {"rk4_vs_expm": RK4_EXPM_TOL, "numeric_vs_analytic": ANALYTIC_TOL, "phase": PHASE_TOL},
        "verdicts": verdicts,
        "grid_diagnostics": ex["diag"].to_dict(),
        "notes": _notes(cfg),
    }
    for name, ok, value, tol in (
        ("rk4 vs expm sup|dC0|", verdicts["rk4_vs_expm"], sup["rk4_vs_expm_c0"], RK4_EXPM_TOL),
        ("expm vs analytic sup|dP0|", verdicts["numeric_vs_analytic"], sup["expm_vs_analytic_p0"], ANALYTIC_TOL),
        ("expm vs analytic sup|dphase|", verdicts["phase"], sup["expm_vs_analytic_phase"], PHASE_TOL),
    ):
        res.lines.append(f"{'PASS' if ok else 'FAIL'} {name} = {value:.3g} (threshold {tol:g})")
    return res


def _ladder_point(args) -> dict:
    cfg, fp = args
    grid = cfg.build_grid()
    start = time.perf_counter()
    run = full_run(cfg, fp, grid)
    out = _report_dict(run["report"])
    out.update(detuning2=fp.detuning2, g_p=fp.g_p, max_g_s=float(np.max(fp.stokes_couplings(grid))))
    out["runtime"] = time.perf_counter() - start
    return out


def _pool_map(fn: Callable, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))


def cmd_validate_adiabatic(cfg: ScenarioConfig, force: bool = False, jobs: int = 1) -> Result:
    if not cfg.ladder:
        raise InvalidArgument("validate-adiabatic needs an 'adiabatic' section")
    grid = cfg.build_grid()
    if cfg.ladder_kind == "ratios":
        ww = ww_params(cfg.params, grid)
    else:
        ww = ww_params(*effective_system(cfg.ladder[0], grid))
    diag = _check_grid(cfg, grid, ww.gamma, force)
    points = _pool_map(_ladder_point, [(cfg, fp) for fp in cfg.ladder], jobs)
    res = Result()
    key = "ratio [1]" if cfg.ladder_kind == "ratios" else f"detuning2 [{_units(cfg)[0]}]"
    rows = []
    for value, p in zip(cfg.ladder_values, points):
        rows.append([
            value, p["detuning2"], p["g_p"], p["coupling_ratio"], p["max_intermediate_population"],
            p["intermediate_bound"], p["max_population_discrepancy"], p["discrepancy_bound"],
            p["regime_ok"], p["passed"],
        ])
    f_unit = _units(cfg)[0]
    res.tables["adiabatic.csv"] = Table(
        [
            key, f"detuning2 [{f_unit}]", f"g_p [{f_unit}]", "coupling_ratio [1]", "max_p1 [1]",
            "p1_bound [1]", "max_discrepancy [1]", "discrepancy_bound [1]", "regime_ok", "passed",
        ],
        rows,
    )
    disc = [p["max_population_discrepancy"] for p in points]
    order = np.argsort([-p["coupling_ratio"] for p in points])
    ordered = [disc[i] for i in order]
    monotone = all(a > b for a, b in zip(ordered, ordered[1:]))
    res.summary = {
        "command": "validate-adiabatic",
        "config_digest": cfg.digest,
        "ladder_kind": cfg.ladder_kind,
        "points": [{k: v for k, v in p.items() if k != "runtime"} for p in points],
        "discrepancy_decreases_with_ratio": monotone,
        "all_passed": all(p["passed"] for p in points),
        "gamma_formula": ww.gamma,
        "grid_diagnostics": diag.to_dict(),
        "notes": _notes(cfg),
    }
    res.runtimes = {f"point_{i}": p["runtime"] for i, p in enumerate(points)}
    for value, p in zip(cfg.ladder_values, points):
        res.lines.append(
            f"{'PASS' if p['passed'] else 'FAIL'} {cfg.ladder_kind[:-1] if cfg.ladder_kind == 'ratios' else 'detuning2'}"
            f"={value:g}: max|b1|^2 = {p['max_intermediate_population']:.3g} (<= {p['intermediate_bound']:.3g}),"
            f" discrepancy = {p['max_population_discrepancy']:.3g} (<= {p['discrepancy_bound']:.3g})"
        )
    res.lines.append(f"discrepancy decreasing along the ladder: {'yes' if monotone else 'NO'}")
    return res


# -- sweeps ------------------------------------------------------------------


def sweep_point_configs(cfg: ScenarioConfig) -> list:
    """One absolute config dict per sweep value, every other input held fixed."""
    base = absolute_config(cfg)
    base.pop("sweep", None)
    base.pop("adiabatic", None)
    raw_grid = cfg.raw.get("grid", {})
    docs = []
    for value in cfg.sweep_values:
        doc = copy.deepcopy(base)
        axis = cfg.sweep_axis
        if axis == "n_atoms":
            doc["system"]["n_atoms"] = int(value)
        elif axis == "n_modes":
            doc["grid"]["n_modes"] = int(value)
        elif axis == "bandwidth":
            scale = cfg.gamma_ref if "bandwidth_gamma" in raw_grid else 1.0
            doc["grid"]["bandwidth"] = float(value) * scale
        elif axis == "lambda0":
            coupling = doc["system"]["coupling"]
            if coupling.get("kind", "flat") == "user-table":
                peak = max(p[1] for p in coupling["points"])
                factor = float(value) / peak if peak > 0 else 0.0
                coupling["points"] = [[w, lam * factor] for w, lam in coupling["points"]]
            else:
                coupling["lambda0"] = float(value)
        elif axis == "detuning2":
            doc["full"]["detuning2"] = float(value)
            doc["model"] = "full" if doc.get("model", "effective") == "effective" else doc["model"]
        docs.append(doc)
    return docs


def sweep_row(cfg: ScenarioConfig, summary: dict) -> dict:
    final = summary.get("final") or summary.get("effective", {}).get("final", {})
    row = {
        "gamma_formula": summary["gamma_formula"],
        "gamma_fit": summary["gamma_fit"],
        "final_concurrence": final.get("concurrence"),
        "grid_ok": summary["grid_diagnostics"]["passed"],
    }
    if "adiabaticity" in summary:
        row["max_p1"] = summary["adiabaticity"]["max_intermediate_population"]
    return row


def _sweep_worker(args) -> dict:
    doc, force = args
    start = time.perf_counter()
    cfg = resolve(doc)
    res = cmd_simulate(cfg, force=force)
    row = sweep_row(cfg, res.summary)
    row["runtime"] = time.perf_counter() - start
    return row


def precheck_sweep(cfg: ScenarioConfig, docs: list) -> list:
    """Grid diagnostics for every point, computed before any propagation."""
    failed = []
    for doc in docs:
        point = resolve(doc)
        if not point.grid.validate:
            continue
        grid = point.build_grid()
        if point.model == "effective":
            gamma = ww_params(point.params, grid).gamma
        else:
            gamma = ww_params(*effective_system(point.full, grid)).gamma
        diag = validate_grid(grid, point.integrator.t_max, point.params.n_atoms, gamma=gamma)
        if not diag.passed:
            failed.append(diag)
    return failed


def cmd_sweep(cfg: ScenarioConfig, force: bool = False, jobs: int = 1) -> Result:
    if cfg.sweep_axis is None:
        raise InvalidArgument("sweep needs a 'sweep' section")
    docs = sweep_point_configs(cfg)
    if not force:
        failed = precheck_sweep(cfg, docs)
        if failed:
            raise GridRejected(failed)
    rows = _pool_map(_sweep_worker, [(d, force) for d in docs], jobs)
    res = Result()
    axis = cfg.sweep_axis
    unit = {"lambda0": "1", "n_atoms": "1", "n_modes": "1"}.get(axis, _units(cfg)[0])
    if axis == "bandwidth" and "bandwidth_gamma" in cfg.raw.get("grid", {}):
        unit = "gamma"
    f_unit = _units(cfg)[0]
    columns = [f"{axis} [{unit}]", f"gamma_formula [{f_unit}]", f"gamma_fit [{f_unit}]", "final_concurrence [1]", "grid_ok"]
    has_p1 = any("max_p1" in r for r in rows)
    if has_p1:
        columns.append("max_p1 [1]")
    table_rows = []
    for value, r in zip(cfg.sweep_values, rows):
        row = [value, r["gamma_formula"], r["gamma_fit"], r["final_concurrence"], r["grid_ok"]]
        if has_p1:
            row.append(r.get("max_p1"))
        table_rows.append(row)
    res.tables["sweep.csv"] = Table(columns, table_rows)
    res.summary = {
        "command": "sweep",
        "config_digest": cfg.digest,
        "axis": axis,
        "values": list(cfg.sweep_values),
        "rows": [{k: v for k, v in r.items() if k != "runtime"} for r in rows],
        "notes": _notes(cfg),
    }
    res.runtimes = {f"point_{i}": r["runtime"] for i, r in enumerate(rows)}
    res.lines.append(f"sweep over {axis}: {len(rows)} point{'' if len(rows) == 1 else 's'}")
    for value, r in zip(cfg.sweep_values, rows):
        fit = r["gamma_fit"]
        res.lines.append(
            f"  {axis}={value:g}: gamma formula {r['gamma_formula']:.6g}, fitted "
            + (f"{fit:.6g}" if fit is not None else "n/a")
        )
    return res
