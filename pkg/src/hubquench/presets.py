"""Experiment presets, grid sweeps, and deterministic CSV output.

Every runner writes CSVs with a header row, ``.`` decimal separator, and 17
significant digits, assembles rows in grid order regardless of the worker
pool, and drops a provenance echo (resolved config plus library version)
into the output directory, so identical configurations produce
byte-identical outputs.

Preset summary (all half filled, beta J = 1 unless a beta grid is swept,
quench amplitude 0.05 J):

========  =====================================================================
fig1      dimer, exact moments heatmap, 41x41 (U in [0,10], v0 in [0,5])
fig2      dimer, Kohn-Sham moments on the same grid
figd      density metric exact vs KS, linear shape, v0 = 5, L in {2,4,6,8}
fig3a     dimer second-moment decomposition vs U at v0 = 2 -> 2.05
fig3b     dimer non-commuting term vs beta in [0.1, 10] at U = 3
fig6      L = 8 work comparison, v0 in {0.5, 2.5, 5}, 21 U points
fig7      L = 16 linear, KS extracted work, 21x21 heatmap
fig8      L = 20 harmonic, KS work for the amplitude-reducing quench
          (dv0 = -0.05: raising the amplitude cannot extract work from this
          shape since all shape factors are positive)
fig9      L = 20 harmonic density profiles at v0 = 0.175, U in {0, 2, 5, 10}
========  =====================================================================
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ._version import __version__
from .config import ConfigError, ExperimentConfig, build_config
from .exact import thermal_state
from .ksscf import SCFConfig, density_metric, scf_solve
from .lattice import ChainSpec, PotentialShape
from .quench import QuenchSpec
from .sweeps import compare_point, exact_quench_point, ks_quench_point

FIG9_INTERACTIONS = (0.0, 2.0, 5.0, 10.0)  # illustrative choice, see preset docs


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return "nan"
    return format(float(value), ".17g")


def write_csv(path: str, header: list[str], rows) -> str:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def grid_map(worker, tasks: list, threads: int) -> list:
    """Apply ``worker`` to every task, results in task order."""
    if threads <= 1 or len(tasks) <= 1:
        return [worker(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=min(threads, len(tasks))) as pool:
        return list(pool.map(worker, tasks, chunksize=1))


def half_filled_spec(n_sites: int, interaction: float, shape_name: str,
                     v0: float) -> ChainSpec:
    return ChainSpec.half_filled(n_sites, interaction,
                                 PotentialShape.from_name(shape_name), v0)


def _quench(config: ExperimentConfig, n_sites: int, interaction: float,
            v0: float, beta: float | None = None) -> QuenchSpec:
    spec = half_filled_spec(n_sites, interaction, config.shape, v0)
    return QuenchSpec(spec, config.dv0, beta if beta is not None else config.beta)


def _scf_config(config: ExperimentConfig) -> SCFConfig:
    return SCFConfig(alpha=config.scf_alpha, tol=config.scf_tol,
                     max_iter=config.scf_max_iter)


@dataclass(frozen=True)
class PresetOutcome:
    """Files written by a runner and the number of unconverged SCF points."""

    out_dir: str
    files: tuple[str, ...]
    scf_failures: int


def _prepare_out(config: ExperimentConfig) -> str:
    os.makedirs(config.out_dir, exist_ok=True)
    with open(os.path.join(config.out_dir, "config.txt"), "w",
              encoding="utf-8") as handle:
        handle.write(config.resolved_text(__version__))
    return config.out_dir


def _grid_tasks(config: ExperimentConfig):
    """(v0, U) points in row-major order: v0 outer, U inner."""
    return [(v0, u) for v0 in config.v0_grid for u in config.u_grid]


# ---------------------------------------------------------------------------
# workers (top level so the process pool can pickle them)

def _exact_worker(task):
    quench, fd_step, full, merge_tol = task
    return exact_quench_point(quench, fd_step, full, merge_tol)


def _ks_worker(task):
    quench, cfg, fd_step, with_theta2 = task
    return ks_quench_point(quench, cfg, fd_step, with_theta2)


def _compare_worker(task):
    quench, cfg, fd_step, with_theta2 = task
    return compare_point(quench, cfg, fd_step, with_theta2)


def _density_pair_worker(task):
    """Exact and KS densities of one point (no quench statistics)."""
    spec, beta, cfg = task
    _, _, eq = thermal_state(spec, beta)
    report = scf_solve(spec, beta, cfg)
    return eq.densities.n, report


# ---------------------------------------------------------------------------
# generic sweeps (also used by the sweep/compare CLI subcommands)

def run_exact_sweep(config: ExperimentConfig,
                    full_distribution: bool = True) -> PresetOutcome:
    """Exact moments plus thermal densities over the (U, v0) grid."""
    out = _prepare_out(config)
    n_sites = config.n_sites
    tasks = [(_quench(config, n_sites, u, v0), config.fd_step,
              full_distribution, config.merge_tol)
             for v0, u in _grid_tasks(config)]
    results = grid_map(_exact_worker, tasks, config.threads)
    moment_rows = []
    density_rows = []
    for (v0, u), res in zip(_grid_tasks(config), results):
        rep = res.report
        moment_rows.append((u, v0, config.beta, config.dv0, rep.mean_w, rep.w2,
                            rep.w2_commuting, rep.theta2, rep.s_irr_exact,
                            rep.s_irr_functional, rep.delta_f,
                            rep.jarzynski_residual, rep.fdr_residual))
        for site, value in enumerate(res.density.n, start=1):
            density_rows.append((n_sites, u, v0, config.beta, site, value))
    files = (
        write_csv(os.path.join(out, "moments.csv"),
                  ["U", "v0", "beta", "dv0", "mean_w", "w2", "w2_c", "theta2",
                   "s_irr", "s_irr_func", "deltaF", "jarzynski_residual",
                   "fdr_residual"], moment_rows),
        write_csv(os.path.join(out, "densities.csv"),
                  ["L", "U", "v0", "beta", "site", "n"], density_rows),
    )
    return PresetOutcome(out, files, 0)


def run_ks_sweep(config: ExperimentConfig,
                 with_theta2: bool = False) -> PresetOutcome:
    """Kohn-Sham moments plus SCF diagnostics over the (U, v0) grid."""
    out = _prepare_out(config)
    cfg = _scf_config(config)
    n_sites = config.n_sites
    tasks = [(_quench(config, n_sites, u, v0), cfg, config.fd_step, with_theta2)
             for v0, u in _grid_tasks(config)]
    results = grid_map(_ks_worker, tasks, config.threads)
    moment_rows = []
    scf_rows = []
    failures = 0
    for (v0, u), res in zip(_grid_tasks(config), results):
        failures += 0 if res.converged else 1
        moment_rows.append((u, v0, config.beta, config.dv0, res.mean_w,
                            -res.mean_w, res.s_irr_functional, res.w2_commuting,
                            res.theta2, res.w2, res.converged, res.iterations))
        for site, (n_val, v_val) in enumerate(zip(res.density.n, res.scf.v_ks),
                                              start=1):
            scf_rows.append((n_sites, u, v0, config.beta, site, n_val, v_val,
                             res.iterations, res.converged))
    files = (
        write_csv(os.path.join(out, "ks_moments.csv"),
                  ["U", "v0", "beta", "dv0", "mean_w", "extracted_work",
                   "s_irr_func", "w2_c", "theta2", "w2", "converged",
                   "iterations"], moment_rows),
        write_csv(os.path.join(out, "scf.csv"),
                  ["L", "U", "v0", "beta", "site", "n_ks", "V_ks", "iterations",
                   "converged"], scf_rows),
    )
    return PresetOutcome(out, files, failures)


def compare_methods(config: ExperimentConfig,
                    with_theta2: bool = True) -> PresetOutcome:
    """Exact and KS values side by side on the (U, v0) grid."""
    out = _prepare_out(config)
    cfg = _scf_config(config)
    n_sites = config.n_sites
    tasks = [(_quench(config, n_sites, u, v0), cfg, config.fd_step, with_theta2)
             for v0, u in _grid_tasks(config)]
    results = grid_map(_compare_worker, tasks, config.threads)
    rows = []
    density_rows = []
    failures = 0
    for (v0, u), row in zip(_grid_tasks(config), results):
        ex, ks = row.exact.report, row.ks
        failures += 0 if ks.converged else 1
        rows.append((
            n_sites, u, v0, config.beta, config.dv0,
            ex.mean_w, ks.mean_w, abs(ks.mean_w - ex.mean_w),
            ex.s_irr_functional, ks.s_irr_functional,
            abs(ks.s_irr_functional - ex.s_irr_functional),
            ex.w2, ks.w2, (abs(ks.w2 - ex.w2) if ks.w2 is not None else None),
            ex.theta2, ks.theta2,
            (abs(ks.theta2 - ex.theta2) if ks.theta2 is not None else None),
            row.metric, ks.converged,
        ))
        for site, (ne, nk) in enumerate(zip(row.exact.density.n,
                                            row.ks.density.n), start=1):
            density_rows.append((n_sites, u, v0, config.beta, site, ne, nk))
    files = (
        write_csv(os.path.join(out, "compare.csv"),
                  ["L", "U", "v0", "beta", "dv0", "mean_w_exact", "mean_w_ks",
                   "dmean_w", "s_irr_exact_func", "s_irr_ks", "ds_irr",
                   "w2_exact", "w2_ks", "dw2", "theta2_exact", "theta2_ks",
                   "dtheta2", "D", "converged"], rows),
        write_csv(os.path.join(out, "compare_densities.csv"),
                  ["L", "U", "v0", "beta", "site", "n_exact", "n_ks"],
                  density_rows),
    )
    return PresetOutcome(out, files, failures)


# ---------------------------------------------------------------------------
# presets

def _run_fig1(config: ExperimentConfig) -> PresetOutcome:
    return run_exact_sweep(config, full_distribution=True)


def _run_fig2(config: ExperimentConfig) -> PresetOutcome:
    return run_ks_sweep(config, with_theta2=False)


def _run_figd(config: ExperimentConfig) -> PresetOutcome:
    out = _prepare_out(config)
    cfg = _scf_config(config)
    v0 = config.v0_grid[0]
    points = [(n_sites, u) for n_sites in config.site_counts()
              for u in config.u_grid]
    tasks = [(half_filled_spec(n_sites, u, config.shape, v0), config.beta, cfg)
             for n_sites, u in points]
    results = grid_map(_density_pair_worker, tasks, config.threads)
    metric_rows = []
    scf_rows = []
    density_rows = []
    failures = 0
    for (n_sites, u), (n_exact, report) in zip(points, results):
        failures += 0 if report.converged else 1
        metric_rows.append((n_sites, u, v0, config.beta,
                            density_metric(n_exact, report.density.n, n_sites)))
        for site, (ne, nk, vk) in enumerate(zip(n_exact, report.density.n,
                                                report.v_ks), start=1):
            density_rows.append((n_sites, u, v0, config.beta, site, ne))
            scf_rows.append((n_sites, u, v0, config.beta, site, nk, vk,
                             report.iterations, report.converged))
    files = (
        write_csv(os.path.join(out, "metric.csv"),
                  ["L", "U", "v0", "beta", "D"], metric_rows),
        write_csv(os.path.join(out, "scf.csv"),
                  ["L", "U", "v0", "beta", "site", "n_ks", "V_ks", "iterations",
                   "converged"], scf_rows),
        write_csv(os.path.join(out, "densities.csv"),
                  ["L", "U", "v0", "beta", "site", "n"], density_rows),
    )
    return PresetOutcome(out, files, failures)


def _run_fig3a(config: ExperimentConfig) -> PresetOutcome:
    out = _prepare_out(config)
    cfg = _scf_config(config)
    v0 = config.v0_grid[0]
    rows = []
    failures = 0
    exact_tasks = [(_quench(config, config.n_sites, u, v0), config.fd_step,
                    False, config.merge_tol) for u in config.u_grid]
    ks_tasks = [(_quench(config, config.n_sites, u, v0), cfg, config.fd_step,
                 True) for u in config.u_grid]
    exact_results = grid_map(_exact_worker, exact_tasks, config.threads)
    ks_results = grid_map(_ks_worker, ks_tasks, config.threads)
    for u, ex_res, ks_res in zip(config.u_grid, exact_results, ks_results):
        failures += 0 if ks_res.converged else 1
        rep = ex_res.report
        rows.append((u, v0, config.beta, config.dv0, rep.w2, rep.w2_commuting,
                     rep.theta2, ks_res.w2, ks_res.w2_commuting, ks_res.theta2,
                     ks_res.converged))
    files = (write_csv(os.path.join(out, "w2.csv"),
                       ["U", "v0", "beta", "dv0", "w2_exact", "w2_c_exact",
                        "theta2_exact", "w2_ks", "w2_c_ks", "theta2_ks",
                        "converged"], rows),)
    return PresetOutcome(out, files, failures)


def _run_fig3b(config: ExperimentConfig) -> PresetOutcome:
    out = _prepare_out(config)
    cfg = _scf_config(config)
    u = config.u_grid[0]
    v0 = config.v0_grid[0]
    betas = config.beta_grid or (config.beta,)
    exact_tasks = [(_quench(config, config.n_sites, u, v0, beta),
                    config.fd_step, False, config.merge_tol) for beta in betas]
    ks_tasks = [(_quench(config, config.n_sites, u, v0, beta), cfg,
                 config.fd_step, True) for beta in betas]
    exact_results = grid_map(_exact_worker, exact_tasks, config.threads)
    ks_results = grid_map(_ks_worker, ks_tasks, config.threads)
    rows = []
    failures = 0
    for beta, ex_res, ks_res in zip(betas, exact_results, ks_results):
        failures += 0 if ks_res.converged else 1
        rows.append((beta, u, v0, config.dv0, ex_res.report.theta2,
                     ks_res.theta2, ks_res.converged))
    files = (write_csv(os.path.join(out, "theta2.csv"),
                       ["beta", "U", "v0", "dv0", "theta2_exact", "theta2_ks",
                        "converged"], rows),)
    return PresetOutcome(out, files, failures)


def _run_fig6(config: ExperimentConfig) -> PresetOutcome:
    return compare_methods(config, with_theta2=False)


def _run_fig7(config: ExperimentConfig) -> PresetOutcome:
    return run_ks_sweep(config, with_theta2=False)


_run_fig8 = _run_fig7


def _run_fig9(config: ExperimentConfig) -> PresetOutcome:
    out = _prepare_out(config)
    cfg = _scf_config(config)
    v0 = config.v0_grid[0]
    tasks = [(half_filled_spec(config.n_sites, u, config.shape, v0),
              config.beta, cfg) for u in config.u_grid]

    results = grid_map(_scf_only_worker, tasks, config.threads)
    rows = []
    failures = 0
    for u, report in zip(config.u_grid, results):
        failures += 0 if report.converged else 1
        for site, (n_val, v_val) in enumerate(zip(report.density.n,
                                                  report.v_ks), start=1):
            rows.append((config.n_sites, u, v0, config.beta, site, n_val,
                         v_val, report.iterations, report.converged))
    files = (write_csv(os.path.join(out, "scf.csv"),
                       ["L", "U", "v0", "beta", "site", "n_ks", "V_ks",
                        "iterations", "converged"], rows),)
    return PresetOutcome(out, files, failures)


def _scf_only_worker(task):
    spec, beta, cfg = task
    return scf_solve(spec, beta, cfg)


def _grid(start: float, stop: float, count: int) -> tuple[float, ...]:
    return tuple(float(x) for x in np.linspace(start, stop, count))


PRESET_DEFAULTS: dict[str, ExperimentConfig] = {
    "fig1": ExperimentConfig(preset="fig1", n_sites=2, shape="linear", beta=1.0,
                             dv0=0.05, u_grid=_grid(0, 10, 41),
                             v0_grid=_grid(0, 5, 41), method="exact"),
    "fig2": ExperimentConfig(preset="fig2", n_sites=2, shape="linear", beta=1.0,
                             dv0=0.05, u_grid=_grid(0, 10, 41),
                             v0_grid=_grid(0, 5, 41), method="ks"),
    "figd": ExperimentConfig(preset="figd", n_sites=8, l_list=(2, 4, 6, 8),
                             shape="linear", beta=1.0, dv0=0.05,
                             u_grid=_grid(0, 10, 21), v0_grid=(5.0,),
                             method="both"),
    "fig3a": ExperimentConfig(preset="fig3a", n_sites=2, shape="linear",
                              beta=1.0, dv0=0.05, u_grid=_grid(0, 10, 41),
                              v0_grid=(2.0,), method="both"),
    "fig3b": ExperimentConfig(preset="fig3b", n_sites=2, shape="linear",
                              beta=1.0,
                              beta_grid=tuple(float(b) for b in
                                              np.geomspace(0.1, 10.0, 41)),
                              dv0=0.05, u_grid=(3.0,), v0_grid=(2.0,),
                              method="both"),
    "fig6": ExperimentConfig(preset="fig6", n_sites=8, shape="linear", beta=1.0,
                             dv0=0.05, u_grid=_grid(0, 10, 21),
                             v0_grid=(0.5, 2.5, 5.0), method="both"),
    "fig7": ExperimentConfig(preset="fig7", n_sites=16, shape="linear",
                             beta=1.0, dv0=0.05, u_grid=_grid(0, 10, 21),
                             v0_grid=_grid(0, 5, 21), method="ks"),
    "fig8": ExperimentConfig(preset="fig8", n_sites=20, shape="harmonic",
                             beta=1.0, dv0=-0.05, u_grid=_grid(0, 10, 21),
                             v0_grid=tuple(float(x) for x in
                                           np.linspace(0.0, 0.3, 22)[1:]),
                             method="ks"),
    "fig9": ExperimentConfig(preset="fig9", n_sites=20, shape="harmonic",
                             beta=1.0, dv0=0.05, u_grid=FIG9_INTERACTIONS,
                             v0_grid=(0.175,), method="ks"),
}

_PRESET_RUNNERS = {
    "fig1": _run_fig1,
    "fig2": _run_fig2,
    "figd": _run_figd,
    "fig3a": _run_fig3a,
    "fig3b": _run_fig3b,
    "fig6": _run_fig6,
    "fig7": _run_fig7,
    "fig8": _run_fig8,
    "fig9": _run_fig9,
}


def preset_config(name: str, file_path: str | None = None,
                  flag_overrides: dict | None = None) -> ExperimentConfig:
    """Resolved configuration of a preset with optional overrides."""
    if name not in PRESET_DEFAULTS:
        raise ConfigError(
            f"unknown preset {name!r}; choose from {sorted(PRESET_DEFAULTS)}"
        )
    defaults = replace(PRESET_DEFAULTS[name],
                       out_dir=os.path.join("out", name))
    return build_config(defaults, file_path, flag_overrides)


def run_preset(name: str, file_path: str | None = None,
               flag_overrides: dict | None = None) -> PresetOutcome:
    """Run one documented preset, writing its CSV set."""
    config = preset_config(name, file_path, flag_overrides)
    return _PRESET_RUNNERS[name](config)
