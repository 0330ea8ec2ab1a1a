"""Command-line interface.

Subcommands:

* ``preset <name>``  - run one documented experiment preset
* ``sweep``          - grid sweep with an explicit configuration
* ``compare``        - exact vs Kohn-Sham comparison on a grid
* ``scf``            - one self-consistent solve, densities to CSV
* ``pdw``            - one exact quench point: work distribution, moments,
                       densities, and the full density-response matrix

Exit codes: 0 success, 2 validation error, 3 SCF non-convergence at one or
more grid points (partial results are still written and flagged in the CSV).
"""

from __future__ import annotations

import argparse
import os
import sys

from ._version import __version__
from .config import ConfigError, ExperimentConfig, build_config, parse_grid
from .exact import density_response
from .ksscf import SCFConfig, scf_solve
from .presets import (PRESET_DEFAULTS, PresetOutcome, compare_methods,
                      half_filled_spec, run_exact_sweep, run_ks_sweep,
                      run_preset, write_csv, _prepare_out)
from .quench import QuenchSpec
from .sweeps import exact_quench_point


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key-value config file")
    parser.add_argument("--out", dest="out_dir", help="output directory")
    parser.add_argument("--threads", type=int, help="worker pool size")
    parser.add_argument("--tol", dest="scf_tol", type=float,
                        help="SCF density convergence threshold")
    parser.add_argument("--alpha", dest="scf_alpha", type=float,
                        help="SCF linear mixing weight")
    parser.add_argument("--max-iter", dest="scf_max_iter", type=int,
                        help="SCF iteration cap")
    parser.add_argument("--fd-step", dest="fd_step", type=float,
                        help="finite-difference step for density responses")
    parser.add_argument("--dv0", dest="dv0", type=float,
                        help="sudden quench amplitude")


def _add_point_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--L", dest="n_sites", type=int, help="chain length")
    parser.add_argument("--shape", choices=("linear", "harmonic", "uniform"))
    parser.add_argument("--beta", type=float, help="inverse temperature")


def _overrides(args: argparse.Namespace) -> dict:
    keys = ("out_dir", "threads", "scf_tol", "scf_alpha", "scf_max_iter",
            "fd_step", "dv0", "n_sites", "shape", "beta", "method")
    flags = {k: getattr(args, k, None) for k in keys}
    if getattr(args, "u_grid", None) is not None:
        flags["u_grid"] = parse_grid(args.u_grid)
    if getattr(args, "v0_grid", None) is not None:
        flags["v0_grid"] = parse_grid(args.v0_grid)
    return flags


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hubquench",
        description="Finite-temperature quench thermodynamics of Hubbard chains",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_preset = sub.add_parser("preset", help="run a documented preset")
    p_preset.add_argument("name", choices=sorted(PRESET_DEFAULTS))
    _add_common_flags(p_preset)

    for cmd, help_text in (("sweep", "grid sweep with explicit parameters"),
                           ("compare", "exact vs Kohn-Sham comparison grid")):
        p = sub.add_parser(cmd, help=help_text)
        _add_common_flags(p)
        _add_point_flags(p)
        p.add_argument("--u-grid", dest="u_grid",
                       help="interaction grid, start:stop:count or comma list")
        p.add_argument("--v0-grid", dest="v0_grid",
                       help="amplitude grid, start:stop:count or comma list")
        if cmd == "sweep":
            p.add_argument("--method", choices=("exact", "ks", "both"))
        else:
            p.add_argument("--no-theta2", action="store_true",
                           help="skip the non-commuting second-moment columns")

    for cmd, help_text in (("scf", "one self-consistent solve"),
                           ("pdw", "one exact quench point with distribution")):
        p = sub.add_parser(cmd, help=help_text)
        _add_common_flags(p)
        _add_point_flags(p)
        p.add_argument("--U", dest="interaction", type=float, required=True)
        p.add_argument("--v0", dest="v0", type=float, required=True)

    return parser


def _cmd_scf(args: argparse.Namespace) -> int:
    flags = _overrides(args)
    flags["u_grid"] = (args.interaction,)
    flags["v0_grid"] = (args.v0,)
    flags["method"] = "ks"
    config = build_config(ExperimentConfig(method="ks"), args.config, flags)
    out = _prepare_out(config)
    spec = half_filled_spec(config.n_sites, args.interaction, config.shape,
                            args.v0)
    report = scf_solve(spec, config.beta,
                       SCFConfig(alpha=config.scf_alpha, tol=config.scf_tol,
                                 max_iter=config.scf_max_iter))
    rows = [(config.n_sites, args.interaction, args.v0, config.beta, site,
             n_val, v_val, report.iterations, report.converged)
            for site, (n_val, v_val) in enumerate(zip(report.density.n,
                                                      report.v_ks), start=1)]
    write_csv(os.path.join(out, "scf.csv"),
              ["L", "U", "v0", "beta", "site", "n_ks", "V_ks", "iterations",
               "converged"], rows)
    status = "converged" if report.converged else "NOT converged"
    print(f"scf {status} in {report.iterations} iterations; "
          f"final residual {report.residuals[-1]:.3e}; results in {out}")
    return 0 if report.converged else 3


def _cmd_pdw(args: argparse.Namespace) -> int:
    flags = _overrides(args)
    flags["u_grid"] = (args.interaction,)
    flags["v0_grid"] = (args.v0,)
    flags["method"] = "exact"
    config = build_config(ExperimentConfig(method="exact"), args.config, flags)
    out = _prepare_out(config)
    spec = half_filled_spec(config.n_sites, args.interaction, config.shape,
                            args.v0)
    quench = QuenchSpec(spec, config.dv0, config.beta)
    result = exact_quench_point(quench, config.fd_step, True, config.merge_tol)
    rep = result.report
    write_csv(os.path.join(out, "pdw.csv"), ["w", "p"],
              list(zip(result.distribution.w, result.distribution.p)))
    write_csv(os.path.join(out, "moments.csv"),
              ["U", "v0", "beta", "dv0", "mean_w", "w2", "w2_c", "theta2",
               "s_irr", "s_irr_func", "deltaF", "jarzynski_residual",
               "fdr_residual"],
              [(args.interaction, args.v0, config.beta, config.dv0, rep.mean_w,
                rep.w2, rep.w2_commuting, rep.theta2, rep.s_irr_exact,
                rep.s_irr_functional, rep.delta_f, rep.jarzynski_residual,
                rep.fdr_residual)])
    write_csv(os.path.join(out, "densities.csv"),
              ["L", "U", "v0", "beta", "site", "n"],
              [(config.n_sites, args.interaction, args.v0, config.beta, site, n)
               for site, n in enumerate(result.density.n, start=1)])
    response = density_response(spec, config.beta, config.fd_step)
    write_csv(os.path.join(out, "response.csv"), ["i", "j", "dn_dV"],
              [(i + 1, j + 1, response[i, j])
               for i in range(config.n_sites) for j in range(config.n_sites)])
    print(f"pdw point written to {out} "
          f"(mean_w={rep.mean_w:.6g}, jarzynski_residual="
          f"{rep.jarzynski_residual:.3e})")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "preset":
            outcome = run_preset(args.name, args.config, _overrides(args))
        elif args.command == "sweep":
            config = build_config(ExperimentConfig(), args.config,
                                  _overrides(args))
            if config.method == "exact":
                outcome = run_exact_sweep(config)
            elif config.method == "ks":
                outcome = run_ks_sweep(config)
            else:
                outcome = compare_methods(config)
        elif args.command == "compare":
            flags = _overrides(args)
            flags["method"] = "both"
            config = build_config(ExperimentConfig(method="both"), args.config,
                                  flags)
            outcome = compare_methods(config, with_theta2=not args.no_theta2)
        elif args.command == "scf":
            return _cmd_scf(args)
        elif args.command == "pdw":
            return _cmd_pdw(args)
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    _report_outcome(outcome)
    return 3 if outcome.scf_failures else 0


def _report_outcome(outcome: PresetOutcome) -> None:
    for path in outcome.files:
        print(f"wrote {path}")
    if outcome.scf_failures:
        print(f"warning: {outcome.scf_failures} grid point(s) did not converge "
              "(flagged in the CSV)", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
