"""Per-grid-point pipelines: exact, Kohn-Sham, and side-by-side comparison.

Quadratic forms in the quench direction (entropy production, commuting
second moment) only need the directional density derivative along the
per-site quench vector, so a grid point costs two extra solves instead of
2L. Both pipelines normalize the finite-difference displacement the same
way (largest per-site potential change equals the step), which makes their
truncation errors cancel in direct comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exact import (DensityProfile, exact_response_along, gibbs, diagonalize,
                    response_along, thermal_state)
from .ksscf import (SCFConfig, SCFReport, ScfNotConvergedError, density_metric,
                    scf_density_function, scf_solve, theta2_ks_from_reports)
from .lattice import hamiltonian_from_potential
from .quench import (MomentsReport, QuenchSpec, WorkDistribution,
                     avg_work_functional, second_moment_diagonal,
                     sirr_from_directional, w2_commuting_from_directional,
                     work_distribution)


@dataclass(frozen=True)
class ExactQuenchResult:
    """Exact-diagonalization moments of one quench point."""

    quench: QuenchSpec
    density: DensityProfile
    report: MomentsReport
    distribution: WorkDistribution | None


@dataclass(frozen=True)
class KsQuenchResult:
    """Kohn-Sham moments of one quench point.

    ``theta2`` and ``w2`` are filled only when the KS-world Fock treatment
    was requested (exactly tractable sectors).
    """

    quench: QuenchSpec
    density: DensityProfile
    mean_w: float
    s_irr_functional: float
    w2_commuting: float
    theta2: float | None
    w2: float | None
    converged: bool
    iterations: int
    scf: SCFReport


@dataclass(frozen=True)
class ComparisonRow:
    """Exact and KS values of one grid point plus distances."""

    quench: QuenchSpec
    exact: ExactQuenchResult
    ks: KsQuenchResult
    metric: float

    @property
    def mean_w_diff(self) -> float:
        return abs(self.ks.mean_w - self.exact.report.mean_w)


def exact_quench_point(quench: QuenchSpec, fd_step: float = 1e-4,
                       full_distribution: bool = False,
                       merge_tol: float = 1e-12) -> ExactQuenchResult:
    """All exact quench statistics of one parameter point.

    The work distribution (and its Jarzynski residual) is only materialized
    on request; first and second moments come from the density functional
    and the diagonal trace, which equal the distribution moments exactly.
    """
    spec0 = quench.spec0
    beta = quench.beta
    basis, spectral0, eq0 = thermal_state(spec0, beta)
    ham_final = hamiltonian_from_potential(
        quench.spec_final.potential(), spec0.interaction, spec0.hopping,
        basis, spec0.periodic)
    spectral_final = diagonalize(ham_final)
    eq_final = gibbs(spectral_final, beta)
    delta_f = eq_final.free_energy - eq0.free_energy

    density = eq0.densities
    delta_v = quench.delta_v()
    mean_w = avg_work_functional(density, quench)
    w2 = second_moment_diagonal(eq0, basis, delta_v)
    directional = exact_response_along(spec0, beta, delta_v, fd_step, basis)
    s_irr_functional = sirr_from_directional(directional, quench)
    w2_c = w2_commuting_from_directional(density, directional, quench)
    theta2 = w2 - w2_c
    s_irr_exact = beta * (mean_w - delta_f)
    var_w = w2 - mean_w ** 2
    fdr = s_irr_exact - 0.5 * beta ** 2 * (var_w - theta2)

    dist = None
    jarzynski = None
    if full_distribution:
        dist = work_distribution(spectral0, spectral_final, eq0, merge_tol)
        jarzynski = dist.jarzynski_residual()

    report = MomentsReport(
        beta=beta, dv0=quench.dv0, mean_w=mean_w, w2=w2, var_w=var_w,
        w2_commuting=w2_c, theta2=theta2, s_irr_exact=s_irr_exact,
        s_irr_functional=s_irr_functional, delta_f=delta_f,
        fdr_residual=fdr, jarzynski_residual=jarzynski,
    )
    return ExactQuenchResult(quench, density, report, dist)


def ks_quench_point(quench: QuenchSpec, config: SCFConfig | None = None,
                    fd_step: float = 1e-4,
                    with_theta2: bool = False) -> KsQuenchResult:
    """Kohn-Sham quench statistics of one parameter point.

    The physical density response is the derivative of the converged SCF
    density with respect to the external potential along the quench
    direction (each finite-difference point is a fresh solve, warm-started
    from the converged densities). ``with_theta2`` additionally evaluates
    the KS-world non-commuting term, which needs a dense Fock sector.
    """
    cfg = config or SCFConfig()
    spec0 = quench.spec0
    scf0 = scf_solve(spec0, quench.beta, cfg)
    density = scf0.density
    mean_w = avg_work_functional(density, quench)
    delta_v = quench.delta_v()

    converged = scf0.converged
    s_irr = np.nan
    w2_c = np.nan
    theta2 = None
    w2 = None
    if converged:
        try:
            density_fn = scf_density_function(spec0, quench.beta, cfg,
                                              warm_start=density.n)
            directional = response_along(density_fn, spec0.potential(),
                                         delta_v, fd_step)
        except ScfNotConvergedError:
            converged = False
        else:
            s_irr = sirr_from_directional(directional, quench)
            w2_c = w2_commuting_from_directional(density, directional, quench)
            if with_theta2:
                scf_final = scf_solve(quench.spec_final, quench.beta, cfg)
                if not scf_final.converged:
                    converged = False
                else:
                    theta2 = theta2_ks_from_reports(scf0, scf_final.v_ks,
                                                    quench, fd_step)
                    w2 = w2_c + theta2
    return KsQuenchResult(
        quench=quench, density=density, mean_w=mean_w,
        s_irr_functional=float(s_irr), w2_commuting=float(w2_c),
        theta2=theta2, w2=w2, converged=converged,
        iterations=scf0.iterations, scf=scf0,
    )


def compare_point(quench: QuenchSpec, config: SCFConfig | None = None,
                  fd_step: float = 1e-4, with_theta2: bool = True,
                  full_distribution: bool = False) -> ComparisonRow:
    """Exact and KS pipelines on the same quench, with the density metric."""
    exact = exact_quench_point(quench, fd_step, full_distribution)
    ks = ks_quench_point(quench, config, fd_step, with_theta2)
    metric = density_metric(exact.density, ks.density, quench.spec0.n_particles)
    return ComparisonRow(quench, exact, ks, metric)
