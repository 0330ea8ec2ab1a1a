"""Finite-temperature Kohn-Sham solver in the canonical ensemble.

The interacting chain is mapped onto non-interacting fermions moving in an
effective potential V_ks = V + V_hxc[n], with the per-site H-XC potential
taken from the exactly solvable single-site model:

    V_hxc[n] = U + (1/beta) ln Gamma,
    Gamma    = (dn + sqrt(dn^2 + exp(-beta U) n (2 - n))) / n,   dn = n - 1.

(The inversion is re-derived from the single-site thermal density; see
``single_site_density`` for the closed form it inverts. For dn < 0 the
numerator is rationalized to avoid cancellation.) The self-consistent
densities come from the canonical-ensemble occupations of the tridiagonal
Kohn-Sham spectrum, which matches -(2/beta) d log Z_N / d V_i by the
chain rule; both spin sectors must hold the same particle number.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .canonical import (SingleParticleSpectrum, canonical_free_energy,
                        canonical_occupations, canonical_partition)
from .exact import DensityProfile, diagonalize, gibbs, response_along
from .lattice import ChainSpec, build_fock_basis, hamiltonian_from_potential
from .quench import QuenchSpec, second_moment_diagonal

DEFAULT_CLAMP = 1e-12


class ScfNotConvergedError(RuntimeError):
    """A self-consistent solve required by the caller did not converge."""


def single_site_density(v0: float, interaction: float, beta: float) -> float:
    """Thermal density of the interacting single-site model (closed form).

    n = 2 (x + u x^2) / (1 + 2 x + u x^2), x = exp(-beta v0), u = exp(-beta U).
    Serves as the round-trip oracle for the H-XC inversion.
    """
    x = np.exp(-beta * v0)
    u = np.exp(-beta * interaction)
    return float(2.0 * (x + u * x * x) / (1.0 + 2.0 * x + u * x * x))


def ks_potential_single_site(n, beta: float):
    """Non-interacting single-site inversion V_ks[n] = -(1/beta) ln(n/(2-n))."""
    n = np.asarray(n, dtype=np.float64)
    return -np.log(n / (2.0 - n)) / beta


def hxc_single_site(n, interaction: float, beta: float,
                    clamp_eps: float = DEFAULT_CLAMP):
    """Single-site H-XC potential, elementwise on the density.

    Exactly U/2 at n = 1 and identically zero at U = 0; densities are
    clamped to [clamp_eps, 2 - clamp_eps] where the inversion diverges.
    """
    scalar = np.isscalar(n)
    n = np.atleast_1d(np.asarray(n, dtype=np.float64))
    if not np.isfinite(n).all():
        raise ValueError("density contains non-finite values")
    if interaction == 0.0:
        out = np.zeros_like(n)
        return float(out[0]) if scalar else out
    n = np.clip(n, clamp_eps, 2.0 - clamp_eps)
    u = np.exp(-beta * interaction)
    dn = n - 1.0
    root = np.sqrt(dn * dn + u * n * (2.0 - n))
    gamma = np.where(dn >= 0.0, (dn + root) / n, u * (2.0 - n) / (root - dn))
    out = interaction + np.log(gamma) / beta
    out = np.where(n == 1.0, 0.5 * interaction, out)
    return float(out[0]) if scalar else out


def clamped_sites(n, clamp_eps: float = DEFAULT_CLAMP) -> int:
    """Number of sites whose density falls outside the H-XC domain."""
    n = np.asarray(n)
    return int(np.count_nonzero((n < clamp_eps) | (n > 2.0 - clamp_eps)))


def ks_single_particle(v_ks, hopping: float,
                       periodic: bool = False) -> SingleParticleSpectrum:
    """Eigenpairs of the one-body chain: diagonal V_ks, off-diagonal -J."""
    v_ks = np.asarray(v_ks, dtype=np.float64)
    n_sites = v_ks.size
    if periodic:
        ham = np.diag(v_ks)
        off = -hopping * np.ones(n_sites - 1)
        ham += np.diag(off, 1) + np.diag(off, -1)
        ham[0, -1] += -hopping
        ham[-1, 0] += -hopping
        spectral = diagonalize(ham)
        return SingleParticleSpectrum(spectral.eigenvalues, spectral.eigenvectors)
    if n_sites == 1:
        return SingleParticleSpectrum(v_ks.copy(), np.ones((1, 1)))
    eps, amps = eigh_tridiagonal(v_ks, -hopping * np.ones(n_sites - 1))
    return SingleParticleSpectrum(eps, amps)


def ks_density(spectrum: SingleParticleSpectrum, n_up: int, n_down: int,
               beta: float) -> DensityProfile:
    """Per-site densities from canonical occupations of both spin species.

    n_i = sum_k (<n_k>_up + <n_k>_dn) |phi_k(i)|^2; agrees with the direct
    derivative of log Z with respect to V_i by the chain rule.
    """
    occ_total = np.zeros(spectrum.n_levels)
    for n_sigma in (n_up, n_down):
        table = canonical_partition(spectrum, n_sigma, beta)
        occ_total += canonical_occupations(table, spectrum, n_sigma, beta)
    return DensityProfile((spectrum.amps ** 2) @ occ_total)


def ks_free_energy(spectrum: SingleParticleSpectrum, n_up: int, n_down: int,
                   beta: float) -> float:
    """Free energy of the Kohn-Sham system, -(1/beta) log(Z_up Z_dn)."""
    up = canonical_partition(spectrum, n_up, beta)
    dn = up if n_down == n_up else canonical_partition(spectrum, n_down, beta)
    return canonical_free_energy(up, dn)


@dataclass(frozen=True)
class SCFConfig:
    """Linear-mixing SCF controls: n <- (1 - alpha) n + alpha n_new.

    Strongly interacting chains develop density-map modes with large
    negative Jacobian eigenvalues (charge sloshing between sites), for which
    a fixed alpha either diverges or locks into a period-2 cycle. The solver
    therefore tracks a secant estimate of the most negative eigenvalue seen
    along the iteration and caps the working alpha near its deadbeat value
    0.9 / (1 - lambda_min), never below ``alpha_min``. Benign solves run at
    the configured alpha throughout.
    """

    alpha: float = 0.3
    tol: float = 1e-8
    max_iter: int = 5000
    clamp_eps: float = DEFAULT_CLAMP
    alpha_min: float = 0.005

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("mixing alpha must be in (0, 1]")
        if not 0.0 < self.alpha_min <= self.alpha:
            raise ValueError("alpha_min must be in (0, alpha]")
        if self.tol <= 0:
            raise ValueError("tolerance must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class SCFReport:
    """Outcome of one self-consistent solve.

    ``density`` is the map output at ``v_ks`` (a self-consistent pair once
    converged); ``residuals`` is max_i |n_new - n| per iteration;
    ``oscillating`` notes a detected period-2 cycle; ``number_drift`` is the
    largest deviation of the particle-number sum seen at any iteration.
    """

    converged: bool
    iterations: int
    residuals: np.ndarray
    v_ks: np.ndarray
    density: DensityProfile
    spectrum: SingleParticleSpectrum
    hxc_clamp_events: int
    oscillating: bool
    number_drift: float


def scf_solve_potential(v_ext: np.ndarray, interaction: float, hopping: float,
                        n_up: int, n_down: int, beta: float,
                        config: SCFConfig | None = None,
                        n_init: np.ndarray | None = None,
                        periodic: bool = False) -> SCFReport:
    """SCF loop over an explicit external potential vector.

    Starts from the non-interacting densities unless ``n_init`` is given
    (used to warm-start finite-difference evaluations). Non-convergence is
    reported, not raised.
    """
    if n_up != n_down:
        raise ValueError("spin-polarized sectors are not supported by the KS path")
    cfg = config or SCFConfig()
    v_ext = np.asarray(v_ext, dtype=np.float64)
    n_target = n_up + n_down

    def density_of(v_ks: np.ndarray) -> tuple[np.ndarray, SingleParticleSpectrum]:
        spectrum = ks_single_particle(v_ks, hopping, periodic)
        return ks_density(spectrum, n_up, n_down, beta).n, spectrum

    if n_init is None:
        n, spectrum = density_of(v_ext)
        v_ks = v_ext
    else:
        n = np.asarray(n_init, dtype=np.float64).copy()
        spectrum = None
        v_ks = v_ext

    residuals = []
    clamp_events = 0
    oscillating = False
    drift = 0.0
    converged = False
    lambda_min = 0.0
    prev_in = None
    prev_out = None
    before_prev_out = None
    for _ in range(cfg.max_iter):
        clamp_events += clamped_sites(n, cfg.clamp_eps)
        v_ks = v_ext + hxc_single_site(n, interaction, beta, cfg.clamp_eps)
        n_new, spectrum = density_of(v_ks)
        residual = float(np.abs(n_new - n).max())
        residuals.append(residual)
        drift = max(drift, abs(float(n_new.sum()) - n_target))
        if residual <= cfg.tol:
            converged = True
            n = n_new
            break
        if prev_in is not None:
            move = n - prev_in
            norm2 = float(move @ move)
            if norm2 > 0.0:
                lambda_min = min(lambda_min,
                                 float((n_new - prev_out) @ move) / norm2)
        if before_prev_out is not None and \
                float(np.abs(n_new - before_prev_out).max()) <= 0.05 * residual:
            oscillating = True
        alpha = min(cfg.alpha, max(0.9 / (1.0 - lambda_min), cfg.alpha_min))
        before_prev_out = prev_out
        prev_in = n
        prev_out = n_new
        n = (1.0 - alpha) * n + alpha * n_new
    else:
        n = n_new

    return SCFReport(
        converged=converged,
        iterations=len(residuals),
        residuals=np.array(residuals),
        v_ks=v_ks,
        density=DensityProfile(np.asarray(n)),
        spectrum=spectrum,
        hxc_clamp_events=clamp_events,
        oscillating=oscillating,
        number_drift=drift,
    )


def scf_solve(spec: ChainSpec, beta: float,
              config: SCFConfig | None = None) -> SCFReport:
    """Self-consistent Kohn-Sham densities for a chain spec."""
    return scf_solve_potential(spec.potential(), spec.interaction, spec.hopping,
                               spec.n_up, spec.n_down, beta, config,
                               periodic=spec.periodic)


def scf_density_function(spec: ChainSpec, beta: float,
                         config: SCFConfig | None = None,
                         warm_start: np.ndarray | None = None):
    """Map external potential -> converged SCF density (for response FDs).

    Raises :class:`ScfNotConvergedError` when an evaluation fails, since a
    derivative of an unconverged density is meaningless.
    """

    def density(v_ext: np.ndarray) -> np.ndarray:
        report = scf_solve_potential(v_ext, spec.interaction, spec.hopping,
                                     spec.n_up, spec.n_down, beta, config,
                                     n_init=warm_start, periodic=spec.periodic)
        if not report.converged:
            raise ScfNotConvergedError(
                "SCF did not converge while evaluating the density response"
            )
        return report.density.n

    return density


def density_metric(profile_a, profile_b, n_particles: int) -> float:
    """Normalized L1 distance D = (1/2N) sum_i |n_i - n_i'| in [0, 1]."""
    a = profile_a.n if isinstance(profile_a, DensityProfile) else np.asarray(profile_a)
    b = profile_b.n if isinstance(profile_b, DensityProfile) else np.asarray(profile_b)
    if a.size != b.size:
        raise ValueError("density profiles have different lengths")
    return float(np.abs(a - b).sum() / (2.0 * n_particles))


def theta2_ks_from_reports(scf0: SCFReport, scf_final_vks: np.ndarray,
                           quench: QuenchSpec, fd_step: float = 1e-4) -> float:
    """Non-commuting second-moment part evaluated inside the KS world.

    The quench seen by the KS system runs between the two converged KS
    potentials. Its exact second moment is computed on the Fock sector of
    the non-interacting KS Hamiltonian, and the commuting functional part is
    subtracted using the KS system's own densities and directional response.
    """
    spec0 = quench.spec0
    d_vks = np.asarray(scf_final_vks) - scf0.v_ks
    basis = build_fock_basis(spec0.n_sites, spec0.n_up, spec0.n_down)
    ham = hamiltonian_from_potential(scf0.v_ks, 0.0, spec0.hopping, basis,
                                     spec0.periodic)
    eq = gibbs(diagonalize(ham), quench.beta)
    w2_ks = second_moment_diagonal(eq, basis, d_vks)

    def ks_world_density(v_ks: np.ndarray) -> np.ndarray:
        spectrum = ks_single_particle(v_ks, spec0.hopping, spec0.periodic)
        return ks_density(spectrum, spec0.n_up, spec0.n_down, quench.beta).n

    n_ks = ks_world_density(scf0.v_ks)
    directional = response_along(ks_world_density, scf0.v_ks, d_vks, fd_step)
    mean = float(d_vks @ n_ks)
    w2_commuting_ks = mean ** 2 - float(d_vks @ directional) / quench.beta
    return w2_ks - w2_commuting_ks


def theta2_ks(spec: ChainSpec, quench: QuenchSpec, beta: float,
              config: SCFConfig | None = None, fd_step: float = 1e-4,
              frozen_hxc: bool = False) -> float:
    """KS approximation of the non-commuting second-moment contribution.

    Needs converged SCF solutions at both amplitudes (fresh solve at the
    final amplitude by default; ``frozen_hxc`` reuses the initial H-XC
    potential instead) and an exactly tractable Fock sector.
    """
    if spec != quench.spec0:
        raise ValueError("spec does not match the quench's initial chain")
    if beta != quench.beta:
        raise ValueError("beta does not match the quench")
    cfg = config or SCFConfig()
    scf0 = scf_solve(spec, beta, cfg)
    if not scf0.converged:
        raise ScfNotConvergedError("initial SCF did not converge")
    if frozen_hxc:
        v_ks_final = (quench.spec_final.potential()
                      + hxc_single_site(scf0.density.n, spec.interaction, beta,
                                        cfg.clamp_eps))
    else:
        scf_final = scf_solve(quench.spec_final, beta, cfg)
        if not scf_final.converged:
            raise ScfNotConvergedError("post-quench SCF did not converge")
        v_ks_final = scf_final.v_ks
    return theta2_ks_from_reports(scf0, v_ks_final, quench, fd_step)
