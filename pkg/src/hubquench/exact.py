"""Exact diagonalization and thermal equilibrium of Hubbard chain sectors.

This is the brute-force reference for every functional in the package:
spectra, Gibbs states, per-site thermal densities, free energies, and
density-response derivatives. All exponentials are evaluated with the
spectrum shifted by its minimum; log partition functions carry the shift
back, so inverse temperatures up to ~10/J are safe in float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import ChainSpec, FockBasis, build_fock_basis, hamiltonian_from_potential


class EigensolverError(RuntimeError):
    """Dense symmetric eigensolver failed to converge."""


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues (ascending) and orthonormal eigenvectors, column k <-> level k."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def residual(self, ham: np.ndarray) -> float:
        """max_k ||H v_k - e_k v_k|| / ||H||, for validation."""
        scale = np.linalg.norm(ham)
        if scale == 0.0:
            scale = 1.0
        r = ham @ self.eigenvectors - self.eigenvectors * self.eigenvalues
        return float(np.linalg.norm(r, axis=0).max() / scale)


@dataclass(frozen=True)
class DensityProfile:
    """Per-site thermal densities n_i in [0, 2], summing to N_up + N_down."""

    n: np.ndarray

    def __len__(self) -> int:
        return self.n.size

    @property
    def total(self) -> float:
        return float(self.n.sum())


@dataclass
class ThermalEquilibrium:
    """Gibbs state of a spectrum at inverse temperature beta.

    ``probs[k]`` is the occupation of eigenstate k, computed from
    max-shifted exponentials; ``log_z`` includes the shift back and
    ``free_energy = -log_z / beta``.
    """

    beta: float
    log_z: float
    probs: np.ndarray
    free_energy: float
    spectral: SpectralData
    densities: DensityProfile | None = None


def diagonalize(ham: np.ndarray) -> SpectralData:
    """Full spectrum of a real symmetric matrix, eigenvalues ascending."""
    ham = np.asarray(ham, dtype=np.float64)
    if ham.ndim != 2 or ham.shape[0] != ham.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.isfinite(ham).all():
        raise ValueError("matrix has non-finite entries")
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(ham)
    except np.linalg.LinAlgError as err:
        raise EigensolverError(f"eigh did not converge: {err}") from err
    return SpectralData(eigenvalues, eigenvectors)


def gibbs(spectral: SpectralData, beta: float,
          basis: FockBasis | None = None) -> ThermalEquilibrium:
    """Canonical Gibbs state over the given spectrum.

    Densities are filled when the Fock basis of the diagonalized sector is
    supplied.
    """
    if not np.isfinite(beta) or beta <= 0:
        raise ValueError("beta must be a positive finite number")
    eps = spectral.eigenvalues
    shifted = eps - eps[0]
    weights = np.exp(-beta * shifted)
    norm = weights.sum()
    log_z = float(np.log(norm) - beta * eps[0])
    eq = ThermalEquilibrium(
        beta=beta,
        log_z=log_z,
        probs=weights / norm,
        free_energy=-log_z / beta,
        spectral=spectral,
    )
    if basis is not None:
        eq.densities = thermal_density(eq, basis)
    return eq


def gibbs_diagonal(eq: ThermalEquilibrium) -> np.ndarray:
    """Diagonal of the Gibbs state in the configuration basis."""
    return (eq.spectral.eigenvectors ** 2) @ eq.probs


def thermal_density(eq: ThermalEquilibrium, basis: FockBasis) -> DensityProfile:
    """Thermal expectation of every site-number operator.

    n_i = sum_k p_k <k|n_i|k>, evaluated from eigenvector amplitudes and
    the occupation masks of the basis.
    """
    if eq.spectral.dim != basis.dim:
        raise ValueError("spectral data and basis dimensions differ")
    rho_diag = gibbs_diagonal(eq).reshape(basis.n_up_states, basis.n_dn_states)
    n = rho_diag.sum(axis=1) @ basis.up_occ + rho_diag.sum(axis=0) @ basis.dn_occ
    return DensityProfile(n)


def thermal_state(spec: ChainSpec, beta: float,
                  basis: FockBasis | None = None
                  ) -> tuple[FockBasis, SpectralData, ThermalEquilibrium]:
    """Convenience path: basis, spectrum, and Gibbs state (with densities)."""
    if basis is None:
        basis = build_fock_basis(spec.n_sites, spec.n_up, spec.n_down)
    ham = hamiltonian_from_potential(spec.potential(), spec.interaction,
                                     spec.hopping, basis, spec.periodic)
    spectral = diagonalize(ham)
    return basis, spectral, gibbs(spectral, beta, basis)


def _density_at(potential: np.ndarray, spec: ChainSpec, basis: FockBasis,
                beta: float) -> np.ndarray:
    ham = hamiltonian_from_potential(potential, spec.interaction, spec.hopping,
                                     basis, spec.periodic)
    return thermal_density(gibbs(diagonalize(ham), beta), basis).n


def density_response(spec: ChainSpec, beta: float, step: float = 1e-4) -> np.ndarray:
    """L x L matrix of dn_i/dV_j by central finite differences.

    Symmetric up to discretization error (mixed second derivatives of the
    free energy); rows sum to ~0 because a uniform shift leaves canonical
    densities unchanged.
    """
    if step <= 0:
        raise ValueError("finite-difference step must be > 0")
    basis = build_fock_basis(spec.n_sites, spec.n_up, spec.n_down)
    v0 = spec.potential()
    resp = np.empty((spec.n_sites, spec.n_sites))
    for j in range(spec.n_sites):
        v_plus = v0.copy()
        v_plus[j] += step
        v_minus = v0.copy()
        v_minus[j] -= step
        resp[:, j] = (_density_at(v_plus, spec, basis, beta)
                      - _density_at(v_minus, spec, basis, beta)) / (2 * step)
    return resp


def response_along(density_fn, potential: np.ndarray, direction: np.ndarray,
                   step: float = 1e-4) -> np.ndarray:
    """Directional derivative dn_i/dt for potentials V(t) = V + t * direction.

    The actual finite-difference displacement is scaled so that the largest
    per-site potential change equals ``step``; the exact and Kohn-Sham
    pipelines share this normalization so that truncation errors cancel in
    like-for-like comparisons.
    """
    if step <= 0:
        raise ValueError("finite-difference step must be > 0")
    direction = np.asarray(direction, dtype=np.float64)
    scale = np.abs(direction).max()
    if scale == 0.0:
        return np.zeros_like(direction)
    h = step / scale
    n_plus = density_fn(potential + h * direction)
    n_minus = density_fn(potential - h * direction)
    return (n_plus - n_minus) / (2 * h)


def exact_response_along(spec: ChainSpec, beta: float, direction: np.ndarray,
                         step: float = 1e-4,
                         basis: FockBasis | None = None) -> np.ndarray:
    """Directional density response of the interacting system."""
    if basis is None:
        basis = build_fock_basis(spec.n_sites, spec.n_up, spec.n_down)
    return response_along(lambda v: _density_at(v, spec, basis, beta),
                          spec.potential(), direction, step)


def free_energy_difference(spec0: ChainSpec, spec_final: ChainSpec,
                           beta: float) -> float:
    """F[spec_final] - F[spec0] at the same inverse temperature."""
    if spec0.sector() != spec_final.sector():
        raise ValueError("initial and final specs live in different sectors")
    _, _, eq0 = thermal_state(spec0, beta)
    _, _, eq_f = thermal_state(spec_final, beta)
    return eq_f.free_energy - eq0.free_energy
