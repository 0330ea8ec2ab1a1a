"""Finite-temperature quench thermodynamics of inhomogeneous Hubbard chains.

Exact diagonalization of small chains (spectra, Gibbs states, thermal
densities, work and entropy-production statistics of sudden quenches) next
to a scalable canonical-ensemble Kohn-Sham solver whose single-site H-XC
functional reproduces the interacting densities, plus a preset-driven CLI
that emits deterministic CSV grids.
"""

from ._version import __version__
from .backends import active_backend
from .canonical import (CanonicalTable, SingleParticleSpectrum, canonical_free_energy,
                        canonical_occupations, canonical_partition, z1)
from .config import (ConfigError, ExperimentConfig, build_config, parse_config,
                     parse_grid)
from .exact import (DensityProfile, SpectralData, ThermalEquilibrium, diagonalize,
                    density_response, exact_response_along, free_energy_difference,
                    gibbs, thermal_density, thermal_state)
from .ksscf import (SCFConfig, SCFReport, ScfNotConvergedError, density_metric,
                    hxc_single_site, ks_density, ks_single_particle, scf_solve,
                    single_site_density, theta2_ks)
from .lattice import (ChainSpec, FockBasis, PotentialShape, SectorTooLargeError,
                      build_fock_basis, build_hamiltonian, build_potential,
                      dump_matrix)
from .presets import (PRESET_DEFAULTS, compare_methods, preset_config, run_exact_sweep,
                      run_ks_sweep, run_preset)
from .quench import (EntropyDistribution, MomentsReport, QuenchSpec, WorkDistribution,
                     avg_work_functional, characteristic_function, entropy_distribution,
                     fdr_residual, sirr_functional, theta2_exact, w2_commuting,
                     work_distribution)
from .sweeps import compare_point, exact_quench_point, ks_quench_point

__all__ = [
    "__version__",
    "active_backend",
    "CanonicalTable", "SingleParticleSpectrum", "canonical_free_energy",
    "canonical_occupations", "canonical_partition", "z1",
    "ConfigError", "ExperimentConfig", "build_config", "parse_config",
    "parse_grid",
    "DensityProfile", "SpectralData", "ThermalEquilibrium", "diagonalize",
    "density_response", "exact_response_along", "free_energy_difference",
    "gibbs", "thermal_density", "thermal_state",
    "SCFConfig", "SCFReport", "ScfNotConvergedError", "density_metric",
    "hxc_single_site", "ks_density", "ks_single_particle", "scf_solve",
    "single_site_density", "theta2_ks",
    "ChainSpec", "FockBasis", "PotentialShape", "SectorTooLargeError",
    "build_fock_basis", "build_hamiltonian", "build_potential", "dump_matrix",
    "PRESET_DEFAULTS", "compare_methods", "preset_config", "run_exact_sweep",
    "run_ks_sweep", "run_preset",
    "EntropyDistribution", "MomentsReport", "QuenchSpec", "WorkDistribution",
    "avg_work_functional", "characteristic_function", "entropy_distribution",
    "fdr_residual", "sirr_functional", "theta2_exact", "w2_commuting",
    "work_distribution",
    "compare_point", "exact_quench_point", "ks_quench_point",
]
