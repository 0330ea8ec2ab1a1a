"""Canonical-ensemble statistics of N non-interacting fermions.

The N-particle partition function is evaluated with the alternating-sign
recursion

    Z_N = (1/N) * sum_{m=1..N} (-1)^(m-1) Z_1(m beta) Z_{N-m}(beta),

with Z_0 = 1 and Z_1(m beta) = sum_k exp(-m beta eps_k). (The m = 0 term of
the recursion, together with the convention Z_1(0) = 1, would make the
relation implicit; the explicit m = 1..N form is the one validated against
brute-force Slater enumeration.) All exponentials use energies shifted so
that min(eps) = 0; ``log_z`` restores the shift.

The recursion is ill-conditioned when beta times the spectral width grows:
the alternating terms cancel almost exactly. Each table records a running
cancellation estimate, and whenever it exceeds the accuracy target the
partition sequence and occupations are recomputed by the cancellation-free
level-by-level reduction (elementary symmetric polynomials in the Boltzmann
factors, accumulated with logaddexp: all-positive sums, stable at any size
and temperature). Direct Slater enumeration stays available as an explicit
method for oracle-style cross checks on small sectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

STRICT_EST = 1e-13
MAX_ENUMERATION = 200_000


class CanonicalPrecisionError(RuntimeError):
    """Explicitly requested recursion produced unusable values."""


@dataclass(frozen=True)
class SingleParticleSpectrum:
    """Ascending single-particle eigenvalues with orthonormal orbital amplitudes.

    ``amps[:, k]`` is the orbital belonging to ``eps[k]``.
    """

    eps: np.ndarray
    amps: np.ndarray

    @property
    def n_levels(self) -> int:
        return self.eps.size


@dataclass
class CanonicalTable:
    """Z_m for m = 0..N (energies shifted by ``shift``) plus occupations.

    ``log_z`` is the true log partition function of the unshifted spectrum;
    ``method`` records which path produced the table (``recursion``,
    ``reduction``, or ``enumeration``); ``cond_estimate`` is the estimated
    relative error of the alternating recursion at this point.
    """

    beta: float
    n_particles: int
    z: np.ndarray
    log_z: float
    shift: float
    method: str
    cond_estimate: float
    occ: np.ndarray | None = field(default=None)


def _level_energies(spectrum) -> np.ndarray:
    if isinstance(spectrum, SingleParticleSpectrum):
        return np.asarray(spectrum.eps, dtype=np.float64)
    return np.asarray(spectrum, dtype=np.float64)


def z1(spectrum, m: int, beta: float, shift: float = 0.0) -> float:
    """Single-particle sum Z_1(m beta) = sum_k exp(-m beta (eps_k - shift)).

    ``z1(spectrum, 0, beta)`` returns 1 by convention (the value the
    recursion's literature form assigns to Z_1(0), not the level count).
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    if m == 0:
        return 1.0
    eps = _level_energies(spectrum)
    return float(np.exp(-m * beta * (eps - shift)).sum())


def _enumerate_sector(eps_shifted: np.ndarray, n_particles: int, beta: float
                      ) -> tuple[float, np.ndarray, float]:
    """(Z_shifted, occupations, log Z_shifted) by summing all Slater configs."""
    n_levels = eps_shifted.size
    if n_particles == 0:
        return 1.0, np.zeros(n_levels), 0.0
    idx = np.fromiter(
        (k for cfg in combinations(range(n_levels), n_particles) for k in cfg),
        dtype=np.int64,
        count=comb(n_levels, n_particles) * n_particles,
    ).reshape(-1, n_particles)
    energies = eps_shifted[idx].sum(axis=1)
    a = -beta * energies
    a_max = a.max()
    rel = np.exp(a - a_max)
    norm = rel.sum()
    log_z_shifted = float(a_max + np.log(norm))
    weights = rel / norm
    occ = np.zeros(n_levels)
    np.add.at(occ, idx.ravel(), np.repeat(weights, n_particles))
    return float(np.exp(log_z_shifted)), occ, log_z_shifted


def _log_level_reduction(log_weights: np.ndarray, n_particles: int) -> np.ndarray:
    """log Z_m for m = 0..N by absorbing one level at a time.

    Z_m(levels 1..k) = Z_m(1..k-1) + x_k Z_(m-1)(1..k-1): every term is
    positive, so unlike the alternating recursion this is well conditioned
    for arbitrary beta and spectral width.
    """
    log_z = np.full(n_particles + 1, -np.inf)
    log_z[0] = 0.0
    for log_x in log_weights:
        if n_particles:
            log_z[1:] = np.logaddexp(log_z[1:], log_x + log_z[:-1])
    return log_z


def _reduction_occupations(log_weights: np.ndarray, n_particles: int,
                           log_z_n: float) -> np.ndarray:
    """<n_k> = x_k Z_(N-1)(levels without k) / Z_N, all-positive sums.

    The removal reductions for every k run simultaneously: one matrix of
    partial log Z values per retained level count, updated level by level,
    skipping row k when level k is absorbed.
    """
    n_levels = log_weights.size
    if n_particles == 0:
        return np.zeros(n_levels)
    if n_particles == n_levels:
        return np.ones(n_levels)
    # row k, column m: log Z_m over the levels absorbed so far, excluding k
    log_z = np.full((n_levels, n_particles), -np.inf)
    log_z[:, 0] = 0.0
    for i, log_x in enumerate(log_weights):
        updated = np.logaddexp(log_z[:, 1:], log_x + log_z[:, :-1])
        keep = log_z[i, 1:].copy()
        log_z[:, 1:] = updated
        log_z[i, 1:] = keep
    return np.exp(log_weights + log_z[:, n_particles - 1] - log_z_n)


def _recursion(xs: np.ndarray, n_particles: int) -> tuple[np.ndarray, float]:
    """Shifted Z_m for m = 0..N plus the worst cancellation ratio."""
    single = np.empty(n_particles + 1)
    single[0] = 1.0  # literature convention for Z_1(0); unused by the sum below
    powers = np.ones_like(xs)
    for m in range(1, n_particles + 1):
        powers = powers * xs
        single[m] = powers.sum()
    z = np.empty(n_particles + 1)
    z[0] = 1.0
    worst = 1.0
    for n in range(1, n_particles + 1):
        m = np.arange(1, n + 1)
        terms = np.where(m % 2 == 1, 1.0, -1.0) * single[1:n + 1] * z[:n][::-1]
        total = terms.sum()
        z[n] = total / n
        if z[n] > 0:
            worst = max(worst, np.abs(terms).sum() / (n * z[n]))
        else:
            worst = np.inf
    return z, worst


def canonical_partition(spectrum, n_particles: int, beta: float,
                        method: str = "auto") -> CanonicalTable:
    """Canonical partition table of ``n_particles`` fermions on the spectrum.

    ``method``: ``auto`` (alternating recursion, switching to the stable
    level reduction when its cancellation estimate exceeds 1e-13),
    ``recursion`` (never switch; raises once cancellation produces
    non-positive values), ``reduction`` (level reduction outright), or
    ``enumeration`` (brute-force Slater sum over at most 2e5 configurations,
    intended for oracle-style cross checks).
    """
    eps = _level_energies(spectrum)
    n_levels = eps.size
    if not 0 <= n_particles <= n_levels:
        raise ValueError(
            f"{n_particles} fermions do not fit {n_levels} levels (Pauli exclusion)"
        )
    if method not in ("auto", "recursion", "reduction", "enumeration"):
        raise ValueError(f"unknown method {method!r}")
    shift = float(eps.min()) if n_levels else 0.0
    eps_shifted = eps - shift

    if method == "enumeration":
        if comb(n_levels, n_particles) > MAX_ENUMERATION:
            raise ValueError(
                f"sector has {comb(n_levels, n_particles)} configurations; "
                "enumeration is capped at 200000, use method='auto'"
            )
        z = np.empty(n_particles + 1)
        occ = None
        log_z_shifted = 0.0
        for m in range(n_particles + 1):
            z[m], occ_m, log_zm = _enumerate_sector(eps_shifted, m, beta)
            if m == n_particles:
                occ = occ_m
                log_z_shifted = log_zm
        table = CanonicalTable(beta, n_particles, z,
                               log_z_shifted - beta * n_particles * shift,
                               shift, "enumeration", 0.0)
        table.occ = occ
        return table

    def _from_reduction() -> CanonicalTable:
        log_z_seq = _log_level_reduction(-beta * eps_shifted, n_particles)
        return CanonicalTable(beta, n_particles, np.exp(log_z_seq),
                              float(log_z_seq[n_particles]
                                    - beta * n_particles * shift),
                              shift, "reduction", 0.0)

    if method == "reduction":
        return _from_reduction()

    xs = np.exp(-beta * eps_shifted)
    z, worst = _recursion(xs, n_particles)
    est = worst * np.finfo(float).eps * max(1, n_particles)
    if method == "auto" and (est > STRICT_EST or not np.all(z > 0)):
        return _from_reduction()
    if not np.all(z > 0):
        raise CanonicalPrecisionError(
            "partition recursion produced non-positive values"
        )
    log_z = float(np.log(z[n_particles]) - beta * n_particles * shift)
    return CanonicalTable(beta, n_particles, z, log_z, shift, "recursion", est)


def canonical_occupations(table: CanonicalTable, spectrum, n_particles: int,
                          beta: float) -> np.ndarray:
    """Level occupations <n_k>, equal to -(1/beta) d log Z_N / d eps_k.

    Recursion-built tables use the upward recursion
    <n_k>_n = x_k (Z_{n-1}/Z_n) (1 - <n_k>_{n-1}), guarded by a particle
    number check that falls back to the stable removal reduction; tables
    already built by reduction or enumeration reuse their own scheme. The
    result is also stored on ``table.occ``.
    """
    eps = _level_energies(spectrum)
    if table.n_particles != n_particles or table.z.size != n_particles + 1:
        raise ValueError("table does not match the requested particle number")
    if table.beta != beta:
        raise ValueError("table was built at a different beta")
    log_weights = -beta * (eps - table.shift)
    if table.method == "enumeration":
        if table.occ is None:
            _, table.occ, _ = _enumerate_sector(eps - table.shift,
                                                n_particles, beta)
        return table.occ
    if table.method == "reduction":
        log_z_n = table.log_z + beta * n_particles * table.shift
        table.occ = _reduction_occupations(log_weights, n_particles, log_z_n)
        return table.occ

    occ = np.zeros_like(log_weights)
    xs = np.exp(log_weights)
    for n in range(1, n_particles + 1):
        occ = xs * (table.z[n - 1] / table.z[n]) * (1.0 - occ)
    # the upward recursion inherits the table's conditioning; fall back to
    # the stable reduction when particle number or bounds drift
    bad = (abs(occ.sum() - n_particles) > 1e-10
           or occ.min() < -1e-10 or occ.max() > 1 + 1e-10)
    if bad:
        log_z_n = table.log_z + beta * n_particles * table.shift
        occ = _reduction_occupations(log_weights, n_particles, log_z_n)
    table.occ = occ
    return occ


def canonical_free_energy(table_up: CanonicalTable, table_dn: CanonicalTable) -> float:
    """F = -(1/beta) (log Z_up + log Z_dn) for the two spin species."""
    if table_up.beta != table_dn.beta:
        raise ValueError("spin tables were built at different betas")
    return -(table_up.log_z + table_dn.log_z) / table_up.beta


def dump_z_table(table: CanonicalTable, stream) -> None:
    """Debug CSV of the (shifted) Z_m sequence: columns ``m,Z``."""
    stream.write(f"# beta={table.beta:.17g} shift={table.shift:.17g} "
                 f"method={table.method}\n")
    stream.write("m,Z\n")
    for m, value in enumerate(table.z):
        stream.write(f"{m},{value:.17g}\n")
