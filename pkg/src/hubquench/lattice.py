"""Potential shapes, fixed-number Fock bases, and Hubbard chain Hamiltonians.

Conventions, fixed once for the whole package:

* Sites are numbered 1..L in formulas and 0..L-1 in code; bit ``i`` of an
  occupation mask is site ``i`` (0-based).
* Fermionic modes are ordered all spin-up sites ascending, then all
  spin-down sites ascending. Basis states apply creation operators in that
  order to the vacuum. With this ordering a nearest-neighbor hop picks up
  the parity of the occupied sites strictly between the bond endpoints
  (always even for an open-chain bond, so open-chain hopping elements are
  exactly ``-J``).
* Configurations are ordered lexicographically on (up-mask, down-mask),
  both masks ascending as integers; the flat index is
  ``i_up * n_dn_states + i_dn``.

Exact dense builds are limited to sector dimension 10^4 (L <= 8 at half
filling); larger systems go through the Kohn-Sham path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import IO, Sequence

import numpy as np

from . import kernels

MAX_DENSE_DIM = 10_000

SHAPE_NAMES = ("linear", "harmonic", "uniform")


class SectorTooLargeError(ValueError):
    """Exact dense build requested for a sector above MAX_DENSE_DIM."""


@dataclass(frozen=True)
class PotentialShape:
    """Dimensionless per-site profile f_i of the external potential.

    ``linear``   : f_i = 1 - 2(i-1)/(L-1)      (1-based i; requires L >= 2)
    ``harmonic`` : f_i = (i - (L+1)/2)^2 / 2
    ``uniform``  : f_i = 1
    ``custom``   : explicit factors, length must equal L
    """

    kind: str
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in SHAPE_NAMES + ("custom",):
            raise ValueError(f"unknown potential shape {self.kind!r}")
        if (self.kind == "custom") != (self.values is not None):
            raise ValueError("custom shapes carry values, named shapes do not")

    @classmethod
    def linear(cls) -> "PotentialShape":
        return cls("linear")

    @classmethod
    def harmonic(cls) -> "PotentialShape":
        return cls("harmonic")

    @classmethod
    def uniform(cls) -> "PotentialShape":
        return cls("uniform")

    @classmethod
    def custom(cls, values: Sequence[float]) -> "PotentialShape":
        return cls("custom", tuple(float(v) for v in values))

    @classmethod
    def from_name(cls, name: str) -> "PotentialShape":
        name = name.strip().lower()
        if name not in SHAPE_NAMES:
            raise ValueError(f"shape must be one of {SHAPE_NAMES}, got {name!r}")
        return cls(name)

    def factors(self, n_sites: int) -> np.ndarray:
        if n_sites < 1:
            raise ValueError("n_sites must be >= 1")
        i = np.arange(n_sites, dtype=np.float64)
        if self.kind == "linear":
            if n_sites < 2:
                raise ValueError("linear shape requires at least 2 sites")
            return 1.0 - 2.0 * i / (n_sites - 1)
        if self.kind == "harmonic":
            return 0.5 * (i - (n_sites - 1) / 2.0) ** 2
        if self.kind == "uniform":
            return np.ones(n_sites)
        if len(self.values) != n_sites:
            raise ValueError(
                f"custom shape has {len(self.values)} factors, chain has {n_sites} sites"
            )
        return np.array(self.values, dtype=np.float64)


def build_potential(shape: PotentialShape, n_sites: int, v0: float) -> np.ndarray:
    """Per-site potential V_i = f_i * v0."""
    return shape.factors(n_sites) * float(v0)


@dataclass(frozen=True)
class ChainSpec:
    """Full parameterization of an open Hubbard chain in a fixed sector.

    Energies are measured in units of the hopping J (J > 0); ``v0`` is the
    amplitude multiplying the shape factors. ``periodic`` adds the wrap-around
    bond; it is supported by the exact builder but unused by the presets.
    """

    n_sites: int
    hopping: float
    interaction: float
    shape: PotentialShape
    v0: float
    n_up: int
    n_down: int
    periodic: bool = False

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be >= 1")
        if self.hopping <= 0:
            raise ValueError("hopping J must be > 0")
        if self.interaction < 0:
            raise ValueError("interaction U must be >= 0")
        for n in (self.n_up, self.n_down):
            if not 0 <= n <= self.n_sites:
                raise ValueError(
                    f"per-spin particle number {n} outside [0, {self.n_sites}]"
                )
        if self.periodic and self.n_sites < 3:
            raise ValueError("periodic chains need at least 3 sites")

    @classmethod
    def half_filled(cls, n_sites: int, interaction: float, shape: PotentialShape,
                    v0: float, hopping: float = 1.0, periodic: bool = False) -> "ChainSpec":
        if n_sites % 2:
            raise ValueError("half filling with zero total spin requires even L")
        n = n_sites // 2
        return cls(n_sites, hopping, interaction, shape, v0, n, n, periodic)

    def potential(self) -> np.ndarray:
        return build_potential(self.shape, self.n_sites, self.v0)

    def with_v0(self, v0: float) -> "ChainSpec":
        return ChainSpec(self.n_sites, self.hopping, self.interaction,
                         self.shape, v0, self.n_up, self.n_down, self.periodic)

    @property
    def n_particles(self) -> int:
        return self.n_up + self.n_down

    def sector(self) -> tuple[int, int, int]:
        return (self.n_sites, self.n_up, self.n_down)


def _sector_masks(n_sites: int, n_occ: int) -> np.ndarray:
    masks = np.fromiter(
        (sum(1 << p for p in bits) for bits in combinations(range(n_sites), n_occ)),
        dtype=np.int64,
        count=comb(n_sites, n_occ),
    )
    masks.sort()
    return masks


@dataclass(frozen=True)
class FockBasis:
    """Ordered configuration list of a fixed (L, N_up, N_down) sector."""

    n_sites: int
    n_up: int
    n_down: int
    up_masks: np.ndarray
    dn_masks: np.ndarray
    up_occ: np.ndarray = field(repr=False)
    dn_occ: np.ndarray = field(repr=False)

    @property
    def n_up_states(self) -> int:
        return self.up_masks.size

    @property
    def n_dn_states(self) -> int:
        return self.dn_masks.size

    @property
    def dim(self) -> int:
        return self.up_masks.size * self.dn_masks.size

    def double_occupancy(self) -> np.ndarray:
        """(n_up_states, n_dn_states) table of doubly occupied site counts."""
        return np.bitwise_count(self.up_masks[:, None] & self.dn_masks[None, :]
                                ).astype(np.float64)

    def site_occupations(self) -> np.ndarray:
        """(dim, L) total occupation of every site in every configuration."""
        occ = (self.up_occ[:, None, :] + self.dn_occ[None, :, :])
        return occ.reshape(self.dim, self.n_sites)


def build_fock_basis(n_sites: int, n_up: int, n_down: int) -> FockBasis:
    """Enumerate the fixed-number sector in the documented deterministic order."""
    for n in (n_up, n_down):
        if not 0 <= n <= n_sites:
            raise ValueError(f"sector count {n} outside [0, {n_sites}]")
    up = _sector_masks(n_sites, n_up)
    dn = _sector_masks(n_sites, n_down)
    return FockBasis(n_sites, n_up, n_down, up, dn,
                     kernels.occupation_table(up, n_sites),
                     kernels.occupation_table(dn, n_sites))


def _bonds(n_sites: int, periodic: bool) -> list[tuple[int, int]]:
    bonds = [(i, i + 1) for i in range(n_sites - 1)]
    if periodic:
        bonds.append((n_sites - 1, 0))
    return bonds


def hamiltonian_from_potential(potential: np.ndarray, interaction: float,
                               hopping: float, basis: FockBasis,
                               periodic: bool = False,
                               backend: str | None = None) -> np.ndarray:
    """Dense many-body matrix for explicit per-site potentials.

    Used directly by the finite-difference response, which perturbs single
    sites rather than the shape amplitude.
    """
    potential = np.asarray(potential, dtype=np.float64)
    if potential.shape != (basis.n_sites,):
        raise ValueError("potential length does not match the basis")
    if basis.dim > MAX_DENSE_DIM:
        raise SectorTooLargeError(
            f"sector dimension {basis.dim} exceeds the dense limit {MAX_DENSE_DIM}; "
            "use the Kohn-Sham path for chains this large"
        )
    bonds = _bonds(basis.n_sites, periodic)
    diag = (np.add.outer(basis.up_occ @ potential, basis.dn_occ @ potential)
            + interaction * basis.double_occupancy()).ravel()
    up_hops = kernels.hop_table(basis.up_masks, bonds)
    dn_hops = kernels.hop_table(basis.dn_masks, bonds)
    return kernels.fill_hamiltonian(basis.dim, basis.n_up_states, basis.n_dn_states,
                                    diag, up_hops, dn_hops, hopping, backend)


def build_hamiltonian(spec: ChainSpec, basis: FockBasis,
                      backend: str | None = None) -> np.ndarray:
    """Dense many-body Hubbard matrix of ``spec`` on ``basis``.

    Real symmetric; diagonal entries sum the per-site potential over the
    configuration plus U times the number of doubly occupied sites;
    off-diagonal entries connect configurations differing by one
    nearest-neighbor hop of one spin species.
    """
    if basis.n_sites != spec.n_sites or basis.n_up != spec.n_up \
            or basis.n_down != spec.n_down:
        raise ValueError("basis sector does not match the chain spec")
    return hamiltonian_from_potential(spec.potential(), spec.interaction,
                                      spec.hopping, basis, spec.periodic, backend)


def dump_matrix(ham: np.ndarray, basis: FockBasis, stream: IO[str]) -> None:
    """Write nonzero entries as ``row col value`` triplets (0-based, row-major).

    Header line: ``# dim=<d> L=<L> Nup=<n> Ndown=<m>``.
    """
    stream.write(f"# dim={basis.dim} L={basis.n_sites} "
                 f"Nup={basis.n_up} Ndown={basis.n_down}\n")
    rows, cols = np.nonzero(ham)
    for r, c in zip(rows, cols):
        stream.write(f"{r} {c} {ham[r, c]:.17g}\n")
