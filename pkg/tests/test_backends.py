import os
import subprocess
import sys

import numpy as np
import pytest

from hubquench import active_backend, build_fock_basis
from hubquench.kernels import fill_hamiltonian, hop_table
from hubquench.lattice import hamiltonian_from_potential

numba = pytest.importorskip("numba")


def test_backends_produce_identical_matrices(rng):
    for n_sites, n_up, n_down, periodic in ((4, 2, 2, False), (5, 2, 3, False),
                                            (4, 2, 1, True)):
        basis = build_fock_basis(n_sites, n_up, n_down)
        potential = rng.normal(size=n_sites)
        via_numba = hamiltonian_from_potential(potential, 3.0, 1.0, basis,
                                               periodic, backend="numba")
        via_numpy = hamiltonian_from_potential(potential, 3.0, 1.0, basis,
                                               periodic, backend="numpy")
        assert np.array_equal(via_numba, via_numpy)


def test_unknown_backend_rejected():
    basis = build_fock_basis(2, 1, 1)
    with pytest.raises(ValueError):
        hamiltonian_from_potential(np.zeros(2), 0.0, 1.0, basis,
                                   backend="fortran")


def test_hop_sign_convention_on_ring():
    # wrap-around hop crosses the occupied sites between the bond endpoints:
    # sign is (-1)^(N-1) for a fully separated pair
    masks = build_fock_basis(3, 2, 0).up_masks  # [0b011, 0b101, 0b110]
    bonds = [(2, 0)]
    src, dst, sign = hop_table(masks, bonds)
    table = {(int(masks[s]), int(masks[d])): int(g)
             for s, d, g in zip(src, dst, sign)}
    # 0b101: site 2 -> site 0 impossible (0 occupied); site 0 -> site 2
    # impossible (2 occupied); 0b110 hops to 0b011 across empty site 0 region
    assert table[(0b110, 0b011)] == -1  # site 1 occupied between endpoints
    assert table[(0b011, 0b110)] == -1
    assert (0b101, 0b011) not in table


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, HUBQUENCH_BACKEND="numpy")
    out = subprocess.run(
        [sys.executable, "-c",
         "import hubquench; print(hubquench.active_backend())"],
        env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_env_flag_rejects_unknown_value():
    env = dict(os.environ, HUBQUENCH_BACKEND="cuda")
    out = subprocess.run(
        [sys.executable, "-c", "import hubquench"],
        env=env, capture_output=True, text=True)
    assert out.returncode != 0
    assert "HUBQUENCH_BACKEND" in out.stderr


def test_active_backend_reports_a_valid_choice():
    assert active_backend() in ("numba", "numpy")


def test_fill_hamiltonian_empty_hops():
    empty = (np.zeros(0, dtype=np.int64),) * 3
    ham = fill_hamiltonian(2, 1, 2, np.array([1.0, 2.0]), empty, empty, 1.0,
                           backend="numpy")
    assert np.array_equal(ham, np.diag([1.0, 2.0]))
