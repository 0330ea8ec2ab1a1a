"""Fock-space assembly kernels.

The dense many-body Hamiltonian fill is the only non-LAPACK inner loop that
grows with the sector dimension, so it is provided both as a numba ``@njit``
kernel and as a vectorized numpy fallback (see :mod:`hubquench.backends`).
Both produce bit-identical matrices: every entry is written exactly once.
"""

from __future__ import annotations

import numpy as np

from .backends import BACKEND

_fill_numba = None


def _get_numba_fill():
    global _fill_numba
    if _fill_numba is None:
        from numba import njit

        # the zeroed target is allocated by the caller: calloc pages stay
        # untouched until written, which an in-JIT np.zeros would forfeit
        @njit(cache=True)
        def fill(ham, n_up_states, n_dn_states, diag,
                 usrc, udst, usgn, dsrc, ddst, dsgn, hop):
            for i in range(diag.size):
                ham[i, i] = diag[i]
            for s in range(usrc.size):
                row0 = usrc[s] * n_dn_states
                col0 = udst[s] * n_dn_states
                val = -hop * usgn[s]
                for k in range(n_dn_states):
                    ham[row0 + k, col0 + k] = val
            for a in range(n_up_states):
                base = a * n_dn_states
                for s in range(dsrc.size):
                    ham[base + dsrc[s], base + ddst[s]] = -hop * dsgn[s]

        _fill_numba = fill
    return _fill_numba


def occupation_table(masks: np.ndarray, n_sites: int) -> np.ndarray:
    """Per-site occupation numbers (0/1) for each configuration mask.

    Bit ``i`` of a mask is the occupation of site ``i`` (0-based).
    """
    return ((masks[:, None] >> np.arange(n_sites)) & 1).astype(np.float64)


def hop_table(masks: np.ndarray, bonds) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Directed single-particle hops within one spin species.

    For every configuration with site ``a`` occupied and site ``b`` empty
    (``(a, b)`` a bond, both directions), returns the source index, the index
    of the configuration after the hop, and the fermionic sign from the
    site-ordered mode convention: parity of the number of occupied sites
    strictly between the two bond endpoints.
    """
    srcs, dsts, signs = [], [], []
    for a, b in bonds:
        lo, hi = (a, b) if a < b else (b, a)
        between = ((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1)
        flip = (1 << a) | (1 << b)
        for occupied, empty in ((a, b), (b, a)):
            sel = (((masks >> occupied) & 1) == 1) & (((masks >> empty) & 1) == 0)
            src = np.nonzero(sel)[0]
            if src.size == 0:
                continue
            moved = masks[src] ^ flip
            dst = np.searchsorted(masks, moved)
            parity = np.bitwise_count(masks[src] & between).astype(np.int64) & 1
            srcs.append(src)
            dsts.append(dst)
            signs.append(1 - 2 * parity)
    if not srcs:
        empty_i = np.zeros(0, dtype=np.int64)
        return empty_i, empty_i.copy(), empty_i.copy()
    return (np.concatenate(srcs), np.concatenate(dsts), np.concatenate(signs))


def _fill_numpy(ham, n_up_states, n_dn_states, diag,
                usrc, udst, usgn, dsrc, ddst, dsgn, hop):
    idx = np.arange(diag.size)
    ham[idx, idx] = diag
    if usrc.size:
        k = np.arange(n_dn_states)
        rows = (usrc[:, None] * n_dn_states + k).ravel()
        cols = (udst[:, None] * n_dn_states + k).ravel()
        ham[rows, cols] = np.repeat(-hop * usgn.astype(np.float64), n_dn_states)
    if dsrc.size:
        a = np.arange(n_up_states)[:, None] * n_dn_states
        rows = (a + dsrc[None, :]).ravel()
        cols = (a + ddst[None, :]).ravel()
        ham[rows, cols] = np.tile(-hop * dsgn.astype(np.float64), n_up_states)


def fill_hamiltonian(dim, n_up_states, n_dn_states, diag,
                     up_hops, dn_hops, hop, backend: str | None = None) -> np.ndarray:
    """Scatter the diagonal and hop entries into a dense symmetric matrix.

    ``backend`` overrides the module-level choice (used by the backend
    equivalence tests and the benchmark).
    """
    usrc, udst, usgn = up_hops
    dsrc, ddst, dsgn = dn_hops
    which = BACKEND if backend is None else backend
    if which == "numba":
        fill = _get_numba_fill()
    elif which == "numpy":
        fill = _fill_numpy
    else:
        raise ValueError(f"unknown backend {which!r}")
    ham = np.zeros((dim, dim))
    fill(ham, n_up_states, n_dn_states,
         np.ascontiguousarray(diag, dtype=np.float64),
         usrc, udst, usgn, dsrc, ddst, dsgn, float(hop))
    return ham
