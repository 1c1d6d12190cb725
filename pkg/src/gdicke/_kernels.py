"""Hot numeric kernels with a numba fast path and a pure-numpy/scipy fallback.

The fallback is selected automatically when numba is unavailable, or
explicitly by setting ``GDICKE_DISABLE_NUMBA=1`` in the environment.  Both
paths implement the same contracts; ``benchmarks/bench_kernels.py`` compares
their throughput.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:   # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("GDICKE_DISABLE_NUMBA", "0") != "1"


def _active(use_numba: bool | None) -> bool:
    if use_numba is None:
        return USE_NUMBA
    return bool(use_numba) and HAVE_NUMBA


# ---------------------------------------------------------------------------
# CSR matrix-vector product
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @numba.njit(cache=True, parallel=True)
    def _csr_matvec_nb(indptr, indices, data, x, out):   # pragma: no cover - jitted
        for i in numba.prange(len(indptr) - 1):
            acc = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                acc += data[p] * x[indices[p]]
            out[i] = acc


def make_csr_matvec(indptr, indices, data, use_numba: bool | None = None):
    """Build a y = A @ x closure for a CSR matrix given by its three arrays."""
    dim = len(indptr) - 1
    if _active(use_numba):
        indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        indices = np.ascontiguousarray(indices, dtype=np.int64)
        data = np.ascontiguousarray(data)

        def matvec(x, out=None):
            if out is None:
                out = np.empty(dim)
            _csr_matvec_nb(indptr, indices, data, x, out)
            return out
    else:
        from scipy.sparse import csr_matrix

        mat = csr_matrix((data, indices, indptr), shape=(dim, dim))

        def matvec(x, out=None):
            y = mat @ x
            if out is not None:
                out[:] = y
                return out
            return y
    return matvec


# ---------------------------------------------------------------------------
# off-diagonal assembly
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _pack_one(row, ell, n, n_atoms, pbits, mbits):   # pragma: no cover - jitted
        key = np.int64(0)
        for s in range(ell):
            key = (key << pbits) | row[s]
        for k in range(n - 1):
            key = (key << mbits) | (n_atoms - row[ell + k])
        return key

    @numba.njit(cache=True)
    def _assemble_nb(states, keys, ell, n, n_atoms, pbits, mbits,
                     src_cols, dst_cols, mode_cols, dnus, prefs,
                     rows, cols, vals):   # pragma: no cover - jitted
        dim = states.shape[0]
        nmoves = len(src_cols)
        count = 0
        scratch = np.empty(states.shape[1], dtype=np.int64)
        for i in range(dim):
            for m in range(nmoves):
                src, dst, mc, dnu = src_cols[m], dst_cols[m], mode_cols[m], dnus[m]
                occ_src = states[i, src]
                nu = states[i, mc]
                if occ_src == 0 or (dnu < 0 and nu == 0):
                    continue
                for c in range(states.shape[1]):
                    scratch[c] = states[i, c]
                scratch[src] -= 1
                scratch[dst] += 1
                scratch[mc] += dnu
                key = _pack_one(scratch, ell, n, n_atoms, pbits, mbits)
                lo, hi = 0, dim
                while lo < hi:
                    mid = (lo + hi) >> 1
                    if keys[mid] < key:
                        lo = mid + 1
                    else:
                        hi = mid
                if lo >= dim or keys[lo] != key:
                    continue
                phot = nu + 1.0 if dnu > 0 else float(nu)
                amp = prefs[m] * np.sqrt((states[i, dst] + 1.0) * occ_src * phot)
                rows[count] = lo
                cols[count] = i
                vals[count] = amp
                count += 1
        return count


def _assemble_np(states, keys, codec, moves):
    src_cols, dst_cols, mode_cols, dnus, prefs = moves
    rows_l, cols_l, vals_l = [], [], []
    dim = len(states)
    idx = np.arange(dim)
    for src, dst, mc, dnu, pref in zip(src_cols, dst_cols, mode_cols, dnus, prefs):
        if pref == 0.0:
            continue
        occ_src = states[:, src]
        nu = states[:, mc]
        valid = occ_src > 0
        if dnu < 0:
            valid &= nu > 0
        if not valid.any():
            continue
        img = states[valid].copy()
        img[:, src] -= 1
        img[:, dst] += 1
        img[:, mc] += dnu
        q = codec.pack(img)
        pos = np.searchsorted(keys, q)
        pos[pos >= dim] = dim - 1
        found = keys[pos] == q
        if not found.any():
            continue
        sel = idx[valid][found]
        phot = nu[sel] + 1.0 if dnu > 0 else nu[sel].astype(float)
        amp = pref * np.sqrt((states[sel, dst] + 1.0) * states[sel, src] * phot)
        rows_l.append(pos[found])
        cols_l.append(sel)
        vals_l.append(amp)
    if not rows_l:
        z = np.empty(0, dtype=np.int64)
        return z, z.copy(), np.empty(0)
    return (np.concatenate(rows_l), np.concatenate(cols_l), np.concatenate(vals_l))


def assemble_offdiagonal(states, keys, codec, moves, use_numba: bool | None = None):
    """All off-diagonal entries (row, col, value) generated by the move table.

    ``moves`` holds five aligned arrays: source level column, destination
    level column, mode column, photon step (+-1), and prefactor.  Images that
    fall outside the basis are dropped silently (truncation boundary).
    """
    if not _active(use_numba):
        return _assemble_np(states, keys, codec, moves)
    src_cols, dst_cols, mode_cols, dnus, prefs = moves
    live = prefs != 0.0
    nmoves = int(live.sum())
    cap = max(len(states) * nmoves, 1)
    rows = np.empty(cap, dtype=np.int64)
    cols = np.empty(cap, dtype=np.int64)
    vals = np.empty(cap)
    count = _assemble_nb(np.ascontiguousarray(states), keys, codec.ell, codec.n,
                         codec.n_atoms, codec.photon_bits, codec.matter_bits,
                         src_cols[live], dst_cols[live], mode_cols[live],
                         dnus[live], prefs[live], rows, cols, vals)
    return rows[:count].copy(), cols[:count].copy(), vals[:count].copy()
