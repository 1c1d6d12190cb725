"""Sparse Hamiltonian assembly on an occupation basis.

The operator is real symmetric: a diagonal of mode and level energies plus
one-photon/one-transition moves with square-root ladder amplitudes.  The
rotating-wave variant keeps only the excitation-preserving moves.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from ._kernels import assemble_offdiagonal, make_csr_matvec
from .basis import Basis, codec_for
from .errors import BasisMismatchError, ModelError
from .model import ValidatedModel, subsystems

KIND_DICKE = "dicke"
KIND_TC = "tc"


@dataclass(frozen=True)
class SparseHamiltonian:
    """Symmetric sparse operator in coordinate form, sorted by (row, col)."""

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    basis: Basis
    kind: str

    @property
    def nnz(self) -> int:
        return len(self.vals)

    def to_csr(self):
        from scipy.sparse import csr_matrix

        return csr_matrix((self.vals, (self.rows, self.cols)), shape=(self.dim, self.dim))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        out[self.rows, self.cols] = self.vals
        return out

    def matvec_builder(self, use_numba: bool | None = None):
        csr = self.to_csr()
        return make_csr_matvec(csr.indptr, csr.indices, csr.data, use_numba)

    def dump_coo(self, fh) -> None:
        """Write 'row col value' triplets for external verification."""
        for r, c, v in zip(self.rows, self.cols, self.vals):
            fh.write(f"{int(r)} {int(c)} {v:.17g}\n")


def diagonal_energy(states: np.ndarray, model: ValidatedModel) -> np.ndarray:
    """Mode energy plus level energy of each occupation row."""
    states = np.atleast_2d(np.asarray(states, dtype=np.int64))
    return states[:, :model.ell] @ model.Omega_arr + states[:, model.ell:] @ model.omega_arr


def _move_table(model: ValidatedModel, kind: str):
    """Aligned move arrays (src level col, dst level col, mode col, dnu, prefactor).

    Moves come in conjugate pairs so the generated entry set is symmetric.
    The counter-rotating pair is dropped in the rotating-wave variant.
    """
    if kind not in (KIND_DICKE, KIND_TC):
        raise ModelError(f"unknown Hamiltonian kind {kind!r}")
    src, dst, mode, dnu, pref = [], [], [], [], []
    root = sqrt(model.n_atoms)
    for sub in subsystems(model):
        jc, kc = model.ell + sub.j - 1, model.ell + sub.k - 1
        mc = sub.mode - 1
        p = -sub.mu / root
        steps = [(kc, jc, +1), (jc, kc, -1)]            # rotating pair
        if kind == KIND_DICKE:
            steps += [(kc, jc, -1), (jc, kc, +1)]       # counter-rotating pair
        for s, d, dn in steps:
            src.append(s)
            dst.append(d)
            mode.append(mc)
            dnu.append(dn)
            pref.append(p)
    return (np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64),
            np.array(mode, dtype=np.int64), np.array(dnu, dtype=np.int64),
            np.array(pref))


def transition_amplitude(u, v, model: ValidatedModel, kind: str = KIND_DICKE) -> float:
    """Matrix element <u|H_int|v> between two distinct occupation states.

    Nonzero only when the states differ by one photon in a single mode and
    one particle hop across that mode's coupled pair.
    """
    uv = np.asarray(u, dtype=np.int64).ravel()
    vv = np.asarray(v, dtype=np.int64).ravel()
    if uv.shape != vv.shape or len(uv) != model.ell + model.n:
        raise ModelError("state shape does not match the model")
    if np.array_equal(uv, vv):
        raise ModelError("transition amplitude requires distinct states")
    moves = _move_table(model, kind)
    for src, dst, mc, dnu, pref in zip(*moves):
        if vv[src] == 0 or (dnu < 0 and vv[mc] == 0):
            continue
        img = vv.copy()
        img[src] -= 1
        img[dst] += 1
        img[mc] += dnu
        if np.array_equal(img, uv):
            phot = vv[mc] + 1.0 if dnu > 0 else float(vv[mc])
            return pref * sqrt((vv[dst] + 1.0) * vv[src] * phot)
    return 0.0


def assemble(basis: Basis, model: ValidatedModel | None = None,
             kind: str = KIND_DICKE, use_numba: bool | None = None) -> SparseHamiltonian:
    """Assemble the sparse Hamiltonian restricted to ``basis``.

    Every interaction image of every basis state is generated; images outside
    the basis are dropped (the cutoff-certification loop is what justifies
    the truncation, so no warning is emitted per dropped element).  Output
    entry order is deterministic for a given basis.
    """
    if model is None:
        model = basis.model
    elif model is not basis.model and model != basis.model:
        raise BasisMismatchError("basis was built for a different model")
    dim = len(basis)
    diag = diagonal_energy(basis.states, model) if dim else np.empty(0)
    rows, cols, vals = assemble_offdiagonal(
        basis.states, basis.keys, codec_for(model), _move_table(model, kind),
        use_numba=use_numba)
    rows = np.concatenate([np.arange(dim, dtype=np.int64), rows])
    cols = np.concatenate([np.arange(dim, dtype=np.int64), cols])
    vals = np.concatenate([diag, vals])
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if len(rows) > 1:
        same = (np.diff(rows) == 0) & (np.diff(cols) == 0)
        if same.any():
            raise ModelError("duplicate matrix entries generated")
    keep = (vals != 0.0) | (rows == cols)
    return SparseHamiltonian(dim=dim, rows=rows[keep], cols=cols[keep],
                             vals=vals[keep], basis=basis, kind=kind)
