"""Shared test helpers, including an independent dense-operator oracle."""
from __future__ import annotations

import numpy as np

from gdicke.basis import Basis, enumerate_matter
from gdicke.model import ValidatedModel, subsystems


def dense_oracle(basis: Basis, model: ValidatedModel, kind: str = "dicke") -> np.ndarray:
    """Dense Hamiltonian on ``basis`` built through operator algebra.

    Constructs photon ladder matrices and collective transition matrices on a
    covering product space via Kronecker products, forms the Hamiltonian, and
    projects onto the basis.  Entirely independent of the per-state move
    generation used by the production assembler.
    """
    ell, n = model.ell, model.n
    cuts = [int(basis.states[:, s].max()) + 1 if len(basis) else 1 for s in range(ell)]
    matter = enumerate_matter(model.n_atoms, model.n)
    midx = {tuple(row): i for i, row in enumerate(matter.tolist())}
    M = len(matter)

    def lower(dim):
        a = np.zeros((dim, dim))
        for nu in range(1, dim):
            a[nu - 1, nu] = np.sqrt(nu)
        return a

    def atom_op(j, k):
        """Collective transition matrix element <m2| b_j^dag b_k |m1>."""
        op = np.zeros((M, M))
        for i, row in enumerate(matter.tolist()):
            if row[k - 1] == 0:
                continue
            dst = list(row)
            dst[k - 1] -= 1
            dst[j - 1] += 1
            op[midx[tuple(dst)], i] = np.sqrt((row[j - 1] + 1) * row[k - 1])
        return op

    def kron_chain(mats):
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return out

    eyes = [np.eye(c) for c in cuts] + [np.eye(M)]

    def embed(slot, mat):
        mats = list(eyes)
        mats[slot] = mat
        return kron_chain(mats)

    H = np.zeros((int(np.prod(cuts)) * M,) * 2)
    for s in range(ell):
        a = lower(cuts[s])
        H += model.Omega[s] * embed(s, a.T @ a)
    for k in range(n):
        diag = np.diag(matter[:, k].astype(float))
        H += model.omega[k] * embed(ell, diag)
    for sub in subsystems(model):
        a = lower(cuts[sub.mode - 1])
        Ajk = atom_op(sub.j, sub.k)
        pref = -sub.mu / np.sqrt(model.n_atoms)
        if kind == "dicke":
            H += pref * embed(ell, Ajk + Ajk.T) @ embed(sub.mode - 1, a + a.T)
        else:
            H += pref * (embed(ell, Ajk) @ embed(sub.mode - 1, a.T)
                         + embed(ell, Ajk.T) @ embed(sub.mode - 1, a))

    # map basis states to product-space indices and project
    strides = []
    acc = M
    for c in reversed(cuts):
        strides.append(acc)
        acc *= c
    strides = list(reversed(strides))
    idx = np.zeros(len(basis), dtype=np.int64)
    for s in range(ell):
        idx += basis.states[:, s] * strides[s]
    for r, row in enumerate(basis.states[:, ell:].tolist()):
        idx[r] += midx[tuple(row)]
    return H[np.ix_(idx, idx)]
