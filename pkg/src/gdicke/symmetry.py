"""Conserved weighted-excitation operators, parity sectors, and their discovery.

A conserved operator is an integer-weighted sum of photon numbers and level
populations that commutes with the rotating-wave Hamiltonian; the full
Hamiltonian preserves its parity.  The weights solve, for every structural
coupling, ``eta[mode] + lambda[j] - lambda[k] = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import gcd

import numpy as np

from .errors import ModelError
from .model import ValidatedModel

EVEN, ODD = 0, 1


@dataclass(frozen=True)
class SymmetryOperator:
    """Integer coefficients of one conserved operator: photon weights ``eta``
    (one per mode) and population weights ``lam`` (one per level)."""

    eta: tuple[int, ...]
    lam: tuple[int, ...]

    def as_vector(self) -> np.ndarray:
        return np.array(self.eta + self.lam, dtype=np.int64)

    def __str__(self):
        return f"eta={self.eta} lambda={self.lam}"


@dataclass(frozen=True)
class SymmetrySet:
    """Independent conserved operators (total particle number excluded)."""

    ops: tuple[SymmetryOperator, ...]
    rank: int

    def __len__(self):
        return len(self.ops)

    @property
    def eta_matrix(self) -> np.ndarray:
        return np.array([op.eta for op in self.ops], dtype=np.int64).reshape(len(self.ops), -1)

    @property
    def lam_matrix(self) -> np.ndarray:
        return np.array([op.lam for op in self.ops], dtype=np.int64).reshape(len(self.ops), -1)


@dataclass(frozen=True)
class ParitySector:
    """One simultaneous parity assignment with its minimal eigenvalue vector.

    ``kappa_min`` is None when no state realizes this parity combination.
    """

    sigma: tuple[int, ...]
    kappa_min: tuple[int, ...] | None

    @property
    def label(self) -> str:
        return "".join("eo"[p] for p in self.sigma)


def sector_from_label(label: str) -> tuple[int, ...]:
    if not label or any(ch not in "eo" for ch in label):
        raise ValueError(f"sector label must be a string of 'e'/'o', got {label!r}")
    return tuple(ODD if ch == "o" else EVEN for ch in label)


# ---------------------------------------------------------------------------
# exact linear algebra over the rationals / integers
# ---------------------------------------------------------------------------

def _rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form; returns (matrix, pivot column list)."""
    m = [row[:] for row in rows]
    pivots: list[int] = []
    r = 0
    ncols = len(m[0]) if m else 0
    for c in range(ncols):
        pr = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        inv = m[r][c]
        m[r] = [v / inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def _nullspace(rows: list[list[Fraction]], ncols: int) -> list[list[Fraction]]:
    if not rows:
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    m, pivots = _rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for ri, pc in enumerate(pivots):
            v[pc] = -m[ri][fc]
        basis.append(v)
    return basis


def _primitive(vec: list[Fraction]) -> list[int]:
    den = 1
    for v in vec:
        den = den * v.denominator // gcd(den, v.denominator)
    ints = [int(v * den) for v in vec]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    return [v // g for v in ints] if g > 1 else ints


def _hnf(rows: list[list[int]]) -> list[list[int]]:
    """Row Hermite normal form (positive pivots, reduced above), zero rows dropped."""
    m = [row[:] for row in rows if any(row)]
    if not m:
        return []
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        if r >= len(m):
            break
        # Euclidean elimination in column c below row r
        while True:
            nz = [i for i in range(r, len(m)) if m[i][c] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(m[i][c]))
            m[r], m[piv] = m[piv], m[r]
            done = True
            for i in range(r + 1, len(m)):
                if m[i][c] != 0:
                    q = m[i][c] // m[r][c]
                    m[i] = [a - q * b for a, b in zip(m[i], m[r])]
                    if m[i][c] != 0:
                        done = False
            if done:
                break
        if m[r][c] != 0:
            if m[r][c] < 0:
                m[r] = [-v for v in m[r]]
            for i in range(r):
                q = m[i][c] // m[r][c]
                if q:
                    m[i] = [a - q * b for a, b in zip(m[i], m[r])]
            r += 1
    return [row for row in m if any(row)]


# ---------------------------------------------------------------------------
# operator discovery and canonicalization
# ---------------------------------------------------------------------------

def _canonical_rep(eta: list[int], lam: list[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Shift populations so min(lambda)=0; flip sign so first nonzero > 0."""
    shift = min(lam)
    lam = [v - shift for v in lam]
    vec = eta + lam
    first = next((v for v in vec if v != 0), 0)
    if first < 0:
        eta = [-v for v in eta]
        lam = [-v for v in lam]
        shift = min(lam)
        lam = [v - shift for v in lam]
    return tuple(eta), tuple(lam)


def _repair_nonnegative(vectors: list[list[int]], ell: int) -> list[list[int]]:
    """Try small unimodular combinations to clear negative entries.

    Population weights are defined modulo a constant shift, so only the
    shifted representative (min lambda = 0) needs to be nonnegative.
    """
    def shifted(v):
        lam = v[ell:]
        s = min(lam)
        return v[:ell] + [x - s for x in lam]

    out = [v[:] for v in vectors]
    for idx in range(len(out)):
        if all(x >= 0 for x in shifted(out[idx])):
            continue
        candidates = [out[idx]]
        seen = {tuple(out[idx])}
        fixed = None
        for _ in range(4):
            nxt = []
            for cand in candidates:
                for jdx in range(len(out)):
                    if jdx == idx:
                        continue
                    for sign in (1, -1):
                        trial = [a + sign * b for a, b in zip(cand, out[jdx])]
                        t = tuple(trial)
                        if t in seen:
                            continue
                        seen.add(t)
                        if all(x >= 0 for x in shifted(trial)):
                            fixed = trial
                            break
                        nxt.append(trial)
                    if fixed:
                        break
                if fixed:
                    break
            if fixed:
                break
            candidates = nxt
        if fixed:
            out[idx] = fixed
    return out


def find_constants(model: ValidatedModel) -> SymmetrySet:
    """Discover the conserved operators of the coupling pattern.

    Solves the weight constraints exactly over the rationals, removes the
    total-particle-number direction, and returns a canonical integer basis
    (Hermite-reduced, population weights shifted to min 0, entries
    nonnegative for every tree-like coupling pattern).
    """
    ell, n = model.ell, model.n
    ncols = ell + n
    rows = []
    for c in model.couplings:
        row = [Fraction(0)] * ncols
        row[c.mode - 1] = Fraction(1)
        row[ell + c.j - 1] += Fraction(1)
        row[ell + c.k - 1] -= Fraction(1)
        rows.append(row)
    rank = len(_rref(rows)[1]) if rows else 0
    null = _nullspace(rows, ncols)

    # gauge out the particle-number direction: lambda -> lambda - lambda_1
    gauged = []
    for vec in null:
        lam1 = vec[ell]
        v = vec[:ell] + [x - lam1 for x in vec[ell:]]
        if any(x != 0 for x in v):
            gauged.append(_primitive(v))
    reduced = _hnf([v[:ell] + v[ell + 1:] for v in gauged])   # drop lambda_1 column (zero)
    restored = [v[:ell] + [0] + v[ell:] for v in reduced]
    restored = _repair_nonnegative(restored, ell)

    ops = []
    for v in restored:
        eta, lam = _canonical_rep(v[:ell], v[ell:])
        ops.append(SymmetryOperator(eta=eta, lam=lam))
    expected = ell + n - rank - 1
    if len(ops) != expected:
        raise ModelError(
            f"operator count {len(ops)} disagrees with rank formula {expected}")
    return SymmetrySet(ops=tuple(ops), rank=rank)


def _check_ops(model: ValidatedModel, ops: tuple[SymmetryOperator, ...]) -> None:
    for op in ops:
        for c in model.couplings:
            if op.eta[c.mode - 1] + op.lam[c.j - 1] - op.lam[c.k - 1] != 0:
                raise ModelError(f"operator {op} violates coupling ({c.j},{c.k})")


def conventional_constants(model: ValidatedModel) -> SymmetrySet:
    """The customary operator choice for the standard level schemes.

    For the three-level cascade / lambda / vee patterns the first operator is
    the total-excitation combination and the second counts the upper
    transition; for a single two-level pair it is the excitation number.
    Cutoff vectors in the regression tables are expressed in this basis.
    Falls back to the generic discovery for any other pattern.
    """
    pairs = {(c.j, c.k): c.mode for c in model.couplings}
    ops = None
    if model.n == 2 and len(pairs) == 1:
        ((j, k), s), = pairs.items()
        eta = tuple(1 if m == s else 0 for m in range(1, model.ell + 1))
        lam = tuple(1 if lv == k else 0 for lv in range(1, model.n + 1))
        ops = (SymmetryOperator(eta, lam),)
    elif model.n == 3 and model.ell == 2 and len(pairs) == 2:
        def eta_for(*modes):
            return tuple(1 if m in modes else 0 for m in (1, 2))
        if set(pairs) == {(1, 2), (2, 3)}:
            sa, sb = pairs[(1, 2)], pairs[(2, 3)]
            ops = (SymmetryOperator(eta_for(sa, sb), (0, 1, 2)),
                   SymmetryOperator(eta_for(sb), (0, 0, 1)))
        elif set(pairs) == {(1, 3), (2, 3)}:
            sa, sb = pairs[(1, 3)], pairs[(2, 3)]
            ops = (SymmetryOperator(eta_for(sa, sb), (0, 0, 1)),
                   SymmetryOperator(eta_for(sb), (1, 0, 1)))
        elif set(pairs) == {(1, 2), (1, 3)}:
            sa, sb = pairs[(1, 2)], pairs[(1, 3)]
            ops = (SymmetryOperator(eta_for(sa, sb), (0, 1, 1)),
                   SymmetryOperator(eta_for(sb), (0, 0, 1)))
    if ops is None:
        return find_constants(model)
    _check_ops(model, ops)
    return SymmetrySet(ops=ops, rank=model.ell + model.n - len(ops) - 1)


def eval_K(ops: SymmetrySet, states: np.ndarray, ell: int) -> np.ndarray:
    """Eigenvalues of every conserved operator on occupation-vector rows.

    ``states`` has one row per state: ``ell`` photon numbers then the level
    occupations.  Returns an ``(len(states), len(ops))`` integer array.
    """
    states = np.atleast_2d(np.asarray(states, dtype=np.int64))
    return states[:, :ell] @ ops.eta_matrix.T + states[:, ell:] @ ops.lam_matrix.T


def in_integer_span(ops: SymmetrySet, op: SymmetryOperator, model: ValidatedModel,
                    include_casimir: bool = True) -> bool:
    """Whether ``op`` is an integer combination of the set (plus, optionally,
    the total-particle-number operator, which is physically trivial)."""
    basis = [list(o.eta) + list(o.lam) for o in ops.ops]
    if include_casimir:
        basis.append([0] * model.ell + [1] * model.n)
    target = list(op.eta) + list(op.lam)
    # exact solve of basis^T c = target
    aug = [[Fraction(basis[j][i]) for j in range(len(basis))] + [Fraction(target[i])]
           for i in range(len(target))]
    m, pivots = _rref(aug)
    ncols = len(basis)
    for row in m:
        if all(v == 0 for v in row[:ncols]) and row[ncols] != 0:
            return False
    coeffs = [Fraction(0)] * ncols
    for ri, pc in enumerate(pivots):
        if pc == ncols:
            return False
        coeffs[pc] = m[ri][ncols]
    return all(c.denominator == 1 for c in coeffs)


def sectors(ops: SymmetrySet, model: ValidatedModel) -> list[ParitySector]:
    """All parity assignments with their minimal realizable eigenvalues.

    The minima are found by scanning states with a small total photon number
    (structural constraints can make some parities unreachable or push their
    minima above 0/1).
    """
    from .basis import enumerate_matter   # deferred: avoids a module cycle

    zeta = len(ops.ops)
    bound = 2 * zeta + model.n_atoms
    matter = enumerate_matter(model.n_atoms, model.n)
    photon_cols: list[np.ndarray] = []
    ranges = [range(0, bound + 1)] * model.ell
    photons = [p for p in product(*ranges) if sum(p) <= bound]
    states = np.array([list(p) + list(a) for p in photons for a in matter], dtype=np.int64)
    K = eval_K(ops, states, model.ell)
    par = K % 2
    out = []
    for sigma in product((EVEN, ODD), repeat=zeta):
        mask = np.all(par == np.array(sigma), axis=1)
        if not mask.any():
            out.append(ParitySector(sigma=sigma, kappa_min=None))
        else:
            kmin = tuple(int(v) for v in K[mask].min(axis=0))
            out.append(ParitySector(sigma=sigma, kappa_min=kmin))
    return out


def parity_locked(ops: SymmetrySet, model: ValidatedModel, mode: int,
                  upper_level: int) -> tuple[bool, tuple[int, ...] | None, int]:
    """Whether the excitation count ``photons(mode) + population(upper_level)``
    has a parity fixed inside each sector.

    Returns ``(locked, alpha, beta)`` where, if locked, the excitation parity
    in sector sigma equals ``sum(alpha * sigma) + beta * n_atoms (mod 2)``.
    """
    ell, n = model.ell, model.n
    rows = [list(o.eta) + list(o.lam) for o in ops.ops]
    rows.append([0] * ell + [1] * n)   # global particle-number parity
    target = [0] * (ell + n)
    target[mode - 1] = 1
    target[ell + upper_level - 1] = 1
    # GF(2) solve rows^T alpha = target
    A = [[rows[j][i] & 1 for j in range(len(rows))] + [target[i] & 1]
         for i in range(ell + n)]
    ncols = len(rows)
    r = 0
    wherep = []
    for c in range(ncols):
        pr = next((i for i in range(r, len(A)) if A[i][c]), None)
        if pr is None:
            continue
        A[r], A[pr] = A[pr], A[r]
        for i in range(len(A)):
            if i != r and A[i][c]:
                A[i] = [(a ^ b) for a, b in zip(A[i], A[r])]
        wherep.append(c)
        r += 1
    for row in A[r:]:
        if row[ncols]:
            return False, None, 0
    alpha = [0] * ncols
    for ri, pc in enumerate(wherep):
        alpha[pc] = A[ri][ncols]
    return True, tuple(alpha[:-1]), alpha[-1]
