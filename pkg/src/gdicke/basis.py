"""Occupation-number bases: enumeration, truncation, and order reduction.

States are rows ``(nu_1 .. nu_ell, a_1 .. a_n)`` of photon numbers and level
occupations with a fixed particle total.  Bases keep their states in a
deterministic order (photons ascending lexicographically, then occupations
with the lowest level filled first) and support O(log n) membership lookup
through packed integer keys.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Iterable

import numpy as np

from .errors import (
    BasisMismatchError,
    ModelError,
    OrderOutOfRangeError,
    UnboundedBasisError,
)
from .model import ValidatedModel
from .symmetry import EVEN, SymmetrySet, eval_K

RESTRICT_EXCITATION = "excitation"   # per-coupling photons+upper-population cutoff
RESTRICT_PHOTON = "photon"           # plain per-mode photon-number cutoff


@dataclass(frozen=True)
class BasisState:
    """One product state: photon numbers per mode and occupation per level."""

    nu: tuple[int, ...]
    occ: tuple[int, ...]

    def vector(self) -> np.ndarray:
        return np.array(self.nu + self.occ, dtype=np.int64)


@dataclass(frozen=True)
class BasisMeta:
    kind: str                                   # "rwa" | "truncated" | "reduced" | "matter" | "adhoc"
    model: ValidatedModel
    sigma: tuple[int, ...] | None = None
    kappa: tuple[int, ...] | None = None
    caps: tuple[int, ...] | None = None
    restriction: str | None = None
    o1: int | None = None
    o2: int | None = None
    nu0: int | None = None


class StateCodec:
    """Packs occupation vectors into sortable int64 keys.

    Key order equals the canonical state order, and keys are comparable
    across all bases of the same model, which is what cross-basis overlap
    computations rely on.
    """

    def __init__(self, ell: int, n: int, n_atoms: int, photon_bits: int = 21):
        matter_bits = max(int(n_atoms).bit_length(), 1)
        total = ell * photon_bits + (n - 1) * matter_bits
        if total > 62:
            photon_bits = (62 - (n - 1) * matter_bits) // ell
            if photon_bits < 8:
                raise ModelError("state space too wide for 64-bit keys")
        self.ell, self.n, self.n_atoms = ell, n, n_atoms
        self.photon_bits, self.matter_bits = photon_bits, matter_bits
        self.photon_cap = (1 << photon_bits) - 1

    def pack(self, states: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=np.int64)
        if states[:, :self.ell].max(initial=0) > self.photon_cap:
            raise ModelError("photon number exceeds key capacity")
        key = np.zeros(len(states), dtype=np.int64)
        for s in range(self.ell):
            key = (key << self.photon_bits) | states[:, s]
        for k in range(self.n - 1):
            key = (key << self.matter_bits) | (self.n_atoms - states[:, self.ell + k])
        return key


_codecs: dict[tuple[int, int, int], StateCodec] = {}


def codec_for(model: ValidatedModel) -> StateCodec:
    sig = (model.ell, model.n, model.n_atoms)
    if sig not in _codecs:
        _codecs[sig] = StateCodec(*sig)
    return _codecs[sig]


class Basis:
    """Ordered, indexed set of basis states with its defining metadata."""

    def __init__(self, model: ValidatedModel, states: np.ndarray, meta: BasisMeta):
        states = np.asarray(states, dtype=np.int64).reshape(-1, model.ell + model.n)
        codec = codec_for(model)
        keys = codec.pack(states) if len(states) else np.empty(0, dtype=np.int64)
        order = np.argsort(keys, kind="stable")
        keys = keys[order]
        states = states[order]
        if len(keys) > 1 and (np.diff(keys) == 0).any():
            raise ModelError("duplicate states in basis")
        states.flags.writeable = False
        keys.flags.writeable = False
        self.model = model
        self.states = states
        self.keys = keys
        self.meta = meta

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def dim(self) -> int:
        return len(self.keys)

    def state(self, i: int) -> BasisState:
        row = self.states[i]
        ell = self.model.ell
        return BasisState(nu=tuple(int(v) for v in row[:ell]),
                          occ=tuple(int(v) for v in row[ell:]))

    def index_of(self, states: np.ndarray) -> np.ndarray:
        """Positions of the given state rows; -1 where absent."""
        states = np.atleast_2d(np.asarray(states, dtype=np.int64))
        q = codec_for(self.model).pack(states)
        pos = np.searchsorted(self.keys, q)
        pos[pos >= len(self.keys)] = len(self.keys) - 1 if len(self.keys) else 0
        ok = len(self.keys) > 0
        found = (self.keys[pos] == q) if ok else np.zeros(len(q), dtype=bool)
        return np.where(found, pos, -1)

    def k_values(self, ops: SymmetrySet) -> np.ndarray:
        return eval_K(ops, self.states, self.model.ell)


# ---------------------------------------------------------------------------
# matter sector
# ---------------------------------------------------------------------------

def enumerate_matter(n_atoms: int, n: int) -> np.ndarray:
    """All distributions of ``n_atoms`` particles over ``n`` levels.

    Ordered with the lowest levels filled first, i.e. descending
    lexicographically in the occupation tuple; count is C(n_atoms+n-1, n-1).
    """
    if n_atoms < 1 or n < 2:
        raise ModelError("need n_atoms >= 1 and n >= 2")
    rows: list[list[int]] = []

    def rec(prefix: list[int], remaining: int, slots: int):
        if slots == 1:
            rows.append(prefix + [remaining])
            return
        for a in range(remaining, -1, -1):
            rec(prefix + [a], remaining - a, slots - 1)

    rec([], n_atoms, n)
    return np.array(rows, dtype=np.int64)


def max_matter_order(model: ValidatedModel) -> int:
    """Highest matter-reduction order: floor(n_atoms / subsystem count)."""
    return model.n_atoms // model.subsystem_count


def _matter_rank(model: ValidatedModel, matter: np.ndarray) -> np.ndarray:
    """Reduction order of each occupation row.

    A row has order r when the best-filled subsystem is short exactly r
    particles; rows beyond the maximal order collapse onto it so that the
    orders partition the matter space.
    """
    groups = model.mode_level_sets()
    if not groups:
        return np.zeros(len(matter), dtype=np.int64)
    short = np.full(len(matter), model.n_atoms, dtype=np.int64)
    for _, levels in groups:
        pop = matter[:, [lv - 1 for lv in sorted(levels)]].sum(axis=1)
        short = np.minimum(short, model.n_atoms - pop)
    return np.minimum(short, max_matter_order(model))


def matter_subset(model: ValidatedModel, r: int) -> np.ndarray:
    """Occupation rows whose reduction order is exactly ``r``."""
    O1 = max_matter_order(model)
    if not 0 <= r <= O1:
        raise OrderOutOfRangeError(f"matter order {r} outside 0..{O1}")
    matter = enumerate_matter(model.n_atoms, model.n)
    return matter[_matter_rank(model, matter) == r]


def matter_order(model: ValidatedModel, o1: int) -> np.ndarray:
    """Union of the matter subsets up to order ``o1`` (clamped at the max)."""
    if o1 < 0:
        raise OrderOutOfRangeError("matter order must be >= 0")
    o1 = min(o1, max_matter_order(model))
    matter = enumerate_matter(model.n_atoms, model.n)
    return matter[_matter_rank(model, matter) <= o1]


# ---------------------------------------------------------------------------
# field sector
# ---------------------------------------------------------------------------

def max_field_order(nu0: int) -> int:
    return nu0 // 2


def field_order(o2: int, nu0: int, ell: int) -> np.ndarray:
    """Photon tuples where at most one mode is macroscopic.

    Union over modes of boxes in which mode ``s`` ranges up to ``nu0`` while
    every other mode is held at or below ``2*o2 + 1`` photons.
    """
    if not 0 <= o2 <= max_field_order(nu0):
        raise OrderOutOfRangeError(f"field order {o2} outside 0..{max_field_order(nu0)}")
    lim = min(2 * o2 + 1, nu0)
    if ell == 1:
        return np.arange(nu0 + 1, dtype=np.int64).reshape(-1, 1)
    boxes = []
    for s in range(ell):
        ranges = [np.arange((nu0 if t == s else lim) + 1, dtype=np.int64)
                  for t in range(ell)]
        grid = np.meshgrid(*ranges, indexing="ij")
        boxes.append(np.stack([g.ravel() for g in grid], axis=1))
    allp = np.vstack(boxes)
    key = np.zeros(len(allp), dtype=np.int64)
    for s in range(ell):
        key = key * (nu0 + 1) + allp[:, s]
    _, idx = np.unique(key, return_index=True)
    return allp[np.sort(idx)]


# ---------------------------------------------------------------------------
# K-sector and truncated bases
# ---------------------------------------------------------------------------

def _coupling_columns(model: ValidatedModel):
    """(mode column, upper-level column) per coupling, in state-row indexing."""
    return [(c.mode - 1, model.ell + c.k - 1) for c in model.couplings]


def _mode_photon_bounds(model: ValidatedModel, ops: SymmetrySet,
                        kappa: Iterable[int] | None,
                        caps: Iterable[int] | None) -> list[int]:
    """Finite upper bound on each mode's photon number, from the excitation caps
    (photons never exceed the subsystem excitation) and/or the K cutoffs."""
    bounds: list[int | None] = [None] * model.ell
    if caps is not None:
        for c, cap in zip(model.couplings, caps):
            s = c.mode - 1
            bounds[s] = cap if bounds[s] is None else min(bounds[s], cap)
    if kappa is not None:
        eta = ops.eta_matrix
        for s in range(model.ell):
            for z, kz in enumerate(kappa):
                if eta[z, s] > 0:
                    b = int(kz) // int(eta[z, s])
                    bounds[s] = b if bounds[s] is None else min(bounds[s], b)
    out = []
    for s, b in enumerate(bounds):
        if b is None:
            if any(c.mode - 1 == s for c in model.couplings):
                raise UnboundedBasisError(f"no finite photon bound for mode {s + 1}")
            b = 0   # a mode driving nothing stays in the vacuum
        out.append(max(int(b), 0))
    return out


def _combine(photons: np.ndarray, matter: np.ndarray) -> np.ndarray:
    P, M = len(photons), len(matter)
    ph = np.repeat(photons, M, axis=0)
    mt = np.tile(matter, (P, 1))
    return np.hstack([ph, mt])


def _photon_grid(bounds: list[int]) -> np.ndarray:
    ranges = [np.arange(b + 1, dtype=np.int64) for b in bounds]
    grid = np.meshgrid(*ranges, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def _filter_states(model: ValidatedModel, ops: SymmetrySet, states: np.ndarray,
                   sigma, kappa, caps, restriction) -> np.ndarray:
    mask = np.ones(len(states), dtype=bool)
    if kappa is not None or sigma is not None:
        K = eval_K(ops, states, model.ell)
        if kappa is not None:
            mask &= np.all(K <= np.asarray(kappa, dtype=np.int64), axis=1)
        if sigma is not None:
            mask &= np.all(K % 2 == np.asarray(sigma, dtype=np.int64), axis=1)
    if caps is not None:
        cols = _coupling_columns(model)
        for (scol, kcol), cap in zip(cols, caps):
            if restriction == RESTRICT_EXCITATION:
                mask &= states[:, scol] + states[:, kcol] <= cap
            elif restriction == RESTRICT_PHOTON:
                mask &= states[:, scol] <= cap
            else:
                raise ModelError(f"unknown restriction {restriction!r}")
    return states[mask]


def enumerate_rwa_sector(model: ValidatedModel, ops: SymmetrySet,
                         kappa: tuple[int, ...]) -> Basis:
    """All states with the conserved operators exactly at ``kappa``."""
    kappa = tuple(int(k) for k in kappa)
    bounds = _mode_photon_bounds(model, ops, kappa, None)
    cand = _combine(_photon_grid(bounds), enumerate_matter(model.n_atoms, model.n))
    K = eval_K(ops, cand, model.ell)
    states = cand[np.all(K == np.asarray(kappa, dtype=np.int64), axis=1)]
    meta = BasisMeta(kind="rwa", model=model, kappa=kappa)
    return Basis(model, states, meta)


def build_truncated(model: ValidatedModel, ops: SymmetrySet, sigma: tuple[int, ...],
                    kappa: tuple[int, ...], caps: tuple[int, ...] | None = None,
                    restriction: str = RESTRICT_EXCITATION) -> Basis:
    """Parity-resolved basis with eigenvalue cutoffs.

    Keeps the states whose conserved eigenvalues have parity ``sigma`` and lie
    at or below ``kappa`` componentwise, and (when ``caps`` is given) whose
    per-coupling excitation count -- or photon number, under the photon
    restriction -- stays within the cap.  ``kappa`` is an upper bound only;
    its own parity is irrelevant.
    """
    kappa = tuple(int(k) for k in kappa)
    sigma = tuple(int(p) for p in sigma)
    if len(sigma) != len(ops.ops) or len(kappa) != len(ops.ops):
        raise ModelError("sigma/kappa length must match operator count")
    if caps is not None and len(caps) != len(model.couplings):
        raise ModelError("one cap per coupling required")
    bounds = _mode_photon_bounds(model, ops, kappa, caps)
    cand = _combine(_photon_grid(bounds), enumerate_matter(model.n_atoms, model.n))
    states = _filter_states(model, ops, cand, sigma, kappa, caps, restriction)
    meta = BasisMeta(kind="truncated", model=model, sigma=sigma, kappa=kappa,
                     caps=None if caps is None else tuple(caps),
                     restriction=restriction, nu0=max(kappa))
    return Basis(model, states, meta)


def build_reduced(model: ValidatedModel, ops: SymmetrySet, sigma: tuple[int, ...],
                  kappa: tuple[int, ...], caps: tuple[int, ...] | None,
                  o1: int, o2: int,
                  restriction: str = RESTRICT_EXCITATION) -> Basis:
    """Order-reduced basis: few-mode field states times few-defect matter states.

    The candidate set is the field reduction of order ``o2`` (one macroscopic
    mode at a time) combined with the matter reduction of order ``o1``,
    filtered exactly like the truncated basis.  At maximal orders this equals
    the truncated basis.
    """
    if o1 < 0 or o2 < 0:
        raise OrderOutOfRangeError("reduction orders must be >= 0")
    kappa = tuple(int(k) for k in kappa)
    nu0 = max(kappa)
    o1c = min(o1, max_matter_order(model))
    o2c = min(o2, max_field_order(nu0))
    photons = field_order(o2c, nu0, model.ell)
    matter = matter_order(model, o1c)
    cand = _combine(photons, matter)
    states = _filter_states(model, ops, cand, tuple(sigma), kappa, caps, restriction)
    meta = BasisMeta(kind="reduced", model=model, sigma=tuple(sigma), kappa=kappa,
                     caps=None if caps is None else tuple(caps),
                     restriction=restriction, o1=o1c, o2=o2c, nu0=nu0)
    return Basis(model, states, meta)


# ---------------------------------------------------------------------------
# closed-form sector dimensions (three-level schemes, two modes)
# ---------------------------------------------------------------------------

def _tri(x: int) -> int:
    """x-th triangular number; zero for nonpositive x."""
    return x * (x + 1) // 2 if x > 0 else 0


def _rect(x: int, y: int) -> int:
    return (x + 1) * (y + 1) - _tri(x)


def dim_lambda(n_atoms: int, k1: int, k2: int) -> int:
    """Sector dimension for the lambda scheme; 0 outside 0 <= k2 <= k1 + n_atoms."""
    if k1 < 0 or not 0 <= k2 <= k1 + n_atoms:
        return 0
    if n_atoms < k2 and k1 <= k2:
        return _tri(n_atoms + k1 - k2 + 1)
    if k2 <= n_atoms and k1 <= k2:
        return _tri(k1 + 1)
    if k2 <= n_atoms and k2 < k1:
        return _tri(k2 + 1)
    return _tri(n_atoms + 1)


def dim_xi(n_atoms: int, k1: int, k2: int) -> int:
    """Sector dimension for the cascade scheme; 0 outside 0 <= k2 <= k1."""
    if k1 < 0 or not 0 <= k2 <= k1:
        return 0
    if k1 - k2 <= n_atoms and k1 <= 2 * k2:
        return _tri(k1 - k2 + 1)
    if k1 - k2 <= n_atoms and 2 * k2 < k1:
        return _tri(k1 + 1) - _tri(k1 - k2) - 2 * _tri(k2)
    if n_atoms < k1 - k2 and k2 < n_atoms:
        return _tri(n_atoms + 1) - _tri(n_atoms - k2)
    return _tri(n_atoms + 1)


def dim_v(n_atoms: int, k1: int, k2: int) -> int:
    """Sector dimension for the vee scheme; 0 outside 0 <= k2 <= k1."""
    if k1 < 0 or not 0 <= k2 <= k1:
        return 0
    N = n_atoms
    if k1 <= N:
        return (k2 + 1) * (k1 - k2 + 1)
    if (2 * N <= k1 and k2 <= N) or (N < k1 < 2 * N and N < k1 - k2):
        return _rect(k2, N)
    if (N < k1 < 2 * N and N < k2) or (2 * N <= k1 and k1 - k2 <= N):
        return _rect(k1 - k2, N)
    if N < k1 < 2 * N and k2 <= N and k1 - k2 <= N:
        return (k1 - k2) * k2 + _rect(N, k1) - _tri(k1)
    return _tri(N + 1)


def estimate_dimension(caps, n_atoms: int, n: int, sector_count: int) -> float:
    """Counting estimate for a truncated sector dimension."""
    prod = 1.0
    for m in caps:
        prod *= m + 1
    return prod * comb(n_atoms + n - 1, n - 1) / sector_count
