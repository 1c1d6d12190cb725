"""Ground states, the fidelity-certified cutoff iteration, and sector scans.

The eigensolver is a restarted symmetric Lanczos with full
reorthogonalization and a fixed all-ones start vector, so repeated runs give
identical coefficient vectors (up to the sign convention: the
largest-magnitude coefficient is made positive).  Small problems fall back
to a dense solve automatically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .basis import RESTRICT_EXCITATION, Basis, build_reduced, build_truncated, enumerate_matter
from .errors import ModelError, NoConvergenceError
from .hamiltonian import KIND_DICKE, KIND_TC, SparseHamiltonian, assemble
from .model import ValidatedModel, subsystems, two_level_model
from .symmetry import (
    EVEN,
    ODD,
    SymmetrySet,
    conventional_constants,
    parity_locked,
    sectors,
)

DENSE_CUTOFF = 512
DEGENERACY_GAP = 1e-10


@dataclass(frozen=True)
class GroundState:
    """Lowest eigenpair on a basis, with solver provenance."""

    energy: float
    coeffs: np.ndarray
    basis: Basis
    sigma: tuple[int, ...] | None = None
    gap: float | None = None
    degenerate: bool = False
    method: str = "dense"
    residual: float = 0.0


@dataclass(frozen=True)
class ConvergenceReport:
    """Outcome of the cutoff iteration for one parity sector."""

    sigma: tuple[int, ...]
    m_bar: tuple[int, ...]
    kappa: tuple[int, ...]
    iterations: int
    deficit: float
    err: float
    dim: int

    @property
    def label(self) -> str:
        return "".join("eo"[p] for p in self.sigma)


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(vec)))
    return -vec if vec[i] < 0 else vec


def _dense_ground(H: SparseHamiltonian) -> GroundState:
    dense = H.to_dense()
    w, v = sla.eigh(dense)
    vec = _fix_sign(v[:, 0])
    gap = float(w[1] - w[0]) if len(w) > 1 else None
    return GroundState(energy=float(w[0]), coeffs=vec, basis=H.basis,
                       gap=gap, degenerate=gap is not None and gap < DEGENERACY_GAP,
                       method="dense", residual=0.0)


def _lanczos_ground(H: SparseHamiltonian, tol: float, max_krylov: int,
                    max_restarts: int) -> GroundState:
    dim = H.dim
    matvec = H.matvec_builder()
    v = np.full(dim, 1.0 / math.sqrt(dim))
    m_cap = min(max_krylov, dim)
    energy = gap = None
    for restart in range(max_restarts):
        Q = np.empty((m_cap, dim))
        alphas = np.empty(m_cap)
        betas = np.empty(max(m_cap - 1, 0))
        Q[0] = v
        r = matvec(v)
        alphas[0] = v @ r
        r = r - alphas[0] * v
        m = 1
        breakdown = False
        while m < m_cap:
            # full reorthogonalization, twice for stability
            for _ in range(2):
                r -= Q[:m].T @ (Q[:m] @ r)
            beta = float(np.linalg.norm(r))
            if beta < 1e-14:
                breakdown = True
                break
            betas[m - 1] = beta
            q = r / beta
            Q[m] = q
            r = matvec(q) - beta * Q[m - 1]
            alphas[m] = q @ r
            r = r - alphas[m] * q
            m += 1
            if m % 10 == 0 or m == m_cap:
                w, s = sla.eigh_tridiagonal(
                    alphas[:m], betas[:m - 1], select="i",
                    select_range=(0, min(1, m - 1)))
                est = abs(betas[m - 2] * s[-1, 0]) if m > 1 else 0.0
                if est <= 0.1 * tol * max(1.0, abs(w[0])):
                    break
        w, s = sla.eigh_tridiagonal(alphas[:m], betas[:m - 1], select="i",
                                    select_range=(0, min(1, m - 1)))
        vec = Q[:m].T @ s[:, 0]
        vec /= np.linalg.norm(vec)
        energy = float(w[0])
        gap = float(w[1] - w[0]) if s.shape[1] > 1 else None
        resid = float(np.linalg.norm(matvec(vec) - energy * vec))
        if resid <= tol * max(1.0, abs(energy)) or breakdown:
            return GroundState(energy=energy, coeffs=_fix_sign(vec), basis=H.basis,
                               gap=gap, degenerate=gap is not None and gap < DEGENERACY_GAP,
                               method="lanczos", residual=resid)
        v = vec
    raise NoConvergenceError(
        "Lanczos did not reach the residual target",
        diagnostics={"dim": dim, "restarts": max_restarts, "krylov": m_cap,
                     "energy": energy, "residual": resid})


def ground_state(H: SparseHamiltonian, method: str = "auto", tol: float = 1e-12,
                 max_krylov: int = 500, max_restarts: int = 60) -> GroundState:
    """Lowest eigenpair of an assembled Hamiltonian.

    ``method`` is "auto" (dense up to dim 512, Lanczos beyond), "dense", or
    "lanczos".  The residual target is ``tol * max(1, |E|)``.
    """
    if H.dim < 1:
        raise ModelError("cannot solve on an empty basis")
    if method == "auto":
        method = "dense" if H.dim <= DENSE_CUTOFF else "lanczos"
    if method == "dense":
        return _dense_ground(H)
    if method == "lanczos":
        return _lanczos_ground(H, tol, max_krylov, max_restarts)
    raise ModelError(f"unknown solver method {method!r}")


# ---------------------------------------------------------------------------
# overlaps between ground states on different bases
# ---------------------------------------------------------------------------

def _overlap_parts(g1: GroundState, g2: GroundState):
    k1, k2 = g1.basis.keys, g2.basis.keys
    common, i1, i2 = np.intersect1d(k1, k2, assume_unique=True, return_indices=True)
    return common, i1, i2


def fidelity(g1: GroundState, g2: GroundState) -> float:
    """Squared overlap; states present in only one basis contribute zero."""
    _, i1, i2 = _overlap_parts(g1, g2)
    o = float(g1.coeffs[i1] @ g2.coeffs[i2])
    return o * o


def fidelity_deficit(g1: GroundState, g2: GroundState) -> float:
    """1 - fidelity, computed without cancellation.

    Uses the exact split 1 - o^2 = |tail|^2 + |p - o psi1|^2, where p is the
    second state's projection onto the first basis and the tail is its
    remainder, so deficits far below machine epsilon of 1.0 are resolved.
    """
    _, i1, i2 = _overlap_parts(g1, g2)
    c1, c2 = g1.coeffs, g2.coeffs
    o = float(c1[i1] @ c2[i2])
    tail = float(c2 @ c2) - float(c2[i2] @ c2[i2])
    r = -o * c1
    r[i1] += c2[i2]
    return max(tail, 0.0) + float(r @ r)


# ---------------------------------------------------------------------------
# two-level cutoff iteration
# ---------------------------------------------------------------------------

def _two_level_ground(n_atoms: int, x: float, delta: float, parity: int,
                      m: int, cache: dict) -> GroundState:
    if m not in cache:
        model = cache["model"]
        ops = cache["ops"]
        basis = build_truncated(model, ops, sigma=(parity,), kappa=(m,), caps=None)
        H = assemble(basis, model, KIND_DICKE)
        cache[m] = ground_state(H)
    return cache[m]


def converge_two_level(n_atoms: int, x: float, delta: float = 0.0,
                       parity: int = EVEN, err: float = 1e-10,
                       m_max: int = 2000, odd_from_even: bool = True) -> int:
    """Smallest excitation cutoff whose ground state is converged.

    Runs the canonical two-level system at even parity and returns the least
    cutoff m (stepping by 2) with ``1 - |<psi_m | psi_{m+2}>|^2 <= err``.
    The odd-sector cutoff is defined as the even one plus one (the odd
    excitation ladder is shifted by a single quantum); pass
    ``odd_from_even=False`` to iterate the odd tower directly instead.  The
    search brackets by doubling from a coupling-based initial guess, bisects,
    then walks down to certify minimality.
    """
    if err <= 0:
        raise ModelError("error target must be positive")
    if parity == ODD and odd_from_even:
        return converge_two_level(n_atoms, x, delta, EVEN, err, m_max) + 1
    model = two_level_model(n_atoms, x, delta)
    cache: dict = {"model": model, "ops": conventional_constants(model)}

    def deficit(m: int) -> float:
        g1 = _two_level_ground(n_atoms, x, delta, parity, m, cache)
        g2 = _two_level_ground(n_atoms, x, delta, parity, m + 2, cache)
        return fidelity_deficit(g1, g2)

    floor = parity
    start = max(4, math.ceil(n_atoms * x * x))
    start += (start + parity) % 2
    start = max(start, floor)

    hi = start
    while deficit(hi) > err:
        if hi >= m_max:
            raise NoConvergenceError(
                "cutoff iteration exhausted",
                diagnostics={"n_atoms": n_atoms, "x": x, "delta": delta,
                             "parity": parity, "err": err, "m": hi,
                             "deficit": deficit(hi)})
        hi = min(2 * hi if hi else 4, m_max)
        hi += (hi + parity) % 2
    lo = floor
    if hi > start:
        lo = max(hi // 2, floor)
        lo += (lo + parity) % 2
    while hi - lo > 2:
        mid = (lo + hi) // 2
        mid += (mid + parity) % 2
        if mid >= hi:
            mid = hi - 2
        if mid <= lo:
            mid = lo + 2
        if deficit(mid) <= err:
            hi = mid
        else:
            lo = mid
    while hi > floor and deficit(hi - 2) <= err:
        hi -= 2   # certify minimality even if the trend is not monotone
    if hi == floor + 2 and deficit(floor) <= err:
        hi = floor
    return hi


@lru_cache(maxsize=4096)
def _cutoff_cached(n_atoms: int, x_key: int, delta_key: int, parity: int,
                   err: float) -> int:
    return converge_two_level(n_atoms, x_key * 1e-12, delta_key * 1e-12,
                              parity, err)


def two_level_cutoff(n_atoms: int, x: float, delta: float, parity: int,
                     err: float) -> int:
    """Memoized cutoff lookup; keys round x and delta at 1e-12."""
    return _cutoff_cached(n_atoms, int(round(x / 1e-12)),
                          int(round(delta / 1e-12)), parity, err)


# ---------------------------------------------------------------------------
# cutoff vectors and cap policies
# ---------------------------------------------------------------------------

def assemble_kappa(model: ValidatedModel, ops: SymmetrySet,
                   caps: tuple[int, ...]) -> tuple[int, ...]:
    """Largest conserved-operator eigenvalues reachable under the caps.

    Maximizes each operator over all states whose per-coupling excitation
    numbers stay within ``caps``; modes driving no transition are held in the
    vacuum.
    """
    if len(caps) != len(model.couplings):
        raise ModelError("one cap per coupling required")
    matter = enumerate_matter(model.n_atoms, model.n)
    numax = np.zeros((len(matter), model.ell), dtype=np.int64)
    covered = np.zeros(model.ell, dtype=bool)
    feasible = np.ones(len(matter), dtype=bool)
    big = 1 << 40
    numax[:] = big
    for c, cap in zip(model.couplings, caps):
        s = c.mode - 1
        room = int(cap) - matter[:, c.k - 1]
        numax[:, s] = np.minimum(numax[:, s], room)
        covered[s] = True
    numax[:, ~covered] = 0
    feasible = (numax >= 0).all(axis=1)
    if not feasible.any():
        raise ModelError("no state satisfies the excitation caps")
    numax = numax[feasible]
    matter = matter[feasible]
    eta = ops.eta_matrix
    lam = ops.lam_matrix
    vals = numax @ np.maximum(eta, 0).T + matter @ lam.T
    return tuple(int(v) for v in vals.max(axis=0))


def sector_parities(model: ValidatedModel, ops: SymmetrySet,
                    sigma: tuple[int, ...]) -> list[int | None]:
    """Per-coupling excitation parity implied by the sector, or None when the
    coupling's excitation parity is not conserved."""
    out = []
    for c in model.couplings:
        locked, alpha, beta = parity_locked(ops, model, c.mode, c.k)
        if not locked:
            out.append(None)
        else:
            p = (sum(a * s for a, s in zip(alpha, sigma)) + beta * model.n_atoms) % 2
            out.append(p)
    return out


def caps_for_sector(model: ValidatedModel, ops: SymmetrySet, sigma: tuple[int, ...],
                    err: float) -> tuple[int, ...]:
    """Cutoff per coupling for a single-sector computation.

    Couplings whose excitation parity is fixed by the sector converge at that
    parity; the others use the even iteration.
    """
    parities = sector_parities(model, ops, sigma)
    caps = []
    for c, sub, p in zip(model.couplings, subsystems(model), parities):
        parity = EVEN if p is None else p
        caps.append(two_level_cutoff(model.n_atoms, sub.x, sub.delta, parity, err))
    return tuple(caps)


def caps_for_region(model: ValidatedModel, ops: SymmetrySet, sigma: tuple[int, ...],
                    err: float) -> tuple[int, ...]:
    """Cutoff per coupling for bases meant to serve a whole parameter region.

    Parity-locked couplings still match the sector; the others must
    accommodate both of their excitation parities, so they take the larger
    (odd-iteration) cutoff.
    """
    parities = sector_parities(model, ops, sigma)
    caps = []
    for c, sub, p in zip(model.couplings, subsystems(model), parities):
        if p is None:
            caps.append(max(
                two_level_cutoff(model.n_atoms, sub.x, sub.delta, EVEN, err),
                two_level_cutoff(model.n_atoms, sub.x, sub.delta, ODD, err)))
        else:
            caps.append(two_level_cutoff(model.n_atoms, sub.x, sub.delta, p, err))
    return tuple(caps)


# ---------------------------------------------------------------------------
# full-model convergence and sector minimization
# ---------------------------------------------------------------------------

def converge_full(model: ValidatedModel, ops: SymmetrySet, sigma: tuple[int, ...],
                  err: float = 1e-10, restriction: str = RESTRICT_EXCITATION,
                  caps: tuple[int, ...] | None = None, max_rounds: int = 50,
                  solver_tol: float = 1e-12) -> ConvergenceReport:
    """Cutoff iteration for the full model in one parity sector.

    Starts from the per-subsystem cutoffs, derives the eigenvalue bounds,
    then certifies the basis with one grow-by-two fidelity probe, enlarging
    everything by two and repeating if the probe fails.
    """
    if caps is None:
        caps = caps_for_sector(model, ops, sigma, err)
    caps = tuple(int(c) for c in caps)
    kappa = assemble_kappa(model, ops, caps)
    for rounds in range(max_rounds):
        basis = build_truncated(model, ops, sigma, kappa, caps, restriction)
        probe_caps = tuple(c + 2 for c in caps)
        probe_kappa = tuple(k + 2 for k in kappa)
        probe = build_truncated(model, ops, sigma, probe_kappa, probe_caps, restriction)
        if len(basis) == 0:
            raise ModelError(f"sector {sigma} is empty under caps {caps}")
        g1 = ground_state(assemble(basis, model, KIND_DICKE), tol=solver_tol)
        g2 = ground_state(assemble(probe, model, KIND_DICKE), tol=solver_tol)
        deficit = fidelity_deficit(g1, g2)
        if deficit <= err:
            return ConvergenceReport(sigma=tuple(sigma), m_bar=caps, kappa=kappa,
                                     iterations=rounds, deficit=deficit, err=err,
                                     dim=len(basis))
        caps = probe_caps
        kappa = probe_kappa
    raise NoConvergenceError("cutoff growth did not certify",
                             diagnostics={"sigma": sigma, "caps": caps,
                                          "kappa": kappa, "deficit": deficit})


@dataclass(frozen=True)
class SectorResult:
    label: str
    sigma: tuple[int, ...]
    kappa: tuple[int, ...]
    dim: int
    energy: float
    state: GroundState


@dataclass(frozen=True)
class SectorScan:
    energy: float
    winner: SectorResult
    results: tuple[SectorResult, ...]


def ground_over_sectors(model: ValidatedModel, ops: SymmetrySet | None = None,
                        kind: str = KIND_DICKE, err: float = 1e-10,
                        caps_policy=caps_for_region,
                        restriction: str = RESTRICT_EXCITATION,
                        orders: tuple[int, int] | None = None,
                        kappa_bounds: tuple[int, ...] | None = None,
                        method: str = "auto") -> SectorScan:
    """Minimum ground energy over parity sectors (or over sectors of the
    conserved operators, for the rotating-wave variant).

    Ties break toward the lexicographically smallest sector label or
    eigenvalue vector.
    """
    if ops is None:
        ops = conventional_constants(model)
    results: list[SectorResult] = []
    if kind == KIND_DICKE:
        for sec in sorted(sectors(ops, model), key=lambda s: s.sigma):
            if sec.kappa_min is None:
                continue
            caps = caps_policy(model, ops, sec.sigma, err)
            kappa = assemble_kappa(model, ops, caps)
            if orders is None:
                basis = build_truncated(model, ops, sec.sigma, kappa, caps, restriction)
            else:
                basis = build_reduced(model, ops, sec.sigma, kappa, caps,
                                      orders[0], orders[1], restriction)
            if len(basis) == 0:
                continue
            g = ground_state(assemble(basis, model, kind), method=method)
            results.append(SectorResult(label=sec.label, sigma=sec.sigma,
                                        kappa=kappa, dim=len(basis),
                                        energy=g.energy, state=g))
    elif kind == KIND_TC:
        from itertools import product as iproduct

        from .basis import enumerate_rwa_sector

        if kappa_bounds is None:
            caps = caps_policy(model, ops, (EVEN,) * len(ops.ops), err)
            kappa_bounds = assemble_kappa(model, ops, caps)
        for kappa in iproduct(*(range(b + 1) for b in kappa_bounds)):
            basis = enumerate_rwa_sector(model, ops, kappa)
            if len(basis) == 0:
                continue
            g = ground_state(assemble(basis, model, kind), method=method)
            results.append(SectorResult(label=str(kappa), sigma=tuple(k % 2 for k in kappa),
                                        kappa=kappa, dim=len(basis),
                                        energy=g.energy, state=g))
    else:
        raise ModelError(f"unknown Hamiltonian kind {kind!r}")
    if not results:
        raise ModelError("no nonempty sector found")
    winner = min(results, key=lambda r: (r.energy, r.label))
    return SectorScan(energy=winner.energy, winner=winner, results=tuple(results))
