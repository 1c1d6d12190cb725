"""Expectation values, error metrics, and fidelity-based transition detection."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientGridError
from .solver import GroundState

ZERO_ENERGY_TOL = 1e-9


@dataclass(frozen=True)
class ObservableSet:
    """Photon statistics and level populations of one state."""

    energy: float
    photon_mean: tuple[float, ...]
    photon_var: tuple[float, ...]
    photon_std: tuple[float, ...]
    populations: tuple[float, ...]


@dataclass(frozen=True)
class ErrorMetrics:
    """Reduced-basis quality relative to a reference solution."""

    delta_energy: float                  # relative; defined 0 at zero reference
    delta_fluct: tuple[float, ...]       # absolute, per mode, on the std deviation


def expectations(g: GroundState) -> ObservableSet:
    """Diagonal observables of a normalized state."""
    w = g.coeffs * g.coeffs
    ell = g.basis.model.ell
    nu = g.basis.states[:, :ell].astype(float)
    occ = g.basis.states[:, ell:].astype(float)
    mean = w @ nu
    second = w @ (nu * nu)
    var = np.maximum(second - mean * mean, 0.0)
    pops = w @ occ
    return ObservableSet(energy=g.energy,
                         photon_mean=tuple(float(v) for v in mean),
                         photon_var=tuple(float(v) for v in var),
                         photon_std=tuple(float(v) for v in np.sqrt(var)),
                         populations=tuple(float(v) for v in pops))


def error_metrics(reference: ObservableSet, reduced: ObservableSet,
                  zero_tol: float = ZERO_ENERGY_TOL) -> ErrorMetrics:
    """Relative energy error and absolute fluctuation error.

    The energy error is defined as zero when the reference energy vanishes
    (within ``zero_tol``, to keep solver noise from dividing by itself).
    """
    if abs(reference.energy) <= zero_tol:
        de = 0.0
    else:
        de = abs((reference.energy - reduced.energy) / reference.energy)
    df = tuple(abs(a - b) for a, b in zip(reference.photon_std, reduced.photon_std))
    return ErrorMetrics(delta_energy=de, delta_fluct=df)


def _as_overlap_pair(state):
    if isinstance(state, GroundState):
        return state.basis.keys, state.coeffs
    keys, coeffs = state
    return np.asarray(keys), np.asarray(coeffs)


def overlap_fidelity(a, b) -> float:
    """Squared overlap between states given as (keys, coefficients) pairs."""
    k1, c1 = _as_overlap_pair(a)
    k2, c2 = _as_overlap_pair(b)
    _, i1, i2 = np.intersect1d(k1, k2, assume_unique=True, return_indices=True)
    o = float(c1[i1] @ c2[i2])
    return o * o


def separatrix(grid, threshold: float = 0.99) -> np.ndarray:
    """Mark grid points adjacent to local minima of the neighbor fidelity.

    ``grid`` is a 2D array-like of states (GroundState or (keys, coeffs)
    pairs).  Fidelities between horizontal and vertical neighbors are
    scanned; an interior edge that is a strict local minimum of its row or
    column profile, with fidelity below ``threshold``, marks both of its
    endpoints.  A 1 x N grid scans rows only.
    """
    rows = [list(r) for r in grid]
    ny = len(rows)
    nx = len(rows[0]) if ny else 0
    if any(len(r) != nx for r in rows):
        raise InsufficientGridError("grid must be rectangular")
    if max(ny, nx) < 3:
        raise InsufficientGridError("need at least 3 points along one axis")
    mark = np.zeros((ny, nx), dtype=bool)

    def scan(profile, put):
        f = [overlap_fidelity(profile[i], profile[i + 1]) for i in range(len(profile) - 1)]
        for e in range(1, len(f) - 1):
            if f[e] < threshold and f[e] < f[e - 1] and f[e] < f[e + 1]:
                put(e)
                put(e + 1)

    for i in range(ny):
        if nx >= 3:
            scan(rows[i], lambda j, i=i: mark.__setitem__((i, j), True))
    for j in range(nx):
        if ny >= 3:
            scan([rows[i][j] for i in range(ny)],
                 lambda i, j=j: mark.__setitem__((i, j), True))
    return mark
