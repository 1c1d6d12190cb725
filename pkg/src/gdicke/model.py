"""Physical system definition: levels, modes, dipolar couplings.

Energies are dimensionless, measured in units of the highest level energy,
so a valid model always has ``omega[0] == 0`` and ``omega[-1] == 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import (
    BadNormalizationError,
    DegeneratePairError,
    DuplicateTransitionError,
    ModelError,
    NonMonotoneLevelsError,
)

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class CouplingSpec:
    """One dipolar coupling: mode ``mode`` drives the ``j <-> k`` transition.

    ``strength`` is either the dimensionless intensity (ratio to the critical
    coupling) when ``dimensionless`` is True, or the raw dipolar strength
    otherwise.  Declared couplings are structural: a strength of zero keeps
    the transition in the model (e.g. for sweeps through zero) and still
    participates in symmetry discovery.
    """

    j: int
    k: int
    mode: int
    strength: float = 1.0
    dimensionless: bool = True

    def __post_init__(self):
        if not (1 <= self.j < self.k):
            raise ModelError(f"coupling needs 1 <= j < k, got ({self.j}, {self.k})")
        if self.mode < 1:
            raise ModelError(f"mode index must be >= 1, got {self.mode}")
        if self.strength < 0:
            raise ModelError(f"coupling strength must be >= 0, got {self.strength}")


@dataclass(frozen=True)
class TwoLevelSubsystem:
    """Derived per-coupling data: splitting, critical coupling, detuning."""

    j: int
    k: int
    mode: int
    omega_jk: float
    mu_bar: float
    delta: float
    x: float      # dimensionless intensity
    mu: float     # raw intensity, mu = x * mu_bar


@dataclass(frozen=True)
class ModelConfig:
    """Raw, unvalidated description of the system."""

    n: int
    ell: int
    n_atoms: int
    omega: tuple[float, ...]
    Omega: tuple[float, ...]
    couplings: tuple[CouplingSpec, ...]
    subsystem_count: int | None = None   # override for the derived count


@dataclass(frozen=True)
class ValidatedModel:
    """A checked model.  Immutable; safe to share across workers."""

    n: int
    ell: int
    n_atoms: int
    omega: tuple[float, ...]
    Omega: tuple[float, ...]
    couplings: tuple[CouplingSpec, ...]
    subsystem_count: int = field(default=0)

    @property
    def omega_arr(self) -> np.ndarray:
        return np.asarray(self.omega)

    @property
    def Omega_arr(self) -> np.ndarray:
        return np.asarray(self.Omega)

    def coupling_index(self, j: int, k: int) -> int:
        for i, c in enumerate(self.couplings):
            if (c.j, c.k) == (j, k):
                return i
        raise ModelError(f"no coupling declared for pair ({j}, {k})")

    def with_strengths(self, x: Sequence[float]) -> "ValidatedModel":
        """Copy of the model with the couplings' dimensionless strengths replaced."""
        if len(x) != len(self.couplings):
            raise ModelError("one strength per coupling required")
        new = tuple(replace(c, strength=float(v), dimensionless=True)
                    for c, v in zip(self.couplings, x))
        return replace(self, couplings=new)

    def mode_level_sets(self) -> list[tuple[int, frozenset[int]]]:
        """Connected components of each mode's coupling graph.

        Returns one ``(mode, levels)`` entry per component; these are the
        independent two-level-like subsystems the collective region splits
        into.  Their count can exceed the mode count when one mode drives
        disjoint level pairs.
        """
        out: list[tuple[int, frozenset[int]]] = []
        for s in range(1, self.ell + 1):
            edges = [(c.j, c.k) for c in self.couplings if c.mode == s]
            if not edges:
                continue
            # union-find over the levels touched by this mode
            parent: dict[int, int] = {}

            def find(v):
                while parent[v] != v:
                    parent[v] = parent[parent[v]]
                    v = parent[v]
                return v

            for j, k in edges:
                parent.setdefault(j, j)
                parent.setdefault(k, k)
                rj, rk = find(j), find(k)
                if rj != rk:
                    parent[rk] = rj
            comps: dict[int, set[int]] = {}
            for v in parent:
                comps.setdefault(find(v), set()).add(v)
            for levels in sorted(comps.values(), key=min):
                out.append((s, frozenset(levels)))
        return out


def validate(config: ModelConfig | ValidatedModel, rescale: bool = False) -> ValidatedModel:
    """Check model invariants and return an immutable validated model.

    Validating an already-validated model is a no-op and returns an equal
    model.  With ``rescale=True``, level and mode energies given in other
    units are shifted and scaled onto the omega_1=0, omega_n=1 convention
    (raw coupling strengths are scaled accordingly; dimensionless ones are
    scale invariant).
    """
    omega = tuple(float(w) for w in config.omega)
    Omega = tuple(float(W) for W in config.Omega)
    couplings = tuple(config.couplings)
    n, ell, n_atoms = config.n, config.ell, config.n_atoms

    if n < 2:
        raise ModelError(f"need at least two levels, got n={n}")
    if ell < 1:
        raise ModelError(f"need at least one mode, got ell={ell}")
    if n_atoms < 1:
        raise ModelError(f"need at least one particle, got {n_atoms}")
    if len(omega) != n:
        raise ModelError(f"expected {n} level energies, got {len(omega)}")
    if len(Omega) != ell:
        raise ModelError(f"expected {ell} mode frequencies, got {len(Omega)}")

    if any(omega[i] > omega[i + 1] for i in range(n - 1)):
        raise NonMonotoneLevelsError(f"level energies must be nondecreasing: {omega}")

    span = omega[-1] - omega[0]
    normalized = abs(omega[0]) <= _NORM_TOL and abs(omega[-1] - 1.0) <= _NORM_TOL
    if not normalized:
        if not rescale:
            raise BadNormalizationError(
                f"levels must satisfy omega_1=0, omega_n=1 (got {omega[0]}, {omega[-1]}); "
                "pass rescale=True to convert")
        if span <= 0:
            raise BadNormalizationError("cannot rescale: omega_n == omega_1")
        omega = tuple((w - config.omega[0]) / span for w in omega)
        Omega = tuple(W / span for W in Omega)
        couplings = tuple(
            c if c.dimensionless else replace(c, strength=c.strength / span)
            for c in couplings)

    seen_pairs: dict[tuple[int, int], int] = {}
    for c in couplings:
        if c.k > n:
            raise ModelError(f"coupling ({c.j},{c.k}) references level > n={n}")
        if c.mode > ell:
            raise ModelError(f"coupling ({c.j},{c.k}) references mode {c.mode} > ell={ell}")
        if (c.j, c.k) in seen_pairs:
            raise DuplicateTransitionError(
                f"pair ({c.j},{c.k}) driven by modes {seen_pairs[(c.j, c.k)]} and {c.mode}")
        seen_pairs[(c.j, c.k)] = c.mode
        if abs(omega[c.k - 1] - omega[c.j - 1]) <= _NORM_TOL:
            raise DegeneratePairError(
                f"pair ({c.j},{c.k}) is degenerate; critical coupling undefined")

    model = ValidatedModel(n=n, ell=ell, n_atoms=n_atoms, omega=omega, Omega=Omega,
                           couplings=couplings, subsystem_count=0)
    count = config.subsystem_count if config.subsystem_count else len(model.mode_level_sets())
    return replace(model, subsystem_count=max(count, 1))


def subsystems(model: ValidatedModel) -> list[TwoLevelSubsystem]:
    """Per-coupling two-level data: splitting, critical point, detuning."""
    out = []
    for c in model.couplings:
        w = abs(model.omega[c.k - 1] - model.omega[c.j - 1])
        W = model.Omega[c.mode - 1]
        mu_bar = 0.5 * math.sqrt(W * w)
        delta = W / w - 1.0
        if c.dimensionless:
            x, mu = c.strength, c.strength * mu_bar
        else:
            x, mu = c.strength / mu_bar, c.strength
        out.append(TwoLevelSubsystem(j=c.j, k=c.k, mode=c.mode, omega_jk=w,
                                     mu_bar=mu_bar, delta=delta, x=x, mu=mu))
    return out


def coupling_value(spec: CouplingSpec, sub: TwoLevelSubsystem) -> float:
    """Raw dipolar strength of a coupling (converts from dimensionless form)."""
    return spec.strength * sub.mu_bar if spec.dimensionless else spec.strength


def two_level_model(n_atoms: int, x: float, delta: float) -> ValidatedModel:
    """Canonical single-mode two-level system at unit splitting.

    All two-level systems with the same ``(n_atoms, x, delta)`` share their
    ground-state structure, so derived cutoffs depend only on these.
    """
    cfg = ModelConfig(n=2, ell=1, n_atoms=n_atoms, omega=(0.0, 1.0),
                      Omega=(1.0 + delta,),
                      couplings=(CouplingSpec(1, 2, 1, x, True),))
    return validate(cfg)


def xi_model(n_atoms: int, x12: float = 1.0, x23: float = 1.0,
             omega2: float = 0.25) -> ValidatedModel:
    """Three-level cascade (mode 1 drives 1<->2, mode 2 drives 2<->3), double resonance."""
    cfg = ModelConfig(n=3, ell=2, n_atoms=n_atoms, omega=(0.0, omega2, 1.0),
                      Omega=(omega2, 1.0 - omega2),
                      couplings=(CouplingSpec(1, 2, 1, x12, True),
                                 CouplingSpec(2, 3, 2, x23, True)))
    return validate(cfg)


def lambda_model(n_atoms: int, x13: float = 1.0, x23: float = 1.0,
                 omega2: float = 0.25) -> ValidatedModel:
    """Three-level system with both transitions into the top level, resonant."""
    cfg = ModelConfig(n=3, ell=2, n_atoms=n_atoms, omega=(0.0, omega2, 1.0),
                      Omega=(1.0, 1.0 - omega2),
                      couplings=(CouplingSpec(1, 3, 1, x13, True),
                                 CouplingSpec(2, 3, 2, x23, True)))
    return validate(cfg)


def vee_model(n_atoms: int, x12: float = 1.0, x13: float = 1.0,
              omega2: float = 0.25) -> ValidatedModel:
    """Three-level system with both transitions out of the bottom level, resonant."""
    cfg = ModelConfig(n=3, ell=2, n_atoms=n_atoms, omega=(0.0, omega2, 1.0),
                      Omega=(omega2, 1.0),
                      couplings=(CouplingSpec(1, 2, 1, x12, True),
                                 CouplingSpec(1, 3, 2, x13, True)))
    return validate(cfg)
