import numpy as np
import pytest

from gdicke.basis import build_truncated
from gdicke.errors import InsufficientGridError
from gdicke.hamiltonian import assemble
from gdicke.model import two_level_model, xi_model
from gdicke.observables import (
    ErrorMetrics,
    error_metrics,
    expectations,
    overlap_fidelity,
    separatrix,
)
from gdicke.solver import GroundState, ground_state, two_level_cutoff
from gdicke.symmetry import EVEN, conventional_constants, sector_from_label

EE = sector_from_label("ee")


def _state_on(model, caps, kappa, sigma=EE):
    ops = conventional_constants(model)
    basis = build_truncated(model, ops, sigma, kappa, caps)
    return ground_state(assemble(basis, model))


def _manual_state(model, rows, coeffs, sigma=None):
    from gdicke.basis import Basis, BasisMeta

    basis = Basis(model, np.array(rows, dtype=np.int64),
                  BasisMeta(kind="adhoc", model=model))
    order = basis.index_of(np.array(rows, dtype=np.int64))
    vec = np.zeros(len(basis))
    vec[order] = coeffs
    return GroundState(energy=0.0, coeffs=vec, basis=basis, sigma=sigma)


def test_vacuum_expectations():
    m = xi_model(3, 0.0, 0.0)
    g = _state_on(m, (4, 4), (4, 2))
    obs = expectations(g)
    assert obs.photon_mean == pytest.approx((0.0, 0.0))
    assert obs.photon_var == pytest.approx((0.0, 0.0))
    assert obs.populations == pytest.approx((3.0, 0.0, 0.0))


def test_equal_superposition_moments():
    m = two_level_model(1, 1.0, 0.0)
    g = _manual_state(m, [[0, 1, 0], [2, 1, 0]], [1 / np.sqrt(2), 1 / np.sqrt(2)])
    obs = expectations(g)
    assert obs.photon_mean[0] == pytest.approx(1.0)
    assert obs.photon_var[0] == pytest.approx(1.0)
    assert obs.photon_std[0] == pytest.approx(1.0)


def test_population_sum_is_particle_count():
    m = xi_model(4, 2.0, 3.0)
    g = _state_on(m, (12, 14), (30, 14))
    obs = expectations(g)
    assert sum(obs.populations) == pytest.approx(4.0, abs=1e-10)


def test_error_metrics_conventions():
    a = expectations(_state_on(xi_model(2, 1.5, 1.5), (8, 8), (18, 8)))
    assert error_metrics(a, a) == ErrorMetrics(0.0, (0.0, 0.0))
    zero = ErrorMetrics
    ref = a.__class__(energy=0.0, photon_mean=a.photon_mean, photon_var=a.photon_var,
                      photon_std=a.photon_std, populations=a.populations)
    red = a.__class__(energy=-0.5, photon_mean=a.photon_mean, photon_var=a.photon_var,
                      photon_std=a.photon_std, populations=a.populations)
    assert error_metrics(ref, red).delta_energy == 0.0
    ref2 = ref.__class__(energy=-2.0, photon_mean=ref.photon_mean,
                         photon_var=ref.photon_var, photon_std=ref.photon_std,
                         populations=ref.populations)
    red2 = ref.__class__(energy=-1.9, photon_mean=ref.photon_mean,
                         photon_var=ref.photon_var, photon_std=ref.photon_std,
                         populations=ref.populations)
    assert error_metrics(ref2, red2).delta_energy == pytest.approx(0.05)


def test_separatrix_constant_grid_is_empty():
    m = two_level_model(1, 1.0, 0.0)
    g = _state_on(m, None, (6,), (EVEN,))
    grid = [[g] * 5 for _ in range(5)]
    assert not separatrix(grid).any()


def test_separatrix_insufficient_grid():
    m = two_level_model(1, 1.0, 0.0)
    g = _state_on(m, None, (6,), (EVEN,))
    with pytest.raises(InsufficientGridError):
        separatrix([[g, g], [g, g]])


def test_separatrix_marks_two_level_transition():
    # collective transition of the two-level model sits at unit dimensionless
    # coupling; a coarse sweep at moderate size localizes it there
    n_atoms, err = 12, 1e-8
    xs = np.linspace(0.2, 2.0, 19)
    states = []
    for x in xs:
        m = two_level_model(n_atoms, float(x), 0.0)
        ops = conventional_constants(m)
        mbar = two_level_cutoff(n_atoms, float(x), 0.0, EVEN, err)
        basis = build_truncated(m, ops, (EVEN,), (mbar,), None)
        states.append(ground_state(assemble(basis, m)))
    mask = separatrix([states], threshold=0.999)
    marked = xs[np.where(mask[0])[0]]
    assert len(marked)
    assert np.all(np.abs(marked - 1.0) <= 0.35)


def test_overlap_fidelity_accepts_raw_pairs():
    m = two_level_model(1, 1.0, 0.0)
    g = _state_on(m, None, (6,), (EVEN,))
    pair = (g.basis.keys, g.coeffs)
    assert overlap_fidelity(pair, g) == pytest.approx(1.0)
