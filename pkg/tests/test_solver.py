from math import sqrt

import numpy as np
import pytest

from gdicke.basis import build_truncated, enumerate_rwa_sector
from gdicke.errors import ModelError
from gdicke.hamiltonian import assemble
from gdicke.model import subsystems, two_level_model, xi_model
from gdicke.solver import (
    assemble_kappa,
    caps_for_region,
    caps_for_sector,
    converge_full,
    converge_two_level,
    fidelity,
    fidelity_deficit,
    ground_over_sectors,
    ground_state,
)
from gdicke.symmetry import EVEN, ODD, conventional_constants, sector_from_label

EE = sector_from_label("ee")


# ---------------------------------------------------------------------------
# eigensolver
# ---------------------------------------------------------------------------

def test_trivial_vacuum_block():
    m = xi_model(1)
    ops = conventional_constants(m)
    g = ground_state(assemble(enumerate_rwa_sector(m, ops, (0, 0)), m))
    assert g.energy == 0.0
    assert g.coeffs.tolist() == [1.0]


def test_uncoupled_model_ground_is_vacuum():
    m = xi_model(2, 0.0, 0.0)
    ops = conventional_constants(m)
    b = build_truncated(m, ops, EE, (8, 4), (4, 4))
    g = ground_state(assemble(b, m))
    assert g.energy == pytest.approx(0.0, abs=1e-14)
    i = int(np.argmax(np.abs(g.coeffs)))
    assert b.states[i].tolist() == [0, 0, 2, 0, 0]
    assert abs(g.coeffs[i]) == pytest.approx(1.0)


def test_single_excitation_block_closed_form():
    # kappa=1 sector of the one-atom rotating-wave model is a 2x2 block
    for delta in (0.0, 0.4):
        m = two_level_model(1, 1.3, delta)
        ops = conventional_constants(m)
        basis = enumerate_rwa_sector(m, ops, (1,))
        g = ground_state(assemble(basis, m, "tc"))
        Omega, w2 = m.Omega[0], m.omega[1]
        mu = subsystems(m)[0].mu
        exact = 0.5 * (Omega + w2) - sqrt(0.25 * (Omega - w2) ** 2 + mu ** 2)
        assert g.energy == pytest.approx(exact, abs=1e-13)


def test_lanczos_matches_dense():
    m = xi_model(3, 2.0, 2.0)
    ops = conventional_constants(m)
    b = build_truncated(m, ops, EE, (20, 9), (9, 9))
    H = assemble(b, m)
    gd = ground_state(H, method="dense")
    gl = ground_state(H, method="lanczos")
    assert gl.energy == pytest.approx(gd.energy, abs=1e-10)
    assert abs(abs(gl.coeffs @ gd.coeffs) - 1.0) < 1e-9
    assert gl.residual <= 1e-12 * max(1.0, abs(gl.energy))


def test_lanczos_sign_convention_deterministic():
    m = xi_model(2, 1.5, 1.0)
    ops = conventional_constants(m)
    H = assemble(build_truncated(m, ops, EE, (16, 8), (8, 8)), m)
    g1 = ground_state(H, method="lanczos")
    g2 = ground_state(H, method="lanczos")
    assert np.array_equal(g1.coeffs, g2.coeffs)
    assert g1.coeffs[int(np.argmax(np.abs(g1.coeffs)))] > 0


def test_empty_basis_rejected():
    m = xi_model(2)
    ops = conventional_constants(m)
    b = build_truncated(m, ops, sector_from_label("oe"), (0, 0), (0, 0))
    with pytest.raises(ModelError):
        ground_state(assemble(b, m))


# ---------------------------------------------------------------------------
# fidelity
# ---------------------------------------------------------------------------

def _ground_on(model, caps, kappa, sigma=EE):
    ops = conventional_constants(model)
    return ground_state(assemble(build_truncated(model, ops, sigma, kappa, caps), model))


def test_fidelity_identical_and_flipped():
    m = xi_model(1, 2.0, 2.0)
    g = _ground_on(m, (8, 8), (17, 8))
    assert fidelity(g, g) == pytest.approx(1.0)
    import dataclasses

    flipped = dataclasses.replace(g, coeffs=-g.coeffs)
    assert fidelity(g, flipped) == pytest.approx(1.0)
    assert fidelity_deficit(g, flipped) == pytest.approx(0.0, abs=1e-30)


def test_fidelity_disjoint_bases():
    m = two_level_model(1, 1.0, 0.0)
    ops = conventional_constants(m)
    ge = ground_state(assemble(build_truncated(m, ops, (EVEN,), (4,), None), m))
    go = ground_state(assemble(build_truncated(m, ops, (ODD,), (5,), None), m))
    assert fidelity(ge, go) == 0.0
    assert fidelity_deficit(ge, go) == pytest.approx(1.0)


def test_robust_deficit_resolves_below_machine_epsilon():
    g1 = _ground_on(two_level_model(4, 3.0, 0.0), None, (44,), (EVEN,))
    g2 = _ground_on(two_level_model(4, 3.0, 0.0), None, (46,), (EVEN,))
    d = fidelity_deficit(g1, g2)
    naive = 1.0 - fidelity(g1, g2)
    assert 0 < d < 1e-15            # far beyond what 1 - |o|^2 can resolve
    assert naive == pytest.approx(0.0, abs=5e-15)


# ---------------------------------------------------------------------------
# cutoff iteration
# ---------------------------------------------------------------------------

def test_cutoff_anchor_values():
    assert converge_two_level(4, 2.0, 0.0, EVEN, 1e-10) == 24
    assert converge_two_level(4, 4.0, 0.0, EVEN, 1e-10) == 50
    assert converge_two_level(1, 4.0, 0.0, EVEN, 1e-10) == 22


def test_cutoff_odd_is_even_plus_one():
    for na, x in ((1, 1.5), (4, 4.0), (3, 2.0)):
        e = converge_two_level(na, x, 0.0, EVEN, 1e-10)
        o = converge_two_level(na, x, 0.0, ODD, 1e-10)
        assert o == e + 1


def test_cutoff_zero_coupling():
    assert converge_two_level(4, 0.0, 0.0, EVEN, 1e-10) == 0


def test_cutoff_minimality_certificate():
    # the value right below the returned cutoff must violate the criterion
    from gdicke.solver import _two_level_ground
    from gdicke.model import two_level_model as tlm
    from gdicke.symmetry import conventional_constants as cc

    na, x, err = 3, 2.5, 1e-10
    mbar = converge_two_level(na, x, 0.0, EVEN, err)
    model = tlm(na, x, 0.0)
    cache = {"model": model, "ops": cc(model)}

    def deficit(m):
        return fidelity_deficit(_two_level_ground(na, x, 0.0, EVEN, m, cache),
                                _two_level_ground(na, x, 0.0, EVEN, m + 2, cache))

    assert deficit(mbar) <= err
    assert mbar == 0 or deficit(mbar - 2) > err


# ---------------------------------------------------------------------------
# cutoff vectors and cap policies
# ---------------------------------------------------------------------------

def test_assemble_kappa_cascade_values():
    m = xi_model(4)
    ops = conventional_constants(m)
    assert assemble_kappa(m, ops, (24, 50)) == (78, 50)
    assert assemble_kappa(m, ops, (0, 0)) == (0, 0)
    m1 = xi_model(1)
    assert assemble_kappa(m1, conventional_constants(m1), (22, 22)) == (45, 22)


def test_caps_policies_on_cascade():
    m = xi_model(4, 4.0, 4.0)
    ops = conventional_constants(m)
    assert caps_for_sector(m, ops, EE, 1e-10) == (50, 50)
    assert caps_for_region(m, ops, EE, 1e-10) == (51, 50)
    oe = sector_from_label("oe")
    # the locked coupling follows the sector parity; k2 stays even for 'oe'
    assert caps_for_sector(m, ops, oe, 1e-10)[1] == 50


def test_converge_full_at_zero_coupling():
    m = xi_model(4, 0.0, 0.0)
    ops = conventional_constants(m)
    rep = converge_full(m, ops, EE, 1e-10)
    assert rep.kappa == (0, 0)
    assert rep.iterations == 0
    assert rep.dim == 1
    assert rep.deficit <= 1e-10


# ---------------------------------------------------------------------------
# sector minimization
# ---------------------------------------------------------------------------

def test_variational_monotonicity_under_nesting():
    m = xi_model(2, 2.0, 2.0)
    ops = conventional_constants(m)
    energies = []
    for kap, caps in (((10, 4), (4, 4)), ((14, 6), (6, 6)), ((18, 8), (8, 8))):
        g = _ground_on(m, caps, kap)
        energies.append(g.energy)
    assert energies[0] >= energies[1] - 1e-12
    assert energies[1] >= energies[2] - 1e-12


def test_ground_over_sectors_at_origin():
    m = xi_model(4, 0.0, 0.0)
    scan = ground_over_sectors(m, err=1e-10)
    assert scan.energy == pytest.approx(0.0, abs=1e-12)
    assert scan.winner.label == "ee"


def test_tc_scan_deep_normal_region():
    m = xi_model(4, 0.2, 0.2)
    scan = ground_over_sectors(m, kind="tc", err=1e-10, kappa_bounds=(4, 3))
    assert scan.winner.kappa == (0, 0)
    assert scan.energy == pytest.approx(0.0, abs=1e-12)


def test_deficit_decreases_along_cutoff_ladder():
    na, x = 3, 2.0
    m = two_level_model(na, x, 0.0)
    ops = conventional_constants(m)

    def g(mcut):
        return ground_state(assemble(build_truncated(m, ops, (EVEN,), (mcut,), None), m))

    d = [fidelity_deficit(g(mc), g(mc + 2)) for mc in (8, 12, 16, 20)]
    assert all(a > b for a, b in zip(d, d[1:]))
