import io
from math import sqrt

import numpy as np
import pytest

from gdicke._kernels import HAVE_NUMBA
from gdicke.basis import build_truncated, enumerate_rwa_sector
from gdicke.hamiltonian import assemble, diagonal_energy, transition_amplitude
from gdicke.model import subsystems, two_level_model, xi_model
from gdicke.symmetry import conventional_constants, eval_K, sector_from_label

from util import dense_oracle

EE = sector_from_label("ee")


def test_diagonal_energy_examples():
    m = xi_model(4)
    assert diagonal_energy([2, 1, 1, 2, 1], m)[0] == pytest.approx(2.75)
    assert diagonal_energy([0, 0, 4, 0, 0], m)[0] == 0.0
    assert diagonal_energy([0, 0, 0, 0, 4], m)[0] == pytest.approx(4.0)


def test_transition_amplitude_two_level():
    m = two_level_model(1, 1.0, 0.0)
    mu = subsystems(m)[0].mu
    # rotating move: photon created, atom de-excited
    amp = transition_amplitude([1, 1, 0], [0, 0, 1], m)
    assert amp == pytest.approx(-mu)
    # no pure-photon moves
    assert transition_amplitude([1, 0, 1], [0, 0, 1], m) == 0.0


def test_transition_amplitude_collective_enhancement():
    m = two_level_model(2, 1.0, 0.0)
    mu = subsystems(m)[0].mu
    for nu in (0, 3):
        amp = transition_amplitude([nu + 1, 2, 0], [nu, 1, 1], m)
        assert amp == pytest.approx(-mu / sqrt(2) * sqrt(2 * 1) * sqrt(nu + 1))
        assert amp == pytest.approx(-mu * sqrt(nu + 1))


def test_vacuum_sector_is_one_by_one_zero():
    m = xi_model(1)
    ops = conventional_constants(m)
    H = assemble(enumerate_rwa_sector(m, ops, (0, 0)), m)
    assert H.dim == 1
    assert H.to_dense().tolist() == [[0.0]]


def test_hand_assembled_two_level_block():
    # sigma=e, cutoff 2, one atom: states (0;1,0), (1;0,1), (2;1,0)
    m = two_level_model(1, 1.0, 0.0)
    ops = conventional_constants(m)
    basis = build_truncated(m, ops, (0,), (2,), None)
    assert len(basis) == 3
    mu = subsystems(m)[0].mu
    Omega = m.Omega[0]
    H = assemble(basis, m).to_dense()
    idx = {tuple(r): i for i, r in enumerate(basis.states.tolist())}
    g, e1, g2 = idx[(0, 1, 0)], idx[(1, 0, 1)], idx[(2, 1, 0)]
    assert H[g, g] == pytest.approx(0.0)
    assert H[e1, e1] == pytest.approx(Omega + 1.0)
    assert H[g2, g2] == pytest.approx(2 * Omega)
    assert H[e1, g] == pytest.approx(-mu)            # rotating
    assert H[g2, e1] == pytest.approx(-mu * sqrt(2))  # counter-rotating
    assert H[g2, g] == 0.0


@pytest.mark.parametrize("kind", ["dicke", "tc"])
@pytest.mark.parametrize("case", ["two_level", "xi_small", "xi_sector"])
def test_dense_oracle_equivalence(kind, case):
    if case == "two_level":
        m = two_level_model(3, 1.7, 0.3)
        ops = conventional_constants(m)
        basis = build_truncated(m, ops, (0,), (8,), None)
    elif case == "xi_small":
        m = xi_model(2, 1.2, 0.8)
        ops = conventional_constants(m)
        basis = build_truncated(m, ops, EE, (10, 6), (6, 6))
    else:
        m = xi_model(3, 2.0, 1.0)
        ops = conventional_constants(m)
        basis = enumerate_rwa_sector(m, ops, (6, 3))
    H = assemble(basis, m, kind)
    dense = H.to_dense()
    oracle = dense_oracle(basis, m, kind)
    assert np.allclose(dense, oracle, atol=1e-13)
    assert np.array_equal(dense, dense.T)            # exact symmetry


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")
def test_numba_and_numpy_assembly_agree():
    m = xi_model(3, 2.0, 3.0)
    ops = conventional_constants(m)
    basis = build_truncated(m, ops, EE, (20, 9), (9, 9))
    a = assemble(basis, m, use_numba=True)
    b = assemble(basis, m, use_numba=False)
    assert np.array_equal(a.rows, b.rows)
    assert np.array_equal(a.cols, b.cols)
    assert np.allclose(a.vals, b.vals, rtol=0, atol=0)


def test_rwa_assembly_preserves_K_exactly():
    # on a fixed-K basis no rotating move may leave the sector
    m = xi_model(4, 2.0, 4.0)
    ops = conventional_constants(m)
    basis = enumerate_rwa_sector(m, ops, (8, 4))
    H = assemble(basis, m, "tc")
    K = basis.k_values(ops)
    off = H.rows != H.cols
    assert (K[H.rows[off]] == K[H.cols[off]]).all()
    # and the number of boundary losses is zero: nnz matches the dense oracle
    oracle = dense_oracle(basis, m, "tc")
    assert H.nnz == np.count_nonzero(oracle) + (np.diag(oracle) == 0).sum()


def test_dicke_assembly_preserves_parity():
    m = xi_model(2, 1.5, 1.5)
    ops = conventional_constants(m)
    basis = build_truncated(m, ops, EE, (12, 6), (6, 6))
    H = assemble(basis, m, "dicke")
    par = basis.k_values(ops) % 2
    off = H.rows != H.cols
    assert (par[H.rows[off]] == par[H.cols[off]]).all()


def test_offdiagonal_scales_linearly_with_strength():
    m1 = xi_model(2, 1.0, 1.0)
    m2 = xi_model(2, 2.0, 2.0)
    ops = conventional_constants(m1)
    b1 = build_truncated(m1, ops, EE, (8, 4), (4, 4))
    b2 = build_truncated(m2, ops, EE, (8, 4), (4, 4))
    H1, H2 = assemble(b1, m1).to_dense(), assemble(b2, m2).to_dense()
    off1 = H1 - np.diag(np.diag(H1))
    off2 = H2 - np.diag(np.diag(H2))
    assert np.allclose(2 * off1, off2, atol=1e-14)


def test_coo_dump_round_trip():
    m = two_level_model(1, 1.0, 0.0)
    ops = conventional_constants(m)
    H = assemble(build_truncated(m, ops, (0,), (4,), None), m)
    buf = io.StringIO()
    H.dump_coo(buf)
    lines = buf.getvalue().strip().splitlines()
    assert len(lines) == H.nnz
    r, c, v = lines[0].split()
    assert int(r) == H.rows[0] and int(c) == H.cols[0]
    assert float(v) == H.vals[0]
