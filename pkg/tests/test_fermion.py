import itertools

import numpy as np
import pytest

from excited_vqe import fixtures
from excited_vqe.errors import ActiveSpaceError, FcidumpParseError
from excited_vqe.exact import SectorSpec, sector_spectrum
from excited_vqe.fermion import (ActiveSpace, FciDump, freeze, hartree_fock_index, jordan_wigner,
                                 ladder_product_arrays, molecular_hamiltonian, number_operator,
                                 parse_fcidump, s_squared_operator, serialize_fcidump,
                                 sz_operator, to_spin_orbitals)
from excited_vqe.pauli import PauliString, string_matrix, to_matrix
from excited_vqe.simulator import basis_state, expectation

from conftest import hamiltonian, occupation_annihilator


def ladder_dense(n, j, dagger):
    x, z, c = ladder_product_arrays(n, np.array([[j]]), (dagger,), np.array([1.0]))
    return sum(ci * string_matrix(PauliString(n, int(xi), int(zi))).toarray()
               for xi, zi, ci in zip(x, z, c))


def occupation_hamiltonian(s):
    n = s.n_spin_orbitals
    a = [occupation_annihilator(n, j) for j in range(n)]
    ad = [m.T for m in a]
    h = s.constant * np.eye(1 << n)
    for i, j in itertools.product(range(n), repeat=2):
        if s.h1[i, j]:
            h += s.h1[i, j] * ad[i] @ a[j]
    for i, j, k, l in zip(*np.nonzero(s.h2)):
        h += 0.5 * s.h2[i, j, k, l] * ad[i] @ ad[j] @ a[k] @ a[l]
    return h


def test_creation_operator_expansion():
    expected = 0.5 * to_matrix(PauliString.from_label("ZX")) - 0.5j * to_matrix(PauliString.from_label("ZY"))
    np.testing.assert_allclose(ladder_dense(2, 1, True), expected, atol=1e-15)


def test_car_relations_n4():
    n = 4
    a = [ladder_dense(n, j, False) for j in range(n)]
    ad = [ladder_dense(n, j, True) for j in range(n)]
    eye = np.eye(1 << n)
    for i, j in itertools.product(range(n), repeat=2):
        np.testing.assert_allclose(a[i] @ ad[j] + ad[j] @ a[i], eye * (i == j), atol=1e-12)
        np.testing.assert_allclose(a[i] @ a[j] + a[j] @ a[i], 0, atol=1e-12)
        np.testing.assert_allclose(a[i], occupation_annihilator(n, i), atol=1e-12)


def test_parse_header_and_one_body():
    f = parse_fcidump("&FCI NORB=2,NELEC=2,MS2=0,\n&END\n0.5 1 1 0 0\n0.25 1 1 2 2\n1.5 0 0 0 0\n")
    assert (f.norb, f.nelec, f.ms2) == (2, 2, 0)
    assert f.one_body[0, 0] == 0.5
    assert f.core_energy == 1.5
    assert f.two_body[1, 1, 0, 0] == f.two_body[0, 0, 1, 1] == 0.25


def test_parse_slash_terminator_and_fortran_exponent():
    f = parse_fcidump("&FCI NORB=1, NELEC=2,\n/\n 1.0D-1 1 1 1 1\n")
    assert f.two_body[0, 0, 0, 0] == pytest.approx(0.1)


@pytest.mark.parametrize("text, line", [
    ("NORB=2\n", 1),
    ("&FCI NELEC=2,\n&END\n", 1),
    ("&FCI NORB=2,NELEC=2,\n&END\n0.5 1 3 0 0\n", 3),
    ("&FCI NORB=2,NELEC=2,\n&END\n0.5 1 1 0 0\nabc 1 1 0 0\n", 4),
    ("&FCI NORB=2,NELEC=2,\n&END\n0.5 1 1\n", 3),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(FcidumpParseError) as err:
        parse_fcidump(text)
    assert err.value.line == line


def test_fixture_round_trip():
    for mol in ("h2", "h4", "lih"):
        for r in fixtures.available(mol):
            f = fixtures.load(mol, r).fcidump
            g = parse_fcidump(serialize_fcidump(f))
            np.testing.assert_array_equal(g.one_body, f.one_body)
            np.testing.assert_array_equal(g.two_body, f.two_body)
            assert g.core_energy == f.core_energy and g.nelec == f.nelec


def test_fixture_integral_symmetries():
    f = fixtures.load("lih", 1.6).fcidump
    g = f.two_body
    np.testing.assert_allclose(f.one_body, f.one_body.T, atol=1e-10)
    for perm in ("jikl", "ijlk", "klij"):
        np.testing.assert_allclose(g, np.einsum(f"ijkl->{perm}", g), atol=1e-10)


def test_single_orbital_spin_bookkeeping():
    f = FciDump(1, 2, 0, 0.0, np.zeros((1, 1)), np.full((1, 1, 1, 1), 0.7))
    s = to_spin_orbitals(f)
    nz = {tuple(int(v) for v in idx) for idx in zip(*np.nonzero(s.h2))}
    assert nz == {(0, 0, 0, 0), (0, 1, 1, 0), (1, 0, 0, 1), (1, 1, 1, 1)}
    assert np.all(s.h2[np.nonzero(s.h2)] == 0.7)


def test_h2_mapping_matches_occupation_oracle(h2):
    s = h2.integrals
    np.testing.assert_allclose(to_matrix(h2.hamiltonian), occupation_hamiltonian(s), atol=1e-10)
    assert np.allclose(s.h1, s.h1.T)
    assert len(h2.hamiltonian) == 15


def test_h2_ground_energy_matches_metadata(h2):
    meta = fixtures.load("h2", 0.735).metadata
    e0 = sector_spectrum(h2.hamiltonian, SectorSpec(2, 0.0), 1).eigenvalues[0]
    assert e0 == pytest.approx(meta["reference_ground_ha"], abs=1e-8)


def test_freeze_empty_is_identity(h2):
    assert freeze(h2.integrals, ActiveSpace()) is h2.integrals


def test_freeze_lih_core():
    full = hamiltonian("lih", 1.6)
    act = hamiltonian("lih", 1.6, 1)
    assert act.n_qubits == 10 and act.n_electrons == 2
    e_full = sector_spectrum(full.hamiltonian, SectorSpec(4, 0.0), 1, labels=False).eigenvalues[0]
    e_act = sector_spectrum(act.hamiltonian, SectorSpec(2, 0.0), 1, labels=False).eigenvalues[0]
    assert abs((e_act - e_full) / e_full) < 1e-3


def test_freeze_matches_mean_field_energy():
    # the frozen-core constant plus the active HF energy equals the full HF energy
    f = fixtures.load("lih", 1.6)
    act = hamiltonian("lih", 1.6, 1)
    hf = expectation(basis_state(10, hartree_fock_index(2, 10)), act.hamiltonian)
    assert hf == pytest.approx(f.metadata["hf_energy_ha"], abs=1e-8)


def test_freeze_errors(h2):
    with pytest.raises(ActiveSpaceError):
        ActiveSpace((0,), (0,))
    with pytest.raises(ActiveSpaceError):
        ActiveSpace((1,))
    with pytest.raises(ActiveSpaceError):
        freeze(h2.integrals, ActiveSpace((0, 1)))


def test_number_and_sz_operators():
    n = 4
    N, Sz = number_operator(n), sz_operator(n)
    assert expectation(basis_state(n, 0), N) == 0
    assert expectation(basis_state(n, 0b1111), N) == 4
    # |1010> in (alpha, beta, alpha, beta) order: both alphas occupied
    assert expectation(basis_state(n, 0b0101), Sz) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        sz_operator(3)


def test_s_squared_triplet_and_singlet():
    s2 = to_matrix(s_squared_operator(4))
    up_up = basis_state(4, 0b0101)
    assert np.vdot(up_up, s2 @ up_up).real == pytest.approx(2.0)
    closed = basis_state(4, 0b0011)
    assert np.vdot(closed, s2 @ closed).real == pytest.approx(0.0)


def test_hartree_fock_index():
    assert hartree_fock_index(2, 4) == 0b0011
    assert hartree_fock_index(0, 6) == 0
    psi = basis_state(8, hartree_fock_index(4, 8))
    assert expectation(psi, number_operator(8)) == pytest.approx(4)
    assert expectation(psi, sz_operator(8)) == pytest.approx(0)


@pytest.mark.parametrize("mol, r, frozen", [("h2", 0.735, 0), ("h4", 1.6, 0), ("lih", 1.6, 1)])
def test_hamiltonian_conserves_n_and_sz(mol, r, frozen):
    h = hamiltonian(mol, r, frozen).hamiltonian
    m = to_matrix(h)
    for op in (number_operator(h.n_qubits), sz_operator(h.n_qubits)):
        o = to_matrix(op)
        assert np.linalg.norm(m @ o - o @ m) < 1e-10
    assert all(np.isreal(t.coeff) for t in h)


def test_noop_freeze_keeps_h4_spectrum():
    f = fixtures.load("h4", 1.6).fcidump
    a = molecular_hamiltonian(f).hamiltonian
    b = molecular_hamiltonian(f, ActiveSpace()).hamiltonian
    assert a == b
    assert jordan_wigner(to_spin_orbitals(f)) == a
