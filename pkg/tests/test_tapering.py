import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from excited_vqe.ansatz import qccsd
from excited_vqe.drivers import StoppingRule, vqe
from excited_vqe.errors import UnsupportedError
from excited_vqe.fermion import hartree_fock_index
from excited_vqe.optimizers import OptimizerConfig
from excited_vqe.pauli import PauliString, PauliSum, commutes, to_matrix
from excited_vqe.simulator import basis_state, expectation, run
from excited_vqe.tapering import (Z2Symmetries, check_symmetries, find_symmetries, sector_of,
                                  taper, taper_basis_index, taper_circuit, taper_hamiltonian,
                                  taper_parameters)

from conftest import hamiltonian


def spectrum(h):
    return np.linalg.eigvalsh(to_matrix(h))


def contained(sub, full, tol=1e-9):
    return all(np.min(np.abs(full - e)) <= tol for e in sub)


def all_sectors(syms):
    return itertools.product((1, -1), repeat=len(syms))


def z_kernel_dimension(h):
    """Brute force: count Z-type strings commuting with every term."""
    n = h.n_qubits
    count = sum(all(commutes(PauliString(n, 0, v), t.string) for t in h) for v in range(1 << n))
    return int(np.log2(count))


def test_two_qubit_toy():
    h = PauliSum.from_dict(2, {"ZZ": 1.0, "XX": 0.5})
    syms = find_symmetries(h)
    assert [g.label for g in syms.generators] == ["ZZ"]
    assert z_kernel_dimension(h) == 1
    res = taper(h, syms, (1,))
    assert res.reduced.n_qubits == 1 and len(res.removed_qubits) == 1
    assert contained(spectrum(res.reduced), spectrum(h))


def test_single_x_term():
    syms = find_symmetries(PauliSum.from_dict(2, {"XI": 1.0}))
    x0 = PauliString.from_label("XI")
    assert all(commutes(g, x0) for g in syms.generators)
    assert [g.label for g in syms.generators] == ["IZ"]


def test_identity_hamiltonian_keeps_constant():
    h = PauliSum.identity(3, 2.5)
    syms = find_symmetries(h)
    assert len(syms) == 2
    for sector in all_sectors(syms):
        assert taper(h, syms, sector).reduced.constant == 2.5


def test_lih_reduces_to_six_qubits(lih_active):
    h = lih_active.hamiltonian
    syms = find_symmetries(h)
    assert len(syms) == 4 and check_symmetries(h, syms)
    assert z_kernel_dimension(h) == 4
    full = spectrum(h)
    for sector in all_sectors(syms):
        red = taper(h, syms, sector).reduced
        assert red.n_qubits == 6
        assert contained(spectrum(red), full)


@pytest.mark.parametrize("mol, r", [("h2", 0.735), ("h4", 1.6)])
def test_sector_spectra_union_is_full_spectrum(mol, r):
    h = hamiltonian(mol, r).hamiltonian
    syms = find_symmetries(h)
    parts = np.concatenate([spectrum(taper(h, syms, s).reduced) for s in all_sectors(syms)])
    np.testing.assert_allclose(np.sort(parts), spectrum(h), atol=1e-9)


def test_sector_of_examples():
    syms = Z2Symmetries(2, (PauliString.from_label("ZZ"),), (1,))
    assert sector_of(0, syms) == (1,)
    assert sector_of(0b11, syms) == (1,)
    assert sector_of(0b01, syms) == (-1,)
    with pytest.raises(UnsupportedError):
        sector_of(0, Z2Symmetries(1, (PauliString.from_label("Y"),), (0,)))


def test_pairing_is_validated():
    zz = PauliString.from_label("ZZ")
    with pytest.raises(ValueError):
        Z2Symmetries(2, (zz, zz), (0, 1))


def test_hf_sector_keeps_ground_energy(lih_active):
    h = lih_active.hamiltonian
    prob = taper_hamiltonian(h, hartree_fock_index(2, 10))
    assert prob.result.sector == (1, 1, -1, -1)
    assert prob.result.removed_qubits == (5, 7, 8, 9)
    assert spectrum(prob.hamiltonian)[0] == pytest.approx(spectrum(h)[0], abs=1e-9)
    # the reference state maps to the reduced reference with the same energy
    e_full = expectation(basis_state(10, hartree_fock_index(2, 10)), h)
    e_red = expectation(basis_state(6, prob.reference_index), prob.hamiltonian)
    assert e_red == pytest.approx(e_full, abs=1e-12)


def test_tapered_vqe_matches_untapered_on_h2(h2):
    h = h2.hamiltonian
    hf = hartree_fock_index(2, 4)
    cfg, stop = OptimizerConfig("gd", 0.3), StoppingRule(1e-12, 400)
    full = vqe(h, qccsd(4, 2), hf, cfg, stop)
    prob = taper_hamiltonian(h, hf)
    c = taper_circuit(qccsd(4, 2), prob.result.symmetries, prob.result.sector)
    red = vqe(prob.hamiltonian, c, prob.reference_index, cfg, stop)
    assert prob.hamiltonian.n_qubits == 1
    assert red.energies[0] == pytest.approx(full.energies[0], abs=1e-6)


def test_tapered_circuit_reproduces_energies(lih_active, rng):
    h = lih_active.hamiltonian
    hf = hartree_fock_index(2, 10)
    prob = taper_hamiltonian(h, hf)
    syms, sector = prob.result.symmetries, prob.result.sector
    c = qccsd(10, 2, 2)
    ct = taper_circuit(c, syms, sector)
    kept = taper_parameters(c, syms, sector, np.arange(c.n_params)).astype(int)
    params = np.zeros(c.n_params)
    params[kept] = rng.uniform(-1, 1, len(kept))
    e_full = expectation(run(c, params, hf), h)
    e_red = expectation(run(ct, params[kept], prob.reference_index), prob.hamiltonian)
    assert e_red == pytest.approx(e_full, abs=1e-10)
    assert ct.layer_boundaries[0] == 0 and len(ct.layer_boundaries) == 2


def test_basis_index_drops_removed_bits():
    syms = Z2Symmetries(3, (PauliString.from_label("ZIZ"),), (2,))
    assert taper_basis_index(0b011, syms) == 0b11
    assert taper_basis_index(0b101, syms) == 0b01


@st.composite
def symmetric_sums(draw):
    """Random sums built from a few Pauli strings; often have Z2 symmetries."""
    n = draw(st.integers(2, 5))
    k = draw(st.integers(1, 6))
    labels = [draw(st.text(alphabet="IXYZ", min_size=n, max_size=n)) for _ in range(k)]
    coeffs = [draw(st.floats(0.1, 2.0)) for _ in range(k)]
    return PauliSum.from_terms(n, list(zip(coeffs, labels)))


@settings(max_examples=40, deadline=None)
@given(symmetric_sums())
def test_random_sums_taper_consistently(h):
    syms = find_symmetries(h)
    assert check_symmetries(h, syms)
    assert len(syms) == min(z_kernel_dimension(h), h.n_qubits - 1)
    full = spectrum(h)
    parts = []
    for sector in all_sectors(syms):
        red = taper(h, syms, sector).reduced
        assert red.n_qubits == h.n_qubits - len(syms)
        parts.append(spectrum(red))
    np.testing.assert_allclose(np.sort(np.concatenate(parts)), full, atol=1e-9)
