import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from excited_vqe.ansatz import qccsd, strongly_entangled, uccsd
from excited_vqe.errors import DimensionError, UnsupportedError
from excited_vqe.fermion import hartree_fock_index, number_operator, sz_operator
from excited_vqe.pauli import PauliString, PauliSum, fold, to_matrix
from excited_vqe.simulator import (CNOT, DOUBLE, FERMIONIC, PAULI_ROT, QUBIT, RY, RZ, SINGLE,
                                   Circuit, ExpectationTerm, Gate, Loss, OverlapTerm, apply_gate,
                                   basis_state, evaluate, excitation_generator, expectation,
                                   gradient, overlap, run, value_and_gradient, variance)

from conftest import hamiltonian, occupation_annihilator, random_state


def dense_excitation(n, wires, flavor):
    """exp(T - T+) generator from occupation-basis ladder matrices."""
    par = flavor == FERMIONIC
    a = {q: occupation_annihilator(n, q, par) for q in wires}
    if len(wires) == 2:
        o, v = wires
        t = a[v].T @ a[o]
    else:
        o1, o2, v1, v2 = wires
        t = a[v2].T @ a[v1].T @ a[o1] @ a[o2]
    return t - t.T


def finite_difference(circuit, params, loss, h=1e-5):
    out = np.zeros(len(params))
    for j in range(len(params)):
        e = np.zeros(len(params))
        e[j] = h
        out[j] = (evaluate(circuit, params + e, loss)[0] - evaluate(circuit, params - e, loss)[0]) / (2 * h)
    return out


def single(wires, flavor=QUBIT):
    return Gate(SINGLE, wires, 0, flavor)


def test_single_excitation_zero_angle_is_identity(rng):
    psi = random_state(rng, 3)
    np.testing.assert_allclose(apply_gate(psi, single((0, 2)), [0.0]), psi, atol=1e-15)


def test_single_excitation_quarter_turn():
    # wire 0 occupied -> wire 1 occupied, with a + sign
    out = apply_gate(basis_state(2, 0b01), single((0, 1)), [np.pi / 2])
    np.testing.assert_allclose(out, basis_state(2, 0b10), atol=1e-15)


def test_fermionic_single_against_expm(rng):
    psi = random_state(rng, 4)
    gen = dense_excitation(4, (0, 3), FERMIONIC)
    expected = sla.expm(0.3 * gen) @ psi
    np.testing.assert_allclose(apply_gate(psi, single((0, 3), FERMIONIC), [0.3]), expected, atol=1e-12)


@st.composite
def excitation_gates(draw):
    n = draw(st.integers(4, 6))
    k = draw(st.sampled_from([2, 4]))
    wires = draw(st.permutations(range(n)))[:k]
    flavor = draw(st.sampled_from([QUBIT, FERMIONIC]))
    return n, Gate(SINGLE if k == 2 else DOUBLE, tuple(wires), 0, flavor)


@settings(max_examples=60, deadline=None)
@given(excitation_gates(), st.floats(-3, 3, allow_nan=False), st.integers(0, 2**32 - 1))
def test_excitation_kernels_match_expm(ng, theta, seed):
    n, g = ng
    psi = random_state(np.random.default_rng(seed), n)
    expected = sla.expm(theta * dense_excitation(n, g.wires, g.flavor)) @ psi
    np.testing.assert_allclose(apply_gate(psi, g, [theta]), expected, atol=1e-12)
    # the exported generator obeys U = exp(-i theta A)
    a = to_matrix(excitation_generator(g, n))
    np.testing.assert_allclose(sla.expm(-1j * theta * a) @ psi, expected, atol=1e-12)


def test_rotations_and_pauli_rotation(rng):
    psi = random_state(rng, 2)
    y0 = to_matrix(PauliString.from_label("YI"))
    np.testing.assert_allclose(apply_gate(psi, Gate(RY, (0,), 0), [0.7]),
                               sla.expm(-0.35j * y0) @ psi, atol=1e-13)
    z1 = to_matrix(PauliString.from_label("IZ"))
    np.testing.assert_allclose(apply_gate(psi, Gate(RZ, (1,), 0), [0.7]),
                               sla.expm(-0.35j * z1) @ psi, atol=1e-13)
    p = PauliString.from_label("XY")
    g = Gate(PAULI_ROT, (0, 1), 0, pauli=p, coeff=-0.5)
    np.testing.assert_allclose(apply_gate(psi, g, [1.1]),
                               sla.expm(0.55j * to_matrix(p)) @ psi, atol=1e-13)


def test_two_gate_circuit_against_dense(rng):
    c = Circuit(3, (Gate(RY, (0,), 0), Gate(CNOT, (0, 2))), 1)
    psi = random_state(rng, 3)
    ry = sla.expm(-0.5j * 0.4 * to_matrix(PauliString.from_label("YII")))
    cnot = np.zeros((8, 8))
    for i in range(8):
        cnot[i ^ 4 if i & 1 else i, i] = 1
    np.testing.assert_allclose(run(c, [0.4], psi), cnot @ ry @ psi, atol=1e-12)


def test_run_basics(rng):
    psi = random_state(rng, 3)
    np.testing.assert_array_equal(run(Circuit.empty(3), [], psi), psi)
    c = qccsd(8, 4, 2)
    hf = hartree_fock_index(4, 8)
    np.testing.assert_array_equal(run(c, np.zeros(c.n_params), hf), basis_state(8, hf))
    with pytest.raises(DimensionError):
        run(c, np.zeros(c.n_params + 1), hf)


def test_gate_validation():
    with pytest.raises(DimensionError):
        Gate(DOUBLE, (0, 1, 2), 0, QUBIT)
    with pytest.raises(DimensionError):
        Gate(SINGLE, (1, 1), 0, QUBIT)
    with pytest.raises(DimensionError):
        Circuit(2, (Gate(SINGLE, (0, 2), 0, QUBIT),), 1)
    with pytest.raises(ValueError):
        Circuit(2, (Gate(RY, (0,), 1),), 1)
    with pytest.raises(DimensionError):
        apply_gate(basis_state(2, 0), Gate(RY, (3,), 0), [0.1])


def test_expectation_examples(rng):
    z = PauliSum.from_dict(1, {"Z": 1.0})
    plus = np.array([1, 1]) / np.sqrt(2)
    assert expectation(basis_state(1, 0), z) == 1.0
    assert expectation(plus.astype(complex), z) == pytest.approx(0.0, abs=1e-15)
    letters = np.array(list("IXYZ"))
    h = PauliSum.from_terms(5, [(rng.normal(), "".join(rng.choice(letters, 5))) for _ in range(10)])
    psi = random_state(rng, 5)
    assert expectation(psi, h) == pytest.approx(np.vdot(psi, to_matrix(h) @ psi).real, abs=1e-10)
    with pytest.raises(DimensionError):
        expectation(basis_state(2, 0), z)


def test_variance_examples():
    z = PauliSum.from_dict(1, {"Z": 1.0})
    assert variance(basis_state(1, 1), z) == pytest.approx(0.0)
    plus = (np.array([1, 1]) / np.sqrt(2)).astype(complex)
    assert variance(plus, z) == pytest.approx(1.0)


def test_overlap_examples(rng):
    a, b = random_state(rng, 3), random_state(rng, 3)
    assert overlap(a, a) == pytest.approx(1.0)
    assert overlap(basis_state(1, 0), basis_state(1, 1)) == 0.0
    assert overlap(a, b) == pytest.approx(abs(np.vdot(a, b)) ** 2, abs=1e-12)
    with pytest.raises(DimensionError):
        overlap(a, basis_state(2, 0))


def test_fold_expectation_two_paths(rng):
    h = hamiltonian("h4", 1.6).hamiltonian
    psi = random_state(rng, 8)
    omega = -1.0
    direct = variance(psi, h) + (expectation(psi, h) - omega) ** 2
    assert expectation(psi, fold(h, omega)) == pytest.approx(direct, abs=1e-9)


def test_ry_gradient_closed_form():
    c = Circuit(1, (Gate(RY, (0,), 0),), 1)
    loss = Loss((0,), [ExpectationTerm(PauliSum.from_dict(1, {"Z": 1.0}))])
    assert gradient(c, [0.0], loss)[0] == pytest.approx(0.0, abs=1e-15)
    assert gradient(c, [np.pi / 2], loss)[0] == pytest.approx(-1.0)


def _loss_families(h, n, ne, rng):
    hf = hartree_fock_index(ne, n)
    ref = random_state(rng, n)
    other = hf ^ 0b11 << ne - 1  # a different basis state in the same particle sector
    f = fold(h, -1.0)
    return {
        "energy": Loss((hf,), [ExpectationTerm(h)]),
        "folded": Loss((hf,), [ExpectationTerm(f)]),
        "folded_sqrt": Loss((hf,), [ExpectationTerm(f, 1.0, 0, sqrt=True)]),
        "deflation": Loss((hf,), [ExpectationTerm(h), OverlapTerm(ref, 3.0)]),
        "weighted": Loss((hf, other), [ExpectationTerm(h, 1.0, 0), ExpectationTerm(h, 0.5, 1)]),
        "penalty": Loss((hf,), [ExpectationTerm(h), ExpectationTerm(sz_operator(n) @ sz_operator(n))]),
    }


@pytest.mark.parametrize("make", [qccsd, uccsd])
def test_gradient_matches_finite_differences_h4(make, rng):
    h = hamiltonian("h4", 1.6).hamiltonian
    c = make(8, 4, 2)
    params = rng.uniform(-0.5, 0.5, c.n_params)
    for name, loss in _loss_families(h, 8, 4, rng).items():
        fd = finite_difference(c, params, loss)
        g = gradient(c, params, loss)
        assert np.max(np.abs(g - fd)) <= 1e-6 * max(1.0, np.max(np.abs(fd))), name


def test_gradient_strongly_entangled(rng):
    h = hamiltonian("h2", 0.735).hamiltonian
    c = strongly_entangled(4, 2)
    params = rng.uniform(-np.pi, np.pi, c.n_params)
    loss = Loss((0b0011,), [ExpectationTerm(h), OverlapTerm(random_state(rng, 4), 2.0)])
    assert np.max(np.abs(gradient(c, params, loss) - finite_difference(c, params, loss))) <= 1e-6


def test_loss_validation():
    with pytest.raises(UnsupportedError):
        Loss((0,), ["not a term"])
    with pytest.raises(ValueError):
        Loss((0,), [ExpectationTerm(PauliSum.identity(1), 1.0, state=1)])


def test_sqrt_loss_rejects_nonpositive():
    c = Circuit(1, (Gate(RY, (0,), 0),), 1)
    loss = Loss((0,), [ExpectationTerm(PauliSum.from_dict(1, {"Z": -1.0}), sqrt=True)])
    with pytest.raises(UnsupportedError):
        value_and_gradient(c, [0.0], loss)


def test_norm_preserved_over_long_sequence(rng):
    n = 4
    gates = []
    for i in range(10_000):
        kind = rng.integers(5)
        w = tuple(int(q) for q in rng.permutation(n))
        if kind == 0:
            gates.append(Gate(RY, w[:1], i))
        elif kind == 1:
            gates.append(Gate(RZ, w[:1], i))
        elif kind == 2:
            gates.append(Gate(SINGLE, w[:2], i, FERMIONIC))
        elif kind == 3:
            gates.append(Gate(DOUBLE, w, i, QUBIT))
        else:
            gates.append(Gate(PAULI_ROT, (), i, pauli=PauliString.from_label("XYZI"), coeff=0.5))
    c = Circuit(n, gates, len(gates))
    psi = run(c, rng.uniform(-np.pi, np.pi, len(gates)), 0b0101)
    assert abs(np.vdot(psi, psi).real - 1) <= 1e-9


@settings(max_examples=30, deadline=None)
@given(excitation_gates(), st.floats(-3, 3, allow_nan=False), st.integers(0, 2**32 - 1))
def test_excitations_conserve_particle_number(ng, theta, seed):
    n, g = ng
    psi = random_state(np.random.default_rng(seed), n)
    N = number_operator(n)
    assert expectation(apply_gate(psi, g, [theta]), N) == pytest.approx(expectation(psi, N), abs=1e-10)
