"""Exact statevector simulation with adjoint-mode gradients.

A state is a 1-D complex numpy array of length ``2**n``; bit ``j`` of the
index is the occupation of qubit ``j``.

Parameterized gates all have the form ``U(theta) = exp(-i theta A)`` for a
Hermitian generator ``A``:

* ``RY`` / ``RZ``: ``A = Y/2`` / ``Z/2``.
* ``PAULI_ROT``: ``A = coeff * P`` for a Pauli string ``P``.
* ``SINGLE`` / ``DOUBLE`` excitations: ``U = exp(theta (T - T+))`` where
  ``T = Q+_v Q_o`` (single, wires ``(o, v)``) or
  ``T = Q+_v2 Q+_v1 Q_o1 Q_o2`` (double, wires ``(o1, o2, v1, v2)``).  The
  ``fermionic`` flavor replaces ``Q`` with Jordan-Wigner ``a`` operators.
  The gate is a Givens rotation by ``theta`` inside the pair of basis states
  ``|o occupied, v empty>`` / ``|o empty, v occupied>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConsistencyError, DimensionError, UnsupportedError
from .fermion import fermion_to_pauli
from .pauli import PauliString, PauliSum

RY, RZ, CNOT, PAULI_ROT, SINGLE, DOUBLE = "RY", "RZ", "CNOT", "PAULI_ROT", "SINGLE", "DOUBLE"
GATE_KINDS = (RY, RZ, CNOT, PAULI_ROT, SINGLE, DOUBLE)
QUBIT, FERMIONIC = "qubit", "fermionic"
_N_WIRES = {RY: 1, RZ: 1, CNOT: 2, SINGLE: 2, DOUBLE: 4}


@dataclass(frozen=True)
class Gate:
    kind: str
    wires: tuple[int, ...]
    param_slot: int | None = None
    flavor: str | None = None
    pauli: PauliString | None = None
    coeff: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(set(self.wires)) != len(self.wires):
            raise DimensionError(f"repeated wire in {self.wires}")
        if self.kind in _N_WIRES and len(self.wires) != _N_WIRES[self.kind]:
            raise DimensionError(f"{self.kind} takes {_N_WIRES[self.kind]} wires, got {self.wires}")
        if self.kind in (SINGLE, DOUBLE) and self.flavor not in (QUBIT, FERMIONIC):
            raise ValueError("excitation gates need flavor 'qubit' or 'fermionic'")
        if self.kind == PAULI_ROT and self.pauli is None:
            raise ValueError("PAULI_ROT needs a Pauli string")
        if self.kind == CNOT and self.param_slot is not None:
            raise ValueError("CNOT takes no parameter")
        if self.kind != CNOT and self.param_slot is None:
            raise ValueError(f"{self.kind} needs a parameter slot")

    @property
    def parameterized(self) -> bool:
        return self.param_slot is not None

    @property
    def qubits(self) -> tuple[int, ...]:
        if self.kind == PAULI_ROT:
            s = self.pauli
            return tuple(q for q in range(s.n_qubits) if ((s.x | s.z) >> q) & 1)
        return self.wires


@dataclass(frozen=True)
class Circuit:
    """Ordered gates plus layer boundaries (start index of each layer)."""

    n_qubits: int
    gates: tuple[Gate, ...]
    n_params: int
    layer_boundaries: tuple[int, ...] = (0,)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "layer_boundaries", tuple(self.layer_boundaries))
        used = set()
        for g in self.gates:
            if any(not 0 <= w < self.n_qubits for w in g.qubits):
                raise DimensionError(f"gate {g.kind} on {g.wires} outside {self.n_qubits} qubits")
            if g.kind == PAULI_ROT and g.pauli.n_qubits != self.n_qubits:
                raise DimensionError("Pauli rotation string has the wrong qubit count")
            if g.parameterized:
                if not 0 <= g.param_slot < self.n_params:
                    raise ValueError(f"param slot {g.param_slot} outside 0..{self.n_params - 1}")
                used.add(g.param_slot)
        if len(used) != self.n_params:
            raise ValueError("every parameter slot must be used by at least one gate")
        b = self.layer_boundaries
        if self.gates and (not b or b[0] != 0):
            raise ValueError("layer boundaries must start at 0")
        if any(b2 <= b1 for b1, b2 in zip(b, b[1:])) or (b and b[-1] > max(len(self.gates) - 1, 0)):
            raise ValueError("layer boundaries must be strictly increasing gate indices")

    @property
    def layers(self) -> list[range]:
        b = list(self.layer_boundaries) + [len(self.gates)]
        return [range(b[i], b[i + 1]) for i in range(len(b) - 1)] if self.gates else []

    @classmethod
    def empty(cls, n_qubits: int) -> Circuit:
        return cls(n_qubits, (), 0, ())


# --------------------------------------------------------------------------
# kernels


def _popcount_parity(arr):
    return (np.bitwise_count(arr) & 1).astype(np.int64)


class _Kernel:
    def apply(self, psi, theta):
        raise NotImplementedError

    def tangent(self, psi):
        """``-i A psi``: derivative of ``U(theta) psi0`` given ``psi = U psi0``."""
        return -1j * self.generator(psi)

    def generator(self, psi):
        raise NotImplementedError


class _ExcitationKernel(_Kernel):
    def __init__(self, gate: Gate, n: int):
        w = gate.wires
        half = len(w) // 2
        occ, virt = w[:half], w[half:]
        from_mask = sum(1 << q for q in occ)
        to_mask = sum(1 << q for q in virt)
        idx = np.arange(1 << n, dtype=np.int64)
        self.src = idx[((idx & from_mask) == from_mask) & ((idx & to_mask) == 0)]
        self.dst = self.src ^ (from_mask | to_mask)
        if gate.flavor == FERMIONIC:
            # T = a+_v.. a_o.. applied right to left; each factor picks up the
            # parity of occupied modes below it
            ops = list(reversed(occ)) + list(virt)
            b = self.src.copy()
            sign = np.ones(len(b))
            for q in ops:
                sign *= 1 - 2 * _popcount_parity(b & ((1 << q) - 1))
                b = b ^ (1 << q)
            self.sign = sign
        else:
            self.sign = np.ones(len(self.src))

    def apply(self, psi, theta):
        c, s = np.cos(theta), np.sin(theta)
        a = psi[self.src]
        b = psi[self.dst]
        out = psi.copy()
        out[self.src] = c * a - (s * self.sign) * b
        out[self.dst] = c * b + (s * self.sign) * a
        return out

    def tangent(self, psi):
        out = np.zeros_like(psi)
        out[self.dst] = self.sign * psi[self.src]
        out[self.src] = -self.sign * psi[self.dst]
        return out

    def generator(self, psi):
        return 1j * self.tangent(psi)


class _PauliKernel(_Kernel):
    """``exp(-i theta coeff P)``; also covers RY/RZ with ``coeff = 1/2``."""

    def __init__(self, pauli: PauliString, coeff: float, n: int):
        idx = np.arange(1 << n, dtype=np.int64)
        self.perm = idx ^ pauli.x
        src = self.perm
        phase = (1j ** (pauli.x & pauli.z).bit_count()) * (1 - 2 * _popcount_parity(src & pauli.z))
        self.phase = phase.astype(complex)
        self.coeff = coeff

    def pauli_apply(self, psi):
        return self.phase * psi[self.perm]

    def apply(self, psi, theta):
        a = self.coeff * theta
        return np.cos(a) * psi - 1j * np.sin(a) * self.pauli_apply(psi)

    def generator(self, psi):
        return self.coeff * self.pauli_apply(psi)


class _CnotKernel(_Kernel):
    def __init__(self, control: int, target: int, n: int):
        idx = np.arange(1 << n, dtype=np.int64)
        self.perm = np.where((idx >> control) & 1, idx ^ (1 << target), idx)

    def apply(self, psi, theta=None):
        return psi[self.perm]


@lru_cache(maxsize=4096)
def _kernel(gate: Gate, n: int) -> _Kernel:
    if gate.kind in (SINGLE, DOUBLE):
        return _ExcitationKernel(gate, n)
    if gate.kind == RY:
        return _PauliKernel(PauliString.from_ops(n, {gate.wires[0]: "Y"}), 0.5, n)
    if gate.kind == RZ:
        return _PauliKernel(PauliString.from_ops(n, {gate.wires[0]: "Z"}), 0.5, n)
    if gate.kind == PAULI_ROT:
        return _PauliKernel(gate.pauli, gate.coeff, n)
    return _CnotKernel(gate.wires[0], gate.wires[1], n)


def excitation_generator(gate: Gate, n_qubits: int) -> PauliSum:
    """Hermitian ``A`` with gate ``= exp(-i theta A)`` as a Pauli sum."""
    if gate.kind in (RY, RZ):
        letter = "Y" if gate.kind == RY else "Z"
        return PauliSum.from_terms(n_qubits, [(0.5, PauliString.from_ops(n_qubits, {gate.wires[0]: letter}))])
    if gate.kind == PAULI_ROT:
        return PauliSum.from_terms(n_qubits, [(gate.coeff, gate.pauli)])
    if gate.kind not in (SINGLE, DOUBLE):
        raise UnsupportedError(f"{gate.kind} has no generator")
    w = gate.wires
    if gate.kind == SINGLE:
        o, v = w
        t = [(v, True), (o, False)]
        t_dag = [(o, True), (v, False)]
    else:
        o1, o2, v1, v2 = w
        t = [(v2, True), (v1, True), (o1, False), (o2, False)]
        t_dag = [(o2, True), (o1, True), (v1, False), (v2, False)]
    # A = i (T - T+)
    return fermion_to_pauli(n_qubits, [(1j, t), (-1j, t_dag)], parity=gate.flavor == FERMIONIC)


# --------------------------------------------------------------------------
# states and circuits


def n_qubits_of(state: np.ndarray) -> int:
    n = int(state.shape[0]).bit_length() - 1
    if state.ndim != 1 or 1 << n != state.shape[0]:
        raise DimensionError(f"state length {state.shape} is not a power of two")
    return n


def basis_state(n_qubits: int, index: int) -> np.ndarray:
    if not 0 <= index < 1 << n_qubits:
        raise DimensionError(f"basis index {index} out of range for {n_qubits} qubits")
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[index] = 1.0
    return psi


def _initial(circuit_or_n, initial) -> np.ndarray:
    n = circuit_or_n if isinstance(circuit_or_n, int) else circuit_or_n.n_qubits
    if isinstance(initial, (int, np.integer)):
        return basis_state(n, int(initial))
    psi = np.asarray(initial, dtype=complex)
    if psi.shape != (1 << n,):
        raise DimensionError(f"initial state has length {psi.shape[0]}, expected {1 << n}")
    return psi.copy()


def apply_gate(state: np.ndarray, gate: Gate, params: Sequence[float] | None = None) -> np.ndarray:
    n = n_qubits_of(state)
    if any(not 0 <= w < n for w in gate.qubits):
        raise DimensionError(f"gate wires {gate.wires} outside {n} qubits")
    theta = None if gate.param_slot is None else float(params[gate.param_slot])
    return _kernel(gate, n).apply(state, theta)


def _check_params(circuit: Circuit, params) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.n_params,):
        raise DimensionError(f"expected {circuit.n_params} parameters, got {params.shape}")
    return params


def run(circuit: Circuit, params, initial=0) -> np.ndarray:
    """Apply the circuit to a basis index or state vector."""
    params = _check_params(circuit, params)
    psi = _initial(circuit, initial)
    n = circuit.n_qubits
    for g in circuit.gates:
        theta = None if g.param_slot is None else params[g.param_slot]
        psi = _kernel(g, n).apply(psi, theta)
    return psi


# --------------------------------------------------------------------------
# observables


class PauliAction:
    """Sparse matrix of a Pauli sum assembled from per-term bit-flip actions.

    Terms sharing an X mask act as one permutation times a diagonal, so the
    sum collapses to ``sum_x diag_x * psi[idx ^ x]``.
    """

    def __init__(self, h: PauliSum):
        n = h.n_qubits
        dim = 1 << n
        idx = np.arange(dim, dtype=np.int64)
        x, z, c = h.arrays
        rows, cols, vals = [], [], []
        for xm in np.unique(x):
            sel = x == xm
            diag = np.zeros(dim, dtype=complex)
            for zm, cm in zip(z[sel], c[sel]):
                # <a| P |a^x> = i^{|x z|} (-1)^{|z & (a ^ x)|}
                diag += cm * (1j ** int(xm & zm).bit_count()) * (1 - 2 * _popcount_parity((idx ^ xm) & zm))
            rows.append(idx)
            cols.append(idx ^ xm)
            vals.append(diag)
        if rows:
            self.matrix = sp.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim))
        else:
            self.matrix = sp.csr_matrix((dim, dim), dtype=complex)
        self.n_qubits = n
        self.scale = float(np.abs(c).sum()) if len(c) else 0.0

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return self.matrix @ psi


def action(h: PauliSum) -> PauliAction:
    cached = h.__dict__.get("_action")
    if cached is None:
        cached = PauliAction(h)
        h.__dict__["_action"] = cached
    return cached


def _check_dims(state: np.ndarray, h: PauliSum):
    if state.shape != (1 << h.n_qubits,):
        raise DimensionError(f"state of length {state.shape[0]} vs {h.n_qubits}-qubit operator")


def _real(value: complex, scale: float) -> float:
    if abs(value.imag) > 1e-10 * max(1.0, scale):
        raise ConsistencyError(f"expectation has imaginary part {value.imag:.3e}")
    return float(value.real)


def expectation(state: np.ndarray, h: PauliSum) -> float:
    _check_dims(state, h)
    act = action(h)
    return _real(np.vdot(state, act.apply(state)), act.scale)


def variance(state: np.ndarray, h: PauliSum) -> float:
    """``<H^2> - <H>^2`` from one application of ``H``."""
    _check_dims(state, h)
    act = action(h)
    hpsi = act.apply(state)
    mean = _real(np.vdot(state, hpsi), act.scale)
    return float(np.vdot(hpsi, hpsi).real) - mean * mean


def overlap(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise DimensionError(f"states of shape {a.shape} and {b.shape}")
    return float(abs(np.vdot(a, b)) ** 2)


# --------------------------------------------------------------------------
# losses and gradients


@dataclass(frozen=True)
class ExpectationTerm:
    """``weight * <psi_m|O|psi_m>``, or ``weight * sqrt(<O>)`` when ``sqrt``."""

    operator: PauliSum
    weight: float = 1.0
    state: int = 0
    sqrt: bool = False


@dataclass(frozen=True, eq=False)
class OverlapTerm:
    """``weight * |<ref|psi_m>|^2`` against a fixed reference state."""

    reference: np.ndarray
    weight: float
    state: int = 0


@dataclass(frozen=True, eq=False)
class Loss:
    """Sum of expectation and overlap terms over circuit outputs.

    ``inputs`` lists the initial states (basis indices or vectors); output
    ``m`` is the circuit applied to ``inputs[m]``.
    """

    inputs: tuple
    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if not isinstance(t, (ExpectationTerm, OverlapTerm)):
                raise UnsupportedError(f"unsupported loss term {type(t).__name__}")
            if not 0 <= t.state < len(self.inputs):
                raise ValueError(f"loss term refers to missing input {t.state}")


def _costates(loss: Loss, states: list[np.ndarray]):
    value = 0.0
    lam = [np.zeros_like(s) for s in states]
    for t in loss.terms:
        psi = states[t.state]
        if isinstance(t, ExpectationTerm):
            _check_dims(psi, t.operator)
            act = action(t.operator)
            opsi = act.apply(psi)
            e = _real(np.vdot(psi, opsi), act.scale)
            if t.sqrt:
                if e <= 0.0:
                    raise UnsupportedError("square-root loss is not differentiable at <O> <= 0")
                root = np.sqrt(e)
                value += t.weight * root
                lam[t.state] += (t.weight / (2 * root)) * opsi
            else:
                value += t.weight * e
                lam[t.state] += t.weight * opsi
        else:
            amp = np.vdot(t.reference, psi)
            value += t.weight * abs(amp) ** 2
            lam[t.state] += (t.weight * amp) * t.reference
    return value, lam


def evaluate(circuit: Circuit, params, loss: Loss) -> tuple[float, list[np.ndarray]]:
    """Loss value and the output state for each input."""
    states = [run(circuit, params, init) for init in loss.inputs]
    value, _ = _costates(loss, states)
    return value, states


def value_and_gradient(circuit: Circuit, params, loss: Loss) -> tuple[float, np.ndarray]:
    """Exact loss gradient by adjoint back-propagation through the gates.

    With ``lambda = dL/d<psi|`` the derivative is ``2 Re <lambda|d psi>``;
    ``lambda`` and ``psi`` are walked backwards by inverting each gate.
    """
    params = _check_params(circuit, params)
    n = circuit.n_qubits
    kernels = [_kernel(g, n) for g in circuit.gates]
    states = [run(circuit, params, init) for init in loss.inputs]
    value, lams = _costates(loss, states)
    grad = np.zeros(circuit.n_params)
    for psi, lam in zip(states, lams):
        if not lam.any():
            continue
        for g, k in zip(reversed(circuit.gates), reversed(kernels)):
            if g.param_slot is None:
                inv = _inverse_perm(k)
                psi, lam = psi[inv], lam[inv]
                continue
            theta = params[g.param_slot]
            grad[g.param_slot] += 2.0 * np.vdot(lam, k.tangent(psi)).real
            psi = k.apply(psi, -theta)
            lam = k.apply(lam, -theta)
    return value, grad


def _inverse_perm(k: _CnotKernel):
    # CNOT is an involution
    return k.perm


def gradient(circuit: Circuit, params, loss: Loss) -> np.ndarray:
    return value_and_gradient(circuit, params, loss)[1]


def layer_states(circuit: Circuit, params, initial=0) -> list[np.ndarray]:
    """State entering each layer (before its first gate)."""
    params = _check_params(circuit, params)
    psi = _initial(circuit, initial)
    out = []
    n = circuit.n_qubits
    for layer in circuit.layers:
        out.append(psi)
        for gi in layer:
            g = circuit.gates[gi]
            theta = None if g.param_slot is None else params[g.param_slot]
            psi = _kernel(g, n).apply(psi, theta)
    return out


def generator_apply(gate: Gate, n_qubits: int, psi: np.ndarray) -> np.ndarray:
    """``A psi`` for the gate generator ``A``."""
    if not gate.parameterized:
        raise UnsupportedError(f"{gate.kind} has no generator")
    return _kernel(gate, n_qubits).generator(psi)
