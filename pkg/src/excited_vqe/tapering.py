"""Z2 qubit tapering.

Symmetries are Z-type strings ``Z^v`` commuting with every Hamiltonian term,
i.e. vectors ``v`` in the GF(2) null space of the matrix whose rows are the
terms' X masks.  Each generator ``tau_i`` is paired with a qubit ``q_i`` that
it covers and no other generator does, so ``X_{q_i}`` anticommutes with
``tau_i`` only.  Conjugating by ``U = prod_i (X_{q_i} + tau_i)/sqrt(2)`` turns
``tau_i`` into ``X_{q_i}``; every term then acts on ``q_i`` by ``I`` or ``X``
and the ``X`` is replaced by the sector sign.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DimensionError, UnsupportedError
from .pauli import DROP_TOL, PauliString, PauliSum, commutes, multiply
from .simulator import DOUBLE, PAULI_ROT, SINGLE, Circuit, Gate, excitation_generator


@dataclass(frozen=True)
class Z2Symmetries:
    n_qubits: int
    generators: tuple[PauliString, ...]
    chosen_qubits: tuple[int, ...]

    def __post_init__(self):
        if len(self.generators) != len(self.chosen_qubits):
            raise ValueError("need one chosen qubit per generator")
        for i, (g, q) in enumerate(zip(self.generators, self.chosen_qubits)):
            for j, g2 in enumerate(self.generators):
                if ((g2.z >> q) & 1) != (i == j):
                    raise ValueError(f"qubit {q} does not pair uniquely with generator {i}")

    @property
    def removed_qubits(self) -> tuple[int, ...]:
        return tuple(sorted(self.chosen_qubits))

    def __len__(self) -> int:
        return len(self.generators)


@dataclass(frozen=True)
class TaperingResult:
    reduced: PauliSum
    sector: tuple[int, ...]
    removed_qubits: tuple[int, ...]
    symmetries: Z2Symmetries


def _rref(rows: list[int], n: int) -> tuple[list[int], list[int]]:
    """Reduced row echelon form over GF(2), pivoting on the lowest column first."""
    rows = [r for r in rows if r]
    pivots = []
    r = 0
    for col in range(n):
        bit = 1 << col
        k = next((i for i in range(r, len(rows)) if rows[i] & bit), None)
        if k is None:
            continue
        rows[r], rows[k] = rows[k], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i] & bit:
                rows[i] ^= rows[r]
        pivots.append(col)
        r += 1
    return rows[:r], pivots


def find_symmetries(h: PauliSum) -> Z2Symmetries:
    """Z-type symmetry generators from the null space of the term X masks."""
    n = h.n_qubits
    x, _, _ = h.arrays
    rows, pivots = _rref([int(v) for v in np.unique(x)], n)
    free = [c for c in range(n) if c not in pivots]
    if len(free) == n:
        # purely diagonal operator: keep one qubit so the result stays an operator
        free = free[:-1]
    gens = []
    for f in free:
        v = 1 << f
        for row, p in zip(rows, pivots):
            if (row >> f) & 1:
                v |= 1 << p
        gens.append(PauliString(n, 0, v))
    # each generator is the only one touching its free column
    return Z2Symmetries(n, tuple(gens), tuple(free))


def check_symmetries(h: PauliSum, syms: Z2Symmetries) -> bool:
    """Exact symplectic check: generators commute pairwise and with every term."""
    for g in syms.generators:
        if not all(commutes(g, t.string) for t in h.terms):
            return False
        if not all(commutes(g, g2) for g2 in syms.generators):
            return False
    return True


def sector_of(state_index: int, syms: Z2Symmetries) -> tuple[int, ...]:
    """Eigenvalue of each Z-type generator on a computational basis state."""
    out = []
    for g in syms.generators:
        if not g.is_z_type:
            raise UnsupportedError("sector_of needs Z-type generators")
        out.append(-1 if (int(state_index) & g.z).bit_count() % 2 else 1)
    return tuple(out)


def _remove_bits(value: int, removed: tuple[int, ...], n: int) -> int:
    out = 0
    k = 0
    for q in range(n):
        if q in removed:
            continue
        out |= ((value >> q) & 1) << k
        k += 1
    return out


def taper_string(s: PauliString, syms: Z2Symmetries, sector) -> tuple[int, PauliString]:
    """Conjugate one string and substitute sector signs: returns ``(sign, reduced)``."""
    n = syms.n_qubits
    phase = 1 + 0j
    # U_i P U_i^+ = P when P commutes with tau_i; otherwise P anticommutes with
    # X_{q_i} too and the image is P tau_i X_{q_i} times the phase fix-up below
    for g, q in zip(syms.generators, syms.chosen_qubits):
        if not commutes(s, g):
            raise ConsistencyError(f"{s.label} does not commute with symmetry {g.label}")
        xq = PauliString(n, 1 << q, 0)
        if not commutes(s, xq):
            # (X+tau) P (X+tau)/2 = P tau X when P anticommutes with both
            ph1, s = multiply(s, g)
            ph2, s = multiply(s, xq)
            phase *= ph1 * ph2
    for (g, q), sign in zip(zip(syms.generators, syms.chosen_qubits), sector):
        if (s.z >> q) & 1:
            raise ConsistencyError(f"term acts as Y/Z on tapered qubit {q}")
        if (s.x >> q) & 1:
            phase *= sign
    removed = syms.removed_qubits
    out = PauliString(n - len(removed), _remove_bits(s.x, removed, n), _remove_bits(s.z, removed, n))
    if abs(phase.imag) > 1e-12:
        raise ConsistencyError("tapered term picked up an imaginary phase")
    return int(round(phase.real)), out


def _check_sector(syms: Z2Symmetries, sector) -> tuple[int, ...]:
    sector = tuple(int(s) for s in sector)
    if len(sector) != len(syms):
        raise DimensionError(f"sector has {len(sector)} entries for {len(syms)} generators")
    if any(s not in (1, -1) for s in sector):
        raise ValueError("sector entries must be +1 or -1")
    return sector


def taper(h: PauliSum, syms: Z2Symmetries, sector, drop_tol: float = DROP_TOL) -> TaperingResult:
    if h.n_qubits != syms.n_qubits:
        raise DimensionError("Hamiltonian and symmetries disagree on qubit count")
    sector = _check_sector(syms, sector)
    terms = []
    for t in h.terms:
        sign, s = taper_string(t.string, syms, sector)
        terms.append((sign * t.coeff, s))
    reduced = PauliSum.from_terms(h.n_qubits - len(syms), terms, drop_tol)
    return TaperingResult(reduced, sector, syms.removed_qubits, syms)


def taper_operator(op: PauliSum, syms: Z2Symmetries, sector) -> PauliSum:
    """Taper any symmetry-commuting observable into the same reduced space."""
    return taper(op, syms, sector).reduced


def taper_basis_index(index: int, syms: Z2Symmetries) -> int:
    """Reduced index of a basis state: the transform leaves the kept bits alone."""
    return _remove_bits(int(index), syms.removed_qubits, syms.n_qubits)


def taper_circuit(circuit: Circuit, syms: Z2Symmetries, sector) -> Circuit:
    """Reduced circuit acting on the tapered space.

    Excitation and Pauli-rotation gates whose generator terms all commute with
    the symmetries become products of Pauli rotations sharing the gate's
    parameter slot (the terms of one generator commute with each other).
    Gates that break a symmetry are dropped with their parameter; in the
    symmetry sector their energy gradient vanishes identically.
    """
    sector = _check_sector(syms, sector)
    n = circuit.n_qubits
    m = n - len(syms)
    slot_map: dict[int, int] = {}
    gates, bounds = [], []
    layer_starts = set(circuit.layer_boundaries)
    pending_boundary = True
    for i, g in enumerate(circuit.gates):
        if i in layer_starts:
            pending_boundary = True
        if g.kind not in (SINGLE, DOUBLE, PAULI_ROT):
            raise UnsupportedError(f"cannot taper {g.kind} gates; build the circuit on the reduced space")
        gen = excitation_generator(g, n)
        if not all(commutes(t.string, s) for t in gen.terms for s in syms.generators):
            continue
        new_terms = []
        for t in gen.terms:
            sign, s = taper_string(t.string, syms, sector)
            if not s.is_identity:
                new_terms.append((sign * t.coeff, s))
        if not new_terms:
            continue
        slot = slot_map.setdefault(g.param_slot, len(slot_map))
        if pending_boundary:
            bounds.append(len(gates))
            pending_boundary = False
        for c, s in new_terms:
            support = tuple(q for q in range(m) if ((s.x | s.z) >> q) & 1)
            gates.append(Gate(PAULI_ROT, support, slot, pauli=s, coeff=c))
    if not gates:
        return Circuit.empty(m)
    return Circuit(m, tuple(gates), len(slot_map), tuple(bounds))


def taper_parameters(circuit: Circuit, syms: Z2Symmetries, sector, params) -> np.ndarray:
    """Restrict a full parameter vector to the slots kept by :func:`taper_circuit`."""
    kept = []
    n = circuit.n_qubits
    seen = set()
    for g in circuit.gates:
        if g.param_slot in seen:
            continue
        gen = excitation_generator(g, n)
        if all(commutes(t.string, s) for t in gen.terms for s in syms.generators):
            seen.add(g.param_slot)
            kept.append(g.param_slot)
    return np.asarray(params, dtype=float)[kept]


@dataclass(frozen=True)
class TaperedProblem:
    """Tapered Hamiltonian bundled with the reference index in reduced space."""

    result: TaperingResult
    reference_index: int

    @property
    def hamiltonian(self) -> PauliSum:
        return self.result.reduced


def taper_hamiltonian(h: PauliSum, reference_index: int, sector=None) -> TaperedProblem:
    """Find symmetries, pick the reference state's sector (unless given) and taper."""
    syms = find_symmetries(h)
    if sector is None:
        sector = sector_of(reference_index, syms)
    res = taper(h, syms, sector)
    return TaperedProblem(res, taper_basis_index(reference_index, syms))
