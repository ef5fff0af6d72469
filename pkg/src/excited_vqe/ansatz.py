"""Parameterized circuits: QCCSD, trotterized UCCSD and the strongly entangled ansatz.

Spin-orbitals follow the interleaved convention (even index = alpha), and
excitations always move electrons out of the Hartree-Fock occupied set
``0..n_electrons-1``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import combinations

from .pauli import PauliString
from .simulator import (CNOT, DOUBLE, FERMIONIC, PAULI_ROT, QUBIT, RY, RZ, SINGLE, Circuit,
                        Gate)


def spin_of(q: int) -> float:
    return 0.5 if q % 2 == 0 else -0.5


@dataclass(frozen=True)
class ExcitationList:
    """Singles ``(o, v)`` and doubles ``(o1, o2, v1, v2)`` with their S_z changes."""

    singles: tuple[tuple[int, int], ...]
    doubles: tuple[tuple[int, int, int, int], ...]
    spin_restricted: bool

    @property
    def singles_dsz(self) -> tuple[float, ...]:
        return tuple(spin_of(v) - spin_of(o) for o, v in self.singles)

    @property
    def doubles_dsz(self) -> tuple[float, ...]:
        return tuple(spin_of(v1) + spin_of(v2) - spin_of(o1) - spin_of(o2)
                     for o1, o2, v1, v2 in self.doubles)

    def __len__(self) -> int:
        return len(self.singles) + len(self.doubles)


def build_excitations(n_qubits: int, n_electrons: int, spin_restricted: bool = True) -> ExcitationList:
    if not 0 <= n_electrons <= n_qubits:
        raise ValueError(f"need 0 <= n_electrons <= n_qubits, got {n_electrons}, {n_qubits}")
    occ = range(n_electrons)
    virt = range(n_electrons, n_qubits)
    singles = [(o, v) for o in occ for v in virt]
    doubles = [(o1, o2, v1, v2) for o1, o2 in combinations(occ, 2) for v1, v2 in combinations(virt, 2)]
    if spin_restricted:
        singles = [(o, v) for o, v in singles if o % 2 == v % 2]
        doubles = [d for d in doubles
                   if spin_of(d[2]) + spin_of(d[3]) == spin_of(d[0]) + spin_of(d[1])]
    return ExcitationList(tuple(sorted(singles)), tuple(sorted(doubles)), spin_restricted)


def excitation_circuit(n_qubits: int, excitations: ExcitationList, layers: int, flavor: str) -> Circuit:
    """``layers`` repetitions of all doubles then all singles, one slot per gate."""
    if layers < 1:
        raise ValueError("layers must be a positive integer")
    gates, bounds = [], []
    slot = 0
    for _ in range(layers):
        bounds.append(len(gates))
        for d in excitations.doubles:
            gates.append(Gate(DOUBLE, d, slot, flavor))
            slot += 1
        for s in excitations.singles:
            gates.append(Gate(SINGLE, s, slot, flavor))
            slot += 1
    if not gates:
        return Circuit.empty(n_qubits)
    return Circuit(n_qubits, tuple(gates), slot, tuple(bounds))


def qccsd(n_qubits: int, n_electrons: int, layers: int = 1, spin_restricted: bool = True) -> Circuit:
    """Qubit-excitation ansatz (no Jordan-Wigner parity)."""
    return excitation_circuit(n_qubits, build_excitations(n_qubits, n_electrons, spin_restricted),
                              layers, QUBIT)


def uccsd(n_qubits: int, n_electrons: int, layers: int = 1, spin_restricted: bool = True) -> Circuit:
    """First-order trotterized UCCSD with fermionic excitation gates."""
    return excitation_circuit(n_qubits, build_excitations(n_qubits, n_electrons, spin_restricted),
                              layers, FERMIONIC)


def strongly_entangled(n_qubits: int, layers: int = 1) -> Circuit:
    """Per layer: RZ, RY, RZ on every qubit, then a CNOT ring ``i -> i+1 mod n``."""
    if n_qubits < 2:
        raise ValueError("strongly entangled ansatz needs at least 2 qubits")
    if layers < 1:
        raise ValueError("layers must be a positive integer")
    gates, bounds = [], []
    slot = 0
    for _ in range(layers):
        bounds.append(len(gates))
        for q in range(n_qubits):
            for kind in (RZ, RY, RZ):
                gates.append(Gate(kind, (q,), slot))
                slot += 1
        for q in range(n_qubits):
            gates.append(Gate(CNOT, (q, (q + 1) % n_qubits)))
    return Circuit(n_qubits, tuple(gates), slot, tuple(bounds))


# --------------------------------------------------------------------------
# resource accounting

# Expanded templates as (arity, wire positions).  Qubit single excitation:
# 2 CNOTs and 6 one-qubit gates; qubit double excitation: 13 CNOTs and 22
# one-qubit gates.
_SINGLE_TEMPLATE = (
    (1, (0,)), (1, (1,)), (2, (1, 0)), (1, (0,)), (1, (1,)), (2, (1, 0)), (1, (0,)), (1, (1,)),
)
_DOUBLE_TEMPLATE = (
    (2, (2, 3)), (2, (0, 2)), (1, (3,)), (1, (0,)), (2, (2, 3)), (2, (0, 1)),
    (1, (1,)), (1, (0,)), (2, (0, 3)), (1, (3,)), (2, (3, 1)), (1, (1,)), (1, (0,)),
    (2, (2, 1)), (1, (1,)), (1, (0,)), (2, (3, 1)), (1, (3,)), (2, (0, 3)),
    (1, (1,)), (1, (0,)), (2, (2, 0)), (2, (0, 1)), (1, (3,)), (1, (0,)),
    (1, (1,)), (1, (2,)), (2, (0, 2)), (2, (2, 3)), (1, (0,)), (1, (1,)), (1, (2,)),
    (1, (3,)), (1, (1,)), (1, (2,)),
)
# fermionic parity adds a CNOT ladder down and back up over the wires in
# between (2 per intermediate qubit)


@dataclass(frozen=True)
class ResourceReport:
    one_qubit_gates: int = 0
    two_qubit_gates: int = 0
    depth: int = 0
    n_params: int = 0


def _expand(g: Gate) -> list[tuple[int, ...]]:
    """Elementary gate footprints (tuples of qubits) for one circuit gate."""
    if g.kind in (RY, RZ):
        return [g.wires]
    if g.kind == CNOT:
        return [g.wires]
    if g.kind == PAULI_ROT:
        # basis change, CNOT ladder onto the last qubit, RZ, and undo
        s = g.pauli
        support = [q for q in range(s.n_qubits) if ((s.x | s.z) >> q) & 1]
        if not support:
            return []
        change = [(q,) for q in support if (s.x >> q) & 1]
        ladder = [(a, b) for a, b in zip(support, support[1:])]
        return change + ladder + [(support[-1],)] + ladder[::-1] + change
    template = _SINGLE_TEMPLATE if g.kind == SINGLE else _DOUBLE_TEMPLATE
    out = [tuple(g.wires[i] for i in pos) for _, pos in template]
    if g.flavor == FERMIONIC:
        lo, hi = min(g.wires), max(g.wires)
        between = [q for q in range(lo + 1, hi) if q not in g.wires]
        ladder = [(a, b) for a, b in zip(between, between[1:])]
        if between:
            ladder.append((between[-1], g.wires[-1]))
        out = ladder + out + ladder[::-1]
    return out


def resources(c: Circuit) -> ResourceReport:
    """Gate counts and greedy depth of the circuit expanded to 1- and 2-qubit gates."""
    one = two = 0
    level = [0] * c.n_qubits
    for g in c.gates:
        for fp in _expand(g):
            if len(fp) == 1:
                one += 1
            else:
                two += 1
            d = max(level[q] for q in fp) + 1
            for q in fp:
                level[q] = d
    return ResourceReport(one, two, max(level, default=0), c.n_params)


# --------------------------------------------------------------------------
# text export

_LINE = re.compile(r"^(?P<kind>[A-Z_]+)\s+wires=(?P<wires>[\d,]*)(?P<rest>.*)$")


def circuit_to_text(c: Circuit) -> str:
    head = [f"# circuit n_qubits={c.n_qubits} n_params={c.n_params} "
            f"layers={','.join(map(str, c.layer_boundaries))}"]
    for g in c.gates:
        parts = [g.kind, "wires=" + ",".join(map(str, g.wires))]
        if g.param_slot is not None:
            parts.append(f"slot={g.param_slot}")
        if g.flavor is not None:
            parts.append(f"flavor={g.flavor}")
        if g.kind == PAULI_ROT:
            parts.append(f"pauli={g.pauli.label}")
            parts.append(f"coeff={g.coeff!r}")
        head.append(" ".join(parts))
    return "\n".join(head) + "\n"


def circuit_from_text(text: str) -> Circuit:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("# circuit"):
        raise ValueError("missing '# circuit' header line")
    header = dict(kv.split("=", 1) for kv in lines[0].split()[2:])
    n = int(header["n_qubits"])
    bounds = tuple(int(b) for b in header.get("layers", "").split(",") if b)
    gates = []
    for ln in lines[1:]:
        m = _LINE.match(ln)
        if not m:
            raise ValueError(f"cannot parse gate line {ln!r}")
        fields = dict(kv.split("=", 1) for kv in m["rest"].split())
        wires = tuple(int(w) for w in m["wires"].split(",") if w)
        pauli = PauliString.from_label(fields["pauli"]) if "pauli" in fields else None
        gates.append(Gate(m["kind"], wires,
                          int(fields["slot"]) if "slot" in fields else None,
                          fields.get("flavor"), pauli, float(fields.get("coeff", 1.0))))
    return Circuit(n, tuple(gates), int(header["n_params"]), bounds)
