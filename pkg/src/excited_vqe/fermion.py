"""Molecular integrals, FCIDUMP I/O and the Jordan-Wigner mapping.

Spin-orbital ordering is interleaved: spin-orbital ``2p`` is spatial orbital
``p`` with spin up, ``2p + 1`` is the same orbital with spin down.  Qubit
``j`` holds the occupation of spin-orbital ``j`` (bit set = occupied).

The second-quantized Hamiltonian is

    H = sum_ij h1[i, j] a+_i a_j + 1/2 sum_ijkl h2[i, j, k, l] a+_i a+_j a_k a_l + constant
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ActiveSpaceError, ConsistencyError, FcidumpParseError
from .pauli import PauliSum, merge_arrays

_PHASES = np.array([1, 1j, -1, -1j])


@dataclass
class FciDump:
    """Spatial-orbital integrals as stored in an FCIDUMP file.

    ``two_body`` is in chemist notation, ``two_body[i, j, k, l] = (ij|kl)``.
    """

    norb: int
    nelec: int
    ms2: int
    core_energy: float
    one_body: np.ndarray
    two_body: np.ndarray
    orbsym: list[int] | None = None
    isym: int | None = None


@dataclass
class SpinOrbitalIntegrals:
    h1: np.ndarray
    h2: np.ndarray
    constant: float
    n_electrons: int

    @property
    def n_spin_orbitals(self) -> int:
        return self.h1.shape[0]


@dataclass(frozen=True)
class ActiveSpace:
    """Spatial orbitals to freeze (doubly occupied) or drop (always empty)."""

    frozen_occupied: tuple[int, ...] = ()
    removed_virtual: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "frozen_occupied", tuple(sorted(self.frozen_occupied)))
        object.__setattr__(self, "removed_virtual", tuple(sorted(self.removed_virtual)))
        if set(self.frozen_occupied) & set(self.removed_virtual):
            raise ActiveSpaceError("an orbital cannot be both frozen and removed")
        if self.frozen_occupied != tuple(range(len(self.frozen_occupied))):
            raise ActiveSpaceError("frozen orbitals must be the lowest-energy orbitals 0..k-1")

    @property
    def is_empty(self) -> bool:
        return not self.frozen_occupied and not self.removed_virtual


# --------------------------------------------------------------------------
# FCIDUMP

_HEADER_KEY = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=")


def _parse_header(text: str, first_line: int) -> dict[str, list[str]]:
    body = re.sub(r"^\s*&FCI", "", text, flags=re.IGNORECASE)
    keys = list(_HEADER_KEY.finditer(body))
    out: dict[str, list[str]] = {}
    for n, m in enumerate(keys):
        end = keys[n + 1].start() if n + 1 < len(keys) else len(body)
        raw = body[m.end():end]
        out[m.group(1).upper()] = [v for v in re.split(r"[,\s]+", raw) if v]
    for required in ("NORB", "NELEC"):
        if required not in out:
            raise FcidumpParseError(f"header is missing {required}", first_line)
    return out


def parse_fcidump(text: str | Iterable[str]) -> FciDump:
    """Parse FCIDUMP text into an :class:`FciDump` with symmetries completed.

    Raises:
        FcidumpParseError: malformed header, out-of-range index or bad number;
            the message carries the offending line number.
    """
    lines = text.splitlines() if isinstance(text, str) else [ln.rstrip("\n") for ln in text]
    start = next((n for n, ln in enumerate(lines) if ln.strip()), None)
    if start is None or not lines[start].strip().upper().startswith("&FCI"):
        raise FcidumpParseError("expected '&FCI' namelist header", (start or 0) + 1)

    header_parts = []
    end = None
    for n in range(start, len(lines)):
        ln = lines[n]
        stripped = ln.strip()
        m = re.search(r"&END|/\s*$", stripped, flags=re.IGNORECASE)
        if m:
            header_parts.append(stripped[:m.start()])
            end = n
            break
        header_parts.append(stripped)
    if end is None:
        raise FcidumpParseError("unterminated namelist header (no &END or /)", start + 1)
    header = _parse_header(" ".join(header_parts), start + 1)

    try:
        norb = int(header["NORB"][0])
        nelec = int(header["NELEC"][0])
        ms2 = int(header.get("MS2", ["0"])[0])
        orbsym = [int(v) for v in header["ORBSYM"]] if "ORBSYM" in header else None
        isym = int(header["ISYM"][0]) if "ISYM" in header else None
    except (ValueError, IndexError) as exc:
        raise FcidumpParseError(f"bad header value ({exc})", start + 1) from None
    if norb < 1:
        raise FcidumpParseError("NORB must be positive", start + 1)

    h1 = np.zeros((norb, norb))
    eri = np.zeros((norb,) * 4)
    core = 0.0
    for n in range(end + 1, len(lines)):
        stripped = lines[n].strip()
        if not stripped:
            continue
        fields = stripped.split()
        if len(fields) != 5:
            raise FcidumpParseError(f"expected 'value i j k l', got {stripped!r}", n + 1)
        try:
            value = float(fields[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(f) for f in fields[1:])
        except ValueError:
            raise FcidumpParseError(f"non-numeric entry {stripped!r}", n + 1) from None
        if not np.isfinite(value):
            raise FcidumpParseError("non-finite integral value", n + 1)
        if any(not 0 <= idx <= norb for idx in (i, j, k, l)):
            raise FcidumpParseError(f"index out of range 0..{norb}", n + 1)
        if i == j == k == l == 0:
            core = value
        elif k == 0 and l == 0:
            if i == 0 or j == 0:
                # orbital-energy lines (i 0 0 0) carry no Hamiltonian data
                if j == 0 and i > 0:
                    continue
                raise FcidumpParseError("malformed one-body index pattern", n + 1)
            h1[i - 1, j - 1] = h1[j - 1, i - 1] = value
        elif min(i, j, k, l) > 0:
            i, j, k, l = i - 1, j - 1, k - 1, l - 1
            for a, b, c, d in ((i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k)):
                eri[a, b, c, d] = eri[c, d, a, b] = value
        else:
            raise FcidumpParseError("malformed index pattern", n + 1)
    return FciDump(norb, nelec, ms2, core, h1, eri, orbsym, isym)


def read_fcidump(path: str | Path) -> FciDump:
    path = Path(path)
    try:
        return parse_fcidump(path.read_text())
    except FcidumpParseError as exc:
        raise FcidumpParseError(f"{path}: {exc}") from None


def serialize_fcidump(f: FciDump, tol: float = 0.0) -> str:
    """Write the unique (8-fold symmetric) entries back out as FCIDUMP text."""
    out = [f" &FCI NORB={f.norb},NELEC={f.nelec},MS2={f.ms2},\n"]
    if f.orbsym is not None:
        out.append("  ORBSYM=" + ",".join(str(s) for s in f.orbsym) + ",\n")
    if f.isym is not None:
        out.append(f"  ISYM={f.isym},\n")
    out.append(" &END\n")
    n = f.norb
    for i in range(n):
        for j in range(i + 1):
            ij = i * (i + 1) // 2 + j
            for k in range(i + 1):
                for l in range(k + 1):
                    if k * (k + 1) // 2 + l > ij:
                        continue
                    v = f.two_body[i, j, k, l]
                    if v != 0.0 and abs(v) > tol:
                        out.append(f" {v:.17g} {i + 1} {j + 1} {k + 1} {l + 1}\n")
    for i in range(n):
        for j in range(i + 1):
            v = f.one_body[i, j]
            if v != 0.0 and abs(v) > tol:
                out.append(f" {v:.17g} {i + 1} {j + 1} 0 0\n")
    out.append(f" {f.core_energy:.17g} 0 0 0 0\n")
    return "".join(out)


# --------------------------------------------------------------------------
# spin-orbital integrals


def to_spin_orbitals(f: FciDump) -> SpinOrbitalIntegrals:
    """Expand spatial integrals to interleaved spin-orbitals.

    ``h2[i, j, k, l] = (pr|qs)`` for ``i = 2p+s, j = 2q+t, k = 2s'+t, l = 2r+s``:
    electron 1 goes ``l -> i`` and electron 2 goes ``k -> j``, each keeping spin.
    """
    n = f.norb
    m = 2 * n
    h1 = np.zeros((m, m))
    h1[0::2, 0::2] = f.one_body
    h1[1::2, 1::2] = f.one_body
    phys = np.einsum("prqs->pqsr", f.two_body)
    h2 = np.zeros((m, m, m, m))
    for s in (0, 1):
        for t in (0, 1):
            h2[s::2, t::2, t::2, s::2] = phys
    return SpinOrbitalIntegrals(h1, h2, float(f.core_energy), int(f.nelec))


def freeze(s: SpinOrbitalIntegrals, space: ActiveSpace) -> SpinOrbitalIntegrals:
    """Fold doubly occupied core orbitals into the constant and one-body term.

    Removed virtual orbitals are simply dropped.  The result acts on the
    remaining spin-orbitals in their original relative order.
    """
    if space.is_empty:
        return s
    frozen = [2 * p + sp for p in space.frozen_occupied for sp in (0, 1)]
    removed = {2 * p + sp for p in space.removed_virtual for sp in (0, 1)}
    if max(frozen + list(removed), default=-1) >= s.n_spin_orbitals:
        raise ActiveSpaceError("active space refers to orbitals beyond the basis")
    if s.n_electrons < len(frozen):
        raise ActiveSpaceError(
            f"cannot freeze {len(frozen)} electrons out of {s.n_electrons}")
    active = [i for i in range(s.n_spin_orbitals) if i not in removed and i not in frozen]
    if not active:
        raise ActiveSpaceError("no active orbitals left")

    g = s.h2
    F = np.array(frozen, dtype=int)
    A = np.array(active, dtype=int)
    constant = s.constant
    h1 = s.h1[np.ix_(A, A)].copy()
    if len(F):
        constant += float(np.trace(s.h1[np.ix_(F, F)]))
        gF = g[np.ix_(F, F, F, F)]
        constant += 0.5 * float(np.einsum("ijji->", gF) - np.einsum("ijij->", gF))
        h1 += 0.5 * (
            np.einsum("piiq->pq", g[np.ix_(A, F, F, A)])
            + np.einsum("ipqi->pq", g[np.ix_(F, A, A, F)])
            - np.einsum("piqi->pq", g[np.ix_(A, F, A, F)])
            - np.einsum("ipiq->pq", g[np.ix_(F, A, F, A)])
        )
    h2 = g[np.ix_(A, A, A, A)].copy()
    return SpinOrbitalIntegrals(h1, h2, constant, s.n_electrons - len(frozen))


# --------------------------------------------------------------------------
# Jordan-Wigner


def _ladder_strings(n: int, idx: np.ndarray, dagger: bool, parity: bool = True):
    """Two-term Pauli expansion of ``a_j`` / ``a+_j`` for an array of ``j``.

    ``a_j = (X_j + iY_j)/2 * Z_0...Z_{j-1}``; ``a+_j`` flips the sign of ``iY``.
    With ``parity=False`` the Z tail is dropped, giving the qubit operators
    ``Q_j`` / ``Q+_j``.
    """
    bit = np.left_shift(np.int64(1), idx.astype(np.int64))
    below = bit - 1 if parity else np.zeros_like(bit)
    x_term = (bit, below, np.full(idx.shape, 0.5 + 0j))
    y_coeff = -0.5j if dagger else 0.5j
    # P(x, z) with x & z = bit is i * X Z = Y on qubit j
    y_term = (bit, below | bit, np.full(idx.shape, y_coeff))
    return x_term, y_term


def _string_product(x1, z1, x2, z2):
    x3, z3 = x1 ^ x2, z1 ^ z2
    k = (np.bitwise_count(x1 & z1).astype(np.int64) + np.bitwise_count(x2 & z2)
         + 2 * np.bitwise_count(z1 & x2) - np.bitwise_count(x3 & z3)) % 4
    return x3, z3, _PHASES[k]


def ladder_product_arrays(n: int, indices: np.ndarray, daggers: Sequence[bool],
                          coeffs: np.ndarray, parity: bool = True):
    """Pauli expansion of ``sum_t coeffs[t] * prod_m op_m(indices[t, m])``.

    ``daggers[m]`` selects creation (True) or annihilation for factor ``m``;
    the product is taken left to right.  Returns merged ``(x, z, coeff)``.
    """
    indices = np.atleast_2d(np.asarray(indices, dtype=np.int64))
    coeffs = np.asarray(coeffs, dtype=complex)
    if indices.size == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, complex)
    xs, zs, cs = [], [], []
    factors = [_ladder_strings(n, indices[:, m], d, parity) for m, d in enumerate(daggers)]
    for choice in np.ndindex(*(2,) * len(daggers)):
        x = np.zeros(len(indices), np.int64)
        z = np.zeros(len(indices), np.int64)
        c = coeffs.copy()
        for m, pick in enumerate(choice):
            fx, fz, fc = factors[m][pick]
            x, z, ph = _string_product(x, z, fx, fz)
            c = c * ph * fc
        xs.append(x)
        zs.append(z)
        cs.append(c)
    return merge_arrays(np.concatenate(xs), np.concatenate(zs), np.concatenate(cs))


def fermion_to_pauli(n: int, terms: Iterable[tuple[complex, Sequence[tuple[int, bool]]]],
                     drop_tol: float = 1e-12, parity: bool = True) -> PauliSum:
    """Map a Hermitian fermionic operator to a :class:`PauliSum`.

    ``terms`` holds ``(coeff, [(index, is_creation), ...])`` products; an empty
    product is the identity.  ``parity=False`` treats the ladder operators as
    qubit (hard-core boson) operators without Jordan-Wigner strings.
    """
    groups: dict[tuple[bool, ...], tuple[list, list]] = {}
    const = 0j
    for coeff, ops in terms:
        if not ops:
            const += coeff
            continue
        key = tuple(d for _, d in ops)
        idx, cs = groups.setdefault(key, ([], []))
        idx.append([i for i, _ in ops])
        cs.append(coeff)
    xs, zs, cs_all = [np.zeros(1, np.int64)], [np.zeros(1, np.int64)], [np.array([const])]
    for daggers, (idx, cs) in groups.items():
        x, z, c = ladder_product_arrays(n, np.array(idx), daggers, np.array(cs), parity)
        xs.append(x)
        zs.append(z)
        cs_all.append(c)
    x, z, c = merge_arrays(np.concatenate(xs), np.concatenate(zs), np.concatenate(cs_all))
    return _hermitian_sum(n, x, z, c, drop_tol)


def _hermitian_sum(n, x, z, c, drop_tol) -> PauliSum:
    imag = np.abs(c.imag).max(initial=0.0)
    if imag > 1e-9:
        raise ConsistencyError(f"fermionic operator is not Hermitian (imag {imag:.2e})")
    return PauliSum._from_arrays(n, x, z, c.real, drop_tol)


def jordan_wigner(s: SpinOrbitalIntegrals, drop_tol: float = 1e-12) -> PauliSum:
    """Qubit Hamiltonian of the integrals, including the constant."""
    m = s.n_spin_orbitals
    i, j = np.nonzero(s.h1)
    one = ladder_product_arrays(m, np.stack([i, j], 1), (True, False), s.h1[i, j])
    # a+_i a+_i vanishes, so drop i == j and k == l up front
    h2 = s.h2.copy()
    r = np.arange(m)
    h2[r, r, :, :] = 0.0
    h2[:, :, r, r] = 0.0
    i, j, k, l = np.nonzero(h2)
    two = ladder_product_arrays(m, np.stack([i, j, k, l], 1), (True, True, False, False),
                                0.5 * h2[i, j, k, l])
    x = np.concatenate([one[0], two[0], [0]])
    z = np.concatenate([one[1], two[1], [0]])
    c = np.concatenate([one[2], two[2], [s.constant]])
    return _hermitian_sum(m, *merge_arrays(x, z, c), drop_tol)


def number_operator(n_qubits: int) -> PauliSum:
    terms = [(0.5 * n_qubits, "I" * n_qubits)]
    terms += [(-0.5, "I" * j + "Z" + "I" * (n_qubits - j - 1)) for j in range(n_qubits)]
    return PauliSum.from_terms(n_qubits, terms)


def _check_even(n_qubits: int):
    if n_qubits % 2:
        raise ValueError(f"spin operators need an even qubit count (alpha/beta pairs), got {n_qubits}")


def sz_operator(n_qubits: int) -> PauliSum:
    """``S_z = 1/2 sum_p (n_{2p} - n_{2p+1})`` on interleaved spin-orbitals."""
    _check_even(n_qubits)
    terms = []
    for j in range(n_qubits):
        sign = -1.0 if j % 2 == 0 else 1.0
        terms.append((0.25 * sign, "I" * j + "Z" + "I" * (n_qubits - j - 1)))
    return PauliSum.from_terms(n_qubits, terms)


def s_squared_operator(n_qubits: int) -> PauliSum:
    """Total spin ``S^2 = S_z^2 + (S+S- + S-S+)/2``."""
    _check_even(n_qubits)
    n_orb = n_qubits // 2
    terms = []
    for p in range(n_orb):
        for q in range(n_orb):
            # S+ S-: a+_{pa} a_{pb} a+_{qb} a_{qa}; S- S+: a+_{pb} a_{pa} a+_{qa} a_{qb}
            terms.append((0.5, [(2 * p, True), (2 * p + 1, False), (2 * q + 1, True), (2 * q, False)]))
            terms.append((0.5, [(2 * p + 1, True), (2 * p, False), (2 * q, True), (2 * q + 1, False)]))
    ladder = fermion_to_pauli(n_qubits, terms)
    sz = sz_operator(n_qubits)
    return sz @ sz + ladder


def hartree_fock_index(n_electrons: int, n_qubits: int) -> int:
    """Basis index with the lowest ``n_electrons`` spin-orbitals occupied."""
    if not 0 <= n_electrons <= n_qubits:
        raise ValueError(f"need 0 <= n_electrons <= n_qubits, got {n_electrons}, {n_qubits}")
    return (1 << n_electrons) - 1


@dataclass
class MolecularHamiltonian:
    """Convenience bundle: qubit Hamiltonian plus the electron count it holds."""

    hamiltonian: PauliSum
    n_electrons: int
    integrals: SpinOrbitalIntegrals = field(repr=False)

    @property
    def n_qubits(self) -> int:
        return self.hamiltonian.n_qubits


def molecular_hamiltonian(f: FciDump, space: ActiveSpace | None = None) -> MolecularHamiltonian:
    s = to_spin_orbitals(f)
    if space is not None:
        s = freeze(s, space)
    return MolecularHamiltonian(jordan_wigner(s), s.n_electrons, s)
