"""Pauli strings and real-weighted Pauli sums in symplectic bitmask form.

A string on ``n`` qubits is a pair of integer masks ``(x, z)``; bit ``j`` of
each mask refers to qubit ``j``.  Letters map as I=(0,0), X=(1,0), Y=(1,1),
Z=(0,1), and the operator is ``i**popcount(x & z) * X**x Z**z`` so that
``Y = iXZ``.  Labels are written qubit 0 first: ``"ZX"`` is Z on qubit 0 and
X on qubit 1.

Phases of products are tracked as exponents of ``i`` modulo 4, never as
floating point numbers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from .errors import ConsistencyError, DimensionError, ResourceLimitError

DROP_TOL = 1e-12
MATRIX_QUBIT_CAP = 12

_PHASES = (1, 1j, -1, -1j)
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}
_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True, order=True)
class PauliString:
    n_qubits: int
    x: int
    z: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise DimensionError("n_qubits must be positive")
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise DimensionError(f"masks exceed {self.n_qubits} qubits")

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        x = z = 0
        for q, ch in enumerate(label.upper()):
            try:
                bx, bz = _LETTER_BITS[ch]
            except KeyError:
                raise ValueError(f"bad Pauli letter {ch!r} in {label!r}") from None
            x |= bx << q
            z |= bz << q
        return cls(len(label), x, z)

    @classmethod
    def identity(cls, n_qubits: int) -> PauliString:
        return cls(n_qubits, 0, 0)

    @classmethod
    def from_ops(cls, n_qubits: int, ops: Mapping[int, str]) -> PauliString:
        """Build from a ``{qubit: letter}`` mapping, e.g. ``{0: "X", 3: "Z"}``."""
        x = z = 0
        for q, ch in ops.items():
            if not 0 <= q < n_qubits:
                raise DimensionError(f"qubit {q} out of range for {n_qubits} qubits")
            bx, bz = _LETTER_BITS[ch.upper()]
            x |= bx << q
            z |= bz << q
        return cls(n_qubits, x, z)

    @property
    def label(self) -> str:
        return "".join(self.letter(q) for q in range(self.n_qubits))

    def letter(self, qubit: int) -> str:
        return _BITS_LETTER[((self.x >> qubit) & 1, (self.z >> qubit) & 1)]

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def is_z_type(self) -> bool:
        return self.x == 0

    def __str__(self) -> str:
        return self.label


def _phase_exponent(x1: int, z1: int, x2: int, z2: int) -> int:
    x3, z3 = x1 ^ x2, z1 ^ z2
    return ((x1 & z1).bit_count() + (x2 & z2).bit_count()
            + 2 * (z1 & x2).bit_count() - (x3 & z3).bit_count()) % 4


def multiply(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Return ``(phase, string)`` with ``phase * string == a @ b``.

    The phase is exactly one of ``1, -1, 1j, -1j``.
    """
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"{a.n_qubits}-qubit vs {b.n_qubits}-qubit string")
    k = _phase_exponent(a.x, a.z, b.x, b.z)
    return _PHASES[k], PauliString(a.n_qubits, a.x ^ b.x, a.z ^ b.z)


def commutes(a: PauliString, b: PauliString) -> bool:
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"{a.n_qubits}-qubit vs {b.n_qubits}-qubit string")
    return ((a.x & b.z).bit_count() + (a.z & b.x).bit_count()) % 2 == 0


@dataclass(frozen=True)
class PauliTerm:
    coeff: float
    string: PauliString

    def __post_init__(self):
        if not np.isfinite(self.coeff):
            raise ValueError("Pauli coefficient must be finite")


@dataclass(frozen=True, eq=False)
class PauliSum:
    """Hermitian operator ``sum_l coeff_l * P_l`` with real coefficients.

    Construct through :meth:`from_terms` (or the helpers) to obtain the
    canonical form: unique strings, sorted by ``(x, z)``, no negligible terms.
    """

    n_qubits: int
    terms: tuple[PauliTerm, ...]

    # -- construction -----------------------------------------------------

    @classmethod
    def from_terms(cls, n_qubits: int, terms: Iterable, drop_tol: float = DROP_TOL) -> PauliSum:
        """Normalize ``(coeff, string)`` pairs into a canonical sum.

        Strings may be :class:`PauliString` or labels.
        """
        acc: dict[tuple[int, int], float] = {}
        for item in terms:
            if isinstance(item, PauliTerm):
                c, s = item.coeff, item.string
            else:
                c, s = item
                if isinstance(s, str):
                    s = PauliString.from_label(s)
            if s.n_qubits != n_qubits:
                raise DimensionError(f"term on {s.n_qubits} qubits in {n_qubits}-qubit sum")
            key = (s.x, s.z)
            acc[key] = acc.get(key, 0.0) + float(c)
        out = tuple(
            PauliTerm(c, PauliString(n_qubits, x, z))
            for (x, z), c in sorted(acc.items())
            if abs(c) >= drop_tol
        )
        return cls(n_qubits, out)

    @classmethod
    def from_dict(cls, n_qubits: int, coeffs: Mapping[str, float]) -> PauliSum:
        return cls.from_terms(n_qubits, ((c, lab) for lab, c in coeffs.items()))

    @classmethod
    def identity(cls, n_qubits: int, coeff: float = 1.0) -> PauliSum:
        return cls.from_terms(n_qubits, [(coeff, PauliString.identity(n_qubits))])

    @classmethod
    def zero(cls, n_qubits: int) -> PauliSum:
        return cls(n_qubits, ())

    @classmethod
    def _from_arrays(cls, n_qubits: int, x, z, c, drop_tol: float) -> PauliSum:
        # arrays are assumed merged (unique (x, z) pairs)
        keep = np.abs(c) >= drop_tol
        order = np.lexsort((z[keep], x[keep]))
        xs, zs, cs = x[keep][order], z[keep][order], c[keep][order]
        return cls(n_qubits, tuple(
            PauliTerm(float(ci), PauliString(n_qubits, int(xi), int(zi)))
            for xi, zi, ci in zip(xs, zs, cs)
        ))

    # -- views --------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(x_masks, z_masks, coeffs)`` as numpy arrays."""
        x = np.array([t.string.x for t in self.terms], dtype=np.int64)
        z = np.array([t.string.z for t in self.terms], dtype=np.int64)
        c = np.array([t.coeff for t in self.terms], dtype=float)
        return x, z, c

    def as_dict(self) -> dict[str, float]:
        return {t.string.label: t.coeff for t in self.terms}

    @property
    def constant(self) -> float:
        for t in self.terms:
            if t.string.is_identity:
                return t.coeff
        return 0.0

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self.terms == other.terms

    def __hash__(self):
        return hash((self.n_qubits, self.terms))

    def __repr__(self) -> str:
        body = " + ".join(f"{t.coeff:.6g}*{t.string.label}" for t in self.terms[:6])
        more = f" + ... ({len(self.terms)} terms)" if len(self.terms) > 6 else ""
        return f"PauliSum({body or '0'}{more})"

    # -- arithmetic -----------------------------------------------------------

    def _check(self, other: PauliSum):
        if self.n_qubits != other.n_qubits:
            raise DimensionError(f"{self.n_qubits}-qubit vs {other.n_qubits}-qubit sum")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = PauliSum.identity(self.n_qubits, other)
        self._check(other)
        return PauliSum.from_terms(self.n_qubits, self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar: float):
        if not isinstance(scalar, (int, float, np.floating, np.integer)):
            return NotImplemented
        return PauliSum.from_terms(self.n_qubits, ((scalar * t.coeff, t.string) for t in self.terms))

    __rmul__ = __mul__

    def __matmul__(self, other: PauliSum) -> PauliSum:
        """Operator product; only valid when the product is Hermitian."""
        self._check(other)
        x, z, c = product_arrays(*self.arrays, *other.arrays)
        imag = np.abs(c.imag).max(initial=0.0)
        if imag > 1e-10:
            raise ConsistencyError(f"product is not Hermitian (imaginary residue {imag:.2e})")
        return PauliSum._from_arrays(self.n_qubits, x, z, c.real, DROP_TOL)

    # -- serialization ---------------------------------------------------------

    def to_text(self) -> str:
        return "".join(f"{t.coeff:.17g} {t.string.label}\n" for t in self.terms)

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> PauliSum:
        pairs = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                coeff, label = line.split()
                pairs.append((float(coeff), PauliString.from_label(label)))
            except ValueError as exc:
                raise ValueError(f"line {lineno}: cannot parse Pauli term {line!r}") from exc
        if n_qubits is None:
            if not pairs:
                raise ValueError("empty Pauli text needs an explicit n_qubits")
            n_qubits = pairs[0][1].n_qubits
        return cls.from_terms(n_qubits, pairs, drop_tol=0.0)


def product_arrays(x1, z1, c1, x2, z2, c2):
    """All pairwise products of two term lists, merged by string.

    Returns ``(x, z, coeff)`` with complex coefficients; strings are unique
    but not sorted.
    """
    if len(x1) == 0 or len(x2) == 0:
        return (np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, complex))
    X = x1[:, None] ^ x2[None, :]
    Z = z1[:, None] ^ z2[None, :]
    k = (np.bitwise_count(x1 & z1)[:, None].astype(np.int64)
         + np.bitwise_count(x2 & z2)[None, :]
         + 2 * np.bitwise_count(z1[:, None] & x2[None, :])
         - np.bitwise_count(X & Z)) % 4
    phase = np.array(_PHASES, dtype=complex)[k]
    coeff = (np.asarray(c1)[:, None] * np.asarray(c2)[None, :]) * phase
    return merge_arrays(X.ravel(), Z.ravel(), coeff.ravel())


def merge_arrays(x, z, c):
    """Sum coefficients of repeated ``(x, z)`` pairs."""
    if len(x) == 0:
        return x, z, c
    keys = np.stack([x, z], axis=1)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    if np.iscomplexobj(c):
        merged = (np.bincount(inverse, weights=c.real, minlength=len(uniq))
                  + 1j * np.bincount(inverse, weights=c.imag, minlength=len(uniq)))
    else:
        merged = np.bincount(inverse, weights=c, minlength=len(uniq))
    return uniq[:, 0].copy(), uniq[:, 1].copy(), merged


def normalize(s: PauliSum, drop_tol: float = DROP_TOL) -> PauliSum:
    """Merge like terms and drop those with ``|coeff| < drop_tol``."""
    return PauliSum.from_terms(s.n_qubits, s.terms, drop_tol=drop_tol)


def fold(h: PauliSum, omega: float, drop_tol: float = DROP_TOL) -> PauliSum:
    """Return the folded operator ``(h - omega)^2`` as a normalized sum."""
    shifted = h - omega * PauliSum.identity(h.n_qubits)
    x, z, c = product_arrays(*shifted.arrays, *shifted.arrays)
    # cross terms of anticommuting pairs come with opposite imaginary phases
    if np.abs(c.imag).max(initial=0.0) > 1e-9 * max(1.0, np.abs(c).max(initial=0.0)):
        raise ConsistencyError("fold produced complex coefficients; input not Hermitian?")
    return PauliSum._from_arrays(h.n_qubits, x, z, c.real, drop_tol)


def string_matrix(s: PauliString) -> sp.csr_matrix:
    """Sparse matrix of one Pauli string, built by Kronecker products.

    Basis index bit ``j`` is qubit ``j``, so qubit 0 is the rightmost factor.
    """
    m = sp.identity(1, dtype=complex, format="csr")
    for q in range(s.n_qubits):
        m = sp.kron(sp.csr_matrix(_MATS[s.letter(q)]), m, format="csr")
    return m


def to_sparse(s: PauliSum) -> sp.csr_matrix:
    dim = 1 << s.n_qubits
    out = sp.csr_matrix((dim, dim), dtype=complex)
    for t in s.terms:
        out = out + t.coeff * string_matrix(t.string)
    return out.tocsr()


def to_matrix(s: PauliSum | PauliString, max_qubits: int = MATRIX_QUBIT_CAP) -> np.ndarray:
    """Dense ``2^n x 2^n`` matrix; raises past ``max_qubits``."""
    if s.n_qubits > max_qubits:
        raise ResourceLimitError(f"{s.n_qubits} qubits exceeds dense cap of {max_qubits}")
    if isinstance(s, PauliString):
        return string_matrix(s).toarray()
    return to_sparse(s).toarray()
