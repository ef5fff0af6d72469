"""Exact diagonalization inside particle-number / S_z sectors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SectorError
from .fermion import s_squared_operator
from .pauli import PauliSum, to_sparse

SECTOR_QUBIT_CAP = 16
SECTOR_DIM_CAP = 6000


@dataclass(frozen=True)
class SectorSpec:
    """``None`` leaves the quantity unconstrained. ``s_z`` is in units of hbar."""

    n_particles: int | None = None
    s_z: float | None = None

    def __post_init__(self):
        if self.s_z is not None and not float(2 * self.s_z).is_integer():
            raise SectorError(f"s_z must be a half-integer, got {self.s_z}")
        if self.n_particles is not None and self.n_particles < 0:
            raise SectorError("particle number must be non-negative")
        if self.n_particles is not None and self.s_z is not None:
            if abs(2 * self.s_z) > self.n_particles or (self.n_particles + 2 * self.s_z) % 2:
                raise SectorError(f"no state has N={self.n_particles} and S_z={self.s_z}")


@dataclass(frozen=True, eq=False)
class EigenSolution:
    eigenvalues: np.ndarray
    eigenvectors: tuple[np.ndarray, ...]
    labels: tuple[float, ...] | None = None

    def __len__(self) -> int:
        return len(self.eigenvalues)


def sector_indices(n_qubits: int, sector: SectorSpec) -> np.ndarray:
    """Basis indices of the sector (interleaved spin-orbitals, even = alpha)."""
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    keep = np.ones(len(idx), dtype=bool)
    if sector.n_particles is not None:
        keep &= np.bitwise_count(idx) == sector.n_particles
    if sector.s_z is not None:
        if n_qubits % 2:
            raise SectorError("S_z sectors need an even qubit count")
        alpha = sum(1 << q for q in range(0, n_qubits, 2))
        n_a = np.bitwise_count(idx & alpha).astype(np.int64)
        n_b = np.bitwise_count(idx & ~alpha).astype(np.int64)
        keep &= (n_a - n_b) == int(round(2 * sector.s_z))
    out = idx[keep]
    if len(out) == 0:
        raise SectorError(f"sector {sector} is empty on {n_qubits} qubits")
    return out


def _sector_matrix(h: PauliSum, idx: np.ndarray) -> np.ndarray:
    full = to_sparse(h)
    return full[idx][:, idx].toarray()


def sector_spectrum(h: PauliSum, sector: SectorSpec | None = None, how_many: int | None = None,
                    labels: bool = True) -> EigenSolution:
    """Lowest eigenpairs of ``h`` restricted to the sector, with ``<S^2>`` labels."""
    sector = sector or SectorSpec()
    n = h.n_qubits
    if n > SECTOR_QUBIT_CAP:
        raise DimensionError(f"{n} qubits exceeds the exact-diagonalization cap {SECTOR_QUBIT_CAP}")
    idx = sector_indices(n, sector)
    if len(idx) > SECTOR_DIM_CAP:
        raise DimensionError(f"sector dimension {len(idx)} exceeds cap {SECTOR_DIM_CAP}")
    how_many = len(idx) if how_many is None else how_many
    if not 0 < how_many <= len(idx):
        raise SectorError(f"requested {how_many} states from a sector of dimension {len(idx)}")
    mat = _sector_matrix(h, idx)
    evals, evecs = np.linalg.eigh(mat)
    vecs = []
    for k in range(how_many):
        v = np.zeros(1 << n, dtype=complex)
        v[idx] = evecs[:, k]
        vecs.append(v)
    lab = None
    if labels and n % 2 == 0:
        s2 = _sector_matrix(s_squared_operator(n), idx)
        lab = tuple(float(np.real(np.vdot(evecs[:, k], s2 @ evecs[:, k]))) for k in range(how_many))
    return EigenSolution(evals[:how_many].copy(), tuple(vecs), lab)


def spin_label(s2: float, tol: float = 0.05) -> str:
    """Multiplicity name from ``<S^2> = S(S+1)``."""
    s = (-1 + math.sqrt(1 + 4 * max(s2, 0.0))) / 2
    names = {0: "singlet", 1: "doublet", 2: "triplet", 3: "quartet", 4: "quintet"}
    mult = int(round(2 * s + 1))
    if abs(s2 - s * (s + 1)) > tol or abs(2 * s + 1 - mult) > tol:
        return "mixed"
    return names.get(mult - 1, f"{mult}-plet")


def nearest_eigenvalues(h: PauliSum, omega: float, m: int, sector: SectorSpec | None = None) -> np.ndarray:
    """The ``m`` sector eigenvalues closest to ``omega``, nearest first."""
    sol = sector_spectrum(h, sector, labels=False)
    if m > len(sol):
        raise SectorError(f"requested {m} eigenvalues from a sector of dimension {len(sol)}")
    ev = sol.eigenvalues
    order = np.argsort(np.abs(ev - omega), kind="stable")
    return ev[order[:m]]


def relative_error(computed: float, exact: float) -> float:
    """``|computed - exact| / |exact|``; NaN when ``exact`` is zero."""
    if exact == 0:
        return float("nan")
    return abs((computed - exact) / exact)
