"""Per-fixture experiment pipeline shared by the CLI subcommands."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fixtures as fx
from .ansatz import ResourceReport, qccsd, resources, strongly_entangled, uccsd
from .config import ExperimentConfig
from .drivers import (RunRecord, SsvqeSchedule, VqdSchedule, fs_ssvqe, fs_vqd, fs_vqe,
                      sector_basis_states, spin_penalty_operator, ssvqe_weighted, vqd, vqe)
from .exact import SectorSpec, nearest_eigenvalues, relative_error, sector_spectrum
from .fermion import hartree_fock_index, molecular_hamiltonian
from .pauli import PauliSum
from .simulator import Circuit
from .tapering import (Z2Symmetries, find_symmetries, sector_of, taper, taper_basis_index,
                       taper_circuit, taper_operator)


@dataclass(frozen=True)
class Problem:
    """Hamiltonian as optimized (possibly tapered) plus the full-space data."""

    molecule: str
    bond_length: float
    full: PauliSum
    n_electrons: int
    hamiltonian: PauliSum
    reference_index: int
    symmetries: Z2Symmetries | None = None
    sector: tuple[int, ...] | None = None

    @property
    def tapered(self) -> bool:
        return self.symmetries is not None

    @property
    def s_z_sector(self) -> SectorSpec:
        return SectorSpec(self.n_electrons, 0.0)


@dataclass(frozen=True, eq=False)
class PointResult:
    molecule: str
    bond_length: float
    method: str
    energies: tuple[float, ...]
    exact: tuple[float, ...]
    variances: tuple[float, ...]
    s2_labels: tuple[float, ...]
    record: RunRecord | None
    resources: tuple[ResourceReport, ...] = ()
    circuit_names: tuple[str, ...] = ()
    n_qubits: int = 0
    stage_iterations: tuple[int, ...] = field(default=())

    @property
    def relative_errors(self) -> tuple[float, ...]:
        return tuple(relative_error(e, x) for e, x in zip(self.energies, self.exact))

    @property
    def aborted(self) -> bool:
        return self.record is not None and self.record.aborted


def fixture_list(cfg: ExperimentConfig) -> list[tuple[str, float, Path]]:
    out = []
    if cfg.molecule is not None:
        for r in cfg.bond_lengths:
            out.append((cfg.molecule, float(r), fx.fixture_path(cfg.molecule, r)))
    for ref in cfg.fixtures:
        path = Path(ref.path)
        meta = fx.read_metadata(path)
        r = ref.bond_length if ref.bond_length is not None else meta.get("bond_length_angstrom", math.nan)
        out.append((meta.get("molecule", path.stem.split("_")[0]), float(r), path))
    return sorted(out, key=lambda t: (t[0], t[1]))


def build_problem(cfg: ExperimentConfig, molecule: str, bond_length: float, path: Path,
                  sector=None) -> Problem:
    f = fx.load_path(path).fcidump
    mh = molecular_hamiltonian(f, None if cfg.active_space.is_empty else cfg.active_space)
    h = mh.hamiltonian
    hf = hartree_fock_index(mh.n_electrons, h.n_qubits)
    if not cfg.tapering:
        return Problem(molecule, bond_length, h, mh.n_electrons, h, hf)
    syms = find_symmetries(h)
    sector = tuple(sector) if sector is not None else sector_of(hf, syms)
    reduced = taper(h, syms, sector).reduced
    return Problem(molecule, bond_length, h, mh.n_electrons, reduced, taper_basis_index(hf, syms),
                   syms, sector)


def build_circuit(cfg: ExperimentConfig, p: Problem, layers: int) -> Circuit:
    n = p.full.n_qubits
    if cfg.ansatz == "se":
        return strongly_entangled(p.hamiltonian.n_qubits, layers)
    make = qccsd if cfg.ansatz == "qccsd" else uccsd
    c = make(n, p.n_electrons, layers, cfg.spin_restricted)
    if p.tapered:
        c = taper_circuit(c, p.symmetries, p.sector)
    return c


def penalty_operator(cfg: ExperimentConfig, p: Problem) -> PauliSum | None:
    """S_z penalty, only used with the strongly entangled ansatz."""
    if cfg.ansatz != "se" or cfg.spin_penalty == 0:
        return None
    op = spin_penalty_operator(p.full.n_qubits, cfg.m_z, cfg.spin_penalty)
    if p.tapered:
        op = taper_operator(op, p.symmetries, p.sector)
    return op


def ssvqe_inputs(p: Problem, count: int) -> tuple[int, ...]:
    n = p.full.n_qubits
    if not p.tapered:
        return sector_basis_states(n, p.n_electrons, count)
    full = sector_basis_states(n, p.n_electrons, count,
                               accept=lambda i: sector_of(i, p.symmetries) == p.sector)
    return tuple(taper_basis_index(i, p.symmetries) for i in full)


def solve_point(cfg: ExperimentConfig, molecule: str, bond_length: float, path: Path) -> PointResult:
    p = build_problem(cfg, molecule, bond_length, path)
    k = cfg.state_count
    spec = p.s_z_sector
    if cfg.method == "exact":
        sol = sector_spectrum(p.full, spec, k)
        ev = tuple(float(e) for e in sol.eigenvalues)
        return PointResult(molecule, bond_length, "exact", ev, ev, (0.0,) * k, sol.labels or (),
                           None, n_qubits=p.full.n_qubits)
    h = p.hamiltonian
    pen = penalty_operator(cfg, p)
    opt, stop = cfg.optimizer, cfg.stopping
    method = cfg.method
    if method in ("vqe", "fs_vqe"):
        circuits = [build_circuit(cfg, p, cfg.layers[0])]
        if method == "vqe":
            rec = vqe(h, circuits[0], p.reference_index, opt, stop, penalty=pen)
        else:
            rec = fs_vqe(h, cfg.omega, circuits[0], p.reference_index, opt, stop, sqrt=cfg.sqrt_loss,
                         penalty=pen)
    elif method in ("vqd", "fs_vqd"):
        circuits = [build_circuit(cfg, p, L) for L in cfg.layers]
        sched = VqdSchedule(circuits, cfg.resolved_betas(), p.reference_index)
        if method == "vqd":
            rec = vqd(h, sched, opt, stop, penalty=pen)
        else:
            rec = fs_vqd(h, cfg.omega, sched, opt, stop, sqrt=cfg.sqrt_loss, penalty=pen)
    else:
        circuits = [build_circuit(cfg, p, cfg.layers[0])]
        sched = SsvqeSchedule(circuits[0], ssvqe_inputs(p, k), cfg.resolved_weights(),
                              cfg.equal_weights)
        if method == "ssvqe":
            rec = ssvqe_weighted(h, sched, opt, stop, penalty=pen)
        else:
            rec = fs_ssvqe(h, cfg.omega, sched, opt, stop, sqrt=cfg.sqrt_loss, penalty=pen)
    if method.startswith("fs_"):
        # reference: the exact eigenvalue nearest to each reported energy
        window = nearest_eigenvalues(p.full, cfg.omega, min(k + 6, _sector_dim(p)), spec)
        exact = tuple(float(window[np.argmin(np.abs(window - e))]) for e in rec.energies)
        labels = ()
    else:
        sol = sector_spectrum(p.full, spec, k)
        exact = tuple(float(e) for e in sol.eigenvalues)
        labels = sol.labels or ()
    reports = tuple(resources(c) for c in circuits)
    names = tuple(f"{cfg.ansatz}x{c}" for c in (cfg.layers if method in ("vqd", "fs_vqd")
                                                 else cfg.layers[:1]))
    return PointResult(molecule, bond_length, method, rec.energies, exact, rec.variances, labels,
                       rec, reports, names, h.n_qubits, rec.stage_iterations)


def _sector_dim(p: Problem) -> int:
    n = p.full.n_qubits // 2
    return math.comb(n, (p.n_electrons + 1) // 2) * math.comb(n, p.n_electrons // 2)


def folded_target(h: PauliSum, omega: float, n_electrons: int) -> float:
    """Smallest ``(E - omega)^2`` over the (N, S_z = 0) sector spectrum."""
    e = nearest_eigenvalues(h, omega, 1, SectorSpec(n_electrons, 0.0))[0]
    return float((e - omega) ** 2)


def compare_optimizers(cfg: ExperimentConfig, variants) -> list[tuple]:
    """Run the first fixture of ``cfg`` once per optimizer config.

    Returns ``(optimizer, iterations, final_loss, target, gap, record)`` rows.
    The task is FS-VQE when ``omega`` is set, otherwise plain VQE.
    """
    molecule, r, path = fixture_list(cfg)[0]
    p = build_problem(cfg, molecule, r, path)
    circuit = build_circuit(cfg, p, cfg.layers[0])
    pen = penalty_operator(cfg, p)
    rows = []
    if cfg.omega is not None:
        target = folded_target(p.full, cfg.omega, p.n_electrons)
    else:
        target = float(sector_spectrum(p.full, p.s_z_sector, 1, labels=False).eigenvalues[0])
    for opt in variants:
        if cfg.omega is not None:
            rec = fs_vqe(p.hamiltonian, cfg.omega, circuit, p.reference_index, opt, cfg.stopping,
                         penalty=pen)
        else:
            rec = vqe(p.hamiltonian, circuit, p.reference_index, opt, cfg.stopping, penalty=pen)
        rows.append((opt, rec.iterations_used, rec.final_loss, target,
                     abs(rec.final_loss - target), rec))
    return rows

