"""Regenerate the FCIDUMP fixtures shipped with excited_vqe.

Needs pyscf, which is a development-only dependency. Integrals are STO-3G RHF
molecular orbitals; reference energies are full-space FCI roots in the
S_z = 0 sector.

    python tools/make_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pyscf
from pyscf.symm.param import IRREP_ID_MOLPRO
from pyscf import ao2mo, fci, gto, scf
from pyscf.tools import fcidump

OUT = Path(__file__).resolve().parents[1] / "src" / "excited_vqe" / "fixtures"
N_ROOTS = 8


def _geometry(name: str, r: float) -> tuple[str, str]:
    if name == "h2":
        return f"H 0 0 0; H 0 0 {r}", "D2h"
    if name == "lih":
        return f"Li 0 0 0; H 0 0 {r}", "C2v"
    if name == "h4":
        atoms = "; ".join(f"H 0 0 {i * r}" for i in range(4))
        return atoms, "D2h"
    raise ValueError(name)


def make(name: str, r: float) -> None:
    atom, group = _geometry(name, r)
    mol = gto.M(atom=atom, basis="sto-3g", symmetry=group, unit="Angstrom", verbose=0)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.kernel()
    if not mf.converged:
        raise RuntimeError(f"RHF failed for {name} at {r}")
    c = mf.mo_coeff
    norb = c.shape[1]
    h1 = c.T @ mf.get_hcore() @ c
    eri = ao2mo.restore(8, ao2mo.full(mol, c), norb)
    orbsym = [int(x) for x in getattr(mf.mo_coeff, "orbsym", [0] * norb)]
    molpro = [IRREP_ID_MOLPRO[mol.groupname][s % 10] for s in orbsym]

    stem = f"{name}_{fixture_tag(r)}"
    fcidump.from_integrals(
        str(OUT / f"{stem}.fcidump"), h1, eri, norb, mol.nelectron,
        nuc=mol.energy_nuc(), ms=0, orbsym=molpro, tol=1e-15,
        float_format=" %.17g",
    )

    solver = fci.direct_spin1.FCI()
    solver.conv_tol = 1e-13
    solver.max_cycle = 500
    nelec = (mol.nelectron // 2, mol.nelectron // 2)
    roots = min(N_ROOTS, _sector_dim(norb, nelec))
    e, _ = solver.kernel(h1, ao2mo.restore(1, eri, norb), norb, nelec,
                         nroots=roots, ecore=mol.energy_nuc())
    e = np.atleast_1d(e)
    meta = {
        "molecule": name,
        "bond_length_angstrom": r,
        "basis": "sto-3g",
        "reference_ground_ha": float(e[0]),
        "reference_excited_ha": [float(x) for x in e[1:]],
        "hf_energy_ha": float(mf.e_tot),
        "generator_tool": "pyscf",
        "generator_version": pyscf.__version__,
    }
    (OUT / f"{stem}.meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(stem, e[:4])


def fixture_tag(r: float) -> str:
    tag = f"{r:.3f}"
    return tag[:-1] if tag.endswith("0") else tag


def _sector_dim(norb: int, nelec: tuple[int, int]) -> int:
    from math import comb
    return comb(norb, nelec[0]) * comb(norb, nelec[1])


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    make("h2", 0.735)
    for r in (0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0):
        make("h4", r)
    for r in np.arange(0.4, 3.61, 0.4):
        make("lih", round(float(r), 2))


if __name__ == "__main__":
    main()
