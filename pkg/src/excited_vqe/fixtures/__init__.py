"""Bundled STO-3G FCIDUMP fixtures (H2, linear H4, LiH) with reference metadata.

Files are named ``<molecule>_<bond length>.fcidump`` with a
``.meta.json`` sidecar holding reference FCI energies in the S_z = 0 sector.
They were generated by ``tools/make_fixtures.py``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..fermion import FciDump, read_fcidump

FIXTURE_DIR = Path(__file__).resolve().parent


@dataclass
class Fixture:
    name: str
    bond_length: float
    path: Path
    fcidump: FciDump
    metadata: dict

    @property
    def reference_ground(self) -> float:
        return self.metadata["reference_ground_ha"]

    @property
    def reference_energies(self) -> list[float]:
        return [self.metadata["reference_ground_ha"], *self.metadata["reference_excited_ha"]]


def _tag(bond_length: float) -> str:
    tag = f"{bond_length:.3f}"
    return tag[:-1] if tag.endswith("0") else tag


def fixture_path(molecule: str, bond_length: float) -> Path:
    path = FIXTURE_DIR / f"{molecule}_{_tag(bond_length)}.fcidump"
    if not path.exists():
        raise FileNotFoundError(f"no fixture for {molecule} at {bond_length} A ({path.name})")
    return path


def read_metadata(path: str | Path) -> dict:
    path = Path(path)
    meta = path.with_name(path.name.removesuffix(".fcidump") + ".meta.json")
    return json.loads(meta.read_text()) if meta.exists() else {}


def load_path(path: str | Path) -> Fixture:
    path = Path(path)
    meta = read_metadata(path)
    name = meta.get("molecule", path.stem.split("_")[0])
    return Fixture(name, float(meta.get("bond_length_angstrom", "nan")), path,
                   read_fcidump(path), meta)


def load(molecule: str, bond_length: float) -> Fixture:
    return load_path(fixture_path(molecule, bond_length))


def available(molecule: str) -> list[float]:
    out = []
    for p in sorted(FIXTURE_DIR.glob(f"{molecule}_*.fcidump")):
        out.append(float(p.stem.split("_", 1)[1]))
    return sorted(out)
