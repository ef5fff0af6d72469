"""Experiment configuration: a JSON document with a fixed schema.

Example::

    {
      "molecule": "lih",
      "bond_lengths": [1.2, 1.6],
      "method": "vqd",
      "ansatz": "qccsd",
      "layers": [2, 3, 4],
      "optimizer": {"kind": "adam", "learning_rate": 0.3},
      "tapering": true,
      "active_space": {"frozen_occupied": [0], "removed_virtual": []},
      "betas": [3.0, 3.0],
      "stopping": {"convergence_threshold": 1e-5, "max_iterations": 400}
    }

``fixtures`` may list explicit FCIDUMP paths instead of ``molecule`` and
``bond_lengths``; each entry is a path or ``{"path": ..., "bond_length": ...}``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .drivers import StoppingRule, default_weights
from .errors import ConfigError
from .fermion import ActiveSpace
from .optimizers import OptimizerConfig

METHODS = ("exact", "vqe", "vqd", "ssvqe", "fs_vqe", "fs_vqd", "fs_ssvqe")
ANSATZE = ("qccsd", "uccsd", "se")
_FS_BETA = 5.0
_VQD_BETA = 3.0


@dataclass(frozen=True)
class FixtureRef:
    path: str
    bond_length: float | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    method: str = "vqe"
    molecule: str | None = None
    bond_lengths: tuple[float, ...] = ()
    fixtures: tuple[FixtureRef, ...] = ()
    ansatz: str = "qccsd"
    layers: tuple[int, ...] = (1,)
    spin_restricted: bool = True
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    tapering: bool = False
    active_space: ActiveSpace = field(default_factory=ActiveSpace)
    omega: float | None = None
    n_states: int | None = None
    betas: tuple[float, ...] | None = None
    weights: tuple[float, ...] | None = None
    equal_weights: bool = False
    sqrt_loss: bool = False
    spin_penalty: float = 1.0
    m_z: float = 0.0
    stopping: StoppingRule = field(default_factory=StoppingRule)
    output_dir: str | None = None
    check_tolerance: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method: expected one of {', '.join(METHODS)}, got {self.method!r}")
        if self.ansatz not in ANSATZE:
            raise ConfigError(f"ansatz: expected one of {', '.join(ANSATZE)}, got {self.ansatz!r}")
        if not self.layers or any(int(n) < 1 for n in self.layers):
            raise ConfigError("layers: need at least one positive layer count")
        if self.method.startswith("fs_") and self.omega is None:
            raise ConfigError(f"omega: required for method {self.method}")
        if self.betas is not None and len(self.betas) != self.state_count - 1:
            raise ConfigError(f"betas: need {self.state_count - 1} values for {self.state_count} states")
        if self.weights is not None and len(self.weights) != self.state_count:
            raise ConfigError(f"weights: need {self.state_count} values")
        if self.molecule is None and not self.fixtures:
            raise ConfigError("fixtures: no fixture files or molecule given")
        if self.molecule is not None and not self.bond_lengths:
            raise ConfigError("bond_lengths: required together with molecule")

    @property
    def state_count(self) -> int:
        if self.method in ("vqd", "fs_vqd"):
            return len(self.layers)
        if self.method in ("ssvqe", "fs_ssvqe"):
            if self.n_states is not None:
                return self.n_states
            return len(self.weights) if self.weights is not None else 3
        if self.method == "exact":
            return self.n_states or 3
        return 1

    def resolved_betas(self) -> tuple[float, ...]:
        if self.betas is not None:
            return tuple(self.betas)
        beta = _FS_BETA if self.method.startswith("fs_") else _VQD_BETA
        return (beta,) * (self.state_count - 1)

    def resolved_weights(self) -> tuple[float, ...]:
        if self.weights is not None:
            return tuple(self.weights)
        if self.equal_weights:
            return (0.4,) * self.state_count
        return default_weights(self.state_count)

    # -- (de)serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        d["active_space"] = {"frozen_occupied": list(self.active_space.frozen_occupied),
                             "removed_virtual": list(self.active_space.removed_virtual)}
        d["fixtures"] = [asdict(f) for f in self.fixtures]
        for k in ("bond_lengths", "layers", "betas", "weights"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"{sorted(unknown)[0]}: unknown configuration field")
        d = dict(d)
        builders = {
            "optimizer": lambda v: OptimizerConfig(**v),
            "stopping": lambda v: StoppingRule(**v),
            "active_space": lambda v: ActiveSpace(tuple(v.get("frozen_occupied", ())),
                                                  tuple(v.get("removed_virtual", ()))),
        }
        for name, build in builders.items():
            if name in d:
                try:
                    d[name] = build(d[name])
                except (TypeError, ValueError, AttributeError) as exc:
                    raise ConfigError(f"{name}: {exc}") from exc
        if "fixtures" in d:
            refs = []
            for item in d["fixtures"]:
                if isinstance(item, str):
                    refs.append(FixtureRef(item))
                else:
                    refs.append(FixtureRef(str(item["path"]), item.get("bond_length")))
            d["fixtures"] = tuple(refs)
        for k in ("bond_lengths", "layers", "betas", "weights"):
            if d.get(k) is not None:
                d[k] = tuple(d[k])
        if "layers" in d:
            d["layers"] = tuple(int(n) for n in d["layers"])
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> ExperimentConfig:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be an object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        return cls.from_json(Path(path).read_text())

