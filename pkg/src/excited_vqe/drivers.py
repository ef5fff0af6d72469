"""Optimization drivers: VQE, VQD, weighted SSVQE and their folded-spectrum variants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ScheduleError
from .fermion import sz_operator
from .optimizers import QNG, Optimizer, OptimizerConfig, geometric_tensor
from .pauli import PauliSum, fold
from .simulator import (Circuit, ExpectationTerm, Loss, OverlapTerm, expectation, overlap, run,
                        value_and_gradient, variance)


@dataclass(frozen=True)
class StoppingRule:
    convergence_threshold: float = 1e-5
    max_iterations: int = 400

    def __post_init__(self):
        if not self.convergence_threshold > 0:
            raise ValueError("convergence_threshold must be positive")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")


@dataclass(frozen=True, eq=False)
class RunRecord:
    """Outcome of one optimization.

    For sequential methods (VQD, FS-VQD) the trace concatenates the stages
    and ``stage_iterations`` gives the length of each.
    """

    loss_trace: tuple[float, ...]
    final_params: np.ndarray
    energies: tuple[float, ...]
    variances: tuple[float, ...]
    iterations_used: int
    converged: bool
    aborted: bool = False
    states: tuple[np.ndarray, ...] = field(default=(), repr=False)
    stage_iterations: tuple[int, ...] = ()
    stage_params: tuple[np.ndarray, ...] = field(default=(), repr=False)
    method: str = ""

    @property
    def final_loss(self) -> float:
        return self.loss_trace[-1] if self.loss_trace else float("nan")


@dataclass(frozen=True)
class VqdSchedule:
    """One circuit per target state; ``betas[i]`` penalizes overlap with state ``i``."""

    circuits: tuple[Circuit, ...]
    betas: tuple[float, ...]
    initial_state: int | np.ndarray = 0

    def __post_init__(self):
        object.__setattr__(self, "circuits", tuple(self.circuits))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if not self.circuits:
            raise ScheduleError("need at least one circuit")
        if len(self.betas) != len(self.circuits) - 1:
            raise ScheduleError(f"{len(self.circuits)} states need {len(self.circuits) - 1} betas, "
                                f"got {len(self.betas)}")
        if any(not b > 0 for b in self.betas):
            raise ScheduleError("every beta must be positive")
        if len({c.n_qubits for c in self.circuits}) != 1:
            raise ScheduleError("circuits disagree on qubit count")


@dataclass(frozen=True)
class SsvqeSchedule:
    """Shared circuit over orthogonal basis inputs with weights ``w_0 > w_1 > ...``."""

    circuit: Circuit
    input_states: tuple[int, ...]
    weights: tuple[float, ...]
    equal_weights: bool = False

    def __post_init__(self):
        object.__setattr__(self, "input_states", tuple(int(s) for s in self.input_states))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.input_states:
            raise ScheduleError("need at least one input state")
        if len(self.weights) != len(self.input_states):
            raise ScheduleError("one weight per input state required")
        if len(set(self.input_states)) != len(self.input_states):
            raise ScheduleError("input basis states must be distinct (orthogonal)")
        if any(not 0 <= s < 1 << self.circuit.n_qubits for s in self.input_states):
            raise ScheduleError("input state index out of range")
        if any(not w > 0 for w in self.weights):
            raise ScheduleError("weights must be positive")
        if self.equal_weights:
            if len(set(self.weights)) != 1:
                raise ScheduleError("equal_weights set but weights differ")
        elif any(b >= a for a, b in zip(self.weights, self.weights[1:])):
            raise ScheduleError("weights must be strictly decreasing (or set equal_weights)")


def default_weights(k: int) -> tuple[float, ...]:
    """1.0, 0.7, 0.4 for three states; otherwise evenly spaced down to 0.4."""
    if k == 1:
        return (1.0,)
    return tuple(float(w) for w in np.round(np.linspace(1.0, 0.4, k), 12))


# --------------------------------------------------------------------------
# optimization loop


def optimize(circuit: Circuit, loss: Loss, cfg: OptimizerConfig, stop: StoppingRule,
             params0=None) -> tuple[np.ndarray, list[float], bool, bool]:
    """Minimize ``loss``; returns ``(params, trace, converged, aborted)``.

    Iteration ``t`` evaluates the loss at the current parameters and records
    it; the run stops once ``|L_t - L_{t-1}| < threshold`` or when the cap is
    reached, and the returned parameters are those of the last recorded loss.
    """
    params = np.zeros(circuit.n_params) if params0 is None else np.array(params0, dtype=float)
    opt = Optimizer(cfg, circuit.n_params)
    trace: list[float] = []
    for it in range(stop.max_iterations):
        value, grad = value_and_gradient(circuit, params, loss)
        if not (math.isfinite(value) and np.all(np.isfinite(grad))):
            return params, trace, False, True
        trace.append(value)
        if it > 0 and abs(value - trace[-2]) < stop.convergence_threshold:
            return params, trace, True, False
        if it == stop.max_iterations - 1:
            break
        metric = geometric_tensor(circuit, params, loss.inputs[0]) if cfg.kind == QNG else None
        params = opt.step(params, grad, metric=metric)
    return params, trace, False, False


def _report(h: PauliSum, states) -> tuple[tuple[float, ...], tuple[float, ...]]:
    return (tuple(expectation(s, h) for s in states),
            tuple(max(variance(s, h), 0.0) for s in states))


def _objective_terms(op: PauliSum, state: int, weight: float = 1.0, sqrt: bool = False,
                     penalty: PauliSum | None = None):
    terms = [ExpectationTerm(op, weight, state, sqrt)]
    if penalty is not None:
        terms.append(ExpectationTerm(penalty, weight, state))
    return terms


def _single(h_report: PauliSum, objective: PauliSum, circuit: Circuit, init, cfg, stop,
            params0=None, sqrt=False, penalty=None, method="vqe") -> RunRecord:
    loss = Loss((init,), _objective_terms(objective, 0, 1.0, sqrt, penalty))
    params, trace, conv, aborted = optimize(circuit, loss, cfg, stop, params0)
    psi = run(circuit, params, init)
    e, v = _report(h_report, [psi])
    return RunRecord(tuple(trace), params, e, v, len(trace), conv, aborted, (psi,),
                     (len(trace),), (params,), method)


def vqe(h: PauliSum, circuit: Circuit, init, optimizer: OptimizerConfig, stop: StoppingRule,
        params0=None, penalty: PauliSum | None = None) -> RunRecord:
    """Minimize ``<H>`` (plus an optional penalty operator such as the S_z term)."""
    return _single(h, h, circuit, init, optimizer, stop, params0, penalty=penalty)


def fs_vqe(h: PauliSum, omega: float, circuit: Circuit, init, optimizer: OptimizerConfig,
           stop: StoppingRule, params0=None, sqrt: bool = False,
           penalty: PauliSum | None = None) -> RunRecord:
    """VQE on ``(H - omega)^2``; energies and variances are reported for ``H``."""
    return _single(h, fold(h, omega), circuit, init, optimizer, stop, params0, sqrt, penalty,
                   "fs_vqe")


def _sequential(h_report: PauliSum, objective: PauliSum, schedule: VqdSchedule, cfg, stop,
                sqrt: bool, penalty, method: str) -> RunRecord:
    found: list[np.ndarray] = []
    trace: list[float] = []
    stages, stage_params = [], []
    converged, aborted = True, False
    init = schedule.initial_state
    for k, circuit in enumerate(schedule.circuits):
        terms = _objective_terms(objective, 0, 1.0, sqrt, penalty)
        terms += [OverlapTerm(found[i], schedule.betas[i], 0) for i in range(k)]
        params, tr, conv, ab = optimize(circuit, Loss((init,), terms), cfg, stop)
        found.append(run(circuit, params, init))
        trace += tr
        stages.append(len(tr))
        stage_params.append(params)
        converged &= conv
        aborted |= ab
        if ab:
            break
    e, v = _report(h_report, found)
    return RunRecord(tuple(trace), np.concatenate(stage_params), e, v, len(trace), converged,
                     aborted, tuple(found), tuple(stages), tuple(stage_params), method)


def vqd(h: PauliSum, schedule: VqdSchedule, optimizer: OptimizerConfig, stop: StoppingRule,
        penalty: PauliSum | None = None) -> RunRecord:
    """Sequential deflation: state ``k`` minimizes ``<H> + sum_i beta_i |<psi_i|psi_k>|^2``."""
    return _sequential(h, h, schedule, optimizer, stop, False, penalty, "vqd")


def fs_vqd(h: PauliSum, omega: float, schedule: VqdSchedule, optimizer: OptimizerConfig,
           stop: StoppingRule, sqrt: bool = False, penalty: PauliSum | None = None) -> RunRecord:
    """VQD on the folded operator ``(H - omega)^2``."""
    return _sequential(h, fold(h, omega), schedule, optimizer, stop, sqrt, penalty, "fs_vqd")


def _weighted(h_report: PauliSum, objective: PauliSum, schedule: SsvqeSchedule, cfg, stop,
              sqrt: bool, penalty, method: str) -> RunRecord:
    terms = []
    for j, w in enumerate(schedule.weights):
        terms += _objective_terms(objective, j, w, sqrt, penalty)
    loss = Loss(schedule.input_states, terms)
    params, trace, conv, aborted = optimize(schedule.circuit, loss, cfg, stop)
    states = [run(schedule.circuit, params, s) for s in schedule.input_states]
    e, v = _report(h_report, states)
    if schedule.equal_weights:
        # no weight ordering to follow; report by energy
        order = sorted(range(len(states)), key=lambda i: e[i])
        states = [states[i] for i in order]
        e = tuple(e[i] for i in order)
        v = tuple(v[i] for i in order)
    return RunRecord(tuple(trace), params, e, v, len(trace), conv, aborted, tuple(states),
                     (len(trace),), (params,), method)


def ssvqe_weighted(h: PauliSum, schedule: SsvqeSchedule, optimizer: OptimizerConfig,
                   stop: StoppingRule, penalty: PauliSum | None = None) -> RunRecord:
    """One optimization of ``sum_j w_j <phi_j|U+ H U|phi_j>`` over orthogonal inputs."""
    return _weighted(h, h, schedule, optimizer, stop, False, penalty, "ssvqe")


def fs_ssvqe(h: PauliSum, omega: float, schedule: SsvqeSchedule, optimizer: OptimizerConfig,
             stop: StoppingRule, sqrt: bool = False, penalty: PauliSum | None = None) -> RunRecord:
    """Weighted SSVQE on ``(H - omega)^2``."""
    return _weighted(h, fold(h, omega), schedule, optimizer, stop, sqrt, penalty, "fs_ssvqe")


# --------------------------------------------------------------------------
# spin penalty and input states


def spin_penalty_operator(n_qubits: int, m_z: float = 0.0, weight: float = 1.0) -> PauliSum:
    """``weight * (S_z - m_z)^2`` as a Pauli sum."""
    sz = sz_operator(n_qubits) - PauliSum.identity(n_qubits, m_z)
    return (sz @ sz) * weight


def spin_penalty(state: np.ndarray, m_z: float = 0.0, weight: float = 1.0) -> float:
    n = int(state.shape[0]).bit_length() - 1
    return expectation(state, spin_penalty_operator(n, m_z, weight))


def sector_basis_states(n_qubits: int, n_electrons: int, count: int, s_z: float = 0.0,
                        accept=None) -> tuple[int, ...]:
    """The ``count`` lowest basis indices with the given N and S_z.

    ``accept`` optionally filters indices further (e.g. a Z2 symmetry sector).
    """
    alpha = sum(1 << q for q in range(0, n_qubits, 2))
    out = []
    for idx in range(1 << n_qubits):
        if idx.bit_count() != n_electrons:
            continue
        if (idx & alpha).bit_count() - (idx & ~alpha).bit_count() != round(2 * s_z):
            continue
        if accept is not None and not accept(idx):
            continue
        out.append(idx)
        if len(out) == count:
            return tuple(out)
    raise ScheduleError(f"only {len(out)} basis states available in the sector, need {count}")


def pairwise_overlaps(states: Sequence[np.ndarray]) -> list[float]:
    return [overlap(a, b) for i, a in enumerate(states) for b in states[i + 1:]]


__all__ = [
    "StoppingRule", "RunRecord", "VqdSchedule", "SsvqeSchedule", "default_weights", "optimize",
    "vqe", "vqd", "ssvqe_weighted", "fs_vqe", "fs_vqd", "fs_ssvqe", "spin_penalty",
    "spin_penalty_operator", "sector_basis_states", "pairwise_overlaps",
]
