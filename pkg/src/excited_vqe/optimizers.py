"""Gradient descent, Adam and quantum natural gradient updates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError, RegularizationError, UnsupportedError
from .simulator import Circuit, _check_params, generator_apply, layer_states

GD, ADAM, QNG = "gd", "adam", "qng"


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = ADAM
    learning_rate: float = 0.3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    qng_regularization: float = 1e-6
    adam_sqrt_bias: bool = False

    def __post_init__(self):
        if self.kind not in (GD, ADAM, QNG):
            raise ValueError(f"optimizer kind must be gd, adam or qng, got {self.kind!r}")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.qng_regularization >= 0:
            raise ValueError("qng_regularization must be non-negative")


@dataclass(frozen=True)
class OptimizerState:
    step: int
    m1: np.ndarray
    m2: np.ndarray

    @classmethod
    def fresh(cls, n_params: int) -> OptimizerState:
        return cls(0, np.zeros(n_params), np.zeros(n_params))


def _finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise FloatingPointError("non-finite parameters or gradient")


def _same_length(params, grad):
    params = np.asarray(params, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if params.shape != grad.shape:
        raise DimensionError(f"params {params.shape} vs gradient {grad.shape}")
    _finite(params, grad)
    return params, grad


def gd_step(params, grad, cfg: OptimizerConfig) -> np.ndarray:
    params, grad = _same_length(params, grad)
    return params - cfg.learning_rate * grad


def adam_step(params, grad, cfg: OptimizerConfig, st: OptimizerState) -> tuple[np.ndarray, OptimizerState]:
    """One Adam update with bias correction.

    The default step size is ``lr * sqrt(1 - b2^h) / (1 - b1^h)``.  With
    ``adam_sqrt_bias`` the denominator is ``sqrt(1 - b1^h)`` instead.
    """
    params, grad = _same_length(params, grad)
    if st.m1.shape != params.shape or st.m2.shape != params.shape:
        raise DimensionError("optimizer state does not match parameter count")
    h = st.step + 1
    m1 = cfg.beta1 * st.m1 + (1 - cfg.beta1) * grad
    m2 = cfg.beta2 * st.m2 + (1 - cfg.beta2) * grad * grad
    denom = 1 - cfg.beta1 ** h
    if cfg.adam_sqrt_bias:
        denom = np.sqrt(denom)
    rate = cfg.learning_rate * np.sqrt(1 - cfg.beta2 ** h) / denom
    new = params - rate * m1 / (np.sqrt(m2) + cfg.epsilon)
    return new, OptimizerState(h, m1, m2)


@dataclass(frozen=True, eq=False)
class BlockDiagonal:
    """Block-diagonal metric: ``blocks[l]`` acts on parameter slots ``slots[l]``."""

    blocks: tuple[np.ndarray, ...]
    slots: tuple[tuple[int, ...], ...]
    n_params: int

    def dense(self) -> np.ndarray:
        out = np.zeros((self.n_params, self.n_params))
        for b, s in zip(self.blocks, self.slots):
            out[np.ix_(s, s)] += b
        return out


def _layer_slots(circuit: Circuit) -> list[list[tuple[int, int]]]:
    """Per layer: (gate index, slot) of the parameterized gates."""
    out = []
    for layer in circuit.layers:
        out.append([(gi, circuit.gates[gi].param_slot) for gi in layer
                    if circuit.gates[gi].parameterized])
    return out


def geometric_tensor(circuit: Circuit, params, initial=0) -> BlockDiagonal:
    """Block-diagonal Fubini-Study metric, one block per circuit layer.

    Within a layer the gates are treated as acting on the layer's input state,
    so ``g_ij = Re<A_i A_j> - <A_i><A_j>`` on that state.  A parameter shared
    by several gates of one layer gets the summed generator.
    """
    params = _check_params(circuit, params)
    n = circuit.n_qubits
    states = layer_states(circuit, params, initial)
    blocks, slots = [], []
    seen: set[int] = set()
    for psi, entries in zip(states, _layer_slots(circuit)):
        if not entries:
            continue
        order: list[int] = []
        vecs: dict[int, np.ndarray] = {}
        for gi, slot in entries:
            g = circuit.gates[gi]
            if g.kind == "CNOT":
                raise UnsupportedError("CNOT has no generator")
            a_psi = generator_apply(g, n, psi)
            if slot in vecs:
                vecs[slot] = vecs[slot] + a_psi
            else:
                if slot in seen:
                    raise UnsupportedError(f"parameter {slot} is shared across layers")
                order.append(slot)
                vecs[slot] = a_psi
        mat = np.array([vecs[s] for s in order])
        means = (mat @ psi.conj()).real
        block = (mat.conj() @ mat.T).real - np.outer(means, means)
        blocks.append(0.5 * (block + block.T))
        slots.append(tuple(order))
        seen.update(order)
    return BlockDiagonal(tuple(blocks), tuple(slots), circuit.n_params)


def qng_step(params, grad, g: BlockDiagonal, cfg: OptimizerConfig) -> np.ndarray:
    """``theta - lr * (g + lam I)^-1 grad`` solved block by block."""
    params, grad = _same_length(params, grad)
    if g.n_params != len(params):
        raise DimensionError(f"metric for {g.n_params} parameters, got {len(params)}")
    lam = cfg.qng_regularization
    direction = grad.copy()
    for block, s in zip(g.blocks, g.slots):
        idx = list(s)
        mat = block + lam * np.eye(len(idx))
        try:
            c, low = sla.cho_factor(mat, check_finite=True)
            direction[idx] = sla.cho_solve((c, low), grad[idx])
        except np.linalg.LinAlgError:
            if lam == 0:
                raise RegularizationError("metric block is singular; use qng_regularization > 0")
            direction[idx] = np.linalg.solve(mat, grad[idx])
    _finite(direction)
    return params - cfg.learning_rate * direction


@dataclass
class Optimizer:
    """Stateful wrapper that applies the configured update to a loss gradient."""

    cfg: OptimizerConfig
    n_params: int
    state: OptimizerState = field(init=False)

    def __post_init__(self):
        self.state = OptimizerState.fresh(self.n_params)

    def step(self, params, grad, circuit: Circuit | None = None, initial=0, metric=None):
        if self.cfg.kind == GD:
            return gd_step(params, grad, self.cfg)
        if self.cfg.kind == ADAM:
            new, self.state = adam_step(params, grad, self.cfg, self.state)
            return new
        if metric is None:
            if circuit is None:
                raise ValueError("QNG needs the circuit to build the metric")
            metric = geometric_tensor(circuit, params, initial)
        return qng_step(params, grad, metric, self.cfg)

