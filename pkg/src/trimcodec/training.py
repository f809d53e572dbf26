"""ADAM training with the four-step learning-rate ladder.

The ladder is 3e-4, 1e-4, 3.33e-5, 1.11e-5.  Mean training loss is evaluated
every ``eval_interval`` steps; a window that fails to improve on the previous
one by more than 0.1% counts toward ``patience``, and once patience runs out
the trainer drops to the next rate.  Training stops when the last rate
plateaus or ``max_steps`` is reached.  Everything is seeded and single
threaded, so a repeated run reproduces the loss history bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ContextModel
from .tensor import Rng

LEARNING_RATES = (3e-4, 1e-4, 3.33e-5, 1.11e-5)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class TrainState:
    """Optimizer and ladder state: single writer, mutated in place."""

    step: int = 0
    lr_index: int = 0
    plateau_count: int = 0
    seed: int = 0
    first_moments: list[np.ndarray] = field(default_factory=list)
    second_moments: list[np.ndarray] = field(default_factory=list)

    @property
    def learning_rate(self) -> float:
        return LEARNING_RATES[self.lr_index]

    @classmethod
    def for_params(cls, params: list[np.ndarray], seed: int = 0) -> "TrainState":
        return cls(
            seed=seed,
            first_moments=[np.zeros_like(p) for p in params],
            second_moments=[np.zeros_like(p) for p in params],
        )


def adam_step(state: TrainState, params: list[np.ndarray], grads: list[np.ndarray]) -> TrainState:
    """One bias-corrected ADAM update, in place on ``params``."""
    if len(params) != len(grads) or len(params) != len(state.first_moments):
        raise ValueError("params, grads and moments must align")
    state.step += 1
    t = state.step
    lr = state.learning_rate
    c1 = 1.0 - ADAM_BETA1 ** t
    c2 = 1.0 - ADAM_BETA2 ** t
    for p, g, m, v in zip(params, grads, state.first_moments, state.second_moments):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * np.square(g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)
    return state


def batch_loss_gradients(model: ContextModel, batch: list[np.ndarray]):
    """Sum of per-sample losses and gradients, accumulated in a fixed order."""
    total_loss = 0.0
    total_grads = None
    for cuboid in batch:
        loss, grads = model.backward(cuboid)
        total_loss += loss
        if total_grads is None:
            total_grads = grads
        else:
            for acc, g in zip(total_grads, grads):
                acc += g
    return total_loss, total_grads


@dataclass
class TrainResult:
    history: list[dict]
    steps: int
    final_loss_bps: float
    stopped_by_plateau: bool


def train(model: ContextModel, corpus: list[np.ndarray], *, batch_size: int = 2,
          max_steps: int = 2000, eval_interval: int = 200, patience: int = 3,
          improvement: float = 1e-3, seed: int = 0,
          log=None) -> TrainResult:
    """Minibatch ADAM over ``corpus`` until the ladder is exhausted.

    History rows are ``{"step", "loss_bps", "lr"}``, one per evaluation
    window; ``log`` (if given) receives each row as it is produced.
    """
    if not corpus:
        raise ValueError("corpus is empty")
    depth = corpus[0].shape[2]
    for cuboid in corpus:
        if cuboid.ndim != 3 or cuboid.shape[2] != depth:
            raise ValueError("corpus cuboids must all share the same depth")
    if model.config.depth != depth:
        raise ValueError(f"model depth {model.config.depth} does not match corpus depth {depth}")
    if batch_size < 1 or max_steps < 1 or eval_interval < 1 or patience < 1:
        raise ValueError("batch_size, max_steps, eval_interval and patience must be positive")

    params = model.parameters()
    state = TrainState.for_params(params, seed=seed)
    gen = Rng(seed).generator()

    history: list[dict] = []
    window_bits = 0.0
    window_symbols = 0
    prev_window: float | None = None
    stopped_by_plateau = False

    while state.step < max_steps:
        picks = gen.integers(0, len(corpus), size=batch_size)
        batch = [corpus[int(i)] for i in picks]
        loss, grads = batch_loss_gradients(model, batch)
        adam_step(state, params, grads)
        window_bits += loss
        window_symbols += sum(c.size for c in batch)

        if state.step % eval_interval == 0:
            current = window_bits / window_symbols
            row = {"step": state.step, "loss_bps": current, "lr": state.learning_rate}
            history.append(row)
            if log is not None:
                log(row)
            window_bits = 0.0
            window_symbols = 0
            if prev_window is not None and current >= prev_window * (1.0 - improvement):
                state.plateau_count += 1
            else:
                state.plateau_count = 0
            if state.plateau_count >= patience:
                if state.lr_index + 1 < len(LEARNING_RATES):
                    state.lr_index += 1
                    state.plateau_count = 0
                    prev_window = current
                else:
                    stopped_by_plateau = True
                    break
            else:
                prev_window = current

    model.invalidate_digest()
    final = history[-1]["loss_bps"] if history else float("nan")
    return TrainResult(history, state.step, final, stopped_by_plateau)
