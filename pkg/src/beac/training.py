"""Minibatch Adam training over demonstration trajectories.

Everything that can influence the learned weights flows from two integers:
the parameter-init/shuffle seed and the dataset contents. Re-running with
the same inputs reproduces the weights bit for bit.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .data import NormalizationStats, Trajectory
from .models import ModelConfig, assemble_batch, compute_losses, init_params, training_graph


class TrainingDiverged(RuntimeError):
    """Loss or gradients left the representable range."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 120
    batch_size: int = 10
    lr: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be > 0")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


@dataclass
class TrainResult:
    params: dict[str, Tensor]
    model_config: ModelConfig
    train_config: TrainConfig
    stats: NormalizationStats
    loss_history: list[float] = field(default_factory=list)
    final_losses: dict[str, float] = field(default_factory=dict)
    train_seconds: float = 0.0  # process time of the optimization loop


def train(model_config: ModelConfig, trajectories: list[Trajectory],
          stats: NormalizationStats | None = None,
          train_config: TrainConfig | None = None,
          log_fn=None,
          initial_params: dict[str, Tensor] | None = None) -> TrainResult:
    if not trajectories:
        raise ValueError("no trajectories to train on")
    cfg = train_config or TrainConfig()
    stats = stats or NormalizationStats.from_trajectories(trajectories)
    params = initial_params if initial_params is not None else init_params(
        model_config, seed=cfg.seed)
    opt = ad.adam_init(params, lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    n = len(trajectories)
    loss_history = []
    # pad every batch to the longest trajectory so all full batches share
    # one graph; otherwise each distinct batch max length caches another
    t_max = max(t.T for t in trajectories)

    t0 = time.process_time()
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        batch_losses = []
        for bi, start in enumerate(range(0, n, cfg.batch_size)):
            batch = [trajectories[i] for i in order[start:start + cfg.batch_size]]
            feeds, B, T = assemble_batch(model_config, batch, stats, pad_to=t_max)
            graph = training_graph(model_config, B, T)
            bindings = {**params, **feeds}
            try:
                loss = ad.forward(graph.total, bindings).item()
                grads = ad.backward(graph.total, params)
                params, opt = ad.adam_step(params, grads, opt)
            except ValueError as e:
                raise TrainingDiverged(
                    f"diverged at epoch {epoch} batch {bi}: {e}") from e
            ad.release(graph.total)
            batch_losses.append(loss)
        loss_history.append(float(np.mean(batch_losses)))
        if log_fn is not None:
            log_fn(f"epoch {epoch + 1}/{cfg.epochs} loss {loss_history[-1]:.6f}")
    train_seconds = time.process_time() - t0

    return TrainResult(
        params=params,
        model_config=model_config,
        train_config=cfg,
        stats=stats,
        loss_history=loss_history,
        final_losses=compute_losses(model_config, params, trajectories, stats),
        train_seconds=train_seconds,
    )
