"""Trajectory containers and canonical JSONL dataset files.

A dataset file is one header line (environment config, normalization
statistics, episode count) followed by one JSON line per trajectory. All
JSON is emitted in canonical form (sorted keys, no whitespace) so identical
data always produces identical bytes, and parse/serialize round-trips are
byte-exact.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .env import ACTION_DIM, EnvConfig, Observation

OBS_DIM = Observation.DIM

SCHEMA = "push-demos-v1"


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


@dataclass
class Trajectory:
    """One episode: T actions, T+1 observations, one mode label per action.

    Mode 0 is exploration, mode 1 is task-oriented. ``switch_step`` is the
    index of the first mode-1 action, or None if the episode never switched.
    """

    observations: np.ndarray
    actions: np.ndarray
    modes: np.ndarray
    seed: int
    success: bool
    switch_step: int | None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.observations = np.asarray(self.observations, dtype=np.float64)
        self.actions = np.asarray(self.actions, dtype=np.float64)
        self.modes = np.asarray(self.modes, dtype=np.int64)
        if self.observations.ndim != 2 or self.observations.shape[1] != OBS_DIM:
            raise ValueError(f"observations must be (T+1, {OBS_DIM})")
        if self.actions.ndim != 2 or self.actions.shape[1] != ACTION_DIM:
            raise ValueError(f"actions must be (T, {ACTION_DIM})")
        if len(self.observations) != len(self.actions) + 1:
            raise ValueError("need exactly one more observation than actions")
        if len(self.modes) != len(self.actions):
            raise ValueError("need one mode label per action")
        if not np.all(np.isfinite(self.observations)) or not np.all(np.isfinite(self.actions)):
            raise ValueError("non-finite values in trajectory")
        if not np.all((self.modes == 0) | (self.modes == 1)):
            raise ValueError("modes must be 0 or 1")

    @property
    def T(self) -> int:
        return len(self.actions)

    def to_record(self) -> dict:
        return {
            "observations": self.observations.tolist(),
            "actions": self.actions.tolist(),
            "modes": self.modes.tolist(),
            "seed": int(self.seed),
            "success": bool(self.success),
            "switch_step": None if self.switch_step is None else int(self.switch_step),
            "meta": self.meta,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Trajectory":
        return cls(
            observations=rec["observations"],
            actions=rec["actions"],
            modes=rec["modes"],
            seed=rec["seed"],
            success=rec["success"],
            switch_step=rec["switch_step"],
            meta=rec.get("meta", {}),
        )


@dataclass
class NormalizationStats:
    """Per-dimension mean/std for observations and actions."""

    obs_mean: np.ndarray
    obs_std: np.ndarray
    act_mean: np.ndarray
    act_std: np.ndarray

    STD_FLOOR = 1e-6  # constant features normalize to ~0 instead of blowing up

    def __post_init__(self):
        for name in ("obs_mean", "obs_std", "act_mean", "act_std"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))

    @classmethod
    def from_trajectories(cls, trajectories) -> "NormalizationStats":
        if not trajectories:
            raise ValueError("cannot compute statistics of an empty dataset")
        obs = np.concatenate([t.observations for t in trajectories], axis=0)
        act = np.concatenate([t.actions for t in trajectories], axis=0)
        return cls(
            obs_mean=obs.mean(axis=0),
            obs_std=np.maximum(obs.std(axis=0), cls.STD_FLOOR),
            act_mean=act.mean(axis=0),
            act_std=np.maximum(act.std(axis=0), cls.STD_FLOOR),
        )

    def normalize_obs(self, v: np.ndarray) -> np.ndarray:
        return (np.asarray(v, dtype=np.float64) - self.obs_mean) / self.obs_std

    def normalize_act(self, a: np.ndarray) -> np.ndarray:
        return (np.asarray(a, dtype=np.float64) - self.act_mean) / self.act_std

    def denormalize_act(self, a: np.ndarray) -> np.ndarray:
        return np.asarray(a, dtype=np.float64) * self.act_std + self.act_mean

    def to_dict(self) -> dict:
        return {
            "obs_mean": self.obs_mean.tolist(),
            "obs_std": self.obs_std.tolist(),
            "act_mean": self.act_mean.tolist(),
            "act_std": self.act_std.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationStats":
        return cls(obs_mean=d["obs_mean"], obs_std=d["obs_std"],
                   act_mean=d["act_mean"], act_std=d["act_std"])


@dataclass
class Dataset:
    env: EnvConfig
    stats: NormalizationStats
    trajectories: list
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.trajectories)


def _header_line(env: EnvConfig, stats: NormalizationStats, count: int, meta: dict) -> str:
    return canonical_dumps({
        "schema": SCHEMA,
        "env": env.to_dict(),
        "stats": stats.to_dict(),
        "count": count,
        "meta": meta,
    })


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_dataset(path: str, trajectories, env: EnvConfig, meta: dict | None = None) -> None:
    stats = NormalizationStats.from_trajectories(trajectories)
    lines = [_header_line(env, stats, len(trajectories), meta or {})]
    lines.extend(canonical_dumps(t.to_record()) for t in trajectories)
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_dataset(path: str) -> Dataset:
    with open(path) as f:
        header_text = f.readline()
        if not header_text:
            raise ValueError(f"{path}: empty dataset file")
        header = json.loads(header_text)
        if header.get("schema") != SCHEMA:
            raise ValueError(f"{path}: unknown schema {header.get('schema')!r}")
        trajectories = [Trajectory.from_record(json.loads(line))
                        for line in f if line.strip()]
    if len(trajectories) != header["count"]:
        raise ValueError(
            f"{path}: header count {header['count']} != {len(trajectories)} records")
    return Dataset(
        env=EnvConfig.from_dict(header["env"]),
        stats=NormalizationStats.from_dict(header["stats"]),
        trajectories=trajectories,
        meta=header.get("meta", {}),
    )


def append_trajectory(path: str, trajectory: Trajectory) -> Dataset:
    """Add one episode and rewrite the file with refreshed statistics."""
    ds = load_dataset(path)
    ds.trajectories.append(trajectory)
    save_dataset(path, ds.trajectories, ds.env, ds.meta)
    return load_dataset(path)


def split_train_heldout(trajectories, holdout_frac: float = 0.2, seed: int = 0):
    """Seed-stable shuffle split; the same inputs always yield the same split."""
    n = len(trajectories)
    if n < 2:
        raise ValueError("need at least 2 trajectories to split")
    n_held = min(n - 1, max(1, round(holdout_frac * n)))
    perm = np.random.default_rng(seed).permutation(n)
    held_idx = set(perm[:n_held].tolist())
    train = [trajectories[i] for i in range(n) if i not in held_idx]
    held = [trajectories[i] for i in range(n) if i in held_idx]
    return train, held
