"""Planar invisible-object pushing simulator.

A disc end-effector moves on a bounded table by bounded displacement
commands and pushes a second (unobserved) disc quasi-statically: when the
moved end-effector overlaps the object, the object translates along the
center-to-center line by exactly the overlap depth, leaving the discs
tangent. Observations carry end-effector pose, velocity, and a synthetic
contact force that is nonzero only while discs overlap; the object position
never appears in an observation.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class EnvConfig:
    """Geometry, noise, and episode parameters. Distances in meters."""

    sigma: float = 0.10              # half-width of initial-position noise
    success_threshold: float = 0.10  # object-to-goal distance for success (strict <)
    horizon: int = 400               # max env steps per episode
    obj_radius: float = 0.03
    ee_radius: float = 0.02
    goal_pos: tuple[float, float] = (0.30, 0.0)
    seed: int = 0
    workspace_half: float = 0.50
    a_max: float = 0.01              # per-axis action clip
    kappa: float = 100.0             # force gain per meter of overlap
    home_pos: tuple[float, float] = (-0.10, -0.16)
    obj_nominal: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.success_threshold <= 0:
            raise ValueError("success_threshold must be > 0")
        if self.horizon <= 0:
            raise ValueError("horizon must be > 0")
        if self.obj_radius <= 0 or self.ee_radius <= 0:
            raise ValueError("radii must be > 0")
        if self.a_max <= 0:
            raise ValueError("a_max must be > 0")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["goal_pos"] = list(self.goal_pos)
        d["home_pos"] = list(self.home_pos)
        d["obj_nominal"] = list(self.obj_nominal)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EnvConfig":
        kw = dict(d)
        for k in ("goal_pos", "home_pos", "obj_nominal"):
            if k in kw:
                kw[k] = tuple(float(v) for v in kw[k])
        return cls(**kw)


@dataclass
class EnvState:
    """Full simulator state, including the latent object position."""

    ee_pos: np.ndarray
    ee_vel: np.ndarray
    obj_pos: np.ndarray
    obj_radius: float
    ee_radius: float
    goal_pos: np.ndarray
    step_count: int = 0

    def copy(self) -> "EnvState":
        return EnvState(
            ee_pos=self.ee_pos.copy(),
            ee_vel=self.ee_vel.copy(),
            obj_pos=self.obj_pos.copy(),
            obj_radius=self.obj_radius,
            ee_radius=self.ee_radius,
            goal_pos=self.goal_pos.copy(),
            step_count=self.step_count,
        )


@dataclass
class Observation:
    """What a policy may see: no object position, ever."""

    ee_pos: np.ndarray
    ee_vel: np.ndarray
    contact_force: np.ndarray

    DIM = 6

    def vector(self) -> np.ndarray:
        return np.concatenate([self.ee_pos, self.ee_vel, self.contact_force])

    @classmethod
    def from_vector(cls, v) -> "Observation":
        v = np.asarray(v, dtype=np.float64)
        return cls(ee_pos=v[0:2].copy(), ee_vel=v[2:4].copy(),
                   contact_force=v[4:6].copy())


ACTION_DIM = 2


def clip_action(action, a_max: float) -> np.ndarray:
    return np.clip(np.asarray(action, dtype=np.float64), -a_max, a_max)


class PushEnv:
    """Deterministic episode mechanics; all randomness enters through reset seeds.

    Instances hold only the config, so one instance can serve many
    simultaneous episodes via explicit state passing.
    """

    def __init__(self, config: EnvConfig | None = None):
        self.config = config or EnvConfig()

    def reset(self, seed: int | None = None) -> tuple[EnvState, Observation]:
        cfg = self.config
        rng = np.random.default_rng(cfg.seed if seed is None else seed)
        bound = cfg.workspace_half
        nominal = np.asarray(cfg.obj_nominal, dtype=np.float64)
        while True:
            obj = nominal + rng.uniform(-cfg.sigma, cfg.sigma, size=2)
            if np.all(np.abs(obj) <= bound):
                break
        state = EnvState(
            ee_pos=np.asarray(cfg.home_pos, dtype=np.float64).copy(),
            ee_vel=np.zeros(2),
            obj_pos=obj,
            obj_radius=cfg.obj_radius,
            ee_radius=cfg.ee_radius,
            goal_pos=np.asarray(cfg.goal_pos, dtype=np.float64).copy(),
            step_count=0,
        )
        return state, self._observe(state, np.zeros(2))

    def step(self, state: EnvState, action) -> tuple[EnvState, Observation]:
        cfg = self.config
        bound = cfg.workspace_half
        a = clip_action(action, cfg.a_max)
        old_ee = state.ee_pos
        ee = np.clip(old_ee + a, -bound, bound)

        obj = state.obj_pos
        r_sum = state.obj_radius + state.ee_radius
        d_vec = obj - ee
        dist = float(np.hypot(d_vec[0], d_vec[1]))
        if dist < r_sum:
            depth = r_sum - dist
            if dist > 0.0:
                normal = d_vec / dist
            else:
                normal = np.array([1.0, 0.0])
            # quasi-static resolution: discs end tangent unless the wall
            # clamp absorbs part of the object's translation
            obj = np.clip(obj + normal * depth, -bound, bound)
            force = cfg.kappa * depth * normal
        else:
            obj = obj.copy()
            force = np.zeros(2)

        new_state = EnvState(
            ee_pos=ee,
            ee_vel=ee - old_ee,
            obj_pos=obj,
            obj_radius=state.obj_radius,
            ee_radius=state.ee_radius,
            goal_pos=state.goal_pos.copy(),
            step_count=state.step_count + 1,
        )
        return new_state, self._observe(new_state, force)

    def is_success(self, state: EnvState) -> bool:
        return self.goal_distance(state) < self.config.success_threshold

    def goal_distance(self, state: EnvState) -> float:
        d = state.obj_pos - state.goal_pos
        return float(np.hypot(d[0], d[1]))

    def oracle_state(self, state: EnvState) -> EnvState:
        """Privileged full-state copy for the demonstrator only.

        Learned-policy rollout paths must never call this; the evaluation
        harness asserts that by construction and by test.
        """
        return state.copy()

    @staticmethod
    def _observe(state: EnvState, force: np.ndarray) -> Observation:
        return Observation(
            ee_pos=state.ee_pos.copy(),
            ee_vel=state.ee_vel.copy(),
            contact_force=force.copy(),
        )
