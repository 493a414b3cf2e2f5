"""Privileged scripted demonstrator.

Demonstrations have two phases. The exploration phase runs a fixed
boustrophedon sweep over the region where the object may start: the sweep
is a pure function of the step index, so an imitator can reproduce it from
time alone. The moment the sweep reports contact (nonzero force while the
discs are close), the demonstrator latches into the task phase and uses its
privileged knowledge of the true object position to push the object to the
goal. The task controller keeps the contact force observable whenever it is
near the object: it rotates around the object at a slight press depth (so
every step reports a force) until its bearing lines up with the goal, then
drives straight through. Staying in contact matters for imitation: a policy
without privileged state can hold this controller's closed loop using the
sensed force alone instead of dead-reckoning across a silent gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Trajectory
from .env import EnvConfig, EnvState, PushEnv, clip_action


@dataclass(frozen=True)
class DemonstratorConfig:
    switch_dist: float = 0.055   # max ee-object distance for the mode switch
    settle_tol: float = 0.02     # stop pushing when object is this close to goal
    lane_spacing: float = 0.04   # < 2 * (obj_radius + ee_radius): no gaps
    n_lanes: int = 6
    stroke_steps: int = 24       # sweep from y=-0.16 up to y=+0.08 at a_max
    press_depth: float = 0.002   # overlap held while steering: keeps force > 0
    steer_rate: float = 0.15     # max bearing change per step, radians
    reach_band: float = 0.015    # within r_sum + band the steer branch engages
    push_slack: float = 0.005    # max standoff beyond r_sum to push through
    align_cos: float = 0.98      # bearing agreement needed to start pushing
    glide_ang: float = 0.7      # bearing error below which steering releases
    glide_gap: float = 0.004     # standoff held during the contact-free glide
    settle_steps: int = 8        # idle steps recorded after settling, then cut


def build_sweep_cycle(cfg: DemonstratorConfig, a_max: float) -> np.ndarray:
    """One full out-and-back sweep as an action sequence.

    Vertical strokes alternate up/down across ``n_lanes`` lanes; the second
    half retraces the first in reverse with negated actions, returning the
    end-effector exactly to its start.
    """
    shift_steps = int(round(cfg.lane_spacing / a_max))
    acts: list[tuple[float, float]] = []
    up = True
    for lane in range(cfg.n_lanes):
        dy = a_max if up else -a_max
        acts.extend([(0.0, dy)] * cfg.stroke_steps)
        up = not up
        if lane < cfg.n_lanes - 1:
            acts.extend([(a_max, 0.0)] * shift_steps)
    forward = np.array(acts, dtype=np.float64)
    return np.concatenate([forward, -forward[::-1]], axis=0)


class ExplorationScript:
    """Time-indexed sweep policy: action depends only on the step index."""

    def __init__(self, cfg: DemonstratorConfig, a_max: float):
        self._cycle = build_sweep_cycle(cfg, a_max)

    @property
    def cycle_length(self) -> int:
        return len(self._cycle)

    def action(self, step_index: int) -> np.ndarray:
        return self._cycle[step_index % len(self._cycle)].copy()


def task_action(state: EnvState, goal: np.ndarray, cfg: DemonstratorConfig,
                a_max: float) -> np.ndarray:
    """Oracle pushing controller. Reads the true object position.

    Regimes by distance and bearing: push straight through the object when
    lined up behind it; when in reach but badly misaligned, steer around it
    at press depth (the held overlap keeps the contact force observable);
    once the bearing error drops below ``glide_ang``, release to a small
    standoff and finish the turn contact-free, re-engaging on the push.
    From farther out, close in on the press pose directly.
    """
    obj = state.obj_pos
    ee = state.ee_pos
    r_sum = state.obj_radius + state.ee_radius
    to_goal = goal - obj
    dist_goal = float(np.linalg.norm(to_goal))
    if dist_goal < cfg.settle_tol:
        return np.zeros(2)
    gdir = to_goal / dist_goal
    rel = ee - obj
    dist = float(np.linalg.norm(rel))
    if dist < 1e-12:
        rel, dist = np.array([1.0, 0.0]), 1.0
    u = rel / dist
    if float(u @ -gdir) >= cfg.align_cos and dist <= r_sum + cfg.push_slack:
        # behind the object and pointed at the goal: drive through it so
        # every step overlaps and advances the object
        return gdir * a_max
    if dist > r_sum + cfg.reach_band:
        # far out: head straight for the press pose behind the object; the
        # steer branch takes over (and detours) before the discs can collide
        behind = obj - gdir * (r_sum - cfg.press_depth)
        to_behind = behind - ee
        return to_behind / max(float(np.linalg.norm(to_behind)), 1e-12) * a_max
    # in reach: rotate the bearing toward the push pose along the shorter
    # arc. While the error is large, hold press depth so the force stays
    # observable; close to alignment, glide at a standoff (silent force)
    # until the push branch re-engages.
    want = -gdir
    ang = float(np.arctan2(u[0] * want[1] - u[1] * want[0], u @ want))
    dphi = float(np.clip(ang, -cfg.steer_rate, cfg.steer_rate))
    c, s = np.cos(dphi), np.sin(dphi)
    u2 = np.array([c * u[0] - s * u[1], s * u[0] + c * u[1]])
    radius = (r_sum - cfg.press_depth if abs(ang) > cfg.glide_ang
              else r_sum + cfg.glide_gap)
    target = obj + u2 * radius
    return clip_action(target - ee, a_max)


class ScriptedDemonstrator:
    """Runs mode-labeled demonstration episodes."""

    def __init__(self, env: PushEnv, cfg: DemonstratorConfig | None = None):
        self.env = env
        self.cfg = cfg or DemonstratorConfig()
        self.script = ExplorationScript(self.cfg, env.config.a_max)

    def run_episode(self, seed: int, task_only: bool = False) -> Trajectory:
        """One demonstration. ``task_only`` skips exploration entirely: the
        demonstrator pushes from the first step and every action is mode 1.

        The episode ends a few steps after the object settles at the goal
        (``settle_steps`` idle actions teach the imitator to stop) rather
        than running out the horizon: padding the task phase with hundreds
        of zero actions would swamp the action targets with zeros.
        """
        env = self.env
        cfg = self.cfg
        state, obs = env.reset(seed=seed)
        observations = [obs.vector()]
        actions = []
        modes = []
        mode = 1 if task_only else 0
        switch_step = 0 if task_only else None
        idle = 0
        for t in range(env.config.horizon):
            if mode == 0:
                oracle = env.oracle_state(state)
                near = float(np.linalg.norm(oracle.obj_pos - oracle.ee_pos)) < cfg.switch_dist
                if float(np.linalg.norm(obs.contact_force)) > 0.0 and near:
                    mode = 1  # one-way latch: mode never reverts
                    switch_step = t
            if mode == 0:
                a = self.script.action(t)
            else:
                oracle = env.oracle_state(state)
                a = task_action(oracle, oracle.goal_pos, cfg, env.config.a_max)
            a = clip_action(a, env.config.a_max)
            state, obs = env.step(state, a)
            actions.append(a)
            modes.append(mode)
            observations.append(obs.vector())
            if mode == 1 and float(np.linalg.norm(a)) == 0.0:
                idle += 1
                if idle >= cfg.settle_steps:
                    break
            else:
                idle = 0
        return Trajectory(
            observations=np.array(observations),
            actions=np.array(actions),
            modes=np.array(modes),
            seed=seed,
            success=env.is_success(state),
            switch_step=switch_step,
            meta={"style": "task_only" if task_only else "switching"},
        )


def collect_demonstrations(env_config: EnvConfig, n_episodes: int, base_seed: int = 0,
                           task_only: bool = False,
                           demo_config: DemonstratorConfig | None = None) -> list[Trajectory]:
    demo = ScriptedDemonstrator(PushEnv(env_config), demo_config)
    return [demo.run_episode(seed=base_seed + i, task_only=task_only)
            for i in range(n_episodes)]
