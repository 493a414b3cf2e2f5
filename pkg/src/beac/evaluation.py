"""Closed-loop rollouts and teacher-forced evaluation metrics.

A deployed policy is the trained network plus the shared exploration
script: while the mode head says "explore", the script's next action runs
(its step counter resumes rather than restarts if the mode head flips back);
once the head says "task", the learned action head drives. Variants without
a mode head run their action head from the first step.

The policy only ever sees observations. Success and goal distance are
judge-side queries on the environment, and nothing here touches the
privileged full-state snapshot.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .data import NormalizationStats, Trajectory
from .demonstrator import DemonstratorConfig, ExplorationScript
from .env import ACTION_DIM, EnvConfig, PushEnv, clip_action
from .models import ModelConfig, PolicyRuntime, compute_losses


@dataclass
class RolloutResult:
    success: bool
    steps: int
    switch_step: int | None   # first step the mode head chose the task branch
    final_distance: float
    actions: np.ndarray       # executed actions, (steps, 2)
    modes: np.ndarray         # executed branch per step, (steps,)


def rollout(env: PushEnv, runtime, seed: int,
            explore_script: ExplorationScript | None = None,
            max_steps: int | None = None) -> RolloutResult:
    """Run one closed-loop episode; stops at success or the step budget."""
    switching = runtime.spec.switching
    if switching and explore_script is None:
        explore_script = ExplorationScript(DemonstratorConfig(), env.config.a_max)
    budget = max_steps if max_steps is not None else env.config.horizon

    state, obs = env.reset(seed=seed)
    net_state = runtime.initial_state()
    prev_action = np.zeros(ACTION_DIM)
    explore_steps = 0
    switch_step = None
    actions, modes = [], []
    steps = 0
    success = False
    for t in range(budget):
        out, net_state = runtime.step(obs.vector(), prev_action, net_state)
        task_mode = (not switching) or out.mode_prob >= 0.5
        if task_mode:
            a = out.action
            if switch_step is None:
                switch_step = t
        else:
            a = explore_script.action(explore_steps)
            explore_steps += 1
        a = clip_action(a, env.config.a_max)
        state, obs = env.step(state, a)
        prev_action = a
        actions.append(a)
        modes.append(int(task_mode))
        steps = t + 1
        if env.is_success(state):
            success = True
            break
    return RolloutResult(
        success=success,
        steps=steps,
        switch_step=switch_step,
        final_distance=env.goal_distance(state),
        actions=np.array(actions).reshape(steps, ACTION_DIM),
        modes=np.array(modes, dtype=np.int64),
    )


# --------------------------------------------------------- teacher-forced


def mode_accuracy(runtime: PolicyRuntime, trajectories: list[Trajectory]) -> float:
    """Fraction of recorded steps whose thresholded mode prediction matches
    the label, with the recorded actions fed back (teacher forcing)."""
    if not runtime.spec.switching:
        raise ValueError(f"variant {runtime.config.variant!r} has no mode head")
    correct = 0
    total = 0
    for traj in trajectories:
        state = runtime.initial_state()
        prev = np.zeros(ACTION_DIM)
        for t in range(traj.T):
            out, state = runtime.step(traj.observations[t], prev, state)
            correct += int((out.mode_prob >= 0.5) == bool(traj.modes[t]))
            total += 1
            prev = traj.actions[t]
    if total == 0:
        raise ValueError("no steps to score")
    return correct / total


def _require_scoreable_actions(config: ModelConfig, heldout: list[Trajectory]) -> None:
    # switching variants average over task-mode steps only, so a dataset
    # with zero task steps leaves the action metric undefined
    if config.spec.switching:
        if sum(int(np.sum(t.modes)) for t in heldout) == 0:
            raise ValueError("no task-oriented steps; action prediction "
                             "loss is undefined")


def action_pred_loss(config: ModelConfig, params: dict, stats: NormalizationStats,
                     heldout: list[Trajectory]) -> float:
    """Teacher-forced squared error in normalized action space, averaged
    over task-mode steps (switching variants) or every step (the rest)."""
    _require_scoreable_actions(config, heldout)
    return compute_losses(config, params, heldout, stats)["action"]


def heldout_metrics(config: ModelConfig, params: dict, stats: NormalizationStats,
                    heldout: list[Trajectory]) -> dict:
    """Teacher-forced metrics on unseen demonstrations.

    ``action_loss`` is the task-step-masked squared error in normalized
    action space (for datasets where every step is a task step the mask is
    vacuous); ``mode_accuracy`` is None for variants without a mode head.
    """
    _require_scoreable_actions(config, heldout)
    losses = compute_losses(config, params, heldout, stats)
    out = {"action_loss": losses["action"], "mode_loss": losses["mode"]}
    if config.spec.switching:
        runtime = PolicyRuntime(config, params, stats)
        out["mode_accuracy"] = mode_accuracy(runtime, heldout)
    else:
        out["mode_accuracy"] = None
    return out


# --------------------------------------------------------- reporting


@dataclass
class EpisodeRecord:
    variant: str
    train_seed: int
    episode: int
    success: bool
    steps: int
    switch_step: int | None
    final_distance: float


def run_rollouts(env_config: EnvConfig, runtime, variant: str, train_seed: int,
                 n_episodes: int, seed_base: int) -> list[EpisodeRecord]:
    env = PushEnv(env_config)
    records = []
    for ep in range(n_episodes):
        r = rollout(env, runtime, seed=seed_base + ep)
        records.append(EpisodeRecord(
            variant=variant, train_seed=train_seed, episode=ep,
            success=r.success, steps=r.steps, switch_step=r.switch_step,
            final_distance=r.final_distance))
    return records


EPISODE_CSV_HEADER = "variant,train_seed,episode,success,steps,switch_step,final_distance"


def episodes_to_csv(records: list[EpisodeRecord]) -> str:
    buf = io.StringIO()
    buf.write(EPISODE_CSV_HEADER + "\n")
    for r in records:
        switch = "" if r.switch_step is None else str(r.switch_step)
        buf.write(f"{r.variant},{r.train_seed},{r.episode},{int(r.success)},"
                  f"{r.steps},{switch},{float(r.final_distance)!r}\n")
    return buf.getvalue()


def aggregate(records: list[EpisodeRecord]) -> dict:
    if not records:
        raise ValueError("no episodes to aggregate")
    per_seed: dict[int, list[int]] = {}
    for r in records:
        per_seed.setdefault(r.train_seed, []).append(int(r.success))
    seed_rates = {s: float(np.mean(v)) for s, v in sorted(per_seed.items())}
    rates = np.array(list(seed_rates.values()))
    return {
        "episodes": len(records),
        "success_rate": float(np.mean([r.success for r in records])),
        "seed_success_rates": seed_rates,
        "success_rate_std_over_seeds": float(np.std(rates)),
        "mean_steps": float(np.mean([r.steps for r in records])),
        "mean_final_distance": float(np.mean([r.final_distance for r in records])),
    }


def export_beliefs_csv(runtime: PolicyRuntime, trajectories: list[Trajectory]) -> str:
    """One row per recorded step: the belief vector and the mode label."""
    H = runtime.config.hidden_dim
    buf = io.StringIO()
    buf.write(",".join(f"b{i}" for i in range(H)) + ",mode\n")
    for traj in trajectories:
        beliefs = runtime.encode_beliefs(traj)
        for t in range(traj.T):
            buf.write(",".join(repr(float(x)) for x in beliefs[t]))
            buf.write(f",{int(traj.modes[t])}\n")
    return buf.getvalue()


# --------------------------------------------------------- method grid

# canonical comparison order: full method, regularizer ablations, baselines
GRID_ROW_ORDER = ("beac", "beac_no_past", "beac_no_future", "beac_no_reg",
                  "bc_switch", "bc_belief", "bc")


@dataclass
class GridItem:
    """One trained policy entering the comparison grid."""
    variant: str
    train_seed: int
    runtime: object  # anything with .spec / .initial_state() / .step()


def evaluate_grid(items: list[GridItem], env_config: EnvConfig,
                  n_rollouts: int, seed_base: int = 10_000) -> list[EpisodeRecord]:
    """Roll out every policy n_rollouts times on a shared episode-seed lane.

    Each policy meets the same episode seeds (seed_base + episode), so
    success differences come from the policies, not the draw of episodes.
    """
    if not items:
        raise ValueError("no policies to evaluate")
    if n_rollouts < 1:
        raise ValueError("n_rollouts must be >= 1")
    records = []
    for item in items:
        records += run_rollouts(env_config, item.runtime, item.variant,
                                item.train_seed, n_rollouts, seed_base)
    return records


def _sorted_records(records: list[EpisodeRecord]) -> list[EpisodeRecord]:
    order = {v: i for i, v in enumerate(GRID_ROW_ORDER)}
    return sorted(records, key=lambda r: (order.get(r.variant, len(order)),
                                          r.variant, r.train_seed, r.episode))


def grid_variants(records: list[EpisodeRecord]) -> list[str]:
    present = {r.variant for r in records}
    ordered = [v for v in GRID_ROW_ORDER if v in present]
    return ordered + sorted(present - set(GRID_ROW_ORDER))


def grid_summary(records: list[EpisodeRecord]) -> dict[str, dict]:
    """Per-variant success statistics over training seeds.

    ``mean``/``std`` are over the per-seed success rates (population std),
    matching how repeated-seed results are conventionally reported.
    """
    out = {}
    for variant in grid_variants(records):
        agg = aggregate([r for r in records if r.variant == variant])
        rates = np.array(list(agg["seed_success_rates"].values()))
        out[variant] = {
            "mean": float(np.mean(rates)),
            "std": float(np.std(rates)),
            "seed_rates": agg["seed_success_rates"],
            "episodes": agg["episodes"],
        }
    return out


def grid_csv(records: list[EpisodeRecord]) -> str:
    """Episode rows in canonical order, then per-seed and per-variant
    aggregate rows (``episode`` column holds ``all``)."""
    recs = _sorted_records(records)
    buf = io.StringIO()
    buf.write(episodes_to_csv(recs))
    for variant in grid_variants(recs):
        rows = [r for r in recs if r.variant == variant]
        for seed in sorted({r.train_seed for r in rows}):
            srows = [r for r in rows if r.train_seed == seed]
            rate = float(np.mean([r.success for r in srows]))
            dist = float(np.mean([r.final_distance for r in srows]))
            buf.write(f"{variant},{seed},all,{rate!r},,,{dist!r}\n")
        summary = grid_summary(rows)[variant]
        dist = float(np.mean([r.final_distance for r in rows]))
        buf.write(f"{variant},all,all,{summary['mean']!r},,,{dist!r}\n")
    return buf.getvalue()


def grid_table(records: list[EpisodeRecord]) -> str:
    """Human-readable success table, one method per row in canonical order."""
    summary = grid_summary(records)
    width = max(len("method"), *(len(v) for v in summary))
    lines = [f"{'method'.ljust(width)}  success rate [%]"]
    for variant, s in summary.items():
        lines.append(f"{variant.ljust(width)}  "
                     f"{100 * s['mean']:.0f} +- {100 * s['std']:.1f}")
    return "\n".join(lines) + "\n"


def ksweep_csv(per_k: dict[int, dict]) -> str:
    """Machine-readable prediction-horizon sweep.

    ``per_k[k]`` holds ``success_mean``, ``success_std``, ``train_seconds``
    (mean over seeds)."""
    buf = io.StringIO()
    buf.write("k,success_mean,success_std,train_seconds\n")
    for k in sorted(per_k, reverse=True):
        e = per_k[k]
        buf.write(f"{k},{float(e['success_mean'])!r},"
                  f"{float(e['success_std'])!r},{float(e['train_seconds'])!r}\n")
    return buf.getvalue()


def ksweep_table(per_k: dict[int, dict]) -> str:
    """Success columns per prediction horizon plus a training-time row."""
    ks = sorted(per_k, reverse=True)
    cells_s = [f"{100 * per_k[k]['success_mean']:.0f} +- "
               f"{100 * per_k[k]['success_std']:.1f}" for k in ks]
    cells_t = [f"{per_k[k]['train_seconds']:.0f}" for k in ks]
    heads = [f"k={k}" for k in ks]
    w = [max(len(h), len(a), len(b)) for h, a, b in zip(heads, cells_s, cells_t)]
    label = max(len("success [%]"), len("train [s]"))
    lines = [" ".ljust(label) + "  " + "  ".join(h.ljust(x) for h, x in zip(heads, w)),
             "success [%]".ljust(label) + "  "
             + "  ".join(c.ljust(x) for c, x in zip(cells_s, w)),
             "train [s]".ljust(label) + "  "
             + "  ".join(c.ljust(x) for c, x in zip(cells_t, w))]
    return "\n".join(lines) + "\n"
