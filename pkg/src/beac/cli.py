"""Command-line entry points: collect demonstrations, train a policy,
evaluate it in closed loop, and serve the browser teleoperation backend.

Configuration precedence, lowest to highest: built-in defaults, a JSON
config file (``--config``), ``BEAC_*`` environment variables, then explicit
command-line flags. Every artifact-producing command is deterministic:
re-running it with the same inputs rewrites byte-identical files (training
wall time lives in a separate ``.timing.json`` sidecar for that reason).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import ExperimentConfig, apply_env_overrides, load_config
from .data import atomic_write_text, canonical_dumps, load_dataset, save_dataset
from .demonstrator import collect_demonstrations
from .env import EnvConfig
from .evaluation import (
    GridItem,
    aggregate,
    episodes_to_csv,
    evaluate_grid,
    export_beliefs_csv,
    grid_csv,
    grid_summary,
    grid_table,
    heldout_metrics,
    ksweep_csv,
    ksweep_table,
    run_rollouts,
)
from .models import VARIANTS, ModelConfig, PolicyRuntime
from .training import TrainConfig, train

HELDOUT_SEED_OFFSET = 50_000  # keeps fresh evaluation demos off the training seeds


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    return apply_env_overrides(cfg, dict(os.environ))


def _replace_section(cfg: ExperimentConfig, section: str, **updates):
    updates = {k: v for k, v in updates.items() if v is not None}
    if not updates:
        return cfg
    return dataclasses.replace(
        cfg, **{section: dataclasses.replace(getattr(cfg, section), **updates)})


def _replace_top(cfg: ExperimentConfig, **updates):
    updates = {k: v for k, v in updates.items() if v is not None}
    return dataclasses.replace(cfg, **updates) if updates else cfg


# ------------------------------------------------------------------ collect


def cmd_collect(args) -> int:
    cfg = resolve_config(args)
    cfg = _replace_top(cfg, n_demos=args.n, demo_seed=args.seed,
                       task_only=True if args.task_only else None)
    trajs = collect_demonstrations(cfg.env, cfg.n_demos, base_seed=cfg.demo_seed,
                                   task_only=cfg.task_only)
    meta = {"task_only": cfg.task_only, "demo_seed": cfg.demo_seed}
    save_dataset(args.out, trajs, cfg.env, meta=meta)
    rate = float(np.mean([t.success for t in trajs]))
    print(f"collected {len(trajs)} episodes (success rate {rate:.2f}) -> {args.out}")
    return 0


# ------------------------------------------------------------------ train


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    cfg = _replace_section(cfg, "model", variant=args.variant, k=args.k,
                           alpha=args.alpha, beta=args.beta, gamma=args.gamma)
    cfg = _replace_section(cfg, "train", seed=args.seed, epochs=args.epochs,
                           batch_size=args.batch_size, lr=args.lr)
    ds = load_dataset(args.data)
    log_fn = None if args.quiet else print
    result = train(cfg.model, ds.trajectories, stats=ds.stats,
                   train_config=cfg.train, log_fn=log_fn)
    train_meta = {
        "env": ds.env.to_dict(),
        "dataset_meta": ds.meta,
        "dataset_count": len(ds),
        "train_config": cfg.train.to_dict(),
        "final_losses": result.final_losses,
        "loss_history": result.loss_history,
    }
    save_checkpoint(args.out, result.params, cfg.model, result.stats, train_meta)
    atomic_write_text(args.out + ".timing.json",
                      canonical_dumps({"train_seconds": result.train_seconds}) + "\n")
    print(f"trained {cfg.model.variant} (k={cfg.model.k}, seed={cfg.train.seed}) "
          f"on {len(ds)} episodes: total loss {result.final_losses['total']:.6f} "
          f"-> {args.out}")
    return 0


# ------------------------------------------------------------------ eval


def _shared_heldout(env_cfg: EnvConfig, checkpoints, n_episodes: int):
    """Teacher-forced metrics per checkpoint on shared fresh demonstrations.

    Checkpoints trained on the same dataset style are scored on the same
    newly collected episodes (seeded past the training range), so their
    accuracies are directly comparable.
    """
    cache: dict[tuple, list] = {}
    rows = []
    for ck in checkpoints:
        ds_meta = ck.train_meta.get("dataset_meta", {})
        key = (int(ds_meta.get("demo_seed", 0)), bool(ds_meta.get("task_only", False)))
        if key not in cache:
            cache[key] = collect_demonstrations(
                env_cfg, n_episodes, base_seed=key[0] + HELDOUT_SEED_OFFSET,
                task_only=key[1])
        metrics = heldout_metrics(ck.model_config, ck.params, ck.stats, cache[key])
        rows.append({"episodes": n_episodes, **metrics})
    return rows, cache


def _eval_grid(args, cfg, paths) -> int:
    checkpoints = [load_checkpoint(p) for p in paths]
    env_dicts = [ck.train_meta["env"] for ck in checkpoints]
    if any(d != env_dicts[0] for d in env_dicts[1:]):
        raise ValueError("checkpoints were trained under different "
                         "environment configs; evaluate them separately")
    if args.beliefs:
        raise ValueError("belief export takes exactly one checkpoint")
    env_cfg = EnvConfig.from_dict(env_dicts[0])

    items = []
    for ck in checkpoints:
        label = f"k={ck.model_config.k}" if args.ksweep else ck.model_config.variant
        seed = ck.train_meta.get("train_config", {}).get("seed", 0)
        items.append(GridItem(label, seed, PolicyRuntime(ck.model_config,
                                                         ck.params, ck.stats)))
    records = evaluate_grid(items, env_cfg, cfg.eval_episodes, cfg.eval_seed_base)
    summary = grid_summary(records)

    heldout_rows = None
    if args.heldout_episodes > 0:
        rows, _ = _shared_heldout(env_cfg, checkpoints, args.heldout_episodes)
        heldout_rows = [
            {"variant": it.variant, "train_seed": it.train_seed, **row}
            for it, row in zip(items, rows)]

    report = {
        "env": env_cfg.to_dict(),
        "eval_episodes": cfg.eval_episodes,
        "eval_seed_base": cfg.eval_seed_base,
        "checkpoints": [
            {"path": p, "variant": ck.model_config.variant,
             "k": ck.model_config.k,
             "train_seed": ck.train_meta.get("train_config", {}).get("seed", 0)}
            for p, ck in zip(paths, checkpoints)],
        "grid": summary,
        "heldout": heldout_rows,
        "records": [dataclasses.asdict(r) for r in records],
    }

    if args.ksweep:
        per_k = {}
        for p, ck in zip(paths, checkpoints):
            k = ck.model_config.k
            with open(p + ".timing.json") as f:
                seconds = json.load(f)["train_seconds"]
            per_k.setdefault(k, []).append(seconds)
        sweep = {}
        for k, times in sorted(per_k.items()):
            s = summary[f"k={k}"]
            sweep[k] = {"success_mean": s["mean"], "success_std": s["std"],
                        "train_seconds": float(np.mean(times))}
        report["ksweep"] = {str(k): v for k, v in sweep.items()}
        atomic_write_text(args.out, canonical_dumps(report) + "\n")
        if args.csv:
            atomic_write_text(args.csv, ksweep_csv(sweep))
        print(ksweep_table(sweep), end="")
    else:
        atomic_write_text(args.out, canonical_dumps(report) + "\n")
        if args.csv:
            atomic_write_text(args.csv, grid_csv(records))
        print(grid_table(records), end="")
    print(f"-> {args.out}")
    return 0


def cmd_eval(args) -> int:
    cfg = resolve_config(args)
    cfg = _replace_top(cfg, eval_episodes=args.episodes, eval_seed_base=args.seed_base)
    if len(args.ckpt) > 1 or args.ksweep:
        return _eval_grid(args, cfg, args.ckpt)
    ck = load_checkpoint(args.ckpt[0])
    env_cfg = EnvConfig.from_dict(ck.train_meta["env"])
    runtime = PolicyRuntime(ck.model_config, ck.params, ck.stats)

    train_seed = ck.train_meta.get("train_config", {}).get("seed", 0)
    records = run_rollouts(env_cfg, runtime, ck.model_config.variant, train_seed,
                           n_episodes=cfg.eval_episodes,
                           seed_base=cfg.eval_seed_base)

    heldout = None
    heldout_trajs = []
    if args.heldout_episodes > 0:
        ds_meta = ck.train_meta.get("dataset_meta", {})
        heldout_trajs = collect_demonstrations(
            env_cfg, args.heldout_episodes,
            base_seed=ds_meta.get("demo_seed", 0) + HELDOUT_SEED_OFFSET,
            task_only=ds_meta.get("task_only", False))
        metrics = heldout_metrics(ck.model_config, ck.params, ck.stats, heldout_trajs)
        heldout = {"episodes": args.heldout_episodes, **metrics}

    report = {
        "variant": ck.model_config.variant,
        "model": ck.model_config.to_dict(),
        "env": env_cfg.to_dict(),
        "train_seed": train_seed,
        "eval_episodes": cfg.eval_episodes,
        "eval_seed_base": cfg.eval_seed_base,
        "aggregate": aggregate(records),
        "heldout": heldout,
        "records": [dataclasses.asdict(r) for r in records],
    }
    atomic_write_text(args.out, canonical_dumps(report) + "\n")
    if args.csv:
        atomic_write_text(args.csv, episodes_to_csv(records))
    if args.beliefs:
        if not ck.model_config.spec.recurrent:
            raise ValueError(
                f"variant {ck.model_config.variant!r} has no belief state to export")
        if not heldout_trajs:
            raise ValueError("belief export needs --heldout-episodes > 0")
        atomic_write_text(args.beliefs, export_beliefs_csv(runtime, heldout_trajs))

    agg = report["aggregate"]
    line = (f"{ck.model_config.variant}: success {agg['success_rate']:.2f} "
            f"over {agg['episodes']} episodes")
    if heldout and heldout["mode_accuracy"] is not None:
        line += f", heldout mode accuracy {heldout['mode_accuracy']:.3f}"
    print(line + f" -> {args.out}")
    return 0


# ------------------------------------------------------------------ serve


def cmd_serve(args) -> int:
    import uvicorn

    from .serve import create_app

    cfg = resolve_config(args)
    app = create_app(env_config=cfg.env, dataset_path=args.dataset,
                     debug_reveal=args.debug_reveal, tick_hz=args.tick_hz)
    print(f"teleop backend on ws://{args.host}:{args.port}/ws "
          f"(tick {args.tick_hz} Hz, dataset {args.dataset or 'none'})")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="beac",
        description="Belief-based mode-switching imitation for invisible-object pushing")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("collect", help="record scripted demonstrations")
    c.add_argument("--out", required=True, help="output dataset (.jsonl)")
    c.add_argument("--config", help="experiment config JSON")
    c.add_argument("--n", type=int, help="number of episodes")
    c.add_argument("--seed", type=int, help="first episode seed")
    c.add_argument("--task-only", action="store_true",
                   help="skip the exploration phase (oracle pushes immediately)")
    c.set_defaults(func=cmd_collect)

    t = sub.add_parser("train", help="train a policy on a dataset")
    t.add_argument("--data", required=True, help="dataset from 'collect'")
    t.add_argument("--out", required=True, help="output checkpoint path")
    t.add_argument("--config", help="experiment config JSON")
    t.add_argument("--variant", choices=sorted(VARIANTS), help="model variant")
    t.add_argument("--k", type=int, help="decoder prediction offset")
    t.add_argument("--seed", type=int, help="init/shuffle seed")
    t.add_argument("--epochs", type=int)
    t.add_argument("--batch-size", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--alpha", type=float, help="mode loss weight")
    t.add_argument("--beta", type=float, help="future decoder loss weight")
    t.add_argument("--gamma", type=float, help="past decoder loss weight")
    t.add_argument("--quiet", action="store_true", help="suppress epoch logs")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="closed-loop rollouts plus teacher-forced metrics")
    e.add_argument("--ckpt", required=True, nargs="+",
                   help="checkpoint(s) from 'train'; several build a comparison grid")
    e.add_argument("--out", required=True, help="output report JSON")
    e.add_argument("--config", help="experiment config JSON")
    e.add_argument("--episodes", type=int, help="rollout episodes per checkpoint")
    e.add_argument("--seed-base", type=int, help="first rollout seed")
    e.add_argument("--heldout-episodes", type=int, default=25,
                   help="fresh demos for teacher-forced metrics (0 disables)")
    e.add_argument("--csv", help="also write per-episode CSV here")
    e.add_argument("--beliefs", help="also write belief-vector CSV here")
    e.add_argument("--ksweep", action="store_true",
                   help="group checkpoints by prediction offset k and emit the "
                        "sweep table (needs .timing.json sidecars)")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("serve", help="run the websocket teleoperation backend")
    s.add_argument("--config", help="experiment config JSON")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8765)
    s.add_argument("--dataset", help="JSONL file to append saved episodes to")
    s.add_argument("--debug-reveal", action="store_true",
                   help="include the hidden object position in state messages")
    s.add_argument("--tick-hz", type=float, default=20.0)
    s.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        print(f"error: {e.filename or e} not found", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
