"""WebSocket teleoperation backend.

The simulator ticks at a fixed rate and streams state snapshots that, like
policy observations, never include the hidden object position (unless the
server was started with the explicit debug reveal flag). The connected
client holds a key or stick to command a displacement, toggles the recorded
mode label when it stops exploring and starts acting on the task, and can
save the episode so far as one more trajectory in a standard dataset file.

``TeleopSession`` contains every rule (stepping, labeling, saving), so it
is testable without a socket; the FastAPI layer only moves JSON.
"""

from __future__ import annotations

import asyncio
import os
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .data import Trajectory, append_trajectory, save_dataset
from .env import ACTION_DIM, EnvConfig, PushEnv, clip_action


@dataclass
class TeleopSession:
    env_config: EnvConfig
    debug_reveal: bool = False
    episode_seed: int = 0
    env: PushEnv = field(init=False)

    def __post_init__(self):
        self.env = PushEnv(self.env_config)
        self.reset(self.episode_seed)

    def reset(self, seed: int | None = None) -> None:
        if seed is not None:
            self.episode_seed = int(seed)
        self.state, obs = self.env.reset(seed=self.episode_seed)
        self.observations = [obs.vector()]
        self.actions: list[np.ndarray] = []
        self.modes: list[int] = []
        self.mode = 0
        self.commanded = np.zeros(ACTION_DIM)

    def command(self, dx: float, dy: float) -> None:
        """Latch the displacement to apply on upcoming ticks (zero-order hold)."""
        a = np.array([dx, dy], dtype=np.float64)
        if not np.all(np.isfinite(a)):
            raise ValueError("action components must be finite")
        self.commanded = clip_action(a, self.env_config.a_max)

    def toggle_mode(self) -> int:
        """Flip the label recorded with future ticks; returns the new mode."""
        self.mode = 1 - self.mode
        return self.mode

    def tick(self) -> dict:
        """Advance one step under the latched command and record it."""
        a = self.commanded.copy()
        self.state, obs = self.env.step(self.state, a)
        self.actions.append(a)
        self.modes.append(self.mode)
        self.observations.append(obs.vector())
        return self.view()

    def view(self) -> dict:
        obs = self.observations[-1]
        msg = {
            "type": "state",
            "step": len(self.actions),
            "mode": self.mode,
            "ee_pos": [float(x) for x in obs[0:2]],
            "ee_vel": [float(x) for x in obs[2:4]],
            "contact_force": [float(x) for x in obs[4:6]],
            "goal_pos": [float(x) for x in self.state.goal_pos],
            "success": self.env.is_success(self.state),
            "episode_seed": self.episode_seed,
        }
        if self.debug_reveal:
            msg["obj_pos"] = [float(x) for x in self.state.obj_pos]
        return msg

    def to_trajectory(self) -> Trajectory:
        if not self.actions:
            raise ValueError("nothing recorded yet in this episode")
        modes = np.array(self.modes, dtype=np.int64)
        task_steps = np.flatnonzero(modes == 1)
        return Trajectory(
            observations=np.array(self.observations),
            actions=np.array(self.actions),
            modes=modes,
            seed=self.episode_seed,
            success=self.env.is_success(self.state),
            switch_step=int(task_steps[0]) if len(task_steps) else None,
            meta={"style": "teleop"},
        )

    def save_episode(self, path: str) -> int:
        """Append the episode to ``path`` (creating it if needed); returns
        the dataset's new episode count."""
        traj = self.to_trajectory()
        if os.path.exists(path):
            ds = append_trajectory(path, traj)
            return len(ds)
        save_dataset(path, [traj], self.env_config,
                     meta={"task_only": False, "demo_seed": self.episode_seed,
                           "style": "teleop"})
        return 1


def handle_message(session: TeleopSession, msg: dict,
                   dataset_path: str | None) -> dict | None:
    """Apply one inbound message; returns an immediate reply or None."""
    kind = msg.get("type")
    if kind == "action":
        session.command(float(msg["dx"]), float(msg["dy"]))
        return None
    if kind == "toggle_mode":
        return {"type": "mode", "mode": session.toggle_mode()}
    if kind == "reset":
        seed = msg.get("seed")
        session.reset(int(seed) if seed is not None else session.episode_seed + 1)
        return {"type": "reset_done", "episode_seed": session.episode_seed}
    if kind == "save_episode":
        if dataset_path is None:
            return {"type": "error",
                    "message": "server started without --dataset; cannot save"}
        count = session.save_episode(dataset_path)
        return {"type": "saved", "count": count}
    return {"type": "error", "message": f"unknown message type {kind!r}"}


def create_app(env_config: EnvConfig | None = None, dataset_path: str | None = None,
               debug_reveal: bool = False, tick_hz: float = 20.0) -> FastAPI:
    if tick_hz <= 0:
        raise ValueError("tick_hz must be > 0")
    env_config = env_config or EnvConfig()
    app = FastAPI(title="push-teleop")
    interval = 1.0 / tick_hz

    @app.get("/health")
    def health():
        return {"status": "ok", "tick_hz": tick_hz, "debug_reveal": debug_reveal}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        session = TeleopSession(env_config, debug_reveal=debug_reveal)
        send_lock = asyncio.Lock()  # tick loop and reply pump share the socket
        gone = asyncio.Event()

        async def send(payload: dict) -> None:
            async with send_lock:
                await ws.send_json(payload)

        await send({"type": "hello", "tick_hz": tick_hz,
                    "a_max": env_config.a_max,
                    "goal_pos": list(env_config.goal_pos),
                    "success_threshold": env_config.success_threshold,
                    "workspace_half": env_config.workspace_half,
                    "ee_radius": env_config.ee_radius,
                    "debug_reveal": debug_reveal})

        async def pump_inbound():
            try:
                while True:
                    msg = await ws.receive_json()
                    try:
                        reply = handle_message(session, msg, dataset_path)
                    except (ValueError, KeyError, TypeError) as e:
                        reply = {"type": "error", "message": str(e)}
                    if reply is not None:
                        await send(reply)
            except WebSocketDisconnect:
                pass
            finally:
                gone.set()

        inbound = asyncio.create_task(pump_inbound())
        gone_task = asyncio.create_task(gone.wait())
        try:
            while not gone.is_set():
                await send(session.tick())
                await asyncio.wait({gone_task}, timeout=interval)
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            inbound.cancel()
            gone_task.cancel()

    return app
