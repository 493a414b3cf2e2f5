"""Teleoperation backend tests: session rules and the websocket wire."""

import numpy as np
import pytest

from beac.data import load_dataset
from beac.env import EnvConfig
from beac.serve import TeleopSession, create_app, handle_message

ENV = EnvConfig(horizon=50)


def client_for(app):
    from starlette.testclient import TestClient

    return TestClient(app)


# ------------------------------------------------------------- session rules


def test_tick_applies_latched_command():
    s = TeleopSession(ENV, episode_seed=3)
    start = s.observations[0][0:2].copy()
    s.command(0.01, 0.0)
    for _ in range(4):
        s.tick()
    ee = s.observations[-1][0:2]
    assert ee[0] == pytest.approx(start[0] + 4 * 0.01)
    assert ee[1] == pytest.approx(start[1])


def test_command_is_clipped_to_action_bound():
    s = TeleopSession(ENV, episode_seed=0)
    s.command(5.0, 0.0)
    assert np.linalg.norm(s.commanded) <= ENV.a_max + 1e-12
    with pytest.raises(ValueError):
        s.command(float("nan"), 0.0)


def test_mode_labels_split_exactly_at_toggle():
    s = TeleopSession(ENV, episode_seed=1)
    s.command(0.002, 0.001)
    for _ in range(6):
        s.tick()
    assert s.toggle_mode() == 1
    for _ in range(4):
        s.tick()
    t = s.to_trajectory()
    assert t.modes.tolist() == [0] * 6 + [1] * 4
    assert t.switch_step == 6
    # toggling back relabels later ticks only
    assert s.toggle_mode() == 0
    s.tick()
    assert s.to_trajectory().modes.tolist() == [0] * 6 + [1] * 4 + [0]


def test_to_trajectory_requires_at_least_one_tick():
    s = TeleopSession(ENV, episode_seed=0)
    with pytest.raises(ValueError):
        s.to_trajectory()


def test_reset_starts_a_fresh_episode():
    s = TeleopSession(ENV, episode_seed=5)
    s.command(0.01, 0.0)
    s.tick()
    s.toggle_mode()
    s.reset(seed=9)
    assert s.episode_seed == 9
    assert s.mode == 0
    assert len(s.actions) == 0
    assert np.allclose(s.commanded, 0.0)
    # same seed gives the same start
    other = TeleopSession(ENV, episode_seed=9)
    assert np.array_equal(s.observations[0], other.observations[0])


def test_save_episode_appends_to_existing_dataset(tmp_path):
    path = str(tmp_path / "tele.jsonl")
    s = TeleopSession(ENV, episode_seed=0)
    s.command(0.003, -0.002)
    for _ in range(5):
        s.tick()
    assert s.save_episode(path) == 1
    s.reset(seed=1)
    s.command(0.0, 0.004)
    for _ in range(3):
        s.tick()
    assert s.save_episode(path) == 2
    ds = load_dataset(path)
    assert len(ds) == 2
    assert ds.trajectories[0].seed == 0
    assert ds.trajectories[1].seed == 1
    assert ds.trajectories[1].actions.shape == (3, 2)


def test_saved_teleop_episodes_train_unmodified(tmp_path):
    """Human-driven episodes feed cmd_train exactly like scripted ones."""
    from beac.checkpoint import load_checkpoint
    from beac.cli import main as cli_main
    from beac.models import PolicyRuntime

    path = str(tmp_path / "human.jsonl")
    for seed, (dx, dy) in enumerate([(0.004, -0.002), (-0.003, 0.005)]):
        s = TeleopSession(ENV, episode_seed=seed)
        s.command(dx, dy)
        for _ in range(6):
            s.tick()
        s.toggle_mode()
        for _ in range(6):
            s.tick()
        s.save_episode(path)
    ckpt_path = str(tmp_path / "human.ckpt")
    rc = cli_main(["train", "--data", path, "--out", ckpt_path, "--variant",
                   "beac", "--k", "3", "--seed", "0", "--epochs", "2",
                   "--batch-size", "2", "--quiet"])
    assert rc == 0
    ckpt = load_checkpoint(ckpt_path)
    runtime = PolicyRuntime(ckpt.model_config, ckpt.params, ckpt.stats)
    out, _ = runtime.step(np.zeros(6), np.zeros(2), runtime.initial_state())
    assert out.action.shape == (2,)
    assert 0.0 <= out.mode_prob <= 1.0


def test_handle_message_routing(tmp_path):
    s = TeleopSession(ENV, episode_seed=0)
    assert handle_message(s, {"type": "action", "dx": 0.004, "dy": 0.0}, None) is None
    assert s.commanded[0] == pytest.approx(0.004)
    assert handle_message(s, {"type": "toggle_mode"}, None) == {"type": "mode", "mode": 1}
    r = handle_message(s, {"type": "reset", "seed": 7}, None)
    assert r == {"type": "reset_done", "episode_seed": 7}
    s.tick()
    assert handle_message(s, {"type": "save_episode"}, None)["type"] == "error"
    path = str(tmp_path / "d.jsonl")
    assert handle_message(s, {"type": "save_episode"}, path) == {"type": "saved", "count": 1}
    assert handle_message(s, {"type": "nope"}, None)["type"] == "error"


# ----------------------------------------------------------------- the wire


def drain_for(ws, wanted, limit=200):
    """Read frames until one of type ``wanted`` arrives; returns it."""
    for _ in range(limit):
        m = ws.receive_json()
        if m["type"] == wanted:
            return m
    raise AssertionError(f"no {wanted!r} frame within {limit} messages")


def test_wire_never_reveals_object_position(tmp_path):
    app = create_app(ENV, dataset_path=None, debug_reveal=False, tick_hz=500.0)
    c = client_for(app)
    captured = []
    with c.websocket_connect("/ws") as ws:
        captured.append(ws.receive_json())
        ws.send_json({"type": "action", "dx": 0.01, "dy": 0.0})
        ws.send_json({"type": "toggle_mode"})
        for _ in range(30):
            captured.append(ws.receive_json())
    assert captured[0]["type"] == "hello"
    states = [m for m in captured if m["type"] == "state"]
    assert len(states) >= 5
    for m in captured:
        assert "obj_pos" not in m
    # the visible fields are present on every state frame
    for m in states:
        for k in ("ee_pos", "ee_vel", "contact_force", "goal_pos", "mode", "step"):
            assert k in m


def test_debug_reveal_adds_object_position():
    app = create_app(ENV, debug_reveal=True, tick_hz=500.0)
    c = client_for(app)
    with c.websocket_connect("/ws") as ws:
        m = drain_for(ws, "state")
        assert "obj_pos" in m and len(m["obj_pos"]) == 2


def test_wire_save_round_trips_into_loadable_dataset(tmp_path):
    path = str(tmp_path / "tele.jsonl")
    app = create_app(ENV, dataset_path=path, tick_hz=500.0)
    c = client_for(app)
    with c.websocket_connect("/ws") as ws:
        drain_for(ws, "state")
        ws.send_json({"type": "action", "dx": 0.005, "dy": 0.005})
        drain_for(ws, "state")
        ws.send_json({"type": "save_episode"})
        saved = drain_for(ws, "saved")
        assert saved["count"] == 1
    ds = load_dataset(path)
    assert len(ds) == 1
    assert ds.trajectories[0].actions.shape[0] >= 1


def test_bad_inbound_message_reports_error_and_keeps_ticking():
    app = create_app(ENV, tick_hz=500.0)
    c = client_for(app)
    with c.websocket_connect("/ws") as ws:
        ws.send_json({"type": "action", "dx": "wat", "dy": 0})
        err = drain_for(ws, "error")
        assert err["message"]
        drain_for(ws, "state")


def test_health_endpoint_reports_settings():
    app = create_app(ENV, debug_reveal=True, tick_hz=30.0)
    c = client_for(app)
    r = c.get("/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok", "tick_hz": 30.0, "debug_reveal": True}


def test_rejects_nonpositive_tick_rate():
    with pytest.raises(ValueError):
        create_app(ENV, tick_hz=0.0)
