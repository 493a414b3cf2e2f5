"""Training-loop and checkpoint tests."""

import numpy as np
import pytest

from beac.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from beac.data import NormalizationStats
from beac.demonstrator import collect_demonstrations
from beac.env import EnvConfig
from beac.models import ModelConfig, PolicyRuntime, compute_losses
from beac.training import TrainConfig, TrainingDiverged, TrainResult, train


# small, contact-rich episodes: object right above the first sweep lane
TINY_ENV = EnvConfig(horizon=60, sigma=0.02, home_pos=(-0.02, -0.16))


@pytest.fixture(scope="module")
def tiny_demos():
    return collect_demonstrations(TINY_ENV, 4, base_seed=0)


def test_tiny_demos_have_both_modes(tiny_demos):
    for t in tiny_demos:
        assert t.switch_step is not None
        assert 0 < t.switch_step < t.T


def test_training_reduces_loss(tiny_demos):
    config = ModelConfig(variant="beac", hidden_dim=24, k=3)
    result = train(config, tiny_demos,
                   train_config=TrainConfig(epochs=400, batch_size=4, lr=3e-3, seed=0))
    assert isinstance(result, TrainResult)
    assert len(result.loss_history) == 400
    assert result.loss_history[-1] < 0.1 * result.loss_history[0]
    assert result.final_losses["action"] < 0.1
    assert result.train_seconds > 0


def test_training_is_bit_deterministic(tiny_demos):
    config = ModelConfig(variant="beac_no_reg", hidden_dim=8)
    tc = TrainConfig(epochs=5, batch_size=2, seed=3)
    r1 = train(config, tiny_demos, train_config=tc)
    r2 = train(config, tiny_demos, train_config=tc)
    assert list(r1.params) == list(r2.params)
    for name in r1.params:
        assert np.array_equal(r1.params[name].data, r2.params[name].data), name
    assert r1.loss_history == r2.loss_history

    r3 = train(config, tiny_demos, train_config=TrainConfig(epochs=5, batch_size=2, seed=4))
    assert any(not np.array_equal(r1.params[n].data, r3.params[n].data)
               for n in r1.params)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_training_divergence_reports_location(tiny_demos):
    from beac.autodiff import Tensor
    from beac.models import init_params

    config = ModelConfig(variant="beac_no_reg", hidden_dim=8)
    # weights this large overflow the squared-error term on the first pass
    poisoned = {name: Tensor(t.data * 0 + 1e200)
                for name, t in init_params(config, 0).items()}
    with pytest.raises(TrainingDiverged, match="epoch 0 batch 0"):
        train(config, tiny_demos, train_config=TrainConfig(epochs=3, batch_size=4),
              initial_params=poisoned)


def test_training_requires_data():
    with pytest.raises(ValueError):
        train(ModelConfig(variant="bc"), [])


def test_default_stats_come_from_training_set(tiny_demos):
    config = ModelConfig(variant="bc")
    result = train(config, tiny_demos, train_config=TrainConfig(epochs=1, batch_size=4))
    expect = NormalizationStats.from_trajectories(tiny_demos)
    assert np.array_equal(result.stats.obs_mean, expect.obs_mean)
    assert np.array_equal(result.stats.act_std, expect.act_std)


def test_trained_policy_fits_mode_labels(tiny_demos):
    config = ModelConfig(variant="beac_no_reg", hidden_dim=16)
    result = train(config, tiny_demos,
                   train_config=TrainConfig(epochs=120, batch_size=4, lr=3e-3, seed=1))
    runtime = PolicyRuntime(config, result.params, result.stats)
    correct = total = 0
    for traj in tiny_demos:
        state = runtime.initial_state()
        prev = np.zeros(2)
        for t in range(traj.T):
            out, state = runtime.step(traj.observations[t], prev, state)
            correct += int((out.mode_prob >= 0.5) == bool(traj.modes[t]))
            total += 1
            prev = traj.actions[t]
    assert correct / total > 0.9


# ------------------------------------------------------------ checkpoints


def test_checkpoint_round_trip(tmp_path, tiny_demos):
    config = ModelConfig(variant="beac", hidden_dim=8, k=3)
    result = train(config, tiny_demos, train_config=TrainConfig(epochs=2, batch_size=4))
    path = str(tmp_path / "policy.ckpt")
    meta = {"epochs": 2, "seed": 0, "final_loss": result.final_losses["total"]}
    save_checkpoint(path, result.params, config, result.stats, meta)
    ck = load_checkpoint(path)
    assert isinstance(ck, Checkpoint)
    assert ck.model_config == config
    assert ck.train_meta == meta
    assert list(ck.params) == list(result.params)
    for name in result.params:
        assert np.array_equal(ck.params[name].data, result.params[name].data)
    assert np.array_equal(ck.stats.obs_mean, result.stats.obs_mean)
    # loaded weights must drive the exact same losses
    before = compute_losses(config, result.params, tiny_demos, result.stats)
    after = compute_losses(config, ck.params, tiny_demos, ck.stats)
    assert before == after


def test_checkpoint_bytes_reproducible(tmp_path, tiny_demos):
    config = ModelConfig(variant="bc_switch", hidden_dim=8)
    result = train(config, tiny_demos, train_config=TrainConfig(epochs=1, batch_size=4))
    p1, p2 = str(tmp_path / "a.ckpt"), str(tmp_path / "b.ckpt")
    save_checkpoint(p1, result.params, config, result.stats, {"seed": 0})
    save_checkpoint(p2, result.params, config, result.stats, {"seed": 0})
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_checkpoint_rejects_corruption(tmp_path, tiny_demos):
    config = ModelConfig(variant="bc", hidden_dim=8)
    result = train(config, tiny_demos, train_config=TrainConfig(epochs=1, batch_size=4))
    path = str(tmp_path / "c.ckpt")
    save_checkpoint(path, result.params, config, result.stats)

    blob = open(path, "rb").read()
    open(path, "wb").write(blob[:-16])  # truncate payload
    with pytest.raises(ValueError, match="payload"):
        load_checkpoint(path)

    bad = str(tmp_path / "bad.ckpt")
    open(bad, "wb").write(b'{"schema":"other"}\n')
    with pytest.raises(ValueError, match="schema"):
        load_checkpoint(bad)

    empty = str(tmp_path / "empty.ckpt")
    open(empty, "wb").write(b"")
    with pytest.raises(ValueError, match="header"):
        load_checkpoint(empty)
