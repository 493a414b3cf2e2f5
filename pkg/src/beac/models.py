"""Mode-switching imitation policies over a recurrent belief state.

The full model runs a gated recurrent cell over (observation, previous
action) pairs and hangs four heads off the resulting belief vector: a mode
classifier (explore vs act on the task), an action regressor supervised
only on task-mode steps, and two observation decoders that regularize the
belief by predicting the observation k steps ahead (given the next k
actions) and k steps back (given the previous k actions). Each decoder
advances its state through the action window one action per step (the past
decoder walks the window backwards), so decoding cost grows with k.

Ablations drop the decoders; baseline variants additionally drop the
recurrence (heads read the current observation directly) or the mode head.

Training graphs are built once per (batch, length) shape and reused. All
sequence placeholders are laid out time-major: row ``t * B + b`` holds step
``t`` of batch element ``b``, so per-step slices and whole-sequence head
applications are both contiguous.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import autodiff as ad
from .autodiff import Tensor
from .data import NormalizationStats, Trajectory

OBS_DIM = 6
ACT_DIM = 2


@dataclass(frozen=True)
class VariantSpec:
    recurrent: bool   # belief state vs reactive observation features
    switching: bool   # has a mode head
    future: bool      # future-observation decoder regularizer
    past: bool        # past-observation decoder regularizer


VARIANTS: dict[str, VariantSpec] = {
    "beac": VariantSpec(True, True, True, True),
    "beac_no_past": VariantSpec(True, True, True, False),
    "beac_no_future": VariantSpec(True, True, False, True),
    "beac_no_reg": VariantSpec(True, True, False, False),
    "bc_switch": VariantSpec(False, True, False, False),
    "bc_belief": VariantSpec(True, False, False, False),
    "bc": VariantSpec(False, False, False, False),
}


@dataclass(frozen=True)
class ModelConfig:
    variant: str = "beac"
    hidden_dim: int = 64   # belief size and head hidden width
    k: int = 10            # decoder prediction offset, in steps
    alpha: float = 1.0     # mode loss weight
    beta: float = 0.25     # future decoder loss weight
    gamma: float = 0.25    # past decoder loss weight

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(
                f"unknown variant {self.variant!r}; choose from {sorted(VARIANTS)}")
        if self.hidden_dim < 1:
            raise ValueError("hidden_dim must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @property
    def spec(self) -> VariantSpec:
        return VARIANTS[self.variant]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


def _param_plan(config: ModelConfig) -> list[tuple[str, tuple, float]]:
    """(name, shape, init_bound) in a fixed order; seeding depends on it."""
    spec = config.spec
    H = config.hidden_dim
    D = H if spec.recurrent else OBS_DIM
    plan = []
    if spec.recurrent:
        g = 1.0 / np.sqrt(H)
        plan += [("gru_Wx", (OBS_DIM + ACT_DIM, 3 * H), g),
                 ("gru_Wh", (H, 3 * H), g),
                 ("gru_bx", (3 * H,), g),
                 ("gru_bh", (3 * H,), g)]
    if spec.switching:
        plan += _dense_plan("mode", [D, H, 1])
    plan += _dense_plan("act", [D, H, H, ACT_DIM])
    if spec.future:
        plan += _decoder_plan("fut", H)
    if spec.past:
        plan += _decoder_plan("past", H)
    return plan


def _decoder_plan(prefix: str, H: int) -> list[tuple[str, tuple, float]]:
    g = 1.0 / np.sqrt(2 * H + ACT_DIM)
    o = 1.0 / np.sqrt(H)
    return [(f"{prefix}_Wa", (ACT_DIM, H), g),
            (f"{prefix}_Wb", (H, H), g),
            (f"{prefix}_Wh", (H, H), g),
            (f"{prefix}_b", (H,), g),
            (f"{prefix}_Wo", (H, OBS_DIM), o),
            (f"{prefix}_bo", (OBS_DIM,), o)]


def _dense_plan(prefix: str, dims: list[int]) -> list[tuple[str, tuple, float]]:
    plan = []
    for i in range(len(dims) - 1):
        b = 1.0 / np.sqrt(dims[i])
        plan += [(f"{prefix}_W{i + 1}", (dims[i], dims[i + 1]), b),
                 (f"{prefix}_b{i + 1}", (dims[i + 1],), b)]
    return plan


def init_params(config: ModelConfig, seed: int) -> dict[str, Tensor]:
    rng = np.random.default_rng(seed)
    return {name: Tensor(rng.uniform(-b, b, size=shape))
            for name, shape, b in _param_plan(config)}


# --------------------------------------------------------------- graphs


@dataclass
class TrainingGraph:
    config: ModelConfig
    B: int
    T: int
    total: ad.Node
    action: ad.Node
    mode: ad.Node | None
    future: ad.Node | None
    past: ad.Node | None
    beliefs: ad.Node | None  # (B*T, H) time-major, recurrent variants only


def _gru_scan(config: ModelConfig, B: int, T: int) -> ad.Node:
    """Unrolled recurrent scan; returns stacked beliefs (B*T, H)."""
    H = config.hidden_dim
    x = ad.placeholder("x_seq")  # (B*T, OBS+ACT) time-major
    sx_all = ad.add(ad.matmul(x, ad.param("gru_Wx")), ad.param("gru_bx"))
    Wh = ad.param("gru_Wh")
    bh = ad.param("gru_bh")
    h = ad.const(np.zeros((B, H)))
    steps = []
    for t in range(T):
        sx = ad.slice_axis(sx_all, 0, t * B, (t + 1) * B)
        sh = ad.add(ad.matmul(h, Wh), bh)
        r = ad.sigmoid(ad.add(ad.slice_axis(sx, 1, 0, H),
                              ad.slice_axis(sh, 1, 0, H)))
        z = ad.sigmoid(ad.add(ad.slice_axis(sx, 1, H, 2 * H),
                              ad.slice_axis(sh, 1, H, 2 * H)))
        n = ad.tanh(ad.add(ad.slice_axis(sx, 1, 2 * H, 3 * H),
                           ad.mul(r, ad.slice_axis(sh, 1, 2 * H, 3 * H))))
        # h' = n + z * (h - n): convex blend of candidate and carry
        h = ad.add(n, ad.mul(z, ad.add(h, ad.scale(n, -1.0))))
        steps.append(h)
    return ad.concat(steps, axis=0)


def _dense(prefix: str, x: ad.Node, n_layers: int, last_linear=True) -> ad.Node:
    for i in range(1, n_layers + 1):
        x = ad.add(ad.matmul(x, ad.param(f"{prefix}_W{i}")),
                   ad.param(f"{prefix}_b{i}"))
        if i < n_layers or not last_linear:
            x = ad.tanh(x)
    return x


def _weighted_sq_loss(pred: ad.Node, tgt_name: str, w_name: str) -> ad.Node:
    return ad.sum_all(ad.mul(ad.squared_error(pred, ad.placeholder(tgt_name)),
                             ad.placeholder(w_name)))


def _decoder_unroll(prefix: str, belief: ad.Node, windows: ad.Node, k: int,
                    reverse: bool) -> ad.Node:
    """Predicted observation after stepping a decoder state through a
    k-action window, one action per recurrence step.

    ``windows`` rows hold k actions flattened in time order; the future
    decoder consumes them first to last, the past decoder last to first
    (walking backwards from the anchor step toward the target observation).
    The anchor belief is injected into every step rather than used as the
    initial state, so its path to the prediction stays one nonlinearity
    deep no matter how large k grows, while cost stays proportional to k.
    """
    Wa = ad.param(f"{prefix}_Wa")
    Wh = ad.param(f"{prefix}_Wh")
    inj = ad.add(ad.matmul(belief, ad.param(f"{prefix}_Wb")),
                 ad.param(f"{prefix}_b"))
    order = range(k - 1, -1, -1) if reverse else range(k)
    s = None
    for i in order:
        a_i = ad.slice_axis(windows, 1, i * ACT_DIM, (i + 1) * ACT_DIM)
        pre = ad.add(ad.matmul(a_i, Wa), inj)
        if s is not None:
            pre = ad.add(ad.matmul(s, Wh), pre)
        s = ad.tanh(pre)
    return ad.add(ad.matmul(s, ad.param(f"{prefix}_Wo")),
                  ad.param(f"{prefix}_bo"))


def build_training_graph(config: ModelConfig, B: int, T: int) -> TrainingGraph:
    spec = config.spec
    k = config.k
    if spec.recurrent:
        beliefs = _gru_scan(config, B, T)
        feats = beliefs
    else:
        beliefs = None
        feats = ad.placeholder("obs_in")  # (B*T, OBS_DIM)

    act_pred = _dense("act", feats, 3)
    action = _weighted_sq_loss(act_pred, "act_tgt", "act_w")
    total = action

    mode = None
    if spec.switching:
        logits = _dense("mode", feats, 2)
        mode = ad.sum_all(ad.mul(
            ad.bce_with_logits(logits, ad.placeholder("mode_tgt")),
            ad.placeholder("mode_w")))
        total = ad.add(total, ad.scale(mode, config.alpha))

    future = None
    if spec.future:
        # beliefs at steps 0..T-k predict the observation k steps ahead
        rows = (T - k + 1) * B
        pred = _decoder_unroll("fut", ad.slice_axis(beliefs, 0, 0, rows),
                               ad.placeholder("fut_act"), k, reverse=False)
        future = _weighted_sq_loss(pred, "fut_tgt", "fut_w")
        total = ad.add(total, ad.scale(future, config.beta))

    past = None
    if spec.past:
        # beliefs at steps k..T-1 reconstruct the observation k steps back
        pred = _decoder_unroll("past", ad.slice_axis(beliefs, 0, k * B, T * B),
                               ad.placeholder("past_act"), k, reverse=True)
        past = _weighted_sq_loss(pred, "past_tgt", "past_w")
        total = ad.add(total, ad.scale(past, config.gamma))

    return TrainingGraph(config=config, B=B, T=T, total=total, action=action,
                         mode=mode, future=future, past=past, beliefs=beliefs)


_GRAPH_CACHE: dict[tuple, TrainingGraph] = {}


def training_graph(config: ModelConfig, B: int, T: int) -> TrainingGraph:
    key = (config, B, T)
    if key not in _GRAPH_CACHE:
        _GRAPH_CACHE[key] = build_training_graph(config, B, T)
    return _GRAPH_CACHE[key]


# --------------------------------------------------------------- batches


def assemble_batch(config: ModelConfig, trajectories: list[Trajectory],
                   stats: NormalizationStats,
                   pad_to: int | None = None) -> tuple[dict, int, int]:
    """Build the placeholder feed for a batch.

    Shorter trajectories are zero-padded to the longest length (or to
    ``pad_to`` when given, so minibatches of ragged data can share one
    graph); per-loss weight masks exclude padded rows, steps outside a
    head's valid range, and (for the action loss) exploration-mode steps.
    Each weight array already includes the 1/count normalizer so every
    loss is a plain weighted sum in the graph.

    Returns (feeds, B, T).
    """
    spec = config.spec
    k = config.k
    B = len(trajectories)
    if B == 0:
        raise ValueError("empty batch")
    T = max(max(t.T for t in trajectories), pad_to or 0)
    if spec.future or spec.past:
        # the future decoder needs at least one full action window; the past
        # decoder additionally needs a belief at step k, so it sits out
        # (contributing zero rows) when T == k
        if T < k:
            raise ValueError(f"k={k} needs trajectories of at least {k} steps")

    x_seq = np.zeros((T * B, OBS_DIM + ACT_DIM))
    obs_in = np.zeros((T * B, OBS_DIM)) if not spec.recurrent else None
    act_tgt = np.zeros((T * B, ACT_DIM))
    mode_tgt = np.zeros((T * B, 1))
    valid = np.zeros((T * B, 1))
    task = np.zeros((T * B, 1))
    n_fut = T - k + 1
    n_past = T - k
    if spec.future:
        fut_act = np.zeros((n_fut * B, ACT_DIM * k))
        fut_tgt = np.zeros((n_fut * B, OBS_DIM))
        fut_valid = np.zeros((n_fut * B, 1))
    if spec.past:
        past_act = np.zeros((n_past * B, ACT_DIM * k))
        past_tgt = np.zeros((n_past * B, OBS_DIM))
        past_valid = np.zeros((n_past * B, 1))

    zero_prev = stats.normalize_act(np.zeros(ACT_DIM))
    for b, traj in enumerate(trajectories):
        Tb = traj.T
        on = stats.normalize_obs(traj.observations)
        an = stats.normalize_act(traj.actions)
        idx = np.arange(Tb) * B + b
        x_seq[idx, :OBS_DIM] = on[:Tb]
        x_seq[idx[0], OBS_DIM:] = zero_prev  # before the first step: zero displacement
        x_seq[idx[1:], OBS_DIM:] = an[:Tb - 1]
        if obs_in is not None:
            obs_in[idx] = on[:Tb]
        act_tgt[idx] = an
        mode_tgt[idx, 0] = traj.modes
        valid[idx, 0] = 1.0
        task[idx, 0] = traj.modes
        if (spec.future or spec.past) and Tb >= k:
            # windows[j] = actions j..j+k-1 flattened time-major
            windows = sliding_window_view(an, k, axis=0)
            windows = windows.transpose(0, 2, 1).reshape(-1, ACT_DIM * k)
            if spec.future:
                tt = np.arange(0, Tb - k + 1)
                fut_act[tt * B + b] = windows
                fut_tgt[tt * B + b] = on[tt + k]
                fut_valid[tt * B + b] = 1.0
            if spec.past:
                tt = np.arange(k, Tb)
                past_act[(tt - k) * B + b] = windows[tt - k]
                past_tgt[(tt - k) * B + b] = on[tt - k]
                past_valid[(tt - k) * B + b] = 1.0

    def norm_weight(mask, width):
        w = mask / max(1.0, mask.sum())
        return np.repeat(w, width, axis=1) if width > 1 else w

    # variants without a mode head have no notion of exploration steps and
    # imitate every action; switching variants fit task-mode actions only
    act_mask = task * valid if spec.switching else valid
    feeds = {
        "act_tgt": act_tgt,
        "act_w": norm_weight(act_mask, ACT_DIM),
    }
    if spec.recurrent:
        feeds["x_seq"] = x_seq
    else:
        feeds["obs_in"] = obs_in
    if spec.switching:
        feeds["mode_tgt"] = mode_tgt
        feeds["mode_w"] = norm_weight(valid, 1)
    if spec.future:
        feeds["fut_act"] = fut_act
        feeds["fut_tgt"] = fut_tgt
        feeds["fut_w"] = norm_weight(fut_valid, OBS_DIM)
    if spec.past:
        feeds["past_act"] = past_act
        feeds["past_tgt"] = past_tgt
        feeds["past_w"] = norm_weight(past_valid, OBS_DIM)
    return feeds, B, T


def compute_losses(config: ModelConfig, params: dict[str, Tensor],
                   trajectories: list[Trajectory],
                   stats: NormalizationStats) -> dict[str, float]:
    """Loss components on a set of trajectories (no gradient side effects)."""
    feeds, B, T = assemble_batch(config, trajectories, stats)
    graph = training_graph(config, B, T)
    bindings = {**params, **feeds}
    out = {"total": ad.forward(graph.total, bindings).item(),
           "action": ad.forward(graph.action, bindings).item()}
    out["mode"] = ad.forward(graph.mode, bindings).item() if graph.mode else 0.0
    out["future"] = ad.forward(graph.future, bindings).item() if graph.future else 0.0
    out["past"] = ad.forward(graph.past, bindings).item() if graph.past else 0.0
    ad.release(graph.total)
    return out


# --------------------------------------------------------------- inference


def _np_params(params: dict) -> dict[str, np.ndarray]:
    return {k: (v.data if isinstance(v, Tensor) else np.asarray(v, dtype=np.float64))
            for k, v in params.items()}


def _np_sigmoid(z):
    return 0.5 * (np.tanh(0.5 * z) + 1.0)


def gru_cell_np(p: dict[str, np.ndarray], x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """One cell update on (B, obs+act) inputs; mirrors the training graph
    operation for operation so scan and fold agree to the last bit."""
    H = h.shape[1]
    sx = x @ p["gru_Wx"] + p["gru_bx"]
    sh = h @ p["gru_Wh"] + p["gru_bh"]
    r = _np_sigmoid(sx[:, :H] + sh[:, :H])
    z = _np_sigmoid(sx[:, H:2 * H] + sh[:, H:2 * H])
    n = np.tanh(sx[:, 2 * H:] + r * sh[:, 2 * H:])
    return n + z * (h - n)


def _dense_np(p: dict, prefix: str, x: np.ndarray, n_layers: int) -> np.ndarray:
    for i in range(1, n_layers + 1):
        x = x @ p[f"{prefix}_W{i}"] + p[f"{prefix}_b{i}"]
        if i < n_layers:
            x = np.tanh(x)
    return x


@dataclass
class StepOutput:
    action: np.ndarray          # raw (denormalized) action proposal
    mode_prob: float | None     # P(task mode), None without a mode head
    belief: np.ndarray | None   # current belief vector, None when reactive


class PolicyRuntime:
    """Stateless step-by-step policy evaluator backed by plain arrays.

    The caller owns the recurrent state: pass the state returned by the
    previous call (or ``initial_state()``) plus the previously executed
    action, exactly as the training sequences were laid out.
    """

    def __init__(self, config: ModelConfig, params: dict, stats: NormalizationStats):
        self.config = config
        self.spec = config.spec
        self.p = _np_params(params)
        self.stats = stats

    def initial_state(self) -> np.ndarray | None:
        if self.spec.recurrent:
            return np.zeros((1, self.config.hidden_dim))
        return None

    def step(self, obs_vec: np.ndarray, prev_action: np.ndarray,
             state: np.ndarray | None) -> tuple[StepOutput, np.ndarray | None]:
        o = self.stats.normalize_obs(obs_vec)
        if self.spec.recurrent:
            a = self.stats.normalize_act(prev_action)
            x = np.concatenate([o, a])[None, :]
            state = gru_cell_np(self.p, x, state)
            feats = state
            belief = state[0].copy()
        else:
            feats = o[None, :]
            belief = None
        mode_prob = None
        if self.spec.switching:
            logit = _dense_np(self.p, "mode", feats, 2)
            mode_prob = float(_np_sigmoid(logit[0, 0]))
        a_n = _dense_np(self.p, "act", feats, 3)[0]
        return StepOutput(action=self.stats.denormalize_act(a_n),
                          mode_prob=mode_prob, belief=belief), state

    def encode_beliefs(self, trajectory: Trajectory) -> np.ndarray:
        """Belief vector at every step of a recorded trajectory: (T, H)."""
        if not self.spec.recurrent:
            raise ValueError(f"variant {self.config.variant!r} has no belief state")
        state = self.initial_state()
        prev = np.zeros(ACT_DIM)
        out = np.zeros((trajectory.T, self.config.hidden_dim))
        for t in range(trajectory.T):
            o = self.stats.normalize_obs(trajectory.observations[t])
            a = self.stats.normalize_act(prev)
            state = gru_cell_np(self.p, np.concatenate([o, a])[None, :], state)
            out[t] = state[0]
            prev = trajectory.actions[t]
        return out

    def _decode(self, prefix: str, belief: np.ndarray, actions: np.ndarray,
                reverse: bool) -> np.ndarray:
        an = self.stats.normalize_act(actions)
        seq = an[::-1] if reverse else an
        inj = belief[None, :] @ self.p[f"{prefix}_Wb"] + self.p[f"{prefix}_b"]
        s = np.zeros((1, self.config.hidden_dim))
        for a in seq:
            s = np.tanh(s @ self.p[f"{prefix}_Wh"]
                        + a[None, :] @ self.p[f"{prefix}_Wa"] + inj)
        return (s @ self.p[f"{prefix}_Wo"] + self.p[f"{prefix}_bo"])[0]

    def decode_future(self, belief: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Predicted normalized observation k steps ahead of ``belief`` given
        the k upcoming actions (raw scale), consumed first to last."""
        if not self.spec.future:
            raise ValueError(f"variant {self.config.variant!r} has no future decoder")
        return self._decode("fut", belief, actions, reverse=False)

    def decode_past(self, belief: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Reconstructed normalized observation k steps behind ``belief``
        given the k actions that led to it (raw scale), consumed last to
        first."""
        if not self.spec.past:
            raise ValueError(f"variant {self.config.variant!r} has no past decoder")
        return self._decode("past", belief, actions, reverse=True)
