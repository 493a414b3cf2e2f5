"""Minimal reverse-mode autodiff on dense float64 arrays.

Graphs are built once from named leaves (parameters, data placeholders,
constants) and re-evaluated with fresh bindings, so a training loop pays
graph construction cost only when the batch shape changes. Everything is
64-bit; forward passes are deterministic (identical bindings give
bit-identical outputs).

Supported primitives: matmul, add (with row-broadcast bias), elementwise
multiply, tanh, sigmoid, concat, slice, squared error, binary cross-entropy
(from logits), scalar scale, and full sum. That set is exactly what the
recurrent encoder, the policy/mode heads, and the observation decoders need;
there is no general broadcasting and no GPU path.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "Node",
    "GraphError",
    "param",
    "placeholder",
    "const",
    "matmul",
    "add",
    "mul",
    "tanh",
    "sigmoid",
    "concat",
    "slice_axis",
    "squared_error",
    "bce_with_logits",
    "scale",
    "sum_all",
    "forward",
    "backward",
    "OptimizerState",
    "adam_init",
    "adam_step",
]


class GraphError(ValueError):
    """Raised for shape mismatches, unbound leaves, or misuse of the graph API."""


class Tensor:
    """Immutable dense float64 value. Rejects NaN/Inf at construction."""

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.asarray(data, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError("Tensor values must be finite (got NaN or Inf)")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        return f"Tensor(shape={self.shape})"


# Op codes. Leaves first, then primitives.
_PARAM = 0
_INPUT = 1
_CONST = 2
_MATMUL = 3
_ADD = 4
_MUL = 5
_TANH = 6
_SIGMOID = 7
_CONCAT = 8
_SLICE = 9
_SQERR = 10
_BCE = 11
_SCALE = 12
_SUM = 13

_OP_NAMES = {
    _PARAM: "param",
    _INPUT: "input",
    _CONST: "const",
    _MATMUL: "matmul",
    _ADD: "add",
    _MUL: "mul",
    _TANH: "tanh",
    _SIGMOID: "sigmoid",
    _CONCAT: "concat",
    _SLICE: "slice",
    _SQERR: "squared_error",
    _BCE: "binary_cross_entropy",
    _SCALE: "scale",
    _SUM: "sum",
}

_node_counter = 0


class Node:
    """One vertex of an acyclic computation graph.

    Leaves are named parameters, named data placeholders, or constants;
    interior nodes reference their inputs, so cycles cannot be formed
    through the public constructors. Forward caches the computed value on
    the node; backward caches the gradient.
    """

    __slots__ = ("op", "inputs", "name", "axis", "start", "stop", "alpha",
                 "const_value", "requires_grad", "uid",
                 "_value", "_grad", "_run", "_topo")

    def __init__(self, op, inputs=(), name=None, axis=0, start=0, stop=0,
                 alpha=0.0, const_value=None):
        global _node_counter
        _node_counter += 1
        self.uid = _node_counter
        self.op = op
        self.inputs = list(inputs)
        self.name = name
        self.axis = axis
        self.start = start
        self.stop = stop
        self.alpha = alpha
        self.const_value = const_value
        self.requires_grad = (op == _PARAM) or any(
            i.requires_grad for i in self.inputs)
        self._value = None
        self._grad = None
        self._run = None
        self._topo = None

    def label(self) -> str:
        base = _OP_NAMES[self.op]
        if self.name is not None:
            return f"{base}:{self.name}"
        return f"{base}#{self.uid}"

    def __repr__(self):
        return f"Node({self.label()})"


def param(name: str) -> Node:
    """Named learnable leaf; its value comes from the forward bindings."""
    return Node(_PARAM, name=name)


def placeholder(name: str) -> Node:
    """Named data leaf; bound at forward time, never differentiated."""
    return Node(_INPUT, name=name)


def const(value) -> Node:
    """Embedded constant (masks, targets, precomputed feature blocks)."""
    arr = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("const values must be finite")
    return Node(_CONST, const_value=arr)


def matmul(a: Node, b: Node) -> Node:
    return Node(_MATMUL, (a, b))


def add(a: Node, b: Node) -> Node:
    """Elementwise add; b may be a (n,) or (1, n) bias broadcast over rows."""
    return Node(_ADD, (a, b))


def mul(a: Node, b: Node) -> Node:
    """Elementwise (Hadamard) product of equal-shaped operands."""
    return Node(_MUL, (a, b))


def tanh(x: Node) -> Node:
    return Node(_TANH, (x,))


def sigmoid(x: Node) -> Node:
    return Node(_SIGMOID, (x,))


def concat(xs, axis: int = 1) -> Node:
    return Node(_CONCAT, tuple(xs), axis=axis)


def slice_axis(x: Node, axis: int, start: int, stop: int) -> Node:
    return Node(_SLICE, (x,), axis=axis, start=start, stop=stop)


def squared_error(pred: Node, target: Node) -> Node:
    """Elementwise (pred - target)^2."""
    return Node(_SQERR, (pred, target))


def bce_with_logits(logits: Node, labels: Node) -> Node:
    """Elementwise binary cross-entropy of sigmoid(logits) against labels.

    Computed in the stable logit form max(z,0) - z*y + log1p(exp(-|z|)).
    """
    return Node(_BCE, (logits, labels))


def scale(x: Node, alpha: float) -> Node:
    return Node(_SCALE, (x,), alpha=float(alpha))


def sum_all(x: Node) -> Node:
    """Reduce to a scalar (shape ())."""
    return Node(_SUM, (x,))


def _toposort(root: Node) -> list[Node]:
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if node.uid in seen:
            continue
        seen.add(node.uid)
        stack.append((node, True))
        for inp in node.inputs:
            if inp.uid not in seen:
                stack.append((inp, False))
    return order


def _sigmoid(z):
    # tanh form is stable for large |z| in float64
    return 0.5 * (np.tanh(0.5 * z) + 1.0)


def _bind(bindings, name, node):
    try:
        v = bindings[name]
    except KeyError:
        raise GraphError(f"unbound leaf '{node.label()}'") from None
    if isinstance(v, Tensor):
        return v.data
    return Tensor(v).data


def forward(root: Node, bindings: dict) -> Tensor:
    """Evaluate the graph under `bindings` (name -> Tensor or array).

    Caches every intermediate on its node for a later backward() call.
    Raises GraphError naming the offending node on any shape mismatch or
    unbound leaf.
    """
    topo = root._topo
    if topo is None:
        topo = _toposort(root)
        root._topo = topo
    run = object()
    for node in topo:
        op = node.op
        if op == _PARAM or op == _INPUT:
            v = _bind(bindings, node.name, node)
        elif op == _CONST:
            v = node.const_value
        elif op == _MATMUL:
            a = node.inputs[0]._value
            b = node.inputs[1]._value
            if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
                raise GraphError(
                    f"matmul shape mismatch at {node.label()}: "
                    f"{a.shape} @ {b.shape}")
            v = a @ b
        elif op == _ADD:
            a = node.inputs[0]._value
            b = node.inputs[1]._value
            if a.shape != b.shape:
                # allow row-broadcast bias: (n,) or (1, n) against (m, n)
                if not (a.ndim == 2 and b.shape in ((a.shape[1],), (1, a.shape[1]))):
                    raise GraphError(
                        f"add shape mismatch at {node.label()}: "
                        f"{a.shape} + {b.shape}")
            v = a + b
        elif op == _MUL:
            a = node.inputs[0]._value
            b = node.inputs[1]._value
            if a.shape != b.shape:
                raise GraphError(
                    f"mul shape mismatch at {node.label()}: "
                    f"{a.shape} * {b.shape}")
            v = a * b
        elif op == _TANH:
            v = np.tanh(node.inputs[0]._value)
        elif op == _SIGMOID:
            v = _sigmoid(node.inputs[0]._value)
        elif op == _CONCAT:
            parts = [i._value for i in node.inputs]
            try:
                v = np.concatenate(parts, axis=node.axis)
            except ValueError as e:
                raise GraphError(f"concat mismatch at {node.label()}: {e}") from None
        elif op == _SLICE:
            x = node.inputs[0]._value
            if node.axis >= x.ndim or node.stop > x.shape[node.axis]:
                raise GraphError(
                    f"slice out of range at {node.label()}: "
                    f"axis {node.axis} [{node.start}:{node.stop}] of {x.shape}")
            if node.axis == 0:
                v = x[node.start:node.stop]
            else:
                v = x[:, node.start:node.stop]
        elif op == _SQERR:
            a = node.inputs[0]._value
            b = node.inputs[1]._value
            if a.shape != b.shape:
                raise GraphError(
                    f"squared_error shape mismatch at {node.label()}: "
                    f"{a.shape} vs {b.shape}")
            d = a - b
            v = d * d
        elif op == _BCE:
            z = node.inputs[0]._value
            y = node.inputs[1]._value
            if z.shape != y.shape:
                raise GraphError(
                    f"binary_cross_entropy shape mismatch at {node.label()}: "
                    f"{z.shape} vs {y.shape}")
            v = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
        elif op == _SCALE:
            v = node.inputs[0]._value * node.alpha
        elif op == _SUM:
            v = np.asarray(np.sum(node.inputs[0]._value))
        else:  # pragma: no cover
            raise GraphError(f"unknown op at {node.label()}")
        node._value = v
        node._grad = None
        node._run = run
    return Tensor(root._value)


def backward(root: Node, params: dict[str, Tensor] | None = None) -> dict[str, Tensor]:
    """Accumulate gradients of a scalar `root` into every reachable parameter.

    Must follow a forward() on the same root. Returns {name: Tensor}; when
    `params` is given (name -> current value), parameters unreachable from
    the loss get zero gradients of the matching shape.
    """
    if root._run is None or root._value is None:
        raise GraphError("backward called before forward")
    if root._value.size != 1:
        raise GraphError(
            f"backward requires a scalar loss, got shape {root._value.shape}")
    topo = root._topo
    run = root._run
    for node in topo:
        node._grad = None
    root._grad = np.ones_like(root._value)
    grads: dict[str, Tensor] = {}
    for node in reversed(topo):
        if node._run is not run:  # pragma: no cover - topo is per-root
            raise GraphError("stale forward cache; rerun forward")
        if not node.requires_grad:
            continue
        g = node._grad
        if g is None:
            continue
        op = node.op
        if op == _PARAM:
            grads[node.name] = Tensor(g)
            continue
        ins = node.inputs
        if op == _MATMUL:
            a, b = ins
            if a.requires_grad:
                _acc(a, g @ b._value.T)
            if b.requires_grad:
                _acc(b, a._value.T @ g)
        elif op == _ADD:
            a, b = ins
            if a.requires_grad:
                _acc(a, g)
            if b.requires_grad:
                if b._value.shape != g.shape:
                    _acc(b, np.sum(g, axis=0).reshape(b._value.shape))
                else:
                    _acc(b, g)
        elif op == _MUL:
            a, b = ins
            if a.requires_grad:
                _acc(a, g * b._value)
            if b.requires_grad:
                _acc(b, g * a._value)
        elif op == _TANH:
            y = node._value
            _acc(ins[0], g * (1.0 - y * y))
        elif op == _SIGMOID:
            y = node._value
            _acc(ins[0], g * y * (1.0 - y))
        elif op == _CONCAT:
            ofs = 0
            for inp in ins:
                w = inp._value.shape[node.axis]
                if inp.requires_grad:
                    if node.axis == 0:
                        _acc(inp, g[ofs:ofs + w])
                    else:
                        _acc(inp, g[:, ofs:ofs + w])
                ofs += w
        elif op == _SLICE:
            inp = ins[0]
            if inp.requires_grad:
                if inp._grad is None:
                    inp._grad = np.zeros_like(inp._value)
                if node.axis == 0:
                    inp._grad[node.start:node.stop] += g
                else:
                    inp._grad[:, node.start:node.stop] += g
        elif op == _SQERR:
            a, b = ins
            d = a._value - b._value
            if a.requires_grad:
                _acc(a, 2.0 * d * g)
            if b.requires_grad:
                _acc(b, -2.0 * d * g)
        elif op == _BCE:
            z, y = ins
            if z.requires_grad:
                _acc(z, (_sigmoid(z._value) - y._value) * g)
            if y.requires_grad:
                _acc(y, -z._value * g)
        elif op == _SCALE:
            _acc(ins[0], g * node.alpha)
        elif op == _SUM:
            _acc(ins[0], np.broadcast_to(g, ins[0]._value.shape))
    if params is not None:
        for name, value in params.items():
            if name not in grads:
                ref = value.data if isinstance(value, Tensor) else np.asarray(value)
                grads[name] = Tensor(np.zeros_like(ref))
    return grads


def _acc(node: Node, g):
    if node._grad is None:
        node._grad = np.array(g, dtype=np.float64)
    else:
        node._grad += g


def release(root: Node) -> None:
    """Drop the arrays cached on `root`'s graph by forward/backward.

    Graphs are retained and reused across many batches; without this, every
    live graph pins the full set of intermediates from its last evaluation.
    The structure (and memoized topo order) survives, so the next forward
    pays no rebuild cost.
    """
    topo = root._topo
    if topo is None:
        return
    for node in topo:
        node._value = None
        node._grad = None
        node._run = None


class OptimizerState:
    """Adam moments plus step counter for one named parameter set."""

    __slots__ = ("m", "v", "step", "lr", "beta1", "beta2", "eps")

    def __init__(self, m, v, step, lr, beta1, beta2, eps):
        self.m = m
        self.v = v
        self.step = step
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps


def adam_init(params: dict[str, Tensor], lr: float = 1e-3,
              beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> OptimizerState:
    if lr <= 0:
        raise ValueError("learning rate must be > 0")
    m = {k: np.zeros_like(t.data) for k, t in params.items()}
    v = {k: np.zeros_like(t.data) for k, t in params.items()}
    return OptimizerState(m, v, 0, lr, beta1, beta2, eps)


def adam_step(params: dict[str, Tensor], grads: dict[str, Tensor],
              state: OptimizerState) -> tuple[dict[str, Tensor], OptimizerState]:
    """One bias-corrected Adam update. Returns fresh tensors; state advances."""
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    out: dict[str, Tensor] = {}
    for name, p in params.items():
        g = grads[name].data if isinstance(grads[name], Tensor) else np.asarray(grads[name])
        if g.shape != p.data.shape:
            raise ValueError(
                f"gradient shape {g.shape} does not match parameter "
                f"'{name}' shape {p.data.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite gradient for parameter '{name}'")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        upd = p.data - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        out[name] = Tensor(upd)
    return out, state
