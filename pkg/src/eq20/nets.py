"""Tiny dense networks with hand-rolled forward/backward passes.

Three head types cover every network the trainer needs: a masked softmax
for the question policy, a sigmoid scalar for the value estimate, and a
linear scalar for the reward model. Hidden layers are all tanh. Gradients
are exact, derived by hand, and cross-checked against central finite
differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError, MaskError, NumericalError

HEADS = ("masked-softmax", "sigmoid-scalar", "linear-scalar")
FORMAT_TAG = "eq20-net"
FORMAT_VERSION = "v1"


@dataclass
class DenseNetwork:
    dims: tuple[int, ...]
    head: str
    weights: list  # per layer, shape (out, in)
    biases: list   # per layer, shape (out,)

    def copy(self) -> "DenseNetwork":
        return DenseNetwork(self.dims, self.head,
                            [w.copy() for w in self.weights],
                            [b.copy() for b in self.biases])


def init_network(dims, head: str, rng) -> DenseNetwork:
    """Fresh network with uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) parameters."""
    dims = tuple(int(d) for d in dims)
    if head not in HEADS:
        raise ConfigurationError(f"unknown head {head!r}")
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ConfigurationError(f"bad layer dims {dims}")
    if head in ("sigmoid-scalar", "linear-scalar") and dims[-1] != 1:
        raise ConfigurationError(f"{head} head needs a single output, got {dims[-1]}")
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return DenseNetwork(dims=dims, head=head, weights=weights, biases=biases)


def _trace(net: DenseNetwork, x: np.ndarray):
    """Forward pass keeping every activation; returns (logits, activations)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.dims[0],):
        raise DimensionError(f"input shape {x.shape} != ({net.dims[0]},)")
    activations = [x]
    a = x
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        a = np.tanh(w @ a + b)
        activations.append(a)
    logits = net.weights[-1] @ a + net.biases[-1]
    return logits, activations


def masked_softmax(logits: np.ndarray, mask=None) -> np.ndarray:
    """Softmax with masked entries pinned to exactly zero."""
    if mask is None:
        keep = np.ones(len(logits), dtype=bool)
    else:
        keep = ~np.asarray(mask, dtype=bool)
        if keep.shape != logits.shape:
            raise DimensionError("mask length does not match the output")
    if not keep.any():
        raise MaskError("mask excludes every output")
    probs = np.zeros(len(logits))
    shifted = logits[keep] - logits[keep].max()
    exps = np.exp(shifted)
    probs[keep] = exps / exps.sum()
    return probs


def forward(net: DenseNetwork, x, mask=None):
    """Network output: probability vector, or a float for scalar heads."""
    logits, _ = _trace(net, x)
    if net.head == "masked-softmax":
        return masked_softmax(logits, mask)
    if mask is not None:
        raise ConfigurationError("mask only applies to the masked-softmax head")
    if net.head == "sigmoid-scalar":
        return float(1.0 / (1.0 + np.exp(-logits[0])))
    return float(logits[0])


def zero_gradients(net: DenseNetwork):
    return ([np.zeros_like(w) for w in net.weights],
            [np.zeros_like(b) for b in net.biases])


def _backward_from_logits(net: DenseNetwork, activations, d_logits,
                          grad_w, grad_b):
    """Accumulate parameter gradients given dLoss/dlogits for one sample."""
    dz = d_logits
    for layer in range(len(net.weights) - 1, -1, -1):
        grad_w[layer] += np.outer(dz, activations[layer])
        grad_b[layer] += dz
        if layer > 0:
            da = net.weights[layer].T @ dz
            dz = da * (1.0 - activations[layer] ** 2)


def log_prob_gradients(net: DenseNetwork, x, action_index: int, mask=None,
                       scale: float = 1.0):
    """Gradient of scale * log pi(action | x) for the masked-softmax head.

    dlogits of log softmax is the one-hot action minus the distribution,
    already zero on masked entries.
    """
    if net.head != "masked-softmax":
        raise ConfigurationError("log-prob gradients need a masked-softmax head")
    logits, activations = _trace(net, x)
    probs = masked_softmax(logits, mask)
    p_action = probs[action_index]
    if p_action <= 0:
        raise MaskError(f"action {action_index} is masked out")
    d_logits = -probs * scale
    d_logits[action_index] += scale
    grad_w, grad_b = zero_gradients(net)
    _backward_from_logits(net, activations, d_logits, grad_w, grad_b)
    return float(np.log(p_action)) * scale, (grad_w, grad_b)


def squared_error_gradients(net: DenseNetwork, x, target: float):
    """Loss (output - target)^2 and its parameter gradients, scalar heads only."""
    if net.head == "masked-softmax":
        raise ConfigurationError("squared error needs a scalar head")
    logits, activations = _trace(net, x)
    z = logits[0]
    if net.head == "sigmoid-scalar":
        y = 1.0 / (1.0 + np.exp(-z))
        dz = 2.0 * (y - target) * y * (1.0 - y)
    else:
        y = z
        dz = 2.0 * (y - target)
    grad_w, grad_b = zero_gradients(net)
    _backward_from_logits(net, activations, np.array([dz]), grad_w, grad_b)
    return float((y - target) ** 2), (grad_w, grad_b)


def _trace_batch(net: DenseNetwork, inputs: np.ndarray):
    """Batched forward pass; activations are (batch, width) matrices."""
    if inputs.ndim != 2 or inputs.shape[1] != net.dims[0]:
        raise DimensionError(f"batch shape {inputs.shape} != (n, {net.dims[0]})")
    activations = [inputs]
    a = inputs
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        a = np.tanh(a @ w.T + b)
        activations.append(a)
    logits = a @ net.weights[-1].T + net.biases[-1]
    return logits, activations


def _backward_batch(net: DenseNetwork, activations, d_logits):
    """Mean-over-batch parameter gradients given per-sample dLoss/dlogits."""
    n = len(d_logits)
    grad_w, grad_b = zero_gradients(net)
    dz = d_logits
    for layer in range(len(net.weights) - 1, -1, -1):
        grad_w[layer] += dz.T @ activations[layer] / n
        grad_b[layer] += dz.sum(axis=0) / n
        if layer > 0:
            da = dz @ net.weights[layer]
            dz = da * (1.0 - activations[layer] ** 2)
    return grad_w, grad_b


def batch_squared_error_gradients(net: DenseNetwork, inputs, targets):
    """Mean squared error over a batch, with mean gradients."""
    if net.head == "masked-softmax":
        raise ConfigurationError("squared error needs a scalar head")
    inputs = np.asarray(inputs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    logits, activations = _trace_batch(net, inputs)
    z = logits[:, 0]
    if net.head == "sigmoid-scalar":
        y = 1.0 / (1.0 + np.exp(-z))
        dz = 2.0 * (y - targets) * y * (1.0 - y)
    else:
        y = z
        dz = 2.0 * (y - targets)
    loss = float(((y - targets) ** 2).mean())
    return loss, _backward_batch(net, activations, dz[:, None])


def batch_log_prob_gradients(net: DenseNetwork, inputs, actions, scales, masks):
    """Mean of scale_i * log pi(a_i | x_i) and its gradients over a batch."""
    if net.head != "masked-softmax":
        raise ConfigurationError("log-prob gradients need a masked-softmax head")
    inputs = np.asarray(inputs, dtype=float)
    actions = np.asarray(actions, dtype=int)
    scales = np.asarray(scales, dtype=float)
    keep = ~np.asarray(masks, dtype=bool)
    logits, activations = _trace_batch(net, inputs)
    if not keep.any(axis=1).all():
        raise MaskError("a mask excludes every output")
    shifted = np.where(keep, logits, -np.inf)
    shifted = shifted - shifted.max(axis=1, keepdims=True)
    exps = np.where(keep, np.exp(shifted), 0.0)
    probs = exps / exps.sum(axis=1, keepdims=True)
    rows = np.arange(len(inputs))
    p_action = probs[rows, actions]
    if np.any(p_action <= 0):
        raise MaskError("an action is masked out")
    d_logits = -probs * scales[:, None]
    d_logits[rows, actions] += scales
    mean_value = float((np.log(p_action) * scales).mean())
    return mean_value, _backward_batch(net, activations, d_logits)


def global_norm(gradients) -> float:
    grad_w, grad_b = gradients
    total = 0.0
    for g in list(grad_w) + list(grad_b):
        total += float((g ** 2).sum())
    return float(np.sqrt(total))


def sgd_step(net: DenseNetwork, gradients, lr: float, clip: float = 5.0,
             ascend: bool = False) -> None:
    """In-place SGD step with global-norm clipping; sign flips for ascent."""
    grad_w, grad_b = gradients
    norm = global_norm(gradients)
    if not np.isfinite(norm):
        raise NumericalError("non-finite gradient norm")
    factor = 1.0 if clip <= 0 or norm <= clip else clip / norm
    step = lr * factor if ascend else -lr * factor
    for w, g in zip(net.weights, grad_w):
        w += step * g
    for b, g in zip(net.biases, grad_b):
        b += step * g
    for w in net.weights + net.biases:
        if not np.all(np.isfinite(w)):
            raise NumericalError("non-finite parameter after update")


def finite_difference_gradients(net: DenseNetwork, loss_fn, h: float = 1e-5):
    """Central-difference gradient of loss_fn(net) over every parameter."""
    grad_w, grad_b = zero_gradients(net)
    for params, grads in ((net.weights, grad_w), (net.biases, grad_b)):
        for tensor, grad in zip(params, grads):
            flat = tensor.reshape(-1)
            flat_grad = grad.reshape(-1)
            for i in range(len(flat)):
                original = flat[i]
                flat[i] = original + h
                up = loss_fn(net)
                flat[i] = original - h
                down = loss_fn(net)
                flat[i] = original
                flat_grad[i] = (up - down) / (2.0 * h)
    return grad_w, grad_b


# ------------------------------------------------------------------ persistence

def serialize_network(net: DenseNetwork) -> str:
    """One header line, then one line of repr'd floats per parameter tensor."""
    lines = [" ".join([FORMAT_TAG, FORMAT_VERSION, net.head]
                      + [str(d) for d in net.dims])]
    for w, b in zip(net.weights, net.biases):
        lines.append(" ".join(repr(float(v)) for v in w.reshape(-1)))
        lines.append(" ".join(repr(float(v)) for v in b))
    return "\n".join(lines) + "\n"


def parse_network(text: str) -> DenseNetwork:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ConfigurationError("empty network file")
    header = lines[0].split()
    if len(header) < 5 or header[0] != FORMAT_TAG or header[1] != FORMAT_VERSION:
        raise ConfigurationError(f"bad network header: {lines[0]!r}")
    head = header[2]
    if head not in HEADS:
        raise ConfigurationError(f"unknown head {head!r}")
    dims = tuple(int(d) for d in header[3:])
    expected = 2 * (len(dims) - 1)
    if len(lines) - 1 != expected:
        raise ConfigurationError(
            f"expected {expected} parameter lines, found {len(lines) - 1}")
    weights, biases = [], []
    cursor = 1
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        w = np.array([float(v) for v in lines[cursor].split()])
        if w.size != fan_out * fan_in:
            raise ConfigurationError(f"layer weight line {cursor} has {w.size} "
                                     f"values, expected {fan_out * fan_in}")
        b = np.array([float(v) for v in lines[cursor + 1].split()])
        if b.size != fan_out:
            raise ConfigurationError(f"layer bias line {cursor + 1} has {b.size} "
                                     f"values, expected {fan_out}")
        weights.append(w.reshape(fan_out, fan_in))
        biases.append(b)
        cursor += 2
    return DenseNetwork(dims=dims, head=head, weights=weights, biases=biases)


def save_network(net: DenseNetwork, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_network(net))


def load_network(path) -> DenseNetwork:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_network(fh.read())
