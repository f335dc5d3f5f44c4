"""Dense feedforward classifier: forward, cross-entropy, manual backprop, SGD.

Everything is float64. The network is a list of affine layers with ReLU on
hidden layers and raw logits at the output. Gradients are of the MEAN
per-example cross-entropy over the batch, so the learning rate does not
need rescaling when the batch size changes.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericsError, ShapeError


@dataclass
class Network:
    layer_sizes: list[int]
    weights: list[np.ndarray]  # weights[l] has shape (layer_sizes[l+1], layer_sizes[l])
    biases: list[np.ndarray]  # biases[l] has shape (layer_sizes[l+1],)


@dataclass
class ForwardTrace:
    """Intermediate values from one forward pass, consumed by backward()."""

    layer_inputs: list[np.ndarray]  # layer_inputs[l] is the input to layer l; [0] is the batch
    pre_activations: list[np.ndarray]  # pre_activations[-1] is the logits


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def init_network(layer_sizes, seed) -> Network:
    """Build a network with symmetric-uniform weights scaled by fan-in + fan-out.

    Weights are drawn from U(-a, a) with a = sqrt(6 / (fan_in + fan_out));
    biases start at zero. `seed` may be an int, a SeedSequence, or a Generator;
    the same (layer_sizes, seed) pair always yields bit-identical parameters.
    """
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise ShapeError(f"layer_sizes needs at least input and output entries, got {sizes}")
    if any(s < 1 for s in sizes):
        raise ShapeError(f"layer sizes must be positive, got {sizes}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Network(sizes, weights, biases)


def forward(net: Network, features) -> tuple[np.ndarray, ForwardTrace]:
    """Run a batch through the network; returns (logits, trace)."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.layer_sizes[0]:
        raise ShapeError(
            f"expected features of shape (batch, {net.layer_sizes[0]}), got {x.shape}"
        )
    layer_inputs = [x]
    pre_activations = []
    activation = x
    last = len(net.weights) - 1
    for layer, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = activation @ w.T + b
        pre_activations.append(z)
        if layer < last:
            activation = np.maximum(z, 0.0)
            layer_inputs.append(activation)
    return pre_activations[-1], ForwardTrace(layer_inputs, pre_activations)


def cross_entropy_losses(logits, labels) -> np.ndarray:
    """Per-example cross-entropy, stabilized by max-subtraction; always >= 0."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError(
            f"expected logits (batch, classes) and labels (batch,), got {logits.shape} and {labels.shape}"
        )
    classes = logits.shape[1]
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        bad = labels[(labels < 0) | (labels >= classes)][0]
        raise ShapeError(f"label {bad} out of range for {classes} classes")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    losses = log_norm - shifted[np.arange(len(labels)), labels]
    return np.maximum(losses, 0.0)  # guard against -1e-17 from rounding


def backward(net: Network, trace: ForwardTrace, labels) -> Gradients:
    """Gradients of mean cross-entropy over the traced batch."""
    labels = np.asarray(labels)
    batch = trace.layer_inputs[0].shape[0]
    if labels.shape != (batch,):
        raise ShapeError(f"expected {batch} labels, got shape {labels.shape}")
    logits = trace.pre_activations[-1]
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    delta = probs
    delta[np.arange(batch), labels] -= 1.0
    delta /= batch
    grad_w = [None] * len(net.weights)
    grad_b = [None] * len(net.biases)
    for layer in range(len(net.weights) - 1, -1, -1):
        grad_w[layer] = delta.T @ trace.layer_inputs[layer]
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ net.weights[layer]) * (trace.pre_activations[layer - 1] > 0.0)
    return Gradients(grad_w, grad_b)


def sgd_step(net: Network, grads: Gradients, lr: float) -> None:
    """In-place step p <- p - lr * g; refuses non-finite gradients."""
    for layer, (gw, gb) in enumerate(zip(grads.weights, grads.biases)):
        if not (np.isfinite(gw).all() and np.isfinite(gb).all()):
            raise NumericsError(f"non-finite gradient in layer {layer}; training diverged")
    for w, b, gw, gb in zip(net.weights, net.biases, grads.weights, grads.biases):
        w -= lr * gw
        b -= lr * gb


@dataclass
class LrSchedule:
    """Step decay: the rate is `initial` divided by every factor whose epoch has started."""

    initial: float
    steps: list[tuple[int, float]]  # (epoch, factor), applied from the start of that epoch

    def __post_init__(self):
        if not (self.initial > 0):
            raise ShapeError(f"initial learning rate must be positive, got {self.initial}")
        epochs = [e for e, _ in self.steps]
        if any(e < 0 for e in epochs) or epochs != sorted(set(epochs)):
            raise ShapeError(f"schedule epochs must be strictly increasing and >= 0, got {epochs}")
        if any(f <= 0 for _, f in self.steps):
            raise ShapeError("schedule factors must be positive")


def lr_at(schedule: LrSchedule, epoch: int) -> float:
    rate = schedule.initial
    for step_epoch, factor in schedule.steps:
        if step_epoch <= epoch:
            rate /= factor
    return rate
