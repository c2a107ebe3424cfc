"""Minimal fully-connected classifier used as the audit target.

The model is deliberately small: dense layers, ReLU hidden activations,
cross-entropy on a single example. Parameters live in one flat vector so
the privacy mechanism can treat a gradient as a point in R^d. All
functions are pure; nothing mutates the state passed in.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModelSpec",
    "ModelState",
    "Example",
    "param_count",
    "init_params",
    "loss",
    "grad_params",
    "grad_input",
]


@dataclass(frozen=True)
class ModelSpec:
    """Architecture description: layer_sizes[0] is the input width,
    layer_sizes[-1] the number of classes."""

    layer_sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2:
            raise ValueError("need at least input and output layer sizes")
        if any(s < 1 for s in sizes):
            raise ValueError(f"layer sizes must be positive: {sizes}")
        if sizes[-1] < 2:
            raise ValueError("cross-entropy needs at least 2 classes")


@dataclass(frozen=True)
class ModelState:
    spec: ModelSpec
    params: np.ndarray  # flat, length param_count(spec)

    def __post_init__(self):
        expected = param_count(self.spec)
        if self.params.shape != (expected,):
            raise ValueError(
                f"params shape {self.params.shape} != ({expected},) for {self.spec}"
            )


@dataclass(frozen=True)
class Example:
    features: np.ndarray
    label: int


def param_count(spec):
    """Total parameters: each layer holds (fan_in + 1) * fan_out."""
    sizes = spec.layer_sizes
    return sum((sizes[i] + 1) * sizes[i + 1] for i in range(len(sizes) - 1))


def init_params(spec, rng):
    """Draw weights from N(0, 1/fan_in) and zero the biases."""
    chunks = []
    sizes = spec.layer_sizes
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out))
        chunks.append(w.ravel())
        chunks.append(np.zeros(fan_out))
    return ModelState(spec, np.concatenate(chunks))


def _layers(state):
    """Yield (W, b) views into the flat parameter vector."""
    sizes = state.spec.layer_sizes
    p = state.params
    offset = 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = p[offset : offset + fan_in * fan_out].reshape(fan_in, fan_out)
        offset += fan_in * fan_out
        b = p[offset : offset + fan_out]
        offset += fan_out
        yield w, b


def _check_example(state, example):
    sizes = state.spec.layer_sizes
    x = np.asarray(example.features, dtype=float)
    if x.shape != (sizes[0],):
        raise ValueError(f"features shape {x.shape} != ({sizes[0]},)")
    if not 0 <= example.label < sizes[-1]:
        raise ValueError(f"label {example.label} outside [0, {sizes[-1]})")
    return x


def _forward(state, example):
    """Run the network, keeping activations for backprop.

    Returns (loss, activations, preacts, log_probs). activations[0] is the
    input; preacts[i] is the pre-activation of layer i.
    """
    x = _check_example(state, example)
    activations = [x]
    preacts = []
    layers = list(_layers(state))
    h = x
    for i, (w, b) in enumerate(layers):
        z = h @ w + b
        preacts.append(z)
        if i < len(layers) - 1:
            h = np.maximum(z, 0.0)
            activations.append(h)
    logits = preacts[-1]
    # max-subtraction keeps the log-sum-exp finite for any logit scale
    shifted = logits - logits.max()
    log_probs = shifted - np.log(np.exp(shifted).sum())
    value = -log_probs[example.label]
    return value, activations, preacts, log_probs


def loss(state, example):
    """Cross-entropy of the single example under the current parameters."""
    return float(_forward(state, example)[0])


def _backward(state, example):
    """Shared backward pass; returns (flat param gradient, input gradient)."""
    _, activations, preacts, log_probs = _forward(state, example)
    layers = list(_layers(state))
    delta = np.exp(log_probs)
    delta[example.label] -= 1.0  # softmax minus one-hot
    grads = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        w, _ = layers[i]
        grads[i] = (np.outer(activations[i], delta), delta.copy())
        delta = w @ delta
        if i > 0:
            # ReLU subgradient is 0 at 0, so dead units pass nothing back
            delta = delta * (preacts[i - 1] > 0.0)
    flat = np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])
    return flat, delta


def grad_params(state, example):
    """Gradient of loss() with respect to the flat parameter vector."""
    return _backward(state, example)[0]


def grad_input(state, example):
    """Gradient of loss() with respect to the input features."""
    return _backward(state, example)[1]
