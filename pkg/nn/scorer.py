"""Fully connected tanh scorer f(x | theta) with hand-written backpropagation."""

from dataclasses import dataclass

import numpy as np

from core.exceptions import InvalidShape, ShapeMismatch
from core.seeding import make_rng


@dataclass(frozen=True, eq=False)
class ScorerParams:
    """Weights and biases of every layer; all activations, the last included, are tanh.

    `weights[l]` has shape (fan_in, fan_out) and `biases[l]` shape (fan_out,).
    Scores therefore lie in (-1, 1).
    """

    weights: tuple
    biases: tuple

    def __post_init__(self):
        weights = tuple(np.asarray(w, dtype=float) for w in self.weights)
        biases = tuple(np.asarray(b, dtype=float) for b in self.biases)
        if not weights or len(weights) != len(biases):
            raise InvalidShape("ScorerParams needs one bias vector per weight matrix")
        for layer, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise InvalidShape(f"Layer {layer}: weight {w.shape} and bias {b.shape} disagree")
            if layer and w.shape[0] != weights[layer - 1].shape[1]:
                raise InvalidShape(f"Layer {layer} expects width {w.shape[0]}")
        if weights[-1].shape[1] != 1:
            raise InvalidShape("The scorer output width must be 1")
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'biases', biases)

    @property
    def layer_sizes(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def input_width(self):
        return self.weights[0].shape[0]

    @property
    def size(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def flat(self):
        """All parameters as one vector, layer by layer, weights row-major before biases."""
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.extend([w.ravel(), b])
        return np.concatenate(parts)

    @classmethod
    def from_flat(cls, layer_sizes, vector):
        vector = np.asarray(vector, dtype=float)
        expected = sum(a * b + b for a, b in zip(layer_sizes[:-1], layer_sizes[1:]))
        if vector.shape != (expected,):
            raise ShapeMismatch(f"Expected {expected} parameters, got {vector.shape}")
        weights, biases, offset = [], [], 0
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            weights.append(vector[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out))
            offset += fan_in * fan_out
            biases.append(vector[offset:offset + fan_out])
            offset += fan_out
        return cls(tuple(weights), tuple(biases))

    def squared_norm(self):
        return float(self.flat() @ self.flat())

    def is_finite(self):
        return bool(np.isfinite(self.flat()).all())


def check_layer_sizes(layer_sizes):
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise InvalidShape(f"Need at least input and output widths, got {sizes}")
    if any(s < 1 for s in sizes):
        raise InvalidShape(f"Layer widths must be >= 1, got {sizes}")
    if sizes[-1] != 1:
        raise InvalidShape(f"Output width must be 1, got {sizes[-1]}")
    return sizes


def init_params(layer_sizes, seed):
    """Glorot-uniform weights, zero biases."""
    sizes = check_layer_sizes(layer_sizes)
    rng = make_rng(seed, "init_params")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ScorerParams(tuple(weights), tuple(biases))


def _check_input(p, X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != p.input_width:
        raise ShapeMismatch(f"Scorer expects {p.input_width} features, got array of shape {X.shape}")
    return X


def forward_activations(p, X):
    """Activations of every layer, the input first and the (n, 1) scores last."""
    activations = [_check_input(p, X)]
    for w, b in zip(p.weights, p.biases):
        activations.append(np.tanh(activations[-1] @ w + b))
    return activations


def forward(p, X):
    return forward_activations(p, X)[-1][:, 0]


def backward(p, activations, dscores):
    """Flat gradient of sum_i dscores_i * s_i with respect to the parameters."""
    delta = np.asarray(dscores, dtype=float).reshape(-1, 1) * (1.0 - activations[-1] ** 2)
    grads = [None] * len(p.weights)
    for layer in reversed(range(len(p.weights))):
        inputs = activations[layer]
        grads[layer] = (inputs.T @ delta, delta.sum(axis=0))
        if layer:
            delta = (delta @ p.weights[layer].T) * (1.0 - inputs ** 2)
    return np.concatenate([part for gw, gb in grads for part in (gw.ravel(), gb)])
