from dataclasses import dataclass, field

import numpy as np

from core.exceptions import NonFinite
from .scorer import ScorerParams, backward, forward_activations


@dataclass(frozen=True)
class Evaluation:
    value: float
    grad: np.ndarray
    info: dict = field(default_factory=dict)


class ScoreObjective:
    """A scalar objective of the scores s = f(X | theta), maximized by training.

    Subclasses implement `evaluate_scores`, returning the value, its gradient
    with respect to the scores, and a dict of diagnostics for the trace. The
    base class chains that gradient through the network and applies the
    optional L2 penalty -reg * ||theta||^2.
    """

    def __init__(self, X, reg=0.0):
        self.X = np.asarray(X, dtype=float)
        self.reg = float(reg)

    def evaluate_scores(self, scores):
        raise NotImplementedError

    def evaluate(self, params):
        activations = forward_activations(params, self.X)
        value, dscores, info = self.evaluate_scores(activations[-1][:, 0])
        theta = params.flat()
        grad = backward(params, activations, dscores)
        if self.reg:
            value = value - self.reg * params.squared_norm()
            grad = grad - 2.0 * self.reg * theta
        return Evaluation(float(value), grad, info)

    def value(self, params):
        return self.evaluate(params).value

    def flat_value(self, layer_sizes):
        """`theta -> value` on flat vectors, for finite-difference checks."""
        return lambda theta: self.value(ScorerParams.from_flat(layer_sizes, theta))


def check_finite(evaluation):
    if not np.isfinite(evaluation.value):
        raise NonFinite(f"Objective evaluated to {evaluation.value}")
    if not np.isfinite(evaluation.grad).all():
        raise NonFinite("Objective gradient contains NaN or Inf")
    return evaluation


def gradient(objective, p):
    """Analytic gradient of `objective` at `p`, shaped like `p`."""
    evaluation = check_finite(objective.evaluate(p))
    return ScorerParams.from_flat(p.layer_sizes, evaluation.grad)
