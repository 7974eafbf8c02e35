"""Fidelity losses over (labels, predictions, weights) triples.

The default objective is the negative weighted F1 score of the positive
class, computed from weighted confusion masses. Losses are pluggable by
name; each carries the best value it can attain so the search can stop
once nothing better exists.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exprs import Expr, predict_batch
from .perturb import PerturbationBatch


class LossError(ValueError):
    """Bad inputs to a loss computation."""


def _checked(labels, predictions, weights):
    labels = np.asarray(labels, dtype=bool)
    predictions = np.asarray(predictions, dtype=bool)
    weights = np.asarray(weights, dtype=np.float64)
    if not (labels.shape == predictions.shape == weights.shape) or labels.ndim != 1:
        raise LossError("labels, predictions, and weights must be equal-length vectors")
    if labels.size == 0:
        raise LossError("empty inputs")
    if np.any(weights < 0):
        raise LossError("weights must be non-negative")
    if not np.any(weights > 0):
        raise LossError("weights must not all be zero")
    return labels, predictions, weights


def weighted_f1(labels, predictions, weights) -> float:
    """Weighted F1 of the positive class, in [0, 1].

    Confusion masses are weight sums; degenerate cases follow the usual
    conventions (precision/recall default to 0 on empty denominators),
    except that the score is 1 when there are no positive labels and no
    positive predictions at all — perfect vacuous agreement.
    """
    labels, predictions, weights = _checked(labels, predictions, weights)
    if not labels.any() and not predictions.any():
        return 1.0
    pred_f = predictions.astype(np.float64)
    wl = weights * labels
    tp = float(np.dot(wl, pred_f))
    fp = float(np.dot(weights * ~labels, pred_f))
    fn = float(np.dot(wl, 1.0 - pred_f))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def weighted_01(labels, predictions, weights) -> float:
    """Weight-normalized disagreement rate, in [0, 1]."""
    labels, predictions, weights = _checked(labels, predictions, weights)
    return float(np.dot(weights, (labels != predictions).astype(np.float64)) / weights.sum())


@dataclass(frozen=True)
class LossFunction:
    """Named, pure loss; lower is better; ``optimum`` is its best value."""

    name: str
    fn: Callable[[np.ndarray, np.ndarray, np.ndarray], float]
    optimum: float


NEG_WEIGHTED_F1 = LossFunction(
    "weighted-f1", lambda l, p, w: -weighted_f1(l, p, w), optimum=-1.0
)
WEIGHTED_01 = LossFunction("weighted-01", weighted_01, optimum=0.0)

LOSSES = {f.name: f for f in (NEG_WEIGHTED_F1, WEIGHTED_01)}


def get_loss(name: str) -> LossFunction:
    try:
        return LOSSES[name]
    except KeyError:
        raise LossError(f"unknown loss {name!r}; choose from {sorted(LOSSES)}") from None


def loss_of(batch: PerturbationBatch, program: Expr, loss: LossFunction = NEG_WEIGHTED_F1) -> float:
    """Loss of a program's predictions against the batch's cached labels.

    Labels are oriented to the anchor's predicted class first, so the
    program is always scored as a detector of that class.
    """
    preds = predict_batch(program, batch.X, batch.schema)
    return float(loss.fn(batch.effective_labels, preds, batch.weights))


def fidelity_score(batch: PerturbationBatch, program: Expr) -> float:
    """Weighted F1 of the program on the batch (the reported metric,
    independent of which loss drove the search)."""
    preds = predict_batch(program, batch.X, batch.schema)
    return weighted_f1(batch.effective_labels, preds, batch.weights)
