"""Model loading: JSON model files and pickled predictors.

The JSON formats (tree / forest / logistic) are re-implemented here from
their file schema alone, so a served model is a genuinely independent
prediction path from whatever produced the file. Pickled objects are
served through their ``predict_proba`` / ``predict`` methods.

Scores are mapped to labels with a configurable probability threshold;
hard 0/1 outputs pass through unchanged.
"""

from __future__ import annotations

import json
import pickle
from pathlib import Path

import numpy as np


class ModelLoadError(Exception):
    """The model file cannot be loaded or has an unknown layout."""


class ServedModel:
    """A predictor plus the arity it advertises in the handshake."""

    def __init__(self, scorer, arity: int, threshold: float, hard: bool):
        self._scorer = scorer
        self.arity = int(arity)
        self.threshold = float(threshold)
        self._hard = hard

    def predict_labels(self, X: np.ndarray) -> list[int]:
        out = np.asarray(self._scorer(X))
        if out.ndim != 1 or len(out) != len(X):
            raise ModelLoadError("predictor returned a misshaped result")
        if self._hard:
            return [int(bool(v)) for v in out]
        return [int(v > self.threshold) for v in out]


# -- JSON tree / forest -----------------------------------------------------


def _walk_tree(node: dict, row: np.ndarray) -> bool:
    while "label" not in node:
        branch = "low" if row[int(node["feature"])] <= float(node["threshold"]) else "high"
        node = node[branch]
    return bool(node["label"])


def _tree_scorer(obj: dict):
    root = obj["root"]

    def score(X):
        return np.array([_walk_tree(root, row) for row in X], dtype=float)

    return score


def _forest_scorer(obj: dict):
    roots = [t["root"] for t in obj["trees"]]

    def score(X):
        votes = np.zeros(len(X), dtype=float)
        for root in roots:
            votes += [_walk_tree(root, row) for row in X]
        return votes / len(roots)

    return score


# -- JSON logistic -------------------------------------------------------------


def _logistic_scorer(obj: dict):
    encoders = [tuple(e) for e in obj["encoders"]]
    weights = np.asarray(obj["weights"], dtype=float)
    bias = float(obj["bias"])

    def score(X):
        cols = []
        for i, enc in enumerate(encoders):
            col = X[:, i]
            if enc[0] == "id":
                cols.append(col)
            elif enc[0] == "onehot":
                for li in range(int(enc[1])):
                    cols.append((col == li).astype(float))
            elif enc[0] == "scale":
                cols.append((col - float(enc[1])) / float(enc[2]))
            else:
                raise ModelLoadError(f"unknown encoder {enc[0]!r}")
        z = np.column_stack(cols) @ weights + bias
        return 1.0 / (1.0 + np.exp(-z))

    return score


def _load_json(path: Path, threshold: float) -> ServedModel:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    kind = obj.get("kind")
    arity = obj.get("schema_arity")
    if arity is None:
        raise ModelLoadError(f"{path} carries no schema_arity")
    if kind == "tree":
        return ServedModel(_tree_scorer(obj), arity, threshold, hard=True)
    if kind == "forest":
        return ServedModel(_forest_scorer(obj), arity, threshold, hard=False)
    if kind == "logistic":
        return ServedModel(_logistic_scorer(obj), arity, threshold, hard=False)
    raise ModelLoadError(f"unknown model kind {kind!r} in {path}")


# -- pickled predictors -----------------------------------------------------------


def _load_pickle(path: Path, threshold: float, arity: int | None) -> ServedModel:
    with open(path, "rb") as fh:
        predictor = pickle.load(fh)
    if arity is None:
        arity = getattr(predictor, "n_features_in_", None)
        if arity is None:
            raise ModelLoadError(
                "pickled model does not expose n_features_in_; pass --arity"
            )
    if hasattr(predictor, "predict_proba"):

        def score(X):
            probs = np.asarray(predictor.predict_proba(X))
            return probs[:, -1] if probs.ndim == 2 else probs

        return ServedModel(score, arity, threshold, hard=False)
    if hasattr(predictor, "predict"):
        return ServedModel(
            lambda X: np.asarray(predictor.predict(X), dtype=float),
            arity,
            threshold,
            hard=True,
        )
    raise ModelLoadError("pickled object has neither predict_proba nor predict")


def load_served_model(path, threshold: float = 0.5, arity: int | None = None) -> ServedModel:
    path = Path(path)
    if not path.exists():
        raise ModelLoadError(f"model file {path} does not exist")
    if path.suffix in (".pkl", ".pickle"):
        return _load_pickle(path, threshold, arity)
    return _load_json(path, threshold)
