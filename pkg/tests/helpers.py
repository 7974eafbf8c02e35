"""Shared test utilities: independent oracles and random generators.

Everything here is deliberately written without reusing the library's own
search or enumeration machinery, so tests cross-check rather than echo.
"""

import itertools

import numpy as np

from progex import (
    And,
    BoolAtom,
    BoolConst,
    FeatureSchema,
    IfThenElse,
    Instance,
    Not,
    Or,
    Predicate,
    evaluate,
    predict,
    predict_batch,
)


def all_bool_instances(schema: FeatureSchema):
    """Every instance of an all-boolean schema."""
    return [
        Instance(schema, combo)
        for combo in itertools.product((0.0, 1.0), repeat=schema.arity)
    ]


def all_bool_matrix(schema: FeatureSchema) -> np.ndarray:
    return np.array(
        list(itertools.product((0.0, 1.0), repeat=schema.arity)), dtype=np.float64
    )


def semantically_equal(a, b, schema: FeatureSchema) -> bool:
    """Exhaustive predict-agreement over an all-boolean schema."""
    X = all_bool_matrix(schema)
    return bool(np.array_equal(predict_batch(a, X, schema), predict_batch(b, X, schema)))


def random_bool_tree(rng, schema: FeatureSchema, max_nodes: int):
    """Random well-typed boolean tree, independent of the library's
    proposal machinery. Sizes are approximate but never exceed max_nodes."""
    atoms = list(schema.bool_atoms)
    preds = [
        (f, cmp, t)
        for f in schema.numeric_features
        for cmp in ("<=", ">")
        for t in schema.threshold_pool(f)
    ]

    def leaf():
        roll = rng.random()
        if atoms and roll < 0.7:
            return BoolAtom(atoms[rng.integers(len(atoms))])
        if preds and roll < 0.9:
            f, cmp, t = preds[rng.integers(len(preds))]
            return Predicate(f, cmp, t)
        return BoolConst(bool(rng.integers(2)))

    def grow(budget):
        if budget < 2:
            return leaf()
        op = rng.integers(4)
        if op == 0:
            return Not(grow(budget - 1))
        if op == 3 and budget >= 4:
            rest = budget - 1
            a = grow(rest - 2)
            b = grow(rest - 2)
            c = grow(rest - 2)
            return IfThenElse(a, b, c)
        ctor = And if op == 1 else Or
        left = grow((budget - 1) // 2)
        right = grow(budget - 1 - (budget - 1) // 2)
        return ctor(left, right)

    return grow(max_nodes)


class FixedModel:
    """Black box wrapping a program (the planted ground truth)."""

    kind = "fixed"

    def __init__(self, expr, schema):
        self.expr = expr
        self.schema = schema

    def predict_batch(self, X):
        return predict_batch(self.expr, X, self.schema)


class CountingModel:
    """Counts queries; answers with a constant."""

    kind = "counting"

    def __init__(self, value=False):
        self.value = value
        self.calls = 0
        self.rows_seen = 0

    def predict_batch(self, X):
        self.calls += 1
        self.rows_seen += len(X)
        return np.full(len(X), self.value, dtype=bool)
