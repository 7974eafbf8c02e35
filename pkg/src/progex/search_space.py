"""Bounded enumeration of boolean program trees, smallest first.

Trees are built over the schema's atoms, both boolean constants, and one
predicate per (numeric feature, comparator, pool threshold). ``and``/``or``
are enumerated modulo argument order. Alongside each tree the enumerator
carries its prediction vector over a fixed row matrix, composed from the
children's vectors, which keeps exhaustive scoring cheap.
"""

from __future__ import annotations

import numpy as np

from .exprs import (
    And,
    BoolAtom,
    BoolConst,
    COMPARATORS,
    Expr,
    IfThenElse,
    Not,
    Or,
    Predicate,
    evaluate_batch,
)
from .schema import FeatureSchema


class SearchSpaceError(ValueError):
    """The requested enumeration exceeds the configured cap."""


def leaf_exprs(schema: FeatureSchema) -> list[Expr]:
    """All size-1 trees in canonical order: constants, atoms, predicates."""
    out: list[Expr] = [BoolConst(False), BoolConst(True)]
    out.extend(BoolAtom(a) for a in schema.bool_atoms)
    for f in schema.numeric_features:
        pool = schema.threshold_pool(f)
        for cmp in COMPARATORS:
            out.extend(Predicate(f, cmp, t) for t in pool)
    return out


def count_trees(schema: FeatureSchema, max_nodes: int) -> int:
    """Size of the enumeration space up to max_nodes, matching iter_trees."""
    leaves = len(leaf_exprs(schema))
    c = [0, leaves]
    for s in range(2, max_nodes + 1):
        total = c[s - 1]  # not
        pairs = 0
        for i in range(1, s - 1):
            j = s - 1 - i
            if j < i:
                break
            pairs += c[i] * (c[i] + 1) // 2 if i == j else c[i] * c[j]
        total += 2 * pairs  # and, or
        triples = 0
        for i in range(1, s - 2):
            for j in range(1, s - 1 - i):
                k = s - 1 - i - j
                if k >= 1:
                    triples += c[i] * c[j] * c[k]
        total += triples  # if-then-else
        c.append(total)
    return sum(c[1 : max_nodes + 1])


def iter_trees(schema: FeatureSchema, max_nodes: int, X: np.ndarray):
    """Yield (expr, size, prediction vector over X's rows), sizes ascending.

    Trees of the top size are streamed without being stored; smaller sizes
    are kept as building blocks, so memory is proportional to the number
    of trees strictly below max_nodes times the row count.
    """
    X = np.asarray(X, dtype=np.float64)
    by_size: list[list[tuple[Expr, np.ndarray]]] = [[]]

    for s in range(1, max_nodes + 1):
        store = s < max_nodes
        bucket: list[tuple[Expr, np.ndarray]] = []

        def emit(expr, vec):
            if store:
                bucket.append((expr, vec))
            return expr, s, vec

        if s == 1:
            for e in leaf_exprs(schema):
                yield emit(e, evaluate_batch(e, X, schema))
        else:
            for e, v in by_size[s - 1]:
                yield emit(Not(e), ~v)
            for i in range(1, s - 1):
                j = s - 1 - i
                if j < i:
                    break
                left = by_size[i]
                right = by_size[j]
                if i == j:
                    for ai, (ea, va) in enumerate(left):
                        for eb, vb in left[ai:]:
                            yield emit(And(ea, eb), va & vb)
                            yield emit(Or(ea, eb), va | vb)
                else:
                    for ea, va in left:
                        for eb, vb in right:
                            yield emit(And(ea, eb), va & vb)
                            yield emit(Or(ea, eb), va | vb)
            for i in range(1, s - 2):
                for j in range(1, s - 1 - i):
                    k = s - 1 - i - j
                    if k < 1:
                        continue
                    for ec, vc in by_size[i]:
                        for et, vt in by_size[j]:
                            for eo, vo in by_size[k]:
                                yield emit(IfThenElse(ec, et, eo), np.where(vc, vt, vo))
        by_size.append(bucket)


def guard_space(schema: FeatureSchema, max_nodes: int, cap: int) -> int:
    """Count the space and fail fast when it exceeds the cap."""
    n = count_trees(schema, max_nodes)
    if n > cap:
        raise SearchSpaceError(
            f"search space has {n} trees, above the cap of {cap}"
        )
    return n
