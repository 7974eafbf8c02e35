"""Typed expression trees: the explanation language.

Node kinds and their static types:

    BoolConst(v)               bool
    BoolAtom(feature)          bool   feature flag or categorical presence bit
    Not / And / Or             bool   strictly boolean children
    RealConst(v)               real
    RealAtom(feature)          real   numeric feature
    Add / Sub / Mul            real   children real, or a BoolAtom used as 0/1
    Predicate(f, cmp, thr)     bool   one atomic numeric test; cmp in {<=, >}
    IfThenElse(cond, a, b)     the shared type of its two branches

A Predicate counts as a single node; every other operator and leaf counts
as one node as well. Trees are immutable and hashable, and equality is
structural (no normalization of commutative operators).

The only implicit coercion is a bare BoolAtom inside Add/Sub/Mul, where a
feature flag reads as 0/1 (so a weighted sum over binary features is a
legal program). Boolean compounds and BoolConst do not coerce.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .schema import BOOLEAN, NUMERIC, FeatureSchema, Instance, SchemaError

BOOL = "bool"
REAL = "real"
COMPARATORS = ("<=", ">")


class ExprError(Exception):
    """Base class for expression-language errors."""


class ExprTypeError(ExprError):
    """A tree violates the typing rules; carries the offending subtree."""

    def __init__(self, message, subtree=None):
        super().__init__(message)
        self.subtree = subtree


@dataclass(frozen=True, slots=True)
class BoolConst:
    value: bool


@dataclass(frozen=True, slots=True)
class BoolAtom:
    feature: str


@dataclass(frozen=True, slots=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True, slots=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class Or:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class RealConst:
    value: float


@dataclass(frozen=True, slots=True)
class RealAtom:
    feature: str


@dataclass(frozen=True, slots=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class Predicate:
    feature: str
    comparator: str
    threshold: float


@dataclass(frozen=True, slots=True)
class IfThenElse:
    cond: "Expr"
    then: "Expr"
    other: "Expr"


Expr = Union[
    BoolConst,
    BoolAtom,
    Not,
    And,
    Or,
    RealConst,
    RealAtom,
    Add,
    Sub,
    Mul,
    Predicate,
    IfThenElse,
]

_BINARY_BOOL = (And, Or)
_BINARY_REAL = (Add, Sub, Mul)

_BOOL_ROOTED = (BoolConst, BoolAtom, Not, And, Or, Predicate)
_REAL_ROOTED = (RealConst, RealAtom, Add, Sub, Mul)


def children(e: Expr) -> tuple:
    """Direct children of a node (empty for leaves)."""
    if isinstance(e, Not):
        return (e.operand,)
    if isinstance(e, (And, Or, Add, Sub, Mul)):
        return (e.left, e.right)
    if isinstance(e, IfThenElse):
        return (e.cond, e.then, e.other)
    return ()


def node_count(e: Expr) -> int:
    """Number of nodes, counting a Predicate as one atomic leaf."""
    total = 0
    stack = [e]
    while stack:
        n = stack.pop()
        total += 1
        stack.extend(children(n))
    return total


def static_type(e: Expr) -> str:
    """Structural type of a tree, assuming it is well-typed."""
    while isinstance(e, IfThenElse):
        e = e.then
    return BOOL if isinstance(e, _BOOL_ROOTED) else REAL


def type_of(e: Expr, schema: FeatureSchema) -> str:
    """Check the tree against the typing rules; returns BOOL or REAL.

    Raises ExprTypeError on a type mismatch, an unknown feature id, or a
    feature-kind mismatch; the error carries the offending subtree.
    """
    if isinstance(e, BoolConst):
        if not isinstance(e.value, bool):
            raise ExprTypeError(f"BoolConst value must be a bool, got {e.value!r}", e)
        return BOOL
    if isinstance(e, BoolAtom):
        if not schema.has_atom(e.feature):
            raise ExprTypeError(f"unknown boolean atom {e.feature!r}", e)
        return BOOL
    if isinstance(e, Not):
        if type_of(e.operand, schema) != BOOL:
            raise ExprTypeError("'not' needs a boolean operand", e)
        return BOOL
    if isinstance(e, _BINARY_BOOL):
        op = "and" if isinstance(e, And) else "or"
        for side in (e.left, e.right):
            if type_of(side, schema) != BOOL:
                raise ExprTypeError(f"{op!r} needs boolean operands", e)
        return BOOL
    if isinstance(e, RealConst):
        return REAL
    if isinstance(e, RealAtom):
        try:
            kind = schema.feature(e.feature).kind
        except SchemaError:
            raise ExprTypeError(f"unknown feature {e.feature!r}", e) from None
        if kind != NUMERIC:
            raise ExprTypeError(f"{e.feature!r} is not a numeric feature", e)
        return REAL
    if isinstance(e, _BINARY_REAL):
        for side in (e.left, e.right):
            # presence atoms read as 0/1 here; anything else must be real
            if isinstance(side, BoolAtom):
                type_of(side, schema)
            elif type_of(side, schema) != REAL:
                raise ExprTypeError("arithmetic needs real operands", e)
        return REAL
    if isinstance(e, Predicate):
        if e.comparator not in COMPARATORS:
            raise ExprTypeError(f"bad comparator {e.comparator!r}", e)
        try:
            kind = schema.feature(e.feature).kind
        except SchemaError:
            raise ExprTypeError(f"unknown feature {e.feature!r}", e) from None
        if kind != NUMERIC:
            raise ExprTypeError(
                f"predicate over non-numeric feature {e.feature!r}", e
            )
        return BOOL
    if isinstance(e, IfThenElse):
        if type_of(e.cond, schema) != BOOL:
            raise ExprTypeError("condition must be boolean", e)
        t1 = type_of(e.then, schema)
        t2 = type_of(e.other, schema)
        if t1 != t2:
            raise ExprTypeError("branches of if-then-else must share one type", e)
        return t1
    raise ExprTypeError(f"not an expression node: {e!r}", e)


# -- evaluation ----------------------------------------------------------


def evaluate(e: Expr, x: Instance):
    """Evaluate a well-typed tree on one instance (bool or float result)."""
    if isinstance(e, BoolConst):
        return e.value
    if isinstance(e, BoolAtom):
        i, level = x.schema.atom_ref(e.feature)
        v = x.values[i]
        return v == level if level is not None else v != 0.0
    if isinstance(e, Not):
        return not evaluate(e.operand, x)
    if isinstance(e, And):
        return evaluate(e.left, x) and evaluate(e.right, x)
    if isinstance(e, Or):
        return evaluate(e.left, x) or evaluate(e.right, x)
    if isinstance(e, RealConst):
        return e.value
    if isinstance(e, RealAtom):
        return x.values[x.schema.index(e.feature)]
    if isinstance(e, Add):
        return float(evaluate(e.left, x)) + float(evaluate(e.right, x))
    if isinstance(e, Sub):
        return float(evaluate(e.left, x)) - float(evaluate(e.right, x))
    if isinstance(e, Mul):
        return float(evaluate(e.left, x)) * float(evaluate(e.right, x))
    if isinstance(e, Predicate):
        v = x.values[x.schema.index(e.feature)]
        return v <= e.threshold if e.comparator == "<=" else v > e.threshold
    if isinstance(e, IfThenElse):
        return evaluate(e.then if evaluate(e.cond, x) else e.other, x)
    raise ExprError(f"not an expression node: {e!r}")


def predict(e: Expr, x: Instance) -> bool:
    """Boolean prediction: a boolean root evaluates directly, a real root
    predicts true on a positive score."""
    v = evaluate(e, x)
    if static_type(e) == BOOL:
        return bool(v)
    return v > 0


# -- vectorized evaluation over a sample matrix ----------------------------
#
# X is an (n, arity) float matrix of raw feature slots; the result is a
# length-n bool or float vector. Dispatch by node type keeps the annealing
# loop cheap.


def _vb(e, X, schema):
    return _BATCH[type(e)](e, X, schema)


def _vreal(e, X, schema):
    v = _vb(e, X, schema)
    return v.astype(np.float64) if v.dtype == np.bool_ else v


def _b_const(e, X, schema):
    return np.full(X.shape[0], e.value, dtype=bool)


def _b_atom(e, X, schema):
    i, level = schema.atom_ref(e.feature)
    col = X[:, i]
    return col == level if level is not None else col != 0.0


def _b_not(e, X, schema):
    return ~_vb(e.operand, X, schema)


def _b_and(e, X, schema):
    return _vb(e.left, X, schema) & _vb(e.right, X, schema)


def _b_or(e, X, schema):
    return _vb(e.left, X, schema) | _vb(e.right, X, schema)


def _b_rconst(e, X, schema):
    return np.full(X.shape[0], e.value, dtype=np.float64)


def _b_ratom(e, X, schema):
    return X[:, schema.index(e.feature)]


def _b_add(e, X, schema):
    return _vreal(e.left, X, schema) + _vreal(e.right, X, schema)


def _b_sub(e, X, schema):
    return _vreal(e.left, X, schema) - _vreal(e.right, X, schema)


def _b_mul(e, X, schema):
    return _vreal(e.left, X, schema) * _vreal(e.right, X, schema)


def _b_pred(e, X, schema):
    col = X[:, schema.index(e.feature)]
    return col <= e.threshold if e.comparator == "<=" else col > e.threshold


def _b_ite(e, X, schema):
    return np.where(
        _vb(e.cond, X, schema), _vb(e.then, X, schema), _vb(e.other, X, schema)
    )


_BATCH = {
    BoolConst: _b_const,
    BoolAtom: _b_atom,
    Not: _b_not,
    And: _b_and,
    Or: _b_or,
    RealConst: _b_rconst,
    RealAtom: _b_ratom,
    Add: _b_add,
    Sub: _b_sub,
    Mul: _b_mul,
    Predicate: _b_pred,
    IfThenElse: _b_ite,
}


def evaluate_batch(e: Expr, X: np.ndarray, schema: FeatureSchema) -> np.ndarray:
    """Evaluate a well-typed tree over every row of X at once."""
    return _vb(e, np.asarray(X, dtype=np.float64), schema)


def predict_batch(e: Expr, X: np.ndarray, schema: FeatureSchema) -> np.ndarray:
    """Vectorized predict(): bool vector over the rows of X."""
    v = evaluate_batch(e, X, schema)
    if v.dtype == np.bool_:
        return v
    return v > 0
