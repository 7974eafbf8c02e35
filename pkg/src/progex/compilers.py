"""Compile familiar interpretable model families into programs.

Decision trees, linear models, rule lists, and rule sets all have a
direct rendering in the expression language; these compilers make the
translation mechanical and exactly semantics-preserving. Tree compilation
folds the two constant-leaf patterns (``if c: True else: False`` and its
negation) into the bare condition, which is what keeps compiled trees as
small as their diagrams.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Union

import numpy as np

from .exprs import (
    Add,
    And,
    BOOL,
    BoolAtom,
    BoolConst,
    Expr,
    IfThenElse,
    Mul,
    Not,
    Or,
    Predicate,
    RealAtom,
    RealConst,
    Sub,
    node_count,
    predict_batch,
    static_type,
    type_of,
)
from .schema import BOOLEAN, CATEGORICAL, NUMERIC, FeatureSchema, SchemaError, atom_name
from .search_space import guard_space, iter_trees
from .syntax import parse, pretty_print


class CompileError(ValueError):
    """A representation cannot be compiled against this schema."""


# -- representation types ---------------------------------------------------


@dataclass(frozen=True)
class TreeLeaf:
    label: bool


@dataclass(frozen=True)
class TreeSplit:
    """Internal node: an atomic boolean test, the test-true branch, and
    the test-false branch."""

    test: Expr  # BoolAtom or Predicate
    if_true: "DecisionTreeModel"
    if_false: "DecisionTreeModel"


DecisionTreeModel = Union[TreeLeaf, TreeSplit]


@dataclass
class LinearModel:
    """Per-feature weights plus a bias; predicts true on a positive score."""

    weights: dict[str, float]
    bias: float = 0.0


@dataclass(frozen=True)
class Rule:
    """A non-empty conjunction of boolean literals and its label."""

    literals: tuple[Expr, ...]
    label: bool

    def __post_init__(self):
        if not self.literals:
            raise CompileError("a rule needs at least one literal")


@dataclass(frozen=True)
class RuleList:
    rules: tuple[Rule, ...]
    default: bool


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]


# -- tree compilation ---------------------------------------------------------


def _ite(cond: Expr, if_true: Expr, if_false: Expr) -> Expr:
    if if_true == if_false:
        return if_true
    if if_true == BoolConst(True) and if_false == BoolConst(False):
        return cond
    if if_true == BoolConst(False) and if_false == BoolConst(True):
        return cond.operand if isinstance(cond, Not) else Not(cond)
    return IfThenElse(cond, if_true, if_false)


def compile_tree(tree: DecisionTreeModel, schema: FeatureSchema) -> Expr:
    """Boolean program that agrees with the tree on every instance."""

    def go(node):
        if isinstance(node, TreeLeaf):
            return BoolConst(bool(node.label))
        if isinstance(node, TreeSplit):
            if not isinstance(node.test, (BoolAtom, Predicate)):
                raise CompileError(f"tree test must be atomic, got {node.test!r}")
            return _ite(node.test, go(node.if_true), go(node.if_false))
        raise CompileError(f"not a tree node: {node!r}")

    expr = go(tree)
    try:
        type_of(expr, schema)
    except Exception as exc:
        raise CompileError(f"tree does not fit the schema: {exc}") from exc
    return expr


def compile_linear(model: LinearModel, schema: FeatureSchema) -> Expr:
    """Real-rooted weighted sum; zero-weight terms and a zero bias are
    omitted. Boolean features enter as 0/1 presence atoms."""

    def atom(name: str) -> Expr:
        kind = schema.feature(name).kind
        if kind == BOOLEAN:
            return BoolAtom(name)
        if kind == NUMERIC:
            return RealAtom(name)
        raise CompileError(
            f"linear models over categorical feature {name!r} are not supported"
        )

    unknown = [n for n in model.weights if n not in {f.name for f in schema.features}]
    if unknown:
        raise CompileError(f"weights reference unknown features {unknown}")

    expr: Expr | None = None
    for f in schema.features:
        w = float(model.weights.get(f.name, 0.0))
        if w == 0.0:
            continue
        magnitude = abs(w)
        term = atom(f.name) if magnitude == 1.0 else Mul(RealConst(magnitude), atom(f.name))
        if expr is None:
            # a leading negative term keeps its sign on the coefficient
            expr = term if w > 0 else Mul(RealConst(w), atom(f.name))
        else:
            expr = Add(expr, term) if w > 0 else Sub(expr, term)
    bias = float(model.bias)
    if expr is None:
        return RealConst(bias)
    if bias > 0:
        expr = Add(expr, RealConst(bias))
    elif bias < 0:
        expr = Sub(expr, RealConst(-bias))
    return expr


# -- boolean minimization ------------------------------------------------------


def all_instances_matrix(schema: FeatureSchema) -> np.ndarray:
    """Every assignment of an all-boolean schema, one row per instance."""
    for f in schema.features:
        if f.kind != BOOLEAN:
            raise CompileError("exhaustive semantics need an all-boolean schema")
    combos = itertools.product((0.0, 1.0), repeat=schema.arity)
    return np.array(list(combos), dtype=np.float64)


def simplify_binary(
    e: Expr, schema: FeatureSchema, max_nodes: int, cap: int = 1_000_000
) -> Expr:
    """Smallest boolean program predict-equivalent to ``e`` on every
    instance of an all-boolean schema, found by bounded enumeration.

    Returns ``e`` unchanged when nothing smaller exists within the
    budget. Among equally small matches the lexicographically smallest
    rendering wins.
    """
    if schema.arity > 12:
        raise CompileError("simplify_binary handles at most 12 boolean features")
    X = all_instances_matrix(schema)
    target = predict_batch(e, X, schema)

    budget = max_nodes
    if static_type(e) == BOOL:
        budget = min(budget, node_count(e) - 1)
    if budget < 1:
        return e
    guard_space(schema, budget, cap)

    matches: list[tuple[str, Expr]] = []
    current_size = 1
    for expr, size, vec in iter_trees(schema, budget, X):
        if size != current_size:
            if matches:
                break
            current_size = size
        if np.array_equal(vec, target):
            matches.append((pretty_print(expr), expr))
    if matches:
        return min(matches)[1]
    return e


# -- rule compilation -----------------------------------------------------------


def _conjunction(literals) -> Expr:
    out = literals[0]
    for lit in literals[1:]:
        out = And(out, lit)
    return out


def compile_rule_list(rules: RuleList, schema: FeatureSchema) -> Expr:
    """Right-nested conditional chain; the first matching rule wins and
    the default label is the innermost else."""
    expr: Expr = BoolConst(bool(rules.default))
    for rule in reversed(rules.rules):
        expr = IfThenElse(_conjunction(rule.literals), BoolConst(bool(rule.label)), expr)
    type_of(expr, schema)
    return expr


def compile_rule_set(rules: RuleSet, schema: FeatureSchema) -> Expr:
    """Disjunction of the rules' conjunctions: true iff any rule fires."""
    labels = {r.label for r in rules.rules}
    if False in labels:
        raise CompileError(
            "a rule set must carry only positive rules; binarize the labels first"
        )
    if not rules.rules:
        return BoolConst(False)
    expr = _conjunction(rules.rules[0].literals)
    for rule in rules.rules[1:]:
        expr = Or(expr, _conjunction(rule.literals))
    type_of(expr, schema)
    return expr


# -- file formats -----------------------------------------------------------------
#
# tree:   {"feature": name, ["comparator": "<="|">", "threshold": x]
#          ["level": name], "true": <node>, "false": <node>} | {"label": bool}
# linear: {"weights": {name: w, ...}, "bias": b}
# rules:  {"rules": [{"if": [<literal text>, ...], "then": <label>}, ...]
#          [, "default": <label>]}    -- a "default" key makes it a list


def tree_from_json_obj(obj, schema: FeatureSchema) -> DecisionTreeModel:
    if not isinstance(obj, dict):
        raise CompileError(f"tree node must be an object, got {obj!r}")
    if "label" in obj:
        return TreeLeaf(bool(obj["label"]))
    try:
        name = obj["feature"]
        lo = obj["false"]
        hi = obj["true"]
    except KeyError as exc:
        raise CompileError(f"tree node missing key {exc}") from None
    kind = schema.feature(name).kind
    if "threshold" in obj:
        test: Expr = Predicate(name, obj.get("comparator", "<="), float(obj["threshold"]))
    elif "level" in obj:
        test = BoolAtom(atom_name(name, obj["level"]))
    elif kind == BOOLEAN:
        test = BoolAtom(name)
    else:
        raise CompileError(f"split on {name!r} needs a threshold or level")
    return TreeSplit(test, tree_from_json_obj(hi, schema), tree_from_json_obj(lo, schema))


def load_tree_file(path, schema: FeatureSchema) -> DecisionTreeModel:
    with open(path, "r", encoding="utf-8") as fh:
        return tree_from_json_obj(json.load(fh), schema)


def load_linear_file(path) -> LinearModel:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    try:
        weights = {str(k): float(v) for k, v in obj["weights"].items()}
    except (TypeError, KeyError, AttributeError):
        raise CompileError("linear file needs a 'weights' object") from None
    return LinearModel(weights, float(obj.get("bias", 0.0)))


def _rule_label(raw, positive_label):
    if isinstance(raw, bool):
        return raw
    if positive_label is None:
        raise CompileError(
            f"rule label {raw!r} is not boolean; pass a positive class to binarize"
        )
    return str(raw) == str(positive_label)


def load_rules_file(
    path, schema: FeatureSchema, positive_label=None
) -> RuleList | RuleSet:
    """Parse a rule file; multiclass labels binarize one-vs-rest against
    ``positive_label``. For rule sets, non-positive rules are dropped."""
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    try:
        raw_rules = obj["rules"]
    except (TypeError, KeyError):
        raise CompileError("rule file needs a 'rules' array") from None
    rules = []
    for row in raw_rules:
        literals = tuple(parse(text, schema) for text in row["if"])
        for lit in literals:
            if static_type(lit) != BOOL:
                raise CompileError(f"rule literal {pretty_print(lit)!r} is not boolean")
        rules.append(Rule(literals, _rule_label(row["then"], positive_label)))
    if "default" in obj:
        return RuleList(tuple(rules), _rule_label(obj["default"], positive_label))
    if positive_label is not None:
        rules = [r for r in rules if r.label]
    return RuleSet(tuple(rules))
