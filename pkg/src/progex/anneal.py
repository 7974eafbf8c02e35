"""Simulated annealing over expression trees.

The search minimizes loss + size gate: a candidate above the node budget
is rejected before its loss is ever computed (equivalently, its energy is
infinite). Proposals grow, shrink, or replace one node of the current
tree and always preserve typing by construction. The temperature follows
T_k = T0 / ln(k + e), chains restart from independent sub-seeded streams,
and the best state ever visited is returned, with ties broken toward
fewer nodes and then the lexicographically smaller rendering.

``exhaustive_search`` enumerates the whole bounded space instead and is
the verification oracle for the annealer on small problems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exprs import (
    Add,
    And,
    BOOL,
    BoolAtom,
    BoolConst,
    COMPARATORS,
    Expr,
    IfThenElse,
    Mul,
    Not,
    Or,
    Predicate,
    REAL,
    RealAtom,
    RealConst,
    Sub,
    node_count,
    predict_batch,
    static_type,
)
from .loss import LossFunction, get_loss, weighted_f1
from .perturb import PerturbationBatch
from .schema import FeatureSchema
from .search_space import guard_space, iter_trees
from .syntax import pretty_print


class InducerError(ValueError):
    """Bad inducer configuration or inputs."""


@dataclass(frozen=True)
class InducerConfig:
    """Search knobs. The defaults keep programs strictly below 8 nodes."""

    max_nodes: int = 7
    iterations: int = 50_000
    initial_temperature: float = 1.0
    restarts: int = 8
    seed: int = 0
    proposal_mix: tuple[float, float, float] = (0.35, 0.35, 0.30)
    arithmetic: bool = False
    loss: str = "weighted-f1"

    def __post_init__(self):
        if self.max_nodes < 1:
            raise InducerError("max_nodes must be at least 1")
        if self.iterations < 1:
            raise InducerError("iterations must be at least 1")
        if self.restarts < 1:
            raise InducerError("restarts must be at least 1")
        if self.initial_temperature <= 0:
            raise InducerError("initial temperature must be positive")
        mix = self.proposal_mix
        if len(mix) != 3 or any(p < 0 for p in mix) or abs(sum(mix) - 1.0) > 1e-9:
            raise InducerError("proposal_mix must be three probabilities summing to 1")


@dataclass(frozen=True)
class ChainTrace:
    """Best-energy trace of one chain: (step, best energy) checkpoints."""

    chain_id: int
    iterations_used: int
    best_energy: float
    trace: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class ExplanationResult:
    """The induced program plus enough provenance to reproduce it."""

    program: Expr
    score: float
    energy: float
    node_count: int
    chain_id: int
    seed: int | None
    iterations_used: int
    chains: tuple[ChainTrace, ...] = field(default=())


# -- proposal grammar -------------------------------------------------------

_SLOT_BOOL = "bool"        # strictly boolean
_SLOT_REAL = "real"        # strictly real (if-branch siblings must match)
_SLOT_MIXED = "mixed"      # arithmetic operand: real or a bare BoolAtom
_SLOT_ROOT = "root"        # the root slot; any type when arithmetic is on


class ProposalGrammar:
    """Leaf pools and operator tables for one schema."""

    def __init__(self, schema: FeatureSchema, arithmetic: bool = False):
        self.schema = schema
        self.arithmetic = arithmetic
        self.atoms = schema.bool_atoms
        self.pred_features = tuple(
            f for f in schema.numeric_features if schema.threshold_pool(f)
        )
        # leaf-kind mix: atoms and predicates carry most of the mass
        kinds = []
        if self.atoms:
            kinds.append(("atom", 0.45))
        if self.pred_features:
            kinds.append(("pred", 0.45))
        kinds.append(("const", 0.10))
        total = sum(w for _, w in kinds)
        self._bool_kinds = [(k, w / total) for k, w in kinds]
        self.real_consts: tuple[float, ...] = ()
        self.real_atoms: tuple[str, ...] = ()
        if arithmetic:
            consts = sorted(
                {0.0, 1.0}
                | {t for f in self.pred_features for t in schema.threshold_pool(f)}
            )
            self.real_consts = tuple(consts)
            self.real_atoms = tuple(schema.numeric_features)

    def bool_leaf(self, rng) -> Expr:
        u = rng.random()
        acc = 0.0
        kind = self._bool_kinds[-1][0]
        for k, w in self._bool_kinds:
            acc += w
            if u < acc:
                kind = k
                break
        if kind == "atom":
            return BoolAtom(self.atoms[rng.integers(len(self.atoms))])
        if kind == "pred":
            f = self.pred_features[rng.integers(len(self.pred_features))]
            cmp = COMPARATORS[rng.integers(2)]
            pool = self.schema.threshold_pool(f)
            return Predicate(f, cmp, pool[rng.integers(len(pool))])
        return BoolConst(bool(rng.integers(2)))

    def real_leaf(self, rng, allow_bool_atom: bool) -> Expr | None:
        options = []
        if self.real_atoms:
            options.append("ratom")
        if self.real_consts:
            options.append("const")
        if allow_bool_atom and self.atoms:
            options.append("batom")
        if not options:
            return None
        pick = options[rng.integers(len(options))]
        if pick == "ratom":
            return RealAtom(self.real_atoms[rng.integers(len(self.real_atoms))])
        if pick == "const":
            return RealConst(self.real_consts[rng.integers(len(self.real_consts))])
        return BoolAtom(self.atoms[rng.integers(len(self.atoms))])

    def leaf_for_slot(self, rng, slot: str) -> Expr | None:
        if slot == _SLOT_ROOT:
            # with arithmetic on, the root may sit in either family
            if self.arithmetic and rng.integers(2) == 1:
                return self.real_leaf(rng, allow_bool_atom=False) or self.bool_leaf(rng)
            return self.bool_leaf(rng)
        if slot == _SLOT_BOOL:
            return self.bool_leaf(rng)
        return self.real_leaf(rng, allow_bool_atom=slot == _SLOT_MIXED)


def _positions(e: Expr) -> list[tuple[tuple, Expr, str]]:
    """Preorder (path, node, slot) triples; paths are attribute tuples."""
    out = []
    stack = [((), e, _SLOT_ROOT)]
    while stack:
        path, node, slot = stack.pop()
        out.append((path, node, slot))
        t = type(node)
        if t is Not:
            stack.append((path + ("operand",), node.operand, _SLOT_BOOL))
        elif t in (And, Or):
            stack.append((path + ("right",), node.right, _SLOT_BOOL))
            stack.append((path + ("left",), node.left, _SLOT_BOOL))
        elif t in (Add, Sub, Mul):
            stack.append((path + ("right",), node.right, _SLOT_MIXED))
            stack.append((path + ("left",), node.left, _SLOT_MIXED))
        elif t is IfThenElse:
            branch = _SLOT_BOOL if static_type(node.then) == BOOL else _SLOT_REAL
            stack.append((path + ("other",), node.other, branch))
            stack.append((path + ("then",), node.then, branch))
            stack.append((path + ("cond",), node.cond, _SLOT_BOOL))
    return out


_CTORS = {
    Not: ("operand",),
    And: ("left", "right"),
    Or: ("left", "right"),
    Add: ("left", "right"),
    Sub: ("left", "right"),
    Mul: ("left", "right"),
    IfThenElse: ("cond", "then", "other"),
}


def _replace_at(e: Expr, path: tuple, new: Expr) -> Expr:
    if not path:
        return new
    attr, rest = path[0], path[1:]
    fields = _CTORS[type(e)]
    kwargs = {f: getattr(e, f) for f in fields}
    kwargs[attr] = _replace_at(kwargs[attr], rest, new)
    return type(e)(**kwargs)


def _fits(node: Expr, slot: str) -> bool:
    t = static_type(node)
    if slot in (_SLOT_BOOL,):
        return t == BOOL
    if slot == _SLOT_REAL:
        return t == REAL
    if slot == _SLOT_MIXED:
        return t == REAL or isinstance(node, BoolAtom)
    return True  # root


def _grow(e, rng, grammar: ProposalGrammar) -> Expr | None:
    nodes = _positions(e)
    path, v, slot = nodes[rng.integers(len(nodes))]
    vt = static_type(v)
    ops = []
    if vt == BOOL and slot in (_SLOT_BOOL, _SLOT_ROOT):
        ops += ["not", "and", "or", "ite"]
    if grammar.arithmetic and _fits_real_growth(v, vt, slot):
        ops += ["add", "sub", "mul"] + (["rite"] if vt == REAL else [])
    if not ops:
        return None
    op = ops[rng.integers(len(ops))]
    if op == "not":
        wrapped = Not(v)
    elif op in ("and", "or"):
        leaf = grammar.bool_leaf(rng)
        pair = (v, leaf) if rng.integers(2) == 0 else (leaf, v)
        wrapped = (And if op == "and" else Or)(*pair)
    elif op in ("add", "sub", "mul"):
        leaf = grammar.real_leaf(rng, allow_bool_atom=True)
        if leaf is None:
            return None
        pair = (v, leaf) if rng.integers(2) == 0 else (leaf, v)
        wrapped = {"add": Add, "sub": Sub, "mul": Mul}[op](*pair)
    elif op == "ite":
        spots = ("cond", "then", "other")
        spot = spots[rng.integers(3)]
        parts = {s: (v if s == spot else grammar.bool_leaf(rng)) for s in spots}
        wrapped = IfThenElse(parts["cond"], parts["then"], parts["other"])
    else:  # rite: a real-branched conditional around a real-typed node
        spot = ("then", "other")[rng.integers(2)]
        other_branch = grammar.real_leaf(rng, allow_bool_atom=False)
        if other_branch is None:
            return None
        wrapped = IfThenElse(
            grammar.bool_leaf(rng),
            v if spot == "then" else other_branch,
            v if spot == "other" else other_branch,
        )
    if not _fits(wrapped, slot):
        return None
    return _replace_at(e, path, wrapped)


def _fits_real_growth(v, vt, slot) -> bool:
    # arithmetic can wrap a node wherever the result may be real
    if slot in (_SLOT_REAL, _SLOT_MIXED, _SLOT_ROOT):
        return vt == REAL or isinstance(v, BoolAtom)
    return False


def _shrink(e, rng, grammar: ProposalGrammar) -> Expr | None:
    nodes = _positions(e)
    ops = [(p, n, s) for p, n, s in nodes if type(n) in _CTORS]
    if not ops:
        leaf = grammar.leaf_for_slot(rng, nodes[0][2] if nodes else _SLOT_BOOL)
        if leaf is None or not _fits(leaf, _SLOT_ROOT):
            return None
        return leaf
    path, v, slot = ops[rng.integers(len(ops))]
    candidates = [
        getattr(v, f) for f in _CTORS[type(v)] if _fits(getattr(v, f), slot)
    ]
    if not candidates:
        return None
    child = candidates[rng.integers(len(candidates))]
    return _replace_at(e, path, child)


_OP_SWAPS = {And: (Or,), Or: (And,), Add: (Sub, Mul), Sub: (Add, Mul), Mul: (Add, Sub)}


def _replace(e, rng, grammar: ProposalGrammar) -> Expr | None:
    nodes = _positions(e)
    path, v, slot = nodes[rng.integers(len(nodes))]
    swaps = _OP_SWAPS.get(type(v), ())
    if swaps and rng.integers(2) == 0:
        ctor = swaps[rng.integers(len(swaps))]
        return _replace_at(e, path, ctor(v.left, v.right))
    leaf = grammar.leaf_for_slot(rng, slot)
    if leaf is None or not _fits(leaf, slot):
        return None
    return _replace_at(e, path, leaf)


_MOVES = (_grow, _shrink, _replace)


def propose(
    e: Expr,
    schema: FeatureSchema,
    rng,
    grammar: ProposalGrammar | None = None,
    mix: tuple[float, float, float] = (0.35, 0.35, 0.30),
) -> Expr:
    """One grow/shrink/replace move; always returns a well-typed tree.

    A move that cannot apply is redrawn a bounded number of times, after
    which the tree is returned unchanged.
    """
    grammar = grammar or ProposalGrammar(schema)
    for _ in range(8):
        u = rng.random()
        move = _MOVES[0] if u < mix[0] else _MOVES[1] if u < mix[0] + mix[1] else _MOVES[2]
        out = move(e, rng, grammar)
        if out is not None:
            return out
    return e


# -- annealing ---------------------------------------------------------------


def initial_program(batch: PerturbationBatch) -> Expr:
    """Constant start state: the weight-majority oriented label; ties go to
    the anchor's class (true)."""
    eff = batch.effective_labels
    mass_true = float(batch.weights[eff].sum())
    mass_false = float(batch.weights[~eff].sum())
    return BoolConst(mass_true >= mass_false)


def energy(program: Expr, batch: PerturbationBatch, cfg: InducerConfig) -> float:
    """Loss when the program fits the node budget, +inf otherwise."""
    if node_count(program) > cfg.max_nodes:
        return math.inf
    loss_fn = get_loss(cfg.loss)
    preds = predict_batch(program, batch.X, batch.schema)
    return float(loss_fn.fn(batch.effective_labels, preds, batch.weights))


def anneal(batch: PerturbationBatch, cfg: InducerConfig, on_accept=None) -> ExplanationResult:
    """Minimize the gated loss over programs by restarted annealing.

    Fully determined by (batch, cfg). ``on_accept(chain_id, step, state,
    energy)`` is called on every accepted state, for instrumentation.
    A chain stops early once its best energy reaches the loss's optimum,
    since no candidate can improve on it.
    """
    loss_fn = get_loss(cfg.loss)
    schema = batch.schema
    labels = batch.effective_labels
    weights = batch.weights

    def raw_energy(program: Expr) -> float:
        preds = predict_batch(program, batch.X, schema)
        return float(loss_fn.fn(labels, preds, weights))

    if labels.all():
        # locally constant black box: the constant program is exact
        program = BoolConst(True)
        e0 = raw_energy(program)
        return ExplanationResult(
            program=program,
            score=weighted_f1(labels, predict_batch(program, batch.X, schema), weights),
            energy=e0,
            node_count=1,
            chain_id=-1,
            seed=cfg.seed,
            iterations_used=0,
        )

    grammar = ProposalGrammar(schema, arithmetic=cfg.arithmetic)
    cache: dict[Expr, float] = {}

    def energy_of(program: Expr) -> float:
        e = cache.get(program)
        if e is None:
            e = raw_energy(program)
            if len(cache) > 200_000:
                cache.clear()
            cache[program] = e
        return e

    init = initial_program(batch)
    chains: list[ChainTrace] = []
    winners = []
    seed_seq = np.random.SeedSequence(cfg.seed)
    for chain_id, child_seed in enumerate(seed_seq.spawn(cfg.restarts)):
        rng = np.random.default_rng(child_seed)
        state = init
        e_cur = energy_of(state)
        best, best_e = state, e_cur
        best_n, best_p = node_count(state), pretty_print(state)
        trace = [(0, best_e)]
        used = 0
        if best_e > loss_fn.optimum:
            for k in range(1, cfg.iterations + 1):
                used = k
                temperature = cfg.initial_temperature / math.log(k + math.e)
                cand = propose(state, schema, rng, grammar, cfg.proposal_mix)
                if node_count(cand) > cfg.max_nodes:
                    continue  # over the gate: rejected before scoring
                e_cand = energy_of(cand)
                delta = e_cand - e_cur
                if delta <= 0 or rng.random() < math.exp(-delta / temperature):
                    state, e_cur = cand, e_cand
                    if on_accept is not None:
                        on_accept(chain_id, k, state, e_cur)
                    improved = e_cur < best_e
                    if not improved and e_cur == best_e and state != best:
                        n_state = node_count(state)
                        improved = n_state < best_n or (
                            n_state == best_n and pretty_print(state) < best_p
                        )
                    if improved:
                        best, best_e = state, e_cur
                        best_n, best_p = node_count(best), pretty_print(best)
                        trace.append((k, best_e))
                    if best_e <= loss_fn.optimum:
                        break
        chains.append(ChainTrace(chain_id, used, best_e, tuple(trace)))
        winners.append((best_e, best_n, best_p, best, used))

    top = winners[0]
    for w in winners[1:]:
        if (w[0], w[1], w[2]) < (top[0], top[1], top[2]):
            top = w
    best_e, best_n, best_p, best, used = top
    return ExplanationResult(
        program=best,
        score=weighted_f1(labels, predict_batch(best, batch.X, schema), weights),
        energy=best_e,
        node_count=best_n,
        chain_id=winners.index(top),
        seed=cfg.seed,
        iterations_used=used,
        chains=tuple(chains),
    )


def exhaustive_search(
    batch: PerturbationBatch,
    schema: FeatureSchema | None = None,
    max_nodes: int = 7,
    loss: str = "weighted-f1",
    cap: int = 10_000_000,
) -> ExplanationResult:
    """Globally minimize the gated loss by enumerating every tree.

    Guarded: fails up front when the space exceeds ``cap`` trees. Ties are
    broken exactly like anneal(): fewer nodes, then smaller rendering.
    """
    schema = schema or batch.schema
    guard_space(schema, max_nodes, cap)
    loss_fn = get_loss(loss)
    labels = batch.effective_labels
    weights = batch.weights

    energy_by_preds: dict[bytes, float] = {}
    best = None  # (energy, size, print, expr)
    evaluated = 0
    current_size = 0
    for expr, size, vec in iter_trees(schema, max_nodes, batch.X):
        if size != current_size:
            if best is not None and best[0] <= loss_fn.optimum:
                break  # finished the smallest size class holding the optimum
            current_size = size
        key = vec.tobytes()
        e = energy_by_preds.get(key)
        if e is None:
            e = float(loss_fn.fn(labels, vec, weights))
            energy_by_preds[key] = e
        evaluated += 1
        if best is None or e < best[0]:
            best = (e, size, pretty_print(expr), expr)
        elif e == best[0] and size == best[1]:
            p = pretty_print(expr)
            if p < best[2]:
                best = (e, size, p, expr)

    e_best, size, _, program = best
    return ExplanationResult(
        program=program,
        score=weighted_f1(labels, predict_batch(program, batch.X, schema), weights),
        energy=e_best,
        node_count=size,
        chain_id=-1,
        seed=None,
        iterations_used=evaluated,
    )
