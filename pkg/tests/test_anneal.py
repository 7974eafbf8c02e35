import math

import numpy as np
import pytest

from progex import (
    And,
    BOOL,
    BoolAtom,
    BoolConst,
    Feature,
    FeatureSchema,
    InducerConfig,
    Instance,
    Not,
    PerturbationBatch,
    ProposalGrammar,
    anneal,
    binarize,
    count_trees,
    energy,
    exhaustive_search,
    initial_program,
    make_batch,
    node_count,
    parse,
    predict_batch,
    pretty_print,
    propose,
    static_type,
    type_of,
)
from progex.anneal import InducerError
from progex.search_space import SearchSpaceError

from helpers import FixedModel, all_bool_matrix, random_bool_tree, semantically_equal


def planted_batch(schema, rule_text, n=1000, seed=3, anchor=None, data_seed=0):
    """Batch labeled by a known program; the anchor defaults to a row the
    rule accepts so orientation stays the identity."""
    rule = parse(rule_text, schema)
    rng = np.random.default_rng(data_seed)
    data = (rng.random((200, schema.arity)) < 0.5).astype(float)
    view = binarize(schema, data)
    if anchor is None:
        anchor = (1.0, 0.0) + (1.0,) * (schema.arity - 2)
    x = Instance(schema, anchor)
    return make_batch(x, view, FixedModel(rule, schema), n, seed=seed)


def manual_batch(schema, rows, weights, labels):
    X = np.array(rows, dtype=float)
    return PerturbationBatch(
        schema, X, np.array(weights), np.array(labels, dtype=bool),
        Instance(schema, tuple(X[0])),
    )


class TestInitialProgram:
    def test_weighted_majority(self, ab_schema):
        batch = manual_batch(
            ab_schema,
            [(1, 1), (0, 0), (0, 1)],
            [1.0, 0.3, 0.3],
            [True, False, False],
        )
        assert initial_program(batch) == BoolConst(True)

    def test_majority_false(self, ab_schema):
        batch = manual_batch(
            ab_schema,
            [(1, 1), (0, 0), (0, 1)],
            [1.0, 0.9, 0.9],
            [True, False, False],
        )
        assert initial_program(batch) == BoolConst(False)

    def test_exact_tie_goes_to_anchor_class(self, ab_schema):
        batch = manual_batch(
            ab_schema, [(1, 1), (0, 0)], [1.0, 1.0], [True, False]
        )
        assert initial_program(batch) == BoolConst(True)

    def test_single_sample(self, ab_schema):
        batch = manual_batch(ab_schema, [(1, 1)], [1.0], [True])
        assert initial_program(batch) == BoolConst(True)


class TestPropose:
    def test_shrink_promotes_a_child(self, ab_schema):
        e = And(BoolAtom("A"), BoolAtom("B"))
        rng = np.random.default_rng(0)
        grammar = ProposalGrammar(ab_schema)
        seen = set()
        for _ in range(50):
            out = propose(e, ab_schema, rng, grammar, mix=(0.0, 1.0, 0.0))
            seen.add(out)
        assert BoolAtom("A") in seen and BoolAtom("B") in seen

    def test_grow_wraps_a_leaf(self, ab_schema):
        e = BoolAtom("A")
        rng = np.random.default_rng(1)
        grammar = ProposalGrammar(ab_schema)
        for _ in range(50):
            out = propose(e, ab_schema, rng, grammar, mix=(1.0, 0.0, 0.0))
            assert node_count(out) > 1
            assert type_of(out, ab_schema) == BOOL

    def test_proposals_always_well_typed(self, adult_schema):
        rng = np.random.default_rng(7)
        grammar = ProposalGrammar(adult_schema)
        state = BoolConst(True)
        for _ in range(10_000):
            state = propose(state, adult_schema, rng, grammar)
            assert type_of(state, adult_schema) == BOOL

    def test_arithmetic_mode_keeps_trees_well_typed(self, adult_schema):
        rng = np.random.default_rng(8)
        grammar = ProposalGrammar(adult_schema, arithmetic=True)
        state = BoolConst(True)
        real_seen = 0
        for _ in range(5_000):
            state = propose(state, adult_schema, rng, grammar)
            t = type_of(state, adult_schema)
            real_seen += t == "real"
        assert real_seen > 0  # the wider family is actually explored


class TestEnergy:
    def test_gate_is_infinite(self, abcd_schema):
        batch = planted_batch(abcd_schema, "A and not B", n=100)
        too_big = parse("A and B and C and not D", abcd_schema)
        assert node_count(too_big) == 8  # just over the default budget
        assert energy(too_big, batch, InducerConfig(max_nodes=7)) == math.inf

    def test_perfect_program(self, abcd_schema):
        batch = planted_batch(abcd_schema, "A and not B", n=200)
        assert energy(parse("A and not B", abcd_schema), batch, InducerConfig()) == -1.0

    def test_constant_false_on_mixed_batch(self, ab_schema):
        batch = manual_batch(
            ab_schema,
            [(1, 1), (1, 0), (0, 1), (0, 0)],
            [1.0, 0.5, 1.0, 1.0],
            [True, True, False, False],
        )
        assert energy(BoolConst(False), batch, InducerConfig()) == 0.0


class TestAnneal:
    def test_recovers_planted_conjunction(self, abcd_schema):
        batch = planted_batch(abcd_schema, "A and not B", n=1000, seed=3)
        result = anneal(batch, InducerConfig(seed=5))
        assert result.score == 1.0
        assert result.energy == -1.0
        planted = parse("A and not B", abcd_schema)
        assert semantically_equal(result.program, planted, abcd_schema)
        assert result.node_count <= 7

    def test_matches_oracle_energy(self, abcd_schema):
        batch = planted_batch(abcd_schema, "A or (B and C)", n=500, seed=11)
        annealed = anneal(batch, InducerConfig(seed=2))
        oracle = exhaustive_search(batch, max_nodes=7)
        assert annealed.energy <= oracle.energy + 1e-9

    def test_short_circuit_on_agreeing_labels(self, ab_schema):
        batch = manual_batch(
            ab_schema, [(1, 1), (0, 0), (0, 1)], [1.0, 0.5, 0.5], [True, True, True]
        )
        result = anneal(batch, InducerConfig(seed=0))
        assert result.program == BoolConst(True)
        assert result.score == 1.0
        assert result.iterations_used == 0

    def test_seed_determinism(self, abcd_schema):
        batch = planted_batch(abcd_schema, "A and (C or not D)", n=400, seed=9)
        cfg = InducerConfig(seed=123, iterations=3000, restarts=3)
        assert anneal(batch, cfg) == anneal(batch, cfg)

    def test_monotone_best(self, abcd_schema):
        batch = planted_batch(abcd_schema, "A and not B", n=300, seed=1)
        cfg = InducerConfig(seed=4, iterations=500, restarts=2)
        result = anneal(batch, cfg)
        init_energy = energy(initial_program(batch), batch, cfg)
        assert result.energy <= init_energy

    def test_gate_never_accepted(self, abcd_schema):
        # noisy labels so the search keeps moving the whole run
        rng = np.random.default_rng(0)
        rows = (rng.random((400, 4)) < 0.5).astype(float)
        rows[0] = (1, 1, 1, 1)
        labels = rng.random(400) < 0.5
        labels[0] = True
        batch = manual_batch(abcd_schema, rows, np.ones(400), labels)
        violations = []
        steps = [0]

        def watch(chain_id, step, state, e):
            steps[0] += 1
            if node_count(state) > 7:
                violations.append(state)

        anneal(batch, InducerConfig(seed=6, iterations=2500, restarts=4), on_accept=watch)
        assert violations == []
        assert steps[0] > 0

    def test_plugin_loss_runs(self, abcd_schema):
        batch = planted_batch(abcd_schema, "A and not B", n=300, seed=2)
        result = anneal(batch, InducerConfig(seed=1, loss="weighted-01", iterations=5000))
        assert result.energy == 0.0
        assert result.score == 1.0

    def test_bad_config_rejected(self):
        with pytest.raises(InducerError):
            InducerConfig(max_nodes=0)
        with pytest.raises(InducerError):
            InducerConfig(proposal_mix=(0.5, 0.5, 0.5))


class TestExhaustiveSearch:
    def test_single_atom_rule(self):
        schema = FeatureSchema([Feature("A", "boolean")])
        batch = planted_batch(schema, "A", n=200, anchor=(1.0,))
        result = exhaustive_search(batch, max_nodes=3)
        assert result.program == BoolAtom("A")
        assert result.energy == -1.0

    def test_negated_atom_rule(self):
        schema = FeatureSchema([Feature("A", "boolean")])
        batch = planted_batch(schema, "not A", n=200, anchor=(0.0,))
        # anchor is accepted by the rule, so orientation is identity
        assert batch.anchor_label
        result = exhaustive_search(batch, max_nodes=3)
        assert result.program == Not(BoolAtom("A"))

    def test_three_feature_disjunction(self):
        schema = FeatureSchema([Feature(c, "boolean") for c in "ABC"])
        batch = planted_batch(schema, "A or (B and C)", n=600, anchor=(1.0, 1.0, 1.0))
        result = exhaustive_search(batch, max_nodes=5)
        assert result.energy == -1.0
        planted = parse("A or (B and C)", schema)
        assert semantically_equal(result.program, planted, schema)

    def test_space_guard(self, adult_schema):
        batch = planted_batch(
            adult_schema, "Married", n=50, anchor=(40.0, 40.0, 0.0, 1.0)
        )
        with pytest.raises(SearchSpaceError):
            exhaustive_search(batch, max_nodes=7, cap=10_000)

    def test_count_matches_enumeration(self, abcd_schema):
        from progex import iter_trees

        X = all_bool_matrix(abcd_schema)
        for max_nodes in (1, 2, 3, 4, 5):
            counted = count_trees(abcd_schema, max_nodes)
            listed = sum(1 for _ in iter_trees(abcd_schema, max_nodes, X))
            assert counted == listed

    def test_oracle_dominates_anneal(self, abcd_schema):
        rng = np.random.default_rng(31)
        for trial in range(5):
            rule = random_bool_tree(rng, abcd_schema, max_nodes=5)
            batch = planted_batch(abcd_schema, pretty_print(rule), n=300, seed=trial)
            oracle = exhaustive_search(batch, max_nodes=7)
            annealed = anneal(batch, InducerConfig(seed=trial, iterations=4000, restarts=4))
            assert oracle.energy <= annealed.energy + 1e-12
