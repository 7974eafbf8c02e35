"""progex: short program explanations for black-box binary classifiers."""

__version__ = "0.1.0"

from .anneal import (
    ChainTrace,
    ExplanationResult,
    InducerConfig,
    ProposalGrammar,
    anneal,
    energy,
    exhaustive_search,
    initial_program,
    propose,
)
from .compilers import (
    DecisionTreeModel,
    LinearModel,
    Rule,
    RuleList,
    RuleSet,
    TreeLeaf,
    TreeSplit,
    compile_linear,
    compile_rule_list,
    compile_rule_set,
    compile_tree,
    simplify_binary,
)
from .data import Dataset, load_dataset
from .exprs import (
    Add,
    And,
    BOOL,
    BoolAtom,
    BoolConst,
    Expr,
    ExprError,
    ExprTypeError,
    IfThenElse,
    Mul,
    Not,
    Or,
    Predicate,
    REAL,
    RealAtom,
    RealConst,
    Sub,
    evaluate,
    evaluate_batch,
    node_count,
    predict,
    predict_batch,
    static_type,
    type_of,
)
from .loss import (
    LossFunction,
    LOSSES,
    fidelity_score,
    get_loss,
    loss_of,
    weighted_01,
    weighted_f1,
)
from .models import (
    ForestModel,
    LogisticModel,
    ModelError,
    ProtocolError,
    RemoteModel,
    TreeModel,
    load_model,
    remote_model,
    save_model,
    train_forest,
    train_logistic,
    train_tree,
)
from .perturb import (
    BinarizedView,
    KernelConfig,
    PerturbationBatch,
    binarize,
    default_kernel,
    label_batch,
    make_batch,
    proximity_weights,
    read_batch_csv,
    sample_perturbations,
    write_batch_csv,
)
from .schema import Feature, FeatureSchema, Instance, SchemaError
from .search_space import SearchSpaceError, count_trees, iter_trees
from .syntax import ExprSyntaxError, format_real, parse, pretty_print, render_block

__all__ = [name for name in dir() if not name.startswith("_")]
