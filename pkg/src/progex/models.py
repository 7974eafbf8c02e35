"""Black-box baselines and the remote model client.

The in-repo baselines (decision tree, random forest, logistic regression)
exist so the whole pipeline runs with no external runtime; they are
deliberately minimal, deterministic under a seed, and serializable to
JSON model files. Remote models speak a newline-delimited JSON protocol
over the stdio of a spawned subprocess or a TCP socket:

    handshake (server -> client):  {"schema_arity": <int>, "protocol": 1}
    request   (client -> server):  {"id": <int>, "instances": [[...], ...]}
    response  (server -> client):  {"id": <int>, "labels": [0|1, ...]}

A response may instead carry {"id": ..., "error": "<msg>"}.
"""

from __future__ import annotations

import json
import math
import selectors
import shlex
import socket
import subprocess
from dataclasses import dataclass

import numpy as np

from .compilers import DecisionTreeModel, TreeLeaf, TreeSplit
from .exprs import BoolAtom, Predicate
from .schema import BOOLEAN, CATEGORICAL, NUMERIC, FeatureSchema, atom_name


class ModelError(Exception):
    """Base class for model failures."""


class TrainingError(ModelError):
    """Degenerate training data."""


class ProtocolError(ModelError):
    """The remote peer violated the wire protocol."""


class ModelUnavailableError(ModelError):
    """The remote peer is unreachable or stopped answering."""


# -- decision tree -----------------------------------------------------------


@dataclass(frozen=True)
class _Leaf:
    label: bool


@dataclass(frozen=True)
class _Split:
    feature: int
    threshold: float
    low: "_Leaf | _Split"   # taken when value <= threshold
    high: "_Leaf | _Split"


def _gini(pos: int, total: int) -> float:
    if total == 0:
        return 0.0
    p = pos / total
    return 2.0 * p * (1.0 - p)


def _majority(y: np.ndarray) -> bool:
    pos = int(y.sum())
    return pos > len(y) - pos


def _best_split(X, y, feature_ids):
    """Minimum weighted Gini over midpoint thresholds; deterministic ties."""
    n = len(y)
    best = None  # (cost, feature, threshold)
    for f in feature_ids:
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        sorted_col = col[order]
        sorted_y = y[order]
        pos_prefix = np.cumsum(sorted_y)
        total_pos = pos_prefix[-1]
        distinct = np.nonzero(sorted_col[1:] > sorted_col[:-1])[0]
        for cut in distinct:
            left_n = cut + 1
            left_pos = int(pos_prefix[cut])
            cost = (
                left_n * _gini(left_pos, left_n)
                + (n - left_n) * _gini(int(total_pos) - left_pos, n - left_n)
            ) / n
            if best is None or cost < best[0] - 1e-15:
                threshold = (sorted_col[cut] + sorted_col[cut + 1]) / 2.0
                best = (cost, f, float(threshold))
    return best


def _grow_tree(X, y, depth, max_depth, rng, n_subset):
    if depth >= max_depth or len(set(y.tolist())) == 1:
        return _Leaf(_majority(y))
    p = X.shape[1]
    if n_subset is not None and n_subset < p:
        feature_ids = sorted(rng.permutation(p)[:n_subset].tolist())
    else:
        feature_ids = range(p)
    found = _best_split(X, y, feature_ids)
    if found is None:
        return _Leaf(_majority(y))
    _, f, threshold = found
    mask = X[:, f] <= threshold
    return _Split(
        f,
        threshold,
        _grow_tree(X[mask], y[mask], depth + 1, max_depth, rng, n_subset),
        _grow_tree(X[~mask], y[~mask], depth + 1, max_depth, rng, n_subset),
    )


def _walk(node, row):
    while isinstance(node, _Split):
        node = node.low if row[node.feature] <= node.threshold else node.high
    return node.label


class TreeModel:
    """Greedy Gini-split decision tree over raw feature slots."""

    kind = "tree"

    def __init__(self, root, arity: int):
        self.root = root
        self.arity = arity

    def predict_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return np.fromiter((_walk(self.root, row) for row in X), dtype=bool, count=len(X))

    def to_json_obj(self) -> dict:
        def go(node):
            if isinstance(node, _Leaf):
                return {"label": bool(node.label)}
            return {
                "feature": node.feature,
                "threshold": node.threshold,
                "low": go(node.low),
                "high": go(node.high),
            }

        return {"kind": "tree", "schema_arity": self.arity, "root": go(self.root)}

    @staticmethod
    def from_json_obj(obj) -> "TreeModel":
        def go(node):
            if "label" in node:
                return _Leaf(bool(node["label"]))
            return _Split(
                int(node["feature"]),
                float(node["threshold"]),
                go(node["low"]),
                go(node["high"]),
            )

        return TreeModel(go(obj["root"]), int(obj["schema_arity"]))

    def to_representation(self, schema: FeatureSchema) -> DecisionTreeModel:
        """Export as an interpretable tree over named atomic tests.

        Splits on boolean slots become presence tests; categorical splits
        on the level index have no faithful named form and are rejected.
        """

        def test_for(node: _Split):
            f = schema.features[node.feature]
            if f.kind == NUMERIC:
                return Predicate(f.name, "<=", node.threshold), True
            if f.kind == BOOLEAN:
                # value <= t either separates 0 from 1 or nothing at all
                if 0.0 <= node.threshold < 1.0:
                    return BoolAtom(f.name), False  # test-true means value 1
                return None, node.threshold >= 1.0
            raise ModelError(
                f"cannot export a categorical split on {f.name!r} as a named test"
            )

        def go(node):
            if isinstance(node, _Leaf):
                return TreeLeaf(node.label)
            test, low_is_true = test_for(node)
            if test is None:
                # degenerate split: one side is unreachable
                return go(node.low if low_is_true else node.high)
            lo, hi = go(node.low), go(node.high)
            if isinstance(test, BoolAtom):
                return TreeSplit(test, if_true=hi, if_false=lo)
            return TreeSplit(test, if_true=lo, if_false=hi)

        return go(self.root)


def train_tree(dataset, max_depth: int = 4) -> TreeModel:
    X, y = dataset.X, dataset.y
    if len(set(y.tolist())) < 2:
        raise TrainingError("training data has a single class")
    root = _grow_tree(X, y, 0, max_depth, None, None)
    return TreeModel(root, X.shape[1])


# -- random forest -------------------------------------------------------------


class ForestModel:
    """Bagged Gini trees with per-split feature subsets; strict-majority vote."""

    kind = "forest"

    def __init__(self, trees, arity: int):
        self.trees = list(trees)
        self.arity = arity

    def predict_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        votes = np.zeros(len(X), dtype=np.int64)
        for tree in self.trees:
            votes += tree.predict_batch(X)
        return votes * 2 > len(self.trees)

    def to_json_obj(self) -> dict:
        return {
            "kind": "forest",
            "schema_arity": self.arity,
            "trees": [t.to_json_obj() for t in self.trees],
        }

    @staticmethod
    def from_json_obj(obj) -> "ForestModel":
        trees = [TreeModel.from_json_obj(t) for t in obj["trees"]]
        return ForestModel(trees, int(obj["schema_arity"]))


def train_forest(dataset, n_trees: int = 25, max_depth: int = 6, seed: int = 0) -> ForestModel:
    X, y = dataset.X, dataset.y
    if len(set(y.tolist())) < 2:
        raise TrainingError("training data has a single class")
    n, p = X.shape
    n_subset = max(1, math.ceil(math.sqrt(p)))
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(n_trees):
        idx = rng.integers(0, n, n)
        root = _grow_tree(X[idx], y[idx], 0, max_depth, rng, n_subset)
        trees.append(TreeModel(root, p))
    return ForestModel(trees, p)


# -- logistic regression ---------------------------------------------------------


class LogisticModel:
    """Gradient-descent logistic regression on one-hot/standardized slots."""

    kind = "logistic"

    def __init__(self, encoders, weights, bias, arity):
        self.encoders = encoders  # per feature: ("id",) | ("onehot", k) | ("scale", mean, std)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = float(bias)
        self.arity = arity

    def _design(self, X) -> np.ndarray:
        cols = []
        for i, enc in enumerate(self.encoders):
            col = X[:, i]
            if enc[0] == "id":
                cols.append(col)
            elif enc[0] == "onehot":
                for li in range(enc[1]):
                    cols.append((col == li).astype(np.float64))
            else:
                _, mean, std = enc
                cols.append((col - mean) / std)
        return np.column_stack(cols)

    def predict_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return self._design(X) @ self.weights + self.bias > 0

    def to_json_obj(self) -> dict:
        return {
            "kind": "logistic",
            "schema_arity": self.arity,
            "encoders": [list(e) for e in self.encoders],
            "weights": self.weights.tolist(),
            "bias": self.bias,
        }

    @staticmethod
    def from_json_obj(obj) -> "LogisticModel":
        encoders = [tuple(e) for e in obj["encoders"]]
        return LogisticModel(
            encoders, obj["weights"], obj["bias"], int(obj["schema_arity"])
        )


def train_logistic(dataset, epochs: int = 300, learning_rate: float = 0.5) -> LogisticModel:
    X, y = dataset.X, dataset.y
    if len(set(y.tolist())) < 2:
        raise TrainingError("training data has a single class")
    encoders = []
    for i, f in enumerate(dataset.schema.features):
        if f.kind == BOOLEAN:
            encoders.append(("id",))
        elif f.kind == CATEGORICAL:
            encoders.append(("onehot", len(f.levels)))
        else:
            col = X[:, i]
            std = float(col.std())
            encoders.append(("scale", float(col.mean()), std if std > 0 else 1.0))
    stub = LogisticModel(encoders, np.zeros(1), 0.0, X.shape[1])
    design = stub._design(X)
    n, d = design.shape
    w = np.zeros(d)
    b = 0.0
    target = y.astype(np.float64)
    for _ in range(epochs):
        z = design @ w + b
        prob = 1.0 / (1.0 + np.exp(-z))
        err = prob - target
        w -= learning_rate * (design.T @ err) / n
        b -= learning_rate * float(err.mean())
    return LogisticModel(encoders, w, b, X.shape[1])


# -- model files -------------------------------------------------------------------

_KINDS = {"tree": TreeModel, "forest": ForestModel, "logistic": LogisticModel}


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_json_obj(), fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    kind = obj.get("kind")
    if kind not in _KINDS:
        raise ModelError(f"unknown model kind {kind!r} in {path}")
    return _KINDS[kind].from_json_obj(obj)


# -- remote models -------------------------------------------------------------------


class RemoteModel:
    """Client for the wire protocol; forwards batches, validates answers."""

    kind = "remote"

    def __init__(self, reader, writer, closer, timeout: float = 30.0):
        self._reader = reader
        self._writer = writer
        self._closer = closer
        self._timeout = timeout
        self._next_id = 0
        handshake = self._read_obj()
        if handshake.get("protocol") != 1 or "schema_arity" not in handshake:
            raise ProtocolError(f"bad handshake: {handshake!r}")
        self.arity = int(handshake["schema_arity"])

    def _read_obj(self) -> dict:
        line = self._reader()
        if not line:
            raise ModelUnavailableError("remote model closed the connection")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"bad JSON from remote model: {line!r}") from exc
        if not isinstance(obj, dict):
            raise ProtocolError(f"expected a JSON object, got {obj!r}")
        return obj

    def predict_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.arity:
            raise ProtocolError(
                f"instance width {X.shape[1] if X.ndim == 2 else '?'} does not "
                f"match advertised arity {self.arity}"
            )
        request_id = self._next_id
        self._next_id += 1
        payload = {"id": request_id, "instances": [[float(v) for v in row] for row in X]}
        self._writer(json.dumps(payload) + "\n")
        obj = self._read_obj()
        if obj.get("error") is not None:
            raise ProtocolError(f"remote model error: {obj['error']}")
        if obj.get("id") != request_id:
            raise ProtocolError(f"response id {obj.get('id')!r} != request id {request_id}")
        labels = obj.get("labels")
        if not isinstance(labels, list) or len(labels) != len(X):
            raise ProtocolError(
                f"expected {len(X)} labels, got {len(labels) if isinstance(labels, list) else labels!r}"
            )
        if any(v not in (0, 1) for v in labels):
            raise ProtocolError("remote model returned non-binary labels")
        return np.asarray(labels, dtype=bool)

    def close(self):
        self._closer()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _line_reader(stream, fd, timeout):
    sel = selectors.DefaultSelector()
    sel.register(fd, selectors.EVENT_READ)

    def read() -> str:
        if not sel.select(timeout):
            raise ModelUnavailableError(f"remote model timed out after {timeout}s")
        return stream.readline()

    return read


def spawn_model(command: str, timeout: float = 30.0) -> RemoteModel:
    """Spawn a subprocess serving the protocol on its stdio."""
    try:
        proc = subprocess.Popen(
            shlex.split(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
        )
    except OSError as exc:
        raise ModelUnavailableError(f"cannot spawn {command!r}: {exc}") from exc

    def write(line: str):
        try:
            proc.stdin.write(line)
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ModelUnavailableError("remote model process died") from exc

    def close():
        if proc.poll() is None:
            proc.stdin.close()
            try:
                proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                proc.kill()

    reader = _line_reader(proc.stdout, proc.stdout.fileno(), timeout)
    try:
        return RemoteModel(reader, write, close, timeout)
    except Exception:
        close()
        raise


def connect_model(host: str, port: int, timeout: float = 30.0) -> RemoteModel:
    """Connect to a TCP server speaking the protocol."""
    try:
        sock = socket.create_connection((host, port), timeout=timeout)
    except OSError as exc:
        raise ModelUnavailableError(f"cannot reach {host}:{port}: {exc}") from exc
    sock.settimeout(timeout)
    fh = sock.makefile("rw", encoding="utf-8", newline="\n")

    def read() -> str:
        try:
            return fh.readline()
        except socket.timeout:
            raise ModelUnavailableError(f"remote model timed out after {timeout}s") from None

    def write(line: str):
        fh.write(line)
        fh.flush()

    def close():
        fh.close()
        sock.close()

    return RemoteModel(read, write, close, timeout)


def remote_model(command: str | None = None, tcp: tuple[str, int] | None = None, timeout: float = 30.0) -> RemoteModel:
    """Open a remote black box from a spawn command or a (host, port) pair."""
    if (command is None) == (tcp is None):
        raise ModelError("give exactly one of a spawn command or a TCP endpoint")
    if command is not None:
        return spawn_model(command, timeout)
    return connect_model(tcp[0], int(tcp[1]), timeout)
