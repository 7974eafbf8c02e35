"""Neighborhood sampling around the explained instance.

The raw feature space is first binarized into an interpretable view: one
presence bit per boolean feature, per categorical level, and per quartile
bin of each numeric feature. Perturbations keep each feature group at the
anchor's value with probability 0.5 and otherwise resample it from its
empirical marginal (numeric groups pick a bin, then draw uniformly inside
it). Proximity weights decay with the fraction of view bits on which a
sample disagrees with the anchor.

Quartile thresholds use the midpoint percentile convention: at fractional
rank h = (n-1)q, the threshold is the average of the two neighbouring
order statistics.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .schema import BOOLEAN, CATEGORICAL, NUMERIC, FeatureSchema, Instance


class PerturbationError(ValueError):
    """Bad inputs to sampling, weighting, or batch assembly."""


class NonBinaryLabelError(PerturbationError):
    """A black box returned something other than 0/1 labels."""


@dataclass(frozen=True)
class KernelConfig:
    """Exponential kernel on normalized view-bit Hamming distance."""

    width: float
    distance: str = "binarized-hamming"

    def __post_init__(self):
        if not (self.width > 0):
            raise PerturbationError("kernel width must be positive")
        if self.distance != "binarized-hamming":
            raise PerturbationError(f"unsupported distance {self.distance!r}")


@dataclass(frozen=True)
class _Group:
    """Sampling state for one feature: its view bits and marginals."""

    feat_idx: int
    kind: str
    n_coords: int                      # view bits owned by this group (0 if degenerate)
    marginal: float = 0.0              # boolean: empirical P(true)
    level_probs: tuple = ()            # categorical: per-level probability
    bin_edges: tuple = ()              # numeric: len(bins)+1 monotone edges
    bin_probs: tuple = ()              # numeric: per-bin probability
    thresholds: tuple = ()             # numeric: interior cut points
    degenerate: bool = False


class BinarizedView:
    """Interpretable view of a schema fit on a data sample."""

    def __init__(self, schema: FeatureSchema, groups):
        self.schema = schema
        self.groups = tuple(groups)
        self.n_coords = sum(g.n_coords for g in self.groups)
        self.degenerate_features = tuple(
            schema.features[g.feat_idx].name for g in self.groups if g.degenerate
        )

    def coords(self, X: np.ndarray) -> np.ndarray:
        """Encode raw rows as the (n, n_coords) presence-bit matrix."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        cols = []
        for g in self.groups:
            if g.degenerate:
                continue
            col = X[:, g.feat_idx]
            if g.kind == BOOLEAN:
                cols.append(col != 0.0)
            elif g.kind == CATEGORICAL:
                for li in range(g.n_coords):
                    cols.append(col == li)
            else:
                idx = np.searchsorted(np.asarray(g.thresholds), col, side="left")
                for bi in range(g.n_coords):
                    cols.append(idx == bi)
        if not cols:
            return np.zeros((X.shape[0], 0), dtype=bool)
        return np.column_stack(cols)


def binarize(schema: FeatureSchema, data: np.ndarray) -> BinarizedView:
    """Fit the interpretable view on a raw data sample.

    Numeric quartile thresholds are appended to the schema threshold pool,
    so the returned view's schema is the one the induced programs should
    be written against. Constant numeric features collapse to a single
    degenerate bin: they are flagged and excluded from perturbation.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != schema.arity:
        raise PerturbationError("data sample must be an (n, arity) matrix")
    if data.shape[0] == 0:
        raise PerturbationError("data sample is empty")

    groups = []
    extra: dict[str, tuple] = {}
    for i, f in enumerate(schema.features):
        col = data[:, i]
        if f.kind == BOOLEAN:
            groups.append(
                _Group(i, BOOLEAN, 1, marginal=float(np.mean(col != 0.0)))
            )
        elif f.kind == CATEGORICAL:
            k = len(f.levels)
            counts = np.bincount(col.astype(int), minlength=k)[:k]
            probs = counts / counts.sum()
            groups.append(
                _Group(i, CATEGORICAL, k, level_probs=tuple(float(p) for p in probs))
            )
        else:
            qs = np.percentile(col, [25, 50, 75], method="midpoint")
            cuts = tuple(sorted(set(float(q) for q in qs)))
            lo, hi = float(col.min()), float(col.max())
            if lo == hi:
                groups.append(_Group(i, NUMERIC, 0, degenerate=True))
                continue
            extra[f.name] = cuts
            edges = (lo,) + cuts + (hi,)
            idx = np.searchsorted(np.asarray(cuts), col, side="left")
            counts = np.bincount(idx, minlength=len(cuts) + 1)
            probs = counts / counts.sum()
            groups.append(
                _Group(
                    i,
                    NUMERIC,
                    len(cuts) + 1,
                    bin_edges=edges,
                    bin_probs=tuple(float(p) for p in probs),
                    thresholds=cuts,
                )
            )
    return BinarizedView(schema.with_extra_thresholds(extra), groups)


def default_kernel(view: BinarizedView) -> KernelConfig:
    """Width 0.75 * sqrt(number of view bits), floored away from zero."""
    return KernelConfig(width=max(0.75 * math.sqrt(max(view.n_coords, 1)), 1e-9))


def sample_perturbations(
    x: Instance, view: BinarizedView, n: int, seed: int
) -> np.ndarray:
    """Draw n raw-space samples around x; row 0 is x itself.

    Fully determined by (seed, x, view, n). Each non-degenerate feature is
    independently kept at x's value with probability 0.5, else resampled
    from its empirical marginal.
    """
    if n < 1:
        raise PerturbationError("need at least one sample")
    rng = np.random.default_rng(seed)
    out = np.empty((n, view.schema.arity), dtype=np.float64)
    out[0] = x.values
    for row in range(1, n):
        out[row] = x.values
        for g in view.groups:
            if g.degenerate:
                continue
            if rng.random() < 0.5:
                continue
            if g.kind == BOOLEAN:
                out[row, g.feat_idx] = 1.0 if rng.random() < g.marginal else 0.0
            elif g.kind == CATEGORICAL:
                out[row, g.feat_idx] = float(
                    rng.choice(len(g.level_probs), p=g.level_probs)
                )
            else:
                b = int(rng.choice(len(g.bin_probs), p=g.bin_probs))
                lo, hi = g.bin_edges[b], g.bin_edges[b + 1]
                out[row, g.feat_idx] = lo if lo == hi else rng.uniform(lo, hi)
    return out


def proximity_weights(
    x: Instance, Z: np.ndarray, kernel: KernelConfig, view: BinarizedView
) -> np.ndarray:
    """w_i = exp(-d_i^2 / width^2), d_i = fraction of view bits where z_i
    differs from x."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.shape[0] == 0:
        raise PerturbationError("empty sample set")
    if view.n_coords == 0:
        return np.ones(Z.shape[0], dtype=np.float64)
    cx = view.coords(np.asarray(x.values))[0]
    cz = view.coords(Z)
    d = (cz != cx).mean(axis=1)
    return np.exp(-(d**2) / kernel.width**2)


def label_batch(model, Z: np.ndarray) -> np.ndarray:
    """Query the black box once for the whole sample set; returns bools.

    Raises NonBinaryLabelError when the model emits anything but 0/1.
    """
    raw = np.asarray(model.predict_batch(np.asarray(Z, dtype=np.float64)))
    if raw.shape != (len(Z),):
        raise NonBinaryLabelError(
            f"model returned {raw.shape} labels for {len(Z)} instances"
        )
    if raw.dtype == np.bool_:
        return raw.copy()
    ok = np.isin(raw, (0, 1))
    if not ok.all():
        bad = raw[~ok][0]
        raise NonBinaryLabelError(f"model returned non-binary label {bad!r}")
    return raw.astype(bool)


class PerturbationBatch:
    """Frozen neighborhood: samples, proximity weights, cached labels.

    Row 0 is always the anchor with weight exactly 1; the black box is
    never queried again once a batch exists.
    """

    def __init__(self, schema, X, weights, labels, anchor: Instance):
        X = np.ascontiguousarray(X, dtype=np.float64)
        weights = np.asarray(weights, dtype=np.float64)
        labels = np.asarray(labels, dtype=bool)
        if not (len(X) == len(weights) == len(labels)) or len(X) == 0:
            raise PerturbationError("samples, weights, and labels must align")
        if X.shape[1] != schema.arity:
            raise PerturbationError("sample width does not match schema arity")
        if np.any(weights <= 0) or np.any(weights > 1):
            raise PerturbationError("weights must lie in (0, 1]")
        if tuple(X[0]) != anchor.values:
            raise PerturbationError("sample 0 must be the anchor instance")
        if weights[0] != 1.0:
            raise PerturbationError("anchor weight must be exactly 1")
        self.schema = schema
        self.X = X
        self.weights = weights
        self.labels = labels
        self.anchor = anchor
        self.anchor_label = bool(labels[0])
        for arr in (self.X, self.weights, self.labels):
            arr.setflags(write=False)

    def __len__(self):
        return len(self.X)

    @property
    def samples(self) -> list[Instance]:
        return [Instance(self.schema, tuple(row)) for row in self.X]

    @property
    def effective_labels(self) -> np.ndarray:
        """Labels oriented to the anchor's predicted class: programs are
        induced to answer 'does the model predict the anchor's class here'."""
        return self.labels if self.anchor_label else ~self.labels


def make_batch(
    x: Instance,
    view: BinarizedView,
    model,
    n: int,
    kernel: KernelConfig | None = None,
    seed: int = 0,
) -> PerturbationBatch:
    """Sample, weight, and label a neighborhood in one pass."""
    kernel = kernel or default_kernel(view)
    Z = sample_perturbations(x, view, n, seed)
    w = proximity_weights(x, Z, kernel, view)
    labels = label_batch(model, Z)
    anchor = Instance(view.schema, tuple(Z[0]))
    return PerturbationBatch(view.schema, Z, w, labels, anchor)


# -- batch dump / replay -------------------------------------------------


def write_batch_csv(batch: PerturbationBatch, path) -> None:
    """Raw features plus weight and label columns, one row per sample."""
    names = [f.name for f in batch.schema.features]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["weight", "label"])
        for row, wt, lb in zip(batch.X, batch.weights, batch.labels):
            w.writerow([repr(float(v)) for v in row] + [repr(float(wt)), int(lb)])


def read_batch_csv(path, schema: FeatureSchema) -> PerturbationBatch:
    names = [f.name for f in schema.features]
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != names + ["weight", "label"]:
            raise PerturbationError(f"batch file header does not match schema: {header}")
        X, weights, labels = [], [], []
        for row in reader:
            if not row:
                continue
            X.append([float(v) for v in row[: schema.arity]])
            weights.append(float(row[schema.arity]))
            labels.append(bool(int(row[schema.arity + 1])))
    if not X:
        raise PerturbationError("batch file has no samples")
    anchor = Instance(schema, tuple(X[0]))
    return PerturbationBatch(schema, np.array(X), np.array(weights), np.array(labels), anchor)
