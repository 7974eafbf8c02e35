"""CSV dataset ingestion against a schema sidecar.

The sidecar JSON carries the feature declarations plus a target spec:

    {"features": [...], "target": {"name": "income", "positive": ">50K"}}

Rows with a missing target are dropped; missing feature cells ('' or '?')
are imputed with the column mode (boolean/categorical) or median
(numeric). Both actions are logged. Categorical features that declare no
levels collect them from the data, sorted.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass

import numpy as np

from .schema import BOOLEAN, CATEGORICAL, NUMERIC, FeatureSchema, Instance, SchemaError

log = logging.getLogger(__name__)

_MISSING = {"", "?", "na", "n/a", "nan"}


class DataError(ValueError):
    """Malformed dataset or schema/header mismatch."""


@dataclass
class Dataset:
    schema: FeatureSchema
    X: np.ndarray            # (n, arity) raw slots
    y: np.ndarray            # (n,) bool targets
    target_name: str
    positive_label: str

    def __len__(self):
        return len(self.X)

    def instance(self, index: int) -> Instance:
        if not (0 <= index < len(self.X)):
            raise DataError(f"instance index {index} out of range 0..{len(self.X) - 1}")
        return Instance(self.schema, tuple(self.X[index]))


def _is_missing(cell: str) -> bool:
    return cell.strip().lower() in _MISSING


def load_dataset(csv_path, schema_path) -> Dataset:
    """Load and type a CSV against its schema sidecar."""
    with open(schema_path, "r", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    schema = FeatureSchema.from_json_obj(sidecar)
    target = sidecar.get("target")
    if not isinstance(target, dict) or "name" not in target or "positive" not in target:
        raise DataError("schema sidecar needs a target: {name, positive}")
    target_name = str(target["name"])
    positive = str(target["positive"])

    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{csv_path} is empty")
        rows = [r for r in reader if r]

    col_of = {name: i for i, name in enumerate(header)}
    for f in schema.features:
        if f.name not in col_of:
            raise DataError(f"CSV header is missing schema feature {f.name!r}")
    if target_name not in col_of:
        raise DataError(f"CSV header is missing target column {target_name!r}")

    # drop rows with a missing target
    kept = [r for r in rows if not _is_missing(r[col_of[target_name]])]
    if len(kept) < len(rows):
        log.info("dropped %d rows with missing target", len(rows) - len(kept))
    if not kept:
        raise DataError("no usable rows")

    raw_target = sorted({r[col_of[target_name]].strip() for r in kept})
    if len(raw_target) > 2:
        raise DataError(f"target {target_name!r} is not binary: {raw_target}")

    # collect levels for categorical features that declared none
    collected = {}
    for f in schema.features:
        if f.kind == CATEGORICAL and not f.levels:
            seen = {
                r[col_of[f.name]].strip()
                for r in kept
                if not _is_missing(r[col_of[f.name]])
            }
            if not seen:
                raise DataError(f"categorical {f.name!r} has no observed levels")
            collected[f.name] = sorted(seen)
            log.info("collected %d levels for %s", len(seen), f.name)
    if collected:
        schema = schema.with_levels(collected)

    n = len(kept)
    X = np.empty((n, schema.arity), dtype=np.float64)
    for j, f in enumerate(schema.features):
        cells = [r[col_of[f.name]].strip() for r in kept]
        present = [c for c in cells if not _is_missing(c)]
        if not present:
            raise DataError(f"feature {f.name!r} has no observed values")
        missing_count = n - len(present)
        if missing_count:
            if f.kind == NUMERIC:
                fill = repr(float(np.median([float(c) for c in present])))
            else:
                counts: dict[str, int] = {}
                for c in present:
                    counts[c] = counts.get(c, 0) + 1
                fill = max(sorted(counts), key=lambda c: counts[c])
            log.info("imputed %d missing cells of %s with %s", missing_count, f.name, fill)
            cells = [fill if _is_missing(c) else c for c in cells]
        try:
            X[:, j] = [schema.parse_value(f.name, c) for c in cells]
        except SchemaError as exc:
            raise DataError(str(exc)) from exc

    y = np.array([r[col_of[target_name]].strip() == positive for r in kept], dtype=bool)
    return Dataset(schema, X, y, target_name, positive)
