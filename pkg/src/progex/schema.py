"""Feature schemas and instances.

A schema declares the ordered feature space that programs are written
against: boolean flags, categorical features (each level becomes one
presence atom named ``Feature=Level``), and numeric features carrying a
pool of candidate thresholds for atomic comparisons.

Schemas and instances are immutable after construction and safe to share
between threads.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass

BOOLEAN = "boolean"
CATEGORICAL = "categorical"
NUMERIC = "numeric"
KINDS = (BOOLEAN, CATEGORICAL, NUMERIC)

# Words with a meaning in the surface syntax; feature names must avoid them.
RESERVED = frozenset(
    {"if", "elif", "else", "and", "or", "not", "True", "False", "return"}
)

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_:=]*\Z")
_LEVEL = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_:]*\Z")

_TRUE_WORDS = frozenset({"1", "true", "t", "yes", "y"})
_FALSE_WORDS = frozenset({"0", "false", "f", "no", "n"})


class SchemaError(ValueError):
    """Invalid schema, feature declaration, or instance."""


@dataclass(frozen=True)
class Feature:
    """One declared feature. ``levels`` apply to categorical features,
    ``thresholds`` to numeric ones."""

    name: str
    kind: str
    levels: tuple[str, ...] = ()
    thresholds: tuple[float, ...] = ()


def atom_name(feature: str, level: str) -> str:
    """Presence-atom identifier for one level of a categorical feature."""
    return f"{feature}={level}"


class FeatureSchema:
    """Ordered feature declarations plus derived lookup tables."""

    def __init__(self, features):
        features = tuple(features)
        if not features:
            raise SchemaError("schema needs at least one feature")
        names = set()
        normalized = []
        for f in features:
            if f.kind not in KINDS:
                raise SchemaError(f"unknown feature kind {f.kind!r} for {f.name!r}")
            if not _NAME.match(f.name) or f.name in RESERVED:
                raise SchemaError(f"invalid feature name {f.name!r}")
            if f.name in names:
                raise SchemaError(f"duplicate feature name {f.name!r}")
            names.add(f.name)
            levels = tuple(f.levels)
            thresholds = f.thresholds
            if f.kind == CATEGORICAL:
                if len(set(levels)) != len(levels):
                    raise SchemaError(f"duplicate levels on {f.name!r}")
                for lv in levels:
                    if not _LEVEL.match(lv):
                        raise SchemaError(f"invalid level {lv!r} on {f.name!r}")
            elif levels:
                raise SchemaError(f"levels given for non-categorical {f.name!r}")
            if f.kind == NUMERIC:
                thresholds = tuple(sorted({float(t) for t in thresholds}))
                for t in thresholds:
                    if not math.isfinite(t):
                        raise SchemaError(f"non-finite threshold on {f.name!r}")
            elif thresholds:
                raise SchemaError(f"thresholds given for non-numeric {f.name!r}")
            normalized.append(Feature(f.name, f.kind, levels, thresholds))
        self._features = tuple(normalized)
        self._index = {f.name: i for i, f in enumerate(self._features)}

        atoms: list[str] = []
        table: dict[str, tuple[int, int | None]] = {}
        for i, f in enumerate(self._features):
            if f.kind == BOOLEAN:
                atoms.append(f.name)
                table[f.name] = (i, None)
            elif f.kind == CATEGORICAL:
                for li, lv in enumerate(f.levels):
                    a = atom_name(f.name, lv)
                    if a in self._index or a in table:
                        raise SchemaError(f"atom {a!r} collides with another name")
                    atoms.append(a)
                    table[a] = (i, li)
        self._atoms = tuple(atoms)
        self._atom_table = table
        self._numeric = tuple(f.name for f in self._features if f.kind == NUMERIC)

    # -- basic lookups -------------------------------------------------

    @property
    def features(self) -> tuple[Feature, ...]:
        return self._features

    @property
    def arity(self) -> int:
        return len(self._features)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise SchemaError(f"unknown feature {name!r}") from None

    def feature(self, name: str) -> Feature:
        return self._features[self.index(name)]

    @property
    def bool_atoms(self) -> tuple[str, ...]:
        """All boolean atom identifiers, in schema order (categoricals
        expand to one atom per level)."""
        return self._atoms

    def atom_ref(self, atom: str) -> tuple[int, int | None]:
        """Resolve an atom id to (feature index, level index or None)."""
        try:
            return self._atom_table[atom]
        except KeyError:
            raise SchemaError(f"unknown boolean atom {atom!r}") from None

    def has_atom(self, atom: str) -> bool:
        return atom in self._atom_table

    @property
    def numeric_features(self) -> tuple[str, ...]:
        return self._numeric

    def threshold_pool(self, name: str) -> tuple[float, ...]:
        f = self.feature(name)
        if f.kind != NUMERIC:
            raise SchemaError(f"{name!r} is not numeric")
        return f.thresholds

    # -- derived schemas -----------------------------------------------

    def with_extra_thresholds(self, extra: dict) -> "FeatureSchema":
        """New schema whose numeric pools are extended by ``extra``
        (mapping feature name -> iterable of thresholds)."""
        feats = []
        for f in self._features:
            if f.kind == NUMERIC and f.name in extra:
                pool = tuple(f.thresholds) + tuple(float(t) for t in extra[f.name])
                feats.append(Feature(f.name, f.kind, (), pool))
            else:
                feats.append(f)
        return FeatureSchema(feats)

    def with_levels(self, collected: dict) -> "FeatureSchema":
        """New schema with levels filled in for categorical features that
        declared none (mapping feature name -> sequence of levels)."""
        feats = []
        for f in self._features:
            if f.kind == CATEGORICAL and not f.levels and f.name in collected:
                feats.append(Feature(f.name, f.kind, tuple(collected[f.name]), ()))
            else:
                feats.append(f)
        return FeatureSchema(feats)

    # -- serialization ---------------------------------------------------

    def to_json_obj(self) -> dict:
        out = []
        for f in self._features:
            d: dict = {"name": f.name, "kind": f.kind}
            if f.kind == CATEGORICAL:
                d["levels"] = list(f.levels)
            if f.kind == NUMERIC and f.thresholds:
                d["thresholds"] = list(f.thresholds)
            out.append(d)
        return {"features": out}

    @staticmethod
    def from_json_obj(obj) -> "FeatureSchema":
        try:
            rows = obj["features"]
        except (TypeError, KeyError):
            raise SchemaError("schema JSON must be an object with a 'features' list")
        feats = []
        for row in rows:
            feats.append(
                Feature(
                    name=row["name"],
                    kind=row["kind"],
                    levels=tuple(row.get("levels", ())),
                    thresholds=tuple(row.get("thresholds", ())),
                )
            )
        return FeatureSchema(feats)

    @staticmethod
    def load(path) -> "FeatureSchema":
        with open(path, "r", encoding="utf-8") as fh:
            return FeatureSchema.from_json_obj(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_obj(), fh, indent=2)
            fh.write("\n")

    # -- value parsing ---------------------------------------------------

    def parse_value(self, name: str, raw) -> float:
        """Parse one raw cell (string or number) into the slot encoding:
        booleans to 0/1, categorical levels to their index, numerics to float."""
        f = self.feature(name)
        if f.kind == BOOLEAN:
            if isinstance(raw, bool):
                return float(raw)
            if isinstance(raw, (int, float)) and raw in (0, 1):
                return float(raw)
            word = str(raw).strip().lower()
            if word in _TRUE_WORDS:
                return 1.0
            if word in _FALSE_WORDS:
                return 0.0
            raise SchemaError(f"bad boolean value {raw!r} for {name!r}")
        if f.kind == CATEGORICAL:
            lv = str(raw)
            try:
                return float(f.levels.index(lv))
            except ValueError:
                raise SchemaError(f"unknown level {lv!r} for {name!r}") from None
        try:
            v = float(raw)
        except (TypeError, ValueError):
            raise SchemaError(f"bad numeric value {raw!r} for {name!r}") from None
        if not math.isfinite(v):
            raise SchemaError(f"non-finite value for {name!r}")
        return v

    def display_value(self, name: str, value: float):
        """Inverse of parse_value, for reports."""
        f = self.feature(name)
        if f.kind == BOOLEAN:
            return bool(value)
        if f.kind == CATEGORICAL:
            return f.levels[int(value)]
        return value

    # -- dunder ----------------------------------------------------------

    def __eq__(self, other):
        return isinstance(other, FeatureSchema) and self._features == other._features

    def __hash__(self):
        return hash(self._features)

    def __repr__(self):
        return f"FeatureSchema({', '.join(f.name for f in self._features)})"


@dataclass(frozen=True)
class Instance:
    """One dense value vector aligned with a schema.

    Boolean slots hold 0/1, categorical slots the level index, numeric
    slots the raw value.
    """

    schema: FeatureSchema
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != self.schema.arity:
            raise SchemaError(
                f"instance has {len(self.values)} values, schema arity is "
                f"{self.schema.arity}"
            )
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        for f, v in zip(self.schema.features, self.values):
            if f.kind == BOOLEAN and v not in (0.0, 1.0):
                raise SchemaError(f"boolean slot {f.name!r} must be 0 or 1, got {v}")
            if f.kind == CATEGORICAL:
                if v != int(v) or not (0 <= int(v) < len(f.levels)):
                    raise SchemaError(f"bad level index {v} for {f.name!r}")

    @classmethod
    def from_mapping(cls, schema: FeatureSchema, mapping) -> "Instance":
        missing = [f.name for f in schema.features if f.name not in mapping]
        if missing:
            raise SchemaError(f"missing values for {missing}")
        return cls(
            schema,
            tuple(schema.parse_value(f.name, mapping[f.name]) for f in schema.features),
        )

    def to_mapping(self) -> dict:
        return {
            f.name: self.schema.display_value(f.name, v)
            for f, v in zip(self.schema.features, self.values)
        }
