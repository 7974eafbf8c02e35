#!/usr/bin/env python3
"""Regenerate the bundled test fixtures (deterministic).

Run from the repo root:  python3 scripts/make_fixtures.py
"""

import csv
import json
from pathlib import Path

import numpy as np

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def make_income(n=800, seed=20240601):
    rng = np.random.default_rng(seed)
    age = rng.integers(17, 91, n)
    hours = np.clip(np.round(rng.normal(41, 11, n)), 1, 99).astype(int)
    has_gain = rng.random(n) < 0.22
    capgain = np.where(has_gain, np.round(rng.exponential(2800, n)).astype(int) + 1, 0)
    education = rng.choice(
        ["HS", "Bachelors", "Masters", "Doctorate"], n, p=[0.45, 0.35, 0.15, 0.05]
    )
    married = rng.random(n) < np.clip((age - 17) / 90.0 + 0.25, 0.2, 0.85)

    z = (
        -3.6
        + 2.9 * (capgain > 600)
        + 1.9 * married
        + 1.2 * (hours > 42)
        + 0.9 * (age > 31)
        + 0.9 * np.isin(education, ["Masters", "Doctorate"])
    )
    income = rng.random(n) < sigmoid(z)

    rows = []
    for i in range(n):
        rows.append(
            [
                int(age[i]),
                int(hours[i]),
                int(capgain[i]),
                education[i],
                int(married[i]),
                ">50K" if income[i] else "<=50K",
            ]
        )
    # a light sprinkle of missing cells exercises imputation and row drops
    rows[37][3] = "?"
    rows[101][1] = ""
    rows[213][3] = "?"
    rows[444][0] = "?"
    rows[599][5] = ""

    with open(FIXTURES / "income.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["Age", "HoursPerWeek", "CapitalGain", "Education", "Married", "income"])
        w.writerows(rows)

    schema = {
        "features": [
            {"name": "Age", "kind": "numeric", "thresholds": [30, 40, 50, 65]},
            {"name": "HoursPerWeek", "kind": "numeric", "thresholds": [35, 40, 45]},
            {"name": "CapitalGain", "kind": "numeric", "thresholds": [0, 600, 3000]},
            {
                "name": "Education",
                "kind": "categorical",
                "levels": ["HS", "Bachelors", "Masters", "Doctorate"],
            },
            {"name": "Married", "kind": "boolean"},
        ],
        "target": {"name": "income", "positive": ">50K"},
    }
    with open(FIXTURES / "income.schema.json", "w") as fh:
        json.dump(schema, fh, indent=2)
        fh.write("\n")


def make_flags(n=160, seed=99):
    """Small all-boolean dataset labeled by one conjunction, for oracle runs."""
    rng = np.random.default_rng(seed)
    X = (rng.random((n, 4)) < 0.5).astype(int)
    y = (X[:, 0] == 1) & (X[:, 1] == 0)
    with open(FIXTURES / "flags.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["A", "B", "C", "D", "hit"])
        for row, label in zip(X, y):
            w.writerow(list(row) + [int(label)])
    schema = {
        "features": [{"name": c, "kind": "boolean"} for c in "ABCD"],
        "target": {"name": "hit", "positive": "1"},
    }
    with open(FIXTURES / "flags.schema.json", "w") as fh:
        json.dump(schema, fh, indent=2)
        fh.write("\n")


def make_representations():
    abcd = {"features": [{"name": c, "kind": "boolean"} for c in "ABCD"]}
    with open(FIXTURES / "abcd.schema.json", "w") as fh:
        json.dump(abcd, fh, indent=2)
        fh.write("\n")

    # depth-3 tree whose compiled program is a nested conditional
    tree = {
        "feature": "A",
        "true": {
            "feature": "B",
            "true": {
                "feature": "D",
                "true": {"label": True},
                "false": {"label": False},
            },
            "false": {"label": False},
        },
        "false": {
            "feature": "C",
            "true": {"label": False},
            "false": {"label": True},
        },
    }
    with open(FIXTURES / "nested_tree.json", "w") as fh:
        json.dump(tree, fh, indent=2)
        fh.write("\n")

    linear = {"weights": {"A": 10, "B": -9}, "bias": 2}
    with open(FIXTURES / "linear_ab.json", "w") as fh:
        json.dump(linear, fh, indent=2)
        fh.write("\n")

    health = {
        "features": [
            {"name": "RespIllness", "kind": "boolean"},
            {"name": "Smoker", "kind": "boolean"},
            {"name": "RiskDepression", "kind": "boolean"},
            {"name": "Headaches", "kind": "boolean"},
            {"name": "Dizziness", "kind": "boolean"},
            {"name": "DispTiredness", "kind": "boolean"},
            {"name": "Age", "kind": "numeric", "thresholds": [50, 60]},
            {"name": "BMI", "kind": "numeric", "thresholds": [0.2, 0.3]},
            {"name": "DocVisits", "kind": "numeric", "thresholds": [0.3, 0.4]},
        ]
    }
    with open(FIXTURES / "health.schema.json", "w") as fh:
        json.dump(health, fh, indent=2)
        fh.write("\n")

    rule_list = {
        "rules": [
            {"if": ["RespIllness", "Smoker", "Age>49"], "then": "LungCancer"},
            {"if": ["RiskDepression"], "then": "Depression"},
            {"if": ["BMI>0.2", "Age>59"], "then": "Diabetes"},
            {"if": ["Headaches", "Dizziness"], "then": "Depression"},
            {"if": ["DocVisits>0.3", "DispTiredness"], "then": "Depression"},
        ],
        "default": "Diabetes",
    }
    with open(FIXTURES / "triage_list.json", "w") as fh:
        json.dump(rule_list, fh, indent=2)
        fh.write("\n")

    rule_set = {
        "rules": [
            {"if": ["RespIllness", "Smoker", "Age>49"], "then": "LungCancer"},
            {"if": ["Smoker", "BMI>0.2", "Age>59"], "then": "LungCancer"},
            {"if": ["RiskDepression", "Headaches"], "then": "Depression"},
        ]
    }
    with open(FIXTURES / "triage_set.json", "w") as fh:
        json.dump(rule_set, fh, indent=2)
        fh.write("\n")

    mini = "Age,Married,label\n39,1,1\n25,0,0\n61,1,1\n"
    (FIXTURES / "mini.csv").write_text(mini)
    mini_schema = {
        "features": [
            {"name": "Age", "kind": "numeric"},
            {"name": "Married", "kind": "boolean"},
        ],
        "target": {"name": "label", "positive": "1"},
    }
    with open(FIXTURES / "mini.schema.json", "w") as fh:
        json.dump(mini_schema, fh, indent=2)
        fh.write("\n")


if __name__ == "__main__":
    FIXTURES.mkdir(parents=True, exist_ok=True)
    make_income()
    make_flags()
    make_representations()
    print(f"fixtures written to {FIXTURES}")
