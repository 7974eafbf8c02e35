import json
import sys
from pathlib import Path

import pytest

from progex.cli import main

STUB = Path(__file__).parent / "stub_server.py"


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


FAST = [
    "--samples", "200", "--iterations", "1500", "--restarts", "2",
]


class TestExplain:
    def test_report_contract(self, fixtures, tmp_path, capsys):
        out = tmp_path / "report.json"
        code, text, _ = run(
            [
                "explain", "--data", str(fixtures / "income.csv"),
                "--schema", str(fixtures / "income.schema.json"),
                "--model", "tree", "--instance", "17", "--seed", "7",
                *FAST, "--json-out", str(out),
            ],
            capsys,
        )
        assert code == 0
        report = json.loads(out.read_text())
        assert report["node_count"] <= 7
        assert 0.0 <= report["score"] <= 1.0
        assert report["config"]["seed"] == 7
        assert report["program"]
        assert "weighted F1" in text

    def test_rerun_is_byte_identical(self, fixtures, tmp_path, capsys):
        args = [
            "explain", "--data", str(fixtures / "income.csv"),
            "--schema", str(fixtures / "income.schema.json"),
            "--model", "logistic", "--instance", "3", "--seed", "11", *FAST,
        ]
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run(args + ["--json-out", str(a)], capsys)[0] == 0
        assert run(args + ["--json-out", str(b)], capsys)[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_rerun_across_processes_is_byte_identical(self, fixtures, tmp_path):
        import subprocess

        outs = []
        for name in ("p1.json", "p2.json"):
            out = tmp_path / name
            proc = subprocess.run(
                [
                    sys.executable, "-m", "progex.cli",
                    "explain", "--data", str(fixtures / "income.csv"),
                    "--schema", str(fixtures / "income.schema.json"),
                    "--model", "tree", "--instance", "5", "--seed", "19",
                    *FAST, "--json-out", str(out),
                ],
                capture_output=True,
                text=True,
            )
            assert proc.returncode == 0, proc.stderr
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_remote_model_matches_in_process(self, fixtures, tmp_path, capsys):
        # the stub thresholds on feature 0 (Age) which both paths can see
        cmd = f"{sys.executable} {STUB} threshold0 5"
        base = [
            "--data", str(fixtures / "income.csv"),
            "--schema", str(fixtures / "income.schema.json"),
            "--instance", "4", "--seed", "5", *FAST,
        ]
        remote_out = tmp_path / "remote.json"
        code, _, err = run(
            ["explain", *base, "--model", "remote", "--cmd", cmd,
             "--json-out", str(remote_out)],
            capsys,
        )
        assert code == 0, err
        report = json.loads(remote_out.read_text())
        assert report["config"]["model"] == "remote"

    def test_dump_and_replay_reproduce_program(self, fixtures, tmp_path, capsys):
        dump = tmp_path / "batch.csv"
        first = tmp_path / "first.json"
        second = tmp_path / "second.json"
        base = [
            "explain", "--data", str(fixtures / "income.csv"),
            "--schema", str(fixtures / "income.schema.json"),
            "--model", "tree", "--instance", "2", "--seed", "3", *FAST,
        ]
        assert run(base + ["--dump-batch", str(dump), "--json-out", str(first)], capsys)[0] == 0
        assert run(base + ["--replay-batch", str(dump), "--json-out", str(second)], capsys)[0] == 0
        a = json.loads(first.read_text())
        b = json.loads(second.read_text())
        assert a["program"] == b["program"]
        assert a["score"] == b["score"]

    def test_report_dir_writes_figure_and_batch(self, fixtures, tmp_path, capsys):
        d = tmp_path / "out"
        code, _, _ = run(
            [
                "explain", "--data", str(fixtures / "income.csv"),
                "--schema", str(fixtures / "income.schema.json"),
                "--model", "tree", "--instance", "0", "--seed", "1", *FAST,
                "--report-dir", str(d),
            ],
            capsys,
        )
        assert code == 0
        assert (d / "report.json").exists()
        assert (d / "batch.csv").exists()
        assert (d / "trace.png").stat().st_size > 1000

    def test_bad_instance_is_single_line_error(self, fixtures, capsys):
        code, _, err = run(
            [
                "explain", "--data", str(fixtures / "income.csv"),
                "--schema", str(fixtures / "income.schema.json"),
                "--instance", "100000", *FAST,
            ],
            capsys,
        )
        assert code == 1
        assert err.startswith("error:")
        assert len(err.strip().splitlines()) == 1


class TestCompile:
    def test_tree_file(self, fixtures, capsys):
        code, text, _ = run(
            [
                "compile", "--schema", str(fixtures / "abcd.schema.json"),
                "--input", str(fixtures / "nested_tree.json"), "--kind", "tree",
            ],
            capsys,
        )
        assert code == 0
        assert text.strip() == "if A: (if B: D else: False)\nelse: not C"

    def test_linear_with_simplify(self, fixtures, capsys):
        code, text, _ = run(
            [
                "compile", "--schema", str(fixtures / "abcd.schema.json"),
                "--input", str(fixtures / "linear_ab.json"), "--kind", "linear",
                "--simplify",
            ],
            capsys,
        )
        assert code == 0
        assert text.strip() == "A or not B"

    def test_rule_set(self, fixtures, capsys):
        code, text, _ = run(
            [
                "compile", "--schema", str(fixtures / "health.schema.json"),
                "--input", str(fixtures / "triage_set.json"), "--kind", "rule-set",
                "--positive-class", "LungCancer",
            ],
            capsys,
        )
        assert code == 0
        assert "or" in text

    def test_rule_list(self, fixtures, capsys):
        code, text, _ = run(
            [
                "compile", "--schema", str(fixtures / "health.schema.json"),
                "--input", str(fixtures / "triage_list.json"), "--kind", "rule-list",
                "--positive-class", "Depression",
            ],
            capsys,
        )
        assert code == 0
        assert text.startswith("if ")
        assert "elif" in text

    def test_missing_file_errors(self, fixtures, capsys):
        code, _, err = run(
            [
                "compile", "--schema", str(fixtures / "abcd.schema.json"),
                "--input", "nope.json", "--kind", "tree",
            ],
            capsys,
        )
        assert code == 1 and err.startswith("error:")


class TestTrain:
    def test_writes_model_file(self, fixtures, tmp_path, capsys):
        out = tmp_path / "tree.json"
        code, text, _ = run(
            [
                "train", "--data", str(fixtures / "income.csv"),
                "--schema", str(fixtures / "income.schema.json"),
                "--model", "tree", "--out", str(out),
            ],
            capsys,
        )
        assert code == 0
        assert json.loads(out.read_text())["kind"] == "tree"
        assert "train accuracy" in text

    def test_explain_from_model_file(self, fixtures, tmp_path, capsys):
        out = tmp_path / "forest.json"
        assert run(
            [
                "train", "--data", str(fixtures / "income.csv"),
                "--schema", str(fixtures / "income.schema.json"),
                "--model", "forest", "--n-trees", "5", "--out", str(out),
            ],
            capsys,
        )[0] == 0
        code, text, _ = run(
            [
                "explain", "--data", str(fixtures / "income.csv"),
                "--schema", str(fixtures / "income.schema.json"),
                "--model", "forest", "--model-file", str(out),
                "--instance", "1", "--seed", "2", *FAST,
            ],
            capsys,
        )
        assert code == 0


class TestOracle:
    def test_exhaustive_on_boolean_fixture(self, fixtures, tmp_path, capsys):
        out = tmp_path / "oracle.json"
        code, text, _ = run(
            [
                "oracle", "--data", str(fixtures / "flags.csv"),
                "--schema", str(fixtures / "flags.schema.json"),
                "--model", "tree", "--instance", "0", "--samples", "300",
                "--max-nodes", "4", "--seed", "1", "--json-out", str(out),
            ],
            capsys,
        )
        assert code == 0
        report = json.loads(out.read_text())
        assert report["node_count"] <= 4
        assert report["config"]["search"] == "exhaustive"

    def test_space_guard_errors_cleanly(self, fixtures, capsys):
        code, _, err = run(
            [
                "oracle", "--data", str(fixtures / "income.csv"),
                "--schema", str(fixtures / "income.schema.json"),
                "--model", "tree", "--samples", "100", "--max-nodes", "7",
            ],
            capsys,
        )
        assert code == 1
        assert "search space" in err
