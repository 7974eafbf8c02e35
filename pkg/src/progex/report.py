"""Explanation reports: text, deterministic JSON, and trace figures."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .anneal import ExplanationResult
from .schema import Instance
from .syntax import render_block


@dataclass
class ExplanationReport:
    """Everything a reader needs to interpret and reproduce one result.

    The JSON rendering excludes timing so reruns are byte-identical.
    """

    program: str
    program_block: str
    score: float
    energy: float
    node_count: int
    anchor_index: int
    anchor: dict
    anchor_label: bool
    positive_means: str
    config: dict
    chain_id: int
    iterations_used: int
    timing_seconds: float = 0.0


def build_report(
    result: ExplanationResult,
    anchor: Instance,
    anchor_label: bool,
    anchor_index: int,
    positive_means: str,
    config: dict,
    timing_seconds: float = 0.0,
) -> ExplanationReport:
    from .syntax import pretty_print

    return ExplanationReport(
        program=pretty_print(result.program),
        program_block=render_block(result.program),
        score=float(result.score),
        energy=float(result.energy),
        node_count=result.node_count,
        anchor_index=anchor_index,
        anchor=anchor.to_mapping(),
        anchor_label=bool(anchor_label),
        positive_means=positive_means,
        config=dict(config),
        chain_id=result.chain_id,
        iterations_used=result.iterations_used,
        timing_seconds=timing_seconds,
    )


def report_json_bytes(report: ExplanationReport) -> bytes:
    obj = {
        "program": report.program,
        "program_block": report.program_block,
        "score": report.score,
        "energy": report.energy,
        "node_count": report.node_count,
        "anchor_index": report.anchor_index,
        "anchor": report.anchor,
        "anchor_label": int(report.anchor_label),
        "positive_means": report.positive_means,
        "config": report.config,
        "chain_id": report.chain_id,
        "iterations_used": report.iterations_used,
    }
    return (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode("utf-8")


def report_text(report: ExplanationReport) -> str:
    lines = [
        f"anchor #{report.anchor_index}: "
        + ", ".join(f"{k}={v}" for k, v in report.anchor.items()),
        f"black-box label: {int(report.anchor_label)}  ({report.positive_means})",
        "",
        report.program_block,
        "",
        f"weighted F1 {report.score:.4f} | energy {report.energy:.4f} | "
        f"{report.node_count} nodes | chain {report.chain_id} | "
        f"{report.iterations_used} iterations | {report.timing_seconds:.2f}s",
        "config: " + ", ".join(f"{k}={v}" for k, v in sorted(report.config.items())),
    ]
    return "\n".join(lines)


def render_trace_figure(result: ExplanationResult, path) -> None:
    """Best-energy-so-far per chain, written as an image file."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4))
    if result.chains:
        for chain in result.chains:
            steps = [s for s, _ in chain.trace] + [chain.iterations_used]
            energies = [e for _, e in chain.trace] + [chain.best_energy]
            ax.step(steps, energies, where="post", label=f"chain {chain.chain_id}")
        ax.legend(fontsize=8, ncol=2)
    else:
        ax.axhline(result.energy, color="C0")
    ax.set_xlabel("iteration")
    ax.set_ylabel("best energy")
    ax.set_title(f"best program: {result.score:.3f} weighted F1, {result.node_count} nodes")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
