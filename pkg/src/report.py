import logging
import math
from typing import Sequence

from src.simulator import RunReport

logger = logging.getLogger(__name__)

SEPARATOR = "──────────────────"

RESPONSE_TITLES = {
    "latency_violations": "Latency SLA Violations",
    "drop_violations": "Drop SLA Violations",
    "avg_latency_ms": "Average Latency (ms)",
    "power_w": "Power Consumption (W)",
}

GROUP_TITLES = {
    "algorithm": ("Algorithms performance", {"tetris": "Tetris", "proximity": "Proximity"}),
    "architecture": ("Architecture performance", {"on": "Edge-Cloud", "off": "Edge-Only"}),
    "workload": ("Workload performance", {"low": "Low", "high": "High"}),
}


def _number(value: float) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "N/D"
    return f"{value:.2f}"


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(cell)) for cell in column) for column in zip(header, *rows)]
    lines = ["  ".join(str(cell).ljust(w) for cell, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(str(cell).ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def render_run(report: RunReport) -> str:
    """The four response variables of one run, plus delivery counts."""
    text = f"Run | {report.strategy} on {report.scenario} (seed {report.seed})\n"
    text += SEPARATOR + "\n"
    text += f"latency violations: {report.latency_sla_violations}\n"
    text += f"drops: {report.drop_sla_violations}\n"
    text += f"average latency: {report.average_latency:.2f} ms\n"
    text += f"power: {report.power_consumption:.2f} W\n"
    text += f"delivered: {report.delivered}/{len(report.ledger)}\n"
    return text


def _outcome(report: RunReport) -> str:
    dropped = sorted(task_id for task_id, timing in report.ledger.items() if timing.dropped)
    return f"drops: {len(dropped)}" + (f" ({', '.join(dropped)})" if dropped else "")


def render_toy(tetris: RunReport, proximity: RunReport) -> str:
    """Side-by-side placement of the toy scenario under both strategies."""
    task_ids = list(tetris.ledger)
    rows = []
    for task_id in task_ids:
        row = [task_id]
        for report in (tetris, proximity):
            timing = report.ledger[task_id]
            if timing.dropped:
                row.append("dropped")
            else:
                row.append(f"{timing.node} [{timing.start}-{timing.finish} ms]")
        rows.append(row)

    text = f"Toy example | {tetris.scenario}\n{SEPARATOR}\n"
    text += _table(["task", "tetris", "proximity"], rows)
    text += f"\ntetris:    {_outcome(tetris)}\n"
    text += f"proximity: {_outcome(proximity)}\n"
    return text


def _format_group_table(key: str, table, qualitative: dict) -> str:
    title, names = GROUP_TITLES[key]
    levels = [level for level in names if level in set(table["group"])]
    header = ["Response"] + [names[level] for level in levels]
    rows = []
    for response, response_title in RESPONSE_TITLES.items():
        subset = table[table["response"] == response].set_index("group")
        rows.append([response_title] + [
            f"{_number(subset.loc[level, 'mean'])} ± {_number(subset.loc[level, 'std'])}" for level in levels
        ])
    text = f"{title} (mean ± std)\n" + _table(header, rows)

    if key in qualitative:
        rows = [
            [RESPONSE_TITLES[response], first, second]
            for response, (first, second) in qualitative[key].items()
        ]
        text += "\n" + _table(["Response"] + [names[level] for level in levels], rows)
    return text


def _format_experiments(cells) -> str:
    header = ["Exp", "Algorithm", "Workload", "Cloud"] + list(RESPONSE_TITLES.values())
    rows = []
    for number in sorted(set(cells["experiment"])):
        subset = cells[cells["experiment"] == number].set_index("response")
        first = subset.iloc[0]
        row = [f"Exp{number}", first["strategy"], first["workload"], first["cloud"]]
        for response in RESPONSE_TITLES:
            row.append(f"{_number(subset.loc[response, 'mean'])} ± {_number(subset.loc[response, 'ci_half_width'])}")
        rows.append(row)
    return "Per-experiment results (mean ± 95% CI half-width)\n" + _table(header, rows)


def _format_influence(influence: dict) -> str:
    responses = list(influence)
    effects = list(next(iter(influence.values())).percentages)
    header = ["Effect"] + [RESPONSE_TITLES.get(r, r) for r in responses]
    rows = [
        [effect] + [f"{influence[r].percentages[effect]:.2f}%" for r in responses]
        for effect in effects
    ]
    text = "Influence of each factor (allocation of variation)\n" + _table(header, rows)
    flat = [RESPONSE_TITLES.get(r, r) for r in responses if influence[r].no_variation]
    if flat:
        text += f"no variation: {', '.join(flat)}\n"
    return text


def render_text_report(report) -> str:
    """Plain-text rendering of a factorial experiment: summary, per-experiment and influence tables."""
    summary = report.summary
    sections = [
        f"Factorial experiment | 2^3 design, {report.replications} replications, {len(report.rows)} runs\n{SEPARATOR}\n",
    ]
    for key in ("algorithm", "architecture", "workload"):
        sections.append(_format_group_table(key, summary.tables[key], summary.qualitative))
    sections.append(
        f"Latency SLA violation reduction (Tetris vs Proximity): {summary.latency_reduction:.1f}%\n"
    )
    sections.append(_format_experiments(summary.per_experiment))
    sections.append(_format_influence(report.influence))
    return "\n".join(sections)
