import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from config import (
    ARRIVAL_WINDOW,
    CONFIDENCE_LEVEL,
    DATA_SIZE_RANGE,
    DEADLINE_RANGE,
    PROCESSING_TIME_RANGE,
    STORAGE_RANGE,
    TASKS_PER_USER,
    WORKLOAD_LEVELS,
)
from src.scenario import ResourceVector, Scenario, Task, User, builtin_paper_topology, parse_scenario, serialize_scenario
from src.report import render_text_report
from src.simulator import CSV_COLUMNS, RunReport, label_run, simulate
from src.utils import apply_overrides, split_overrides

logger = logging.getLogger(__name__)

# Factor levels, first level coded -1, second +1
ALGORITHMS = ("tetris", "proximity")
WORKLOADS = ("low", "high")
CLOUD_LEVELS = ("on", "off")

FACTORS = ("Algorithm", "Workload", "Cloud")
# Main effects first, then two- and three-factor interactions
EFFECTS = tuple(
    combo for size in range(1, len(FACTORS) + 1) for combo in itertools.combinations(FACTORS, size)
)

RESPONSES = {
    "latency_violations": "Latency SLA Violations",
    "drop_violations": "Drop SLA Violations",
    "avg_latency_ms": "Average Latency (ms)",
    "power_w": "Power Consumption (W)",
}

GROUP_COLUMNS = ["strategy", "workload", "cloud"]


class ExperimentError(RuntimeError):
    """Raised after a factorial run in which some simulations failed."""

    def __init__(self, failures: list[tuple["FactorConfig", int, str]], reports: list[RunReport]):
        self.failures = failures
        self.reports = reports
        first = failures[0]
        super().__init__(
            f"{len(failures)} run(s) failed, first: {first[0].label} seed {first[1]}: {first[2]}"
        )


@dataclass(frozen=True)
class FactorConfig:
    """One cell of the 2^3 design."""
    algorithm: str
    workload: str
    cloud: str

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.workload not in WORKLOADS:
            raise ValueError(f"workload must be one of {WORKLOADS}")
        if self.cloud not in CLOUD_LEVELS:
            raise ValueError(f"cloud must be one of {CLOUD_LEVELS}")

    @classmethod
    def all_combinations(cls) -> list["FactorConfig"]:
        """The 8 cells, numbered Exp1..Exp8 in this order."""
        return [cls(*levels) for levels in itertools.product(ALGORITHMS, WORKLOADS, CLOUD_LEVELS)]

    @property
    def number(self) -> int:
        return FactorConfig.all_combinations().index(self) + 1

    @property
    def label(self) -> str:
        return f"Exp{self.number} ({self.algorithm}/{self.workload}/{self.cloud})"

    def coded(self) -> tuple[int, int, int]:
        return (
            -1 if self.algorithm == ALGORITHMS[0] else 1,
            -1 if self.workload == WORKLOADS[0] else 1,
            -1 if self.cloud == CLOUD_LEVELS[0] else 1,
        )


@dataclass(frozen=True)
class WorkloadSpec:
    """Ranges are inclusive (min, max). Times in ms, sizes in MB, data in megabits."""
    cpu_range: tuple[int, int]
    ram_range: tuple[int, int]
    tasks_per_user: int = TASKS_PER_USER
    deadline_range: tuple[int, int] = DEADLINE_RANGE
    data_size_range: tuple[float, float] = DATA_SIZE_RANGE
    arrival_window: tuple[int, int] = ARRIVAL_WINDOW
    processing_time_range: tuple[int, int] = PROCESSING_TIME_RANGE
    storage_range: tuple[int, int] = STORAGE_RANGE

    def __post_init__(self):
        ranges = {
            "cpu_range": self.cpu_range,
            "ram_range": self.ram_range,
            "deadline_range": self.deadline_range,
            "data_size_range": self.data_size_range,
            "arrival_window": self.arrival_window,
            "processing_time_range": self.processing_time_range,
            "storage_range": self.storage_range,
        }
        for name, (low, high) in ranges.items():
            if low > high:
                raise ValueError(f"{name}: min {low} exceeds max {high}")
            if low < 0:
                raise ValueError(f"{name}: values must be >= 0")
        if self.cpu_range[0] < 1:
            raise ValueError("cpu_range: tasks need at least one core")
        if self.deadline_range[0] < 1:
            raise ValueError("deadline_range: deadlines must be > 0")
        if self.tasks_per_user < 1:
            raise ValueError("tasks_per_user must be >= 1")

    @classmethod
    def level(cls, name: str, **overrides) -> "WorkloadSpec":
        """Workload level preset ('low' or 'high') with optional field overrides."""
        if name not in WORKLOAD_LEVELS:
            raise ValueError(f"unknown workload level '{name}'")
        fields = {k: tuple(v) for k, v in WORKLOAD_LEVELS[name].items()}
        fields.update(overrides)
        return cls(**fields)


def _draw(rng: np.random.Generator, bounds) -> int:
    return int(rng.integers(bounds[0], bounds[1], endpoint=True))


def generate_workload(spec: WorkloadSpec, users: Sequence[User], seed: int) -> list[Task]:
    """Draw `tasks_per_user` tasks per user, uniformly within the spec's ranges."""
    rng = np.random.default_rng(seed)
    low, high = spec.data_size_range
    tasks = []
    for user in users:
        for k in range(spec.tasks_per_user):
            demand = ResourceVector(
                cpu=_draw(rng, spec.cpu_range),
                ram=_draw(rng, spec.ram_range),
                storage=_draw(rng, spec.storage_range),
            )
            tasks.append(Task(
                id=f"{user.id}-app{k + 1}",
                user=user.id,
                demand=demand,
                processing_time=_draw(rng, spec.processing_time_range),
                data_size=round(float(rng.uniform(low, high)), 3),
                arrival=_draw(rng, spec.arrival_window),
                deadline=_draw(rng, spec.deadline_range),
            ))
    return tasks


@dataclass(frozen=True)
class ExperimentSetup:
    """Workload levels and scenario overrides shared by every run of a factorial."""
    workloads: dict = field(default_factory=lambda: {name: WorkloadSpec.level(name) for name in WORKLOADS})
    overrides: tuple[str, ...] = ()

    def scenario(self, combo: FactorConfig, seed: int) -> Scenario:
        base = builtin_paper_topology(cloud_enabled=combo.cloud == "on")
        if self.overrides:
            document = apply_overrides(serialize_scenario(base), self.overrides)
            base = parse_scenario(document, name=base.name)
        tasks = generate_workload(self.workloads[combo.workload], base.users, seed)
        return base.with_tasks(tasks)


def run_cell(setup: ExperimentSetup, combo: FactorConfig, seed: int) -> RunReport:
    """Simulate one replication of one design cell."""
    scenario = setup.scenario(combo, seed)
    return label_run(simulate(scenario, combo.algorithm, seed), combo.workload)


def _run_job(job):
    setup, combo, seed = job
    try:
        return combo, seed, run_cell(setup, combo, seed), None
    except Exception as e:
        return combo, seed, None, f"{type(e).__name__}: {e}"


def raw_frame(reports: Sequence[RunReport]) -> pd.DataFrame:
    """One row per run, in the canonical (cell, seed) order."""
    order = {(c.algorithm, c.workload, c.cloud): c.number for c in FactorConfig.all_combinations()}
    rows = sorted(
        (r.csv_row() for r in reports),
        key=lambda row: (order.get((row["strategy"], row["workload"], row["cloud"]), 0), row["seed"]),
    )
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


@dataclass(frozen=True)
class InfluenceResult:
    """Allocation of variation of one response variable, in percent."""
    response: str
    percentages: dict[str, float]
    sst: float
    no_variation: bool = False


@dataclass
class Summary:
    tables: dict[str, pd.DataFrame]
    per_experiment: pd.DataFrame
    qualitative: dict[str, dict[str, tuple[str, str]]]
    latency_reduction: float


@dataclass
class ExperimentReport:
    rows: pd.DataFrame
    summary: Summary
    influence: dict[str, InfluenceResult]
    replications: int


def _canonical(rows: pd.DataFrame) -> pd.DataFrame:
    return rows.sort_values(GROUP_COLUMNS + ["seed"], kind="mergesort").reset_index(drop=True)


def effect_name(effect: tuple[str, ...]) -> str:
    return " x ".join(effect)


def sign_table() -> tuple[list[FactorConfig], np.ndarray]:
    """Cells and their ±1 signs for every main effect and interaction."""
    cells = FactorConfig.all_combinations()
    columns = []
    for effect in EFFECTS:
        idx = [FACTORS.index(f) for f in effect]
        columns.append([math.prod(cell.coded()[i] for i in idx) for cell in cells])
    return cells, np.array(columns).T


def allocation_of_variation(rows: pd.DataFrame, response: str) -> InfluenceResult:
    """
    2^k·r allocation of variation for one response.

    Effects q_j come from cell means and the sign table, SS_j = 2^k·r·q_j²,
    SSE is the within-cell replication error and influence = SS / SST.
    """
    rows = _canonical(rows)
    cells, signs = sign_table()
    grouped = {key: group[response].to_numpy(dtype=float) for key, group in rows.groupby(GROUP_COLUMNS, sort=True)}
    samples = [grouped.get((c.algorithm, c.workload, c.cloud), np.array([])) for c in cells]
    sizes = {len(s) for s in samples}
    if len(sizes) != 1 or 0 in sizes:
        raise ValueError(f"allocation of variation needs a balanced design, got cell sizes {sorted(sizes)}")

    y = np.vstack(samples)
    n_cells, r = y.shape
    cell_means = y.mean(axis=1)
    effects = signs.T @ cell_means / n_cells
    ss_effects = n_cells * r * effects**2
    sse = float(np.sum((y - cell_means[:, np.newaxis]) ** 2))
    sst = float(np.sum((y - y.mean()) ** 2))

    names = [effect_name(e) for e in EFFECTS] + ["Error"]
    if sst <= 1e-12 * max(1.0, float(np.sum(y**2))):
        logger.info(f"{response}: no variation across runs")
        return InfluenceResult(response, {name: 0.0 for name in names}, 0.0, no_variation=True)

    values = list(ss_effects) + [sse]
    return InfluenceResult(response, {name: 100.0 * v / sst for name, v in zip(names, values)}, sst)


def confidence_half_width(std: float, n: int, confidence: float = CONFIDENCE_LEVEL) -> float:
    """Student-t half-width of the mean's confidence interval."""
    if n < 2:
        return float("nan")
    return float(stats.t.ppf((1 + confidence) / 2, n - 1) * std / np.sqrt(n))


def _describe(values: pd.Series) -> dict:
    n = int(values.count())
    std = float(values.std(ddof=1)) if n > 1 else 0.0
    return {
        "n": n,
        "mean": float(values.mean()),
        "std": std,
        "ci_half_width": confidence_half_width(std, n),
    }


def cell_statistics(rows: pd.DataFrame) -> pd.DataFrame:
    """Mean, sample std and 95% CI of every response for each design cell."""
    rows = _canonical(rows)
    records = []
    for cell in FactorConfig.all_combinations():
        subset = rows[
            (rows["strategy"] == cell.algorithm) & (rows["workload"] == cell.workload) & (rows["cloud"] == cell.cloud)
        ]
        if subset.empty:
            continue
        for response in RESPONSES:
            records.append({
                "experiment": cell.number,
                "strategy": cell.algorithm,
                "workload": cell.workload,
                "cloud": cell.cloud,
                "response": response,
                **_describe(subset[response]),
            })
    return pd.DataFrame(records)


def group_statistics(rows: pd.DataFrame, by: str, levels: Sequence[str]) -> pd.DataFrame:
    """Mean and std of every response per level of one factor column."""
    rows = _canonical(rows)
    records = []
    for response in RESPONSES:
        for level in levels:
            subset = rows.loc[rows[by] == level, response]
            if subset.empty:
                continue
            records.append({"group_by": by, "group": level, "response": response, **_describe(subset)})
    return pd.DataFrame(records)


def qualitative_label(mine: float, theirs: float) -> str:
    """Lower is better. Label how `mine` compares with `theirs`."""
    scale = max(abs(mine), abs(theirs))
    if scale == 0:
        return "Parity"
    gap = (theirs - mine) / scale
    size = abs(gap)
    if size < 0.05:
        return "Parity"
    word = "Better" if gap > 0 else "Worse"
    if size < 0.15:
        return f"Slightly {word}"
    if size < 0.6:
        return word
    return f"Much {word}"


def qualitative_comparison(table: pd.DataFrame, first: str, second: str) -> dict[str, tuple[str, str]]:
    """Per response: (label of `first`, label of `second`)."""
    result = {}
    for response in RESPONSES:
        means = table[table["response"] == response].set_index("group")["mean"]
        if first not in means or second not in means:
            continue
        a, b = float(means[first]), float(means[second])
        result[response] = (qualitative_label(a, b), qualitative_label(b, a))
    return result


def latency_violation_reduction(rows: pd.DataFrame) -> float:
    """Percent fewer latency violations under Tetris than under the baseline."""
    means = rows.groupby("strategy")["latency_violations"].mean()
    baseline = float(means.get("proximity", 0.0))
    if baseline == 0:
        return 0.0
    return 100.0 * (baseline - float(means.get("tetris", 0.0))) / baseline


def summarize(rows: pd.DataFrame) -> Summary:
    """Group raw rows by algorithm, architecture and workload, plus per-experiment cells."""
    rows = _canonical(rows)
    tables = {
        "algorithm": group_statistics(rows, "strategy", ALGORITHMS),
        "architecture": group_statistics(rows, "cloud", CLOUD_LEVELS),
        "workload": group_statistics(rows, "workload", WORKLOADS),
    }
    qualitative = {
        "algorithm": qualitative_comparison(tables["algorithm"], "tetris", "proximity"),
        "architecture": qualitative_comparison(tables["architecture"], "on", "off"),
    }
    return Summary(
        tables=tables,
        per_experiment=cell_statistics(rows),
        qualitative=qualitative,
        latency_reduction=latency_violation_reduction(rows),
    )


def run_factorial(
    replications: int,
    seeds: Sequence[int],
    setup: Optional[ExperimentSetup] = None,
    jobs: int = 1,
) -> ExperimentReport:
    """
    Run every design cell `replications` times and analyse the results.

    Replication i uses seeds[i] for every cell (common random numbers). Failed
    runs are logged and the remaining runs still execute; an ExperimentError
    listing the failing cells is raised at the end.
    """
    if replications < 2:
        raise ValueError("replications must be >= 2")
    if len(seeds) != replications:
        raise ValueError(f"expected {replications} seeds, got {len(seeds)}")
    setup = setup or ExperimentSetup()

    work = [(setup, combo, seed) for combo in FactorConfig.all_combinations() for seed in seeds]
    logger.info(f"Running {len(work)} simulations ({replications} replications x 8 cells, {jobs} job(s))")

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_job, work))
    else:
        results = [_run_job(job) for job in work]

    reports, failures = [], []
    for combo, seed, report, error in results:
        if error is not None:
            logger.error(f"{combo.label} seed {seed} failed: {error}")
            failures.append((combo, seed, error))
        else:
            reports.append(report)
    if failures:
        raise ExperimentError(failures, reports)

    rows = raw_frame(reports)
    return analyse(rows, replications)


def analyse(rows: pd.DataFrame, replications: int) -> ExperimentReport:
    """Summary tables and allocation of variation from raw rows."""
    influence = {response: allocation_of_variation(rows, response) for response in RESPONSES}
    return ExperimentReport(rows=rows, summary=summarize(rows), influence=influence, replications=replications)


def summary_frame(summary: Summary) -> pd.DataFrame:
    """All summary tables stacked into one long table."""
    grouped = pd.concat(list(summary.tables.values()), ignore_index=True)
    cells = summary.per_experiment.copy()
    cells.insert(0, "group_by", "experiment")
    cells.insert(1, "group", [
        f"Exp{n} {s}/{w}/{c}" for n, s, w, c in zip(cells["experiment"], cells["strategy"], cells["workload"], cells["cloud"])
    ])
    cells = cells.drop(columns=["experiment", "strategy", "workload", "cloud"])
    return pd.concat([grouped, cells], ignore_index=True)[["group_by", "group", "response", "n", "mean", "std", "ci_half_width"]]


def influence_frame(influence: dict[str, InfluenceResult]) -> pd.DataFrame:
    rows = [
        {"response": response, "effect": effect, "percent": value}
        for response, result in influence.items()
        for effect, value in result.percentages.items()
    ]
    return pd.DataFrame(rows, columns=["response", "effect", "percent"])


def write_experiment_outputs(report: ExperimentReport, output_dir) -> list[Path]:
    """Write raw.csv, summary.csv, influence.csv and report.txt."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "raw": output_dir / "raw.csv",
        "summary": output_dir / "summary.csv",
        "influence": output_dir / "influence.csv",
        "report": output_dir / "report.txt",
    }
    report.rows.to_csv(paths["raw"], index=False, float_format="%.6f")
    summary_frame(report.summary).to_csv(paths["summary"], index=False, float_format="%.6f")
    influence_frame(report.influence).to_csv(paths["influence"], index=False, float_format="%.6f")
    paths["report"].write_text(render_text_report(report))
    logger.info(f"Wrote experiment outputs to {output_dir}")
    return list(paths.values())


def setup_from_overrides(overrides: Sequence[str]) -> ExperimentSetup:
    """
    Split `--set` overrides into workload-level fields and scenario fields.

    'workload.high.tasks_per_user=8' changes the high workload level; every
    other override is applied to the evaluation topology document of each run.
    """
    workload_overrides, scenario_overrides = split_overrides(overrides, "workload")
    defaults = ExperimentSetup()
    document = {level: asdict(spec) for level, spec in defaults.workloads.items()}
    document = apply_overrides(document, workload_overrides)
    try:
        workloads = {
            level: WorkloadSpec(**{k: tuple(v) if isinstance(v, list) else v for k, v in fields.items()})
            for level, fields in document.items()
        }
    except TypeError as e:
        raise ValueError(f"bad workload override: {e}") from e
    return ExperimentSetup(workloads=workloads, overrides=tuple(scenario_overrides))
