import math

import numpy as np
import pandas as pd
import pytest

from src.experiment import (
    EFFECTS,
    RESPONSES,
    ExperimentError,
    ExperimentSetup,
    FactorConfig,
    WorkloadSpec,
    allocation_of_variation,
    analyse,
    confidence_half_width,
    effect_name,
    generate_workload,
    latency_violation_reduction,
    qualitative_label,
    run_factorial,
    setup_from_overrides,
    summarize,
    write_experiment_outputs,
    _describe,
)
from src.scenario import builtin_paper_topology

EFFECT_NAMES = [effect_name(e) for e in EFFECTS]


def synthetic_rows(value_of, replications=3):
    """Raw rows for every design cell; `value_of(cell, replication)` gives every response."""
    rows = []
    for cell in FactorConfig.all_combinations():
        for seed in range(replications):
            value = float(value_of(cell, seed))
            rows.append({
                "scenario": "synthetic",
                "strategy": cell.algorithm,
                "workload": cell.workload,
                "cloud": cell.cloud,
                "seed": seed,
                **{response: value for response in RESPONSES},
            })
    return pd.DataFrame(rows)


def small_setup(tasks_per_user=2, overrides=()):
    return ExperimentSetup(
        workloads={name: WorkloadSpec.level(name, tasks_per_user=tasks_per_user) for name in ("low", "high")},
        overrides=tuple(overrides),
    )


# design

def test_cells_are_numbered_in_canonical_order():
    labels = [(c.number, c.algorithm, c.workload, c.cloud) for c in FactorConfig.all_combinations()]
    assert labels == [
        (1, "tetris", "low", "on"),
        (2, "tetris", "low", "off"),
        (3, "tetris", "high", "on"),
        (4, "tetris", "high", "off"),
        (5, "proximity", "low", "on"),
        (6, "proximity", "low", "off"),
        (7, "proximity", "high", "on"),
        (8, "proximity", "high", "off"),
    ]
    assert FactorConfig("tetris", "low", "on").coded() == (-1, -1, -1)
    assert FactorConfig("proximity", "high", "off").coded() == (1, 1, 1)


def test_unknown_level_is_rejected():
    with pytest.raises(ValueError):
        FactorConfig("random", "low", "on")


def test_effect_names():
    assert EFFECT_NAMES == [
        "Algorithm", "Workload", "Cloud",
        "Algorithm x Workload", "Algorithm x Cloud", "Workload x Cloud",
        "Algorithm x Workload x Cloud",
    ]


# workload generation

def test_workload_respects_ranges():
    users = builtin_paper_topology().users
    spec = WorkloadSpec.level("low")
    tasks = generate_workload(spec, users, seed=1)
    assert len(tasks) == len(users) * spec.tasks_per_user
    assert len({t.id for t in tasks}) == len(tasks)
    for task in tasks:
        assert spec.cpu_range[0] <= task.demand.cpu <= spec.cpu_range[1]
        assert spec.ram_range[0] <= task.demand.ram <= spec.ram_range[1]
        assert spec.storage_range[0] <= task.demand.storage <= spec.storage_range[1]
        assert spec.deadline_range[0] <= task.deadline <= spec.deadline_range[1]
        assert spec.arrival_window[0] <= task.arrival <= spec.arrival_window[1]
        assert spec.processing_time_range[0] <= task.processing_time <= spec.processing_time_range[1]
        assert spec.data_size_range[0] <= task.data_size <= spec.data_size_range[1]
        assert task.data_size == round(task.data_size, 3)


def test_workload_is_seeded():
    users = builtin_paper_topology().users
    spec = WorkloadSpec.level("high")
    assert generate_workload(spec, users, 5) == generate_workload(spec, users, 5)
    assert generate_workload(spec, users, 5) != generate_workload(spec, users, 6)


def test_high_workload_asks_for_more():
    users = builtin_paper_topology().users
    low = generate_workload(WorkloadSpec.level("low"), users, 0)
    high = generate_workload(WorkloadSpec.level("high"), users, 0)
    assert sum(t.demand.cpu for t in high) > sum(t.demand.cpu for t in low)


def test_workload_spec_validation():
    with pytest.raises(ValueError):
        WorkloadSpec(cpu_range=(4, 2), ram_range=(1, 2))
    with pytest.raises(ValueError):
        WorkloadSpec(cpu_range=(0, 2), ram_range=(1, 2))
    with pytest.raises(ValueError):
        WorkloadSpec.level("extreme")


def test_setup_builds_each_cell_scenario():
    setup = small_setup(overrides=["weights.rho=50"])
    scenario = setup.scenario(FactorConfig("tetris", "high", "off"), seed=2)
    assert not scenario.cloud_enabled
    assert len(scenario.active_nodes) == 6
    assert len(scenario.tasks) == 12
    assert scenario.weights.rho == 50


# allocation of variation

def test_single_effect_takes_all_variation():
    rows = synthetic_rows(lambda cell, seed: 10.0 if cell.algorithm == "proximity" else 0.0)
    result = allocation_of_variation(rows, "latency_violations")
    assert result.percentages["Algorithm"] == pytest.approx(100.0)
    assert sum(result.percentages.values()) == pytest.approx(100.0)
    assert result.percentages["Error"] == pytest.approx(0.0, abs=1e-9)


def test_interaction_is_attributed_to_interaction():
    rows = synthetic_rows(lambda cell, seed: math.prod(cell.coded()[:2]))
    result = allocation_of_variation(rows, "power_w")
    assert result.percentages["Algorithm x Workload"] == pytest.approx(100.0)


def test_influence_sums_to_one_hundred_with_noise():
    rng = np.random.default_rng(0)
    noise = rng.normal(size=(8, 4))
    cells = FactorConfig.all_combinations()

    def value_of(cell, seed):
        a, w, c = cell.coded()
        return 5 + 3 * a - 2 * w + c + 0.5 * a * c + noise[cells.index(cell), seed]

    result = allocation_of_variation(synthetic_rows(value_of, replications=4), "avg_latency_ms")
    assert sum(result.percentages.values()) == pytest.approx(100.0)
    assert all(value >= 0 for value in result.percentages.values())
    assert result.percentages["Algorithm"] > result.percentages["Cloud"]


def test_constant_response_has_no_variation():
    result = allocation_of_variation(synthetic_rows(lambda cell, seed: 0.0), "drop_violations")
    assert result.no_variation
    assert set(result.percentages.values()) == {0.0}


def test_influence_is_order_and_shift_invariant():
    rng = np.random.default_rng(1)
    values = rng.normal(size=(8, 3))
    cells = FactorConfig.all_combinations()
    rows = synthetic_rows(lambda cell, seed: values[cells.index(cell), seed])
    base = allocation_of_variation(rows, "latency_violations").percentages

    shuffled = rows.sample(frac=1.0, random_state=3)
    assert allocation_of_variation(shuffled, "latency_violations").percentages == pytest.approx(base)

    shifted = rows.assign(latency_violations=rows["latency_violations"] + 1000.0)
    assert allocation_of_variation(shifted, "latency_violations").percentages == pytest.approx(base)


def test_unbalanced_design_is_rejected():
    rows = synthetic_rows(lambda cell, seed: seed).iloc[1:]
    with pytest.raises(ValueError):
        allocation_of_variation(rows, "latency_violations")


# summaries

def test_describe_uses_sample_std():
    stats = _describe(pd.Series([1.0, 2.0, 3.0]))
    assert stats["n"] == 3
    assert stats["mean"] == 2.0
    assert stats["std"] == pytest.approx(1.0)
    # t(0.975, 2) = 4.302652729749464
    assert stats["ci_half_width"] == pytest.approx(4.302652729749464 / math.sqrt(3), rel=1e-9)


def test_confidence_needs_two_samples():
    assert math.isnan(confidence_half_width(1.0, 1))


@pytest.mark.parametrize("mine, theirs, label", [
    (10, 10, "Parity"),
    (0, 0, "Parity"),
    (9.7, 10, "Parity"),
    (9, 10, "Slightly Better"),
    (10, 9, "Slightly Worse"),
    (5, 10, "Better"),
    (10, 5, "Worse"),
    (1, 10, "Much Better"),
    (10, 1, "Much Worse"),
])
def test_qualitative_label(mine, theirs, label):
    assert qualitative_label(mine, theirs) == label


def test_latency_violation_reduction():
    rows = synthetic_rows(lambda cell, seed: 5.0 if cell.algorithm == "tetris" else 10.0)
    assert latency_violation_reduction(rows) == pytest.approx(50.0)
    flat = synthetic_rows(lambda cell, seed: 0.0)
    assert latency_violation_reduction(flat) == 0.0


def test_summary_tables():
    rows = synthetic_rows(lambda cell, seed: 2.0 if cell.cloud == "on" else 4.0)
    summary = summarize(rows)
    architecture = summary.tables["architecture"]
    means = architecture[architecture["response"] == "avg_latency_ms"].set_index("group")["mean"]
    assert means.to_dict() == {"on": 2.0, "off": 4.0}
    assert summary.qualitative["architecture"]["avg_latency_ms"] == ("Better", "Worse")
    assert summary.qualitative["algorithm"]["avg_latency_ms"] == ("Parity", "Parity")
    assert sorted(set(summary.per_experiment["experiment"])) == list(range(1, 9))
    assert len(summary.per_experiment) == 8 * len(RESPONSES)


def test_outputs_are_written(tmp_path):
    report = analyse(synthetic_rows(lambda cell, seed: seed + cell.number), replications=3)
    paths = write_experiment_outputs(report, tmp_path)
    assert [p.name for p in paths] == ["raw.csv", "summary.csv", "influence.csv", "report.txt"]
    assert len(pd.read_csv(tmp_path / "raw.csv")) == 24
    influence = pd.read_csv(tmp_path / "influence.csv")
    assert len(influence) == len(RESPONSES) * (len(EFFECTS) + 1)
    text = (tmp_path / "report.txt").read_text()
    assert "Latency SLA violation reduction" in text
    assert "Exp8" in text


# factorial runs

def test_small_factorial_runs_every_cell():
    report = run_factorial(2, [11, 12], setup=small_setup())
    rows = report.rows
    assert len(rows) == 16
    assert list(rows["seed"][:2]) == [11, 12]
    assert (rows.iloc[0]["strategy"], rows.iloc[0]["workload"], rows.iloc[0]["cloud"]) == ("tetris", "low", "on")
    assert (rows.iloc[-1]["strategy"], rows.iloc[-1]["workload"], rows.iloc[-1]["cloud"]) == ("proximity", "high", "off")
    assert set(report.influence) == set(RESPONSES)


def test_factorial_argument_checks():
    with pytest.raises(ValueError):
        run_factorial(1, [0])
    with pytest.raises(ValueError):
        run_factorial(2, [0, 1, 2])


def test_failed_runs_raise_after_the_sweep():
    with pytest.raises(ExperimentError) as excinfo:
        run_factorial(2, [0, 1], setup=small_setup(overrides=["horizon_ms=0"]))
    assert len(excinfo.value.failures) == 16
    assert excinfo.value.reports == []


def test_setup_from_overrides():
    setup = setup_from_overrides(["workload.high.tasks_per_user=3", "workload.low.deadline_range=[20, 100]", "weights.rho=50"])
    assert setup.workloads["high"].tasks_per_user == 3
    assert setup.workloads["low"].deadline_range == (20, 100)
    assert setup.workloads["low"].tasks_per_user == WorkloadSpec.level("low").tasks_per_user
    assert setup.overrides == ("weights.rho=50",)


def test_bad_workload_override():
    with pytest.raises(ValueError):
        setup_from_overrides(["workload.high.bogus=1"])
    with pytest.raises(ValueError):
        setup_from_overrides(["workload.high.cpu_range=[9, 1]"])
