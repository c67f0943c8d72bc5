import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Union

import pandas as pd

from src.metrics import (
    MetricDomainError,
    NodeState,
    TaskTiming,
    comm_delay,
    deadline_violation,
    finish_time,
    link_delay,
    objective,
)
from src.routing import build_routes
from src.scenario import ComputeNode, Scenario, ScenarioValidationError, Task, validate
from src.strategies import BasePlacementStrategy, PlacementRequest, get_strategy

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "scenario",
    "strategy",
    "workload",
    "cloud",
    "seed",
    "latency_violations",
    "drop_violations",
    "avg_latency_ms",
    "power_w",
    "energy_j",
    "objective",
]


@dataclass(frozen=True)
class RunReport:
    """Response variables of one simulation run plus the per-task ledger."""
    scenario: str
    strategy: str
    seed: int
    latency_sla_violations: int
    drop_sla_violations: int
    average_latency: float
    power_consumption: float
    energy: float
    objective: float
    ledger: dict[str, TaskTiming] = field(default_factory=dict)
    workload: str = "-"
    cloud: str = "on"

    @property
    def delivered(self) -> int:
        return sum(1 for t in self.ledger.values() if not t.dropped)

    def csv_row(self) -> dict:
        return {
            "scenario": self.scenario,
            "strategy": self.strategy,
            "workload": self.workload,
            "cloud": self.cloud,
            "seed": self.seed,
            "latency_violations": self.latency_sla_violations,
            "drop_violations": self.drop_sla_violations,
            "avg_latency_ms": self.average_latency,
            "power_w": self.power_consumption,
            "energy_j": self.energy,
            "objective": self.objective,
        }

    def to_dict(self) -> dict:
        data = self.csv_row()
        data["ledger"] = {task_id: timing.to_dict() for task_id, timing in self.ledger.items()}
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def ledger_frame(report: RunReport) -> pd.DataFrame:
    """Per-task ledger as a table, one row per task."""
    rows = [{"task": task_id, **timing.to_dict()} for task_id, timing in report.ledger.items()]
    return pd.DataFrame(rows, columns=["task", "node", "start", "finish", "propagation", "comm_delay", "violation", "dropped", "energy"])


def power_draw(node: ComputeNode, cpu_in_use: float) -> float:
    """Linear power model between idle and full CPU utilisation, in watts."""
    if not 0 <= cpu_in_use <= node.capacity.cpu:
        raise MetricDomainError(f"cpu in use {cpu_in_use} outside [0, {node.capacity.cpu}] on {node.id}")
    utilization = cpu_in_use / node.capacity.cpu
    return node.power_idle + (node.power_max - node.power_idle) * utilization


@dataclass
class _Resident:
    task: Task
    node_id: str
    start: int
    finish: int
    propagation: int
    comm: int
    links: tuple


def simulate(scenario: Scenario, strategy: Union[str, BasePlacementStrategy], seed: int = 0) -> RunReport:
    """
    Run one deterministic simulation in 1 ms steps from 0 to the horizon.

    At each step finished tasks release their resources, new arrivals join the
    pending set, the strategy places what it can, and node power is integrated.
    Tasks still pending or in flight at the horizon are dropped. `seed` only
    labels the run: workloads are drawn upstream and the engine is deterministic.
    """
    violations = validate(scenario)
    if violations:
        raise ScenarioValidationError(violations)
    placer = get_strategy(strategy) if isinstance(strategy, str) else strategy

    routes = build_routes(scenario)
    nodes = scenario.active_nodes
    states = {n.id: NodeState.empty(n) for n in nodes}
    arrivals = defaultdict(list)
    for task in sorted(scenario.tasks, key=lambda t: (t.arrival, t.id)):
        arrivals[task.arrival].append(task)

    def links_of(user_id: str, node_id: str):
        return routes.route(user_id, node_id).links

    pending: dict[str, Task] = {}
    resident: dict[str, _Resident] = {}
    link_load: dict[str, Fraction] = defaultdict(Fraction)
    task_energy: dict[str, float] = defaultdict(float)
    timings: dict[str, TaskTiming] = {}
    total_energy = 0.0

    def release(entry: _Resident):
        states[entry.node_id] = states[entry.node_id].release(entry.task.demand)
        for link in entry.links:
            link_load[link.id] -= link_delay(entry.task, link)
        timings[entry.task.id] = TaskTiming(
            start=entry.start,
            finish=entry.finish,
            propagation=entry.propagation,
            comm_delay=entry.comm,
            violation=deadline_violation(entry.finish, entry.task),
            dropped=False,
            energy=task_energy[entry.task.id],
            node=entry.node_id,
        )
        del resident[entry.task.id]

    dirty = False
    for now in range(scenario.horizon + 1):
        # 1. Deliver tasks finishing now
        finished = sorted(tid for tid, r in resident.items() if r.finish == now)
        for task_id in finished:
            release(resident[task_id])
        dirty = dirty or bool(finished)
        if now == scenario.horizon:
            break

        # 2. Arrivals join the pending set
        for task in arrivals.pop(now, []):
            pending[task.id] = task
            dirty = True

        # 3. Offer pending tasks; residuals only change on arrival or release
        if pending and dirty:
            request = PlacementRequest(
                pending=tuple(pending.values()),
                node_states=tuple(states[n.id] for n in nodes),
                bandwidth_of=routes.bandwidth,
                path_latency_of=routes.latency,
                weights=scenario.weights,
                now=now,
                links_of=links_of,
                link_load=dict(link_load),
            )
            plan = placer(request)
            for task_id, node_id in plan.assignments:
                task = pending.pop(task_id)
                route = routes.route(task.user, node_id)
                comm = comm_delay(task, route.effective_bandwidth)
                finish = finish_time(now, task, route.effective_bandwidth, route.path_latency)
                entry = _Resident(task, node_id, now, finish, route.path_latency, comm, route.links)
                resident[task_id] = entry
                states[node_id] = states[node_id].allocate(task.demand)
                for link in route.links:
                    link_load[link.id] += link_delay(task, link)
                if entry.finish == now:
                    release(entry)
        dirty = False

        assert all(s.free.is_nonnegative() for s in states.values()), f"capacity overdrawn at {now} ms"

        # 4. Integrate power over [now, now + 1)
        for node in nodes:
            used_cpu = node.capacity.cpu - states[node.id].free.cpu
            total_energy += power_draw(node, used_cpu) / 1000
        for entry in resident.values():
            node = states[entry.node_id].node
            share = entry.task.demand.cpu / node.capacity.cpu
            task_energy[entry.task.id] += (node.power_max - node.power_idle) * share / 1000

    # Whatever is still waiting or running at the horizon is dropped
    for entry in resident.values():
        timings[entry.task.id] = TaskTiming(
            start=entry.start, finish=None, comm_delay=entry.comm, violation=0, dropped=True,
            energy=task_energy[entry.task.id], node=entry.node_id, propagation=entry.propagation,
        )
    for task in scenario.tasks:
        if task.id not in timings:
            timings[task.id] = TaskTiming(
                start=None, finish=None, comm_delay=0, violation=0, dropped=True, energy=0.0,
            )

    ledger = {task.id: timings[task.id] for task in scenario.tasks}
    delivered = [(task, ledger[task.id]) for task in scenario.tasks if not ledger[task.id].dropped]
    latencies = [timing.finish - task.arrival for task, timing in delivered]

    report = RunReport(
        scenario=scenario.name,
        strategy=placer.name,
        seed=seed,
        latency_sla_violations=sum(1 for _, timing in delivered if timing.violation > 0),
        drop_sla_violations=len(scenario.tasks) - len(delivered),
        average_latency=sum(latencies) / len(latencies) if latencies else 0.0,
        power_consumption=total_energy / (scenario.horizon / 1000),
        energy=total_energy,
        objective=objective(((task, ledger[task.id]) for task in scenario.tasks), scenario.weights),
        ledger=ledger,
        cloud="on" if scenario.cloud_enabled else "off",
    )
    logger.info(
        f"{report.strategy} on '{scenario.name}': {report.latency_sla_violations} latency violations, "
        f"{report.drop_sla_violations} drops, avg latency {report.average_latency:.1f} ms"
    )
    return report


def label_run(report: RunReport, workload: str) -> RunReport:
    """Attach the workload level a run was generated with."""
    return replace(report, workload=workload)
