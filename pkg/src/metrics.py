"""Cost model formulas: task urgency, node capacity, timing, objective and constraints."""

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from src.scenario import ComputeNode, Link, ModelWeights, ResourceVector, Scenario, Task, Violation

RESOURCE_NAMES = ("cpu", "ram", "storage")


class MetricDomainError(ValueError):
    """Raised when a formula is evaluated outside its domain."""


@dataclass(frozen=True)
class NodeState:
    """A node together with its residual (free) capacity."""
    node: ComputeNode
    free: ResourceVector

    @classmethod
    def empty(cls, node: ComputeNode) -> "NodeState":
        return cls(node=node, free=node.capacity)

    @property
    def used(self) -> ResourceVector:
        return self.node.capacity - self.free

    def fits(self, demand: ResourceVector) -> bool:
        return demand <= self.free

    def allocate(self, demand: ResourceVector) -> "NodeState":
        return NodeState(self.node, self.free - demand)

    def release(self, demand: ResourceVector) -> "NodeState":
        return NodeState(self.node, self.free + demand)


@dataclass(frozen=True)
class TaskTiming:
    """
    Outcome of one task. `start`/`finish` are None for tasks that never started.

    `propagation` is the summed link latency of the route and `comm_delay` the
    transfer time ceil(δ/B), so finish = start + T + propagation + comm_delay.
    """
    start: Optional[int]
    finish: Optional[int]
    comm_delay: int
    violation: int
    dropped: bool
    energy: float
    node: Optional[str] = None
    propagation: int = 0

    def to_dict(self) -> dict:
        return {
            "start": self.start,
            "finish": self.finish,
            "propagation": self.propagation,
            "comm_delay": self.comm_delay,
            "violation": self.violation,
            "dropped": self.dropped,
            "energy": self.energy,
            "node": self.node,
        }


def _exact(value) -> Fraction:
    return Fraction(str(value))


def _check_bandwidth(effective_bandwidth: float):
    if not effective_bandwidth > 0:
        raise MetricDomainError(f"effective bandwidth must be > 0, got {effective_bandwidth}")


def transfer_time(data_size: float, effective_bandwidth: float) -> float:
    """δ_t / B_us in ms (bandwidth in Mbit/ms); zero over unbounded bandwidth."""
    _check_bandwidth(effective_bandwidth)
    if math.isinf(effective_bandwidth):
        return 0.0
    return data_size / effective_bandwidth


def comm_delay(task: Task, effective_bandwidth: float) -> int:
    """ceil(δ_t / B_us), computed on exact rationals."""
    _check_bandwidth(effective_bandwidth)
    if math.isinf(effective_bandwidth) or task.data_size == 0:
        return 0
    return math.ceil(_exact(task.data_size) / _exact(effective_bandwidth))


def phi(task: Task, effective_bandwidth: float, weights: ModelWeights) -> float:
    """Urgency score α·d_t + β·T_t + γ·δ_t/B_us; lower is more urgent."""
    return (
        weights.alpha * task.deadline
        + weights.beta * task.processing_time
        + weights.gamma_w * transfer_time(task.data_size, effective_bandwidth)
    )


def gamma_capacity(state: NodeState) -> float:
    """Geometric mean of the residual CPU, RAM and storage."""
    free = state.free.components()
    if any(c <= 0 for c in free):
        return 0.0
    return math.prod(float(c) for c in free) ** (1 / 3)


def finish_time(start: int, task: Task, effective_bandwidth: float, propagation: int = 0) -> int:
    """F_t = S_t + T_t + ceil(δ_t/B_us), plus any route propagation latency."""
    return start + task.processing_time + comm_delay(task, effective_bandwidth) + propagation


def deadline_violation(finish: int, task: Task) -> int:
    return max(0, finish - task.due)


def objective(ledger: Iterable[tuple[Task, TaskTiming]], weights: ModelWeights) -> float:
    """
    J = Σ λ_t·Δ_t + ω·(F_t − a_t) + ρ·D_t + η·E_t.

    Dropped tasks have no finish time, so only ρ and η accrue for them.
    """
    total = 0.0
    for task, timing in ledger:
        if timing.dropped:
            total += weights.rho + weights.eta * timing.energy
        else:
            total += (
                task.penalty * timing.violation
                + weights.omega * (timing.finish - task.arrival)
                + weights.eta * timing.energy
            )
    return total


def check_capacity(assignments: Mapping[str, Sequence[Task]], scenario: Scenario) -> list[Violation]:
    """Resource capacity constraint: summed demands per node must fit its capacity."""
    violations = []
    for node_id, tasks in assignments.items():
        node = scenario.node(node_id)
        total = sum((t.demand for t in tasks), ResourceVector())
        for name, used, capacity in zip(RESOURCE_NAMES, total.components(), node.capacity.components()):
            if used > capacity:
                violations.append(Violation(f"node {node_id}", f"{name} demand {used} exceeds capacity {capacity}"))
    return violations


def link_delay(task: Task, link: Link) -> Fraction:
    """Communication delay δ_t / B_vw a task puts on one link, in ms."""
    return _exact(task.data_size) / (_exact(link.bandwidth) / 1000)


def check_network(
    assignments: Mapping[str, Sequence[Task]],
    routes: Mapping[str, Sequence[Link]],
    scenario: Scenario,
) -> list[Violation]:
    """Network constraint: aggregated delay per link must not exceed its max_delay."""
    load = defaultdict(Fraction)
    links = {}
    for tasks in assignments.values():
        for task in tasks:
            for link in routes.get(task.id, ()):
                load[link.id] += link_delay(task, link)
                links[link.id] = link

    violations = []
    for link_id, delay in load.items():
        link = links[link_id]
        if delay > _exact(link.max_delay):
            violations.append(Violation(f"link {link_id}", f"aggregated delay {float(delay):g} ms exceeds {link.max_delay} ms"))
    return violations
