from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence
import logging

from src.metrics import NodeState, link_delay
from src.scenario import Link, ModelWeights, Task

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlacementRequest:
    """Everything a strategy may look at when placing the pending tasks."""
    pending: tuple[Task, ...]
    node_states: tuple[NodeState, ...]
    bandwidth_of: Callable[[str, str], Optional[float]]
    path_latency_of: Callable[[str, str], Optional[int]]
    weights: ModelWeights = field(default_factory=ModelWeights)
    now: int = 0
    # Network admission: links a user->node route crosses and their current load (ms)
    links_of: Optional[Callable[[str, str], Sequence[Link]]] = None
    link_load: Mapping[str, Fraction] = field(default_factory=dict)

    def reachable(self, task: Task, node_id: str) -> bool:
        return self.bandwidth_of(task.user, node_id) is not None

    def nearest_node(self, task: Task) -> Optional[str]:
        """Reachable node closest to the task's user, ties by node id."""
        candidates = [
            (self.path_latency_of(task.user, s.node.id), s.node.id)
            for s in self.node_states
            if self.reachable(task, s.node.id)
        ]
        return min(candidates)[1] if candidates else None


@dataclass(frozen=True)
class PlacementPlan:
    """Ordered task->node assignments and the tasks left unplaced."""
    assignments: tuple[tuple[str, str], ...] = ()
    unplaced: tuple[str, ...] = ()

    def node_of(self, task_id: str) -> Optional[str]:
        for assigned_id, node_id in self.assignments:
            if assigned_id == task_id:
                return node_id
        return None

    def to_dict(self) -> dict:
        return {
            "assignments": [{"task": t, "node": n} for t, n in self.assignments],
            "unplaced": list(self.unplaced),
        }


class PlanBuilder:
    """Tracks residuals and link loads while a strategy assigns tasks one by one."""

    def __init__(self, request: PlacementRequest):
        self.request = request
        self.states = {s.node.id: s for s in request.node_states}
        self.link_load = dict(request.link_load)
        self.assignments: list[tuple[str, str]] = []
        self.unplaced: list[str] = []
        self._placed: set[str] = set()

    def admits(self, task: Task, node_id: str) -> bool:
        """Task fits the node's residual, the node is reachable and no link overflows."""
        if not self.request.reachable(task, node_id):
            return False
        if not self.states[node_id].fits(task.demand):
            return False
        if self.request.links_of is None:
            return True
        for link in self.request.links_of(task.user, node_id):
            load = self.link_load.get(link.id, Fraction(0)) + link_delay(task, link)
            if load > Fraction(str(link.max_delay)):
                return False
        return True

    def assign(self, task: Task, node_id: str):
        assert task.id not in self._placed, f"task {task.id} is already provisioned"
        self.states[node_id] = self.states[node_id].allocate(task.demand)
        if self.request.links_of is not None:
            for link in self.request.links_of(task.user, node_id):
                self.link_load[link.id] = self.link_load.get(link.id, Fraction(0)) + link_delay(task, link)
        self.assignments.append((task.id, node_id))
        self._placed.add(task.id)

    def skip(self, task: Task):
        self.unplaced.append(task.id)

    def build(self) -> PlacementPlan:
        return PlacementPlan(assignments=tuple(self.assignments), unplaced=tuple(self.unplaced))


def replay(plan: PlacementPlan, request: PlacementRequest) -> dict[str, NodeState]:
    """
    Apply a plan in order against the request's residuals.

    Raises ValueError if a task is placed twice, a node would be overdrawn,
    or the plan does not partition the pending tasks.
    """
    tasks = {t.id: t for t in request.pending}
    states = {s.node.id: s for s in request.node_states}
    seen = set()
    for task_id, node_id in plan.assignments:
        if task_id in seen:
            raise ValueError(f"task {task_id} assigned twice")
        seen.add(task_id)
        task = tasks[task_id]
        if not states[node_id].fits(task.demand):
            raise ValueError(f"task {task_id} overdraws node {node_id}")
        states[node_id] = states[node_id].allocate(task.demand)
    if seen & set(plan.unplaced) or seen | set(plan.unplaced) != set(tasks) or len(plan.unplaced) != len(set(plan.unplaced)):
        raise ValueError("plan does not partition the pending tasks")
    return states


class BasePlacementStrategy(ABC):
    """Base class for all placement strategies."""

    name: str = "base"

    @abstractmethod
    def place(self, request: PlacementRequest) -> PlacementPlan:
        """
        Assign pending tasks to nodes.
        Must be implemented by subclasses.
        """
        pass

    def __call__(self, request: PlacementRequest) -> PlacementPlan:
        plan = self.place(request)
        if plan.assignments:
            logger.debug(
                f"{self.name}@{request.now}ms: placed {len(plan.assignments)}, "
                f"left {len(plan.unplaced)} pending"
            )
        return plan
