import itertools
import logging
from typing import Optional

from config import OPTIMAL_MAX_NODES, OPTIMAL_MAX_TASKS
from src.metrics import comm_delay, deadline_violation

from .base import BasePlacementStrategy, PlacementPlan, PlacementRequest, PlanBuilder

logger = logging.getLogger(__name__)


class InstanceTooLargeError(ValueError):
    """Raised when the exhaustive oracle is asked to solve more than it can enumerate."""


class OptimalStrategy(BasePlacementStrategy):
    """
    Exhaustive oracle for desk-sized instances.

    Enumerates every task -> (node or drop) assignment that respects the
    capacity and network constraints, and keeps the one with the fewest
    drops, then the lowest objective. Every task starts at `now`. Among equal
    scores the first assignment in lexicographic order (tasks by id, nodes by
    id, drop last) wins.
    """

    name = "optimal"

    def __init__(self, max_tasks: int = OPTIMAL_MAX_TASKS, max_nodes: int = OPTIMAL_MAX_NODES):
        self.max_tasks = max_tasks
        self.max_nodes = max_nodes

    def _task_cost(self, request: PlacementRequest, task, node_id: str) -> float:
        finish = (
            request.now
            + task.processing_time
            + comm_delay(task, request.bandwidth_of(task.user, node_id))
            + request.path_latency_of(task.user, node_id)
        )
        return task.penalty * deadline_violation(finish, task) + request.weights.omega * (finish - task.arrival)

    def place(self, request: PlacementRequest) -> PlacementPlan:
        if len(request.pending) > self.max_tasks or len(request.node_states) > self.max_nodes:
            raise InstanceTooLargeError(
                f"optimal placement supports at most {self.max_tasks} tasks and {self.max_nodes} nodes, "
                f"got {len(request.pending)} tasks and {len(request.node_states)} nodes"
            )

        tasks = sorted(request.pending, key=lambda t: t.id)
        node_ids = sorted(s.node.id for s in request.node_states)
        options = [
            [n for n in node_ids if request.reachable(task, n)] + [None]
            for task in tasks
        ]
        costs = {
            (task.id, n): self._task_cost(request, task, n)
            for task, opts in zip(tasks, options)
            for n in opts if n is not None
        }

        best: Optional[tuple] = None
        best_choice = None
        for choice in itertools.product(*options):
            drops = choice.count(None)
            if best is not None and drops > best[0]:
                continue
            if not self._feasible(request, tasks, choice):
                continue
            cost = request.weights.rho * drops + sum(
                costs[(task.id, n)] for task, n in zip(tasks, choice) if n is not None
            )
            score = (drops, cost)
            if best is None or score < best:
                best = score
                best_choice = choice

        builder = PlanBuilder(request)
        for task, node_id in zip(tasks, best_choice or [None] * len(tasks)):
            if node_id is None:
                builder.skip(task)
            else:
                builder.assign(task, node_id)

        if best is not None:
            logger.debug(f"optimal: {best[0]} drops, objective {best[1]:.3f}")
        return builder.build()

    def _feasible(self, request: PlacementRequest, tasks, choice) -> bool:
        builder = PlanBuilder(request)
        for task, node_id in zip(tasks, choice):
            if node_id is None:
                continue
            if not builder.admits(task, node_id):
                return False
            builder.assign(task, node_id)
        return True


def optimal_place(request: PlacementRequest) -> PlacementPlan:
    return OptimalStrategy().place(request)
