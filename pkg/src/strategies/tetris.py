import logging

from src.metrics import gamma_capacity, phi

from .base import BasePlacementStrategy, PlacementPlan, PlacementRequest, PlanBuilder

logger = logging.getLogger(__name__)


class TetrisStrategy(BasePlacementStrategy):
    """
    SLA-aware placement.

    Tasks are queued by ascending φ(t), most urgent first. For each task the
    nodes are re-ranked by ascending γ(v) over their current residuals and
    the task goes to the first node it fits, so the least spacious node that
    can still take it fills up first.
    """

    name = "tetris"

    def sla_score(self, request: PlacementRequest, task) -> float:
        """φ(t) using the bandwidth towards the user's nearest node."""
        nearest = request.nearest_node(task)
        if nearest is None:
            return float("inf")
        return phi(task, request.bandwidth_of(task.user, nearest), request.weights)

    def place(self, request: PlacementRequest) -> PlacementPlan:
        builder = PlanBuilder(request)
        queue = sorted(request.pending, key=lambda t: (self.sla_score(request, t), t.id))

        for task in queue:
            ranked = sorted(builder.states.values(), key=lambda s: (gamma_capacity(s), s.node.id))
            for state in ranked:
                if builder.admits(task, state.node.id):
                    builder.assign(task, state.node.id)
                    break
            else:
                builder.skip(task)

        return builder.build()


def tetris_place(request: PlacementRequest) -> PlacementPlan:
    return TetrisStrategy().place(request)
