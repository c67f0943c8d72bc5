import logging

from .base import BasePlacementStrategy, PlacementPlan, PlacementRequest, PlanBuilder

logger = logging.getLogger(__name__)


class ProximityStrategy(BasePlacementStrategy):
    """
    Proximity-first baseline.
    Serves tasks in arrival order and puts each on the closest node that can
    host it, minimising delivery delay at the cost of fragmenting servers.
    """

    name = "proximity"

    def place(self, request: PlacementRequest) -> PlacementPlan:
        builder = PlanBuilder(request)

        for task in sorted(request.pending, key=lambda t: (t.arrival, t.id)):
            candidates = [
                (request.path_latency_of(task.user, node_id), node_id)
                for node_id in builder.states
                if builder.admits(task, node_id)
            ]
            if candidates:
                builder.assign(task, min(candidates)[1])
            else:
                builder.skip(task)

        return builder.build()


def proximity_place(request: PlacementRequest) -> PlacementPlan:
    return ProximityStrategy().place(request)
