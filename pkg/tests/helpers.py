"""Small builders shared by the test modules."""

from src.metrics import NodeState
from src.routing import build_routes
from src.scenario import ComputeNode, ModelWeights, ResourceVector, Task
from src.strategies import PlacementRequest


def make_task(task_id, cpu=1, ram=1, storage=0, *, user="u1", processing_time=5,
              data_size=0, arrival=0, deadline=20, penalty=1.0) -> Task:
    return Task(
        id=task_id,
        user=user,
        demand=ResourceVector(cpu, ram, storage),
        processing_time=processing_time,
        data_size=data_size,
        arrival=arrival,
        deadline=deadline,
        penalty=penalty,
    )


def make_node(node_id, cpu=4, ram=4, storage=1, *, tier="edge", site=None,
              power_idle=90.0, power_max=180.0) -> ComputeNode:
    return ComputeNode(
        id=node_id,
        tier=tier,
        capacity=ResourceVector(cpu, ram, storage),
        power_idle=power_idle,
        power_max=power_max,
        site=site,
    )


def make_request(tasks, nodes, *, latency=None, bandwidth=float("inf"), unreachable=(),
                 weights=None, now=0) -> PlacementRequest:
    """
    Request over bare nodes. `latency` maps (user, node) to ms (default 0),
    `bandwidth` is the same for every reachable pair, in Mbit/ms.
    """
    latency = latency or {}
    blocked = set(unreachable)

    def bandwidth_of(user_id, node_id):
        return None if (user_id, node_id) in blocked else bandwidth

    def path_latency_of(user_id, node_id):
        return None if (user_id, node_id) in blocked else latency.get((user_id, node_id), 0)

    return PlacementRequest(
        pending=tuple(tasks),
        node_states=tuple(NodeState.empty(n) for n in nodes),
        bandwidth_of=bandwidth_of,
        path_latency_of=path_latency_of,
        weights=weights or ModelWeights(),
        now=now,
    )


def scenario_request(scenario, now=0) -> PlacementRequest:
    """Request for every task of a scenario against empty nodes, routed like the engine does."""
    routes = build_routes(scenario)
    return PlacementRequest(
        pending=tuple(scenario.tasks),
        node_states=tuple(NodeState.empty(n) for n in scenario.active_nodes),
        bandwidth_of=routes.bandwidth,
        path_latency_of=routes.latency,
        weights=scenario.weights,
        now=now,
        links_of=lambda user_id, node_id: routes.route(user_id, node_id).links,
    )
