import logging
from dataclasses import dataclass, field
from typing import Optional

import networkx as nx

from src.scenario import Link, Scenario, topology_graph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Route:
    """Path from a user's base station to a compute node."""
    hops: tuple[str, ...]
    links: tuple[Link, ...]
    path_latency: int
    effective_bandwidth: float  # Mbit/ms, inf when no link is traversed


@dataclass
class RouteTable:
    """Shortest-latency routes for every (user, compute node) pair."""
    routes: dict[tuple[str, str], Route] = field(default_factory=dict)
    unreachable: set[tuple[str, str]] = field(default_factory=set)

    def route(self, user_id: str, node_id: str) -> Optional[Route]:
        return self.routes.get((user_id, node_id))

    def reachable(self, user_id: str, node_id: str) -> bool:
        return (user_id, node_id) in self.routes

    def bandwidth(self, user_id: str, node_id: str) -> Optional[float]:
        route = self.route(user_id, node_id)
        return route.effective_bandwidth if route else None

    def latency(self, user_id: str, node_id: str) -> Optional[int]:
        route = self.route(user_id, node_id)
        return route.path_latency if route else None

    def nearest_node(self, user_id: str, node_ids) -> Optional[str]:
        """Reachable node with the smallest path latency, ties by node id."""
        candidates = [(self.latency(user_id, n), n) for n in node_ids if self.reachable(user_id, n)]
        return min(candidates)[1] if candidates else None


def _best_path(graph: nx.Graph, source: str, target: str) -> Optional[list[str]]:
    try:
        paths = nx.all_shortest_paths(graph, source, target, weight="latency")
        return min(paths)
    except nx.NetworkXNoPath:
        return None


def build_routes(scenario: Scenario) -> RouteTable:
    """
    Route every user to every active compute node.

    Paths minimise total latency; equal-latency paths are broken by the
    lexicographically smallest hop sequence. The effective bandwidth is the
    bottleneck link bandwidth, converted to Mbit/ms.
    """
    graph = topology_graph(scenario, include_cloud=scenario.cloud_enabled)
    table = RouteTable()

    for user in scenario.users:
        for node in scenario.active_nodes:
            key = (user.id, node.id)
            path = _best_path(graph, user.base_station, node.id)
            if path is None:
                table.unreachable.add(key)
                continue

            links = []
            latency = 0
            bandwidth = float("inf")
            for a, b in zip(path, path[1:]):
                edge = graph.edges[a, b]
                latency += edge["latency"]
                bandwidth = min(bandwidth, edge["bandwidth"])
                if edge["link"] is not None:
                    links.append(edge["link"])

            table.routes[key] = Route(
                hops=tuple(path),
                links=tuple(links),
                path_latency=latency,
                effective_bandwidth=bandwidth / 1000,
            )

    if table.unreachable:
        logger.warning(f"{len(table.unreachable)} user/node pairs are unreachable")
    logger.debug(f"Built {len(table.routes)} routes for scenario '{scenario.name}'")
    return table
