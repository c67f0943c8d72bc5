import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import networkx as nx

from config import (
    CLOUD_CAPACITY,
    CLOUD_LINK_BANDWIDTH,
    CLOUD_LINK_LATENCY,
    CLOUD_POWER_IDLE,
    CLOUD_POWER_MAX,
    DEFAULT_ALPHA,
    DEFAULT_BETA,
    DEFAULT_ETA,
    DEFAULT_GAMMA_W,
    DEFAULT_HORIZON_MS,
    DEFAULT_OMEGA,
    DEFAULT_PENALTY,
    DEFAULT_RHO,
    EDGE_CAPACITIES,
    EDGE_LINK_BANDWIDTH,
    EDGE_LINK_LATENCY,
    EDGE_POWER_IDLE,
    EDGE_POWER_MAX,
    EDGE_SITES,
    UNCONSTRAINED_MAX_DELAY,
    USER_BASE_STATIONS,
)

logger = logging.getLogger(__name__)

TIERS = ("edge", "cloud")
ELEMENT_KINDS = ("switch", "base_station")
TOP_LEVEL_KEYS = {
    "name", "nodes", "elements", "links", "users", "tasks",
    "weights", "horizon_ms", "cloud_enabled",
}


class ScenarioParseError(ValueError):
    """Raised when a scenario document cannot be read or decoded."""


class ScenarioValidationError(ValueError):
    """Raised when a scenario breaks one or more structural invariants."""

    def __init__(self, violations: list["Violation"]):
        self.violations = violations
        first = violations[0] if violations else "unknown violation"
        super().__init__(f"invalid scenario ({len(violations)} violations), first: {first}")


@dataclass(frozen=True)
class Violation:
    """A broken rule, attributed to the entity that broke it."""
    entity: str
    rule: str

    def __str__(self) -> str:
        return f"{self.entity}: {self.rule}"


@dataclass(frozen=True)
class ResourceVector:
    """CPU cores, RAM (MB) and storage (MB)."""
    cpu: int = 0
    ram: int = 0
    storage: int = 0

    def __le__(self, other: "ResourceVector") -> bool:
        return self.cpu <= other.cpu and self.ram <= other.ram and self.storage <= other.storage

    def __add__(self, other: "ResourceVector") -> "ResourceVector":
        return ResourceVector(self.cpu + other.cpu, self.ram + other.ram, self.storage + other.storage)

    def __sub__(self, other: "ResourceVector") -> "ResourceVector":
        return ResourceVector(self.cpu - other.cpu, self.ram - other.ram, self.storage - other.storage)

    def components(self) -> tuple[int, int, int]:
        return (self.cpu, self.ram, self.storage)

    def is_nonnegative(self) -> bool:
        return all(c >= 0 for c in self.components())

    def is_positive(self) -> bool:
        return all(c > 0 for c in self.components())

    def is_zero(self) -> bool:
        return not any(self.components())

    def to_dict(self) -> dict:
        return {"cpu": self.cpu, "ram": self.ram, "storage": self.storage}

    @classmethod
    def from_dict(cls, data: dict) -> "ResourceVector":
        _reject_unknown(data, {"cpu", "ram", "storage"}, "resource vector")
        return cls(**{key: _integer(data.get(key, 0), key) for key in ("cpu", "ram", "storage")})


@dataclass(frozen=True)
class ComputeNode:
    """A server of the continuum. `site` co-locates it with a network element."""
    id: str
    tier: str
    capacity: ResourceVector
    power_idle: float
    power_max: float
    site: Optional[str] = None

    @property
    def is_cloud(self) -> bool:
        return self.tier == "cloud"

    def to_dict(self) -> dict:
        data = {
            "id": self.id,
            "tier": self.tier,
            "capacity": self.capacity.to_dict(),
            "power_idle": self.power_idle,
            "power_max": self.power_max,
        }
        if self.site is not None:
            data["site"] = self.site
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ComputeNode":
        _reject_unknown(data, {"id", "tier", "capacity", "power_idle", "power_max", "site"}, "node")
        tier = _text(data.get("tier", "edge"), "tier")
        site = data.get("site")
        return cls(
            id=_text(data["id"], "node id"),
            tier=tier,
            capacity=ResourceVector.from_dict(data["capacity"]),
            power_idle=_number(data.get("power_idle", CLOUD_POWER_IDLE if tier == "cloud" else EDGE_POWER_IDLE), "power_idle"),
            power_max=_number(data.get("power_max", CLOUD_POWER_MAX if tier == "cloud" else EDGE_POWER_MAX), "power_max"),
            site=None if site is None else _text(site, "site"),
        )


@dataclass(frozen=True)
class NetworkElement:
    id: str
    kind: str

    def to_dict(self) -> dict:
        return {"id": self.id, "kind": self.kind}

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkElement":
        _reject_unknown(data, {"id", "kind"}, "element")
        return cls(id=_text(data["id"], "element id"), kind=_text(data["kind"], "kind"))


@dataclass(frozen=True)
class Link:
    """Undirected link. Bandwidth in Mbit/s, latency and max_delay in ms."""
    endpoint_a: str
    endpoint_b: str
    bandwidth: float = EDGE_LINK_BANDWIDTH
    latency: int = EDGE_LINK_LATENCY
    max_delay: float = UNCONSTRAINED_MAX_DELAY

    @property
    def id(self) -> str:
        return f"{self.endpoint_a}--{self.endpoint_b}"

    @property
    def bandwidth_per_ms(self) -> float:
        """Bandwidth in Mbit/ms, the unit the formulas use."""
        return self.bandwidth / 1000

    def to_dict(self) -> dict:
        return {
            "endpoint_a": self.endpoint_a,
            "endpoint_b": self.endpoint_b,
            "bandwidth": self.bandwidth,
            "latency": self.latency,
            "max_delay": self.max_delay,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Link":
        _reject_unknown(data, {"endpoint_a", "endpoint_b", "bandwidth", "latency", "max_delay"}, "link")
        return cls(
            endpoint_a=_text(data["endpoint_a"], "endpoint_a"),
            endpoint_b=_text(data["endpoint_b"], "endpoint_b"),
            bandwidth=_number(data.get("bandwidth", EDGE_LINK_BANDWIDTH), "bandwidth"),
            latency=_integer(data.get("latency", EDGE_LINK_LATENCY), "latency"),
            max_delay=_number(data.get("max_delay", UNCONSTRAINED_MAX_DELAY), "max_delay"),
        )


@dataclass(frozen=True)
class User:
    id: str
    base_station: str

    def to_dict(self) -> dict:
        return {"id": self.id, "base_station": self.base_station}

    @classmethod
    def from_dict(cls, data: dict) -> "User":
        _reject_unknown(data, {"id", "base_station"}, "user")
        return cls(id=_text(data["id"], "user id"), base_station=_text(data["base_station"], "base_station"))


@dataclass(frozen=True)
class Task:
    """One user's application request. Times are integer ms, data size in megabits."""
    id: str
    user: str
    demand: ResourceVector
    processing_time: int
    data_size: float
    arrival: int
    deadline: int
    penalty: float = DEFAULT_PENALTY

    @property
    def due(self) -> int:
        """Absolute deadline a_t + d_t."""
        return self.arrival + self.deadline

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "user": self.user,
            "demand": self.demand.to_dict(),
            "processing_time": self.processing_time,
            "data_size": self.data_size,
            "arrival": self.arrival,
            "deadline": self.deadline,
            "penalty": self.penalty,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Task":
        _reject_unknown(
            data,
            {"id", "user", "demand", "processing_time", "data_size", "arrival", "deadline", "penalty"},
            "task",
        )
        return cls(
            id=_text(data["id"], "task id"),
            user=_text(data["user"], "user"),
            demand=ResourceVector.from_dict(data["demand"]),
            processing_time=_integer(data.get("processing_time", 0), "processing_time"),
            data_size=_number(data.get("data_size", 0), "data_size"),
            arrival=_integer(data.get("arrival", 0), "arrival"),
            deadline=_integer(data["deadline"], "deadline"),
            penalty=_number(data.get("penalty", DEFAULT_PENALTY), "penalty"),
        )


@dataclass(frozen=True)
class ModelWeights:
    """Weights of φ(t) (alpha, beta, gamma_w) and of the objective (omega, rho, eta)."""
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    gamma_w: float = DEFAULT_GAMMA_W
    omega: float = DEFAULT_OMEGA
    rho: float = DEFAULT_RHO
    eta: float = DEFAULT_ETA

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma_w": self.gamma_w,
            "omega": self.omega,
            "rho": self.rho,
            "eta": self.eta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelWeights":
        _reject_unknown(data, set(cls().to_dict()), "weights")
        return cls(**{key: _number(value, key) for key, value in data.items()})


@dataclass(frozen=True)
class Scenario:
    """The full static world a simulation runs against."""
    nodes: tuple[ComputeNode, ...]
    elements: tuple[NetworkElement, ...]
    links: tuple[Link, ...]
    users: tuple[User, ...]
    tasks: tuple[Task, ...] = ()
    weights: ModelWeights = field(default_factory=ModelWeights)
    horizon: int = DEFAULT_HORIZON_MS
    cloud_enabled: bool = True
    name: str = "scenario"

    @property
    def active_nodes(self) -> tuple[ComputeNode, ...]:
        """Nodes the engine may use: cloud tier only when cloud is enabled."""
        if self.cloud_enabled:
            return self.nodes
        return tuple(n for n in self.nodes if not n.is_cloud)

    def node(self, node_id: str) -> ComputeNode:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise KeyError(node_id)

    def user(self, user_id: str) -> User:
        for user in self.users:
            if user.id == user_id:
                return user
        raise KeyError(user_id)

    def with_tasks(self, tasks) -> "Scenario":
        return replace(self, tasks=tuple(tasks))

    def to_dict(self) -> dict:
        return serialize_scenario(self)


def _reject_unknown(data: dict, allowed: set, what: str):
    if not isinstance(data, dict):
        raise ScenarioParseError(f"{what} must be an object, got {type(data).__name__}")
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ScenarioParseError(f"unknown key(s) in {what}: {', '.join(unknown)}")


# Field readers: JSON booleans are not numbers here, and integer fields take no fractions

def _integer(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioParseError(f"{what} must be an integer, got {value!r}")
    return value


def _number(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioParseError(f"{what} must be a number, got {value!r}")
    return value


def _text(value, what: str) -> str:
    if not isinstance(value, str):
        raise ScenarioParseError(f"{what} must be a string, got {value!r}")
    return value


def _flag(value, what: str) -> bool:
    if not isinstance(value, bool):
        raise ScenarioParseError(f"{what} must be true or false, got {value!r}")
    return value


def serialize_scenario(scenario: Scenario) -> dict:
    """Convert a scenario into the JSON document layout read by `parse_scenario`."""
    return {
        "name": scenario.name,
        "nodes": [n.to_dict() for n in scenario.nodes],
        "elements": [e.to_dict() for e in scenario.elements],
        "links": [l.to_dict() for l in scenario.links],
        "users": [u.to_dict() for u in scenario.users],
        "tasks": [t.to_dict() for t in scenario.tasks],
        "weights": scenario.weights.to_dict(),
        "horizon_ms": scenario.horizon,
        "cloud_enabled": scenario.cloud_enabled,
    }


def parse_scenario(document: dict, name: str = "scenario") -> Scenario:
    """Build a Scenario from a decoded document, without validating it."""
    _reject_unknown(document, TOP_LEVEL_KEYS, "scenario")
    try:
        return Scenario(
            nodes=tuple(ComputeNode.from_dict(n) for n in document.get("nodes", [])),
            elements=tuple(NetworkElement.from_dict(e) for e in document.get("elements", [])),
            links=tuple(Link.from_dict(l) for l in document.get("links", [])),
            users=tuple(User.from_dict(u) for u in document.get("users", [])),
            tasks=tuple(Task.from_dict(t) for t in document.get("tasks", [])),
            weights=ModelWeights.from_dict(document.get("weights", {})),
            horizon=_integer(document.get("horizon_ms", DEFAULT_HORIZON_MS), "horizon_ms"),
            cloud_enabled=_flag(document.get("cloud_enabled", True), "cloud_enabled"),
            name=_text(document.get("name", name), "name"),
        )
    except KeyError as e:
        raise ScenarioParseError(f"missing required field {e}") from e
    except TypeError as e:
        raise ScenarioParseError(f"malformed field: {e}") from e


def read_scenario_document(path) -> dict:
    """Read the raw JSON document of a scenario file."""
    path = Path(path)
    try:
        with open(path, "r") as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"{path}: not valid JSON ({e})") from e
    except OSError as e:
        raise ScenarioParseError(f"{path}: cannot read file ({e})") from e
    if not isinstance(document, dict):
        raise ScenarioParseError(f"{path}: top level must be an object")
    return document


def load_scenario(path) -> Scenario:
    """Load and validate a scenario file."""
    path = Path(path)
    scenario = parse_scenario(read_scenario_document(path), name=path.stem)
    violations = validate(scenario)
    if violations:
        raise ScenarioValidationError(violations)
    logger.info(
        f"Loaded scenario '{scenario.name}': {len(scenario.nodes)} nodes, "
        f"{len(scenario.links)} links, {len(scenario.tasks)} tasks"
    )
    return scenario


def save_scenario(scenario: Scenario, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(serialize_scenario(scenario), f, indent=2)


def topology_graph(scenario: Scenario, include_cloud: bool = True) -> nx.Graph:
    """
    Undirected graph over elements and compute nodes.

    Link edges carry `latency`, `bandwidth` (Mbit/s) and the `link` itself.
    A node with a site is attached to it by a zero-latency edge with
    `link=None` and unbounded bandwidth.
    """
    graph = nx.Graph()
    nodes = scenario.nodes if include_cloud else tuple(n for n in scenario.nodes if not n.is_cloud)
    node_ids = {n.id for n in nodes}
    dropped = {n.id for n in scenario.nodes} - node_ids

    for element in scenario.elements:
        graph.add_node(element.id, kind=element.kind)
    for node in nodes:
        graph.add_node(node.id, kind="compute")
        if node.site is not None and node.site in graph:
            graph.add_edge(node.id, node.site, latency=0, bandwidth=float("inf"), link=None)

    for link in scenario.links:
        if link.endpoint_a in dropped or link.endpoint_b in dropped:
            continue
        if link.endpoint_a not in graph or link.endpoint_b not in graph:
            continue
        graph.add_edge(
            link.endpoint_a,
            link.endpoint_b,
            latency=link.latency,
            bandwidth=link.bandwidth,
            link=link,
        )
    return graph


def validate(scenario: Scenario) -> list[Violation]:
    """Check every structural invariant; returns violations in a stable order."""
    violations = []
    element_ids = {e.id for e in scenario.elements}
    kinds = {e.id: e.kind for e in scenario.elements}

    # Compute nodes
    for node in scenario.nodes:
        entity = f"node {node.id}"
        if node.tier not in TIERS:
            violations.append(Violation(entity, f"tier must be one of {TIERS}"))
        if not node.capacity.is_positive():
            violations.append(Violation(entity, "capacity must be > 0 in every component"))
        if node.power_idle < 0:
            violations.append(Violation(entity, "power_idle must be >= 0"))
        if node.power_idle > node.power_max:
            violations.append(Violation(entity, "power_idle must not exceed power_max"))
        if node.site is not None and node.site not in element_ids:
            violations.append(Violation(entity, f"site {node.site} is not a network element"))

    for element in scenario.elements:
        if element.kind not in ELEMENT_KINDS:
            violations.append(Violation(f"element {element.id}", f"kind must be one of {ELEMENT_KINDS}"))

    seen = set()
    for ident in [n.id for n in scenario.nodes] + [e.id for e in scenario.elements]:
        if ident in seen:
            violations.append(Violation(f"id {ident}", "ids must be unique across nodes and elements"))
        seen.add(ident)

    # Links; the topology is a simple graph, so one link per endpoint pair
    pairs = set()
    for link in scenario.links:
        entity = f"link {link.id}"
        pair = frozenset((link.endpoint_a, link.endpoint_b))
        if pair in pairs:
            violations.append(Violation(entity, f"duplicate link between {link.endpoint_a} and {link.endpoint_b}"))
        pairs.add(pair)
        if not link.bandwidth > 0:
            violations.append(Violation(entity, "bandwidth must be > 0"))
        if link.latency < 0:
            violations.append(Violation(entity, "latency must be >= 0"))
        if not link.max_delay > 0:
            violations.append(Violation(entity, "max_delay must be > 0"))
        for endpoint in (link.endpoint_a, link.endpoint_b):
            if endpoint not in seen:
                violations.append(Violation(entity, f"endpoint {endpoint} does not exist"))

    # Users
    user_ids = set()
    for user in scenario.users:
        entity = f"user {user.id}"
        if user.id in user_ids:
            violations.append(Violation(entity, "user ids must be unique"))
        user_ids.add(user.id)
        if kinds.get(user.base_station) != "base_station":
            violations.append(Violation(entity, f"base station {user.base_station} does not exist"))

    # Tasks
    task_ids = set()
    for task in scenario.tasks:
        entity = f"task {task.id}"
        if task.id in task_ids:
            violations.append(Violation(entity, "task ids must be unique"))
        task_ids.add(task.id)
        if task.user not in user_ids:
            violations.append(Violation(entity, f"user {task.user} does not exist"))
        if task.processing_time < 0:
            violations.append(Violation(entity, "processing_time must be >= 0"))
        if task.data_size < 0:
            violations.append(Violation(entity, "data_size must be >= 0"))
        if task.deadline <= 0:
            violations.append(Violation(entity, "deadline must be > 0"))
        if task.arrival < 0:
            violations.append(Violation(entity, "arrival must be >= 0"))
        if not task.demand.is_nonnegative():
            violations.append(Violation(entity, "demand must be >= 0 in every component"))
        elif task.demand.is_zero():
            violations.append(Violation(entity, "demand must not be all-zero"))
        if task.penalty < 0:
            violations.append(Violation(entity, "penalty must be >= 0"))

    # Weights and horizon
    weights = scenario.weights
    if any(w < 0 for w in weights.to_dict().values()):
        violations.append(Violation("weights", "all weights must be >= 0"))
    if weights.alpha + weights.beta + weights.gamma_w <= 0:
        violations.append(Violation("weights", "alpha + beta + gamma_w must be > 0"))
    if scenario.horizon <= 0:
        violations.append(Violation("scenario", "horizon_ms must be > 0"))

    # Connectivity only makes sense once references resolve
    if not any(v.rule.startswith(("endpoint", "site", "base station")) for v in violations):
        violations.extend(_connectivity_violations(scenario))

    return violations


def _connectivity_violations(scenario: Scenario) -> list[Violation]:
    violations = []
    graph = topology_graph(scenario, include_cloud=scenario.cloud_enabled)
    if graph.number_of_nodes() and not nx.is_connected(graph):
        where = "with cloud" if scenario.cloud_enabled else "without cloud nodes"
        violations.append(Violation("topology", f"graph is not connected {where}"))

    compute_ids = {n.id for n in scenario.active_nodes}
    for user in scenario.users:
        reachable = nx.node_connected_component(graph, user.base_station)
        if not compute_ids & reachable:
            violations.append(Violation(f"user {user.id}", "reaches no compute node"))
    return violations


def builtin_paper_topology(cloud_enabled: bool = True) -> Scenario:
    """
    The evaluation scenario: 6 edge servers, 1 cloud server, 17 switches,
    16 base stations and 35 links.

    BSi--NSi access links (16), a ring NS1..NS16 (16), core switch NS17 tied
    to NS1 and NS9 (2), and the cloud uplink CLOUD--NS17 (1). Edge servers sit
    at base stations. Without cloud, CLOUD and its uplink are removed.
    """
    elements = [NetworkElement(f"NS{i}", "switch") for i in range(1, 18)]
    elements += [NetworkElement(f"BS{i}", "base_station") for i in range(1, 17)]

    links = [Link(f"BS{i}", f"NS{i}") for i in range(1, 17)]
    links += [Link(f"NS{i}", f"NS{i % 16 + 1}") for i in range(1, 17)]
    links += [Link("NS17", "NS1"), Link("NS17", "NS9")]

    nodes = [
        ComputeNode(
            id=node_id,
            tier="edge",
            capacity=ResourceVector(*capacity),
            power_idle=EDGE_POWER_IDLE,
            power_max=EDGE_POWER_MAX,
            site=EDGE_SITES[node_id],
        )
        for node_id, capacity in EDGE_CAPACITIES.items()
    ]
    if cloud_enabled:
        nodes.append(ComputeNode(
            id="CLOUD",
            tier="cloud",
            capacity=ResourceVector(*CLOUD_CAPACITY),
            power_idle=CLOUD_POWER_IDLE,
            power_max=CLOUD_POWER_MAX,
        ))
        links.append(Link("CLOUD", "NS17", bandwidth=CLOUD_LINK_BANDWIDTH, latency=CLOUD_LINK_LATENCY))

    users = [User(user_id, bs) for user_id, bs in USER_BASE_STATIONS.items()]

    return Scenario(
        nodes=tuple(nodes),
        elements=tuple(elements),
        links=tuple(links),
        users=tuple(users),
        tasks=(),
        weights=ModelWeights(),
        horizon=DEFAULT_HORIZON_MS,
        cloud_enabled=cloud_enabled,
        name="paper_topology",
    )
