import itertools
from collections import defaultdict
from dataclasses import replace

import numpy as np
import pytest

from helpers import make_node, make_request, make_task, scenario_request
from src.metrics import gamma_capacity, phi
from src.strategies import (
    InstanceTooLargeError,
    OptimalStrategy,
    PlacementPlan,
    PlanBuilder,
    ProximityStrategy,
    TetrisStrategy,
    UnknownStrategyError,
    available_strategies,
    get_strategy,
    optimal_place,
    proximity_place,
    replay,
    tetris_place,
)

GRID = list(itertools.product(range(1, 5), repeat=2))


def random_instance(rng: np.random.Generator):
    """A few users, nodes and tasks with small integer demands and random distances."""
    users = [f"u{i}" for i in range(int(rng.integers(1, 4)))]
    nodes = [
        make_node(f"N{i}", int(rng.integers(1, 9)), int(rng.integers(1, 9)), int(rng.integers(1, 5)))
        for i in range(int(rng.integers(1, 6)))
    ]
    tasks = [
        make_task(
            f"T{i:02d}",
            int(rng.integers(1, 6)), int(rng.integers(0, 6)), int(rng.integers(0, 3)),
            user=str(rng.choice(users)),
            processing_time=int(rng.integers(1, 20)),
            data_size=round(float(rng.uniform(0, 5)), 3),
            arrival=int(rng.integers(0, 10)),
            deadline=int(rng.integers(5, 60)),
        )
        for i in range(int(rng.integers(1, 13)))
    ]
    latency = {(u, n.id): int(rng.integers(0, 10)) for u in users for n in nodes}
    unreachable = [(u, n.id) for u in users for n in nodes if rng.random() < 0.1]
    bandwidth = float(rng.choice([0.5, 2.0, float("inf")]))
    return make_request(tasks, nodes, latency=latency, bandwidth=bandwidth, unreachable=unreachable)


def assert_conserves(plan: PlacementPlan, request):
    states = replay(plan, request)
    tasks = {t.id: t for t in request.pending}
    for state in states.values():
        assert state.free.is_nonnegative()
        placed = [tasks[t] for t, n in plan.assignments if n == state.node.id]
        assert state.used.components() == tuple(
            sum(t.demand.components()[i] for t in placed) for i in range(3)
        )


# toy example

def test_tetris_places_every_toy_task(toy_scenario):
    plan = tetris_place(scenario_request(toy_scenario))
    assert plan.assignments == (("APP2", "S2"), ("APP1", "S2"), ("APP3", "S1"))
    assert plan.unplaced == ()


def test_proximity_leaves_app3_unplaced(toy_scenario):
    plan = proximity_place(scenario_request(toy_scenario))
    assert plan.assignments == (("APP1", "S1"), ("APP2", "S2"))
    assert plan.unplaced == ("APP3",)


def test_optimal_matches_tetris_on_toy(toy_scenario):
    plan = optimal_place(scenario_request(toy_scenario))
    assert plan.unplaced == ()
    assert {t: plan.node_of(t) for t in ("APP1", "APP2", "APP3")} == {"APP1": "S2", "APP2": "S2", "APP3": "S1"}


# tetris

def test_tetris_serves_most_urgent_task_first():
    tasks = [make_task("late", deadline=50), make_task("urgent", deadline=10)]
    plan = tetris_place(make_request(tasks, [make_node("N", 1, 4, 1)]))
    assert plan.assignments == (("urgent", "N"),)
    assert plan.unplaced == ("late",)


def test_tetris_ranks_urgency_with_nearest_node_bandwidth():
    tetris = TetrisStrategy()
    task = make_task("t", deadline=20, processing_time=5, data_size=8)
    request = make_request([task], [make_node("N")], bandwidth=4.0)
    assert tetris.sla_score(request, task) == pytest.approx(27.0)


def test_tetris_prefers_the_tightest_node():
    nodes = [make_node("roomy", 8, 8, 4), make_node("tight", 2, 2, 1)]
    plan = tetris_place(make_request([make_task("t", 1, 1)], nodes))
    assert plan.assignments == (("t", "tight"),)


def test_tetris_skips_unreachable_nodes():
    nodes = [make_node("far", 2, 2, 1), make_node("near", 8, 8, 4)]
    plan = tetris_place(make_request([make_task("t", 1, 1)], nodes, unreachable=[("u1", "far")]))
    assert plan.assignments == (("t", "near"),)


def test_tetris_leaves_oversized_task_pending():
    plan = tetris_place(make_request([make_task("big", 9, 1)], [make_node("N", 8, 8, 4)]))
    assert plan == PlacementPlan(assignments=(), unplaced=("big",))


# proximity

def test_proximity_picks_the_closest_admitting_node():
    nodes = [make_node("A", 2, 2, 1), make_node("B", 2, 2, 1), make_node("C", 8, 8, 4)]
    latency = {("u1", "A"): 1, ("u1", "B"): 3, ("u1", "C"): 5}
    tasks = [make_task("t1", 2, 2), make_task("t2", 2, 2), make_task("t3", 2, 2)]
    plan = proximity_place(make_request(tasks, nodes, latency=latency))
    assert plan.assignments == (("t1", "A"), ("t2", "B"), ("t3", "C"))


def test_proximity_serves_in_arrival_order():
    tasks = [make_task("b", arrival=0), make_task("a", arrival=3)]
    plan = proximity_place(make_request(tasks, [make_node("N", 1, 4, 1)], now=3))
    assert plan.assignments == (("b", "N"),)
    assert plan.unplaced == ("a",)


def test_proximity_breaks_latency_ties_by_node_id():
    plan = proximity_place(make_request([make_task("t")], [make_node("Z"), make_node("A")]))
    assert plan.assignments == (("t", "A"),)


# admission over links

def test_link_overload_blocks_placement(toy_scenario):
    # 0.5 Mbit over 0.1 Mbit/ms loads a link with 5 ms; allow only 4
    links = tuple(replace(link, max_delay=4) for link in toy_scenario.links)
    app1 = replace(toy_scenario.tasks[0], data_size=0.5)
    scenario = replace(toy_scenario, links=links).with_tasks([app1])
    request = scenario_request(scenario)
    builder = PlanBuilder(request)
    assert builder.admits(app1, "S1")
    assert not builder.admits(app1, "S2")


# optimal

def test_optimal_refuses_large_instances():
    tasks = [make_task(f"t{i}") for i in range(9)]
    with pytest.raises(InstanceTooLargeError):
        optimal_place(make_request(tasks, [make_node("N")]))
    nodes = [make_node(f"N{i}") for i in range(5)]
    with pytest.raises(InstanceTooLargeError):
        optimal_place(make_request([make_task("t")], nodes))


def test_optimal_minimises_drops_before_cost():
    # Placing both small tasks beats placing the big one alone
    tasks = [make_task("big", 4, 4), make_task("s1", 2, 2), make_task("s2", 2, 2)]
    plan = optimal_place(make_request(tasks, [make_node("N", 4, 4, 1)]))
    assert plan.unplaced == ("big",)
    assert sorted(plan.assignments) == [("s1", "N"), ("s2", "N")]


def test_optimal_prefers_lower_latency_among_equal_drops():
    latency = {("u1", "A"): 9, ("u1", "B"): 1}
    plan = optimal_place(make_request([make_task("t")], [make_node("A"), make_node("B")], latency=latency))
    assert plan.assignments == (("t", "B"),)


def test_optimal_drops_when_nothing_fits():
    plan = optimal_place(make_request([make_task("t", 5, 5)], [make_node("N", 4, 4, 1)]))
    assert plan.assignments == ()
    assert plan.unplaced == ("t",)


# exhaustive sweep and randomized properties

def sweep_instances():
    """
    Every instance with up to 3 tasks on 1 node or up to 2 tasks on 2 nodes,
    over the demand grid. With 3 tasks on 2 nodes the grid is walked up to
    symmetry: capacity pairs in sorted order and demands as multisets.
    """
    for capacity in GRID:
        for count in (1, 2, 3):
            for demands in itertools.product(GRID, repeat=count):
                yield f"1x{count}", [capacity], demands
    for capacities in itertools.product(GRID, repeat=2):
        for count in (1, 2):
            for demands in itertools.product(GRID, repeat=count):
                yield f"2x{count}", list(capacities), demands
    for capacities in itertools.combinations_with_replacement(GRID, 2):
        for demands in itertools.combinations_with_replacement(GRID, 3):
            yield "2x3", list(capacities), demands


def test_tetris_against_optimal_on_exhaustive_sweep():
    gaps = defaultdict(list)
    for shape, capacities, demands in sweep_instances():
        nodes = [make_node(f"N{i}", cpu, ram, 1) for i, (cpu, ram) in enumerate(capacities)]
        tasks = [make_task(f"t{i}", cpu, ram) for i, (cpu, ram) in enumerate(demands)]
        request = make_request(tasks, nodes)

        plan = tetris_place(request)
        assert_conserves(plan, request)
        if not plan.unplaced:
            gaps[shape].append(0)
            continue
        best = optimal_place(request)
        assert len(best.unplaced) <= len(plan.unplaced)
        gaps[shape].append(len(plan.unplaced) - len(best.unplaced))

    print()
    for shape, shape_gaps in sorted(gaps.items()):
        behind = sum(1 for g in shape_gaps if g > 0)
        print(f"tetris vs optimal, {shape} (nodes x tasks): {len(shape_gaps)} instances, "
              f"mean drop gap {np.mean(shape_gaps):.4f}, max {max(shape_gaps)}, behind in {behind}")
    everything = [g for shape_gaps in gaps.values() for g in shape_gaps]
    print(f"overall: {len(everything)} instances, mean drop gap {np.mean(everything):.4f}")

    assert len(gaps["2x3"]) == 136 * 816
    assert max(gaps["2x3"]) >= 1
    assert np.mean(gaps["2x3"]) < 0.5
    assert np.mean(everything) < 0.5


def test_tetris_can_trail_optimal():
    # the small task takes the tight node, so the two mid-size tasks cannot share the roomy one
    nodes = [make_node("N0", 2, 2, 1), make_node("N1", 3, 3, 1)]
    tasks = [make_task("t0", 1, 1), make_task("t1", 2, 2), make_task("t2", 2, 2)]
    request = make_request(tasks, nodes)
    assert tetris_place(request).assignments == (("t0", "N0"), ("t1", "N1"))
    assert tetris_place(request).unplaced == ("t2",)
    best = optimal_place(request)
    assert best.unplaced == ()
    assert sorted(best.assignments) == [("t0", "N1"), ("t1", "N0"), ("t2", "N1")]


def test_strategies_conserve_capacity_on_random_instances():
    rng = np.random.default_rng(2024)
    tetris, proximity = TetrisStrategy(), ProximityStrategy()
    for _ in range(1000):
        request = random_instance(rng)
        tasks = {t.id: t for t in request.pending}

        plan = tetris(request)
        assert_conserves(plan, request)

        # placed and skipped tasks alike are visited in (φ, id) order
        order = sorted(request.pending, key=lambda t: (tetris.sla_score(request, t), t.id))
        chosen_node = dict(plan.assignments)
        assert [t.id for t in order if t.id in chosen_node] == [t for t, _ in plan.assignments]
        assert [t.id for t in order if t.id not in chosen_node] == list(plan.unplaced)

        # each chosen node is the tightest one that admitted the task at that point,
        # and a skipped task fit nowhere at its turn
        builder = PlanBuilder(request)
        for task in order:
            node_id = chosen_node.get(task.id)
            if node_id is None:
                assert not any(builder.admits(task, n) for n in builder.states)
                continue
            chosen = builder.states[node_id]
            for state in builder.states.values():
                if (gamma_capacity(state), state.node.id) < (gamma_capacity(chosen), node_id):
                    assert not builder.admits(task, state.node.id)
            builder.assign(task, node_id)

        plan = proximity(request)
        assert_conserves(plan, request)
        builder = PlanBuilder(request)
        for task_id, node_id in plan.assignments:
            task = tasks[task_id]
            closer = [
                n for n in builder.states
                if request.reachable(task, n)
                and (request.path_latency_of(task.user, n), n) < (request.path_latency_of(task.user, node_id), node_id)
            ]
            assert not any(builder.admits(task, n) for n in closer)
            builder.assign(task, node_id)


def test_optimal_never_drops_more_on_random_instances():
    rng = np.random.default_rng(7)
    for _ in range(200):
        request = random_instance(rng)
        if len(request.pending) > 6 or len(request.node_states) > 3:
            continue
        best = optimal_place(request)
        assert_conserves(best, request)
        assert len(best.unplaced) <= len(tetris_place(request).unplaced)
        assert len(best.unplaced) <= len(proximity_place(request).unplaced)


def test_replay_rejects_bad_plans():
    request = make_request([make_task("a", 3, 3), make_task("b", 3, 3)], [make_node("N", 4, 4, 1)])
    with pytest.raises(ValueError):
        replay(PlacementPlan(assignments=(("a", "N"), ("b", "N"))), request)
    with pytest.raises(ValueError):
        replay(PlacementPlan(assignments=(("a", "N"),)), request)
    with pytest.raises(ValueError):
        replay(PlacementPlan(assignments=(("a", "N"),), unplaced=("a", "b")), request)


# registry

def test_registry():
    assert available_strategies() == ["tetris", "proximity", "optimal"]
    assert isinstance(get_strategy("optimal"), OptimalStrategy)
    with pytest.raises(UnknownStrategyError):
        get_strategy("random")


def test_phi_order_in_toy(toy_scenario):
    request = scenario_request(toy_scenario)
    scores = {t.id: phi(t, float("inf"), request.weights) for t in toy_scenario.tasks}
    assert scores == {"APP1": 25.0, "APP2": 15.0, "APP3": 35.0}
