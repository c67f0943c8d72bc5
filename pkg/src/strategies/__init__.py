# Placement strategies
from .base import BasePlacementStrategy, PlacementPlan, PlacementRequest, PlanBuilder, replay
from .tetris import TetrisStrategy, tetris_place
from .proximity import ProximityStrategy, proximity_place
from .optimal import InstanceTooLargeError, OptimalStrategy, optimal_place


class UnknownStrategyError(ValueError):
    """Raised when a strategy name is not registered."""


STRATEGIES = {
    TetrisStrategy.name: TetrisStrategy,
    ProximityStrategy.name: ProximityStrategy,
    OptimalStrategy.name: OptimalStrategy,
}


def available_strategies() -> list[str]:
    return list(STRATEGIES)


def get_strategy(name: str) -> BasePlacementStrategy:
    """Instantiate a strategy by its registered name."""
    try:
        return STRATEGIES[name]()
    except KeyError:
        raise UnknownStrategyError(
            f"unknown strategy '{name}', expected one of: {', '.join(STRATEGIES)}"
        ) from None


__all__ = [
    "BasePlacementStrategy",
    "PlacementPlan",
    "PlacementRequest",
    "PlanBuilder",
    "replay",
    "TetrisStrategy",
    "ProximityStrategy",
    "OptimalStrategy",
    "InstanceTooLargeError",
    "UnknownStrategyError",
    "tetris_place",
    "proximity_place",
    "optimal_place",
    "available_strategies",
    "get_strategy",
]
