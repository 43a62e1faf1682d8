import os
import sys

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from pathlib import Path
from typing import Iterable, List, Optional

import pytest

from consistency.items import ConsistencyProperties, ItemCatalog, ItemDefinition, Priority, Scope
from harness.scenario import Scenario
from sim_core.devices import Device, Rect
from sim_core.engine import Simulation
from sim_core.trace import Trace

SCENARIO_DIR = Path(__file__).parent / "scenarios"
BOUNDS = Rect(0.0, 0.0, 200.0, 200.0)


def make_devices(positions: Iterable, **overrides) -> List[Device]:
    """Devices 0..n-1 at the given positions, default radio range 50 m."""
    return [Device(id=i, position=tuple(p), **overrides) for i, p in enumerate(positions)]


def line_positions(n: int, spacing: float = 5.0, y: float = 50.0) -> List[tuple]:
    return [(10.0 + spacing * i, y) for i in range(n)]


def make_sim(devices: Iterable[Device], seed: int = 0) -> Simulation:
    return Simulation(devices, BOUNDS, seed=seed, trace=Trace())


def make_catalog(*definitions: ItemDefinition) -> ItemCatalog:
    return ItemCatalog(list(definitions))


def definition(
    item_id: str,
    origin="backbone",
    scope: Scope = Scope.GLOBAL,
    priority: Priority = Priority.NORMAL,
    service_id: str = "svc",
) -> ItemDefinition:
    return ItemDefinition(
        item_id, service_id, origin, ConsistencyProperties(scope=scope, propagation_priority=priority)
    )


def scenario_data(**overrides) -> dict:
    """A small valid scenario as plain data: two devices, one backbone item, no requirements."""
    data = {
        "name": "test",
        "seed": 3,
        "duration": 10,
        "bounds": {"x_min": 0, "y_min": 0, "x_max": 200, "y_max": 200},
        "devices": [{"id": 0, "position": [50, 50]}, {"id": 1, "position": [60, 50]}],
        "services": [{"service_id": "news", "items": [{"item_id": "headline"}]}],
    }
    data.update(overrides)
    return data


def clique_scenario(
    n: int,
    duration: float = 10.0,
    max_age: float = 1000.0,
    period: Optional[float] = None,
    **overrides,
) -> Scenario:
    """n static devices on a line 5 m apart (one connected clique), all seeking one backbone item."""
    item = {"item_id": "headline", "produce_at": [0]}
    if period is not None:
        item["period"] = period
    data = scenario_data(
        name=f"clique_{n}",
        duration=duration,
        devices=[{"id": i, "position": [10 + 5 * i, 50]} for i in range(n)],
        services=[{"service_id": "news", "items": [item]}],
        requirements=[{"seekers": list(range(n)), "item_id": "headline", "max_tolerated_age": max_age}],
    )
    data.update(overrides)
    return Scenario.model_validate(data)


@pytest.fixture
def scenario_dir() -> Path:
    return SCENARIO_DIR


@pytest.fixture
def small_scenario() -> Scenario:
    return Scenario.model_validate(scenario_data())
