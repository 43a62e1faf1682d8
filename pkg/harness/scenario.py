"""
Scenario files: JSON text validated into pydantic models.

Every failure names the offending key path and, when it can be found, the
line of the file that holds it.
"""

import json
import logging
import re
from enum import Enum
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_core import PydanticCustomError

from consistency.items import BACKBONE_AUTHORITY, ConsistencyProperties
from consistency.requirements import PROFILES
from cost_metrics.ledger import CostModel
from injection_point.scoring import ScoreWeights
from sim_core.devices import Rect

logger = logging.getLogger(__name__)

MAX_SEED = 2**64 - 1


class Mode(str, Enum):
    INJECTION = "injection"
    PURE_BACKBONE = "pure_backbone"
    PURE_ADHOC = "pure_adhoc"


# --- Errors ---


class ScenarioError(Exception):
    """Base class for unreadable or invalid scenario files (CLI exit 1)."""


class ScenarioParseError(ScenarioError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class ScenarioIssue(BaseModel):
    key: str
    line: Optional[int] = None
    message: str

    def __str__(self) -> str:
        where = f" (line {self.line})" if self.line is not None else ""
        return f"{self.key}{where}: {self.message}"


class ScenarioValidationError(ScenarioError):
    def __init__(self, issues: List[ScenarioIssue]):
        self.issues = issues
        super().__init__("; ".join(str(i) for i in issues))


def _dangling(path: str, message: str) -> PydanticCustomError:
    return PydanticCustomError("scenario_reference", "{path}: {message}", {"path": path, "message": message})


# --- Models ---

Point = Tuple[float, float]


class Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RectSpec(Model):
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    @model_validator(mode="after")
    def _ordered(self):
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError("rectangle needs x_max > x_min and y_max > y_min")
        return self

    def to_rect(self) -> Rect:
        return Rect(self.x_min, self.y_min, self.x_max, self.y_max)


class DeviceSpec(Model):
    id: int = Field(ge=0)
    count: int = Field(default=1, ge=1, description="Expand into ids id .. id+count-1")
    position: Optional[Point] = None
    spawn: Optional[RectSpec] = Field(default=None, description="Uniform placement area; defaults to the bounds")
    waypoint: Optional[Point] = None
    speed: float = Field(default=0.0, ge=0)
    speed_range: Optional[Tuple[float, float]] = Field(default=None, description="Random-waypoint speeds, m/s")
    battery: float = Field(default=1.0, ge=0, le=1)
    radio_range: float = Field(default=50.0, gt=0)
    backbone_capable: bool = True
    equipment_score: float = Field(default=1.0, ge=0, le=1)
    load: int = Field(default=0, ge=0)
    departure: Optional[float] = Field(default=None, ge=0)
    registrations: List[str] = Field(default_factory=list)
    provides: List[str] = Field(default_factory=list)
    delegate_of: Optional[int] = None

    @model_validator(mode="after")
    def _speeds(self):
        if self.speed_range is not None and not 0 <= self.speed_range[0] <= self.speed_range[1]:
            raise ValueError("speed_range must satisfy 0 <= low <= high")
        return self

    @property
    def ids(self) -> List[int]:
        return list(range(self.id, self.id + self.count))


class ItemSpec(Model):
    item_id: str = Field(min_length=1)
    origin: Union[Literal["backbone"], int] = BACKBONE_AUTHORITY
    properties: ConsistencyProperties = Field(default_factory=ConsistencyProperties)
    produce_at: List[float] = Field(default_factory=lambda: [0.0])
    period: Optional[float] = Field(default=None, gt=0, description="Also produce every `period` seconds")

    @model_validator(mode="after")
    def _times(self):
        if any(t < 0 for t in self.produce_at):
            raise ValueError("production times must be >= 0")
        return self

    def production_times(self, duration: float) -> List[float]:
        times = {t for t in self.produce_at if t <= duration}
        if self.period is not None:
            k = 1
            while k * self.period <= duration:
                times.add(round(k * self.period, 9))
                k += 1
        return sorted(times)


class ServiceSpec(Model):
    service_id: str = Field(min_length=1)
    items: List[ItemSpec] = Field(default_factory=list)


class RequirementSpec(Model):
    seekers: List[int] = Field(min_length=1)
    item_id: str
    max_tolerated_age: Optional[float] = Field(default=None, gt=0)
    max_wait: float = Field(default=0.0, ge=0)
    declared_at: float = Field(default=0.0, ge=0)
    profile: Optional[Literal["business_traveler", "tourist"]] = None

    @model_validator(mode="after")
    def _tolerance(self):
        if self.max_tolerated_age is None:
            if self.profile is None:
                raise ValueError("give max_tolerated_age or a profile")
            self.max_tolerated_age = PROFILES[self.profile]
        return self


class GeoFenceSpec(Model):
    area: RectSpec
    service_id: str


ActionName = Literal[
    "register",
    "entity_fetch",
    "force_clique_injection",
    "wormhole_direct",
    "wormhole_mediated",
    "set_backbone_capable",
    "kill",
    "move_to",
]


class ActionSpec(Model):
    """
    A scripted step. Cliques are named by one of their members (`device`,
    `source`, `target`) because clique ids change as the topology does.
    """

    at: float = Field(ge=0)
    action: ActionName
    device: Optional[int] = None
    source: Optional[int] = None
    target: Optional[int] = None
    service_id: Optional[str] = None
    item_id: Optional[str] = None
    value: Optional[bool] = None
    position: Optional[Point] = None

    @model_validator(mode="after")
    def _arguments(self):
        needed = {
            "register": ("device", "service_id"),
            "entity_fetch": ("device", "item_id"),
            "force_clique_injection": ("device", "item_id"),
            "wormhole_direct": ("source", "target", "item_id"),
            "wormhole_mediated": ("device", "item_id"),
            "set_backbone_capable": ("device", "value"),
            "kill": ("device",),
            "move_to": ("device", "position"),
        }[self.action]
        missing = [name for name in needed if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.action} needs {', '.join(missing)}")
        return self


class Scenario(Model):
    name: str = Field(min_length=1)
    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    duration: float = Field(ge=0)
    tick: float = Field(default=1.0, gt=0)
    bounds: RectSpec
    devices: List[DeviceSpec] = Field(min_length=1)
    services: List[ServiceSpec] = Field(default_factory=list)
    requirements: List[RequirementSpec] = Field(default_factory=list)
    geo_fences: List[GeoFenceSpec] = Field(default_factory=list)
    actions: List[ActionSpec] = Field(default_factory=list)
    weights: ScoreWeights = Field(default_factory=ScoreWeights)
    cost_model: CostModel = Field(default_factory=CostModel)
    fanout: int = Field(default=3, ge=1)
    hysteresis: float = Field(default=0.15, ge=0, le=1)
    horizon: float = Field(default=600.0, gt=0)
    backbone_latency: float = Field(default=0.5, gt=0)
    adhoc_latency: float = Field(default=0.05, gt=0)
    relay_timeout: Optional[float] = Field(default=None, gt=0)
    suppression_factor: float = Field(default=3.0, gt=0)
    registry_ttl: float = Field(default=300.0, gt=0)
    pause: float = Field(default=0.0, ge=0)
    interest_filter: bool = False
    metrics_every: int = Field(default=10, ge=1)
    mode: Mode = Mode.INJECTION

    @model_validator(mode="after")
    def _references(self):
        bounds = self.bounds.to_rect()
        ids: Dict[int, int] = {}
        for index, spec in enumerate(self.devices):
            for device_id in spec.ids:
                if device_id in ids:
                    raise _dangling(f"devices.{index}.id", f"device id {device_id} is declared twice")
                ids[device_id] = index
            for field_name in ("position", "waypoint"):
                point = getattr(spec, field_name)
                if point is not None and not bounds.contains(point):
                    raise _dangling(f"devices.{index}.{field_name}", f"{point} lies outside the bounds")

        services = {s.service_id for s in self.services}
        items: Dict[str, ItemSpec] = {}
        for s_index, service in enumerate(self.services):
            for i_index, item in enumerate(service.items):
                path = f"services.{s_index}.items.{i_index}"
                if item.item_id in items:
                    raise _dangling(f"{path}.item_id", f"item '{item.item_id}' is declared twice")
                if item.origin != BACKBONE_AUTHORITY and item.origin not in ids:
                    raise _dangling(f"{path}.origin", f"unknown device {item.origin}")
                items[item.item_id] = item

        for index, spec in enumerate(self.devices):
            for service_id in spec.registrations:
                if service_id not in services:
                    raise _dangling(f"devices.{index}.registrations", f"unknown service_id '{service_id}'")
            for item_id in spec.provides:
                if item_id not in items:
                    raise _dangling(f"devices.{index}.provides", f"unknown item '{item_id}'")
            if spec.delegate_of is not None and spec.delegate_of not in ids:
                raise _dangling(f"devices.{index}.delegate_of", f"unknown device {spec.delegate_of}")

        for index, requirement in enumerate(self.requirements):
            if requirement.item_id not in items:
                raise _dangling(f"requirements.{index}.item_id", f"unknown item '{requirement.item_id}'")
            for seeker in requirement.seekers:
                if seeker not in ids:
                    raise _dangling(f"requirements.{index}.seekers", f"unknown device {seeker}")

        for index, fence in enumerate(self.geo_fences):
            if fence.service_id not in services:
                raise _dangling(f"geo_fences.{index}.service_id", f"unknown service_id '{fence.service_id}'")

        for index, action in enumerate(self.actions):
            for field_name in ("device", "source", "target"):
                value = getattr(action, field_name)
                if value is not None and value not in ids:
                    raise _dangling(f"actions.{index}.{field_name}", f"unknown device {value}")
            if action.item_id is not None and action.item_id not in items:
                raise _dangling(f"actions.{index}.item_id", f"unknown item '{action.item_id}'")
            if action.service_id is not None and action.service_id not in services:
                raise _dangling(f"actions.{index}.service_id", f"unknown service_id '{action.service_id}'")
            if action.position is not None and not bounds.contains(action.position):
                raise _dangling(f"actions.{index}.position", f"{action.position} lies outside the bounds")
        return self

    # --- Convenience ---

    @property
    def device_ids(self) -> List[int]:
        return sorted(i for spec in self.devices for i in spec.ids)

    def item(self, item_id: str) -> ItemSpec:
        for service in self.services:
            for item in service.items:
                if item.item_id == item_id:
                    return item
        raise KeyError(item_id)

    def with_mode(self, mode: Mode) -> "Scenario":
        return self.model_copy(update={"mode": mode})


# --- Text ---


def _line_of(text: str, path: str) -> Optional[int]:
    """1-based line of the last named key along `path`, found by a forward text scan."""
    lines = text.splitlines()
    line = 0
    found = None
    for part in path.split("."):
        if not part or part.isdigit():
            continue
        pattern = re.compile(rf'"{re.escape(part)}"\s*:')
        for index in range(line, len(lines)):
            if pattern.search(lines[index]):
                line = index
                found = index + 1
                break
    return found


def parse_scenario(text: str) -> Scenario:
    """
    Parse and validate scenario text.

    Raises:
        ScenarioParseError: malformed JSON (with line and column).
        ScenarioValidationError: one issue per failing key.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(exc.msg, exc.lineno, exc.colno) from exc

    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        issues = []
        for error in exc.errors():
            context = error.get("ctx") or {}
            path = ".".join(str(p) for p in error["loc"])
            message = error["msg"]
            if error["type"] == "scenario_reference":
                path = context["path"]
                message = context["message"]
            issues.append(ScenarioIssue(key=path or "<root>", line=_line_of(text, path), message=message))
        raise ScenarioValidationError(issues) from exc


def render_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario.model_dump(mode="json"), indent=2) + "\n"


def load_scenario(path: Union[str, Path]) -> Scenario:
    text = Path(path).read_text(encoding="utf-8")
    logger.debug(f"Loaded scenario file {path}")
    return parse_scenario(text)


__all__ = [
    "MAX_SEED",
    "Mode",
    "ScenarioError",
    "ScenarioParseError",
    "ScenarioIssue",
    "ScenarioValidationError",
    "RectSpec",
    "DeviceSpec",
    "ItemSpec",
    "ServiceSpec",
    "RequirementSpec",
    "GeoFenceSpec",
    "ActionSpec",
    "Scenario",
    "parse_scenario",
    "render_scenario",
    "load_scenario",
]
