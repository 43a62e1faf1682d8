"""
Device state and random-waypoint mobility.

Positions are plain (x, y) tuples in meters; the world is a single
bounding rectangle shared by mobility and geo-fences.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Set, Tuple

import numpy as np

logger = logging.getLogger(__name__)

Point = Tuple[float, float]


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in meters."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def contains(self, point: Point) -> bool:
        x, y = point
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def clamp(self, point: Point) -> Point:
        x, y = point
        return (
            min(max(x, self.x_min), self.x_max),
            min(max(y, self.y_min), self.y_max),
        )

    def sample(self, rng: np.random.Generator) -> Point:
        """Uniform point inside the rectangle."""
        return (
            float(rng.uniform(self.x_min, self.x_max)),
            float(rng.uniform(self.y_min, self.y_max)),
        )


@dataclass
class Device:
    id: int
    position: Point
    waypoint: Optional[Point] = None
    speed: float = 0.0
    battery: float = 1.0
    radio_range: float = 50.0
    backbone_capable: bool = True
    equipment_score: float = 1.0
    expected_departure: Optional[float] = None
    registrations: Set[str] = field(default_factory=set)
    load: int = 0
    # random-waypoint parameters; None keeps the device on its scripted path
    speed_range: Optional[Tuple[float, float]] = None
    pause_remaining: float = 0.0
    present: bool = True

    @property
    def alive(self) -> bool:
        """A device that left the scene or ran out of battery neither sends nor receives."""
        return self.present and self.battery > 0.0

    @property
    def mobile(self) -> bool:
        return self.speed_range is not None and self.speed_range[1] > 0.0

    def drain(self, amount: float) -> float:
        """Take `amount` of battery capacity; returns what was actually spent."""
        spent = min(self.battery, amount)
        self.battery = max(0.0, self.battery - amount)
        if self.battery == 0.0:
            logger.info(f"Device {self.id} battery exhausted")
        return spent

    def set_departure(self, at: float, now: float) -> None:
        if at < now:
            raise ValueError(f"Departure {at} of device {self.id} lies before now={now}")
        self.expected_departure = at


def distance(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _new_leg(device: Device, bounds: Rect, rng: np.random.Generator, pause: float) -> None:
    device.waypoint = bounds.sample(rng)
    low, high = device.speed_range
    device.speed = float(rng.uniform(low, high)) if high > low else float(high)
    device.pause_remaining = pause


def step_mobility(
    devices: Iterable[Device],
    dt: float,
    bounds: Rect,
    rng: np.random.Generator,
    pause: float = 0.0,
) -> None:
    """
    Advance every alive device by `dt` seconds (random waypoint model).

    A device moves straight towards its waypoint at its speed and stops exactly
    on it when the step would overshoot. Mobile devices then draw a new uniform
    waypoint and speed and pause for `pause` seconds; scripted devices simply
    lose their waypoint. Devices are processed in id order so the draws from
    `rng` are reproducible.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")

    for device in sorted(devices, key=lambda d: d.id):
        if not device.alive:
            continue

        if device.pause_remaining > 0.0:
            device.pause_remaining = max(0.0, device.pause_remaining - dt)
            continue

        if device.waypoint is None:
            if device.mobile:
                _new_leg(device, bounds, rng, 0.0)
            else:
                continue

        if device.speed <= 0.0:
            continue

        remaining = distance(device.position, device.waypoint)
        step = device.speed * dt
        if step >= remaining:
            device.position = bounds.clamp(device.waypoint)
            if device.mobile:
                _new_leg(device, bounds, rng, pause)
            else:
                device.waypoint = None
        else:
            x, y = device.position
            wx, wy = device.waypoint
            ratio = step / remaining
            device.position = bounds.clamp((x + (wx - x) * ratio, y + (wy - y) * ratio))


__all__ = ["Point", "Rect", "Device", "distance", "step_mobility"]
