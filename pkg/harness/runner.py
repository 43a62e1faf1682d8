"""
Runs a scenario: builds the world from its specs, drives the tick loop,
productions and scripted actions on the event queue, and folds the result
into metrics.

Per tick, in this order: mobility, departures, topology and cliques,
geo-fence registrations, injection point maintenance, registry purge,
requirement declarations and checks, injections, sampling.
World events (productions, actions) happen in [0, duration); ticks run
from 0 through duration.
"""

import itertools
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Set, Tuple, Union

import pandas as pd

from consistency.items import (
    BACKBONE_AUTHORITY,
    ItemCatalog,
    ItemDefinition,
    Priority,
    ProviderRole,
    Scope,
    SeekerRole,
)
from consistency.replicas import ReplicaStore
from consistency.requirements import (
    ConsistencyRequirement,
    InFlightTable,
    InjectionRequest,
    Injury,
    Route,
    RouteContext,
    check_requirements,
    propagation_plan,
    trigger_injections,
)
from cost_metrics.baselines import baseline_pure_adhoc, baseline_pure_backbone
from cost_metrics.graph import try_graph_efficiency
from cost_metrics.ledger import CostLedger
from cost_metrics.metrics import MetricsCollector, RunMetrics, summarize, write_metrics, write_series
from epidemic.manager import EpidemicManager
from injection_point.maintenance import InjectionPointManager
from injection_point.planning import plan_multi_injection
from injection_protocol.backbone import BackboneService, GeoFence, GeoFenceWatch
from injection_protocol.errors import InjectionError
from injection_protocol.injections import InjectionProtocol
from injection_protocol.messages import Hop, Message, MessageKind, Messenger
from harness.scenario import ActionSpec, Mode, Scenario
from sim_core.devices import Device
from sim_core.engine import Simulation
from sim_core.random_streams import RandomStreams
from sim_core.topology import Clique
from sim_core.trace import BACKBONE, Trace, TraceKind

logger = logging.getLogger(__name__)


# --- World construction ---


def build_devices(scenario: Scenario, streams: RandomStreams) -> List[Device]:
    """Expand the device specs; positions not given are drawn in id order from the placement stream."""
    bounds = scenario.bounds.to_rect()
    devices = []
    for spec in scenario.devices:
        area = spec.spawn.to_rect() if spec.spawn is not None else bounds
        for device_id in spec.ids:
            position = tuple(spec.position) if spec.position is not None else area.sample(streams.placement)
            devices.append(
                Device(
                    id=device_id,
                    position=bounds.clamp(position),
                    waypoint=tuple(spec.waypoint) if spec.waypoint is not None else None,
                    speed=spec.speed,
                    battery=spec.battery,
                    radio_range=spec.radio_range,
                    backbone_capable=spec.backbone_capable,
                    equipment_score=spec.equipment_score,
                    expected_departure=spec.departure,
                    load=spec.load,
                    speed_range=tuple(spec.speed_range) if spec.speed_range is not None else None,
                )
            )
    return devices


def build_catalog(scenario: Scenario) -> ItemCatalog:
    catalog = ItemCatalog()
    for service in scenario.services:
        for item in service.items:
            catalog.add(ItemDefinition(item.item_id, service.service_id, item.origin, item.properties))
    return catalog


def build_requirements(scenario: Scenario) -> List[ConsistencyRequirement]:
    """One requirement per seeker, ordered by declaration time, seeker and item."""
    requirements = [
        ConsistencyRequirement(
            seeker=seeker,
            item_id=spec.item_id,
            max_tolerated_age=spec.max_tolerated_age,
            max_wait=spec.max_wait,
            declared_at=spec.declared_at,
            profile=spec.profile,
        )
        for spec in scenario.requirements
        for seeker in spec.seekers
    ]
    return sorted(requirements, key=lambda r: (r.declared_at, r.seeker, r.item_id))


def build_roles(scenario: Scenario, catalog: ItemCatalog) -> Tuple[Dict[int, ProviderRole], Dict[int, SeekerRole]]:
    providers: Dict[int, ProviderRole] = {}
    for spec in scenario.devices:
        for device_id in spec.ids:
            providers[device_id] = ProviderRole(device_id, frozenset(spec.provides), spec.delegate_of)
    for definition in catalog.definitions.values():
        if definition.origin != BACKBONE_AUTHORITY and definition.origin not in providers:
            providers[definition.origin] = ProviderRole(definition.origin)

    sought: Dict[int, Set[str]] = {}
    for spec in scenario.requirements:
        for seeker in spec.seekers:
            sought.setdefault(seeker, set()).add(spec.item_id)
    seekers = {d: SeekerRole(d, frozenset(items)) for d, items in sorted(sought.items())}
    return providers, seekers


# --- Run ---


@dataclass
class RunResult:
    scenario: Scenario
    mode: Mode
    trace: Trace
    metrics: RunMetrics
    series: pd.DataFrame
    world: "World" = field(repr=False)


class World:
    """All simulation components of one run, wired together."""

    def __init__(self, scenario: Scenario, mode: Optional[Mode] = None):
        self.scenario = scenario
        self.mode = mode or scenario.mode
        self.trace = Trace()
        devices = build_devices(scenario, RandomStreams(scenario.seed))
        self.sim = Simulation(devices, scenario.bounds.to_rect(), scenario.seed, self.trace, scenario.pause)

        self.catalog = build_catalog(scenario)
        self.requirements = build_requirements(scenario)
        self.providers, self.seekers = build_roles(scenario, self.catalog)
        self.interests: Dict[str, Set[int]] = {}
        for requirement in self.requirements:
            self.interests.setdefault(requirement.item_id, set()).add(requirement.seeker)

        self.replicas = ReplicaStore()
        self.ledger = CostLedger(scenario.cost_model)
        self.messenger = Messenger(self.sim, self.ledger)
        self.backbone = BackboneService(self.catalog, scenario.registry_ttl)
        self.epidemics = EpidemicManager(
            self.sim,
            self.replicas,
            self.messenger,
            fanout=scenario.fanout,
            round_period=scenario.tick,
            interest_filter=scenario.interest_filter,
            interests=self.interests,
        )
        self.points = InjectionPointManager(
            self.sim, self.messenger, scenario.weights, scenario.horizon, scenario.hysteresis
        )
        self.in_flight = InFlightTable()
        self.protocol = InjectionProtocol(
            self.sim,
            self.catalog,
            self.backbone,
            self.replicas,
            self.messenger,
            self.ledger,
            self.epidemics,
            self.points,
            in_flight=self.in_flight,
            interest_of=self.interest_of,
            providers=self.providers,
            backbone_latency=scenario.backbone_latency,
            adhoc_latency=scenario.adhoc_latency,
            relay_timeout=scenario.relay_timeout,
        )
        self.fences = GeoFenceWatch(GeoFence(f.area.to_rect(), f.service_id) for f in scenario.geo_fences)
        self.collector = MetricsCollector()

        self.declared: List[ConsistencyRequirement] = []
        self._declared_keys: Set[Tuple[int, str]] = set()
        self._injured: Set[Tuple[int, str]] = set()
        self.unserved: Set[int] = set()
        self.ticks = 0
        self._local_ids = itertools.count(1)
        self._last_graph = None
        self._last_hybrid = None

    @property
    def timeout(self) -> float:
        return self.scenario.suppression_factor * self.scenario.backbone_latency

    def interest_of(self, members, item_id: str) -> FrozenSet[int]:
        """Members that have declared a requirement for the item by now."""
        return frozenset(m for m in members if (m, item_id) in self._declared_keys)

    # --- Scheduling ---

    def start(self) -> None:
        duration = self.scenario.duration
        for service in self.scenario.services:
            for spec in service.items:
                for at in spec.production_times(duration):
                    if at < duration:
                        self.sim.schedule(at, f"produce:{spec.item_id}", lambda i=spec.item_id: self.produce(i))

        if self.mode is Mode.INJECTION and duration > 0:
            for spec in self.scenario.devices:
                for device_id in spec.ids:
                    for service_id in spec.registrations:
                        self.sim.schedule(
                            0.0,
                            f"register:{device_id}",
                            lambda d=device_id, s=service_id: self._guarded(
                                f"register {d}", lambda: self.protocol.register(d, s)
                            ),
                        )

        for index, action in sorted(enumerate(self.scenario.actions), key=lambda pair: (pair[1].at, pair[0])):
            if action.at < duration:
                self.sim.schedule(action.at, f"action:{action.action}", lambda a=action: self.act(a))

        self.sim.schedule(0.0, "tick:0", lambda: self.tick(0))

    def _guarded(self, what: str, call) -> None:
        try:
            call()
        except InjectionError as exc:
            logger.warning(f"{what} failed at t={self.sim.now:.3f}: {type(exc).__name__}: {exc}")

    # --- Tick ---

    def tick(self, index: int) -> None:
        scenario = self.scenario
        now = self.sim.now
        upcoming = round((index + 1) * scenario.tick, 9)
        if upcoming <= scenario.duration + 1e-9:
            self.sim.schedule(upcoming, f"tick:{index + 1}", lambda: self.tick(index + 1))
        self.ticks += 1

        if index > 0:
            self.sim.move(scenario.tick)
        for device in self.sim.devices.values():
            if device.present and device.expected_departure is not None and device.expected_departure <= now:
                device.present = False
                logger.info(f"Device {device.id} departed at t={now:.3f}")

        previous = self.sim.refresh()
        self.sim.check_world()
        self.trace.emit(
            now,
            TraceKind.TICK,
            epoch=self.sim.topology.epoch,
            alive=len(self.sim.alive_ids()),
            cliques=len(self.sim.cliques),
        )

        for device_id, service_id in self.fences.crossings(self.sim.devices.values()):
            if self.mode is not Mode.INJECTION:
                continue
            if not self.sim.device(device_id).backbone_capable:
                logger.debug(f"Device {device_id} entered the {service_id} fence without a backbone link")
                continue
            self._guarded(f"geo-fence register {device_id}", lambda: self.protocol.register(device_id, service_id))

        if self.mode is Mode.INJECTION:
            self.points.maintain(previous)
            self.backbone.purge(now)

        self._declare(now)
        injuries = self._check(now)

        if self.mode is Mode.INJECTION:
            context = RouteContext(self.catalog, self.replicas, self.backbone.item_store)
            for request in trigger_injections(injuries, self.sim.cliques, self.in_flight, now, context):
                self._guarded(f"{request.route.value} injection of {request.item_id}", lambda r=request: self._serve(r))
        elif self.mode is Mode.PURE_BACKBONE:
            self._fetch_individually(injuries, now)

        self._sample(index, now, len(injuries))

    def _declare(self, now: float) -> None:
        for requirement in self.requirements:
            if requirement.declared_at > now or requirement.key in self._declared_keys:
                continue
            self._declared_keys.add(requirement.key)
            self.declared.append(requirement)
            self.trace.emit(
                now,
                TraceKind.DECLARE,
                seeker=requirement.seeker,
                item=requirement.item_id,
                max_age=requirement.max_tolerated_age,
                max_wait=requirement.max_wait,
                profile=requirement.profile,
            )

    def _check(self, now: float) -> List[Injury]:
        """Injuries of alive seekers; INJURY is traced only when a requirement becomes injured."""
        injuries = [
            i for i in check_requirements(self.declared, self.replicas, now) if self.sim.is_alive(i.requirement.seeker)
        ]
        current = {i.requirement.key for i in injuries}
        for injury in injuries:
            if injury.requirement.key in self._injured:
                continue
            self.trace.emit(
                now,
                TraceKind.INJURY,
                seeker=injury.requirement.seeker,
                item=injury.requirement.item_id,
                reason=injury.reason,
                age=injury.age,
            )
        self._injured = current
        return injuries

    def _serve(self, request: InjectionRequest) -> None:
        clique = self.sim.clique_by_id(request.clique_id)
        now = self.sim.now
        if request.route is Route.LOCAL:
            replica = self.replicas.get(request.holder, request.item_id)
            item = self.catalog.materialize(replica.item_id, replica.version, replica.produced_at)
            key = f"local-{next(self._local_ids)}"
            self.in_flight.add(request.clique_id, request.item_id, key, now, self.timeout)
            self.in_flight.mark_delivered(key)
            logger.info(f"Local repair of {request.item_id} in clique {request.clique_id} from {request.holder}")
            self.epidemics.start(
                request.holder, item, on_complete=lambda _: self.in_flight.release(key), source=request.holder
            )
            return
        if request.route is Route.BACKBONE:
            event = self.protocol.backbone_injection_requested(clique, request.item_id)
        elif request.route is Route.WORMHOLE:
            event = self.protocol.wormhole_mediated(clique, request.item_id)
        else:
            logger.debug(f"Unservable {request.item_id} in clique {request.clique_id}: {request.reason}")
            return
        self.in_flight.add(request.clique_id, request.item_id, event.event_id, now, self.timeout)

    def _fetch_individually(self, injuries: List[Injury], now: float) -> None:
        # keyed by seeker: in this mode every device fetches alone
        for injury in injuries:
            seeker, item_id = injury.requirement.key
            if self.in_flight.active(seeker, item_id, now):
                continue
            definition = self.catalog.definition(item_id)
            if not self.sim.device(seeker).backbone_capable or definition.properties.scope is Scope.CLIQUE_LOCAL:
                if seeker not in self.unserved:
                    logger.warning(f"Device {seeker} cannot fetch {item_id} from the backbone")
                self.unserved.add(seeker)
                continue
            event = self.protocol.entity_driven_injection(seeker, item_id, spread=False)
            self.in_flight.add(seeker, item_id, event.event_id, now, self.timeout)

    def _sample(self, index: int, now: float, injured: int) -> None:
        alive_requirements = [r for r in self.declared if self.sim.is_alive(r.seeker)]
        mean_age = self.collector.sample_ages(alive_requirements, self.replicas, now)
        row = {
            "time": now,
            "epoch": self.sim.topology.epoch,
            "alive": len(self.sim.alive_ids()),
            "cliques": len(self.sim.cliques),
            "injured": injured,
            "mean_age": mean_age,
            "backbone_cost": self.ledger.backbone_units,
            "adhoc_cost": self.ledger.adhoc_units,
            "energy_spent": self.ledger.energy_spent,
            "global_efficiency": None,
            "hybrid_global_efficiency": None,
            "uncovered_cliques": None,
        }
        if index % self.scenario.metrics_every == 0:
            graph, hybrid = self._graph_metrics()
            declarations: Dict[int, List[str]] = {}
            for requirement in alive_requirements:
                declarations.setdefault(requirement.seeker, []).append(requirement.item_id)
            plan = plan_multi_injection(
                self.sim.cliques,
                declarations,
                self.sim.devices,
                self.sim.topology,
                self.scenario.weights,
                self.scenario.horizon,
                now,
            )
            row["global_efficiency"] = graph.global_efficiency if graph else None
            row["hybrid_global_efficiency"] = hybrid.global_efficiency if hybrid else None
            row["uncovered_cliques"] = len(plan.uncovered)
        self.collector.record(**row)

    def _graph_metrics(self):
        self._last_graph = try_graph_efficiency(self.sim.topology, self.sim.devices)
        self._last_hybrid = try_graph_efficiency(self.sim.topology, self.sim.devices, hybrid=True)
        return self._last_graph, self._last_hybrid

    # --- Production ---

    def produce(self, item_id: str) -> None:
        definition = self.catalog.definition(item_id)
        now = self.sim.now
        if definition.origin == BACKBONE_AUTHORITY:
            item = self.catalog.produce(item_id, now)
            self.trace.emit(now, TraceKind.PRODUCE, item=item_id, ver=item.version, origin=BACKBONE)
            if self.mode is Mode.PURE_ADHOC:
                return
            self.backbone.store(item)
            if self.mode is Mode.INJECTION and definition.properties.propagation_priority is Priority.HIGH:
                plan = propagation_plan(definition, self.sim.cliques, self.declared)
                self._guarded(
                    f"push of {item_id}",
                    lambda: self.protocol.backbone_injection_spontaneous(
                        definition.service_id, item_id, plan.clique_ids
                    ),
                )
            return

        producer = definition.origin
        if not self.sim.is_alive(producer):
            logger.info(f"Producer {producer} of {item_id} is gone; nothing produced at t={now:.3f}")
            return
        item = self.catalog.produce(item_id, now)
        self.trace.emit(now, TraceKind.PRODUCE, item=item_id, ver=item.version, origin=producer)
        self.epidemics.receive(producer, item, producer, None)

        if self.mode is Mode.PURE_BACKBONE:
            if item.scope is Scope.GLOBAL and self.sim.device(producer).backbone_capable:
                self.messenger.send(
                    Message(
                        kind=MessageKind.FORWARD,
                        hop=Hop.BACKBONE,
                        sender=producer,
                        receiver=BACKBONE,
                        item_id=item_id,
                        version=item.version,
                        scope=item.scope,
                    )
                )
                self.sim.after(self.scenario.backbone_latency, f"store:{item_id}", lambda: self.backbone.store(item))
            return

        self.epidemics.start(producer, item, source=producer)
        if self.mode is not Mode.INJECTION or item.scope is not Scope.GLOBAL:
            return
        if definition.service_id in self.sim.device(producer).registrations:
            self._guarded(f"re-register {producer}", lambda: self.protocol.register(producer, definition.service_id))
        if definition.properties.propagation_priority is Priority.HIGH:
            self._guarded(
                f"upload of {item_id}",
                lambda: self.protocol.clique_injection(
                    self.sim.clique_of(producer), item_id, forced=False, initiator=producer
                ),
            )

    # --- Scripted actions ---

    def _clique(self, device_id: int) -> Optional[Clique]:
        clique = self.sim.clique_of(device_id)
        if clique is None:
            logger.warning(f"Device {device_id} is in no clique at t={self.sim.now:.3f}")
        return clique

    def act(self, action: ActionSpec) -> None:
        name = action.action
        if name == "set_backbone_capable":
            self.sim.device(action.device).backbone_capable = action.value
            logger.info(f"Device {action.device} backbone_capable={action.value}")
            return
        if name == "kill":
            self.sim.device(action.device).battery = 0.0
            logger.info(f"Device {action.device} killed at t={self.sim.now:.3f}")
            return
        if name == "move_to":
            device = self.sim.device(action.device)
            device.speed_range = None
            if device.speed > 0:
                device.waypoint = tuple(action.position)
            else:
                device.position = tuple(action.position)
                device.waypoint = None
            return

        if self.mode is not Mode.INJECTION:
            logger.debug(f"Skipping {name} outside injection mode")
            return

        if name == "register":
            self._guarded(f"register {action.device}", lambda: self.protocol.register(action.device, action.service_id))
            return
        if name == "entity_fetch":
            self._guarded(
                f"entity fetch by {action.device}",
                lambda: self.protocol.entity_driven_injection(action.device, action.item_id),
            )
            return
        if name == "wormhole_direct":
            source, target = self._clique(action.source), self._clique(action.target)
            if source is not None and target is not None:
                self._guarded(
                    f"direct wormhole {source.clique_id}->{target.clique_id}",
                    lambda: self.protocol.wormhole_direct(source, target, action.item_id),
                )
            return

        clique = self._clique(action.device)
        if clique is None:
            return
        if name == "force_clique_injection":
            self._guarded(
                f"forced upload from clique {clique.clique_id}",
                lambda: self.protocol.clique_injection(clique, action.item_id, forced=True),
            )
        elif name == "wormhole_mediated":
            self._guarded(
                f"mediated wormhole into clique {clique.clique_id}",
                lambda: self.protocol.wormhole_mediated(clique, action.item_id),
            )

    # --- End of run ---

    def finish(self) -> RunMetrics:
        closed = self.protocol.close()
        if closed:
            logger.info(f"Closed {closed} injections still open at the end of the run")
        graph, hybrid = self._graph_metrics()
        total = self.messenger.total
        return summarize(
            scenario=self.scenario.name,
            mode=self.mode.value,
            seed=self.scenario.seed,
            duration=self.scenario.duration,
            ledger=self.ledger,
            message_counts={"backbone": total.backbone, "adhoc": total.adhoc},
            requirements=self.declared,
            replicas=self.replicas,
            collector=self.collector,
            injections_by_kind=self.protocol.by_kind(),
            graph=graph,
            hybrid=hybrid,
            elections=self.points.elections,
            handovers=self.points.handovers,
        )


def simulate(scenario: Scenario, mode: Optional[Mode] = None) -> RunResult:
    """
    One run of `scenario` in `mode` (default: the scenario's own).

    Raises:
        InvariantViolation: the world broke an invariant; the run is aborted.
    """
    world = World(scenario, mode)
    logger.info(f"Running {scenario.name} ({world.mode.value}, seed {scenario.seed}, {scenario.duration}s)")
    world.start()
    world.sim.run(until=scenario.duration)
    metrics = world.finish()
    logger.info(f"{scenario.name} done: cost {metrics.total_cost}, coverage {metrics.coverage:.3f}")
    return RunResult(scenario, world.mode, world.trace, metrics, world.collector.series(), world)


def run(
    scenario: Scenario,
    trace_path: Optional[Union[str, Path]] = None,
    metrics_path: Optional[Union[str, Path]] = None,
    series_path: Optional[Union[str, Path]] = None,
    baselines: bool = True,
) -> RunResult:
    """
    simulate, then fill in the baselines (injection mode only) and write
    whichever artifacts were asked for.
    """
    result = simulate(scenario)
    if baselines and result.mode is Mode.INJECTION:
        result.metrics.baseline_backbone_cost = baseline_pure_backbone(scenario).cost
        result.metrics.baseline_adhoc_coverage = baseline_pure_adhoc(scenario).coverage

    if trace_path is not None:
        result.trace.write(trace_path)
    if metrics_path is not None:
        write_metrics(result.metrics, metrics_path)
    if series_path is not None:
        write_series(result.series, series_path)
    return result


__all__ = [
    "build_devices",
    "build_catalog",
    "build_requirements",
    "build_roles",
    "RunResult",
    "World",
    "simulate",
    "run",
]
