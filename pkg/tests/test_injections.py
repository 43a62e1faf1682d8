from types import SimpleNamespace

import pytest

from conftest import definition, line_positions, make_catalog, make_devices, make_sim
from consistency.items import ProviderRole, Scope
from consistency.replicas import ReplicaStore
from cost_metrics.ledger import CostLedger
from epidemic.manager import EpidemicManager
from injection_point.maintenance import InjectionPointManager
from injection_protocol.backbone import BackboneService
from injection_protocol.errors import (
    InvalidWormhole,
    ItemNotPresentInClique,
    NoBackboneCapableDevice,
    NoHolderClique,
    NotBackboneCapable,
    NotRegistered,
    ScopeViolation,
)
from injection_protocol.injections import InjectionKind, InjectionProtocol, InjectionStatus
from injection_protocol.messages import Messenger
from sim_core.trace import TraceKind

# two cliques: devices 0 and 1 on the left, 2 and 3 far away on the right
TWO_CLIQUES = [(10, 50), (15, 50), (150, 150), (155, 150)]


def world(positions, *definitions, providers=None):
    devices = make_devices(positions)
    sim = make_sim(devices)
    catalog = make_catalog(*definitions)
    replicas = ReplicaStore()
    ledger = CostLedger()
    messenger = Messenger(sim, ledger)
    backbone = BackboneService(catalog)
    epidemics = EpidemicManager(sim, replicas, messenger)
    points = InjectionPointManager(sim, messenger)
    protocol = InjectionProtocol(
        sim,
        catalog,
        backbone,
        replicas,
        messenger,
        ledger,
        epidemics,
        points,
        interest_of=lambda members, item_id: frozenset(members),
        providers=providers,
    )
    return SimpleNamespace(
        devices=devices,
        sim=sim,
        catalog=catalog,
        replicas=replicas,
        ledger=ledger,
        messenger=messenger,
        backbone=backbone,
        epidemics=epidemics,
        protocol=protocol,
    )


def inject_records(w):
    return w.sim.trace.of_kind(TraceKind.INJECT)


# --- Backbone injections ---


def test_requested_injection_serves_the_whole_clique():
    w = world(line_positions(4), definition("x"))
    w.backbone.store(w.catalog.produce("x", 0.0))
    (clique,) = w.sim.cliques
    event = w.protocol.backbone_injection_requested(clique, "x")
    w.sim.run()

    assert event.status is InjectionStatus.DELIVERED
    assert event.injection_point == 0
    assert event.delivered_at == pytest.approx(1.0)
    assert event.backbone_messages == 2
    # election probe/reply plus one push per other member
    assert event.adhoc_messages == 2 * 3 + 3
    assert all(w.replicas.version(d, "x") == 1 for d in range(4))
    assert w.ledger.backbone_units == 200
    assert all(w.ledger.account(d).backbone_units == 50 for d in range(4))
    (record,) = inject_records(w)
    assert record.get("kind") == "BackboneRequested"
    assert record.get("payers") == "0,1,2,3"


def test_requested_injection_of_an_unknown_item_fails():
    w = world(line_positions(2), definition("x"))
    (clique,) = w.sim.cliques
    event = w.protocol.backbone_injection_requested(clique, "x")
    w.sim.run()
    assert event.status is InjectionStatus.FAILED
    assert event.error == "UnknownItem"
    assert event.backbone_messages == 2


def test_no_capable_member():
    w = world(line_positions(2), definition("x"))
    for device in w.devices:
        device.backbone_capable = False
    (clique,) = w.sim.cliques
    with pytest.raises(NoBackboneCapableDevice):
        w.protocol.backbone_injection_requested(clique, "x")


def test_entity_driven_fetch_without_sharing():
    w = world(line_positions(3), definition("x"))
    w.backbone.store(w.catalog.produce("x", 0.0))
    event = w.protocol.entity_driven_injection(1, "x", spread=False)
    w.sim.run()
    assert event.kind is InjectionKind.ENTITY_DRIVEN
    assert [w.replicas.version(d, "x") for d in range(3)] == [0, 1, 0]
    assert w.ledger.account(1).backbone_units == 200
    assert w.messenger.total.adhoc == 0


def test_entity_driven_needs_a_backbone_link():
    w = world(line_positions(2), definition("x"))
    w.devices[0].backbone_capable = False
    with pytest.raises(NotBackboneCapable):
        w.protocol.entity_driven_injection(0, "x")


def test_spontaneous_push_reaches_one_registrant_per_clique():
    w = world(TWO_CLIQUES, definition("x"))
    for device in (0, 1, 2):
        w.protocol.register(device, "svc")
    w.backbone.store(w.catalog.produce("x", 0.0))
    events = w.protocol.backbone_injection_spontaneous("svc", "x")
    w.sim.run()
    assert [e.target_clique for e in events] == [0, 2]
    assert all(e.backbone_messages == 1 for e in events)
    assert all(w.replicas.version(d, "x") == 1 for d in range(4))


def test_spontaneous_push_marks_unreachable_registrants_stale():
    w = world(TWO_CLIQUES, definition("x"))
    w.protocol.register(0, "svc")
    w.protocol.register(2, "svc")
    w.devices[2].battery = 0.0
    w.sim.refresh()
    w.backbone.store(w.catalog.produce("x", 0.0))
    events = w.protocol.backbone_injection_spontaneous("svc", "x")
    assert [e.target_clique for e in events] == [0]
    assert [e.device for e in w.backbone.registrants("svc")] == [0]


def test_spontaneous_push_without_registrants():
    w = world(TWO_CLIQUES, definition("x"))
    w.backbone.store(w.catalog.produce("x", 0.0))
    assert w.protocol.backbone_injection_spontaneous("svc", "x") == []


# --- Clique injections ---


def test_spontaneous_clique_injection_uploads_to_the_backbone():
    w = world(line_positions(3), definition("d", origin=2))
    w.replicas.accept(2, w.catalog.produce("d", 0.0), 0.0)
    (clique,) = w.sim.cliques
    event = w.protocol.clique_injection(clique, "d", forced=False, initiator=2)
    w.sim.run()
    assert event.initiator == 2
    assert event.status is InjectionStatus.DELIVERED
    assert w.backbone.lookup("d").version == 1
    # the injection point gathers over one ad-hoc hop, then uploads once
    assert event.backbone_messages == 1
    assert w.replicas.version(event.injection_point, "d") == 1


def test_clique_local_items_never_leave():
    w = world(line_positions(2), definition("board", origin=0, scope=Scope.CLIQUE_LOCAL))
    w.replicas.accept(0, w.catalog.produce("board", 0.0), 0.0)
    (clique,) = w.sim.cliques
    with pytest.raises(ScopeViolation):
        w.protocol.clique_injection(clique, "board", forced=False)


def test_spontaneous_upload_needs_a_holder():
    w = world(line_positions(2), definition("d", origin=1))
    (clique,) = w.sim.cliques
    with pytest.raises(ItemNotPresentInClique):
        w.protocol.clique_injection(clique, "d", forced=False)


def test_forced_injection_contacts_a_registered_member():
    w = world(line_positions(3), definition("d", origin=1))
    (clique,) = w.sim.cliques
    with pytest.raises(NotRegistered):
        w.protocol.clique_injection(clique, "d", forced=True)

    w.replicas.accept(1, w.catalog.produce("d", 0.0), 0.0)
    w.protocol.register(1, "svc")
    event = w.protocol.clique_injection(clique, "d", forced=True)
    w.sim.run()
    assert event.kind is InjectionKind.CLIQUE_FORCED
    assert event.injection_point == 1
    assert event.backbone_messages == 2
    assert w.backbone.lookup("d").version == 1


# --- Wormholes ---


def test_direct_wormhole_relays_without_storing():
    w = world(TWO_CLIQUES, definition("d", origin=0))
    w.replicas.accept(0, w.catalog.produce("d", 0.0), 0.0)
    w.protocol.register(2, "svc")
    source, target = w.sim.cliques
    digest = w.backbone.store_digest()

    event = w.protocol.wormhole_direct(source, target, "d")
    w.sim.run()
    assert event.status is InjectionStatus.DELIVERED
    assert (event.source_clique, event.target_clique, event.injection_point) == (0, 2, 2)
    assert event.backbone_messages == 2
    assert w.backbone.store_digest() == digest
    assert w.backbone.lookup("d") is None
    assert [w.replicas.version(d, "d") for d in (2, 3)] == [1, 1]


def test_direct_wormhole_times_out_on_an_unreachable_receiver():
    w = world(TWO_CLIQUES, definition("d", origin=0))
    w.replicas.accept(0, w.catalog.produce("d", 0.0), 0.0)
    w.protocol.register(2, "svc")
    w.devices[2].backbone_capable = False
    source, target = w.sim.cliques
    event = w.protocol.wormhole_direct(source, target, "d")
    w.sim.run()
    assert event.error == "TargetUnreachable"
    assert event.backbone_messages == 2
    assert w.replicas.version(2, "d") == 0


def test_direct_wormhole_preconditions():
    w = world(TWO_CLIQUES, definition("d", origin=0))
    source, target = w.sim.cliques
    with pytest.raises(InvalidWormhole):
        w.protocol.wormhole_direct(source, source, "d")
    with pytest.raises(ItemNotPresentInClique):
        w.protocol.wormhole_direct(source, target, "d")
    w.replicas.accept(0, w.catalog.produce("d", 0.0), 0.0)
    with pytest.raises(NotRegistered):
        w.protocol.wormhole_direct(source, target, "d")


def test_mediated_wormhole_uses_three_backbone_messages_and_stores_nothing():
    w = world(TWO_CLIQUES, definition("d", origin=0))
    w.replicas.accept(0, w.catalog.produce("d", 0.0), 0.0)
    w.protocol.register(0, "svc")
    _, requesting = w.sim.cliques
    digest = w.backbone.store_digest()

    event = w.protocol.wormhole_mediated(requesting, "d")
    w.sim.run()
    assert event.status is InjectionStatus.DELIVERED
    assert event.source_clique == 0
    assert event.backbone_messages == 3
    assert w.backbone.store_digest() == digest
    assert [w.replicas.version(d, "d") for d in (2, 3)] == [1, 1]
    kinds = [r.get("kind") for r in w.sim.trace.of_kind(TraceKind.MSG) if r.get("inj") == event.event_id]
    assert [k for k in kinds if k != "Probe" and k != "Ack"] == ["ForceInject", "Forward", "Deliver", "Forward"]


def test_mediated_wormhole_needs_another_holder_clique():
    w = world(TWO_CLIQUES, definition("d", origin=0), definition("board", origin=0, scope=Scope.CLIQUE_LOCAL))
    _, requesting = w.sim.cliques
    with pytest.raises(NoHolderClique):
        w.protocol.wormhole_mediated(requesting, "d")
    with pytest.raises(ScopeViolation):
        w.protocol.wormhole_mediated(requesting, "board")


# holders on the left and at the bottom right, the requesting pair at the top left
THREE_CLIQUES = [(10, 50), (15, 50), (150, 150), (155, 150), (10, 180), (15, 180)]


@pytest.mark.parametrize(
    "left, right, chosen",
    [(1, 2, 2), (2, 1, 0), (1, 1, 0)],
    ids=["fresher_right", "fresher_left", "tie_lowest_clique"],
)
def test_mediated_wormhole_prefers_the_freshest_then_the_lowest_clique(left, right, chosen):
    w = world(THREE_CLIQUES, definition("d", origin=0))
    versions = [w.catalog.produce("d", float(t)) for t in range(2)]
    w.replicas.accept(2, versions[right - 1], 0.0)
    w.protocol.register(2, "svc")
    w.replicas.accept(0, versions[left - 1], 0.0)
    w.protocol.register(0, "svc")
    requesting = w.sim.clique_of(4)

    event = w.protocol.wormhole_mediated(requesting, "d")
    assert event.source_clique == chosen
    w.sim.run()
    assert event.status is InjectionStatus.DELIVERED
    assert w.replicas.version(5, "d") == max(left, right)


# --- Registration and bookkeeping ---


def test_registration_advertises_only_offered_items():
    providers = {0: ProviderRole(device=0), 1: ProviderRole(device=1, delegate_of=0)}
    w = world(line_positions(2), definition("d", origin=0), definition("x"), providers=providers)
    item = w.catalog.produce("d", 0.0)
    w.replicas.accept(0, item, 0.0)
    w.replicas.accept(1, item, 0.0)

    assert w.protocol.register(0, "svc").advertised == {"d": 1}
    assert w.protocol.register(1, "svc").advertised == {"d": 1}
    assert w.devices[0].registrations == {"svc"}
    assert w.ledger.account(0).backbone_units == 100

    w.protocol.providers = {0: ProviderRole(device=0)}
    assert w.protocol.register(1, "svc").advertised == {}


def test_close_fails_what_never_arrived():
    w = world(line_positions(2), definition("x"))
    w.backbone.store(w.catalog.produce("x", 0.0))
    (clique,) = w.sim.cliques
    event = w.protocol.backbone_injection_requested(clique, "x")
    assert w.protocol.pending() == [event]
    assert w.protocol.close() == 1
    assert event.error == "RunEnded"
    assert event.status is InjectionStatus.FAILED
    assert w.protocol.by_kind()["BackboneRequested"] == 1
    assert w.protocol.by_kind()["WormholeMediated"] == 0
