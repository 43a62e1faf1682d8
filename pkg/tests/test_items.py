import pytest
from pydantic import ValidationError

from conftest import definition, make_catalog
from consistency.items import ConsistencyProperties, Priority, ProviderRole, Scope, payload_digest
from consistency.replicas import Reconcile, ReplicaStore, age_of, reconcile


def test_authority_versions_count_up():
    catalog = make_catalog(definition("x"))
    first = catalog.produce("x", 0.0)
    second = catalog.produce("x", 10.0)
    assert (first.version, second.version) == (1, 2)
    assert second.payload_digest == payload_digest("x", 2)
    assert catalog.latest["x"] is second
    assert first.from_backbone


def test_production_cannot_go_back_in_time():
    catalog = make_catalog(definition("x"))
    catalog.produce("x", 5.0)
    with pytest.raises(ValueError):
        catalog.produce("x", 4.0)


def test_duplicate_definition():
    with pytest.raises(ValueError):
        make_catalog(definition("x"), definition("x"))


def test_materialize_rebuilds_a_produced_version():
    catalog = make_catalog(definition("x", origin=3, scope=Scope.CLIQUE_LOCAL))
    produced = catalog.produce("x", 2.0)
    assert catalog.materialize("x", 1, 2.0) == produced
    assert produced.scope is Scope.CLIQUE_LOCAL


def test_items_of_service_are_sorted():
    catalog = make_catalog(definition("b"), definition("a"), definition("c", service_id="other"))
    assert catalog.items_of_service("svc") == ["a", "b"]
    assert catalog.service_of("c") == "other"


def test_priority_rank():
    ranked = sorted(Priority, key=lambda p: p.rank)
    assert ranked == [Priority.HIGH, Priority.NORMAL, Priority.LOW]


def test_properties_validation():
    assert ConsistencyProperties().scope is Scope.GLOBAL
    with pytest.raises(ValidationError):
        ConsistencyProperties(max_staleness=0)


def test_provider_offers_own_listed_and_delegated_items():
    own = definition("own", origin=1)
    listed = definition("listed", origin=9)
    delegated = definition("delegated", origin=4)
    role = ProviderRole(device=1, provided_items=frozenset({"listed"}), delegate_of=4)
    assert role.offers(own) and role.offers(listed) and role.offers(delegated)
    assert not ProviderRole(device=2).offers(own)


def test_reconcile_outcomes():
    catalog = make_catalog(definition("x"))
    v1, v2 = catalog.produce("x", 0.0), catalog.produce("x", 1.0)
    replica, outcome = reconcile(None, v1, holder=5, now=0.5)
    assert outcome is Reconcile.UPDATED and replica.version == 1
    replica, outcome = reconcile(replica, v2, holder=5, now=1.5)
    assert outcome is Reconcile.UPDATED and replica.received_at == 1.5
    assert reconcile(replica, v2, 5, 2.0)[1] is Reconcile.DUPLICATE
    assert reconcile(replica, v1, 5, 2.0)[1] is Reconcile.STALE


def test_store_keeps_highest_version_and_counts_stale_pushes():
    catalog = make_catalog(definition("x"))
    v1, v2 = catalog.produce("x", 0.0), catalog.produce("x", 1.0)
    store = ReplicaStore()
    store.accept(1, v2, 1.0)
    assert store.accept(1, v1, 2.0) is Reconcile.STALE
    assert store.version(1, "x") == 2
    assert store.stale_pushes == 1
    assert store.version(2, "x") == 0


def test_holders_freshest_first():
    catalog = make_catalog(definition("x"))
    v1, v2 = catalog.produce("x", 0.0), catalog.produce("x", 1.0)
    store = ReplicaStore()
    store.accept(4, v1, 1.0)
    store.accept(3, v2, 1.0)
    store.accept(2, v2, 1.0)
    assert [r.holder for r in store.holders("x")] == [2, 3, 4]
    assert [r.holder for r in store.holders("x", {3, 4})] == [3, 4]


def test_age_counts_from_production():
    catalog = make_catalog(definition("x"))
    item = catalog.produce("x", 10.0)
    store = ReplicaStore()
    store.accept(1, item, 12.0)
    replica = store.get(1, "x")
    assert age_of(replica, 40.0) == 30.0
    with pytest.raises(ValueError):
        age_of(replica, 11.0)
