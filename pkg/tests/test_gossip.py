from collections import deque

import networkx as nx
import numpy as np
import pytest

from conftest import definition, line_positions, make_catalog, make_devices, make_sim
from consistency.replicas import ReplicaStore
from cost_metrics.ledger import CostLedger
from epidemic.gossip import (
    Infection,
    InfectionState,
    Status,
    Transmission,
    gossip_round,
    infection_coverage,
    start_epidemic,
)
from epidemic.manager import EpidemicManager
from injection_protocol.messages import Messenger
from sim_core.topology import AdHocTopology, Clique
from sim_core.trace import TraceKind


def path_topology(n):
    return AdHocTopology(graph=nx.path_graph(n))


def run_to_completion(state, topology, fanout, rng, interested=None, limit=1000):
    for step in range(limit):
        state, _ = gossip_round(state, topology, fanout, rng, float(step + 1), interested=interested)
        if state.complete:
            return state
    raise AssertionError("epidemic did not finish")


def bfs_depth(graph, source):
    depth = {source: 0}
    frontier = deque([source])
    while frontier:
        node = frontier.popleft()
        for n in graph.neighbors(node):
            if n not in depth:
                depth[n] = depth[node] + 1
                frontier.append(n)
    return depth


@pytest.fixture
def item():
    return make_catalog(definition("x")).produce("x", 0.0)


def test_path_with_fanout_one_takes_one_round_per_hop(item):
    for k in range(1, 12):
        topology = path_topology(k + 1)
        clique = Clique(frozenset(range(k + 1)))
        state = start_epidemic(clique, 0, item, 0.0, topology)
        state = run_to_completion(state, topology, 1, np.random.default_rng(k))
        assert state.rounds == k
        assert state.messages == k
        assert state.infected_set == frozenset(range(k + 1))


def test_singleton_clique_is_complete_at_once(item):
    topology = AdHocTopology(graph=nx.empty_graph([5]))
    state = start_epidemic(Clique(frozenset({5})), 5, item, 0.0, topology)
    assert state.complete
    assert state.status(5) is Status.INFECTED


def test_injection_point_must_be_in_the_clique(item):
    with pytest.raises(ValueError):
        start_epidemic(Clique(frozenset({1})), 2, item, 0.0, path_topology(3))


def test_fanout_must_be_positive(item):
    topology = path_topology(3)
    state = start_epidemic(Clique(frozenset({0, 1, 2})), 0, item, 0.0, topology)
    with pytest.raises(ValueError):
        gossip_round(state, topology, 0, np.random.default_rng(0), 1.0)


def test_infection_is_monotone_and_reaches_the_component(item):
    rng = np.random.default_rng(99)
    for _ in range(30):
        graph = nx.gnp_random_graph(int(rng.integers(2, 40)), 0.15, seed=int(rng.integers(1 << 30)))
        topology = AdHocTopology(graph=graph)
        depth = bfs_depth(graph, 0)
        clique = Clique(frozenset(depth))
        state = start_epidemic(clique, 0, item, 0.0, topology)
        seen = state.infected_set
        step = 0
        while not state.complete:
            step += 1
            state, _ = gossip_round(state, topology, 2, rng, float(step))
            assert seen <= state.infected_set
            seen = state.infected_set
        assert state.infected_set == frozenset(depth)
        # every round moves the frontier by at most one hop
        assert state.rounds >= max(depth.values())
        for device, infection in state.infected.items():
            assert infection.infected_at >= depth[device]


def test_interest_filter_limits_targets(item):
    topology = path_topology(4)
    clique = Clique(frozenset(range(4)))
    state = start_epidemic(clique, 0, item, 0.0, topology, interested={1})
    state = run_to_completion(state, topology, 3, np.random.default_rng(0), interested={1})
    assert state.infected_set == frozenset({0, 1})
    assert infection_coverage(state, clique, [1, 3]) == 0.5
    assert infection_coverage(state, clique, []) == 1.0


def test_coverage_counts_interested_members_reached(item):
    clique = Clique(frozenset(range(4)))
    state = InfectionState(item=item, infected={d: Infection(d, 0.0, "backbone") for d in (0, 1, 2)})
    assert infection_coverage(state, clique, range(4)) == 0.75
    assert infection_coverage(state, clique, range(4), holders={3}) == 1.0


def test_carriers_relay_the_version(item):
    topology = path_topology(4)
    clique = Clique(frozenset(range(4)))
    state = start_epidemic(clique, 0, item, 0.0, topology, carriers={1, 2})
    assert not state.complete
    assert state.infected_set == frozenset({0, 1, 2})
    state, transmissions = gossip_round(state, topology, 1, np.random.default_rng(0), 1.0)
    assert transmissions == [Transmission(2, 3)]
    assert state.infected[3].infected_by == 2


def test_duplicate_suppression(item):
    topology = AdHocTopology(graph=nx.Graph([(0, 2), (1, 2)]))
    state = InfectionState(item=item, infected={d: Infection(d, 0.0, "backbone") for d in (0, 1)})
    after, transmissions = gossip_round(state, topology, 1, np.random.default_rng(0), 1.0)
    assert len(transmissions) == 1
    after, transmissions = gossip_round(state, topology, 1, np.random.default_rng(0), 1.0, suppress_duplicates=False)
    assert len(transmissions) == 2
    assert after.duplicates == 1


# --- Manager ---


def manager_for(n, fanout=3):
    devices = make_devices(line_positions(n))
    sim = make_sim(devices)
    store = ReplicaStore()
    messenger = Messenger(sim, CostLedger())
    return sim, store, messenger, EpidemicManager(sim, store, messenger, fanout=fanout)


def test_manager_spreads_through_the_clique_and_bills_adhoc():
    sim, store, messenger, manager = manager_for(6)
    item = make_catalog(definition("x")).produce("x", 0.0)
    manager.receive(0, item, "backbone", "inj-1")
    done = []
    handle = manager.start(0, item, attribution="inj-1", on_complete=done.append)
    sim.run()
    assert done == [handle]
    assert all(store.version(d, "x") == 1 for d in range(6))
    assert messenger.counted("inj-1").adhoc == 5
    assert messenger.ledger.adhoc_units == 5
    infections = sim.trace.of_kind(TraceKind.INFECT)
    assert len(infections) == 6
    assert all(r.get("inj") == "inj-1" for r in infections)


def test_manager_needs_the_version_at_the_source():
    _, _, _, manager = manager_for(2)
    item = make_catalog(definition("x")).produce("x", 0.0)
    with pytest.raises(ValueError):
        manager.start(0, item)


def test_holders_of_the_version_are_skipped():
    sim, store, messenger, manager = manager_for(3, fanout=1)
    item = make_catalog(definition("x")).produce("x", 0.0)
    for device in range(3):
        manager.receive(device, item, "backbone", None)
    handle = manager.start(0, item)
    assert handle.complete
    assert messenger.total.adhoc == 0


def test_holders_in_between_relay_to_the_far_end():
    # 0 - 1 - 2 on a line, 40 m apart with 50 m radios
    devices = make_devices([(10, 50), (50, 50), (90, 50)])
    sim = make_sim(devices)
    store = ReplicaStore()
    messenger = Messenger(sim, CostLedger())
    manager = EpidemicManager(sim, store, messenger, fanout=3)
    item = make_catalog(definition("x")).produce("x", 0.0)
    manager.receive(0, item, "backbone", None)
    manager.receive(1, item, "backbone", None)

    handle = manager.start(0, item, attribution="inj-1")
    assert not handle.complete
    sim.run()
    assert store.version(2, "x") == 1
    assert messenger.counted("inj-1").adhoc == 1
    (record,) = [r for r in sim.trace.of_kind(TraceKind.INFECT) if r.get("device") == "2"]
    assert record.get("by") == "1"
    assert manager.active() == []
    assert manager.handles == {}
