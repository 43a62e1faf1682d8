import networkx as nx
import numpy as np
import pytest
from pydantic import ValidationError

from conftest import make_devices
from injection_point.scoring import (
    NoEligibleDevice,
    NotEligible,
    ScoreWeights,
    dwell_term,
    elect_injection_point,
    election_messages,
    score_device,
)
from sim_core.devices import Device, distance
from sim_core.topology import Clique, compute_cliques, rebuild_topology


def brute_force_winner(devices, members, weights, horizon, now):
    """Plain re-derivation of the election rule, independent of the scoring module."""
    graph = nx.Graph()
    graph.add_nodes_from(members)
    for a in members:
        for b in members:
            if a < b and distance(devices[a].position, devices[b].position) <= min(
                devices[a].radio_range, devices[b].radio_range
            ):
                graph.add_edge(a, b)
    w = [weights.w_power, weights.w_dwell, weights.w_cluster, weights.w_load, weights.w_equipment]
    best_id, best_total = None, None
    for m in sorted(members):
        d = devices[m]
        if not (d.alive and d.backbone_capable):
            continue
        if d.expected_departure is None:
            dwell = 1.0
        else:
            dwell = min(1.0, max(0.0, (d.expected_departure - now) / horizon))
        terms = [d.battery, dwell, nx.clustering(graph, m), 1.0 / (1.0 + d.load), d.equipment_score]
        total = sum(x * y for x, y in zip(w, terms))
        if best_total is None or total > best_total:
            best_id, best_total = m, total
    return best_id


def test_weights_must_sum_to_one():
    assert ScoreWeights().as_array().sum() == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        ScoreWeights(w_power=0.9)


def test_dwell_term_is_clamped():
    device = Device(id=0, position=(0.0, 0.0))
    assert dwell_term(device, 0.0, 100.0) == 1.0
    device.expected_departure = 50.0
    assert dwell_term(device, 0.0, 100.0) == 0.5
    assert dwell_term(device, 60.0, 100.0) == 0.0
    assert dwell_term(device, 0.0, 10.0) == 1.0


def test_score_terms_and_total():
    devices = make_devices([(0, 0), (10, 0), (5, 5)], battery=0.5, load=1, equipment_score=0.4)
    topology = rebuild_topology(devices)
    (clique,) = compute_cliques(topology, devices)
    score = score_device(devices[0], clique, topology, ScoreWeights.uniform())
    assert score.power_term == 0.5
    assert score.cluster_term == 1.0
    assert score.load_term == 0.5
    assert score.total == pytest.approx(0.2 * (0.5 + 1.0 + 1.0 + 0.5 + 0.4))


def test_ineligible_devices_are_not_scored():
    devices = make_devices([(0, 0), (10, 0)])
    devices[1].backbone_capable = False
    topology = rebuild_topology(devices)
    (clique,) = compute_cliques(topology, devices)
    with pytest.raises(NotEligible):
        score_device(devices[1], clique, topology, ScoreWeights())
    with pytest.raises(ValueError):
        score_device(Device(id=9, position=(0.0, 0.0)), clique, topology, ScoreWeights())


def test_no_capable_member():
    devices = make_devices([(0, 0), (10, 0)], backbone_capable=False)
    topology = rebuild_topology(devices)
    (clique,) = compute_cliques(topology, devices)
    with pytest.raises(NoEligibleDevice):
        elect_injection_point(clique, {d.id: d for d in devices}, topology, ScoreWeights())
    assert clique.injection_point is None


def test_ties_go_to_the_lowest_id():
    devices = make_devices([(0, 0), (10, 0)])
    topology = rebuild_topology(devices)
    (clique,) = compute_cliques(topology, devices)
    assert elect_injection_point(clique, {d.id: d for d in devices}, topology, ScoreWeights()) == 0
    assert clique.injection_point == 0


def test_election_message_count():
    assert election_messages(Clique(frozenset({4}))) == 0
    assert election_messages(Clique(frozenset({1, 2, 3, 4}))) == 6


def test_election_matches_brute_force_on_random_cliques():
    rng = np.random.default_rng(777)
    weights = ScoreWeights(w_power=0.35, w_dwell=0.2, w_cluster=0.25, w_load=0.1, w_equipment=0.1)
    horizon, now = 300.0, 12.0
    checked = 0
    while checked < 200:
        n = int(rng.integers(1, 16))
        devices = {
            i: Device(
                id=i,
                position=(float(rng.uniform(0, 120)), float(rng.uniform(0, 120))),
                radio_range=float(rng.uniform(30, 90)),
                battery=float(rng.uniform(0.01, 1.0)),
                backbone_capable=bool(rng.random() < 0.8),
                equipment_score=float(rng.uniform(0, 1)),
                load=int(rng.integers(0, 4)),
                expected_departure=None if rng.random() < 0.3 else float(rng.uniform(0, 600)),
            )
            for i in range(n)
        }
        topology = rebuild_topology(devices.values())
        for clique in compute_cliques(topology, devices.values()):
            expected = brute_force_winner(devices, clique.members, weights, horizon, now)
            if expected is None:
                with pytest.raises(NoEligibleDevice):
                    elect_injection_point(clique, devices, topology, weights, horizon, now)
            else:
                assert elect_injection_point(clique, devices, topology, weights, horizon, now) == expected
            checked += 1


@pytest.mark.parametrize("factor", [1.0, 0.8, 0.35, 0.01])
def test_scaling_batteries_keeps_the_power_only_winner(factor):
    rng = np.random.default_rng(31)
    weights = ScoreWeights(w_power=1.0, w_dwell=0.0, w_cluster=0.0, w_load=0.0, w_equipment=0.0)
    devices = make_devices([(10.0 + 4 * i, 50.0) for i in range(10)])
    for device, battery in zip(devices, rng.uniform(0.05, 1.0, size=len(devices))):
        device.battery = float(battery)
    topology = rebuild_topology(devices)
    (clique,) = compute_cliques(topology, devices)
    by_id = {d.id: d for d in devices}
    before = elect_injection_point(clique, by_id, topology, weights)
    assert before == max(devices, key=lambda d: d.battery).id

    for device in devices:
        device.battery *= factor
    assert elect_injection_point(clique, by_id, topology, weights) == before
