"""
Proximity graph and clique (connected component) maintenance.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

import networkx as nx
import numpy as np

from sim_core.devices import Device

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]


@dataclass
class AdHocTopology:
    """Symmetric, irreflexive adjacency over alive devices plus a change counter."""

    graph: nx.Graph = field(default_factory=nx.Graph)
    epoch: int = 0

    @property
    def edges(self) -> FrozenSet[Edge]:
        return frozenset((min(a, b), max(a, b)) for a, b in self.graph.edges())

    @property
    def nodes(self) -> FrozenSet[int]:
        return frozenset(self.graph.nodes())

    def neighbors(self, device_id: int) -> List[int]:
        if device_id not in self.graph:
            return []
        return sorted(self.graph.neighbors(device_id))

    def has_edge(self, a: int, b: int) -> bool:
        return self.graph.has_edge(a, b)


@dataclass
class Clique:
    """A physical group: one connected component of the ad-hoc graph."""

    members: FrozenSet[int]
    injection_point: Optional[int] = None

    def __post_init__(self):
        if not self.members:
            raise ValueError("A clique needs at least one member")
        if self.injection_point is not None and self.injection_point not in self.members:
            raise ValueError(f"Injection point {self.injection_point} is not a member")

    @property
    def clique_id(self) -> int:
        return min(self.members)

    def __contains__(self, device_id: int) -> bool:
        return device_id in self.members

    def __len__(self) -> int:
        return len(self.members)


def link_matrix(devices: List[Device]) -> np.ndarray:
    """Boolean adjacency for `devices` (in the given order) under the min-range disk rule."""
    if not devices:
        return np.zeros((0, 0), dtype=bool)
    positions = np.array([d.position for d in devices], dtype=float)
    ranges = np.array([d.radio_range for d in devices], dtype=float)
    alive = np.array([d.alive for d in devices], dtype=bool)

    dx = positions[:, 0][:, None] - positions[:, 0][None, :]
    dy = positions[:, 1][:, None] - positions[:, 1][None, :]
    dist = np.hypot(dx, dy)
    reach = np.minimum.outer(ranges, ranges)

    adjacency = (dist <= reach) & alive[:, None] & alive[None, :]
    np.fill_diagonal(adjacency, False)
    return adjacency


def rebuild_topology(
    devices: Iterable[Device], previous: Optional[AdHocTopology] = None
) -> AdHocTopology:
    """
    Recompute the proximity graph from device positions.

    An edge (a, b) exists iff both devices are alive and their distance is at
    most min(range_a, range_b). The epoch is carried over from `previous` and
    bumped iff the node or edge set changed.
    """
    ordered = sorted(devices, key=lambda d: d.id)
    adjacency = link_matrix(ordered)

    graph = nx.Graph()
    graph.add_nodes_from(d.id for d in ordered if d.alive)
    rows, cols = np.nonzero(np.triu(adjacency, k=1))
    graph.add_edges_from((ordered[i].id, ordered[j].id) for i, j in zip(rows, cols))

    topology = AdHocTopology(graph=graph, epoch=0)
    if previous is not None:
        changed = previous.edges != topology.edges or previous.nodes != topology.nodes
        topology.epoch = previous.epoch + 1 if changed else previous.epoch
        if changed:
            logger.debug(f"Topology epoch {topology.epoch}: {graph.number_of_edges()} links")
    return topology


def compute_cliques(
    topology: AdHocTopology,
    devices: Iterable[Device],
    previous: Optional[Iterable[Clique]] = None,
) -> List[Clique]:
    """
    Partition alive devices into cliques (connected components), sorted by clique_id.

    An injection point from `previous` survives iff it is still an alive member;
    when a merge brings two surviving injection points together the lower id stays.
    """
    alive = {d.id for d in devices if d.alive}
    subgraph = topology.graph.subgraph(n for n in topology.graph.nodes if n in alive)
    components = [frozenset(c) for c in nx.connected_components(subgraph)]
    # alive devices missing from the graph are singletons
    covered = set().union(*components) if components else set()
    components.extend(frozenset({d}) for d in sorted(alive - covered))

    carried = sorted(c.injection_point for c in (previous or []) if c.injection_point is not None)

    cliques = []
    for members in sorted(components, key=min):
        keep = next((ip for ip in carried if ip in members), None)
        cliques.append(Clique(members=members, injection_point=keep))
    return cliques


def clique_index(cliques: Iterable[Clique]) -> Dict[int, Clique]:
    """Map every member DeviceId to its clique."""
    index = {}
    for clique in cliques:
        for member in clique.members:
            index[member] = clique
    return index


__all__ = [
    "AdHocTopology",
    "Clique",
    "link_matrix",
    "rebuild_topology",
    "compute_cliques",
    "clique_index",
]
