"""
Small-world measures of the ad-hoc graph, alone and with backbone shortcuts.

    E = 1 / (N (N - 1)) * sum over ordered pairs i != j of 1 / d_ij

with hop distances d_ij and 1 / d_ij = 0 for disconnected pairs.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Mapping, Optional

import networkx as nx

from sim_core.devices import Device
from sim_core.topology import AdHocTopology

logger = logging.getLogger(__name__)


class FewerThanTwoDevices(ValueError):
    pass


@dataclass(frozen=True)
class GraphMetrics:
    nodes: int
    characteristic_path_length: Optional[float]
    global_efficiency: float
    disconnected_fraction: float


def _measure(graph: nx.Graph) -> GraphMetrics:
    n = graph.number_of_nodes()
    if n < 2:
        raise FewerThanTwoDevices(f"Need at least two alive devices, got {n}")
    pairs = n * (n - 1)
    total_hops = 0
    connected = 0
    inverse = 0.0
    for _, targets in nx.all_pairs_shortest_path_length(graph):
        for distance in targets.values():
            if distance > 0:
                total_hops += distance
                connected += 1
                inverse += 1.0 / distance
    path_length = total_hops / connected if connected else None
    return GraphMetrics(
        nodes=n,
        characteristic_path_length=path_length,
        global_efficiency=inverse / pairs,
        disconnected_fraction=(pairs - connected) / pairs,
    )


def hybrid_graph(topology: AdHocTopology, devices: Mapping[int, Device]) -> nx.Graph:
    """The ad-hoc graph plus a virtual edge between every two backbone-capable devices."""
    graph = topology.graph.copy()
    capable = sorted(d for d in graph.nodes if devices[d].backbone_capable)
    graph.add_edges_from(itertools.combinations(capable, 2))
    return graph


def graph_efficiency(
    topology: AdHocTopology, devices: Optional[Mapping[int, Device]] = None, hybrid: bool = False
) -> GraphMetrics:
    """
    Characteristic path length (mean hops over connected ordered pairs, None
    when no pair is connected) and global efficiency of the alive devices.

    Raises:
        FewerThanTwoDevices: fewer than two alive devices.
    """
    if hybrid:
        if devices is None:
            raise ValueError("The hybrid graph needs the device table")
        return _measure(hybrid_graph(topology, devices))
    return _measure(topology.graph)


def try_graph_efficiency(
    topology: AdHocTopology, devices: Mapping[int, Device], hybrid: bool = False
) -> Optional[GraphMetrics]:
    """graph_efficiency, or None when the world is too empty to measure."""
    try:
        return graph_efficiency(topology, devices, hybrid)
    except FewerThanTwoDevices:
        return None


__all__ = [
    "FewerThanTwoDevices",
    "GraphMetrics",
    "hybrid_graph",
    "graph_efficiency",
    "try_graph_efficiency",
]
