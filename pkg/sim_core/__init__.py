"""Discrete-event engine and the physical world: devices, mobility, topology, cliques."""
