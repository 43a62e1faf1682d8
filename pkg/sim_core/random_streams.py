from typing import Dict

import numpy as np

# Fixed order: adding a subsystem at the end keeps earlier streams unchanged.
SUBSYSTEMS = ("placement", "mobility", "gossip")


class RandomStreams:
    """One root seed split deterministically into a generator per subsystem."""

    def __init__(self, seed: int):
        self.seed = seed
        children = np.random.SeedSequence(seed).spawn(len(SUBSYSTEMS))
        self._generators: Dict[str, np.random.Generator] = {
            name: np.random.default_rng(child) for name, child in zip(SUBSYSTEMS, children)
        }

    def __getitem__(self, name: str) -> np.random.Generator:
        return self._generators[name]

    @property
    def placement(self) -> np.random.Generator:
        return self._generators["placement"]

    @property
    def mobility(self) -> np.random.Generator:
        return self._generators["mobility"]

    @property
    def gossip(self) -> np.random.Generator:
        return self._generators["gossip"]


__all__ = ["RandomStreams", "SUBSYSTEMS"]
