"""
Synchronous-round push gossip.

Everything here is a pure function of (state, topology, rng): the caller
applies the returned state and sends the returned transmissions.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import AbstractSet, Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

import numpy as np

from consistency.items import InformationItem
from sim_core.topology import AdHocTopology, Clique

Source = Union[int, str]


class Status(str, Enum):
    SUSCEPTIBLE = "susceptible"
    INFECTED = "infected"


@dataclass(frozen=True)
class Infection:
    device: int
    infected_at: float
    infected_by: Source


@dataclass(frozen=True)
class Transmission:
    sender: int
    receiver: int
    duplicate: bool = False


@dataclass(frozen=True)
class InfectionState:
    """Who holds one item version, plus the round/message tallies of its epidemic."""

    item: InformationItem
    infected: Dict[int, Infection] = field(default_factory=dict)
    rounds: int = 0
    messages: int = 0
    duplicates: int = 0
    complete: bool = False

    def status(self, device: int) -> Status:
        return Status.INFECTED if device in self.infected else Status.SUSCEPTIBLE

    @property
    def infected_set(self) -> FrozenSet[int]:
        return frozenset(self.infected)


def _candidates(
    sender: int,
    state: InfectionState,
    topology: AdHocTopology,
    skip: AbstractSet[int],
    interested: Optional[AbstractSet[int]],
) -> List[int]:
    return [
        n
        for n in topology.neighbors(sender)
        if n not in state.infected and n not in skip and (interested is None or n in interested)
    ]


def start_epidemic(
    clique: Clique,
    injection_point: int,
    item: InformationItem,
    now: float,
    topology: AdHocTopology,
    infected_by: Source = "backbone",
    skip: AbstractSet[int] = frozenset(),
    interested: Optional[AbstractSet[int]] = None,
    carriers: AbstractSet[int] = frozenset(),
) -> InfectionState:
    """
    Seed an epidemic at `injection_point`. `carriers` are clique members that
    already hold the version; they start infected and relay like any other
    sender. The state is already complete when nobody in reach still needs
    the version (a singleton clique, for instance).
    """
    if injection_point not in clique:
        raise ValueError(f"Injection point {injection_point} is not in clique {clique.clique_id}")
    infected = {d: Infection(d, now, d) for d in sorted(carriers) if d in clique and d != injection_point}
    infected[injection_point] = Infection(injection_point, now, infected_by)
    state = InfectionState(item=item, infected=infected)
    if not any(_candidates(d, state, topology, skip, interested) for d in infected):
        state = replace(state, complete=True)
    return state


def gossip_round(
    state: InfectionState,
    topology: AdHocTopology,
    fanout: int,
    rng: np.random.Generator,
    now: float,
    interested: Optional[AbstractSet[int]] = None,
    skip: AbstractSet[int] = frozenset(),
    suppress_duplicates: bool = True,
) -> Tuple[InfectionState, List[Transmission]]:
    """
    One push round.

    Every device infected at the start of the round picks up to `fanout`
    susceptible neighbours uniformly at random (senders in id order) and
    pushes to them. `interested`, when given, restricts targets to those
    devices; `skip` lists devices known to hold the version already or
    unable to receive. With duplicate suppression a device already targeted
    this round is not picked again. A round without any transmission marks
    the epidemic complete.
    """
    if fanout < 1:
        raise ValueError(f"fanout must be >= 1, got {fanout}")
    if state.complete:
        return state, []

    infected = dict(state.infected)
    targeted = set()
    transmissions: List[Transmission] = []

    for sender in sorted(state.infected):
        if sender not in topology.graph or sender in skip:
            continue
        candidates = _candidates(sender, state, topology, skip, interested)
        if suppress_duplicates:
            candidates = [c for c in candidates if c not in targeted]
        if not candidates:
            continue
        picks = rng.choice(len(candidates), size=min(fanout, len(candidates)), replace=False)
        for index in picks:
            receiver = candidates[int(index)]
            duplicate = receiver in targeted
            transmissions.append(Transmission(sender, receiver, duplicate))
            if not duplicate:
                targeted.add(receiver)
                infected[receiver] = Infection(receiver, now, sender)

    if not transmissions:
        return replace(state, complete=True), []

    updated = replace(
        state,
        infected=infected,
        rounds=state.rounds + 1,
        messages=state.messages + len(transmissions),
        duplicates=state.duplicates + sum(t.duplicate for t in transmissions),
    )
    return updated, transmissions


def infection_coverage(
    state: InfectionState, clique: Clique, interested: Iterable[int], holders: AbstractSet[int] = frozenset()
) -> float:
    """Share of the clique's interested members that hold the version; 1.0 when nobody is interested."""
    wanted = {d for d in interested if d in clique}
    if not wanted:
        return 1.0
    reached = wanted & (state.infected_set | set(holders))
    return len(reached) / len(wanted)


__all__ = [
    "Status",
    "Infection",
    "Transmission",
    "InfectionState",
    "start_epidemic",
    "gossip_round",
    "infection_coverage",
]
