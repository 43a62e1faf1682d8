import heapq
import itertools
from typing import Any, List, Optional, Tuple

from sim_core.errors import SchedulingError


class EventQueue:
    """
    Priority queue of (time, sequence_number, payload).

    Dequeue order is lexicographic on (time, sequence_number); sequence numbers
    are handed out at enqueue time, so events scheduled for the same instant
    leave in insertion order.
    """

    def __init__(self, start: float = 0.0):
        self._heap: List[Tuple[float, int, Any]] = []
        self._counter = itertools.count()
        self.now = start

    def __len__(self) -> int:
        return len(self._heap)

    def __bool__(self) -> bool:
        return bool(self._heap)

    def schedule(self, time: float, event: Any) -> int:
        """Enqueue `event` at `time`; returns its sequence number."""
        if time < self.now:
            raise SchedulingError(f"Cannot schedule at t={time} before now={self.now}")
        sequence = next(self._counter)
        heapq.heappush(self._heap, (time, sequence, event))
        return sequence

    def peek_time(self) -> Optional[float]:
        return self._heap[0][0] if self._heap else None

    def next_event(self) -> Tuple[float, Any]:
        """Pop the earliest event and advance the clock to its time."""
        if not self._heap:
            raise IndexError("next_event on an empty queue")
        time, _, event = heapq.heappop(self._heap)
        self.now = time
        return time, event


def schedule(queue: EventQueue, time: float, event: Any) -> EventQueue:
    queue.schedule(time, event)
    return queue


def next_event(queue: EventQueue) -> Tuple[float, Any]:
    return queue.next_event()


__all__ = ["EventQueue", "schedule", "next_event"]
