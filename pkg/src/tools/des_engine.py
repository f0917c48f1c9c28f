"""
src/tools/des_engine.py

Discrete-event engine: virtual clock, (time, seq)-ordered pending set and the
dispatch loop. One engine per replication, single-threaded.
"""

import heapq
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, List, Optional, Tuple

logger = logging.getLogger(__name__)


class SimulationError(RuntimeError):
    """Fatal simulator logic error (a bug, not a user mistake)"""


class EventKind(str, Enum):
    EXTERNAL_ARRIVAL = "ExternalArrival"
    SERVICE_COMPLETION = "ServiceCompletion"


@dataclass(slots=True)
class Event:
    """
    time:   simulated seconds
    kind:   arrival or completion
    target: stream index (arrivals) or node id (completions)
    server: server index for completions
    epoch:  server occupancy epoch the completion belongs to
    packet: packet reference where applicable
    seq:    assigned by the engine at schedule time
    """

    time: float
    kind: EventKind
    target: Any = None
    server: int = -1
    epoch: int = 0
    packet: Any = None
    seq: int = -1


@dataclass(slots=True)
class StopRule:
    """Arrival-count limit and/or simulated-time horizon"""

    max_arrivals: Optional[int] = None
    horizon: Optional[float] = None

    def __post_init__(self):
        if self.max_arrivals is None and self.horizon is None:
            raise SimulationError("stop rule needs an arrival limit or a horizon")
        if self.max_arrivals is not None and self.max_arrivals < 0:
            raise SimulationError(f"arrival limit must be >= 0, got {self.max_arrivals}")


class EventEngine:
    """Engine state: clock, pending events and dispatch counters"""

    def __init__(self):
        self.clock = 0.0
        self.dispatched = 0
        self.arrivals_dispatched = 0
        self._pending: List[Tuple[float, int, Event]] = []
        self._next_seq = 0

    def __len__(self) -> int:
        return len(self._pending)

    def schedule(self, event: Event) -> Event:
        if event.time < self.clock:
            raise SimulationError(
                f"event {event.kind.value} scheduled at t={event.time!r} before clock t={self.clock!r}"
            )
        event.seq = self._next_seq
        self._next_seq += 1
        heapq.heappush(self._pending, (event.time, event.seq, event))
        return event

    def peek(self) -> Optional[Event]:
        return self._pending[0][2] if self._pending else None

    def next_event(self) -> Optional[Event]:
        """Pop the minimum by (time, seq) and advance the clock; None when empty"""
        if not self._pending:
            return None
        time, _, event = heapq.heappop(self._pending)
        self.clock = time
        self.dispatched += 1
        if event.kind is EventKind.EXTERNAL_ARRIVAL:
            self.arrivals_dispatched += 1
        return event

    def run(self, handler: Callable[[Event], None], stop: StopRule) -> "EventEngine":
        """
        Dispatch until the stop rule fires or nothing is pending.

        The arrival limit stops before the first arrival beyond it; events
        still pending at that point stay pending (in-flight packets). With a
        horizon the clock ends at the horizon.
        """
        pending = self._pending
        max_arrivals = stop.max_arrivals
        horizon = stop.horizon
        limit_reached = False

        while pending:
            time, _, event = pending[0]
            if horizon is not None and time > horizon:
                break
            if (
                max_arrivals is not None
                and event.kind is EventKind.EXTERNAL_ARRIVAL
                and self.arrivals_dispatched >= max_arrivals
            ):
                limit_reached = True
                break
            handler(self.next_event())

        if horizon is not None and not limit_reached and self.clock < horizon:
            self.clock = horizon

        logger.debug(
            "engine stopped at t=%.9g after %d events (%d arrivals), %d pending",
            self.clock, self.dispatched, self.arrivals_dispatched, len(pending),
        )
        return self
