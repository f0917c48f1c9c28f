"""
src/tools/queue_node.py

One GE/GE/c/N station: server bank, class-aware wait queue, FCFS or HOL
(preemptive-resume priority) discipline, per-class metric accumulators.

N counts every packet in the node, in service included. Class 0 is the
highest priority.
"""

import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Deque, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.tools.des_engine import Event, EventEngine, EventKind, SimulationError
from src.tools.variates import GEParams, GESampler, Rng

logger = logging.getLogger(__name__)


class UndefinedMetricsError(ValueError):
    """Metrics requested over an empty measurement window"""


class Discipline(str, Enum):
    FCFS = "FCFS"
    HOL = "HOL"


class ArrivalOutcome(str, Enum):
    ADMITTED = "Admitted"
    LOST = "Lost"


@dataclass(slots=True)
class Packet:
    id: int
    traffic_class: int
    network_arrival_time: float
    node_arrival_time: float
    remaining_service: Optional[float] = None
    service_started: Optional[float] = None
    service_demand: Optional[float] = None
    served_time: float = 0.0
    measured: bool = True

    def enter_node(self, now: float) -> None:
        """Reset per-node service bookkeeping when moving to the next station"""
        self.node_arrival_time = now
        self.remaining_service = None
        self.service_started = None
        self.service_demand = None
        self.served_time = 0.0


class NodeConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    servers: int = Field(ge=1, description="c")
    capacity: int = Field(ge=1, description="N, in-service packets included")
    discipline: Discipline = Discipline.FCFS
    service: GEParams

    @model_validator(mode="after")
    def _bank_fits(self):
        if self.servers > self.capacity:
            raise ValueError(f"servers ({self.servers}) must not exceed capacity ({self.capacity})")
        return self


@dataclass(slots=True)
class Server:
    index: int
    packet: Optional[Packet] = None
    epoch: int = 0


@dataclass(slots=True)
class NodeAccumulators:
    """Integrals and counters over the current measurement window"""

    window_start: float
    last_update: float
    area: List[float]
    busy_area: List[float]
    server_busy: List[float]
    response_sum: List[float]
    response_count: List[int]
    offered: List[int]
    admitted: List[int]
    lost: List[int]

    @classmethod
    def fresh(cls, num_classes: int, servers: int, now: float) -> "NodeAccumulators":
        return cls(
            window_start=now,
            last_update=now,
            area=[0.0] * num_classes,
            busy_area=[0.0] * num_classes,
            server_busy=[0.0] * servers,
            response_sum=[0.0] * num_classes,
            response_count=[0] * num_classes,
            offered=[0] * num_classes,
            admitted=[0] * num_classes,
            lost=[0] * num_classes,
        )


class NodeMetrics(BaseModel):
    """Per-class W, L, PL and utilisation over one measurement window"""

    node_id: str
    servers: int
    interval: float
    response_time: List[float]
    mean_in_system: List[float]
    loss: List[float]
    utilization: List[float]
    server_utilization: List[float]
    offered: List[int]
    admitted: List[int]
    lost: List[int]
    departed: List[int]

    @classmethod
    def empty(cls, node_id: str, servers: int, num_classes: int) -> "NodeMetrics":
        zeros = [0.0] * num_classes
        counts = [0] * num_classes
        return cls(
            node_id=node_id, servers=servers, interval=0.0,
            response_time=zeros, mean_in_system=zeros, loss=zeros, utilization=zeros,
            server_utilization=[0.0] * servers,
            offered=counts, admitted=counts, lost=counts, departed=counts,
        )

    @property
    def total_in_system(self) -> float:
        return sum(self.mean_in_system)

    @property
    def total_response_time(self) -> float:
        departed = sum(self.departed)
        if departed == 0:
            return 0.0
        return sum(w * d for w, d in zip(self.response_time, self.departed)) / departed

    @property
    def total_loss(self) -> float:
        offered = sum(self.offered)
        return sum(self.lost) / offered if offered else 0.0

    @property
    def total_utilization(self) -> float:
        return sum(self.utilization)

    @property
    def throughput(self) -> float:
        """Admitted packets per second (lambda_eff)"""
        return sum(self.admitted) / self.interval if self.interval > 0 else 0.0


class QueueNode:
    """GE/GE/c/N station driven by an EventEngine"""

    def __init__(
        self,
        node_id: str,
        config: NodeConfig,
        engine: EventEngine,
        service_rng: Rng,
        num_classes: int = 2,
        trace: Optional[list] = None,
    ):
        self.node_id = node_id
        self.config = config
        self.engine = engine
        self.num_classes = num_classes
        self.trace = trace

        self._hol = config.discipline is Discipline.HOL
        self._sample_service = GESampler(config.service, service_rng)
        self._servers = [Server(i) for i in range(config.servers)]
        # HOL: one FIFO per class; FCFS: a single FIFO in node-arrival order
        self._queues: List[Deque[Packet]] = [deque() for _ in range(num_classes if self._hol else 1)]
        self._busy_by_class = [0] * num_classes

        self.in_system = [0] * num_classes
        self.offered = [0] * num_classes
        self.lost = [0] * num_classes
        self.departed = [0] * num_classes

        self._acc = NodeAccumulators.fresh(num_classes, config.servers, engine.clock)

    # ---------- state ----------
    @property
    def total_in_system(self) -> int:
        return sum(self.in_system)

    @property
    def busy_servers(self) -> int:
        return sum(self._busy_by_class)

    @property
    def queued(self) -> int:
        return sum(len(q) for q in self._queues)

    def in_service(self) -> List[Optional[Packet]]:
        return [s.packet for s in self._servers]

    def conservation_holds(self) -> bool:
        """offered = departed + lost + in-system, per class"""
        return all(
            self.offered[k] == self.departed[k] + self.lost[k] + self.in_system[k]
            for k in range(self.num_classes)
        )

    # ---------- accumulators ----------
    def _advance(self, now: float) -> None:
        acc = self._acc
        dt = now - acc.last_update
        if dt <= 0.0:
            return
        for k in range(self.num_classes):
            if self.in_system[k]:
                acc.area[k] += self.in_system[k] * dt
            if self._busy_by_class[k]:
                acc.busy_area[k] += self._busy_by_class[k] * dt
        for server in self._servers:
            if server.packet is not None:
                acc.server_busy[server.index] += dt
        acc.last_update = now

    def begin_measurement(self, now: float) -> None:
        """Discard everything accumulated so far; the window starts at `now`"""
        self._advance(now)
        self._acc = NodeAccumulators.fresh(self.num_classes, self.config.servers, now)

    # ---------- events ----------
    def on_arrival(self, packet: Packet, now: float) -> ArrivalOutcome:
        self._advance(now)
        k = packet.traffic_class
        self.offered[k] += 1
        self._acc.offered[k] += 1

        if self.total_in_system >= self.config.capacity:
            self.lost[k] += 1
            self._acc.lost[k] += 1
            return ArrivalOutcome.LOST

        self.in_system[k] += 1
        self._acc.admitted[k] += 1

        idle = self._idle_server()
        if idle is not None:
            self._start(idle, packet, now)
        elif self._hol and (victim := self._preemption_victim(k)) is not None:
            self.preempt(victim.index, packet, now)
        else:
            self._queues[k if self._hol else 0].append(packet)
        return ArrivalOutcome.ADMITTED

    def preempt(self, victim_server: int, incoming: Packet, now: float) -> None:
        """
        Interrupt the packet on `victim_server` and serve `incoming` there.

        Preemptive-resume: the victim keeps its remaining demand and goes back
        to the head of its class queue. `incoming` must already be admitted.
        """
        if not self._hol:
            raise SimulationError(f"preemption requested on FCFS node {self.node_id}")
        server = self._servers[victim_server]
        victim = server.packet
        if victim is None:
            raise SimulationError(f"server {victim_server} of node {self.node_id} is idle")

        self._advance(now)
        elapsed = now - victim.service_started
        victim.remaining_service = max(0.0, victim.remaining_service - elapsed)
        victim.served_time += elapsed
        victim.service_started = None
        self._busy_by_class[victim.traffic_class] -= 1
        server.packet = None
        self._queues[victim.traffic_class].appendleft(victim)

        self._start(server, incoming, now)

    def select_next(self) -> Optional[Packet]:
        """Highest-priority non-empty queue head (HOL) or the global head (FCFS)"""
        for queue in self._queues:
            if queue:
                return queue.popleft()
        return None

    def on_service_completion(self, server_index: int, now: float, epoch: Optional[int] = None) -> Optional[Packet]:
        """
        Depart the packet on `server_index` and start the next one.

        Returns None for a stale completion (its epoch was invalidated by a
        preemption).
        """
        server = self._servers[server_index]
        if server.packet is None or (epoch is not None and epoch != server.epoch):
            return None

        self._advance(now)
        packet = server.packet
        k = packet.traffic_class
        packet.served_time += now - packet.service_started
        packet.remaining_service = 0.0
        packet.service_started = None

        server.packet = None
        self._busy_by_class[k] -= 1
        self.in_system[k] -= 1
        self.departed[k] += 1
        if packet.measured:
            self._acc.response_sum[k] += now - packet.node_arrival_time
            self._acc.response_count[k] += 1

        if self.trace is not None:
            self.trace.append({
                "packet_id": packet.id,
                "class": k,
                "node": self.node_id,
                "node_arrival": packet.node_arrival_time,
                "departure": now,
                "service_demand": packet.service_demand,
                "served_time": packet.served_time,
            })

        following = self.select_next()
        if following is not None:
            self._start(server, following, now)
        return packet

    # ---------- internals ----------
    def _idle_server(self) -> Optional[Server]:
        for server in self._servers:
            if server.packet is None:
                return server
        return None

    def _preemption_victim(self, incoming_class: int) -> Optional[Server]:
        # lowest priority in service; ties go to the latest service start
        victim = None
        victim_key = None
        for server in self._servers:
            packet = server.packet
            if packet.traffic_class <= incoming_class:
                continue
            key = (packet.traffic_class, packet.service_started, server.index)
            if victim_key is None or key > victim_key:
                victim, victim_key = server, key
        return victim

    def _start(self, server: Server, packet: Packet, now: float) -> None:
        if packet.remaining_service is None:
            demand = self._sample_service()
            packet.service_demand = demand
            packet.remaining_service = demand
        packet.service_started = now
        server.packet = packet
        server.epoch += 1
        self._busy_by_class[packet.traffic_class] += 1
        self.engine.schedule(Event(
            time=now + packet.remaining_service,
            kind=EventKind.SERVICE_COMPLETION,
            target=self.node_id,
            server=server.index,
            epoch=server.epoch,
            packet=packet,
        ))

    # ---------- metrics ----------
    def snapshot_metrics(self, now: float, warmup_end: Optional[float] = None) -> NodeMetrics:
        """
        Per-class W, L, PL and utilisation over [warmup_end, now].

        W averages only packets flagged `measured`, so a warm-up packet that
        departs inside the window is left out, as in the end-to-end W.
        """
        acc = self._acc
        if warmup_end is None:
            warmup_end = acc.window_start
        elif warmup_end != acc.window_start:
            raise SimulationError(
                f"node {self.node_id} measures from t={acc.window_start!r}, not t={warmup_end!r}"
            )
        if now < warmup_end:
            raise UndefinedMetricsError(f"now (t={now!r}) precedes warm-up end (t={warmup_end!r})")
        interval = now - warmup_end
        if interval <= 0.0:
            raise UndefinedMetricsError(f"empty measurement window on node {self.node_id}")

        self._advance(now)
        capacity_time = self.config.servers * interval
        departed = list(acc.response_count)
        return NodeMetrics(
            node_id=self.node_id,
            servers=self.config.servers,
            interval=interval,
            response_time=[
                acc.response_sum[k] / departed[k] if departed[k] else 0.0
                for k in range(self.num_classes)
            ],
            mean_in_system=[a / interval for a in acc.area],
            loss=[
                acc.lost[k] / acc.offered[k] if acc.offered[k] else 0.0
                for k in range(self.num_classes)
            ],
            utilization=[b / capacity_time for b in acc.busy_area],
            server_utilization=[b / interval for b in acc.server_busy],
            offered=list(acc.offered),
            admitted=list(acc.admitted),
            lost=list(acc.lost),
            departed=departed,
        )
