"""
src/tools/router_model.py

Tandem router: optional ACL security node -> forwarding node.

Arrival streams feed the ACL node when security is ON, the forwarding node
directly when OFF. After ACL service a packet is accepted with probability p
(otherwise rejected, counted apart from buffer loss). A packet that finds
the forwarding node full is dropped.
"""

import logging
import math
from enum import Enum
from typing import Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.tools.des_engine import Event, EventEngine, EventKind, StopRule
from src.tools.queue_node import (
    ArrivalOutcome,
    NodeConfig,
    NodeMetrics,
    Packet,
    QueueNode,
)
from src.tools.variates import GEParams, GESampler, Rng

logger = logging.getLogger(__name__)

# ================== CONFIG ==================
ACL_NODE = "acl"
FORWARDING_NODE = "forwarding"

# child-stream indices inside one replication seed
ACL_SERVICE_STREAM = 0
FORWARDING_SERVICE_STREAM = 1
ROUTING_STREAM = 2
FIRST_ARRIVAL_STREAM = 3

CLASS_LABELS = {0: "VT", 1: "FF"}
TOTAL_LABEL = "total"
METRICS = ("W", "MQL", "PL", "UTIL")


def class_label(traffic_class: int) -> str:
    return CLASS_LABELS.get(traffic_class, f"class{traffic_class}")


class SecurityMode(str, Enum):
    OFF = "OFF"
    ON = "ON"


class FullForwardingPolicy(str, Enum):
    DROP = "Drop"


class RouteDecision(str, Enum):
    FORWARD = "Forward"
    REJECT = "Reject"


class ArrivalStream(BaseModel):
    """External source of one traffic class; no interarrival params = silent"""

    model_config = ConfigDict(frozen=True)

    traffic_class: int = Field(ge=0)
    interarrival: Optional[GEParams] = None


class RouterConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    security: SecurityMode = SecurityMode.OFF
    acl: Optional[NodeConfig] = None
    forwarding: NodeConfig
    accept_prob: float = Field(default=1.0, ge=0.0, le=1.0)
    full_forwarding_policy: FullForwardingPolicy = FullForwardingPolicy.DROP

    @model_validator(mode="after")
    def _acl_present(self):
        if self.security is SecurityMode.ON and self.acl is None:
            raise ValueError("security ON needs an ACL node config")
        return self


class ReplicationResult(BaseModel):
    """Per-node metrics, end-to-end report and lifetime counters of one run"""

    nodes: Dict[str, NodeMetrics]
    interval: float
    end_to_end_response: List[float]
    metrics: Dict[str, Dict[str, float]]
    offered: List[int]
    departed: List[int]
    acl_lost: List[int]
    rejected: List[int]
    forwarding_lost: List[int]
    in_flight: List[int]
    measured_rejected: List[int]

    def conservation_holds(self) -> bool:
        """offered = departed + ACL loss + rejections + forwarding loss + in-flight"""
        return all(
            self.offered[k] == self.departed[k] + self.acl_lost[k] + self.rejected[k]
            + self.forwarding_lost[k] + self.in_flight[k]
            for k in range(len(self.offered))
        )


def route_after_acl(packet: Packet, p: float, rng: Rng) -> RouteDecision:
    """Bernoulli(p) acceptance after ACL service"""
    return RouteDecision.FORWARD if rng.uniform() < p else RouteDecision.REJECT


class RouterNetwork:
    """Wires the engine, nodes and arrival streams of one replication"""

    def __init__(
        self,
        config: RouterConfig,
        streams: List[ArrivalStream],
        seed: Union[int, np.random.SeedSequence],
        trace: Optional[list] = None,
    ):
        self.config = config
        self.streams = streams
        self.num_classes = max((s.traffic_class for s in streams), default=0) + 1
        self.engine = EventEngine()

        root = Rng(seed)
        self.nodes: Dict[str, QueueNode] = {}
        if config.security is SecurityMode.ON:
            self.nodes[ACL_NODE] = QueueNode(
                ACL_NODE, config.acl, self.engine, root.substream(ACL_SERVICE_STREAM),
                num_classes=self.num_classes, trace=trace,
            )
        self.nodes[FORWARDING_NODE] = QueueNode(
            FORWARDING_NODE, config.forwarding, self.engine, root.substream(FORWARDING_SERVICE_STREAM),
            num_classes=self.num_classes, trace=trace,
        )
        self.entry = self.nodes.get(ACL_NODE, self.nodes[FORWARDING_NODE])
        self.forwarding = self.nodes[FORWARDING_NODE]
        self._routing_rng = root.substream(ROUTING_STREAM)
        self._interarrivals = [
            GESampler(s.interarrival, root.substream(FIRST_ARRIVAL_STREAM + i)) if s.interarrival else None
            for i, s in enumerate(streams)
        ]

        zeros = [0] * self.num_classes
        self.offered = list(zeros)
        self.departed = list(zeros)
        self.acl_lost = list(zeros)
        self.rejected = list(zeros)
        self.forwarding_lost = list(zeros)

        # measured = arrived after warm-up
        self._m_offered = list(zeros)
        self._m_lost = list(zeros)
        self._m_rejected = list(zeros)
        self._m_response_sum = [0.0] * self.num_classes
        self._m_response_count = list(zeros)

        self._next_packet_id = 0
        self._arrivals_seen = 0
        self._warmup_arrivals = 0
        self.warmup_end = 0.0

    # ---------- run ----------
    def run(self, arrivals_limit: int, warmup_fraction: float = 0.1) -> ReplicationResult:
        if not 0.0 <= warmup_fraction < 1.0:
            raise ValueError(f"warmup_fraction must be in [0, 1), got {warmup_fraction}")
        self._warmup_arrivals = math.floor(warmup_fraction * arrivals_limit)

        for index, sampler in enumerate(self._interarrivals):
            if sampler is not None:
                self.engine.schedule(Event(time=sampler(), kind=EventKind.EXTERNAL_ARRIVAL, target=index))

        self.engine.run(self._dispatch, StopRule(max_arrivals=arrivals_limit))
        return self._result()

    def _dispatch(self, event: Event) -> None:
        if event.kind is EventKind.EXTERNAL_ARRIVAL:
            self._on_external_arrival(event)
        else:
            self._on_completion(event)

    def _on_external_arrival(self, event: Event) -> None:
        now = event.time
        self._arrivals_seen += 1
        if self._warmup_arrivals and self._arrivals_seen == self._warmup_arrivals + 1:
            self.warmup_end = now
            for node in self.nodes.values():
                node.begin_measurement(now)

        index = event.target
        stream = self.streams[index]
        self.engine.schedule(Event(
            time=now + self._interarrivals[index](),
            kind=EventKind.EXTERNAL_ARRIVAL,
            target=index,
        ))

        k = stream.traffic_class
        packet = Packet(
            id=self._next_packet_id,
            traffic_class=k,
            network_arrival_time=now,
            node_arrival_time=now,
            measured=self._arrivals_seen > self._warmup_arrivals,
        )
        self._next_packet_id += 1
        self.offered[k] += 1
        if packet.measured:
            self._m_offered[k] += 1

        if self.entry.on_arrival(packet, now) is ArrivalOutcome.LOST:
            if self.entry is self.forwarding:
                self.forwarding_lost[k] += 1
            else:
                self.acl_lost[k] += 1
            if packet.measured:
                self._m_lost[k] += 1

    def _on_completion(self, event: Event) -> None:
        now = event.time
        node = self.nodes[event.target]
        packet = node.on_service_completion(event.server, now, event.epoch)
        if packet is None:
            return
        k = packet.traffic_class

        if node is not self.forwarding:
            if route_after_acl(packet, self.config.accept_prob, self._routing_rng) is RouteDecision.REJECT:
                self.rejected[k] += 1
                if packet.measured:
                    self._m_rejected[k] += 1
                return
            packet.enter_node(now)
            if self.forwarding.on_arrival(packet, now) is ArrivalOutcome.LOST:
                self.forwarding_lost[k] += 1
                if packet.measured:
                    self._m_lost[k] += 1
            return

        self.departed[k] += 1
        if packet.measured:
            self._m_response_sum[k] += now - packet.network_arrival_time
            self._m_response_count[k] += 1

    # ---------- results ----------
    def in_flight(self) -> List[int]:
        return [
            sum(node.in_system[k] for node in self.nodes.values())
            for k in range(self.num_classes)
        ]

    def _result(self) -> ReplicationResult:
        now = self.engine.clock
        measured = now > self.warmup_end
        nodes: Dict[str, NodeMetrics] = {}
        for node_id, node in self.nodes.items():
            if measured:
                nodes[node_id] = node.snapshot_metrics(now, self.warmup_end)
            else:
                nodes[node_id] = NodeMetrics.empty(node_id, node.config.servers, self.num_classes)

        e2e = [
            self._m_response_sum[k] / self._m_response_count[k] if self._m_response_count[k] else 0.0
            for k in range(self.num_classes)
        ]
        total_servers = sum(m.servers for m in nodes.values())

        metrics: Dict[str, Dict[str, float]] = {}
        for k in range(self.num_classes):
            metrics[class_label(k)] = {
                "W": e2e[k],
                "MQL": sum(m.mean_in_system[k] for m in nodes.values()),
                "PL": self._m_lost[k] / self._m_offered[k] if self._m_offered[k] else 0.0,
                "UTIL": sum(m.utilization[k] * m.servers for m in nodes.values()) / total_servers,
            }
        responses = sum(self._m_response_count)
        offered = sum(self._m_offered)
        metrics[TOTAL_LABEL] = {
            "W": sum(self._m_response_sum) / responses if responses else 0.0,
            "MQL": sum(metrics[class_label(k)]["MQL"] for k in range(self.num_classes)),
            "PL": sum(self._m_lost) / offered if offered else 0.0,
            "UTIL": sum(metrics[class_label(k)]["UTIL"] for k in range(self.num_classes)),
        }

        return ReplicationResult(
            nodes=nodes,
            interval=now - self.warmup_end if measured else 0.0,
            end_to_end_response=e2e,
            metrics=metrics,
            offered=self.offered,
            departed=self.departed,
            acl_lost=self.acl_lost,
            rejected=self.rejected,
            forwarding_lost=self.forwarding_lost,
            in_flight=self.in_flight(),
            measured_rejected=self._m_rejected,
        )


def run_replication(
    config: RouterConfig,
    streams: List[ArrivalStream],
    seed: Union[int, np.random.SeedSequence],
    arrivals_limit: int,
    warmup_fraction: float = 0.1,
    trace: Optional[list] = None,
) -> ReplicationResult:
    """Run one replication to the arrival limit and report it"""
    network = RouterNetwork(config, streams, seed, trace=trace)
    result = network.run(arrivals_limit, warmup_fraction)
    logger.debug(
        "replication done: offered=%s departed=%s lost(acl/fwd)=%s/%s rejected=%s",
        result.offered, result.departed, result.acl_lost, result.forwarding_lost, result.rejected,
    )
    return result
