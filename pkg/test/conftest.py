import itertools
from typing import Iterable, List, Optional

import pytest

from src.tools.des_engine import EventEngine, EventKind
from src.tools.queue_node import Discipline, NodeConfig, Packet, QueueNode
from src.tools.router_model import CLASS_LABELS, METRICS, TOTAL_LABEL
from src.tools.scenarios import MetricRow, MetricsReport
from src.tools.variates import GEParams, Rng


@pytest.fixture
def engine() -> EventEngine:
    return EventEngine()


@pytest.fixture
def make_node(engine):
    """QueueNode factory; `durations` replaces the GE service draws with a fixed sequence"""

    def factory(servers: int = 1, capacity: int = 50, discipline: Discipline = Discipline.FCFS,
                durations: Optional[Iterable[float]] = None, rate: float = 1.0, seed: int = 0,
                trace: Optional[list] = None, num_classes: int = 2) -> QueueNode:
        config = NodeConfig(servers=servers, capacity=capacity, discipline=discipline,
                            service=GEParams(rate=rate, scv=1.0))
        node = QueueNode("node", config, engine, Rng(seed), num_classes=num_classes, trace=trace)
        if durations is not None:
            draws = iter(durations)
            node._sample_service = lambda: next(draws)
        return node

    return factory


@pytest.fixture
def packet_factory():
    ids = itertools.count()

    def factory(traffic_class: int, now: float) -> Packet:
        return Packet(id=next(ids), traffic_class=traffic_class,
                      network_arrival_time=now, node_arrival_time=now)

    return factory


def run_completions(engine: EventEngine, node: QueueNode, until: float) -> List[Packet]:
    """Dispatch pending completions up to `until`; returns departed packets in order"""
    departed = []
    while len(engine) and engine.peek().time <= until:
        event = engine.next_event()
        assert event.kind is EventKind.SERVICE_COMPLETION
        packet = node.on_service_completion(event.server, event.time, event.epoch)
        if packet is not None:
            departed.append(packet)
    return departed


@pytest.fixture
def drive():
    return run_completions


def make_report(scenario: str, arms: List[str], lambdas: List[float], replications: int = 3) -> MetricsReport:
    """Synthetic report with every arm x lambda1 x class x metric row"""
    rows = []
    classes = list(CLASS_LABELS.values()) + [TOTAL_LABEL]
    for a, arm in enumerate(arms):
        for i, lam in enumerate(lambdas):
            for c, label in enumerate(classes):
                for m, metric in enumerate(METRICS):
                    mean = 0.01 * (1 + a) * (1 + i) + 0.001 * c + 0.0001 * m
                    rows.append(MetricRow(
                        scenario=scenario, arm=arm, lambda1=lam, traffic_class=label, metric=metric,
                        mean=mean, ci95_lo=mean * 0.9, ci95_hi=mean * 1.1, replications=replications,
                    ))
    return MetricsReport(scenario=scenario, base_seed=7, replications=replications, arms=arms, rows=rows)


@pytest.fixture
def report_factory():
    return make_report
