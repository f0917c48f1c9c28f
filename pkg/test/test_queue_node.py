import pytest
from pydantic import ValidationError

from src.tools.analytic_oracles import mm1n_solve
from src.tools.des_engine import EventKind, SimulationError
from src.tools.queue_node import (
    ArrivalOutcome,
    Discipline,
    NodeConfig,
    Packet,
    UndefinedMetricsError,
)
from src.tools.variates import GEParams, GESampler, Rng


def test_node_config_bank_must_fit_capacity():
    with pytest.raises(ValidationError):
        NodeConfig(servers=5, capacity=4, service=GEParams(rate=1.0))
    NodeConfig(servers=4, capacity=4, service=GEParams(rate=1.0))


# ---------- on_arrival ----------
def test_arrival_to_empty_node_starts_service(make_node, packet_factory):
    node = make_node(durations=[2.0])
    packet = packet_factory(0, 0.0)
    assert node.on_arrival(packet, 0.0) is ArrivalOutcome.ADMITTED
    assert node.in_service() == [packet]
    assert packet.service_demand == 2.0
    assert node.queued == 0


def test_full_node_loses_arrival(make_node, packet_factory):
    node = make_node(capacity=1, durations=[5.0])
    node.on_arrival(packet_factory(0, 0.0), 0.0)
    assert node.on_arrival(packet_factory(0, 1.0), 1.0) is ArrivalOutcome.LOST
    assert node.lost == [1, 0]
    assert node.total_in_system == 1
    assert node.conservation_holds()


def test_hol_arrival_preempts_lower_priority(make_node, packet_factory):
    node = make_node(discipline=Discipline.HOL, durations=[5.0, 1.0])
    low = packet_factory(1, 1.0)
    high = packet_factory(0, 3.0)
    node.on_arrival(low, 1.0)
    node.on_arrival(high, 3.0)

    assert node.in_service() == [high]
    assert low.remaining_service == pytest.approx(3.0)
    assert low.served_time == pytest.approx(2.0)
    assert node.queued == 1


def test_hol_does_not_preempt_equal_priority(make_node, packet_factory):
    node = make_node(discipline=Discipline.HOL, durations=[5.0, 1.0])
    first = packet_factory(0, 0.0)
    node.on_arrival(first, 0.0)
    node.on_arrival(packet_factory(0, 1.0), 1.0)
    assert node.in_service() == [first]
    assert node.queued == 1


def test_fcfs_never_preempts(make_node, packet_factory):
    node = make_node(durations=[5.0, 1.0])
    low = packet_factory(1, 0.0)
    node.on_arrival(low, 0.0)
    node.on_arrival(packet_factory(0, 1.0), 1.0)
    assert node.in_service() == [low]
    with pytest.raises(SimulationError):
        node.preempt(0, packet_factory(0, 2.0), 2.0)


# ---------- preempt ----------
def test_victim_is_latest_starter_among_lowest_priority(make_node, packet_factory):
    node = make_node(servers=2, discipline=Discipline.HOL, durations=[10.0, 10.0, 1.0])
    early = packet_factory(1, 1.0)
    late = packet_factory(1, 2.0)
    node.on_arrival(early, 1.0)
    node.on_arrival(late, 2.0)
    high = packet_factory(0, 3.0)
    node.on_arrival(high, 3.0)

    assert node.in_service() == [early, high]
    assert late.remaining_service == pytest.approx(9.0)


def test_victim_prefers_lowest_priority_class(make_node, packet_factory):
    node = make_node(servers=2, discipline=Discipline.HOL, durations=[10.0, 10.0, 1.0], num_classes=3)
    mid = packet_factory(1, 2.0)
    low = packet_factory(2, 1.0)
    node.on_arrival(low, 1.0)
    node.on_arrival(mid, 2.0)
    node.on_arrival(packet_factory(0, 3.0), 3.0)
    assert low not in node.in_service()
    assert mid in node.in_service()


def test_preempted_packet_resumes_at_class_head(engine, make_node, packet_factory, drive):
    node = make_node(discipline=Discipline.HOL, durations=[5.0, 1.0, 0.5])
    low = packet_factory(1, 1.0)
    node.on_arrival(low, 1.0)
    queued_low = packet_factory(1, 2.0)
    node.on_arrival(queued_low, 2.0)
    node.on_arrival(packet_factory(0, 3.0), 3.0)

    departed = drive(engine, node, until=100.0)
    assert [p.traffic_class for p in departed] == [0, 1, 1]
    assert departed[1] is low
    # resumed at t=4 with 3s left
    assert engine.clock == pytest.approx(7.5)
    assert low.served_time == pytest.approx(low.service_demand)
    assert queued_low.service_demand == 0.5


def test_stale_completion_is_ignored(engine, make_node, packet_factory, drive):
    node = make_node(discipline=Discipline.HOL, durations=[5.0, 1.0])
    node.on_arrival(packet_factory(1, 0.0), 0.0)
    stale = engine.peek()
    node.on_arrival(packet_factory(0, 1.0), 1.0)

    assert stale.kind is EventKind.SERVICE_COMPLETION
    assert node.on_service_completion(stale.server, 1.5, stale.epoch) is None
    assert node.departed == [0, 0]


def test_preempting_an_idle_server_is_an_error(make_node, packet_factory):
    node = make_node(discipline=Discipline.HOL)
    with pytest.raises(SimulationError):
        node.preempt(0, packet_factory(0, 0.0), 0.0)


# ---------- select_next ----------
def queue_two(make_node, packet_factory, discipline):
    node = make_node(discipline=discipline, durations=[5.0, 1.0, 1.0])
    node.on_arrival(packet_factory(0, 0.0), 0.0)
    # keep the server busy with a class 0 packet so nothing preempts
    class_b = packet_factory(1, 1.0)
    class_a = packet_factory(0, 2.0)
    node.on_arrival(class_b, 1.0)
    node.on_arrival(class_a, 2.0)
    return node, class_a, class_b


def test_fcfs_selects_earliest_arrival(make_node, packet_factory):
    node, _, class_b = queue_two(make_node, packet_factory, Discipline.FCFS)
    assert node.select_next() is class_b


def test_hol_selects_highest_priority(make_node, packet_factory):
    node, class_a, _ = queue_two(make_node, packet_factory, Discipline.HOL)
    assert node.select_next() is class_a


def test_select_next_on_empty_queues(make_node):
    assert make_node().select_next() is None
    assert make_node(discipline=Discipline.HOL).select_next() is None


# ---------- on_service_completion ----------
def test_single_packet_departure(engine, make_node, packet_factory, drive):
    node = make_node(durations=[2.0])
    node.on_arrival(packet_factory(0, 0.0), 0.0)
    departed = drive(engine, node, until=10.0)
    assert len(departed) == 1
    assert engine.clock == 2.0
    metrics = node.snapshot_metrics(4.0)
    assert metrics.response_time[0] == pytest.approx(2.0)


def test_completion_starts_next_packet(engine, make_node, packet_factory, drive):
    node = make_node(durations=[1.0, 1.0, 1.0])
    for t in (0.0, 0.1, 0.2):
        node.on_arrival(packet_factory(1, t), t)
    departed = drive(engine, node, until=10.0)
    assert [p.id for p in departed] == sorted(p.id for p in departed)
    assert engine.clock == pytest.approx(3.0)


def test_preempted_response_includes_interruption(engine, make_node, packet_factory, drive):
    node = make_node(discipline=Discipline.HOL, durations=[4.0, 2.0])
    low = packet_factory(1, 0.0)
    node.on_arrival(low, 0.0)
    node.on_arrival(packet_factory(0, 1.0), 1.0)
    drive(engine, node, until=100.0)
    # 1s served, 2s interrupted, 3s resumed
    metrics = node.snapshot_metrics(10.0)
    assert metrics.response_time[1] == pytest.approx(6.0)
    assert low.served_time == pytest.approx(4.0)


# ---------- snapshot_metrics ----------
def test_idle_window_reports_zeros(make_node):
    metrics = make_node().snapshot_metrics(5.0)
    assert metrics.mean_in_system == [0.0, 0.0]
    assert metrics.utilization == [0.0, 0.0]
    assert metrics.loss == [0.0, 0.0]
    assert metrics.offered == [0, 0]


def test_half_window_occupancy(engine, make_node, packet_factory, drive):
    node = make_node(durations=[1.0])
    node.on_arrival(packet_factory(0, 0.0), 0.0)
    drive(engine, node, until=2.0)
    metrics = node.snapshot_metrics(2.0)
    assert metrics.mean_in_system[0] == pytest.approx(0.5)
    assert metrics.utilization[0] == pytest.approx(0.5)
    assert metrics.server_utilization == [pytest.approx(0.5)]
    assert metrics.total_utilization == pytest.approx(0.5)


def test_measurement_window_discards_warmup(engine, make_node, packet_factory, drive):
    node = make_node(durations=[1.0, 1.0])
    node.on_arrival(packet_factory(0, 0.0), 0.0)
    drive(engine, node, until=2.0)
    node.begin_measurement(2.0)
    node.on_arrival(packet_factory(1, 2.0), 2.0)
    drive(engine, node, until=3.0)

    metrics = node.snapshot_metrics(4.0, warmup_end=2.0)
    assert metrics.interval == pytest.approx(2.0)
    assert metrics.offered == [0, 1]
    assert metrics.mean_in_system == [0.0, pytest.approx(0.5)]
    assert node.departed == [1, 1]


def test_warmup_packet_departing_in_window_is_not_timed(engine, make_node, packet_factory, drive):
    node = make_node(durations=[3.0, 1.0])
    early = packet_factory(0, 0.0)
    early.measured = False
    node.on_arrival(early, 0.0)
    node.begin_measurement(1.0)
    node.on_arrival(packet_factory(1, 1.0), 1.0)
    drive(engine, node, until=5.0)

    metrics = node.snapshot_metrics(5.0, warmup_end=1.0)
    # the early packet leaves at t=3, the second waits 2 and serves 1
    assert metrics.departed == [0, 1]
    assert metrics.response_time == [0.0, pytest.approx(3.0)]
    assert node.departed == [1, 1]
    assert node.conservation_holds()


def test_empty_window_is_undefined(make_node):
    node = make_node()
    with pytest.raises(UndefinedMetricsError):
        node.snapshot_metrics(0.0)


def test_window_mismatch_is_a_logic_error(make_node):
    node = make_node()
    with pytest.raises(SimulationError):
        node.snapshot_metrics(5.0, warmup_end=1.0)


# ---------- invariants over random traffic ----------
def run_random(drive, engine, node, lam: float, arrivals: int, seed: int, classes=(0, 1)):
    gaps = GESampler(GEParams(rate=lam, scv=4.0), Rng(seed))
    picks = Rng(seed + 1)
    t = 0.0
    ids = 0
    for _ in range(arrivals):
        t += gaps()
        drive(engine, node, until=t)
        k = classes[int(picks.uniform() * len(classes))]
        node.on_arrival(Packet(id=ids, traffic_class=k, network_arrival_time=t, node_arrival_time=t), t)
        ids += 1
        assert node.total_in_system <= node.config.capacity
        assert node.busy_servers <= node.config.servers
        assert node.conservation_holds()
    return t


@pytest.mark.parametrize("discipline", [Discipline.FCFS, Discipline.HOL])
def test_capacity_and_conservation_under_bursty_load(engine, make_node, discipline, drive):
    node = make_node(servers=2, capacity=6, discipline=discipline, rate=1.0)
    run_random(drive, engine, node, lam=2.2, arrivals=5000, seed=4)
    assert sum(node.lost) > 0


def test_hol_work_ledger(engine, make_node, drive):
    trace = []
    node = make_node(servers=2, capacity=20, discipline=Discipline.HOL, rate=1.0, trace=trace)
    end = run_random(drive, engine, node, lam=1.8, arrivals=20_000, seed=12)
    drive(engine, node, until=end + 1e6)
    assert len(trace) == sum(node.departed)
    assert all(abs(r["served_time"] - r["service_demand"]) <= 1e-9 for r in trace)


def test_fcfs_single_server_departs_in_arrival_order(engine, make_node, drive):
    trace = []
    node = make_node(servers=1, capacity=50, rate=1.0, trace=trace)
    run_random(drive, engine, node, lam=0.9, arrivals=5000, seed=21)
    arrivals = [r["node_arrival"] for r in trace]
    assert arrivals == sorted(arrivals)


def test_mm1_response_time_at_half_load(engine, make_node, drive):
    node = make_node(servers=1, capacity=50, rate=1.0, seed=99)
    gaps = GESampler(GEParams(rate=0.5, scv=1.0), Rng(98))
    t = 0.0
    for i in range(60_000):
        t += gaps()
        drive(engine, node, until=t)
        node.on_arrival(Packet(id=i, traffic_class=0, network_arrival_time=t, node_arrival_time=t), t)
    metrics = node.snapshot_metrics(t)
    oracle = mm1n_solve(0.5, 1.0, 50)
    assert metrics.response_time[0] == pytest.approx(oracle.response_time, rel=0.1)
    assert metrics.total_in_system == pytest.approx(oracle.mean_in_system, rel=0.1)
