import pytest

from manetlab.adversary import AttackKind, AttackManager, AttackSpec, ProtoFilter
from manetlab.errors import InvalidSpec, UnknownFlow, UnknownNode
from manetlab.medium import Medium, Proto, US_PER_S
from manetlab.rules import compile_topology
from manetlab.topogen import Status, Topology, matrix_from_edges
from manetlab.traffic import FlowManager, FlowSpec

from conftest import three_node_registry


def bench(edges=((0, 1), (1, 2))):
    reg = three_node_registry()
    med = Medium(reg)
    t = Topology(matrix_from_edges(3, list(edges)), status=Status.ACCEPTED)
    med.apply_rulesets(compile_topology(t, reg))
    return reg, med, FlowManager(med)


def test_flow_over_edge_loses_nothing():
    _, med, flows = bench()
    fid = flows.start_flow(FlowSpec(src="sai", dst="pritu", protocol=Proto.UDP,
                                    port=9000, delay_ms=100, count=10))
    med.advance(2 * US_PER_S)
    stats = flows.stats(fid)
    assert stats.sent == 10
    assert stats.received == 10
    assert stats.dropped_filter == 0
    assert stats.in_flight == 0


def test_flow_without_edge_loses_everything():
    _, med, flows = bench()
    fid = flows.start_flow(FlowSpec(src="sai", dst="nitin", protocol=Proto.ICMP,
                                    port=0, delay_ms=1000, count=5))
    med.advance(10 * US_PER_S)
    stats = flows.stats(fid)
    assert stats.sent == 5
    assert stats.dropped_filter == 5
    assert stats.received == 0


def test_send_times_exactly_delay_apart():
    _, med, flows = bench()
    flows.start_flow(FlowSpec(src="sai", dst="pritu", delay_ms=250, count=4))
    med.advance(5 * US_PER_S)
    tx_times = [int(line.split()[0]) for line in med.trace
                if " TX " in f" {line.split()[1]} "]
    assert tx_times == [0, 250_000, 500_000, 750_000]


def test_flow_stats_conservation_at_every_point():
    _, med, flows = bench()
    fid = flows.start_flow(FlowSpec(src="sai", dst="pritu", delay_ms=10, count=50))
    for step in range(0, 600_000, 7000):
        med.advance(step)
        s = flows.stats(fid)
        assert s.sent == s.received + s.dropped_filter + s.dropped_adversary + s.in_flight
        assert s.in_flight >= 0


def test_stop_flow_cancels_future_sends():
    _, med, flows = bench()
    fid = flows.start_flow(FlowSpec(src="sai", dst="pritu", delay_ms=1000))
    med.advance(int(2.5 * US_PER_S))  # sends at 0, 1s, 2s
    stats = flows.stop_flow(fid)
    assert stats.sent == 3
    med.advance(10 * US_PER_S)
    assert stats.sent == 3  # nothing further


def test_stop_completed_flow_once_then_unknown():
    _, med, flows = bench()
    fid = flows.start_flow(FlowSpec(src="sai", dst="pritu", delay_ms=100, count=2))
    med.advance(US_PER_S)
    stats = flows.stop_flow(fid)
    assert stats.sent == 2 and stats.received == 2
    with pytest.raises(UnknownFlow):
        flows.stop_flow(fid)
    with pytest.raises(UnknownFlow):
        flows.stats(fid)


def test_flow_spec_validation():
    _, _, flows = bench()
    with pytest.raises(InvalidSpec):
        flows.start_flow(FlowSpec(src="sai", dst="sai"))
    with pytest.raises(InvalidSpec):
        flows.start_flow(FlowSpec(src="sai", dst="pritu", protocol=Proto.ICMP, port=80))
    with pytest.raises(InvalidSpec):
        flows.start_flow(FlowSpec(src="sai", dst="pritu", delay_ms=0))
    with pytest.raises(InvalidSpec):
        flows.start_flow(FlowSpec(src="sai", dst="pritu", count=0))
    with pytest.raises(UnknownNode):
        flows.start_flow(FlowSpec(src="sai", dst="ghost"))


def test_payload_length_respected():
    _, med, flows = bench()
    flows.start_flow(FlowSpec(src="sai", dst="pritu", payload_len=5, count=1))
    flows.start_flow(FlowSpec(src="sai", dst="pritu", payload_len=200, count=1))
    med.advance(US_PER_S)
    sizes = [int(line.rsplit("bytes=", 1)[1]) for line in med.trace
             if line.split()[1] == "TX"]
    assert sizes == [5, 200]


def test_flow_during_periodic_loss_drops_only_window_packets():
    reg, med, flows = bench(edges=((0, 1),))
    attacks = AttackManager(med)
    attacks.launch(AttackSpec(name="flicker", target="pritu",
                              protocol=ProtoFilter.ALL,
                              kind=AttackKind.PERIODIC_LOSS))
    fid = flows.start_flow(FlowSpec(src="sai", dst="pritu", protocol=Proto.UDP,
                                    delay_ms=1000, count=40))
    med.advance(41 * US_PER_S)
    stats = flows.stats(fid)
    # sends at t=0..39 s; the first loss window covers t=0..4
    assert stats.sent == 40
    assert stats.dropped_adversary == 5
    assert stats.received == 35


def test_unbounded_flow_keeps_sending():
    _, med, flows = bench()
    fid = flows.start_flow(FlowSpec(src="sai", dst="pritu", delay_ms=1000))
    med.advance(100 * US_PER_S)
    assert flows.stats(fid).sent == 101  # t=0 inclusive
