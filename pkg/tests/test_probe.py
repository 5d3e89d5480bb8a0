import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from manetlab.adversary import AttackKind, AttackManager, AttackSpec, ProtoFilter
from manetlab.errors import UnknownNode
from manetlab.medium import Medium, US_PER_S
from manetlab.probe import ProbeReport, Prober
from manetlab.rules import compile_topology
from manetlab.topogen import GenParams, Status, Topology, generate, matrix_from_edges

from conftest import three_node_registry


def bench(edges=((0, 1), (1, 2))):
    reg = three_node_registry()
    med = Medium(reg)
    t = Topology(matrix_from_edges(3, list(edges)), status=Status.ACCEPTED)
    med.apply_rulesets(compile_topology(t, reg))
    return reg, med, Prober(med)


def test_ping_neighbor_zero_loss():
    _, _, prober = bench()
    report = prober.ping("sai", "pritu", count=3)
    assert report.transmitted == 3
    assert report.received == 3
    assert report.loss_pct == 0
    assert report.stats_line == "3 packets transmitted, 3 received, 0% packet loss"


def test_ping_non_neighbor_total_loss():
    _, _, prober = bench()
    report = prober.ping("sai", "nitin", count=3)
    assert report.received == 0
    assert report.loss_pct == 100
    assert report.stats_line == "3 packets transmitted, 0 received, 100% packet loss"


def test_ping_unknown_node():
    _, _, prober = bench()
    with pytest.raises(UnknownNode):
        prober.ping("sai", "ghost")


def test_ping_count_one():
    _, _, prober = bench()
    report = prober.ping("sai", "pritu", count=1)
    assert (report.transmitted, report.received) == (1, 1)


def test_ping_requires_reply_one_way_block_fails():
    # dst receives the request but its replies are killed at send
    reg, med, prober = bench()
    AttackManager(med).launch(AttackSpec(
        name="gag", target="pritu", protocol=ProtoFilter.ICMP,
        kind=AttackKind.BLOCK_OUTGOING))
    report = prober.ping("sai", "pritu", count=3)
    assert report.received == 0
    assert report.loss_pct == 100
    # requests did arrive
    assert med.node("pritu").counters["received"].get("ICMP", 0) == 3


def test_ping_spacing_one_second():
    _, med, prober = bench()
    prober.ping("sai", "pritu", count=3)
    req_times = [int(line.split()[0]) for line in med.trace
                 if line.split()[1] == "TX" and "src=sai" in line]
    assert req_times == [0, US_PER_S, 2 * US_PER_S]


def test_partial_loss_integer_percent():
    report = ProbeReport(src="a", dst="b", transmitted=3, received=1)
    assert report.loss_pct == 66
    assert report.stats_line == "3 packets transmitted, 1 received, 66% packet loss"


def test_report_text_ends_with_exact_stats_line():
    _, _, prober = bench()
    report = prober.ping("sai", "pritu", count=3)
    lines = report.text.splitlines()
    assert lines[-1] == "3 packets transmitted, 3 received, 0% packet loss"
    assert len(lines) == 1 + 3 + 1  # header, one line per probe, stats


def test_concurrent_pings_do_not_cross_talk():
    # two probes on one medium: replies carry probe ids, so interleaved
    # echoes never credit the wrong run
    _, med, prober = bench()
    r1 = prober.ping("sai", "pritu", count=2)
    r2 = prober.ping("nitin", "pritu", count=2)
    assert r1.received == 2
    assert r2.received == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.integers(3, 6))
def test_ping_symmetry_without_attacks(seed, n):
    gp = GenParams(n=n, density_pct=50, max_degree=n - 1, rng_seed=seed,
                   max_attempts=2000)
    t = generate(gp)
    from conftest import make_record
    from manetlab.registry import Registry

    reg = Registry(warn=lambda _m: None)
    for i in range(n):
        reg.add_node(make_record(i))
    med = Medium(reg)
    med.apply_rulesets(compile_topology(t, reg))
    prober = Prober(med)
    rng = random.Random(seed)
    a, b = rng.sample(reg.names, 2)
    fwd = prober.ping(a, b, count=1)
    rev = prober.ping(b, a, count=1)
    assert fwd.loss_pct == rev.loss_pct
    assert fwd.loss_pct in (0, 100)
    i, j = reg.index_of(a), reg.index_of(b)
    assert (fwd.loss_pct == 0) == bool(t.adjacency[i][j])
