import threading
import time

import pytest

from manetlab.adversary import AttackKind, AttackSpec, ProtoFilter
from manetlab.errors import (
    Busy,
    CommandFailed,
    DimensionMismatch,
    NodeInUse,
    OutOfRange,
    StaleScenario,
    UnknownScenario,
)
from manetlab.medium import US_PER_S
from manetlab.rules import emit_script
from manetlab.testbed import Testbed
from manetlab.topogen import GenParams, Status, Topology, matrix_from_edges
from manetlab.traffic import FlowSpec

from conftest import three_node_registry


def gen_params(seed=11):
    return GenParams(n=3, density_pct=50, max_degree=2, rng_seed=seed)


def single_edge_topology():
    return Topology(matrix_from_edges(3, [(0, 1)]), status=Status.REJECTED, seq=0)


@pytest.fixture
def tb():
    return Testbed(three_node_registry())


# --- scenario orchestration ---

def test_apply_updates_current_and_trace(tb):
    tb.build_scenario("Topology", gen_params(), 10)
    tb.apply_topology("Topology", 4)
    assert tb.get_scenario("Topology").current == 4
    assert tb.current is not None
    assert tb.current.scenario == "Topology"
    apply_lines = [l for l in tb.trace() if l.split()[1] == "APPLY"]
    assert len(apply_lines) == 1
    assert "seq=4" in apply_lines[0]


def test_apply_seq_out_of_range(tb):
    tb.build_scenario("Topology", gen_params(), 10)
    with pytest.raises(OutOfRange):
        tb.apply_topology("Topology", 10)


def test_apply_unknown_scenario(tb):
    with pytest.raises(UnknownScenario):
        tb.apply_topology("nope", 0)


def test_registry_mutation_marks_scenarios_stale(tb):
    tb.build_scenario("Topology", gen_params(), 2)
    tb.add_node("guest", "10.0.0.50", "aa:00:00:00:00:50",
                "192.168.1.50", "bb:00:00:00:00:50")
    with pytest.raises(StaleScenario):
        tb.apply_topology("Topology", 0)


def test_scenario_over_registry_prefix_pads_with_drop_only(tb):
    tb.add_node("extra", "10.0.0.60", "aa:00:00:00:00:60",
                "192.168.1.60", "bb:00:00:00:00:60")
    tb.build_scenario("small", gen_params(), 1)  # n=3 vs 4 registered
    tb.apply_topology("small", 0)
    extra_state = tb.medium.node("extra")
    assert extra_state.active_ruleset is not None
    assert extra_state.active_ruleset.accepted_macs() == []


def test_scenario_larger_than_registry_rejected(tb):
    with pytest.raises(DimensionMismatch):
        tb.build_scenario("big", GenParams(n=4, density_pct=50, max_degree=3,
                                           rng_seed=1), 1)


def test_manual_apply_with_force(tb):
    tb.apply_manual(single_edge_topology(), force=True)
    report = tb.ping("sai", "pritu", count=1)
    assert report.loss_pct == 0


# --- node lifecycle guards ---

def test_remove_node_in_applied_topology_rejected(tb):
    tb.build_scenario("Topology", gen_params(), 1)
    tb.apply_topology("Topology", 0)
    with pytest.raises(NodeInUse):
        tb.remove_node("sai")


def test_remove_node_without_applied_topology_ok(tb):
    assert tb.remove_node("nitin") == 2


def test_node_added_after_apply_is_removable(tb):
    tb.build_scenario("Topology", gen_params(), 1)
    tb.apply_topology("Topology", 0)
    tb.add_node("guest", "10.0.0.50", "aa:00:00:00:00:50",
                "192.168.1.50", "bb:00:00:00:00:50")
    assert tb.remove_node("guest") == 3


def test_soft_limit_warning_lands_in_trace():
    tb = Testbed(three_node_registry())
    for i in range(151):
        tb.add_node(f"n{i}", f"10.1.{i // 250}.{i % 250 + 1}",
                    f"aa:01:00:00:{i // 256:02x}:{i % 256:02x}",
                    f"192.169.{i // 250}.{i % 250 + 1}",
                    f"bb:01:00:00:{i // 256:02x}:{i % 256:02x}")
    warnings = [l for l in tb.trace() if l.split()[1] == "WARNING"]
    assert len(warnings) == 4  # nodes 151..154 (3 preregistered)
    assert "soft limit 150 exceeded" in warnings[0]


# --- exclusivity ---

def test_remote_exec_builtins(tb):
    code, out = tb.remote_exec("pritu", "echo hello world")
    assert (code, out) == (0, "hello world\n")


def test_ruleset_dump_matches_compiled_script(tb):
    tb.build_scenario("Topology", gen_params(), 1)
    tb.apply_topology("Topology", 0)
    _, out = tb.remote_exec("pritu", "ruleset-dump")
    assert out == emit_script(tb.medium.node("pritu").active_ruleset, "ath0")


def test_counters_dump_is_json(tb):
    import json

    tb.apply_manual(single_edge_topology(), force=True)
    tb.ping("sai", "pritu", count=1)
    _, out = tb.remote_exec("pritu", "counters-dump")
    counters = json.loads(out)
    assert counters["received"]["ICMP"] == 1


def test_unknown_builtin_fails_127(tb):
    with pytest.raises(CommandFailed) as exc:
        tb.remote_exec("sai", "reboot")
    assert exc.value.exit_code == 127


def test_mutations_busy_during_remote_exec(tb):
    tb.build_scenario("Topology", gen_params(), 2)
    results = {}

    def exec_sleep():
        results["exec"] = tb.remote_exec("sai", "sleep 0.4")

    worker = threading.Thread(target=exec_sleep)
    worker.start()
    deadline = time.monotonic() + 2.0
    while not tb.exec_active and time.monotonic() < deadline:
        time.sleep(0.005)
    assert tb.exec_active
    with pytest.raises(Busy):
        tb.apply_topology("Topology", 0)
    with pytest.raises(Busy):
        tb.attack_launch(AttackSpec(name="jam", target="pritu"))
    with pytest.raises(Busy):
        tb.flow_start(FlowSpec(src="sai", dst="pritu"))
    with pytest.raises(Busy):
        tb.ping("sai", "pritu")
    with pytest.raises(Busy):
        tb.tick(1)
    with pytest.raises(Busy):
        tb.remote_exec("pritu", "echo nested")
    worker.join()
    assert results["exec"] == (0, "")
    # nothing moved between EXEC_START and EXEC_END
    trace = tb.trace()
    start = next(i for i, l in enumerate(trace) if l.split()[1] == "EXEC_START")
    end = next(i for i, l in enumerate(trace) if l.split()[1] == "EXEC_END")
    assert trace[start + 1:end] == []
    # and the bench works again afterwards
    tb.apply_topology("Topology", 0)


def test_exec_failure_still_releases_lock(tb):
    with pytest.raises(CommandFailed):
        tb.remote_exec("sai", "nope")
    assert not tb.exec_active
    tb.tick(1)  # not Busy anymore


# --- attacks / flows / inject through the facade ---

def test_attack_launch_saves_and_stop_by_name(tb):
    tb.attack_launch(AttackSpec(name="jam", target="pritu",
                                protocol=ProtoFilter.ALL,
                                kind=AttackKind.BLOCK_INCOMING))
    assert tb.attack_overview()["saved"][0]["name"] == "jam"
    assert len(tb.attack_overview()["active"]) == 1
    tb.attack_stop("jam")
    assert tb.attack_overview()["active"] == []
    # replay from the saved list
    tb.attack_replay("jam")
    assert len(tb.attack_overview()["active"]) == 1


def test_inject_returns_delivery_outcome(tb):
    tb.apply_manual(single_edge_topology(), force=True)
    dst = tb.registry.get("pritu").wireless_mac.replace(":", "")
    src = "001122334455"
    result = tb.inject(dst + src + "0800" + "ab" * 20, "sai")
    assert result["delivered_to"] == ["pritu"]
    assert not result["source_dropped"]


def test_play_through_facade(tb):
    tb.build_scenario("Topology", gen_params(), 10)
    tb.play("Topology", 0, 9)
    tb.tick(270)
    applies = [l for l in tb.trace() if l.split()[1] == "APPLY"]
    assert len(applies) == 10
    assert tb.get_scenario("Topology").current == 9


def test_stop_play_through_facade(tb):
    tb.build_scenario("Topology", gen_params(), 10)
    tb.play("Topology", 0, 9)
    tb.tick(65)  # steps 0, 1, 2 applied
    tb.stop_play()
    tb.tick(500)
    applies = [l for l in tb.trace() if l.split()[1] == "APPLY"]
    assert len(applies) == 3


def test_current_names_the_active_rulesets(tb):
    # live node rulesets must equal compile() of the current topology
    from manetlab.rules import compile_topology

    tb.build_scenario("Topology", gen_params(), 5)
    for seq in (0, 3, 1):
        tb.apply_topology("Topology", seq)
        s = tb.get_scenario("Topology")
        assert s.current == seq
        expected = compile_topology(s.topologies[seq], tb.registry)
        live = [tb.medium.node(n).active_ruleset for n in tb.registry.names]
        assert live == expected


def test_current_dot_none_until_apply(tb):
    assert tb.current_dot() is None
    tb.apply_manual(single_edge_topology(), force=True)
    assert tb.current_dot() == (
        'graph topo_0 {\n  "sai" -- "pritu";\n  "nitin";\n}\n'
    )


# --- persistence through the facade ---

def test_registry_and_state_files_round_trip(tmp_path):
    reg_path = tmp_path / "registry.txt"
    state_dir = tmp_path / "state"
    reg = three_node_registry()
    from manetlab.registry import save_registry

    reg_path.write_text(save_registry(reg), encoding="utf-8")
    tb = Testbed.load(reg_path, state_dir)
    tb.build_scenario("Topology", gen_params(), 2)
    tb.attack_launch(AttackSpec(name="jam", target="pritu"))
    tb.add_node("late", "10.0.0.99", "aa:00:00:00:00:99",
                "192.168.1.99", "bb:00:00:00:00:99")

    reborn = Testbed.load(reg_path, state_dir)
    assert reborn.registry.names == ["sai", "pritu", "nitin", "late"]
    assert reborn.get_scenario("Topology").count == 2
    assert reborn.attacks.list_attacks() == ["jam"]


def test_command_ids_strictly_increase(tb):
    first = tb.last_command_id
    tb.tick(1)
    tb.build_scenario("Topology", gen_params(), 1)
    tb.apply_topology("Topology", 0)
    assert tb.last_command_id == first + 3
