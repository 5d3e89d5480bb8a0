import pytest

from manetlab.errors import (
    AlreadyPlaying,
    GenerationExhausted,
    Infeasible,
    OutOfRange,
    ParseError,
)
from manetlab.medium import Medium, US_PER_S
from manetlab.scenario import (
    Scenario,
    ScenarioPlayer,
    build_scenario,
    load_scenario,
    save_scenario,
)
from manetlab.topogen import GenParams, Status

from conftest import three_node_registry


def params(n=3, p=50, d=2, seed=11):
    return GenParams(n=n, density_pct=p, max_degree=d, rng_seed=seed)


def test_build_ten_topologies_seq_0_to_9():
    s = build_scenario("Topology", params(), 10)
    assert s.count == 10
    assert [t.seq for t in s.topologies] == list(range(10))
    assert all(t.status is Status.ACCEPTED for t in s.topologies)


def test_build_single_trivial_topology():
    s = build_scenario("tiny", params(n=1, p=0, d=0), 1)
    assert s.topologies[0].adjacency == ((0,),)


def test_build_is_deterministic_byte_for_byte():
    a = save_scenario(build_scenario("Topology", params(), 10))
    b = save_scenario(build_scenario("Topology", params(), 10))
    assert a == b


def test_per_topology_seed_regenerates_individually():
    from dataclasses import replace

    from manetlab.topogen import generate

    s = build_scenario("Topology", params(), 5)
    for seq, t in enumerate(s.topologies):
        regen = generate(replace(s.params, rng_seed=(s.params.rng_seed + seq) % 2**64))
        assert regen.adjacency == t.adjacency


def test_build_infeasible_params():
    with pytest.raises(Infeasible):
        build_scenario("bad", params(n=5, d=1), 3)


def test_build_exhaustion_propagates():
    with pytest.raises(GenerationExhausted):
        build_scenario("hopeless", GenParams(n=3, density_pct=0, max_degree=2,
                                             rng_seed=0, max_attempts=20), 2)


# --- persistence ---

def test_save_load_round_trip():
    s = build_scenario("Topology", params(seed=77), 4)
    s.interval_s = 15
    text = save_scenario(s)
    loaded = load_scenario(text)
    assert loaded.name == s.name
    assert loaded.params == s.params
    assert loaded.interval_s == 15
    assert [t.adjacency for t in loaded.topologies] == [t.adjacency for t in s.topologies]
    assert [t.status for t in loaded.topologies] == [t.status for t in s.topologies]
    assert save_scenario(loaded) == text


def test_file_format_shape():
    s = build_scenario("demo", params(seed=3), 2)
    text = save_scenario(s)
    lines = text.splitlines()
    assert lines[0] == "demo".join(["scenario ", ""])
    assert lines[1] == "nodes 3 topologies 2 density 50 maxdeg 2 seed 3 interval 30"
    assert lines[2].startswith("topology 0 status ")


def test_wrong_row_length_is_parse_error():
    s = build_scenario("demo", params(), 1)
    text = save_scenario(s).replace("\n0 ", "\n0 0 ", 1)
    with pytest.raises(ParseError):
        load_scenario(text)


def test_hand_edited_disconnected_matrix_reclassified_on_load():
    text = (
        "scenario edited\n"
        "nodes 3 topologies 1 density 50 maxdeg 2 seed 1 interval 30\n"
        "topology 0 status 100\n"   # file lies: matrix below is disconnected
        "0 1 0\n"
        "1 0 0\n"
        "0 0 0\n"
        "\n"
    )
    s = load_scenario(text)
    assert s.topologies[0].status is Status.REJECTED


def test_trailing_garbage_rejected():
    s = build_scenario("demo", params(), 1)
    with pytest.raises(ParseError):
        load_scenario(save_scenario(s) + "leftover\n")


def test_bad_header_rejected():
    with pytest.raises(ParseError) as exc:
        load_scenario("not-a-scenario\n")
    assert exc.value.line == 1


# --- playback scheduling ---

def applied_log_player(med):
    applied = []
    player = ScenarioPlayer(med, lambda name, seq: applied.append((med.now, seq)))
    return applied, player


def test_auto_play_schedule_30s_interval():
    med = Medium(three_node_registry())
    s = build_scenario("Topology", params(), 10)
    applied, player = applied_log_player(med)
    schedule = player.play(s, 0, 9)
    assert [at for at, _ in schedule] == [k * 30 * US_PER_S for k in range(10)]
    med.advance(270 * US_PER_S)
    assert applied == [(k * 30 * US_PER_S, k) for k in range(10)]
    assert player.playing is None  # finished


def test_play_single_step_from_equals_to():
    med = Medium(three_node_registry())
    s = build_scenario("Topology", params(), 3)
    applied, player = applied_log_player(med)
    player.play(s, 2, 2)
    med.advance(0)
    assert applied == [(0, 2)]


def test_cancel_after_step_leaves_applied_steps():
    med = Medium(three_node_registry())
    s = build_scenario("Topology", params(), 10)
    applied, player = applied_log_player(med)
    player.play(s, 0, 9)
    med.advance(3 * 30 * US_PER_S)  # steps 0..3 applied
    assert len(applied) == 4
    player.cancel()
    med.advance(400 * US_PER_S)
    assert len(applied) == 4


def test_second_play_rejected_while_playing():
    med = Medium(three_node_registry())
    s = build_scenario("Topology", params(), 5)
    _, player = applied_log_player(med)
    player.play(s, 0, 4)
    with pytest.raises(AlreadyPlaying):
        player.play(s, 0, 1)


def test_play_range_validation():
    med = Medium(three_node_registry())
    s = build_scenario("Topology", params(), 5)
    _, player = applied_log_player(med)
    for bad in [(-1, 2), (0, 5), (3, 2)]:
        with pytest.raises(OutOfRange):
            player.play(s, *bad)


def test_failing_apply_cancels_playback_with_error_event():
    med = Medium(three_node_registry())
    s = build_scenario("Topology", params(), 5)

    def exploding(name, seq):
        raise RuntimeError("registry changed under us")

    player = ScenarioPlayer(med, exploding)
    player.play(s, 0, 4)
    med.advance(300 * US_PER_S)
    assert player.playing is None
    assert any(line.split()[1] == "ERROR" for line in med.trace)
