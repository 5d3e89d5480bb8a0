"""Orchestrator tying registry, medium, scenarios, attacks, flows and
probes together behind one single-writer surface.

Every mutating entry point runs under one reentrant lock and is refused
with Busy while a remote command execution holds the exclusivity token
(the whole bench focuses on that command; nothing else may move, not
even the clock). Probe and inject calls drive the virtual clock forward
themselves so their results are complete on return.
"""

from __future__ import annotations

import contextlib
import json
import shlex
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from . import scenario as scenario_mod
from .adversary import AttackManager, AttackSpec, InjectionSpec, load_attack_list, save_attack_list
from .errors import (
    Busy,
    CommandFailed,
    DimensionMismatch,
    NodeInUse,
    UnknownScenario,
)
from .medium import Medium, US_PER_S
from .probe import Prober, ProbeReport
from .registry import NodeRecord, Registry, load_registry, save_registry
from .rules import DEFAULT_WIRELESS_IFNAME, compile_topology, drop_only_ruleset
from .scenario import PlayState, Scenario, ScenarioPlayer
from .topogen import GenParams, Topology, to_dot
from .traffic import FlowManager, FlowSpec, FlowStats


@dataclass
class AppliedTopology:
    """Snapshot of what is live on the medium right now."""

    topology: Topology
    names: list[str]  # node names for matrix rows, frozen at apply time
    scenario: Optional[str]
    applied_at_us: int


class Testbed:
    """Facade used by the HTTP service, the CLI backend and the tests."""

    __test__ = False  # keep pytest from collecting this as a test class

    def __init__(self, registry: Optional[Registry] = None, *,
                 wireless_ifname: str = DEFAULT_WIRELESS_IFNAME,
                 link_latency_us: int = 1000,
                 event_sink: Optional[Callable[[str], None]] = None,
                 backend: str = "simulated",
                 remote_transport=None,
                 registry_path: Optional[Path] = None,
                 state_dir: Optional[Path] = None):
        self.registry = registry if registry is not None else Registry()
        self.wireless_ifname = wireless_ifname
        self.backend = backend
        self.remote_transport = remote_transport
        self.registry_path = Path(registry_path) if registry_path else None
        self.state_dir = Path(state_dir) if state_dir else None
        self.medium = Medium(self.registry, link_latency_us=link_latency_us,
                             trace_sink=event_sink)
        self.registry.set_warn(lambda msg: self.medium.emit("WARNING", msg))
        self.attacks = AttackManager(self.medium)
        self.flows = FlowManager(self.medium)
        self.prober = Prober(self.medium)
        self.player = ScenarioPlayer(self.medium, self._apply_for_player)
        self.scenarios: dict[str, Scenario] = {}
        self.current: Optional[AppliedTopology] = None
        self._lock = threading.RLock()
        self._exec_active = False
        self._command_ids = 0

    # --- persistence wiring ---

    @classmethod
    def load(cls, registry_path: Path, state_dir: Optional[Path] = None,
             **kwargs) -> "Testbed":
        """Boot from the on-disk registry plus any saved scenarios/attacks."""
        registry = load_registry(Path(registry_path).read_text(encoding="utf-8"))
        tb = cls(registry, registry_path=registry_path, state_dir=state_dir,
                 **kwargs)
        if state_dir is not None:
            state_dir = Path(state_dir)
            for path in sorted(state_dir.glob("scenarios/*.scn")):
                s = scenario_mod.load_scenario(path.read_text(encoding="utf-8"))
                tb.scenarios[s.name] = s
            attacks_file = state_dir / "attacks.txt"
            if attacks_file.exists():
                for spec in load_attack_list(attacks_file.read_text(encoding="utf-8")):
                    tb.attacks.save_attack(spec)
        return tb

    def _persist_registry(self) -> None:
        if self.registry_path is not None:
            self.registry_path.write_text(save_registry(self.registry),
                                          encoding="utf-8")

    def _persist_scenario(self, s: Scenario) -> None:
        if self.state_dir is not None:
            d = self.state_dir / "scenarios"
            d.mkdir(parents=True, exist_ok=True)
            (d / f"{s.name}.scn").write_text(scenario_mod.save_scenario(s),
                                             encoding="utf-8")

    def _persist_attacks(self) -> None:
        if self.state_dir is not None:
            self.state_dir.mkdir(parents=True, exist_ok=True)
            specs = [self.attacks.saved(n) for n in self.attacks.list_attacks()]
            (self.state_dir / "attacks.txt").write_text(
                save_attack_list(specs), encoding="utf-8")

    # --- single-writer discipline ---

    @contextlib.contextmanager
    def _mutate(self):
        """Serialize a mutation; refuse with Busy during remote execution."""
        with self._lock:
            if self._exec_active:
                raise Busy("remote command execution in progress")
            self._command_ids += 1
            yield self._command_ids

    @property
    def exec_active(self) -> bool:
        with self._lock:
            return self._exec_active

    @property
    def last_command_id(self) -> int:
        with self._lock:
            return self._command_ids

    # --- time ---

    @property
    def now_us(self) -> int:
        return self.medium.now

    def tick(self, seconds: float = 0.0, us: int = 0) -> int:
        """Advance the virtual clock; returns events processed."""
        with self._mutate():
            target = self.medium.now + int(seconds * US_PER_S) + int(us)
            return self.medium.advance(target)

    def advance_to(self, target_us: int) -> int:
        with self._mutate():
            if target_us < self.medium.now:
                return 0
            return self.medium.advance(target_us)

    # --- registry ---

    def add_node(self, name: str, wired_ip: str, wired_mac: str,
                 wireless_ip: str, wireless_mac: str) -> int:
        with self._mutate():
            rec = NodeRecord.create(name, wired_ip, wired_mac,
                                    wireless_ip, wireless_mac)
            idx = self.registry.add_node(rec)
            self.medium.sync_nodes()
            self._mark_scenarios_stale()
            self._persist_registry()
            return idx

    def remove_node(self, name: str) -> int:
        with self._mutate():
            idx = self.registry.index_of(name)
            if self.current is not None and idx < self.current.topology.n:
                raise NodeInUse(
                    f"node {name!r} is part of the currently applied topology"
                )
            count = self.registry.remove_node(name)
            self.medium.sync_nodes()
            self._mark_scenarios_stale()
            self._persist_registry()
            return count

    def _mark_scenarios_stale(self) -> None:
        for s in self.scenarios.values():
            s.stale = True

    # --- scenarios ---

    def build_scenario(self, name: str, params: GenParams, count: int,
                       interval_s: int = scenario_mod.DEFAULT_INTERVAL_S) -> Scenario:
        with self._mutate():
            if params.n > len(self.registry):
                raise DimensionMismatch(
                    f"scenario wants {params.n} nodes, registry has {len(self.registry)}"
                )
            s = scenario_mod.build_scenario(name, params, count, interval_s)
            self.scenarios[name] = s
            self._persist_scenario(s)
            return s

    def get_scenario(self, name: str) -> Scenario:
        s = self.scenarios.get(name)
        if s is None:
            raise UnknownScenario(f"no scenario named {name!r}")
        return s

    def load_scenario_text(self, text: str) -> Scenario:
        with self._mutate():
            s = scenario_mod.load_scenario(text)
            self.scenarios[s.name] = s
            self._persist_scenario(s)
            return s

    def scenario_text(self, name: str) -> str:
        return scenario_mod.save_scenario(self.get_scenario(name))

    def apply_topology(self, scenario_name: str, seq: int,
                       force: bool = False) -> int:
        """Compile topology `seq` and push it onto the medium."""
        from .errors import OutOfRange, StaleScenario

        with self._mutate():
            s = self.get_scenario(scenario_name)
            if s.stale:
                raise StaleScenario(
                    f"scenario {scenario_name!r} predates a registry change; rebuild it"
                )
            if not 0 <= seq < s.count:
                raise OutOfRange(f"seq {seq} outside 0..{s.count - 1}")
            at = self._apply(s.topologies[seq],
                             label=f"scenario={scenario_name} seq={seq}",
                             scenario=scenario_name, force=force)
            s.current = seq
            return at

    def apply_manual(self, t: Topology, force: bool = False) -> int:
        """Apply an operator-built topology outside any scenario."""
        with self._mutate():
            return self._apply(t, label=f"origin=manual seq={t.seq}",
                               scenario=None, force=force)

    def _apply(self, t: Topology, label: str, scenario: Optional[str],
               force: bool) -> int:
        reg = self.registry
        if t.n > len(reg):
            raise DimensionMismatch(
                f"{t.n}-node topology against a {len(reg)}-node registry"
            )
        if t.n == len(reg):
            rulesets = compile_topology(t, reg, force=force)
        else:
            # scenario over a prefix of the registry: everyone else gets a
            # closed wireless interface
            sub = Registry()
            for rec in list(reg)[: t.n]:
                sub.add_node(rec)
            rulesets = compile_topology(t, sub, force=force)
            rulesets += [drop_only_ruleset(rec.name, t.seq)
                         for rec in list(reg)[t.n:]]
        at = self.medium.apply_rulesets(rulesets, label=label)
        self.current = AppliedTopology(
            topology=t,
            names=[rec.name for rec in list(reg)[: t.n]],
            scenario=scenario,
            applied_at_us=at,
        )
        if self.backend == "remote" and self.remote_transport is not None:
            from .rules import emit_script

            for rs in rulesets:
                self.remote_transport.upload_script(
                    rs.owner, emit_script(rs, self.wireless_ifname))
        return at

    def _apply_for_player(self, scenario_name: str, seq: int) -> None:
        # runs inside the event loop under the testbed lock (RLock reentry)
        s = self.get_scenario(scenario_name)
        from .errors import StaleScenario

        if s.stale:
            raise StaleScenario(
                f"scenario {scenario_name!r} went stale during playback"
            )
        self._apply(s.topologies[seq],
                    label=f"scenario={scenario_name} seq={seq}",
                    scenario=scenario_name, force=False)
        s.current = seq

    def play(self, scenario_name: str, from_seq: int, to_seq: int) -> list[tuple[int, int]]:
        from .errors import StaleScenario

        with self._mutate():
            s = self.get_scenario(scenario_name)
            if s.stale:
                raise StaleScenario(f"scenario {scenario_name!r} is stale")
            return self.player.play(s, from_seq, to_seq)

    def stop_play(self) -> Optional[PlayState]:
        with self._mutate():
            return self.player.cancel()

    def current_dot(self) -> Optional[str]:
        cur = self.current
        if cur is None:
            return None
        return to_dot(cur.topology, cur.names)

    # --- adversary ---

    def attack_launch(self, spec: AttackSpec) -> int:
        """Save the spec to the attack list and launch it."""
        with self._mutate():
            attack_id = self.attacks.launch(spec)
            self.attacks.save_attack(spec)
            self._persist_attacks()
            return attack_id

    def attack_stop(self, name: str) -> int:
        from .errors import UnknownAttack

        with self._mutate():
            active = self.attacks.active_by_name(name)
            if active is None:
                raise UnknownAttack(f"no active attack named {name!r}")
            return self.attacks.stop(active.attack_id)

    def attack_replay(self, name: str) -> int:
        with self._mutate():
            return self.attacks.replay(name)

    def attack_overview(self) -> dict:
        saved = []
        for name in self.attacks.list_attacks():
            s = self.attacks.saved(name)
            saved.append({
                "name": s.name, "target": s.target,
                "protocol": s.protocol.value, "kind": s.kind.value,
                "loss_dur_s": s.loss_dur_s, "normal_dur_s": s.normal_dur_s,
                "cycles": s.cycles,
            })
        active = [
            {"attack_id": a.attack_id, "name": a.spec.name,
             "target": a.spec.target, "launched_at_us": a.launched_at}
            for a in self.attacks.active
        ]
        return {"saved": saved, "active": active}

    def inject(self, hex_bytes: str, as_node: str) -> dict:
        """Inject raw bytes and run the clock just past delivery."""
        with self._mutate():
            handle = self.attacks.inject(InjectionSpec(hex=hex_bytes, as_node=as_node))
            if not handle.done:
                self.medium.advance(self.medium.now + self.medium.link_latency_us)
            return {
                "frame_id": handle.frame.frame_id,
                "delivered_to": list(handle.delivered_to),
                "source_dropped": handle.source_dropped,
            }

    # --- traffic ---

    def flow_start(self, spec: FlowSpec) -> int:
        with self._mutate():
            return self.flows.start_flow(spec)

    def flow_stop(self, flow_id: int) -> FlowStats:
        with self._mutate():
            return self.flows.stop_flow(flow_id)

    def flow_stats(self, flow_id: int) -> FlowStats:
        return self.flows.stats(flow_id)

    def flow_list(self) -> list[dict]:
        return self.flows.list_flows()

    # --- probes ---

    def ping(self, src: str, dst: str, count: int = 3,
             timeout_ms: int = 1000) -> ProbeReport:
        with self._mutate():
            return self.prober.ping(src, dst, count=count, timeout_ms=timeout_ms)

    def remote_exec(self, node: str, command: str) -> tuple[int, str]:
        """Run a command on a node while holding the bench-wide exclusivity token.

        Everything else (including clock ticks) gets Busy until the
        command finishes; the trace therefore shows nothing between
        EXEC_START and EXEC_END.
        """
        with self._lock:
            if self._exec_active:
                raise Busy("remote command execution in progress")
            self.registry.get(node)
            self._exec_active = True
            self._command_ids += 1
            self.medium.emit("EXEC_START",
                             f"node={node} command={shlex.quote(command)}")
        exit_code = -1
        output = ""
        try:
            exit_code, output = self._execute(node, command)
        finally:
            with self._lock:
                self.medium.emit("EXEC_END", f"node={node} exit={exit_code}")
                self._exec_active = False
        if exit_code != 0:
            raise CommandFailed(exit_code, output)
        return exit_code, output

    def _execute(self, node: str, command: str) -> tuple[int, str]:
        if self.backend == "remote":
            if self.remote_transport is None:
                return 125, "remote backend has no transport configured\n"
            return self.remote_transport.exec(node, command)
        return run_builtin(self, node, command)

    # --- introspection ---

    def trace(self) -> list[str]:
        return list(self.medium.trace)

    def registry_summary(self) -> dict:
        return {
            "count": len(self.registry),
            "nodes": [
                {
                    "name": r.name,
                    "wired_ip": r.wired_ip,
                    "wired_mac": r.wired_mac,
                    "wireless_ip": r.wireless_ip,
                    "wireless_mac": r.wireless_mac,
                }
                for r in self.registry
            ],
        }


def run_builtin(tb: Testbed, node: str, command: str) -> tuple[int, str]:
    """The simulated backend's closed command table.

    echo, ruleset-dump, counters-dump, plus sleep (wall-clock; exists so
    the exclusivity window is observable from other threads). Anything
    else fails with the shell's 127.
    """
    try:
        argv = shlex.split(command)
    except ValueError as exc:
        return 2, f"bad command syntax: {exc}\n"
    if not argv:
        return 2, "empty command\n"
    name, *args = argv
    if name == "echo":
        return 0, " ".join(args) + "\n"
    if name == "ruleset-dump":
        state = tb.medium.node(node)
        if state.active_ruleset is None:
            return 0, "# default accept\n"
        from .rules import emit_script

        return 0, emit_script(state.active_ruleset, tb.wireless_ifname)
    if name == "counters-dump":
        state = tb.medium.node(node)
        return 0, json.dumps(state.counters, sort_keys=True) + "\n"
    if name == "sleep":
        try:
            duration = float(args[0]) if args else 0.0
        except ValueError:
            return 2, f"sleep: bad interval {args[0]!r}\n"
        time.sleep(duration)
        return 0, ""
    return 127, f"{name}: command not found\n"
