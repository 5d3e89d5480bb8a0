"""Named, persisted, replayable series of random topologies.

A scenario stores its matrices verbatim so saved runs replay without
regeneration, but it also stores the generation parameters (seed
included) so any stored topology can be regenerated bit-identically.
Topology seq gets seed + seq, letting a single topology be rebuilt
without replaying its predecessors.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from .errors import ParseError
from .registry import validate_name
from .topogen import (
    GenParams,
    Status,
    Topology,
    classify,
    generate,
)

DEFAULT_INTERVAL_S = 30


@dataclass
class Scenario:
    name: str
    params: GenParams
    topologies: list[Topology]
    interval_s: int = DEFAULT_INTERVAL_S
    current: Optional[int] = None  # seq of the applied topology
    stale: bool = False  # registry mutated since the scenario was built

    @property
    def count(self) -> int:
        return len(self.topologies)


def build_scenario(name: str, params: GenParams, count: int,
                   interval_s: int = DEFAULT_INTERVAL_S) -> Scenario:
    """Generate `count` accepted topologies, seq 0..count-1.

    Deterministic: topology seq uses rng_seed + seq (mod 2^64). Raises
    Infeasible or GenerationExhausted (the latter names the failing seq).
    """
    validate_name(name)
    if count < 1:
        raise ParseError(0, f"a scenario needs at least 1 topology, got {count}")
    if interval_s < 1:
        raise ParseError(0, f"replay interval must be >= 1 s, got {interval_s}")
    params.validate()
    topologies = []
    for seq in range(count):
        seq_params = replace(params, rng_seed=(params.rng_seed + seq) % 2**64)
        t = generate(seq_params)
        topologies.append(replace(t, seq=seq))
    return Scenario(name=name, params=params, topologies=topologies,
                    interval_s=interval_s)


def save_scenario(s: Scenario) -> str:
    """Serialize: header, params line, then one block per topology."""
    lines = [
        f"scenario {s.name}",
        f"nodes {s.params.n} topologies {s.count} density {s.params.density_pct} "
        f"maxdeg {s.params.max_degree} seed {s.params.rng_seed} interval {s.interval_s}",
    ]
    for t in s.topologies:
        lines.append(f"topology {t.seq} status {t.status.value if t.status else 99}")
        for row in t.adjacency:
            lines.append(" ".join(str(v) for v in row))
        lines.append("")
    return "\n".join(lines) + "\n"


def load_scenario(text: str) -> Scenario:
    """Parse and re-validate a scenario file.

    Every matrix is re-classified on load: a hand-edited file with a
    disconnected or over-connected matrix loads fine but carries status
    99 and will refuse to apply without force.
    """
    lines = text.splitlines()
    pos = 0

    def next_content() -> tuple[int, str]:
        nonlocal pos
        while pos < len(lines):
            pos += 1
            stripped = lines[pos - 1].strip()
            if stripped and not stripped.startswith("#"):
                return pos, stripped
        return pos, ""

    lineno, header = next_content()
    fields = header.split()
    if len(fields) != 2 or fields[0] != "scenario":
        raise ParseError(lineno, f"expected 'scenario <name>', got {header!r}")
    name = fields[1]

    lineno, pline = next_content()
    pf = pline.split()
    expect = ["nodes", None, "topologies", None, "density", None,
              "maxdeg", None, "seed", None, "interval", None]
    if len(pf) != len(expect) or any(
            k is not None and pf[i] != k for i, k in enumerate(expect)):
        raise ParseError(lineno, f"bad parameter line {pline!r}")
    try:
        n, count, density, maxdeg, seed, interval = (
            int(pf[i]) for i in (1, 3, 5, 7, 9, 11)
        )
    except ValueError as exc:
        raise ParseError(lineno, str(exc)) from exc
    params = GenParams(n=n, density_pct=density, max_degree=maxdeg, rng_seed=seed)

    topologies: list[Topology] = []
    for _ in range(count):
        lineno, tline = next_content()
        tf = tline.split()
        if len(tf) != 4 or tf[0] != "topology" or tf[2] != "status":
            raise ParseError(lineno, f"expected 'topology <seq> status <99|100>', got {tline!r}")
        try:
            seq = int(tf[1])
            stored_status = int(tf[3])
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from exc
        if stored_status not in (99, 100):
            raise ParseError(lineno, f"status must be 99 or 100, got {stored_status}")
        rows = []
        for _ in range(n):
            lineno, rline = next_content()
            if not rline:
                raise ParseError(lineno, "matrix row missing")
            entries = rline.split()
            if len(entries) != n:
                raise ParseError(lineno, f"matrix row has {len(entries)} entries, want {n}")
            try:
                row = tuple(int(v) for v in entries)
            except ValueError as exc:
                raise ParseError(lineno, str(exc)) from exc
            if any(v not in (0, 1) for v in row):
                raise ParseError(lineno, "matrix entries must be 0 or 1")
            rows.append(row)
        t = Topology(adjacency=tuple(rows), seq=seq)
        try:
            status = classify(t, params.max_degree)
        except Exception as exc:
            raise ParseError(lineno, f"bad matrix: {exc}") from exc
        topologies.append(replace(t, status=status))

    lineno, extra = next_content()
    if extra:
        raise ParseError(lineno, f"trailing content {extra!r}")
    if len(topologies) != count:
        raise ParseError(lineno, f"header promised {count} topologies, found {len(topologies)}")
    return Scenario(name=name, params=params, topologies=topologies,
                    interval_s=interval)


@dataclass
class PlayState:
    scenario_name: str
    from_seq: int
    to_seq: int
    event_ids: list[int] = field(default_factory=list)
    applied: int = 0
    done: bool = False


class ScenarioPlayer:
    """Schedules automatic topology application on the virtual clock.

    At most one scenario plays at a time. The actual apply is delegated
    to the callback so ruleset compilation and current-topology tracking
    stay with the orchestrator.
    """

    def __init__(self, medium, apply_fn: Callable[[str, int], None]):
        self.medium = medium
        self._apply_fn = apply_fn
        self._state: Optional[PlayState] = None

    @property
    def playing(self) -> Optional[PlayState]:
        if self._state is not None and not self._state.done:
            return self._state
        return None

    def play(self, s: Scenario, from_seq: int, to_seq: int) -> list[tuple[int, int]]:
        """Schedule applies at now + (seq-from)*interval; returns (time, seq) pairs."""
        from .errors import AlreadyPlaying, OutOfRange

        if self.playing is not None:
            raise AlreadyPlaying(
                f"scenario {self._state.scenario_name!r} is still playing"
            )
        if not 0 <= from_seq <= to_seq < s.count:
            raise OutOfRange(
                f"play range {from_seq}..{to_seq} outside 0..{s.count - 1}"
            )
        state = PlayState(scenario_name=s.name, from_seq=from_seq, to_seq=to_seq)
        schedule = []
        for seq in range(from_seq, to_seq + 1):
            at = self.medium.now + (seq - from_seq) * s.interval_s * 1_000_000
            state.event_ids.append(
                self.medium.schedule(at, self._step(state, s.name, seq))
            )
            schedule.append((at, seq))
        self._state = state
        return schedule

    def _step(self, state: PlayState, scenario_name: str, seq: int) -> Callable[[], None]:
        def run() -> None:
            try:
                self._apply_fn(scenario_name, seq)
            except Exception as exc:
                self.medium.emit(
                    "ERROR",
                    f"auto-play of {scenario_name!r} seq {seq} failed: {exc}",
                )
                self.cancel()
                return
            state.applied += 1
            if seq == state.to_seq:
                state.done = True
        return run

    def cancel(self) -> Optional[PlayState]:
        """Stop scheduling further applies; already-applied steps stand."""
        state = self.playing
        if state is None:
            return None
        for eid in state.event_ids:
            self.medium.cancel(eid)
        state.done = True
        return state
