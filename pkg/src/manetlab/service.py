"""HTTP/JSON control service: the testbed's front door.

Every module operation is exposed as an endpoint plus a streaming event
feed of the trace. All mutations funnel through the Testbed's
single-writer lock, so observed state always corresponds to a prefix of
the command sequence. In realtime tick policy a background thread maps
wall-clock seconds onto the virtual clock 1:1; in manual policy the
/tick endpoint advances it (tests never sleep).
"""

from __future__ import annotations

import argparse
import json
import queue
import threading
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Optional

import uvicorn
from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse
from pydantic import BaseModel, ConfigDict, Field

from . import errors
from .adversary import AttackKind, AttackSpec, ProtoFilter
from .agent import AgentTransport
from .medium import Proto
from .testbed import Testbed
from .topogen import GenParams, to_dot
from .traffic import FlowSpec

DEFAULT_PORT = 8787

# HTTP status per error type; Busy maps to 409 per the API contract
ERROR_STATUS = {
    errors.UnknownNode: 404,
    errors.UnknownScenario: 404,
    errors.UnknownAttack: 404,
    errors.UnknownFlow: 404,
    errors.Busy: 409,
    errors.AlreadyPlaying: 409,
    errors.DuplicateName: 409,
    errors.DuplicateAddress: 409,
    errors.DuplicateAttack: 409,
    errors.NodeInUse: 409,
    errors.StaleScenario: 409,
}


@dataclass
class ServiceConfig:
    registry_path: Path
    state_dir: Optional[Path] = None
    host: str = "127.0.0.1"
    port: int = DEFAULT_PORT
    backend: str = "simulated"            # simulated | remote
    tick_policy: str = "manual"           # manual | realtime
    wireless_ifname: str = "ath0"
    agents: dict[str, tuple[str, int]] = dc_field(default_factory=dict)
    frontend_dir: Optional[Path] = None

    def validate(self) -> None:
        if self.backend not in ("simulated", "remote"):
            raise errors.ConfigError(f"unknown backend {self.backend!r}")
        if self.tick_policy not in ("manual", "realtime"):
            raise errors.ConfigError(f"unknown tick policy {self.tick_policy!r}")
        if not Path(self.registry_path).exists():
            raise errors.ConfigError(f"registry file {self.registry_path} not found")


def parse_trace_line(i: int, line: str) -> dict:
    t_str, kind, *rest = line.split(" ")
    text = " ".join(rest)
    fields = {}
    for token in rest:
        if "=" in token:
            k, _, v = token.partition("=")
            fields[k] = v
    return {"i": i, "t": int(t_str), "kind": kind, "text": text, "fields": fields}


class EventHub:
    """Broadcasts trace events to streaming subscribers.

    Slow consumers are dropped once their buffer fills; history is kept
    so late subscribers can replay from an index.
    """

    BUFFER = 1000

    def __init__(self):
        self.history: list[dict] = []
        self._subscribers: list[queue.Queue] = []
        self._lock = threading.Lock()

    def publish(self, line: str) -> None:
        with self._lock:
            event = parse_trace_line(len(self.history), line)
            self.history.append(event)
            dead = []
            for q in self._subscribers:
                try:
                    q.put_nowait(event)
                except queue.Full:
                    dead.append(q)
            for q in dead:
                self._subscribers.remove(q)

    def subscribe(self) -> tuple[queue.Queue, int]:
        """Returns (live queue, index of the first event it will carry)."""
        with self._lock:
            q: queue.Queue = queue.Queue(maxsize=self.BUFFER)
            self._subscribers.append(q)
            return q, len(self.history)

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)


class RealtimeTicker(threading.Thread):
    """Maps wall-clock time onto the virtual clock, 1 s : 1 s."""

    def __init__(self, tb: Testbed, resolution_s: float = 0.05):
        super().__init__(daemon=True)
        self.tb = tb
        self.resolution_s = resolution_s
        self._stop = threading.Event()

    def run(self) -> None:
        start_wall = time.monotonic()
        start_virtual = self.tb.now_us
        while not self._stop.wait(self.resolution_s):
            target = start_virtual + int((time.monotonic() - start_wall) * 1_000_000)
            try:
                self.tb.advance_to(target)
            except errors.Busy:
                pass  # remote exec holds the bench; catch up afterwards

    def stop(self) -> None:
        self._stop.set()


# --- request bodies (unknown fields rejected) ---

class _Body(BaseModel):
    model_config = ConfigDict(extra="forbid")


class NodeIn(_Body):
    name: str
    wired_ip: str
    wired_mac: str
    wireless_ip: str
    wireless_mac: str


class ScenarioIn(_Body):
    name: str
    nodes: int
    topologies: int
    density: int
    maxdeg: int
    seed: int
    interval: int = 30
    max_attempts: int = 10000


class PlayIn(_Body):
    from_seq: int = Field(alias="from")
    to_seq: int = Field(alias="to")


class AttackIn(_Body):
    name: str
    target: str
    protocol: str = "ALL"
    kind: str = "block_both"
    loss_dur_s: int = 5
    normal_dur_s: int = 35
    cycles: int = 10


class InjectIn(_Body):
    hex: str
    as_node: str


class FlowIn(_Body):
    src: str
    dst: str
    protocol: str = "UDP"
    port: int = 0
    delay_ms: int = 1000
    payload_len: int = 64
    count: Optional[int] = None


class PingIn(_Body):
    src: str
    dst: str
    count: int = 3
    timeout_ms: int = 1000


class ExecIn(_Body):
    node: str
    command: str


class TickIn(_Body):
    seconds: float = 0.0
    us: int = 0


def _scenario_summary(s) -> dict:
    return {
        "name": s.name,
        "nodes": s.params.n,
        "topologies": s.count,
        "density": s.params.density_pct,
        "maxdeg": s.params.max_degree,
        "seed": s.params.rng_seed,
        "interval": s.interval_s,
        "current": s.current,
        "stale": s.stale,
    }


def create_app(tb: Testbed, config: ServiceConfig,
               hub: Optional[EventHub] = None) -> FastAPI:
    app = FastAPI(title="manetlab", version="0.1.0")
    hub = hub if hub is not None else EventHub()
    app.state.testbed = tb
    app.state.hub = hub
    app.state.config = config
    app.state.ticker = None

    @app.exception_handler(errors.TestbedError)
    async def testbed_error_handler(_request: Request, exc: errors.TestbedError):
        payload = {"error": type(exc).__name__, "detail": str(exc)}
        if isinstance(exc, errors.CommandFailed):
            payload["exit_code"] = exc.exit_code
            payload["output"] = exc.output
        if isinstance(exc, errors.ParseError):
            payload["line"] = exc.line
        status = ERROR_STATUS.get(type(exc), 400)
        return JSONResponse(status_code=status, content=payload)

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "backend": config.backend,
            "tick_policy": config.tick_policy,
            "virtual_time_us": tb.now_us,
            "nodes": len(tb.registry),
        }

    # --- nodes ---

    @app.get("/nodes")
    def nodes_list():
        return tb.registry_summary()

    @app.post("/nodes")
    def nodes_add(body: NodeIn):
        index = tb.add_node(body.name, body.wired_ip, body.wired_mac,
                            body.wireless_ip, body.wireless_mac)
        return {"index": index, "count": len(tb.registry)}

    @app.delete("/nodes/{name}")
    def nodes_remove(name: str):
        return {"count": tb.remove_node(name)}

    # --- scenarios ---

    @app.post("/scenarios")
    def scenarios_build(body: ScenarioIn):
        params = GenParams(n=body.nodes, density_pct=body.density,
                           max_degree=body.maxdeg, rng_seed=body.seed,
                           max_attempts=body.max_attempts)
        s = tb.build_scenario(body.name, params, body.topologies, body.interval)
        return _scenario_summary(s)

    @app.get("/scenarios")
    def scenarios_list():
        return {"scenarios": [_scenario_summary(s) for s in tb.scenarios.values()]}

    @app.get("/scenarios/{name}")
    def scenarios_show(name: str):
        s = tb.get_scenario(name)
        detail = _scenario_summary(s)
        detail["matrices"] = [
            {"seq": t.seq, "status": t.status.value if t.status else None,
             "adjacency": [list(row) for row in t.adjacency]}
            for t in s.topologies
        ]
        return detail

    @app.get("/scenarios/{name}/topology/{seq}.dot", response_class=PlainTextResponse)
    def scenarios_topology_dot(name: str, seq: int):
        s = tb.get_scenario(name)
        if not 0 <= seq < s.count:
            raise errors.OutOfRange(f"seq {seq} outside 0..{s.count - 1}")
        names = tb.registry.names[: s.params.n]
        return to_dot(s.topologies[seq], names)

    @app.post("/scenarios/{name}/apply/{seq}")
    def scenarios_apply(name: str, seq: int, force: bool = False):
        at = tb.apply_topology(name, seq, force=force)
        return {"applied_at_us": at, "current": seq}

    @app.post("/scenarios/{name}/play")
    def scenarios_play(name: str, body: PlayIn):
        schedule = tb.play(name, body.from_seq, body.to_seq)
        return {"schedule": [{"at_us": at, "seq": seq} for at, seq in schedule]}

    @app.delete("/scenarios/{name}/play")
    def scenarios_stop_play(name: str):
        playing = tb.player.playing
        if playing is None or playing.scenario_name != name:
            raise errors.UnknownScenario(f"scenario {name!r} is not playing")
        state = tb.stop_play()
        return {"cancelled": True, "applied": state.applied}

    # --- attacks ---

    @app.post("/attacks")
    def attacks_launch(body: AttackIn):
        spec = AttackSpec(
            name=body.name,
            target=body.target,
            protocol=ProtoFilter(body.protocol),
            kind=AttackKind(body.kind),
            loss_dur_s=body.loss_dur_s,
            normal_dur_s=body.normal_dur_s,
            cycles=body.cycles,
        )
        return {"attack_id": tb.attack_launch(spec)}

    @app.get("/attacks")
    def attacks_list():
        return tb.attack_overview()

    @app.delete("/attacks/{name}")
    def attacks_stop(name: str):
        return {"stopped_at_us": tb.attack_stop(name)}

    @app.post("/attacks/{name}/replay")
    def attacks_replay(name: str):
        return {"attack_id": tb.attack_replay(name)}

    @app.post("/inject")
    def inject(body: InjectIn):
        return tb.inject(body.hex, body.as_node)

    # --- flows ---

    @app.post("/flows")
    def flows_start(body: FlowIn):
        spec = FlowSpec(
            src=body.src, dst=body.dst, protocol=Proto(body.protocol),
            port=body.port, delay_ms=body.delay_ms,
            payload_len=body.payload_len, count=body.count,
        )
        return {"flow_id": tb.flow_start(spec)}

    @app.get("/flows")
    def flows_list():
        return {"flows": tb.flow_list()}

    @app.get("/flows/{flow_id}")
    def flows_stats(flow_id: int):
        return tb.flow_stats(flow_id).as_dict()

    @app.delete("/flows/{flow_id}")
    def flows_stop(flow_id: int):
        return tb.flow_stop(flow_id).as_dict()

    # --- probes / exec ---

    @app.post("/probe/ping")
    def probe_ping(body: PingIn):
        return tb.ping(body.src, body.dst, count=body.count,
                       timeout_ms=body.timeout_ms).as_dict()

    @app.post("/exec")
    def remote_exec(body: ExecIn):
        exit_code, output = tb.remote_exec(body.node, body.command)
        return {"exit_code": exit_code, "output": output}

    # --- topology view ---

    @app.get("/topology/current.dot", response_class=PlainTextResponse)
    def current_dot():
        dot = tb.current_dot()
        if dot is None:
            return JSONResponse(status_code=404,
                                content={"error": "NoTopology",
                                         "detail": "no topology applied"})
        return dot

    # --- clock ---

    @app.post("/tick")
    def tick(body: TickIn):
        if config.tick_policy != "manual":
            raise errors.ConfigError("tick endpoint is manual policy only")
        processed = tb.tick(seconds=body.seconds, us=body.us)
        return {"virtual_time_us": tb.now_us, "events_processed": processed}

    # --- event stream ---

    @app.get("/events")
    def events(since: Optional[int] = Query(default=None),
               max: Optional[int] = Query(default=None),
               idle_timeout_s: float = Query(default=30.0)):
        live, first_live = hub.subscribe()
        backlog = []
        if since is not None:
            backlog = hub.history[since:first_live]

        def stream():
            sent = 0
            try:
                for event in backlog:
                    yield json.dumps(event) + "\n"
                    sent += 1
                    if max is not None and sent >= max:
                        return
                while max is None or sent < max:
                    try:
                        event = live.get(timeout=idle_timeout_s)
                    except queue.Empty:
                        return
                    yield json.dumps(event) + "\n"
                    sent += 1
            finally:
                hub.unsubscribe(live)

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    if config.frontend_dir is not None and Path(config.frontend_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.frontend_dir, html=True),
                  name="ui")

    return app


def build_testbed(config: ServiceConfig, hub: EventHub) -> Testbed:
    config.validate()
    transport = AgentTransport(config.agents) if config.backend == "remote" else None
    return Testbed.load(
        config.registry_path,
        config.state_dir,
        wireless_ifname=config.wireless_ifname,
        event_sink=hub.publish,
        backend=config.backend,
        remote_transport=transport,
    )


def _check_bindable(host: str, port: int) -> None:
    import socket

    try:
        with socket.socket() as sock:
            sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            sock.bind((host, port))
    except OSError as exc:
        raise errors.BindError(f"cannot bind {host}:{port}: {exc}") from exc


def serve(config: ServiceConfig) -> None:
    """Build the testbed from config and run the service (blocking)."""
    hub = EventHub()
    tb = build_testbed(config, hub)
    _check_bindable(config.host, config.port)
    app = create_app(tb, config, hub)
    ticker = None
    if config.tick_policy == "realtime":
        ticker = RealtimeTicker(tb)
        ticker.start()
        app.state.ticker = ticker
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    finally:
        if ticker is not None:
            ticker.stop()


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="manetlab-server",
        description="Run the testbed control service.",
    )
    parser.add_argument("--registry", type=Path, required=True,
                        help="registry file (one node per line)")
    parser.add_argument("--state-dir", type=Path, default=None,
                        help="directory for scenario/attack persistence")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=DEFAULT_PORT)
    parser.add_argument("--backend", choices=["simulated", "remote"],
                        default="simulated")
    parser.add_argument("--tick-policy", choices=["manual", "realtime"],
                        default="realtime")
    parser.add_argument("--wireless-ifname", default="ath0")
    parser.add_argument("--agent", action="append", default=[],
                        metavar="NODE=HOST:PORT",
                        help="agent address for a node (remote backend)")
    parser.add_argument("--frontend-dir", type=Path, default=None,
                        help="serve the operator console from this directory at /ui")
    args = parser.parse_args(argv)

    agents = {}
    for item in args.agent:
        try:
            node, _, addr = item.partition("=")
            host, _, port = addr.rpartition(":")
            agents[node] = (host, int(port))
        except ValueError:
            parser.error(f"bad --agent value {item!r}, want NODE=HOST:PORT")

    config = ServiceConfig(
        registry_path=args.registry,
        state_dir=args.state_dir,
        host=args.host,
        port=args.port,
        backend=args.backend,
        tick_policy=args.tick_policy,
        wireless_ifname=args.wireless_ifname,
        agents=agents,
        frontend_dir=args.frontend_dir,
    )
    try:
        serve(config)
    except (errors.ConfigError, errors.BindError) as exc:
        parser.exit(2, f"config error: {exc}\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
