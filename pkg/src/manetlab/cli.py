"""Command-line client for the control service.

Every subcommand maps to one endpoint and prints the raw JSON response
body, byte-identical to what the API returns, so scripts can consume
either surface interchangeably.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

import httpx

from .service import DEFAULT_PORT


def _add_common(sub):
    return sub


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="manetlab",
        description="Drive a running manetlab control service.",
    )
    parser.add_argument("--server", default=f"http://127.0.0.1:{DEFAULT_PORT}",
                        help="base URL of the control service")
    parser.add_argument("--timeout", type=float, default=30.0)
    sub = parser.add_subparsers(dest="group", required=True)

    sub.add_parser("health", help="service status")

    tick = sub.add_parser("tick", help="advance the virtual clock (manual policy)")
    tick.add_argument("seconds", type=float, nargs="?", default=0.0)
    tick.add_argument("--us", type=int, default=0)

    nodes = sub.add_parser("nodes", help="registry operations")
    nodes_sub = nodes.add_subparsers(dest="action", required=True)
    nodes_sub.add_parser("list")
    add = nodes_sub.add_parser("add")
    for f in ("name", "wired_ip", "wired_mac", "wireless_ip", "wireless_mac"):
        add.add_argument(f)
    rm = nodes_sub.add_parser("remove")
    rm.add_argument("name")

    scen = sub.add_parser("scenario", help="scenario operations")
    scen_sub = scen.add_subparsers(dest="action", required=True)
    build = scen_sub.add_parser("build")
    build.add_argument("name")
    build.add_argument("--nodes", type=int, required=True)
    build.add_argument("--topologies", type=int, required=True)
    build.add_argument("--density", type=int, required=True)
    build.add_argument("--maxdeg", type=int, required=True)
    build.add_argument("--seed", type=int, required=True)
    build.add_argument("--interval", type=int, default=30)
    scen_sub.add_parser("list")
    show = scen_sub.add_parser("show")
    show.add_argument("name")
    apply_p = scen_sub.add_parser("apply")
    apply_p.add_argument("name")
    apply_p.add_argument("seq", type=int)
    apply_p.add_argument("--force", action="store_true")
    play = scen_sub.add_parser("play")
    play.add_argument("name")
    play.add_argument("from_seq", type=int)
    play.add_argument("to_seq", type=int)
    stop = scen_sub.add_parser("stop")
    stop.add_argument("name")

    attack = sub.add_parser("attack", help="adversary operations")
    attack_sub = attack.add_subparsers(dest="action", required=True)
    launch = attack_sub.add_parser("launch")
    launch.add_argument("name")
    launch.add_argument("target")
    launch.add_argument("--protocol", default="ALL",
                        choices=["TCP", "UDP", "ICMP", "ALL"])
    launch.add_argument("--kind", default="block_both",
                        choices=["block_incoming", "block_outgoing",
                                 "block_both", "periodic_loss"])
    launch.add_argument("--loss", type=int, default=5, dest="loss_dur_s")
    launch.add_argument("--normal", type=int, default=35, dest="normal_dur_s")
    launch.add_argument("--cycles", type=int, default=10)
    attack_sub.add_parser("list")
    astop = attack_sub.add_parser("stop")
    astop.add_argument("name")
    replay = attack_sub.add_parser("replay")
    replay.add_argument("name")

    inject = sub.add_parser("inject", help="inject a raw hex frame")
    inject.add_argument("as_node")
    inject.add_argument("hex")

    flow = sub.add_parser("flow", help="traffic generator")
    flow_sub = flow.add_subparsers(dest="action", required=True)
    fstart = flow_sub.add_parser("start")
    fstart.add_argument("src")
    fstart.add_argument("dst")
    fstart.add_argument("--protocol", default="UDP", choices=["TCP", "UDP", "ICMP"])
    fstart.add_argument("--port", type=int, default=0)
    fstart.add_argument("--delay-ms", type=int, default=1000)
    fstart.add_argument("--payload-len", type=int, default=64)
    fstart.add_argument("--count", type=int, default=None)
    flow_sub.add_parser("list")
    fstats = flow_sub.add_parser("stats")
    fstats.add_argument("flow_id", type=int)
    fstop = flow_sub.add_parser("stop")
    fstop.add_argument("flow_id", type=int)

    ping = sub.add_parser("ping", help="connectivity probe")
    ping.add_argument("src")
    ping.add_argument("dst")
    ping.add_argument("--count", type=int, default=3)
    ping.add_argument("--timeout-ms", type=int, default=1000)

    exec_p = sub.add_parser("exec", help="exclusive remote command execution")
    exec_p.add_argument("node")
    exec_p.add_argument("command")

    sub.add_parser("dot", help="current topology as DOT")

    events = sub.add_parser("events", help="tail the event stream")
    events.add_argument("--since", type=int, default=0)
    events.add_argument("--max", type=int, default=None)
    events.add_argument("--idle-timeout", type=float, default=5.0)

    return parser


def _request(client: httpx.Client, args) -> httpx.Response:
    g, a = args.group, getattr(args, "action", None)
    if g == "health":
        return client.get("/health")
    if g == "tick":
        return client.post("/tick", json={"seconds": args.seconds, "us": args.us})
    if g == "nodes":
        if a == "list":
            return client.get("/nodes")
        if a == "add":
            return client.post("/nodes", json={
                "name": args.name, "wired_ip": args.wired_ip,
                "wired_mac": args.wired_mac, "wireless_ip": args.wireless_ip,
                "wireless_mac": args.wireless_mac})
        return client.delete(f"/nodes/{args.name}")
    if g == "scenario":
        if a == "build":
            return client.post("/scenarios", json={
                "name": args.name, "nodes": args.nodes,
                "topologies": args.topologies, "density": args.density,
                "maxdeg": args.maxdeg, "seed": args.seed,
                "interval": args.interval})
        if a == "list":
            return client.get("/scenarios")
        if a == "show":
            return client.get(f"/scenarios/{args.name}")
        if a == "apply":
            return client.post(
                f"/scenarios/{args.name}/apply/{args.seq}",
                params={"force": str(args.force).lower()})
        if a == "play":
            return client.post(f"/scenarios/{args.name}/play",
                               json={"from": args.from_seq, "to": args.to_seq})
        return client.delete(f"/scenarios/{args.name}/play")
    if g == "attack":
        if a == "launch":
            return client.post("/attacks", json={
                "name": args.name, "target": args.target,
                "protocol": args.protocol, "kind": args.kind,
                "loss_dur_s": args.loss_dur_s,
                "normal_dur_s": args.normal_dur_s, "cycles": args.cycles})
        if a == "list":
            return client.get("/attacks")
        if a == "stop":
            return client.delete(f"/attacks/{args.name}")
        return client.post(f"/attacks/{args.name}/replay")
    if g == "inject":
        return client.post("/inject", json={"hex": args.hex, "as_node": args.as_node})
    if g == "flow":
        if a == "start":
            return client.post("/flows", json={
                "src": args.src, "dst": args.dst, "protocol": args.protocol,
                "port": args.port, "delay_ms": args.delay_ms,
                "payload_len": args.payload_len, "count": args.count})
        if a == "list":
            return client.get("/flows")
        if a == "stats":
            return client.get(f"/flows/{args.flow_id}")
        return client.delete(f"/flows/{args.flow_id}")
    if g == "ping":
        return client.post("/probe/ping", json={
            "src": args.src, "dst": args.dst, "count": args.count,
            "timeout_ms": args.timeout_ms})
    if g == "exec":
        return client.post("/exec", json={"node": args.node,
                                          "command": args.command})
    if g == "dot":
        return client.get("/topology/current.dot")
    raise AssertionError(f"unhandled command {g}")


def _stream_events(client: httpx.Client, args) -> int:
    params = {"since": args.since, "idle_timeout_s": args.idle_timeout}
    if args.max is not None:
        params["max"] = args.max
    with client.stream("GET", "/events", params=params) as resp:
        for line in resp.iter_lines():
            if line:
                sys.stdout.write(line + "\n")
                sys.stdout.flush()
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    with httpx.Client(base_url=args.server, timeout=args.timeout) as client:
        if args.group == "events":
            return _stream_events(client, args)
        try:
            resp = _request(client, args)
        except httpx.HTTPError as exc:
            sys.stderr.write(f"request failed: {exc}\n")
            return 2
        sys.stdout.write(resp.text)
        if not resp.text.endswith("\n"):
            sys.stdout.write("\n")
        return 0 if resp.is_success else 1


if __name__ == "__main__":
    raise SystemExit(main())
