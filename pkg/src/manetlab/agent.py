"""Member-node agent for the remote backend.

A tiny JSON-lines-over-TCP service that runs on each real node's wired
interface. The controller pushes filter scripts to it and runs shell
commands through it. One request per line, one JSON reply per line:

    {"op": "upload", "name": "<label>", "script": "<text>"}  -> {"ok": true}
    {"op": "exec", "command": "<shell command>"}             -> {"ok": true, "exit": N, "output": "..."}
    {"op": "ping"}                                           -> {"ok": true}

Uploaded scripts are written into a spool directory (default: in-memory
only); executing them against the kernel is deliberately left to the
operator, so the agent is safe to run anywhere.
"""

from __future__ import annotations

import argparse
import json
import socket
import socketserver
import subprocess
import threading
from pathlib import Path
from typing import Optional

from .errors import CommandFailed

EXEC_TIMEOUT_S = 60


class AgentState:
    def __init__(self, spool_dir: Optional[Path] = None):
        self.spool_dir = spool_dir
        self.scripts: dict[str, str] = {}
        self.lock = threading.Lock()

    def store(self, name: str, script: str) -> None:
        with self.lock:
            self.scripts[name] = script
            if self.spool_dir is not None:
                self.spool_dir.mkdir(parents=True, exist_ok=True)
                (self.spool_dir / f"{name}.rules").write_text(script, encoding="utf-8")


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            try:
                reply = self._dispatch(json.loads(line))
            except json.JSONDecodeError as exc:
                reply = {"ok": False, "error": f"bad json: {exc}"}
            except Exception as exc:  # keep the agent alive no matter what
                reply = {"ok": False, "error": str(exc)}
            self.wfile.write((json.dumps(reply) + "\n").encode("utf-8"))
            self.wfile.flush()

    def _dispatch(self, req: dict) -> dict:
        state: AgentState = self.server.state  # type: ignore[attr-defined]
        op = req.get("op")
        if op == "ping":
            return {"ok": True}
        if op == "upload":
            name = req.get("name")
            script = req.get("script")
            if not isinstance(name, str) or not isinstance(script, str):
                return {"ok": False, "error": "upload needs string name and script"}
            state.store(name, script)
            return {"ok": True}
        if op == "exec":
            command = req.get("command")
            if not isinstance(command, str):
                return {"ok": False, "error": "exec needs a string command"}
            proc = subprocess.run(
                command, shell=True, capture_output=True, text=True,
                timeout=EXEC_TIMEOUT_S,
            )
            return {
                "ok": True,
                "exit": proc.returncode,
                "output": proc.stdout + proc.stderr,
            }
        return {"ok": False, "error": f"unknown op {op!r}"}


class Agent:
    """In-process agent server; also usable as a context manager in tests."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 spool_dir: Optional[Path] = None):
        self.state = AgentState(spool_dir=spool_dir)
        self._server = socketserver.ThreadingTCPServer((host, port), _Handler,
                                                       bind_and_activate=True)
        self._server.daemon_threads = True
        self._server.state = self.state  # type: ignore[attr-defined]
        self._thread: Optional[threading.Thread] = None

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    def start(self) -> "Agent":
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "Agent":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


class AgentTransport:
    """Controller-side client: maps node names to agent addresses."""

    def __init__(self, addresses: dict[str, tuple[str, int]]):
        self.addresses = dict(addresses)

    def _request(self, node: str, payload: dict) -> dict:
        addr = self.addresses.get(node)
        if addr is None:
            raise CommandFailed(125, f"no agent address configured for {node!r}\n")
        with socket.create_connection(addr, timeout=10) as sock:
            sock.sendall((json.dumps(payload) + "\n").encode("utf-8"))
            with sock.makefile("r", encoding="utf-8") as reader:
                line = reader.readline()
        reply = json.loads(line)
        if not reply.get("ok"):
            raise CommandFailed(125, f"agent error: {reply.get('error')}\n")
        return reply

    def upload_script(self, node: str, script: str) -> None:
        self._request(node, {"op": "upload", "name": node, "script": script})

    def exec(self, node: str, command: str) -> tuple[int, str]:
        reply = self._request(node, {"op": "exec", "command": command})
        return int(reply["exit"]), str(reply["output"])


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="manetlab-agent",
        description="Run the member-node agent (script uploads + remote exec).",
    )
    parser.add_argument("--host", default="0.0.0.0")
    parser.add_argument("--port", type=int, default=7077)
    parser.add_argument("--spool-dir", type=Path, default=None,
                        help="directory to write uploaded filter scripts into")
    args = parser.parse_args(argv)
    agent = Agent(host=args.host, port=args.port, spool_dir=args.spool_dir)
    host, port = agent.address
    print(f"agent listening on {host}:{port}")
    try:
        agent._server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        agent.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
