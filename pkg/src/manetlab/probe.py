"""Quick network testing: ping-style connectivity checks.

Probes exercise direct links only; the medium does no multi-hop
forwarding, so a probe between non-neighbors reports total loss.
An echo counts as received only when the reply makes it back within the
timeout: a one-way-blocked link fails the probe even though requests
arrive, exactly like real ping.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .medium import ECHO_REP_PREFIX, ECHO_REQ_PREFIX, Medium, Proto, US_PER_MS, US_PER_S

PING_SPACING_US = US_PER_S  # conventional 1 s between echoes


@dataclass
class ProbeReport:
    """Outcome of one ping run; loss percent uses integer arithmetic so
    0 and 100 are exact at the extremes."""

    src: str
    dst: str
    transmitted: int
    received: int
    outcomes: list[bool] = field(default_factory=list)

    @property
    def loss_pct(self) -> int:
        return (self.transmitted - self.received) * 100 // self.transmitted

    @property
    def stats_line(self) -> str:
        return (
            f"{self.transmitted} packets transmitted, "
            f"{self.received} received, {self.loss_pct}% packet loss"
        )

    @property
    def text(self) -> str:
        """Human-readable report; the last line is exactly the stats line."""
        lines = [f"PING {self.dst} from {self.src}: {self.transmitted} packets"]
        for k, ok in enumerate(self.outcomes):
            lines.append(f"seq={k} {'reply received' if ok else 'timeout'}")
        lines.append(self.stats_line)
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        return {
            "src": self.src,
            "dst": self.dst,
            "transmitted": self.transmitted,
            "received": self.received,
            "loss_pct": self.loss_pct,
            "outcomes": self.outcomes,
            "stats_line": self.stats_line,
            "text": self.text,
        }


class Prober:
    """Runs echo probes on the medium, driving the virtual clock to completion."""

    def __init__(self, medium: Medium):
        self.medium = medium
        self._probe_ids = itertools.count(1)

    def ping(self, src: str, dst: str, count: int = 3,
             timeout_ms: int = 1000) -> ProbeReport:
        """Send `count` echo requests at 1 s spacing and wait out the last timeout.

        Advances the virtual clock; any other scheduled activity (flows,
        replays, attacks) runs normally in the meantime.
        """
        if count < 1:
            raise ValueError("probe count must be >= 1")
        self.medium.registry.get(src)
        dst_rec = self.medium.registry.get(dst)
        probe_id = next(self._probe_ids)
        timeout_us = timeout_ms * US_PER_MS
        start = self.medium.now
        send_times: dict[int, int] = {}
        reply_times: dict[int, int] = {}

        def on_rx(frame):
            if not frame.payload.startswith(ECHO_REP_PREFIX):
                return
            try:
                pid, seq = _parse_echo(frame.payload, ECHO_REP_PREFIX)
            except ValueError:
                return
            if pid == probe_id and seq not in reply_times:
                reply_times[seq] = self.medium.now

        token = self.medium.add_rx_listener(src, on_rx)
        try:
            for k in range(count):
                at = start + k * PING_SPACING_US

                def send(k=k, at=at):
                    send_times[k] = at
                    self.medium.transmit(
                        src,
                        dst_mac=dst_rec.wireless_mac,
                        protocol=Proto.ICMP,
                        port=0,
                        payload=ECHO_REQ_PREFIX + f"{probe_id}:{k}".encode(),
                    )

                self.medium.schedule(at, send)
            deadline = start + (count - 1) * PING_SPACING_US + timeout_us
            self.medium.advance(deadline)
        finally:
            self.medium.remove_rx_listener(token)

        outcomes = [
            k in reply_times and reply_times[k] <= send_times[k] + timeout_us
            for k in range(count)
        ]
        return ProbeReport(
            src=src,
            dst=dst,
            transmitted=count,
            received=sum(outcomes),
            outcomes=outcomes,
        )


def _parse_echo(payload: bytes, prefix: bytes) -> tuple[int, int]:
    body = payload[len(prefix):].decode("ascii", errors="strict")
    pid_s, seq_s = body.split(":", 1)
    return int(pid_s), int(seq_s)
