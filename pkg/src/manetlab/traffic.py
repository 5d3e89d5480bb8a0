"""Constant-rate peer-to-peer flows on the virtual medium.

A flow is a sequence of unicast frames from src to dst at a fixed
inter-packet delay. TCP here means sequenced datagrams, not a stack:
this is a load tool. Stats account every packet by its fate at the
addressed destination (or a drop at the sender).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import InvalidSpec, UnknownFlow
from .medium import (
    DROPPED_ADVERSARY,
    DROPPED_FILTER,
    Medium,
    Proto,
    TransmitHandle,
    US_PER_MS,
)


@dataclass(frozen=True)
class FlowSpec:
    src: str
    dst: str
    protocol: Proto = Proto.UDP
    port: int = 0
    delay_ms: int = 1000
    payload_len: int = 64
    count: Optional[int] = None  # None = unbounded

    def validate(self) -> None:
        if self.src == self.dst:
            raise InvalidSpec("flow endpoints must differ")
        if self.protocol is Proto.ICMP and self.port != 0:
            raise InvalidSpec("ICMP flows use port 0")
        if not 0 <= self.port <= 65535:
            raise InvalidSpec(f"port {self.port} out of range")
        if self.delay_ms < 1:
            raise InvalidSpec("inter-packet delay must be >= 1 ms")
        if self.payload_len < 0:
            raise InvalidSpec("payload length must be >= 0")
        if self.count is not None and self.count < 1:
            raise InvalidSpec("packet count must be >= 1 (or unbounded)")


@dataclass
class FlowStats:
    sent: int = 0
    received: int = 0
    dropped_filter: int = 0
    dropped_adversary: int = 0
    first_send_us: Optional[int] = None
    last_send_us: Optional[int] = None

    @property
    def in_flight(self) -> int:
        return self.sent - self.received - self.dropped_filter - self.dropped_adversary

    def as_dict(self) -> dict:
        return {
            "sent": self.sent,
            "received": self.received,
            "dropped_filter": self.dropped_filter,
            "dropped_adversary": self.dropped_adversary,
            "in_flight": self.in_flight,
            "first_send_us": self.first_send_us,
            "last_send_us": self.last_send_us,
        }


@dataclass
class _Flow:
    flow_id: int
    spec: FlowSpec
    stats: FlowStats = field(default_factory=FlowStats)
    next_eid: Optional[int] = None
    sent_count: int = 0
    completed: bool = False


class FlowManager:
    """Starts, stops and accounts flows; scheduling rides the medium clock."""

    def __init__(self, medium: Medium):
        self.medium = medium
        self._next_id = 1
        self._flows: dict[int, _Flow] = {}

    def start_flow(self, spec: FlowSpec) -> int:
        spec.validate()
        self.medium.registry.get(spec.src)
        self.medium.registry.get(spec.dst)
        flow = _Flow(flow_id=self._next_id, spec=spec)
        self._next_id += 1
        self._flows[flow.flow_id] = flow
        flow.next_eid = self.medium.schedule(self.medium.now,
                                             lambda: self._send(flow))
        return flow.flow_id

    def stop_flow(self, flow_id: int) -> FlowStats:
        """Cancel pending sends and drop the flow from the table."""
        flow = self._flows.pop(flow_id, None)
        if flow is None:
            raise UnknownFlow(f"no flow with id {flow_id}")
        if flow.next_eid is not None:
            self.medium.cancel(flow.next_eid)
            flow.next_eid = None
        return flow.stats

    def stats(self, flow_id: int) -> FlowStats:
        flow = self._flows.get(flow_id)
        if flow is None:
            raise UnknownFlow(f"no flow with id {flow_id}")
        return flow.stats

    def list_flows(self) -> list[dict]:
        return [
            {
                "flow_id": f.flow_id,
                "src": f.spec.src,
                "dst": f.spec.dst,
                "protocol": f.spec.protocol.value,
                "port": f.spec.port,
                "delay_ms": f.spec.delay_ms,
                "count": f.spec.count,
                "completed": f.completed,
                "stats": f.stats.as_dict(),
            }
            for f in self._flows.values()
        ]

    def _send(self, flow: _Flow) -> None:
        spec = flow.spec
        seq = flow.sent_count
        payload = self._payload(flow.flow_id, seq, spec.payload_len)
        dst_rec = self.medium.registry.get(spec.dst)
        flow.stats.sent += 1
        if flow.stats.first_send_us is None:
            flow.stats.first_send_us = self.medium.now
        flow.stats.last_send_us = self.medium.now
        self.medium.transmit(
            spec.src,
            dst_mac=dst_rec.wireless_mac,
            protocol=spec.protocol,
            port=spec.port,
            payload=payload,
            on_complete=lambda handle: self._account(flow, handle),
        )
        flow.sent_count += 1
        if spec.count is not None and flow.sent_count >= spec.count:
            flow.next_eid = None
            flow.completed = True
        else:
            flow.next_eid = self.medium.schedule(
                self.medium.now + spec.delay_ms * US_PER_MS,
                lambda: self._send(flow),
            )

    def _account(self, flow: _Flow, handle: TransmitHandle) -> None:
        if handle.source_dropped:
            flow.stats.dropped_adversary += 1
            return
        outcome = handle.outcomes.get(flow.spec.dst)
        if outcome == DROPPED_FILTER:
            flow.stats.dropped_filter += 1
        elif outcome == DROPPED_ADVERSARY:
            flow.stats.dropped_adversary += 1
        else:
            # an addressed unicast frame that survives filters is received
            flow.stats.received += 1

    @staticmethod
    def _payload(flow_id: int, seq: int, length: int) -> bytes:
        stamp = f"flow-{flow_id}-{seq}:".encode()
        if len(stamp) >= length:
            return stamp[:length]
        return stamp + b"x" * (length - len(stamp))
