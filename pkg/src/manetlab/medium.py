"""Deterministic discrete-event virtual wireless medium.

Every transmitted frame is heard by every other node one link latency
later; each hearer then decides its fate in a fixed order: adversary
overlays first, then the node's active ruleset, then destination match.
All time is virtual microseconds driven by advance(); nothing here ever
touches the wall clock, which is what keeps runs replayable byte for
byte.

Filter decisions happen at the receive event with whatever ruleset is
active at that moment, mirroring how a real netfilter INPUT chain
behaves on the receiver.
"""

from __future__ import annotations

import enum
import heapq
import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol as TypingProtocol

from .errors import DimensionMismatch, MacSpoof, UnknownNode
from .registry import NodeRecord, Registry, canonical_mac
from .rules import Ruleset

DEFAULT_LINK_LATENCY_US = 1000
BROADCAST_MAC = "ff:ff:ff:ff:ff:ff"

US_PER_MS = 1000
US_PER_S = 1_000_000

ECHO_REQ_PREFIX = b"echo-req:"
ECHO_REP_PREFIX = b"echo-rep:"

# per-hearer frame fates
RECEIVED = "received"
DROPPED_FILTER = "dropped_filter"
DROPPED_ADVERSARY = "dropped_adversary"
IGNORED = "ignored"

COUNTER_CATEGORIES = ("sent", RECEIVED, DROPPED_FILTER, DROPPED_ADVERSARY, IGNORED)


class Proto(enum.Enum):
    TCP = "TCP"
    UDP = "UDP"
    ICMP = "ICMP"
    RAW = "RAW"


@dataclass(frozen=True)
class Frame:
    """One transmission. frame_id is a total-order tiebreaker."""

    src_mac: str
    dst_mac: str
    protocol: Proto
    src_ip: str
    dst_ip: str
    port: int
    payload: bytes
    send_time: int
    frame_id: int


class Overlay(TypingProtocol):
    """Adversary effect attached to a node; consulted before the ruleset."""

    name: str

    def blocks_outgoing(self, frame: Frame) -> bool: ...

    def blocks_incoming(self, frame: Frame) -> bool: ...


@dataclass
class TransmitHandle:
    """Mutable outcome record for one frame.

    Populated when the delivery event runs, i.e. after the clock has been
    advanced past send_time + link latency. delivered_to lists hearers
    that accepted AND were addressed, in index order.
    """

    frame: Frame
    src: str
    delivered_to: list[str] = field(default_factory=list)
    outcomes: dict[str, str] = field(default_factory=dict)
    source_dropped: bool = False
    done: bool = False
    on_complete: Optional[Callable[["TransmitHandle"], None]] = None


class NodeState:
    """Per-node live state: active ruleset, adversary overlays, counters.

    active_ruleset None means no topology has been pushed to the node yet;
    a fresh Linux INPUT chain accepts everything, and so do we.
    """

    def __init__(self, record: NodeRecord):
        self.record = record
        self.active_ruleset: Optional[Ruleset] = None
        self.overlays: list[Overlay] = []
        self.counters: dict[str, dict[str, int]] = {
            cat: {} for cat in COUNTER_CATEGORIES
        }

    def bump(self, category: str, proto: Proto) -> None:
        slot = self.counters[category]
        slot[proto.value] = slot.get(proto.value, 0) + 1


class Medium:
    """The shared virtual medium plus its event loop.

    Mutations (transmit, apply_rulesets, advance, schedule) must be
    serialized by the caller; the control service funnels them through a
    single-writer queue. Trace lines go to `trace` (a list) and to the
    optional sink callback, in event order.
    """

    def __init__(self, registry: Registry, *,
                 link_latency_us: int = DEFAULT_LINK_LATENCY_US,
                 trace_sink: Optional[Callable[[str], None]] = None):
        self.registry = registry
        self.link_latency_us = link_latency_us
        self.trace: list[str] = []
        self._trace_sink = trace_sink
        self._now = 0
        self._heap: list[tuple[int, int, Callable[[], None]]] = []
        self._cancelled: set[int] = set()
        self._event_ids = itertools.count()
        self._frame_ids = itertools.count()
        self._states: dict[str, NodeState] = {}
        self._rx_listeners: dict[int, tuple[str, Callable[[Frame], None]]] = {}
        self._listener_ids = itertools.count()
        self.sync_nodes()

    # --- clock ---

    @property
    def now(self) -> int:
        return self._now

    def schedule(self, at: int, fn: Callable[[], None]) -> int:
        """Queue fn at virtual time `at` (never in the past); returns a cancel id."""
        if at < self._now:
            raise ValueError(f"cannot schedule at {at} before now {self._now}")
        eid = next(self._event_ids)
        heapq.heappush(self._heap, (at, eid, fn))
        return eid

    def cancel(self, eid: int) -> None:
        self._cancelled.add(eid)

    def advance(self, until: int) -> int:
        """Process every pending event with time <= until, in (time, id) order."""
        if until < self._now:
            raise ValueError(f"cannot advance to {until} before now {self._now}")
        processed = 0
        while self._heap and self._heap[0][0] <= until:
            at, eid, fn = heapq.heappop(self._heap)
            if eid in self._cancelled:
                self._cancelled.discard(eid)
                continue
            self._now = at
            fn()
            processed += 1
        self._now = until
        return processed

    def pending_count(self) -> int:
        return sum(1 for _, eid, _ in self._heap if eid not in self._cancelled)

    # --- node state ---

    def sync_nodes(self) -> None:
        """Reconcile per-node state with the registry after add/remove."""
        fresh: dict[str, NodeState] = {}
        for rec in self.registry:
            state = self._states.get(rec.name)
            if state is None or state.record != rec:
                state = NodeState(rec)
            fresh[rec.name] = state
        self._states = fresh

    def node(self, name: str) -> NodeState:
        state = self._states.get(name)
        if state is None:
            raise UnknownNode(f"no node named {name!r}")
        return state

    def states(self) -> list[NodeState]:
        return [self._states[rec.name] for rec in self.registry]

    def add_rx_listener(self, name: str, fn: Callable[[Frame], None]) -> int:
        self.node(name)  # validate
        token = next(self._listener_ids)
        self._rx_listeners[token] = (name, fn)
        return token

    def remove_rx_listener(self, token: int) -> None:
        self._rx_listeners.pop(token, None)

    # --- trace ---

    def emit(self, kind: str, text: str) -> None:
        line = f"{self._now} {kind} {text}"
        self.trace.append(line)
        if self._trace_sink is not None:
            self._trace_sink(line)

    # --- operations ---

    def apply_rulesets(self, rulesets: list[Ruleset], label: str = "manual") -> int:
        """Atomically replace every node's active ruleset at the current instant.

        Frames in flight are unaffected until their receive event, which
        evaluates whatever ruleset is active then.
        """
        if len(rulesets) != len(self.registry):
            raise DimensionMismatch(
                f"{len(rulesets)} rulesets for {len(self.registry)} nodes"
            )
        by_owner = {rs.owner: rs for rs in rulesets}
        if set(by_owner) != set(self.registry.names):
            raise DimensionMismatch("ruleset owners do not match registry")
        for name, state in self._states.items():
            state.active_ruleset = by_owner[name]
        self.emit("APPLY", f"{label} n={len(rulesets)}")
        return self._now

    def transmit(self, src: str, *, dst_mac: str, protocol: Proto,
                 port: int = 0, payload: bytes = b"",
                 src_mac: Optional[str] = None,
                 src_ip: Optional[str] = None, dst_ip: Optional[str] = None,
                 on_complete: Optional[Callable[[TransmitHandle], None]] = None,
                 ) -> TransmitHandle:
        """Put one frame on the air from a registered node.

        The frame is stamped with the current time and a fresh frame_id,
        then scheduled for delivery to all other nodes one link latency
        later. An outgoing adversary block kills it at the send instant
        instead. Supplying src_mac different from the node's wireless MAC
        is spoofing and rejected.
        """
        rec = self.registry.get(src)
        state = self.node(src)
        if src_mac is not None and canonical_mac(src_mac) != rec.wireless_mac:
            raise MacSpoof(
                f"{src} cannot send as {src_mac}; its wireless MAC is {rec.wireless_mac}"
            )
        dst_mac = canonical_mac(dst_mac)
        if dst_ip is None:
            if dst_mac == BROADCAST_MAC:
                dst_ip = "255.255.255.255"
            else:
                target = self.registry.by_wireless_mac(dst_mac)
                dst_ip = target.wireless_ip if target else "0.0.0.0"
        frame = Frame(
            src_mac=rec.wireless_mac,
            dst_mac=dst_mac,
            protocol=protocol,
            src_ip=src_ip or rec.wireless_ip,
            dst_ip=dst_ip,
            port=port,
            payload=payload,
            send_time=self._now,
            frame_id=next(self._frame_ids),
        )
        handle = TransmitHandle(frame=frame, src=src, on_complete=on_complete)
        state.bump("sent", protocol)
        self.emit(
            "TX",
            f"id={frame.frame_id} src={src} proto={protocol.value} "
            f"dst={dst_mac} port={port} bytes={len(payload)}",
        )
        blocker = next((ov for ov in state.overlays if ov.blocks_outgoing(frame)), None)
        if blocker is not None:
            state.bump(DROPPED_ADVERSARY, protocol)
            self.emit(
                "DROP_ADVERSARY",
                f"id={frame.frame_id} node={src} attack={blocker.name} side=out",
            )
            handle.source_dropped = True
            self._finish(handle)
        else:
            self.schedule(self._now + self.link_latency_us,
                          lambda: self._deliver(handle))
        return handle

    # --- delivery ---

    def _deliver(self, handle: TransmitHandle) -> None:
        frame = handle.frame
        for state in self.states():
            name = state.record.name
            if name == handle.src:
                continue
            outcome, attack = self._judge(state, frame)
            handle.outcomes[name] = outcome
            state.bump(outcome, frame.protocol)
            if outcome == RECEIVED:
                handle.delivered_to.append(name)
                self.emit("RX", f"id={frame.frame_id} node={name} src={handle.src}")
                self._on_received(state, frame)
            elif outcome == DROPPED_FILTER:
                self.emit("DROP_FILTER", f"id={frame.frame_id} node={name} src={handle.src}")
            elif outcome == DROPPED_ADVERSARY:
                self.emit(
                    "DROP_ADVERSARY",
                    f"id={frame.frame_id} node={name} attack={attack} side=in",
                )
            else:
                self.emit("IGNORED", f"id={frame.frame_id} node={name}")
        self._finish(handle)

    def _judge(self, state: NodeState, frame: Frame) -> tuple[str, Optional[str]]:
        """Fate of one heard frame at one node: overlays, ruleset, then address."""
        addressed = frame.dst_mac in (state.record.wireless_mac, BROADCAST_MAC)
        if addressed:
            for ov in state.overlays:
                if ov.blocks_incoming(frame):
                    return DROPPED_ADVERSARY, ov.name
        rs = state.active_ruleset
        if rs is not None and not rs.accepts(frame.src_mac):
            return DROPPED_FILTER, None
        if not addressed:
            return IGNORED, None
        return RECEIVED, None

    def _on_received(self, state: NodeState, frame: Frame) -> None:
        if frame.protocol is Proto.ICMP and frame.payload.startswith(ECHO_REQ_PREFIX):
            self._echo_reply(state, frame)
        for name, fn in list(self._rx_listeners.values()):
            if name == state.record.name:
                fn(frame)

    def _echo_reply(self, state: NodeState, request: Frame) -> None:
        """Every node answers echo requests, like a kernel ICMP stack."""
        requester = self.registry.by_wireless_mac(request.src_mac)
        if requester is None:
            return
        reply_payload = ECHO_REP_PREFIX + request.payload[len(ECHO_REQ_PREFIX):]
        self.transmit(
            state.record.name,
            dst_mac=request.src_mac,
            protocol=Proto.ICMP,
            port=0,
            payload=reply_payload,
        )

    def _finish(self, handle: TransmitHandle) -> None:
        handle.done = True
        if handle.on_complete is not None:
            handle.on_complete(handle)
