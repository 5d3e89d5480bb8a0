"""Named, replayable malicious actions: traffic blocking, periodic packet
loss, and raw hex frame injection.

Attack effects live as overlays on the target's node state in the
medium, never inside compiled rulesets, so topology enforcement and
adversarial state stay independent and can be toggled separately.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .errors import (
    BadHex,
    DuplicateAttack,
    FrameTooShort,
    ParseError,
    UnknownAttack,
    UnknownNode,
)
from .medium import Frame, Medium, Proto, TransmitHandle, US_PER_S
from .registry import validate_name

MIN_INJECT_BYTES = 14  # dst MAC + src MAC + ethertype


class AttackKind(enum.Enum):
    BLOCK_INCOMING = "block_incoming"
    BLOCK_OUTGOING = "block_outgoing"
    BLOCK_BOTH = "block_both"
    PERIODIC_LOSS = "periodic_loss"


class ProtoFilter(enum.Enum):
    """Which frames an attack touches; ALL also covers RAW injections."""

    TCP = "TCP"
    UDP = "UDP"
    ICMP = "ICMP"
    ALL = "ALL"

    def matches(self, proto: Proto) -> bool:
        return self is ProtoFilter.ALL or self.value == proto.value


@dataclass(frozen=True)
class AttackSpec:
    """One saved/launched attack.

    Periodic-loss defaults reproduce the reference schedule: 5 s of loss,
    35 s of normal operation, ten cycles, 400 s total.
    """

    name: str
    target: str
    protocol: ProtoFilter = ProtoFilter.ALL
    kind: AttackKind = AttackKind.BLOCK_BOTH
    loss_dur_s: int = 5
    normal_dur_s: int = 35
    cycles: int = 10

    @property
    def period_us(self) -> int:
        return (self.loss_dur_s + self.normal_dur_s) * US_PER_S

    @property
    def total_us(self) -> int:
        return self.cycles * self.period_us


@dataclass(frozen=True)
class InjectionSpec:
    """Raw frame bytes in hex, attributed to a registered node.

    The first 6 decoded bytes are used as the destination MAC; any forged
    source MAC inside the bytes rides along verbatim, but the medium
    attributes the frame to as_node so filters stay meaningful.
    """

    hex: str
    as_node: str

    def decode(self) -> bytes:
        try:
            data = bytes.fromhex(self.hex)
        except ValueError as exc:
            raise BadHex(f"not an even-length hex string: {exc}") from exc
        if len(data) < MIN_INJECT_BYTES:
            raise FrameTooShort(
                f"{len(data)} bytes; a frame needs at least {MIN_INJECT_BYTES}"
            )
        return data


class _AttackOverlay:
    """Overlay installed on the target node; the medium consults it per frame.

    Periodic loss is evaluated against the frame's send time relative to
    launch, so a packet's fate is a pure function of when it was sent.
    """

    def __init__(self, spec: AttackSpec, launched_at: int):
        self.spec = spec
        self.name = spec.name
        self.launched_at = launched_at

    def _in_loss_window(self, frame: Frame) -> bool:
        rel = frame.send_time - self.launched_at
        if rel < 0 or rel >= self.spec.total_us:
            return False
        return rel % self.spec.period_us < self.spec.loss_dur_s * US_PER_S

    def blocks_outgoing(self, frame: Frame) -> bool:
        if not self.spec.protocol.matches(frame.protocol):
            return False
        if self.spec.kind in (AttackKind.BLOCK_OUTGOING, AttackKind.BLOCK_BOTH):
            return True
        if self.spec.kind is AttackKind.PERIODIC_LOSS:
            return self._in_loss_window(frame)
        return False

    def blocks_incoming(self, frame: Frame) -> bool:
        if not self.spec.protocol.matches(frame.protocol):
            return False
        if self.spec.kind in (AttackKind.BLOCK_INCOMING, AttackKind.BLOCK_BOTH):
            return True
        if self.spec.kind is AttackKind.PERIODIC_LOSS:
            return self._in_loss_window(frame)
        return False


@dataclass
class ActiveAttack:
    attack_id: int
    spec: AttackSpec
    overlay: _AttackOverlay
    launched_at: int
    expire_eid: Optional[int] = None


class AttackManager:
    """Launch/stop/inject plus the saved attack list ("repeat it any time")."""

    def __init__(self, medium: Medium):
        self.medium = medium
        self._next_id = 1
        self._active: dict[int, ActiveAttack] = {}
        self._saved: dict[str, AttackSpec] = {}

    # --- live attacks ---

    @property
    def active(self) -> list[ActiveAttack]:
        return list(self._active.values())

    def active_by_name(self, name: str) -> Optional[ActiveAttack]:
        for att in self._active.values():
            if att.spec.name == name:
                return att
        return None

    def launch(self, spec: AttackSpec) -> int:
        """Install the attack overlay on the target; returns the attack id."""
        validate_name(spec.name)
        state = self.medium.node(spec.target)  # raises UnknownNode
        if self.active_by_name(spec.name) is not None:
            raise DuplicateAttack(f"attack {spec.name!r} is already active")
        overlay = _AttackOverlay(spec, launched_at=self.medium.now)
        attack_id = self._next_id
        self._next_id += 1
        active = ActiveAttack(
            attack_id=attack_id,
            spec=spec,
            overlay=overlay,
            launched_at=self.medium.now,
        )
        state.overlays.append(overlay)
        if spec.kind is AttackKind.PERIODIC_LOSS:
            active.expire_eid = self.medium.schedule(
                self.medium.now + spec.total_us,
                lambda: self._expire(attack_id),
            )
        self._active[attack_id] = active
        self.medium.emit(
            "ATTACK_ON",
            f"name={spec.name} target={spec.target} kind={spec.kind.value} "
            f"proto={spec.protocol.value}",
        )
        return attack_id

    def stop(self, attack_id: int) -> int:
        """Remove the overlay; returns the virtual stop time."""
        active = self._active.pop(attack_id, None)
        if active is None:
            raise UnknownAttack(f"no active attack with id {attack_id}")
        if active.expire_eid is not None:
            self.medium.cancel(active.expire_eid)
        self._remove_overlay(active)
        self.medium.emit("ATTACK_OFF", f"name={active.spec.name} reason=stopped")
        return self.medium.now

    def _expire(self, attack_id: int) -> None:
        active = self._active.pop(attack_id, None)
        if active is None:
            return
        self._remove_overlay(active)
        self.medium.emit("ATTACK_OFF", f"name={active.spec.name} reason=expired")

    def _remove_overlay(self, active: ActiveAttack) -> None:
        try:
            state = self.medium.node(active.spec.target)
        except UnknownNode:
            return  # target was deregistered; nothing left to clean
        if active.overlay in state.overlays:
            state.overlays.remove(active.overlay)

    # --- injection ---

    def inject(self, spec: InjectionSpec) -> TransmitHandle:
        """Put raw bytes on the air as a RAW frame from as_node.

        Destination MAC comes from the first six bytes; the whole blob is
        carried as payload. Subject to outgoing blocks on as_node and to
        every receiver's filters, like any other frame.
        """
        data = spec.decode()
        self.medium.registry.get(spec.as_node)  # raises UnknownNode
        dst_mac = ":".join(f"{b:02x}" for b in data[:6])
        return self.medium.transmit(
            spec.as_node,
            dst_mac=dst_mac,
            protocol=Proto.RAW,
            port=0,
            payload=data,
        )

    # --- saved attack list ---

    def save_attack(self, spec: AttackSpec) -> None:
        """Add (or update) a named entry in the saved list."""
        validate_name(spec.name)
        self._saved[spec.name] = spec

    def list_attacks(self) -> list[str]:
        return list(self._saved)

    def saved(self, name: str) -> AttackSpec:
        spec = self._saved.get(name)
        if spec is None:
            raise UnknownAttack(f"no saved attack named {name!r}")
        return spec

    def replay(self, name: str) -> int:
        return self.launch(self.saved(name))


def save_attack_list(specs: list[AttackSpec]) -> str:
    """One attack per line: name target protocol kind [loss normal cycles]."""
    lines = []
    for s in specs:
        line = f"{s.name} {s.target} {s.protocol.value} {s.kind.value}"
        if s.kind is AttackKind.PERIODIC_LOSS:
            line += f" {s.loss_dur_s} {s.normal_dur_s} {s.cycles}"
        lines.append(line)
    return "".join(line + "\n" for line in lines)


def load_attack_list(text: str) -> list[AttackSpec]:
    specs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) not in (4, 7):
            raise ParseError(lineno, f"expected 4 or 7 fields, found {len(fields)}")
        try:
            kind = AttackKind(fields[3])
            protocol = ProtoFilter(fields[2])
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from exc
        if kind is AttackKind.PERIODIC_LOSS:
            if len(fields) != 7:
                raise ParseError(lineno, "periodic_loss needs loss, normal and cycles")
            try:
                loss, normal, cycles = (int(f) for f in fields[4:7])
            except ValueError as exc:
                raise ParseError(lineno, str(exc)) from exc
        elif len(fields) != 4:
            raise ParseError(lineno, f"{kind.value} takes no schedule fields")
        else:
            loss, normal, cycles = 5, 35, 10
        specs.append(
            AttackSpec(
                name=fields[0],
                target=fields[1],
                protocol=protocol,
                kind=kind,
                loss_dur_s=loss,
                normal_dur_s=normal,
                cycles=cycles,
            )
        )
    return specs
