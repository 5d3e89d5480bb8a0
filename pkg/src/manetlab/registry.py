"""Node registry: the set of MANET members the testbed controls.

Each node carries a wired identity (control plane) and a wireless
identity (emulated data plane). A node's position in the registry is its
row/column index in every adjacency matrix, so ordering is load-bearing.
"""

from __future__ import annotations

import ipaddress
import logging
import re
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

from .errors import (
    DuplicateAddress,
    DuplicateName,
    InvalidFormat,
    ParseError,
    UnknownNode,
)

logger = logging.getLogger(__name__)

NAME_RE = re.compile(r"^[A-Za-z0-9_-]{1,32}$")
MAC_RE = re.compile(r"^([0-9A-Fa-f]{2}:){5}[0-9A-Fa-f]{2}$")

# More nodes than this still work; the registry just warns (the tool was
# sized for 150 but has no hard ceiling).
SOFT_LIMIT = 150


def validate_name(name: str) -> str:
    if not NAME_RE.match(name):
        raise InvalidFormat(f"bad node name {name!r} (want [A-Za-z0-9_-]{{1,32}})")
    return name


def canonical_mac(mac: str) -> str:
    """Validate a colon-separated MAC and return it lower-cased."""
    if not MAC_RE.match(mac):
        raise InvalidFormat(f"bad MAC address {mac!r}")
    return mac.lower()


def canonical_ip(ip: str) -> str:
    """Validate a dotted-quad IPv4 address (no leading zeros)."""
    try:
        return str(ipaddress.IPv4Address(ip))
    except (ipaddress.AddressValueError, ValueError) as exc:
        raise InvalidFormat(f"bad IPv4 address {ip!r}: {exc}") from exc


@dataclass(frozen=True)
class NodeRecord:
    """A testbed member. Immutable once created; addresses canonical."""

    name: str
    wired_ip: str
    wired_mac: str
    wireless_ip: str
    wireless_mac: str

    @classmethod
    def create(cls, name: str, wired_ip: str, wired_mac: str,
               wireless_ip: str, wireless_mac: str) -> "NodeRecord":
        """Build a record, validating and canonicalizing every field."""
        rec = cls(
            name=validate_name(name),
            wired_ip=canonical_ip(wired_ip),
            wired_mac=canonical_mac(wired_mac),
            wireless_ip=canonical_ip(wireless_ip),
            wireless_mac=canonical_mac(wireless_mac),
        )
        if rec.wired_mac == rec.wireless_mac:
            raise DuplicateAddress(
                f"node {name!r}: wired and wireless MAC must differ"
            )
        return rec


class Registry:
    """Ordered collection of nodes with registry-wide uniqueness checks.

    Mutations must be funneled through a single writer (the control
    service does this); reads are safe from any thread. `warn` receives
    soft-limit messages; it defaults to the module logger.
    """

    def __init__(self, warn: Optional[Callable[[str], None]] = None):
        self._nodes: list[NodeRecord] = []
        self._warn = warn if warn is not None else logger.warning
        self.generation = 0  # bumped on every mutation

    def set_warn(self, warn: Callable[[str], None]) -> None:
        """Redirect soft-limit warnings, e.g. into the testbed event stream."""
        self._warn = warn

    def __len__(self) -> int:
        return len(self._nodes)

    def __iter__(self) -> Iterator[NodeRecord]:
        return iter(self._nodes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Registry):
            return NotImplemented
        return self._nodes == other._nodes

    @property
    def nodes(self) -> tuple[NodeRecord, ...]:
        return tuple(self._nodes)

    @property
    def names(self) -> list[str]:
        return [n.name for n in self._nodes]

    def get(self, name: str) -> NodeRecord:
        for rec in self._nodes:
            if rec.name == name:
                return rec
        raise UnknownNode(f"no node named {name!r}")

    def index_of(self, name: str) -> int:
        for i, rec in enumerate(self._nodes):
            if rec.name == name:
                return i
        raise UnknownNode(f"no node named {name!r}")

    def by_wireless_mac(self, mac: str) -> Optional[NodeRecord]:
        for rec in self._nodes:
            if rec.wireless_mac == mac:
                return rec
        return None

    def add_node(self, record: NodeRecord) -> int:
        """Append a node; returns its index (= previous count)."""
        self._check_unique(record)
        self._nodes.append(record)
        self.generation += 1
        if len(self._nodes) > SOFT_LIMIT:
            self._warn(
                f"soft limit {SOFT_LIMIT} exceeded: registry now holds "
                f"{len(self._nodes)} nodes"
            )
        return len(self._nodes) - 1

    def remove_node(self, name: str) -> int:
        """Remove a node by name; later indices shift down. Returns new count."""
        idx = self.index_of(name)
        del self._nodes[idx]
        self.generation += 1
        return len(self._nodes)

    def _check_unique(self, record: NodeRecord) -> None:
        macs = {record.wired_mac, record.wireless_mac}
        ips = {record.wired_ip, record.wireless_ip}
        if len(ips) != 2:
            raise DuplicateAddress(
                f"node {record.name!r}: wired and wireless IP must differ"
            )
        for existing in self._nodes:
            if existing.name == record.name:
                raise DuplicateName(f"node name {record.name!r} already registered")
            if macs & {existing.wired_mac, existing.wireless_mac}:
                raise DuplicateAddress(
                    f"node {record.name!r}: MAC already used by {existing.name!r}"
                )
            if ips & {existing.wired_ip, existing.wireless_ip}:
                raise DuplicateAddress(
                    f"node {record.name!r}: IP already used by {existing.name!r}"
                )


def load_registry(text: str, warn: Optional[Callable[[str], None]] = None) -> Registry:
    """Parse the line-oriented registry format.

    One node per line: `name wired_ip wired_mac wireless_ip wireless_mac`.
    `#` comments and blank lines are ignored.
    """
    reg = Registry(warn=warn)
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split()
        if len(fields) != 5:
            raise ParseError(lineno, f"expected 5 fields, found {len(fields)}")
        try:
            rec = NodeRecord.create(*fields)
            reg.add_node(rec)
        except (InvalidFormat, DuplicateName, DuplicateAddress) as exc:
            raise ParseError(lineno, str(exc)) from exc
    return reg


def save_registry(reg: Registry) -> str:
    """Serialize in canonical form: registry order, single spaces, trailing LF."""
    lines = [
        f"{n.name} {n.wired_ip} {n.wired_mac} {n.wireless_ip} {n.wireless_mac}"
        for n in reg
    ]
    return "".join(line + "\n" for line in lines)
