"""Compile accepted topologies into per-node MAC-ingress filter rulesets.

Every node keeps a short ordered ruleset: accept frames whose source MAC
belongs to a neighbor, drop everything else arriving on the wireless
interface. The wired (control) interface is always accepted so the
testbed can never cut itself off. Rulesets serialize to netfilter-style
scripts; that exact text is the contract with the remote backend.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import DimensionMismatch, InvalidFormat, ParseError, RejectedTopology
from .registry import Registry, canonical_mac
from .topogen import Status, Topology, check_matrix

WIRED_IFNAME = "eth0"
DEFAULT_WIRELESS_IFNAME = "ath0"


class RuleAction(enum.Enum):
    ACCEPT_SOURCE_MAC = "accept_source_mac"
    DROP_ALL_WIRELESS = "drop_all_wireless"


@dataclass(frozen=True)
class FilterRule:
    action: RuleAction
    mac: Optional[str] = None  # present iff ACCEPT_SOURCE_MAC

    def __post_init__(self):
        has_mac = self.mac is not None
        if (self.action is RuleAction.ACCEPT_SOURCE_MAC) != has_mac:
            raise InvalidFormat("mac present iff action is accept_source_mac")


@dataclass(frozen=True)
class Ruleset:
    """Ordered rules for one node: accepts first, one terminal drop."""

    owner: str
    rules: tuple[FilterRule, ...]
    topology_seq: int = 0

    def accepted_macs(self) -> list[str]:
        return [r.mac for r in self.rules if r.action is RuleAction.ACCEPT_SOURCE_MAC]

    def accepts(self, src_mac: str) -> bool:
        """First-match evaluation of a wireless ingress frame by source MAC."""
        for rule in self.rules:
            if rule.action is RuleAction.ACCEPT_SOURCE_MAC:
                if rule.mac == src_mac:
                    return True
            else:
                return False
        return False  # terminal drop is structurally guaranteed


def drop_only_ruleset(owner: str, topology_seq: int = 0) -> Ruleset:
    """Ruleset for a node outside the active topology: wireless fully closed."""
    return Ruleset(
        owner=owner,
        rules=(FilterRule(RuleAction.DROP_ALL_WIRELESS),),
        topology_seq=topology_seq,
    )


def compile_topology(t: Topology, reg: Registry, force: bool = False) -> list[Ruleset]:
    """One Ruleset per registered node, index order.

    Node i accepts the wireless MACs of its neighbors in ascending index
    order, then drops all other wireless ingress. Rejected (status 99)
    topologies compile only with force=True; that is the manual-handling
    escape hatch for operator-chosen disconnected layouts.
    """
    check_matrix(t.adjacency)
    if t.n != len(reg):
        raise DimensionMismatch(
            f"{t.n}x{t.n} matrix against a {len(reg)}-node registry"
        )
    if t.status is not Status.ACCEPTED and not force:
        raise RejectedTopology(
            f"topology seq {t.seq} has status "
            f"{t.status.value if t.status else 'unset'}; pass force to apply anyway"
        )
    nodes = reg.nodes
    rulesets = []
    for i, rec in enumerate(nodes):
        accepts = tuple(
            FilterRule(RuleAction.ACCEPT_SOURCE_MAC, nodes[j].wireless_mac)
            for j in range(t.n)
            if t.adjacency[i][j]
        )
        rulesets.append(
            Ruleset(
                owner=rec.name,
                rules=accepts + (FilterRule(RuleAction.DROP_ALL_WIRELESS),),
                topology_seq=t.seq,
            )
        )
    return rulesets


def emit_script(rs: Ruleset, wireless_ifname: str = DEFAULT_WIRELESS_IFNAME) -> str:
    """Serialize a ruleset as an idempotent netfilter command script.

    Byte-exact golden-file contract: flush, wired accept, one accept line
    per neighbor MAC in rule order, terminal wireless drop.
    """
    lines = [
        "iptables -F INPUT",
        f"iptables -A INPUT -i {WIRED_IFNAME} -j ACCEPT",
    ]
    for rule in rs.rules:
        if rule.action is RuleAction.ACCEPT_SOURCE_MAC:
            lines.append(
                f"iptables -A INPUT -i {wireless_ifname} "
                f"-m mac --mac-source {rule.mac} -j ACCEPT"
            )
        else:
            lines.append(f"iptables -A INPUT -i {wireless_ifname} -j DROP")
    return "".join(line + "\n" for line in lines)


def parse_script(text: str) -> tuple[str, tuple[FilterRule, ...]]:
    """Inverse of emit_script: recover (wireless_ifname, rules).

    Strict: accepts exactly the emitted shape, nothing looser.
    """
    lines = text.splitlines()
    if len(lines) < 3:
        raise ParseError(1, "script too short")
    if lines[0] != "iptables -F INPUT":
        raise ParseError(1, f"expected flush line, got {lines[0]!r}")
    if lines[1] != f"iptables -A INPUT -i {WIRED_IFNAME} -j ACCEPT":
        raise ParseError(2, f"expected wired accept line, got {lines[1]!r}")
    rules: list[FilterRule] = []
    ifname: Optional[str] = None
    for lineno, line in enumerate(lines[2:], start=3):
        fields = line.split()
        if len(fields) == 11 and fields[:4] == ["iptables", "-A", "INPUT", "-i"] \
                and fields[5:8] == ["-m", "mac", "--mac-source"] \
                and fields[9:] == ["-j", "ACCEPT"]:
            rules.append(FilterRule(RuleAction.ACCEPT_SOURCE_MAC, canonical_mac(fields[8])))
            iface = fields[4]
        elif len(fields) == 7 and fields[:4] == ["iptables", "-A", "INPUT", "-i"] \
                and fields[5:] == ["-j", "DROP"]:
            rules.append(FilterRule(RuleAction.DROP_ALL_WIRELESS))
            iface = fields[4]
        else:
            raise ParseError(lineno, f"unrecognized rule line {line!r}")
        if ifname is None:
            ifname = iface
        elif iface != ifname:
            raise ParseError(lineno, f"mixed wireless interfaces {ifname!r}/{iface!r}")
    if not rules or rules[-1].action is not RuleAction.DROP_ALL_WIRELESS:
        raise ParseError(len(lines), "missing terminal drop rule")
    assert ifname is not None
    return ifname, tuple(rules)


def symmetric_check(rulesets: Sequence[Ruleset], reg: Registry) -> list[tuple[str, str]]:
    """Find ordered pairs (i, j) where i accepts j's MAC but j does not accept i's.

    compile_topology output is always symmetric; this guards hand-built
    rulesets against breaking the Boolean-symmetric-link assumption.
    """
    by_owner = {rs.owner: set(rs.accepted_macs()) for rs in rulesets}
    violations = []
    for rs in rulesets:
        me = reg.get(rs.owner)
        for mac in rs.accepted_macs():
            peer = reg.by_wireless_mac(mac)
            if peer is None:
                continue
            if me.wireless_mac not in by_owner.get(peer.name, set()):
                violations.append((rs.owner, peer.name))
    return violations
