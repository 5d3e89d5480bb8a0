"""manetlab: desk-scale MANET emulation testbed.

Generates constrained random logical topologies, compiles them into
per-node MAC-ingress filter rulesets, enforces them on a deterministic
virtual wireless medium (or emits netfilter scripts for real nodes), and
lets an operator replay scenarios, launch attacks, generate traffic and
verify connectivity with ping-style probes.
"""

from .adversary import AttackKind, AttackManager, AttackSpec, InjectionSpec, ProtoFilter
from .errors import TestbedError
from .medium import Frame, Medium, Proto, TransmitHandle
from .probe import ProbeReport, Prober
from .registry import NodeRecord, Registry, load_registry, save_registry
from .rules import FilterRule, RuleAction, Ruleset, compile_topology, emit_script
from .scenario import Scenario, build_scenario, load_scenario, save_scenario
from .testbed import Testbed
from .topogen import GenParams, Status, Topology, classify, generate, sample_matrix, to_dot
from .traffic import FlowManager, FlowSpec, FlowStats

__version__ = "0.1.0"

__all__ = [
    "AttackKind",
    "AttackManager",
    "AttackSpec",
    "FilterRule",
    "FlowManager",
    "FlowSpec",
    "FlowStats",
    "Frame",
    "GenParams",
    "InjectionSpec",
    "Medium",
    "NodeRecord",
    "ProbeReport",
    "Prober",
    "Proto",
    "ProtoFilter",
    "Registry",
    "RuleAction",
    "Ruleset",
    "Scenario",
    "Status",
    "Testbed",
    "TestbedError",
    "Topology",
    "TransmitHandle",
    "build_scenario",
    "classify",
    "compile_topology",
    "emit_script",
    "generate",
    "load_registry",
    "load_scenario",
    "sample_matrix",
    "save_registry",
    "save_scenario",
    "to_dot",
]
