import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from manetlab.registry import NodeRecord, Registry
from manetlab.testbed import Testbed


def make_record(i: int, name: str | None = None) -> NodeRecord:
    """Synthesize a distinct, valid node record for index i."""
    return NodeRecord.create(
        name or f"node{i}",
        f"10.0.{i // 250}.{i % 250 + 1}",
        f"aa:00:00:00:{i // 256:02x}:{i % 256:02x}",
        f"192.168.{i // 250}.{i % 250 + 1}",
        f"bb:00:00:00:{i // 256:02x}:{i % 256:02x}",
    )


THREE_NODES = [
    ("sai", "10.0.0.1", "aa:00:00:00:00:01", "192.168.1.1", "bb:00:00:00:00:01"),
    ("pritu", "10.0.0.2", "aa:00:00:00:00:02", "192.168.1.2", "bb:00:00:00:00:02"),
    ("nitin", "10.0.0.3", "aa:00:00:00:00:03", "192.168.1.3", "bb:00:00:00:00:03"),
]


def three_node_registry() -> Registry:
    reg = Registry()
    for fields in THREE_NODES:
        reg.add_node(NodeRecord.create(*fields))
    return reg


@pytest.fixture
def reg3() -> Registry:
    return three_node_registry()


@pytest.fixture
def tb3() -> Testbed:
    return Testbed(three_node_registry())
