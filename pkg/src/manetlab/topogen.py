"""Random logical topology generation under density/degree/connectivity constraints.

Topologies are symmetric 0/1 adjacency matrices. A candidate is sampled
edge-by-edge (Bernoulli per unordered pair), then classified: status 99
means over-connected (some node exceeds the degree cap) or disconnected,
status 100 means suitable. Generation is rejection sampling: repair would
distort the edge distribution.

Determinism: sampling uses Python's random.Random (Mersenne Twister)
seeded with a 64-bit integer, consuming exactly one randrange(100) draw
per unordered pair in row-major order. Same seed, same matrices.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .errors import GenerationExhausted, Infeasible, MalformedMatrix

Matrix = tuple[tuple[int, ...], ...]


class Status(enum.Enum):
    """Classification codes: 99 rejected, 100 accepted."""

    REJECTED = 99
    ACCEPTED = 100


@dataclass(frozen=True)
class GenParams:
    """Knobs for one generation run.

    density_pct is the integer percent chance of an edge per node pair;
    max_degree caps how many neighbors any node may have.
    """

    n: int
    density_pct: int
    max_degree: int
    rng_seed: int
    max_attempts: int = 10000

    def validate(self) -> None:
        """Raise Infeasible unless a connected, degree-capped graph can exist."""
        if self.n < 1:
            raise Infeasible(f"node count must be >= 1, got {self.n}")
        if not 0 <= self.density_pct <= 100:
            raise Infeasible(f"density must be 0..100, got {self.density_pct}")
        if self.max_degree < 0:
            raise Infeasible(f"max degree must be >= 0, got {self.max_degree}")
        if not 0 <= self.rng_seed < 2**64:
            raise Infeasible(f"seed must be an unsigned 64-bit value, got {self.rng_seed}")
        if self.max_attempts < 1:
            raise Infeasible(f"max attempts must be >= 1, got {self.max_attempts}")
        if self.n >= 2 and self.max_degree < 1:
            raise Infeasible("two or more nodes need max degree >= 1")
        # a connected graph needs n-1 edges, i.e. total degree 2(n-1)
        if self.n > 2 and self.n * self.max_degree < 2 * (self.n - 1):
            raise Infeasible(
                f"degree cap {self.max_degree} cannot span {self.n} nodes "
                f"({self.n}*{self.max_degree} < {2 * (self.n - 1)})"
            )


@dataclass(frozen=True)
class Topology:
    """Adjacency matrix plus its classification; seq indexes it in a scenario."""

    adjacency: Matrix
    status: Optional[Status] = None
    seq: int = 0

    @property
    def n(self) -> int:
        return len(self.adjacency)

    def degree(self, i: int) -> int:
        return sum(self.adjacency[i])

    def neighbors(self, i: int) -> list[int]:
        return [j for j, v in enumerate(self.adjacency[i]) if v]

    def edges(self) -> list[tuple[int, int]]:
        """Unordered adjacent pairs (i < j) in row-major order."""
        n = self.n
        return [
            (i, j)
            for i in range(n)
            for j in range(i + 1, n)
            if self.adjacency[i][j]
        ]


def matrix_from_edges(n: int, edges: Sequence[tuple[int, int]]) -> Matrix:
    """Convenience builder for tests and manual topologies."""
    rows = [[0] * n for _ in range(n)]
    for i, j in edges:
        rows[i][j] = rows[j][i] = 1
    return tuple(tuple(r) for r in rows)


def check_matrix(adjacency: Matrix) -> None:
    """Raise MalformedMatrix on asymmetry, nonzero diagonal, or non-Boolean entry."""
    n = len(adjacency)
    for i, row in enumerate(adjacency):
        if len(row) != n:
            raise MalformedMatrix(f"row {i} has length {len(row)}, want {n}")
        for j, v in enumerate(row):
            if v not in (0, 1):
                raise MalformedMatrix(f"entry [{i}][{j}] = {v!r} is not 0/1")
            if adjacency[j][i] != v:
                raise MalformedMatrix(f"matrix asymmetric at [{i}][{j}]")
        if adjacency[i][i] != 0:
            raise MalformedMatrix(f"nonzero diagonal at [{i}][{i}]")


def _bfs_connected(adjacency: Matrix) -> bool:
    """Breadth-first inclusion from node 0; 1-node graphs are connected."""
    n = len(adjacency)
    if n <= 1:
        return True
    seen = [False] * n
    seen[0] = True
    frontier = [0]
    reached = 1
    while frontier:
        nxt = []
        for i in frontier:
            for j, v in enumerate(adjacency[i]):
                if v and not seen[j]:
                    seen[j] = True
                    reached += 1
                    nxt.append(j)
        frontier = nxt
    return reached == n


def sample_matrix(params: GenParams, rng: random.Random) -> Topology:
    """Draw one candidate matrix; status left unset.

    Each unordered pair (x, y), x < y, becomes an edge with probability
    density_pct/100, one draw per pair in row-major order.
    """
    n = params.n
    rows = [[0] * n for _ in range(n)]
    for x in range(n):
        for y in range(x + 1, n):
            if rng.randrange(100) < params.density_pct:
                rows[x][y] = rows[y][x] = 1
    return Topology(adjacency=tuple(tuple(r) for r in rows))


def classify_detail(t: Topology, max_degree: int) -> tuple[Status, Optional[str]]:
    """Classify and report the rejection sub-reason (diagnostics only).

    Degree is checked before connectivity, so a matrix failing both counts
    as "over_connected".
    """
    check_matrix(t.adjacency)
    if any(sum(row) > max_degree for row in t.adjacency):
        return Status.REJECTED, "over_connected"
    if not _bfs_connected(t.adjacency):
        return Status.REJECTED, "disconnected"
    return Status.ACCEPTED, None


def classify(t: Topology, max_degree: int) -> Status:
    return classify_detail(t, max_degree)[0]


def generate(params: GenParams) -> Topology:
    """Sample-and-classify until a topology is accepted.

    Deterministic given rng_seed: same seed means the same matrix after
    the same number of attempts. Raises GenerationExhausted with rejection
    statistics when max_attempts candidates all fail.
    """
    params.validate()
    rng = random.Random(params.rng_seed)
    over_connected = 0
    disconnected = 0
    for _ in range(params.max_attempts):
        t = sample_matrix(params, rng)
        status, reason = classify_detail(t, params.max_degree)
        if status is Status.ACCEPTED:
            return replace(t, status=Status.ACCEPTED)
        if reason == "over_connected":
            over_connected += 1
        else:
            disconnected += 1
    raise GenerationExhausted(params.max_attempts, over_connected, disconnected)


def to_dot(t: Topology, names: Sequence[str]) -> str:
    """Canonical DOT export.

    First line `graph topo_<seq> {`, then two-space-indented statements:
    one `"a" -- "b";` per unordered adjacent pair in row-major order,
    then `"name";` for each isolated node in index order, then `}`.
    """
    check_matrix(t.adjacency)
    if len(names) != t.n:
        raise MalformedMatrix(
            f"{len(names)} names for a {t.n}-node matrix"
        )
    lines = [f"graph topo_{t.seq} {{"]
    for i, j in t.edges():
        lines.append(f'  "{names[i]}" -- "{names[j]}";')
    for i in range(t.n):
        if t.degree(i) == 0:
            lines.append(f'  "{names[i]}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
