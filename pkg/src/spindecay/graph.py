"""Graph model, edge-list I/O, spin parameters and regime classification."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import DegenerateError, GraphParseError, InvalidInputError

# guaranteed regime requires gamma >= Gamma(beta) + THRESHOLD_MARGIN
THRESHOLD_MARGIN = 1e-9


class Spin(IntEnum):
    """Vertex state; the value is the row/column index into [[beta, 1], [1, gamma]]."""

    BLUE = 0
    GREEN = 1

    def flipped(self) -> "Spin":
        return Spin.GREEN if self is Spin.BLUE else Spin.BLUE

    @classmethod
    def parse(cls, text: str) -> "Spin":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise InvalidInputError(f"unknown color {text!r}; expected blue or green") from None


PinSet = Mapping[int, Spin]


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices 0..n-1 with sorted neighbor lists."""

    n: int
    adjacency: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.adjacency) != self.n:
            raise InvalidInputError("adjacency length does not match n")
        for v, nbrs in enumerate(self.adjacency):
            if list(nbrs) != sorted(set(nbrs)):
                raise InvalidInputError(f"neighbors of {v} not sorted or repeated")
            for u in nbrs:
                if u == v:
                    raise InvalidInputError(f"self-loop at {v}")
                if not 0 <= u < self.n or v not in self.adjacency[u]:
                    raise InvalidInputError(f"adjacency not symmetric at ({v}, {u})")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int]]) -> "Graph":
        nbrs: List[set] = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise InvalidInputError(f"self-loop at {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidInputError(f"edge ({u}, {v}) out of range for n={n}")
            if v in nbrs[u]:
                raise InvalidInputError(f"duplicate edge ({u}, {v})")
            nbrs[u].add(v)
            nbrs[v].add(u)
        return cls(n, tuple(tuple(sorted(s)) for s in nbrs))

    @property
    def m(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def edges(self) -> List[Tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in self.adjacency[u] if u < v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def max_degree(self) -> int:
        return max((len(a) for a in self.adjacency), default=0)

    def components(self) -> List[List[int]]:
        """Connected components, each sorted, ordered by smallest vertex."""
        seen = [False] * self.n
        out = []
        for s in range(self.n):
            if seen[s]:
                continue
            seen[s] = True
            stack, comp = [s], []
            while stack:
                v = stack.pop()
                comp.append(v)
                for u in self.adjacency[v]:
                    if not seen[u]:
                        seen[u] = True
                        stack.append(u)
            out.append(sorted(comp))
        return out

    def induced(self, vertices: Sequence[int]) -> "Graph":
        """Induced subgraph relabelled 0..k-1, preserving relative order."""
        vs = sorted(vertices)
        index = {v: i for i, v in enumerate(vs)}
        adj = tuple(
            tuple(index[u] for u in self.adjacency[v] if u in index) for v in vs
        )
        return Graph(len(vs), adj)

    def disjoint_union(self, other: "Graph") -> "Graph":
        shift = self.n
        adj = self.adjacency + tuple(tuple(u + shift for u in a) for a in other.adjacency)
        return Graph(self.n + other.n, adj)

    def is_connected(self) -> bool:
        return self.n <= 1 or len(self.components()) == 1

    def distances_from(self, v: int) -> List[float]:
        dist = [math.inf] * self.n
        dist[v] = 0
        frontier = [v]
        while frontier:
            nxt = []
            for w in frontier:
                for u in self.adjacency[w]:
                    if dist[u] == math.inf:
                        dist[u] = dist[w] + 1
                        nxt.append(u)
            frontier = nxt
        return dist


def parse_graph(text: str) -> Graph:
    """Parse the edge-list format.

    One edge per line as two whitespace-separated nonnegative integers, ``#``
    comment lines, and ``v <id>`` lines declaring (possibly isolated) vertices.
    Vertex ids are compacted to 0..n-1 in ascending numeric order.
    """
    ids = set()
    raw_edges: List[Tuple[int, int, int, str]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if parts[0] == "v":
            if len(parts) != 2:
                raise GraphParseError(lineno, line, "malformed vertex declaration")
            ids.add(_parse_id(parts[1], lineno, line))
            continue
        if len(parts) != 2:
            raise GraphParseError(lineno, line, "malformed line")
        u = _parse_id(parts[0], lineno, line)
        v = _parse_id(parts[1], lineno, line)
        if u == v:
            raise GraphParseError(lineno, line, "self-loop")
        raw_edges.append((u, v, lineno, line))
        ids.update((u, v))

    index = {v: i for i, v in enumerate(sorted(ids))}
    seen = set()
    nbrs: List[List[int]] = [[] for _ in ids]
    for u, v, lineno, line in raw_edges:
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphParseError(lineno, line, "duplicate edge")
        seen.add(key)
        a, b = index[u], index[v]
        nbrs[a].append(b)
        nbrs[b].append(a)
    return Graph(len(nbrs), tuple(tuple(sorted(a)) for a in nbrs))


def _parse_id(tok: str, lineno: int, line: str) -> int:
    if not tok.isdigit():
        raise GraphParseError(lineno, line, f"bad vertex id {tok!r}")
    return int(tok)


def serialize_graph(g: Graph) -> str:
    lines = [f"v {v}" for v in range(g.n) if not g.adjacency[v]]
    lines += [f"{u} {v}" for u, v in g.edges()]
    return "\n".join(lines) + "\n"


def load_graph(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


def check_pins(g: Graph, pins: PinSet) -> Dict[int, Spin]:
    out = {}
    for v, c in pins.items():
        if not 0 <= v < g.n:
            raise InvalidInputError(f"pinned vertex {v} not in graph (n={g.n})")
        out[int(v)] = Spin(c)
    return out


@dataclass(frozen=True)
class SpinParams:
    beta: float
    gamma: float

    def __post_init__(self):
        for name in ("beta", "gamma"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val)) or val < 0:
                raise InvalidInputError(f"{name} must be a finite nonnegative number, got {val!r}")

    def swapped(self) -> "SpinParams":
        return SpinParams(self.gamma, self.beta)

    @property
    def is_degenerate(self) -> bool:
        return self.beta * self.gamma == 1 or (self.beta == 0 and self.gamma == 0)


def swap_colors(params: SpinParams, pins: PinSet) -> Tuple[SpinParams, Dict[int, Spin]]:
    """Exchange the roles of blue and green: beta<->gamma and every pin flipped."""
    return params.swapped(), {v: Spin(c).flipped() for v, c in pins.items()}


@dataclass(frozen=True)
class RegimeReport:
    regime: str  # guaranteed | guaranteed-after-swap | unguaranteed | degenerate
    swap_applied: bool
    threshold_used: float

    @property
    def guaranteed(self) -> bool:
        return self.regime in ("guaranteed", "guaranteed-after-swap")


def _guaranteed(beta: float, gamma: float) -> Optional[float]:
    """Gamma(beta) if (beta, gamma) is in the guaranteed region, else None."""
    from .thresholds import big_gamma

    if not (0 <= beta < 1 and beta * gamma < 1):
        return None
    big = big_gamma(beta).Gamma
    return big if gamma >= big + THRESHOLD_MARGIN else None


def classify_regime(params: SpinParams) -> RegimeReport:
    from .thresholds import big_gamma

    b, g = params.beta, params.gamma
    if params.is_degenerate:
        return RegimeReport("degenerate", False, math.nan)
    t = _guaranteed(b, g)
    if t is not None:
        return RegimeReport("guaranteed", False, t)
    t = _guaranteed(g, b)
    if t is not None:
        return RegimeReport("guaranteed-after-swap", True, t)
    # report the threshold of the orientation with the smaller diagonal entry
    low = min(b, g)
    thr = big_gamma(low).Gamma if 0 <= low < 1 else math.nan
    return RegimeReport("unguaranteed", g < b, thr)


def require_nondegenerate(params: SpinParams) -> None:
    if params.is_degenerate:
        raise DegenerateError(
            f"degenerate parameters beta={params.beta}, gamma={params.gamma}"
        )
