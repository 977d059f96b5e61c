"""Lazy self-avoiding-walk tree of a graph rooted at a vertex.

Nodes are walks v_1 -> ... -> v_k.  A neighbor u of v_k (other than v_{k-1})
becomes
  * a fixed child with the pinned color if u is pinned;
  * a fixed child closing a cycle if u is already on the walk: with w the
    vertex following u on the walk, blue when w > v_k and green otherwise;
  * a free child (the walk extended by u) otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence, Tuple

from .errors import InvalidQueryError
from .graph import Graph, PinSet, Spin

FREE = "free"
PINNED_BLUE = "pinned-blue"
PINNED_GREEN = "pinned-green"


@dataclass(frozen=True)
class WalkNode:
    path: Tuple[int, ...]
    status: str = FREE

    @property
    def vertex(self) -> int:
        return self.path[-1]

    @property
    def free(self) -> bool:
        return self.status == FREE


@dataclass
class ChildSet:
    free_children: List[WalkNode] = field(default_factory=list)
    d_blue: int = 0
    d_green: int = 0

    @property
    def total(self) -> int:
        return len(self.free_children) + self.d_blue + self.d_green


def root(g: Graph, v: int, pins: PinSet) -> WalkNode:
    if not 0 <= v < g.n:
        raise InvalidQueryError(f"vertex {v} not in graph (n={g.n})")
    if v in pins:
        raise InvalidQueryError(f"root vertex {v} is pinned")
    return WalkNode((v,), FREE)


def scan_neighbors(
    g: Graph, pins: PinSet, path: Sequence[int], position: Mapping[int, int] | Sequence[int]
) -> Tuple[List[int], int, int]:
    """Classify the continuations of a walk.

    ``position[u]`` is the index of u on the walk, or -1 (or absent) when u is
    off the walk.  Returns (free continuation vertices in ascending order,
    number of blue fixed children, number of green fixed children).
    """
    vk = path[-1]
    prev = path[-2] if len(path) > 1 else -1
    free: List[int] = []
    blue = green = 0
    is_map = isinstance(position, Mapping)
    for u in g.adjacency[vk]:
        if u == prev:
            continue
        c = pins.get(u)
        if c is not None:
            if c == Spin.BLUE:
                blue += 1
            else:
                green += 1
            continue
        i = position.get(u, -1) if is_map else position[u]
        if i >= 0:
            if path[i + 1] > vk:
                blue += 1
            else:
                green += 1
        else:
            free.append(u)
    return free, blue, green


def expand(node: WalkNode, g: Graph, pins: PinSet) -> ChildSet:
    if not node.free:
        raise InvalidQueryError(f"cannot expand pinned node {node.path}")
    position: Dict[int, int] = {v: i for i, v in enumerate(node.path)}
    free, blue, green = scan_neighbors(g, pins, node.path, position)
    children = [WalkNode(node.path + (u,)) for u in free]
    return ChildSet(children, blue, green)
