"""Small undirected simple graphs on vertices 0..n-1.

Shared plumbing for the constraint-graph and Cayley modules; everything
here is exhaustive-scale and exact.
"""

from __future__ import annotations

import itertools
import json
from typing import Iterable, Iterator


def norm_edge(u: int, v: int) -> tuple[int, int]:
    if u == v:
        raise ValueError(f"loop at vertex {u}")
    return (u, v) if u < v else (v, u)


class FlatGraph:
    """Immutable edge-set graph."""

    __slots__ = ("n", "edges", "_adj")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]):
        self.n = n
        es = frozenset(norm_edge(u, v) for u, v in edges)
        for u, v in es:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) outside vertex range")
        self.edges = es
        adj: list[set[int]] = [set() for _ in range(n)]
        for u, v in es:
            adj[u].add(v)
            adj[v].add(u)
        self._adj = tuple(frozenset(s) for s in adj)

    @property
    def m(self) -> int:
        return len(self.edges)

    def neighbors(self, v: int) -> frozenset[int]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def degrees(self) -> list[int]:
        return [len(s) for s in self._adj]

    def has_edge(self, u: int, v: int) -> bool:
        return norm_edge(u, v) in self.edges

    def with_edges(self, extra: Iterable[tuple[int, int]]) -> "FlatGraph":
        return FlatGraph(self.n, list(self.edges) + list(extra))

    def induced(self, vertices: Iterable[int]) -> "FlatGraph":
        """Induced subgraph, relabeled to 0..k-1 in sorted vertex order."""
        vs = sorted(set(vertices))
        index = {v: i for i, v in enumerate(vs)}
        es = [
            (index[u], index[v])
            for u, v in self.edges
            if u in index and v in index
        ]
        return FlatGraph(len(vs), es)

    def edge_subset_on(self, vertices: Iterable[int]) -> frozenset[tuple[int, int]]:
        vs = set(vertices)
        return frozenset((u, v) for u, v in self.edges if u in vs and v in vs)

    def connected_components(self) -> list[list[int]]:
        seen = [False] * self.n
        comps = []
        for s in range(self.n):
            if seen[s]:
                continue
            stack, comp = [s], []
            seen[s] = True
            while stack:
                v = stack.pop()
                comp.append(v)
                for w in self._adj[v]:
                    if not seen[w]:
                        seen[w] = True
                        stack.append(w)
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return len(self.connected_components()) <= 1

    def is_connected_on(self, vertices: Iterable[int]) -> bool:
        vs = set(vertices)
        if not vs:
            return True
        start = next(iter(vs))
        seen = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for w in self._adj[v]:
                if w in vs and w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen == vs

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, FlatGraph)
            and self.n == other.n
            and self.edges == other.edges
        )

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return f"FlatGraph(n={self.n}, m={self.m})"

    def to_json(self) -> str:
        return json.dumps(
            {"n": self.n, "edges": sorted(map(list, self.edges))}
        )

    @classmethod
    def from_json(cls, text: str) -> "FlatGraph":
        data = json.loads(text)
        return cls(int(data["n"]), [tuple(e) for e in data["edges"]])


def complete_graph(n: int) -> FlatGraph:
    return FlatGraph(n, itertools.combinations(range(n), 2))


def all_pairs(n: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(n), 2))


def transitive_reduction(
    nodes: Iterable, less_than: dict
) -> dict:
    """Cover relation of a strict partial order given as a reachability
    predicate: less_than[(a, b)] is True when a < b.  Returns the map of
    direct predecessors: child -> sorted list of parents."""
    nodes = list(nodes)
    covers: dict = {b: [] for b in nodes}
    for a in nodes:
        for b in nodes:
            if a == b or not less_than.get((a, b)):
                continue
            if any(
                c not in (a, b) and less_than.get((a, c)) and less_than.get((c, b))
                for c in nodes
            ):
                continue
            covers[b].append(a)
    return covers
