"""Small exact graph primitives shared by the two application drivers.

Edges are identified by index into an edge list, so parallel edges are fine.
Capacities and weights are solver outputs (floats); max flow is exact
augmenting-path (bottleneck residuals cancel exactly in IEEE arithmetic) and
shortest paths break ties by lexicographic edge-id sequence, which keeps both
drivers deterministic.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInstanceError, UnreachableError


@dataclass(frozen=True)
class Digraph:
    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        for u, v in edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise InvalidInstanceError(f"edge ({u}, {v}) leaves node range [0, {self.n})")
            if u == v:
                raise InvalidInstanceError(f"self-loop at node {u} rejected")
        object.__setattr__(self, "edges", edges)
        out: list[list[int]] = [[] for _ in range(self.n)]
        inc: list[list[int]] = [[] for _ in range(self.n)]
        for eid, (u, v) in enumerate(edges):
            out[u].append(eid)
            inc[v].append(eid)
        object.__setattr__(self, "_out", tuple(tuple(o) for o in out))
        object.__setattr__(self, "_in", tuple(tuple(i) for i in inc))

    @property
    def m(self) -> int:
        return len(self.edges)

    def out_edges(self, u: int) -> tuple[int, ...]:
        return self._out[u]

    def in_edges(self, v: int) -> tuple[int, ...]:
        return self._in[v]


def max_flow_min_cut(graph: Digraph, capacities, s: int, t: int):
    """Exact s-t max flow and a minimum cut.

    Returns (value, cut_edge_ids, source_side): cut_edge_ids are all edges
    from the residual-reachable source side to the sink side (zero-capacity
    crossing edges included; with all-zero capacities this is the boundary of
    the s-reachable component and the value is 0).
    """
    if s == t:
        raise InvalidInstanceError("max flow needs distinct endpoints")
    cap = np.asarray(capacities, dtype=float)
    if cap.shape != (graph.m,) or np.any(cap < 0.0):
        raise InvalidInstanceError("capacities must be a nonnegative vector over edges")
    residual = cap.copy()
    back = np.zeros(graph.m)  # flow already pushed, usable in reverse
    value = 0.0
    while True:
        # BFS over positive residuals; parent[v] = (edge id, forward?)
        parent: dict[int, tuple[int, bool]] = {s: (-1, True)}
        queue = deque([s])
        while queue and t not in parent:
            u = queue.popleft()
            for eid in graph.out_edges(u):
                v = graph.edges[eid][1]
                if v not in parent and residual[eid] > 0.0:
                    parent[v] = (eid, True)
                    queue.append(v)
            for eid in graph.in_edges(u):
                v = graph.edges[eid][0]
                if v not in parent and back[eid] > 0.0:
                    parent[v] = (eid, False)
                    queue.append(v)
        if t not in parent:
            break
        bottleneck = np.inf
        v = t
        while v != s:
            eid, fwd = parent[v]
            bottleneck = min(bottleneck, residual[eid] if fwd else back[eid])
            v = graph.edges[eid][0] if fwd else graph.edges[eid][1]
        v = t
        while v != s:
            eid, fwd = parent[v]
            if fwd:
                residual[eid] -= bottleneck
                back[eid] += bottleneck
                v = graph.edges[eid][0]
            else:
                back[eid] -= bottleneck
                residual[eid] += bottleneck
                v = graph.edges[eid][1]
        value += bottleneck
    side = {s}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        for eid in graph.out_edges(u):
            v = graph.edges[eid][1]
            if v not in side and residual[eid] > 0.0:
                side.add(v)
                queue.append(v)
        for eid in graph.in_edges(u):
            v = graph.edges[eid][0]
            if v not in side and back[eid] > 0.0:
                side.add(v)
                queue.append(v)
    cut = tuple(
        eid
        for eid, (u, v) in enumerate(graph.edges)
        if u in side and v not in side
    )
    return value, cut, frozenset(side)


def shortest_path(graph: Digraph, weights, s: int, t: int):
    """Shortest s-t path under nonnegative edge weights.

    Returns (length, edge_id_path).  Among equal-length paths the
    lexicographically smallest edge-id sequence wins (heap keys are
    (distance, sequence), and a prefix compares below its extensions).
    Raises UnreachableError when no path exists.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (graph.m,) or np.any(w < 0.0):
        raise InvalidInstanceError("weights must be a nonnegative vector over edges")
    if s == t:
        return 0.0, ()
    heap: list[tuple[float, tuple[int, ...], int]] = [(0.0, (), s)]
    settled: set[int] = set()
    while heap:
        dist, seq, u = heapq.heappop(heap)
        if u in settled:
            continue
        if u == t:
            return dist, seq
        settled.add(u)
        for eid in graph.out_edges(u):
            v = graph.edges[eid][1]
            if v not in settled:
                heapq.heappush(heap, (dist + w[eid], seq + (eid,), v))
    raise UnreachableError(f"no path from {s} to {t}")
