"""Online throughput maximization under lp-norm edge-group capacities.

Each arriving request is priced by a shortest-path separation loop on the
covering side: while some path is shorter than 1/2 under the current edge
variables plus the request's rejection variable, that path's constraint is
fed to the solver, and the constraint's dual value is the fractional flow
put on the path.  Fractional flows are then scaled down by the measured dual
violation and randomly rounded into at most one path per request.

Edges belonging to several capacity groups are handled by column
duplication: each group gets its own copy of the edge variable and every
path constraint includes all copies, so all copies provably accumulate the
same dual load (asserted at runtime).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidInstanceError,
    IterationBoundError,
    ScalingError,
    UnreachableError,
)
from .model import CoveringConstraint, InstanceHeader, NormTerm
from .netflow import Digraph, shortest_path
from .solver import SolverConfig, SolverState

MU_COPY_TOL = 1e-9


@dataclass(frozen=True)
class CapacityGroup:
    """||loads(edges)||_p <= c for a subset of edges."""

    edges: tuple[int, ...]
    p: float
    c: float

    def __post_init__(self):
        edges = tuple(int(e) for e in self.edges)
        if len(edges) == 0 or len(set(edges)) != len(edges):
            raise InvalidInstanceError("capacity group needs distinct edges")
        if not self.c > 0.0:
            raise InvalidInstanceError("capacity must be positive")
        p = float(self.p)
        if not (p > 1.0 or math.isinf(p)):
            raise InvalidInstanceError(
                "capacity exponent must be in (1, inf]; p = 1 would need an "
                "l-infinity objective term, which is not supported directly"
            )
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "c", float(self.c))

    @property
    def primal_exponent(self) -> float:
        """Exponent q of the covering-side norm term, 1/p + 1/q = 1."""
        return 1.0 if math.isinf(self.p) else self.p / (self.p - 1.0)


@dataclass(frozen=True)
class RoutingNetwork:
    graph: Digraph
    groups: tuple[CapacityGroup, ...]

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        covered = set()
        for grp in self.groups:
            for e in grp.edges:
                if e >= self.graph.m:
                    raise InvalidInstanceError(f"group references edge {e} >= m")
                covered.add(e)
        if covered != set(range(self.graph.m)):
            raise InvalidInstanceError(
                "every edge must belong to at least one capacity group"
            )


@dataclass(frozen=True)
class ColumnMap:
    copies_of_edge: tuple[tuple[int, ...], ...]
    origin: tuple[tuple[int, int], ...]  # copy -> (edge, group)
    identity: bool

    @property
    def n_copies(self) -> int:
        return len(self.origin)


def duplicate_overlapping_groups(network: RoutingNetwork) -> ColumnMap:
    """One edge-variable copy per containing group; groups become disjoint.

    Every path constraint includes all copies of an edge with the same
    coefficient, so the copies' dual loads stay identical to the original
    edge's load.
    """
    copies: list[list[int]] = [[] for _ in range(network.graph.m)]
    origin: list[tuple[int, int]] = []
    for j, grp in enumerate(network.groups):
        for e in grp.edges:
            copies[e].append(len(origin))
            origin.append((e, j))
    return ColumnMap(
        copies_of_edge=tuple(tuple(c) for c in copies),
        origin=tuple(origin),
        identity=all(len(c) == 1 for c in copies),
    )


@dataclass(frozen=True)
class RequestOutcome:
    """One request's fractional service: flow per generated path."""

    index: int
    source: int
    sink: int
    path_flows: tuple[tuple[tuple[int, ...], float], ...]
    total_flow: float
    iterations: int
    rejected: bool


class RoutingDriver:
    """Online covering state for the path-pricing program."""

    def __init__(
        self,
        network: RoutingNetwork,
        max_requests: int,
        config: SolverConfig | None = None,
    ):
        self.network = network
        self.colmap = duplicate_overlapping_groups(network)
        self.max_requests = int(max_requests)
        ncopies = self.colmap.n_copies
        terms = []
        pos = 0
        for j, grp in enumerate(network.groups):
            idx = tuple(range(pos, pos + len(grp.edges)))
            pos += len(grp.edges)
            terms.append(NormTerm(indices=idx, weight=grp.c, exponent=grp.primal_exponent))
        for i in range(self.max_requests):
            terms.append(NormTerm(indices=(ncopies + i,), weight=1.0, exponent=1.0))
        self.header = InstanceHeader(
            n=ncopies + self.max_requests,
            norm_terms=tuple(terms),
            d=ncopies + 1,
            a_min=1.0,
            a_max=1.0,
            disjoint=True,
        )
        self.solver = SolverState.init(self.header, config)
        self.outcomes: list[RequestOutcome] = []

    def _z_var(self, i: int) -> int:
        return self.colmap.n_copies + i

    def edge_weights(self) -> np.ndarray:
        """Original-space edge weights: sum of the copies' primal values."""
        x = self.solver.x
        return np.array(
            [math.fsum(float(x[c]) for c in copies) for copies in self.colmap.copies_of_edge]
        )

    def handle_request(self, s: int, t: int) -> RequestOutcome:
        """Price one arriving request by shortest-path separation."""
        g = self.network.graph
        if not (0 <= s < g.n and 0 <= t < g.n) or s == t:
            raise InvalidInstanceError(f"bad request endpoints ({s}, {t})")
        i = len(self.outcomes)
        if i >= self.max_requests:
            raise InvalidInstanceError(
                f"request {i} exceeds the declared maximum {self.max_requests}"
            )
        z = self._z_var(i)
        cap_iterations = 2 * (self.colmap.n_copies + 1)
        flows: dict[tuple[int, ...], float] = {}
        iterations = 0
        rejected = False
        while True:
            try:
                length, path = shortest_path(g, self.edge_weights(), s, t)
            except UnreachableError:
                rejected = True
                break
            total = float(self.solver.x[z]) + length
            if total >= 0.5:
                break
            if iterations >= cap_iterations:
                raise IterationBoundError(
                    f"request {i}: separation exceeded {cap_iterations} iterations"
                )
            entries = [(z, 1.0)]
            for e in path:
                entries.extend((c, 1.0) for c in self.colmap.copies_of_edge[e])
            trace = self.solver.process_constraint(CoveringConstraint(tuple(entries)))
            flows[path] = flows.get(path, 0.0) + trace.tau
            iterations += 1
        self._assert_copy_consistency()
        outcome = RequestOutcome(
            index=i,
            source=s,
            sink=t,
            path_flows=tuple(flows.items()),
            total_flow=math.fsum(flows.values()),
            iterations=iterations,
            rejected=rejected,
        )
        self.outcomes.append(outcome)
        return outcome

    def _assert_copy_consistency(self):
        mu = self.solver.mu
        for e, copies in enumerate(self.colmap.copies_of_edge):
            if len(copies) < 2:
                continue
            vals = mu[list(copies)]
            spread = float(vals.max() - vals.min())
            if spread > MU_COPY_TOL * (1.0 + float(vals.max())):
                raise InvalidInstanceError(
                    f"copies of edge {e} accumulated different dual loads ({vals})"
                )

    @property
    def total_flow(self) -> float:
        return math.fsum(o.total_flow for o in self.outcomes)

    @property
    def doubled_primal_value(self) -> float:
        """Primal objective after the feasibility doubling (reporting only)."""
        return 2.0 * self.solver.primal_value


@dataclass(frozen=True)
class RoundingResult:
    seed: int
    violation: float
    chosen: tuple[tuple[int, tuple[int, ...] | None], ...]
    loads: tuple[int, ...]
    expected_value: float
    realized_value: int


def scale_and_round(
    outcomes, violation: float, seed: int, n_edges: int
) -> RoundingResult:
    """Round scaled fractional flows into at most one path per request.

    Flows are first divided by the measured dual violation (restoring packing
    feasibility), then request i picks path P with probability f_{i,P}/8 of
    the scaled flow, or nothing with the remainder.  Identical seeds give
    identical assignments (counter-based generator).
    """
    v = violation if violation > 0.0 else 1.0
    scale = 8.0 * v
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    chosen = []
    loads = np.zeros(n_edges, dtype=np.int64)
    expected = 0.0
    realized = 0
    for out in outcomes:
        probs = [(path, f / scale) for path, f in out.path_flows]
        total_p = math.fsum(p for _, p in probs)
        if total_p > 1.0 + 1e-12:
            raise ScalingError(
                f"request {out.index}: selection probabilities sum to {total_p}; "
                "the violation factor was mis-measured"
            )
        expected += total_p
        u = float(rng.random())
        pick = None
        acc = 0.0
        for path, p in probs:
            acc += p
            if u < acc:
                pick = path
                break
        if pick is not None:
            realized += 1
            for e in pick:
                loads[e] += 1
        chosen.append((out.index, pick))
    return RoundingResult(
        seed=int(seed),
        violation=v,
        chosen=tuple(chosen),
        loads=tuple(int(l) for l in loads),
        expected_value=expected,
        realized_value=realized,
    )


@dataclass(frozen=True)
class GroupLoadReport:
    group: int
    load_norm: float
    capacity: float
    violated: bool
    precondition_ok: bool


def capacity_check(loads, network: RoutingNetwork) -> tuple[GroupLoadReport, ...]:
    """Per-group lp-norm of realized loads against the declared capacities.

    precondition_ok records whether c_j >= 8*ln(m)*|S_j|^(1/p_j); the
    low-violation guarantee only applies above that threshold.
    """
    loads = np.asarray(loads, dtype=float)
    m = network.graph.m
    reports = []
    for j, grp in enumerate(network.groups):
        vals = loads[list(grp.edges)]
        if math.isinf(grp.p):
            load_norm = float(vals.max()) if vals.size else 0.0
            size_term = 1.0
        else:
            load_norm = float(np.power(np.power(vals, grp.p).sum(), 1.0 / grp.p))
            size_term = len(grp.edges) ** (1.0 / grp.p)
        reports.append(
            GroupLoadReport(
                group=j,
                load_norm=load_norm,
                capacity=grp.c,
                violated=load_norm > grp.c + 1e-12,
                precondition_ok=grp.c >= 8.0 * math.log(m) * size_term,
            )
        )
    return tuple(reports)
