"""Fractional online non-uniform buy-at-bulk driver.

Arriving source/sink pairs are served by a min-cut separation loop: for every
candidate root the cheaper of the (source -> root) and (root -> sink) cut
capacities is computed under the current per-terminal flow variables, and the
resulting most-violated cut combination is fed to the covering solver, until
the combined cut value reaches 1/2.

The fixed edge cost multiplies the largest per-terminal flow on the edge;
that max is encoded as an lq-norm with q = ceil(log2 |V|) + 1, which
overestimates the max by at most a factor |T|^(1/q) <= 2.  Incremental edge
costs are plain linear terms.  Each flow variable therefore sits in two
groups, so the run goes through the duplication reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, InvalidInstanceError, IterationBoundError
from .model import CoveringConstraint, InstanceHeader, NormTerm, norm_q
from .netflow import Digraph, max_flow_min_cut
from .reduction import ReducedSolver
from .solver import SolverConfig


def linf_surrogate_exponent(size: int) -> float:
    """Smallest handy q with size**(1/q) <= 2: one more than ceil(log2 size)."""
    if size < 1:
        raise InvalidInstanceError("group size must be at least 1")
    return float(math.ceil(math.log2(size)) + 1) if size > 1 else 1.0


@dataclass(frozen=True)
class BabNetwork:
    """Directed graph with a fixed (buy) and incremental (per-flow) cost per edge."""

    graph: Digraph
    fixed_cost: tuple[float, ...]
    incr_cost: tuple[float, ...]

    def __post_init__(self):
        fixed = tuple(float(c) for c in self.fixed_cost)
        incr = tuple(float(c) for c in self.incr_cost)
        if len(fixed) != self.graph.m or len(incr) != self.graph.m:
            raise InvalidInstanceError("need one fixed and one incremental cost per edge")
        if any(c < 0.0 for c in fixed) or any(c < 0.0 for c in incr):
            raise InvalidInstanceError("edge costs must be nonnegative")
        object.__setattr__(self, "fixed_cost", fixed)
        object.__setattr__(self, "incr_cost", incr)


@dataclass(frozen=True)
class PairTrace:
    source: int
    sink: int
    iterations: int
    cut_total: float


class BabDriver:
    """Online state: covering variables f[root, terminal, edge] plus the solver.

    The variable universe is declared up front over all (root, vertex, edge)
    triples; vertices only act as terminals once some pair names them, and
    unused slots stay at the solver floor.
    """

    def __init__(self, network: BabNetwork, config: SolverConfig | None = None):
        self.network = network
        g = network.graph
        self.nv = g.n
        self.me = g.m
        if self.me == 0:
            raise InvalidInstanceError("buy-at-bulk needs at least one edge")
        self.q = linf_surrogate_exponent(self.nv)
        terms = []
        for r in range(self.nv):
            for e in range(self.me):
                if network.fixed_cost[e] > 0.0:
                    terms.append(
                        NormTerm(
                            indices=tuple(self._var(r, u, e) for u in range(self.nv)),
                            weight=network.fixed_cost[e],
                            exponent=self.q,
                        )
                    )
                for u in range(self.nv):
                    if network.incr_cost[e] > 0.0:
                        terms.append(
                            NormTerm(
                                indices=(self._var(r, u, e),),
                                weight=network.incr_cost[e],
                                exponent=1.0,
                            )
                        )
        header = InstanceHeader(
            n=self.nv * self.nv * self.me,
            norm_terms=tuple(terms),
            d=self.nv * self.me,
            a_min=1.0,
            a_max=1.0,
            disjoint=False,
        )
        self.header = header
        self.reduced = ReducedSolver(header, config)
        self.terminals: list[int] = []
        self.pair_traces: list[PairTrace] = []

    def _var(self, r: int, u: int, e: int) -> int:
        return (r * self.nv + u) * self.me + e

    def flow_variable_count(self, s: int, t: int) -> int:
        """Duplicated copies backing the flow variables of terminals s and t."""
        count = 0
        for r in range(self.nv):
            for u in (s, t):
                for e in range(self.me):
                    count += len(self.reduced.map.copies_of[self._var(r, u, e)])
        return count

    def handle_pair(self, s: int, t: int) -> PairTrace:
        """Serve one arriving pair via the min-cut separation loop."""
        if not (0 <= s < self.nv and 0 <= t < self.nv):
            raise InvalidInstanceError(f"pair ({s}, {t}) leaves node range")
        if s == t:
            raise InvalidInstanceError("source and sink must differ")
        for u in (s, t):
            if u not in self.terminals:
                self.terminals.append(u)
        g = self.network.graph
        cap_iterations = 4 * self.flow_variable_count(s, t)
        iterations = 0
        while True:
            xmin = self.reduced.min_copy_values()
            total = 0.0
            picks = []
            for r in range(self.nv):
                if r == s:
                    mcs, cut_s = math.inf, ()
                else:
                    mcs, cut_s, _ = max_flow_min_cut(
                        g, [xmin[self._var(r, s, e)] for e in range(self.me)], s, r
                    )
                if r == t:
                    mct, cut_t = math.inf, ()
                else:
                    mct, cut_t, _ = max_flow_min_cut(
                        g, [xmin[self._var(r, t, e)] for e in range(self.me)], r, t
                    )
                total += min(mcs, mct)
                picks.append((r, mcs, cut_s, mct, cut_t))
            if total >= 0.5:
                break
            if iterations >= cap_iterations:
                raise IterationBoundError(
                    f"pair ({s}, {t}): separation exceeded {cap_iterations} iterations"
                )
            entries = []
            for r, mcs, cut_s, mct, cut_t in picks:
                if mcs <= mct:
                    entries.extend((self._var(r, s, e), 1.0) for e in cut_s)
                else:
                    entries.extend((self._var(r, t, e), 1.0) for e in cut_t)
            if not entries:
                raise InfeasibleError(
                    f"pair ({s}, {t}) cannot be routed through any root"
                )
            self.reduced.process_general_constraint(CoveringConstraint(tuple(entries)))
            iterations += 1
        trace = PairTrace(source=s, sink=t, iterations=iterations, cut_total=total)
        self.pair_traces.append(trace)
        return trace

    def solution(self) -> np.ndarray:
        """Projected original-space flow variables (twice the smallest copies)."""
        return self.reduced.project_solution()

    def fractional_objective(self) -> tuple[float, float]:
        """(true max-based objective, lq surrogate objective) of the solution.

        The surrogate replaces each per-edge max over terminals by the
        lq-norm, and lies in [true, 2 * true].
        """
        xbar = self.solution()
        true_parts = []
        surr_parts = []
        for r in range(self.nv):
            for e in range(self.me):
                vals = np.array(
                    [xbar[self._var(r, u, e)] for u in range(self.nv)]
                )
                c = self.network.fixed_cost[e]
                if c > 0.0:
                    true_parts.append(c * float(vals.max()))
                    surr_parts.append(c * norm_q(vals, self.q))
                le = self.network.incr_cost[e]
                if le > 0.0:
                    lin = le * float(vals.sum())
                    true_parts.append(lin)
                    surr_parts.append(lin)
        return math.fsum(true_parts), math.fsum(surr_parts)
