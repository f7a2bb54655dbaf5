"""Variable-duplication reduction from overlapping to disjoint norm groups.

A variable sitting in several positive-weight groups is split into one copy
per group; constraints are then served by a separation loop that repeatedly
feeds the combination built from the currently-smallest copies to the inner
solver, until the smallest-copy combination reaches 1/2.  Doubling the
smallest copies yields a feasible original-space point at a factor-2 cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IterationBoundError
from .model import UNCOSTED, CoveringConstraint, InstanceHeader, NormTerm
from .solver import SolverConfig, SolverState, StepTrace


@dataclass(frozen=True)
class DuplicationMap:
    """Copy layout: original variable -> its duplicated indices, and back."""

    copies_of: tuple[tuple[int, ...], ...]
    origin: tuple[tuple[int, int], ...]  # duplicated index -> (original var, term or UNCOSTED)
    identity: bool

    @property
    def n_duplicated(self) -> int:
        return len(self.origin)


def duplicate(header: InstanceHeader) -> tuple[InstanceHeader, DuplicationMap]:
    """Split each variable into one copy per positive-weight group containing it.

    Uncosted variables (no positive-weight group) keep a single passthrough
    copy.  Zero-weight terms are dropped from the duplicated header; their
    dual load is reported from original-space mu instead.  Already-disjoint
    instances get the identity map.
    """
    owners: list[list[int]] = [[] for _ in range(header.n)]
    for e, term in enumerate(header.norm_terms):
        if term.weight <= 0.0:
            continue
        for i in term.indices:
            owners[i].append(e)

    if all(len(o) <= 1 for o in owners):
        return header, DuplicationMap(
            copies_of=tuple((i,) for i in range(header.n)),
            origin=tuple(
                (i, owners[i][0] if owners[i] else UNCOSTED) for i in range(header.n)
            ),
            identity=True,
        )

    copies_of: list[tuple[int, ...]] = []
    origin: list[tuple[int, int]] = []
    copy_in_term: dict[tuple[int, int], int] = {}
    for i in range(header.n):
        ids = []
        if owners[i]:
            for e in owners[i]:
                copy_in_term[(i, e)] = len(origin)
                ids.append(len(origin))
                origin.append((i, e))
        else:
            ids.append(len(origin))
            origin.append((i, UNCOSTED))
        copies_of.append(tuple(ids))

    new_terms = []
    for e, term in enumerate(header.norm_terms):
        if term.weight <= 0.0:
            continue
        new_terms.append(
            NormTerm(
                indices=tuple(copy_in_term[(i, e)] for i in term.indices),
                weight=term.weight,
                exponent=term.exponent,
            )
        )
    dup_header = InstanceHeader(
        n=len(origin),
        norm_terms=tuple(new_terms),
        d=header.d,
        a_min=header.a_min,
        a_max=header.a_max,
        disjoint=True,
    )
    return dup_header, DuplicationMap(
        copies_of=tuple(copies_of), origin=tuple(origin), identity=False
    )


@dataclass(frozen=True)
class GeneralTrace:
    """Separation-loop record for one original constraint."""

    index: int
    iterations: int
    lhs_min_final: float
    inner: tuple[StepTrace, ...]


class ReducedSolver:
    """Online solver for instances with possibly-overlapping norm groups.

    Wraps a SolverState over the duplicated disjoint instance.  On disjoint
    input the wrapper delegates directly, producing a bit-identical solver
    trace.
    """

    def __init__(self, header: InstanceHeader, config: SolverConfig | None = None):
        self.header = header
        self.dup_header, self.map = duplicate(header)
        self.inner = SolverState.init(self.dup_header, config)
        self.general_traces: list[GeneralTrace] = []
        self.constraint_log: list[CoveringConstraint] = []
        r = len(header.norm_terms)
        self.iteration_cap = math.ceil(2 * r * header.n * 1.1)

    @property
    def config(self) -> SolverConfig:
        return self.inner.config

    def min_copy_values(self) -> np.ndarray:
        """Original-space working point: per variable, the smallest copy value."""
        x = self.inner.x
        return np.array([min(x[c] for c in copies) for copies in self.map.copies_of])

    def _min_copy_lhs(self, constraint: CoveringConstraint) -> float:
        x = self.inner.x
        lhs = 0.0
        for i, a in constraint.entries:
            lhs += a * min(x[c] for c in self.map.copies_of[i])
        return lhs

    def process_general_constraint(self, constraint: CoveringConstraint) -> GeneralTrace:
        """Serve one original-space constraint through the separation loop.

        Repeatedly picks, per variable, the copy with the smallest value (ties
        to the lowest term id) and feeds that combination to the inner solver,
        until the smallest-copy lhs reaches 1/2.  The loop takes at most 2rn
        iterations; exceeding that (with 10% slack) is a hard error.
        """
        k = len(self.constraint_log)
        self.constraint_log.append(constraint)
        if self.map.identity:
            trace = self.inner.process_constraint(constraint)
            gt = GeneralTrace(
                index=k,
                iterations=1,
                lhs_min_final=trace.lhs_final,
                inner=(trace,),
            )
            self.general_traces.append(gt)
            return gt

        x = self.inner.x
        inner_traces = []
        iterations = 0
        while True:
            lhs_min = self._min_copy_lhs(constraint)
            if lhs_min >= 0.5:
                break
            if iterations >= self.iteration_cap:
                raise IterationBoundError(
                    f"constraint {k}: separation exceeded {self.iteration_cap} "
                    "iterations (proven bound 2rn); this is a bug"
                )
            entries = []
            for i, a in constraint.entries:
                copies = self.map.copies_of[i]
                best = copies[0]
                for c in copies[1:]:
                    if x[c] < x[best]:
                        best = c
                entries.append((best, a))
            inner_traces.append(
                self.inner.process_constraint(CoveringConstraint(tuple(entries)))
            )
            iterations += 1
        gt = GeneralTrace(
            index=k,
            iterations=iterations,
            lhs_min_final=lhs_min,
            inner=tuple(inner_traces),
        )
        self.general_traces.append(gt)
        return gt

    def project_solution(self) -> np.ndarray:
        """Original-space point: twice the smallest copy of each variable.

        Feasible for every processed original constraint (loop guard 1/2,
        factor 2), with objective at most twice the duplicated objective.
        """
        return 2.0 * self.min_copy_values()


def project_solution(x_dup: np.ndarray, dmap: DuplicationMap) -> np.ndarray:
    """Standalone projection: x_bar[i] = 2 * min over the copies of i."""
    return np.array([2.0 * min(x_dup[c] for c in copies) for copies in dmap.copies_of])
