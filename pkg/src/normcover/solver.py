"""Online primal-dual engine for disjoint-group instances.

Each arriving covering constraint is integrated in continuous time tau: every
touched primal variable grows at rate (a_ki * x_i + 1/d) / grad_i f(x) while
the dual value of the constraint grows at rate one, until the constraint is
satisfied.  The integration is explicit Euler with an adaptive step capping
multiplicative growth at 1 + eta, except that constraints whose variables all
live in linear (q = 1) terms are integrated exactly.  x, y and mu = A^T y are
monotone non-decreasing over the whole run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    HeaderViolationError,
    IntegrationFailureError,
    InvalidInstanceError,
    SingularGradientError,
)
from .model import (
    UNCOSTED,
    CoveringConstraint,
    InstanceHeader,
    eval_objective,
    group_index,
)


def default_delta(header: InstanceHeader) -> float:
    """Initial primal floor, small enough that f(delta * 1) is negligible
    against the cheapest single-constraint response."""
    return 1e-6 / (header.d**2 * header.a_max * header.n)


@dataclass(frozen=True)
class SolverConfig:
    delta: float | None = None  # None: use default_delta(header)
    eta: float = 1e-3
    lhs_tol: float = 1e-9
    max_steps_per_constraint: int = 5_000_000
    exact_linear_fastpath: bool = True

    def __post_init__(self):
        if self.delta is not None and not self.delta > 0.0:
            raise InvalidInstanceError("delta must be positive")
        if not (0.0 < self.eta < 1.0):
            raise InvalidInstanceError("eta must be in (0, 1)")
        if not self.lhs_tol > 0.0:
            raise InvalidInstanceError("lhs_tol must be positive")


@dataclass(frozen=True)
class StepTrace:
    """Per-constraint integration record."""

    index: int
    steps: int
    tau: float
    lhs_on_arrival: float
    lhs_final: float
    fast_path: bool
    already_satisfied: bool
    saturated: tuple[int, ...]
    primal_value: float
    dual_value: float


class SolverState:
    """Mutable state of one online run; single-owner, mutate from one thread."""

    def __init__(self, header: InstanceHeader, config: SolverConfig):
        r = len(header.norm_terms)
        self.header = header
        self.config = config
        self.delta = config.delta if config.delta is not None else default_delta(header)
        self.var_term = group_index(header)
        self.term_c = np.array([t.weight for t in header.norm_terms], dtype=float)
        self.term_q = np.array([t.exponent for t in header.norm_terms], dtype=float)
        starts = [0]
        members: list[int] = []
        for t in header.norm_terms:
            members.extend(t.indices)
            starts.append(len(members))
        self.term_start = np.array(starts, dtype=np.int64)
        self.term_vars = np.array(members, dtype=np.int64)

        self.x = np.where(self.var_term >= 0, self.delta, 0.0)
        self.pow_sum = np.zeros(r)
        self.pow_comp = np.zeros(r)
        self.pow_count = np.zeros(r, dtype=np.int64)
        self._recompute_power_sums()
        self.f_offset = eval_objective(header, self.x)

        self.y: list[float] = []
        self.mu = np.zeros(header.n)
        self.constraint_log: list[CoveringConstraint] = []
        self.traces: list[StepTrace] = []
        self.saturation_events = 0
        self.overshoot_events = 0
        self.observed_row_max = 0
        self.observed_coeff_min = math.inf
        self.observed_coeff_max = 0.0

    @classmethod
    def init(cls, header: InstanceHeader, config: SolverConfig | None = None):
        return cls(header, config or SolverConfig())

    def _recompute_power_sums(self):
        for e, t in enumerate(self.header.norm_terms):
            vals = self.x[list(t.indices)]
            self.pow_sum[e] = math.fsum((v ** t.exponent for v in vals))
            self.pow_comp[e] = 0.0
            self.pow_count[e] = 0

    # -- bookkeeping -----------------------------------------------------

    def objective_value(self) -> float:
        """f(x) from the maintained power sums (costed terms only)."""
        return math.fsum(
            self.term_c[e] * self.pow_sum[e] ** (1.0 / self.term_q[e])
            for e in range(len(self.term_c))
            if self.term_c[e] > 0.0
        )

    @property
    def primal_value(self) -> float:
        return self.objective_value() - self.f_offset

    @property
    def dual_value(self) -> float:
        return math.fsum(self.y)

    def observed_stats(self) -> tuple[int, float]:
        max_group = max((len(t.indices) for t in self.header.norm_terms), default=0)
        d = max(self.observed_row_max, max_group)
        if self.observed_coeff_max == 0.0:
            return d, 1.0
        return d, self.observed_coeff_max / self.observed_coeff_min

    def recompute_mu(self) -> np.ndarray:
        """A^T y from the constraint log; used for the mu-consistency check."""
        mu = np.zeros(self.header.n)
        for yk, con in zip(self.y, self.constraint_log):
            for i, a in con.entries:
                mu[i] += a * yk
        return mu

    # -- validation ------------------------------------------------------

    def _validate(self, constraint: CoveringConstraint):
        h = self.header
        if len(constraint.entries) > h.d:
            raise HeaderViolationError(
                f"constraint has {len(constraint.entries)} entries, declared d={h.d}"
            )
        for i, a in constraint.entries:
            if i >= h.n:
                raise HeaderViolationError(f"variable index {i} >= n={h.n}")
            if a < h.a_min or a > h.a_max:
                raise HeaderViolationError(
                    f"coefficient {a} outside declared [{h.a_min}, {h.a_max}]"
                )

    # -- the online step -------------------------------------------------

    def process_constraint(self, constraint: CoveringConstraint) -> StepTrace:
        """Integrate one arriving constraint to satisfaction and grow a dual entry.

        On return the constraint's lhs is in [1, 1 + 10*lhs_tol], y has one
        more entry equal to the elapsed tau, and mu has grown by a_k * y_k.
        A constraint already satisfied on arrival gets y_k = 0.  Uncosted
        variables in the constraint are saturated to 1/a_ki up front (they
        absorb the constraint for free).
        """
        self._validate(constraint)
        cfg = self.config
        idx = np.array(constraint.indices, dtype=np.int64)
        coef = np.array(constraint.coefficients, dtype=float)

        self.observed_row_max = max(self.observed_row_max, len(constraint.entries))
        self.observed_coeff_min = min(self.observed_coeff_min, float(coef.min()))
        self.observed_coeff_max = max(self.observed_coeff_max, float(coef.max()))

        saturated = []
        for i, a in constraint.entries:
            if self.var_term[i] == UNCOSTED and self.x[i] < 1.0 / a:
                self.x[i] = 1.0 / a
                saturated.append(i)
        self.saturation_events += len(saturated)

        lhs0 = constraint.value_at(self.x)
        k = len(self.constraint_log)
        if lhs0 >= 1.0:
            tau, lhs_final, steps, fast = 0.0, lhs0, 0, False
            already = True
        else:
            already = False
            all_linear = all(self.term_q[self.var_term[i]] == 1.0 for i in idx)
            args = (
                self.x,
                self.var_term,
                self.term_c,
                self.term_q,
                self.pow_sum,
                self.pow_comp,
                self.pow_count,
                self.term_start,
                self.term_vars,
                idx,
                coef,
                1.0 / self.header.d,
            )
            if cfg.exact_linear_fastpath and all_linear:
                tau, lhs_final, steps, status = _kernels.process_exact_linear(*args)
                fast = True
            else:
                tau, lhs_final, steps, status = _kernels.process_euler(
                    *args, cfg.eta, cfg.lhs_tol, cfg.max_steps_per_constraint
                )
                fast = False
            if status != _kernels.STATUS_OK:
                partial = StepTrace(
                    k, steps, tau, lhs0, lhs_final, fast, False, tuple(saturated),
                    self.primal_value, self.dual_value,
                )
                raise IntegrationFailureError(
                    f"constraint {k}: {steps} steps without satisfaction "
                    f"(lhs={lhs_final})",
                    trace=partial,
                )
            self.mu[idx] += coef * tau
            if lhs_final > 1.0 + cfg.lhs_tol:
                self.overshoot_events += 1

        self.y.append(tau)
        self.constraint_log.append(constraint)
        trace = StepTrace(
            index=k,
            steps=steps,
            tau=tau,
            lhs_on_arrival=lhs0,
            lhs_final=lhs_final,
            fast_path=fast,
            already_satisfied=already,
            saturated=tuple(saturated),
            primal_value=self.primal_value,
            dual_value=self.dual_value,
        )
        self.traces.append(trace)
        return trace


def init(header: InstanceHeader, config: SolverConfig | None = None) -> SolverState:
    return SolverState.init(header, config)


def process_constraint(state: SolverState, constraint: CoveringConstraint) -> StepTrace:
    return state.process_constraint(constraint)


def choose_step(state: SolverState, constraint: CoveringConstraint) -> float:
    """Admissible Euler step for an unsatisfied constraint (internal, testable)."""
    idx = np.array(constraint.indices, dtype=np.int64)
    coef = np.array(constraint.coefficients, dtype=float)
    _check_positive(state, idx)
    rate = np.empty(len(idx))
    dt, lhs, _ = _kernels._plan_step(
        state.x,
        state.var_term,
        state.term_c,
        state.term_q,
        state.pow_sum,
        idx,
        coef,
        1.0 / state.header.d,
        state.config.eta,
        state.config.lhs_tol,
        rate,
    )
    if lhs >= 1.0:
        raise InvalidInstanceError("choose_step called on a satisfied constraint")
    return float(dt)


def integrate_step(state: SolverState, constraint: CoveringConstraint, dtau: float):
    """One explicit-Euler update with the gradient frozen at entry (internal)."""
    if not dtau > 0.0:
        raise InvalidInstanceError("dtau must be positive")
    idx = np.array(constraint.indices, dtype=np.int64)
    coef = np.array(constraint.coefficients, dtype=float)
    _check_positive(state, idx)
    rate = np.empty(len(idx))
    for j, i in enumerate(idx):
        rate[j] = (
            coef[j] * state.x[i] + 1.0 / state.header.d
        ) / _kernels._gradient_entry(
            i, state.x, state.var_term, state.term_c, state.term_q, state.pow_sum
        )
    _kernels._apply_step(
        state.x,
        state.var_term,
        state.term_q,
        state.pow_sum,
        state.pow_comp,
        state.pow_count,
        state.term_start,
        state.term_vars,
        idx,
        coef,
        rate,
        dtau,
    )


def _check_positive(state: SolverState, idx):
    for i in idx:
        e = state.var_term[i]
        if e < 0:
            raise InvalidInstanceError(
                f"variable {i} is uncosted; saturate it before stepping"
            )
        if state.term_q[e] > 1.0 and state.x[i] == 0.0:
            raise SingularGradientError(
                f"variable {i} is zero inside a q > 1 group; delta floor breached"
            )
