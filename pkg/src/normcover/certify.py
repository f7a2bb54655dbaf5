"""Machine-checkable guarantees extracted from a finished (or running) solve.

The maintained dual (y, mu) is generally infeasible for the packing program;
its worst per-group overload factor is measured, and scaling the dual down by
that factor restores feasibility.  Weak duality then turns the scaled dual
value into a certified lower bound on the offline optimum, with no ground
truth needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CertificateError
from .model import InstanceHeader, norm_q
from .solver import SolverState

CHAIN_RTOL = 1e-8
RATIO_SLACK = 1e-6


def dual_norm_value(values, p: float) -> float:
    """||values||_p for nonnegative values, with p = inf handled as the max."""
    values = np.asarray(values, dtype=float)
    if math.isinf(p):
        return float(values.max()) if values.size else 0.0
    return norm_q(values, p)


@dataclass(frozen=True)
class ViolationReport:
    """Per-group packing overload ||mu(S_e)||_{p_e} / c_e."""

    per_term: tuple[float, ...]  # aligned with positive-weight terms, header order
    term_ids: tuple[int, ...]
    max_factor: float
    zero_weight_loads: tuple[float, ...]  # ||mu(S_e)||_{p_e} of weight-0 terms, no division


def dual_violation(state: SolverState) -> ViolationReport:
    """Measure the packing-constraint overload of the maintained dual."""
    factors = []
    ids = []
    zero_loads = []
    for e, term in enumerate(state.header.norm_terms):
        load = dual_norm_value(state.mu[list(term.indices)], term.dual)
        if term.weight > 0.0:
            factors.append(load / term.weight)
            ids.append(e)
        else:
            zero_loads.append(load)
    return ViolationReport(
        per_term=tuple(factors),
        term_ids=tuple(ids),
        max_factor=max(factors, default=0.0),
        zero_weight_loads=tuple(zero_loads),
    )


@dataclass(frozen=True)
class DualityChain:
    """The four weak-duality quantities, in proof order.

    sum_y <= y_ax = mu_x <= holder must hold whenever x is feasible for every
    processed constraint; holder is the per-group Cauchy/Hoelder majorant
    sum_e ||mu(S_e)||_p * ||x(S_e)||_q.
    """

    sum_y: float
    y_ax: float
    mu_x: float
    holder: float


def weak_duality_check(state: SolverState, x=None) -> DualityChain:
    """Verify the weak-duality chain numerically at the current (or given) point."""
    if x is None:
        x = state.x
    x = np.asarray(x, dtype=float)
    sum_y = math.fsum(state.y)
    y_ax = math.fsum(
        yk * con.value_at(x) for yk, con in zip(state.y, state.constraint_log)
    )
    mu_x = math.fsum(float(m) * float(v) for m, v in zip(state.mu, x))
    holder = math.fsum(
        dual_norm_value(state.mu[list(t.indices)], t.dual)
        * norm_q(x[list(t.indices)], t.exponent)
        for t in state.header.norm_terms
        if t.weight > 0.0
    )
    scale = max(abs(sum_y), abs(y_ax), abs(mu_x), abs(holder), 1.0)
    slack = CHAIN_RTOL * scale
    if sum_y > y_ax + slack:
        raise CertificateError(
            f"weak duality broken: sum(y)={sum_y} > y^T A x={y_ax} "
            "(some constraint with positive dual is unsatisfied)"
        )
    if abs(y_ax - mu_x) > slack:
        raise CertificateError(
            f"mu is inconsistent with A^T y: y^T A x={y_ax} vs mu^T x={mu_x}"
        )
    if mu_x > holder + slack:
        raise CertificateError(
            f"Hoelder majorant broken: mu^T x={mu_x} > {holder}"
        )
    return DualityChain(sum_y=sum_y, y_ax=y_ax, mu_x=mu_x, holder=holder)


def violation_bound(header: InstanceHeader) -> float:
    """Certified overload ceiling 1 + 6*ln(d*rho), with d*rho floored at e."""
    return 1.0 + 6.0 * math.log(max(header.d * header.rho, math.e))


@dataclass(frozen=True)
class Certificate:
    """Self-contained competitiveness record for one run."""

    primal: float
    dual: float
    violation: float
    bound: float
    certified_ratio: float
    pd_gap: float
    lower_bound: float
    eta: float
    per_term_violation: tuple[float, ...]
    zero_weight_loads: tuple[float, ...]


def certified_ratio(state: SolverState, check_chain: bool = True) -> Certificate:
    """Assemble the certificate and enforce its runtime assertions.

    Asserts the primal-dual rate bound primal <= 2*(1+eta)^2 * dual and the
    measured overload against the 1 + 6*ln(d*rho) ceiling (with 1 + 10*eta
    discretization slack).  Degenerate empty runs report ratio 1.
    """
    primal = state.primal_value
    dual = state.dual_value
    report = dual_violation(state)
    viol = report.max_factor
    bound = violation_bound(state.header)
    eta = state.config.eta

    if dual > 0.0:
        pd_gap = primal / dual
        ratio = primal * viol / dual if viol > 0.0 else 1.0
    else:
        pd_gap = 1.0 if primal <= RATIO_SLACK else math.inf
        ratio = pd_gap

    gap_cap = 2.0 * (1.0 + eta) ** 2
    if pd_gap > gap_cap * (1.0 + 1e-12):
        raise CertificateError(
            f"primal/dual gap {pd_gap} exceeds 2*(1+eta)^2 = {gap_cap}"
        )
    if viol > bound * (1.0 + 10.0 * eta):
        raise CertificateError(
            f"dual violation {viol} exceeds certified ceiling {bound} "
            f"(with 1+10*eta slack)"
        )
    # f(x) itself (offset included) dominates OPT >= dual/violation, so the
    # uncorrected ratio may only dip below 1 by the reported delta offset
    if dual > 0.0 and viol > 0.0:
        full_ratio = (primal + state.f_offset) * viol / dual
        if full_ratio < 1.0 - RATIO_SLACK:
            raise CertificateError(
                f"certified ratio {full_ratio} below 1; primal or violation mis-measured"
            )
    if check_chain:
        weak_duality_check(state)

    return Certificate(
        primal=primal,
        dual=dual,
        violation=viol,
        bound=bound,
        certified_ratio=ratio,
        pd_gap=pd_gap,
        lower_bound=dual / viol if viol > 0.0 else 0.0,
        eta=eta,
        per_term_violation=report.per_term,
        zero_weight_loads=report.zero_weight_loads,
    )
