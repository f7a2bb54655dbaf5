"""Immutable problem description plus objective/gradient evaluation.

A problem instance is a weighted sum of lq-norms over index groups,
minimized subject to nonnegative covering constraints that arrive one at a
time.  Everything here is pure and safe to share across threads; the online
state lives in :mod:`normcover.solver`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DomainError,
    HeaderViolationError,
    InvalidInstanceError,
    SingularGradientError,
)

UNCOSTED = -1


def dual_exponent(q: float) -> float:
    """Exponent p with 1/p + 1/q = 1; q = 1 maps to math.inf."""
    if not q >= 1.0:
        raise InvalidInstanceError(f"norm exponent must be >= 1, got {q!r}")
    if q == 1.0:
        return math.inf
    return q / (q - 1.0)


@dataclass(frozen=True)
class NormTerm:
    """One objective summand: weight * lq-norm of x restricted to `indices`."""

    indices: tuple[int, ...]
    weight: float
    exponent: float
    dual: float = field(init=False)

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(idx) == 0:
            raise InvalidInstanceError("norm term needs a nonempty index set")
        if len(set(idx)) != len(idx):
            raise InvalidInstanceError(f"duplicate indices in norm term: {idx}")
        if min(idx) < 0:
            raise InvalidInstanceError(f"negative variable index in norm term: {idx}")
        if not self.weight >= 0.0:
            raise InvalidInstanceError(f"norm weight must be >= 0, got {self.weight!r}")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weight", float(self.weight))
        object.__setattr__(self, "exponent", float(self.exponent))
        object.__setattr__(self, "dual", dual_exponent(self.exponent))


@dataclass(frozen=True)
class CoveringConstraint:
    """Sparse row of the covering system: sum(coeff * x[index]) >= 1."""

    entries: tuple[tuple[int, float], ...]

    def __post_init__(self):
        ent = tuple((int(i), float(a)) for i, a in self.entries)
        if not ent:
            raise InvalidInstanceError("empty covering constraint is unsatisfiable")
        seen = set()
        for i, a in ent:
            if i < 0:
                raise InvalidInstanceError(f"negative variable index {i}")
            if i in seen:
                raise InvalidInstanceError(f"duplicate variable index {i}")
            seen.add(i)
            if not a > 0.0:
                raise InvalidInstanceError(
                    f"coefficient for variable {i} must be positive (omit zeros), got {a}"
                )
        object.__setattr__(self, "entries", ent)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.entries)

    @property
    def coefficients(self) -> tuple[float, ...]:
        return tuple(a for _, a in self.entries)

    def value_at(self, x) -> float:
        """Left-hand side sum(coeff * x[i]), accumulated in entry order."""
        lhs = 0.0
        for i, a in self.entries:
            lhs += a * x[i]
        return lhs


@dataclass(frozen=True)
class InstanceHeader:
    """Declared dimensions and bounds for an online run.

    `d` bounds both the row sparsity of arriving constraints and the largest
    norm-group size; it enters the solver's update rates, so it must be
    declared up front.  `a_min`/`a_max` bound the nonzero constraint
    coefficients (their ratio is the certificate parameter rho).
    """

    n: int
    norm_terms: tuple[NormTerm, ...]
    d: int
    a_min: float
    a_max: float
    disjoint: bool = False

    def __post_init__(self):
        object.__setattr__(self, "norm_terms", tuple(self.norm_terms))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "a_min", float(self.a_min))
        object.__setattr__(self, "a_max", float(self.a_max))
        if self.n <= 0:
            raise InvalidInstanceError(f"variable count must be positive, got {self.n}")
        if not (0.0 < self.a_min <= self.a_max):
            raise InvalidInstanceError(
                f"need 0 < a_min <= a_max, got a_min={self.a_min}, a_max={self.a_max}"
            )
        max_group = max((len(t.indices) for t in self.norm_terms), default=0)
        if self.d < max(max_group, 1):
            raise InvalidInstanceError(
                f"declared d={self.d} is below the largest norm group ({max_group})"
            )
        for t in self.norm_terms:
            if max(t.indices) >= self.n:
                raise InvalidInstanceError(
                    f"norm term references variable {max(t.indices)} >= n={self.n}"
                )
        if self.disjoint:
            seen: set[int] = set()
            for t in self.norm_terms:
                for i in t.indices:
                    if i in seen:
                        raise InvalidInstanceError(
                            f"header declared disjoint but variable {i} is in two terms"
                        )
                    seen.add(i)

    @property
    def rho(self) -> float:
        return self.a_max / self.a_min


def group_index(header: InstanceHeader) -> np.ndarray:
    """Map each variable to the positive-weight term containing it, or UNCOSTED.

    Zero-weight terms cost nothing, so their variables count as uncosted
    unless some positive-weight term also contains them.  Raises when a
    variable sits in two positive-weight terms (such instances must go
    through the duplication reduction first).
    """
    owner = np.full(header.n, UNCOSTED, dtype=np.int64)
    for e, term in enumerate(header.norm_terms):
        if term.weight <= 0.0:
            continue
        for i in term.indices:
            if owner[i] != UNCOSTED:
                raise InvalidInstanceError(
                    f"variable {i} is in positive-weight terms {owner[i]} and {e}; "
                    "duplicate the instance to make groups disjoint"
                )
            owner[i] = e
    return owner


def norm_q(values: np.ndarray, q: float, method: str = "auto") -> float:
    """lq-norm of a nonnegative vector.

    The direct path raises the raw power sum; the log-domain path works on
    log(x) and is used when q > 8 or the positive entries span more than six
    orders of magnitude, where raw power sums lose precision or over/underflow.
    """
    values = np.asarray(values, dtype=float)
    if q == 1.0:
        return math.fsum(values.tolist())
    pos = values[values > 0.0]
    if pos.size == 0:
        return 0.0
    if method == "auto":
        spread = float(pos.max()) / float(pos.min())
        method = "log" if (q > 8.0 or spread > 1e6) else "direct"
    if method == "direct":
        return float(np.sum(pos**q) ** (1.0 / q))
    if method == "log":
        logs = q * np.log(pos)
        m = float(logs.max())
        return math.exp((m + math.log(float(np.sum(np.exp(logs - m))))) / q)
    raise ValueError(f"unknown norm evaluation method {method!r}")


def eval_objective(header: InstanceHeader, x, method: str = "auto") -> float:
    """Objective value sum_e weight_e * ||x(S_e)||_{q_e} at a nonnegative point."""
    x = np.asarray(x, dtype=float)
    if x.shape != (header.n,):
        raise DomainError(f"point has shape {x.shape}, expected ({header.n},)")
    if np.any(x < 0.0):
        raise DomainError("objective is only defined for nonnegative points")
    parts = []
    for term in header.norm_terms:
        if term.weight <= 0.0:
            continue
        parts.append(term.weight * norm_q(x[list(term.indices)], term.exponent, method))
    return math.fsum(parts)


def eval_gradient(header: InstanceHeader, x) -> np.ndarray:
    """Gradient of the objective at a point with positive costed coordinates.

    For a group with exponent q the partial derivative is
    weight * (x_i / ||x(S)||_q)**(q-1); linear groups contribute the constant
    weight.  Uncosted coordinates get 0.  Raises SingularGradientError when a
    costed coordinate is zero inside a q > 1 group (callers must keep the
    solver's delta floor).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (header.n,):
        raise DomainError(f"point has shape {x.shape}, expected ({header.n},)")
    if np.any(x < 0.0):
        raise DomainError("gradient is only defined for nonnegative points")
    grad = np.zeros(header.n)
    for term in header.norm_terms:
        if term.weight <= 0.0:
            continue
        idx = list(term.indices)
        if term.exponent == 1.0:
            grad[idx] += term.weight
            continue
        vals = x[idx]
        if np.any(vals == 0.0):
            raise SingularGradientError(
                "zero coordinate inside a q > 1 norm group; apply a positive floor"
            )
        nrm = norm_q(vals, term.exponent)
        grad[idx] += term.weight * (vals / nrm) ** (term.exponent - 1.0)
    return grad


def subgradient(header: InstanceHeader, x) -> np.ndarray:
    """A subgradient valid on all of the nonnegative orthant.

    Coincides with eval_gradient wherever that is defined; zero coordinates in
    q > 1 groups get the one-sided derivative 0, and all-zero groups get the
    zero subgradient.
    """
    x = np.asarray(x, dtype=float)
    grad = np.zeros(header.n)
    for term in header.norm_terms:
        if term.weight <= 0.0:
            continue
        idx = list(term.indices)
        if term.exponent == 1.0:
            grad[idx] += term.weight
            continue
        vals = x[idx]
        nrm = norm_q(vals, term.exponent)
        if nrm == 0.0:
            continue
        grad[idx] += term.weight * (vals / nrm) ** (term.exponent - 1.0)
    return grad


@dataclass(frozen=True)
class ObservedStats:
    """Row sparsity and coefficient spread actually seen in a constraint stream."""

    d: int
    rho: float
    coeff_min: float
    coeff_max: float


def instance_stats(header: InstanceHeader, constraints) -> ObservedStats:
    """Observed (d, rho) over a constraint stream, checked against the header.

    The declared d enters the solver's update rates, so exceeding a declared
    bound invalidates certificates; that is reported as HeaderViolationError.
    """
    max_row = 0
    cmin = math.inf
    cmax = 0.0
    for k, con in enumerate(constraints):
        max_row = max(max_row, len(con.entries))
        for i, a in con.entries:
            if i >= header.n:
                raise HeaderViolationError(
                    f"constraint {k} references variable {i} >= n={header.n}"
                )
            cmin = min(cmin, a)
            cmax = max(cmax, a)
    max_group = max((len(t.indices) for t in header.norm_terms), default=0)
    d_obs = max(max_row, max_group)
    if d_obs > header.d:
        raise HeaderViolationError(f"observed d={d_obs} exceeds declared d={header.d}")
    if cmax == 0.0:
        return ObservedStats(d=d_obs, rho=1.0, coeff_min=0.0, coeff_max=0.0)
    if cmin < header.a_min or cmax > header.a_max:
        raise HeaderViolationError(
            f"observed coefficients [{cmin}, {cmax}] leave declared "
            f"[{header.a_min}, {header.a_max}]"
        )
    return ObservedStats(d=d_obs, rho=cmax / cmin, coeff_min=cmin, coeff_max=cmax)
