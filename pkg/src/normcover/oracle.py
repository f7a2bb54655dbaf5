"""Desk-scale offline optimum estimators, independent of the online solver.

Two modes sharing nothing with the solver beyond the objective evaluator:

* grid: coarse-to-fine box search on [0, 1/a_min]^n (n <= 6), zooming around
  the best feasible point until the cell size reaches `resolution * x_max`,
  then one local refinement pass continuing to resolution/100.
* subgrad: projected subgradient descent, projecting by one cyclic pass of
  per-constraint upscaling (coefficients are nonnegative, so scaling the
  support of a violated row up never breaks the others).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, InvalidInstanceError
from .model import CoveringConstraint, InstanceHeader, eval_objective, subgradient

GRID_POINTS = 13
GRID_MAX_N = 6
FEAS_TOL = 1e-12


@dataclass(frozen=True)
class OracleResult:
    value: float
    x: np.ndarray
    mode: str


def _batch_objective(header: InstanceHeader, points: np.ndarray) -> np.ndarray:
    obj = np.zeros(points.shape[0])
    for term in header.norm_terms:
        if term.weight <= 0.0:
            continue
        block = points[:, list(term.indices)]
        obj += term.weight * np.power(
            np.power(block, term.exponent).sum(axis=1), 1.0 / term.exponent
        )
    return obj


def _feasible_mask(constraints, points: np.ndarray) -> np.ndarray:
    mask = np.ones(points.shape[0], dtype=bool)
    for con in constraints:
        lhs = np.zeros(points.shape[0])
        for i, a in con.entries:
            lhs += a * points[:, i]
        mask &= lhs >= 1.0 - FEAS_TOL
    return mask


def _grid_search(header, constraints, resolution):
    n = header.n
    if n > GRID_MAX_N:
        raise InvalidInstanceError(f"grid oracle supports n <= {GRID_MAX_N}, got {n}")
    x_max = 1.0 / header.a_min
    lo = np.zeros(n)
    hi = np.full(n, x_max)
    best_val = math.inf
    best_x = None
    target = resolution * x_max / 100.0  # final local accuracy after refinement
    while True:
        axes = [np.linspace(lo[i], hi[i], GRID_POINTS) for i in range(n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.stack([m.ravel() for m in mesh], axis=1)
        mask = _feasible_mask(constraints, points)
        if mask.any():
            obj = _batch_objective(header, points[mask])
            j = int(np.argmin(obj))
            if obj[j] < best_val:
                best_val = float(obj[j])
                best_x = points[mask][j].copy()
        if best_x is None:
            # cannot happen: the all-x_max corner is a level-0 grid point and
            # every row has a coefficient >= a_min, so it is always feasible
            raise InfeasibleError("grid oracle found no feasible point")
        step = (hi - lo) / (GRID_POINTS - 1)
        if float(step.max()) <= target:
            break
        lo = np.maximum(best_x - 2.0 * step, 0.0)
        hi = np.minimum(best_x + 2.0 * step, x_max)
    return best_val, best_x


def _project(x, constraints, supports):
    """Clip to the orthant, then one cyclic pass of per-row upscaling."""
    x = np.maximum(x, 0.0)
    for con, sup in zip(constraints, supports):
        lhs = con.value_at(x)
        if lhs >= 1.0:
            continue
        if lhs <= 0.0:
            total = sum(a for _, a in con.entries)
            for i, a in con.entries:
                x[i] = max(x[i], 1.0 / total)
        else:
            scale = 1.0 / lhs
            for i in sup:
                x[i] *= scale
    return x


def _subgrad_search(header, constraints, iters):
    n = header.n
    x_max = 1.0 / header.a_min
    supports = [list(con.indices) for con in constraints]
    x = _project(np.full(n, 0.5 * x_max), constraints, supports)
    best_val = eval_objective(header, x)
    best_x = x.copy()
    step0 = 0.5 * x_max
    for t in range(iters):
        g = subgradient(header, x)
        gn = float(np.linalg.norm(g))
        if gn == 0.0:
            break
        x = x - (step0 / math.sqrt(t + 1.0)) * (g / gn)
        x = np.minimum(_project(x, constraints, supports), x_max)
        val = eval_objective(header, x)
        if val < best_val:
            best_val = val
            best_x = x.copy()
    return best_val, best_x


def offline_oracle(
    header: InstanceHeader,
    constraints,
    resolution: float = 1e-3,
    mode: str = "grid",
    iters: int = 100_000,
) -> OracleResult:
    """Offline optimum estimate for the accumulated covering program."""
    constraints = list(constraints)
    for con in constraints:
        if not isinstance(con, CoveringConstraint):
            raise InvalidInstanceError("oracle expects CoveringConstraint objects")
        if not con.entries:
            raise InfeasibleError("empty covering constraint is unsatisfiable")
    if not constraints:
        return OracleResult(value=0.0, x=np.zeros(header.n), mode=mode)
    if mode == "grid":
        val, x = _grid_search(header, constraints, resolution)
    elif mode == "subgrad":
        val, x = _subgrad_search(header, constraints, iters)
    else:
        raise InvalidInstanceError(f"unknown oracle mode {mode!r}")
    return OracleResult(value=val, x=x, mode=mode)
