import numpy as np
import pytest

from normcover.model import CoveringConstraint, InstanceHeader, NormTerm
from normcover.solver import SolverConfig, SolverState


@pytest.fixture(scope="session")
def warm_kernels():
    """Compile the numba kernels once so timed tests don't pay for JIT."""
    header = InstanceHeader(
        n=2,
        norm_terms=(NormTerm((0,), 1.0, 1.0), NormTerm((1,), 1.0, 2.0)),
        d=2,
        a_min=1.0,
        a_max=1.0,
        disjoint=True,
    )
    state = SolverState.init(header, SolverConfig(delta=1e-6))
    state.process_constraint(CoveringConstraint(((0, 1.0),)))
    state.process_constraint(CoveringConstraint(((1, 1.0),)))
    state2 = SolverState.init(header, SolverConfig(delta=1e-6, exact_linear_fastpath=False))
    state2.process_constraint(CoveringConstraint(((0, 1.0), (1, 1.0))))
    return True


def single_term_header(n, weight, exponent, d=None, a_min=1.0, a_max=1.0):
    return InstanceHeader(
        n=n,
        norm_terms=(NormTerm(tuple(range(n)), weight, exponent),),
        d=d if d is not None else n,
        a_min=a_min,
        a_max=a_max,
        disjoint=True,
    )


def brute_objective(header, x):
    """Scalar reference evaluator: no numpy, no shared code paths."""
    import math

    total = 0.0
    for term in header.norm_terms:
        if term.weight <= 0.0:
            continue
        s = 0.0
        for i in term.indices:
            s += x[i] ** term.exponent
        total += term.weight * s ** (1.0 / term.exponent)
    return total


def mp_objective(header, x):
    """High-precision reference evaluator (for finite-difference oracles).

    Plain float differences of the objective lose all digits on gradient
    entries far below the objective scale (large q with spread coordinates),
    so derivative checks difference this one instead.
    """
    import mpmath as mp

    total = mp.mpf(0)
    for term in header.norm_terms:
        if term.weight <= 0.0:
            continue
        s = mp.mpf(0)
        q = mp.mpf(term.exponent)
        for i in term.indices:
            s += mp.mpf(x[i]) ** q
        total += mp.mpf(term.weight) * s ** (1 / q)
    return total


def fd_gradient(header, x, h=1e-6):
    """Central finite differences of the high-precision objective."""
    import mpmath as mp

    with mp.workdps(50):
        out = []
        for i in range(header.n):
            xp = list(x)
            xm = list(x)
            step = h * max(abs(x[i]), 1.0)
            xp[i] = x[i] + step
            xm[i] = x[i] - step
            out.append(
                float((mp_objective(header, xp) - mp_objective(header, xm)) / (2 * step))
            )
    return out
