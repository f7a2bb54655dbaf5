"""Instance generators: seeded random corpora, the l2 block family, fixtures."""

from __future__ import annotations

import numpy as np

from .buyatbulk import BabNetwork
from .model import CoveringConstraint, InstanceHeader, NormTerm
from .netflow import Digraph
from .routing import CapacityGroup, RoutingNetwork

Q_CHOICES = (1.0, 1.5, 2.0, 3.0, 10.0)


def lower_bound_demo_instance(m: int) -> tuple[InstanceHeader, list[CoveringConstraint]]:
    """The l2 block family: n = m*m variables under one Euclidean-norm term.

    Constraint k covers the k-th block of m variables with unit coefficients.
    Each constraint drives its fresh block to 1/m, so the final point is
    (1/m) * 1; the pointwise dual load on the first block exceeds the final
    gradient there by about sqrt(m), while the per-group dual norm stays
    within the certified ceiling.  This is the regression showing why the
    certificate must be per-norm-group rather than pointwise.
    """
    if m < 2:
        raise ValueError("block demo needs m >= 2")
    n = m * m
    header = InstanceHeader(
        n=n,
        norm_terms=(NormTerm(indices=tuple(range(n)), weight=1.0, exponent=2.0),),
        d=n,
        a_min=1.0,
        a_max=1.0,
        disjoint=True,
    )
    constraints = [
        CoveringConstraint(tuple((k * m + j, 1.0) for j in range(m)))
        for k in range(m)
    ]
    return header, constraints


def random_disjoint_instance(
    rng: np.random.Generator,
    n_max: int = 50,
    m_max: int = 100,
    d_max: int = 10,
    rho_max: float = 16.0,
    q_choices=Q_CHOICES,
) -> tuple[InstanceHeader, list[CoveringConstraint]]:
    """Random disjoint-group instance within the given bounds.

    All variables are costed; declared coefficient bounds are the sampling
    bounds, so streamed constraints always validate.
    """
    n = int(rng.integers(2, n_max + 1))
    row_cap = int(rng.integers(1, min(d_max, n) + 1))
    terms = []
    i = 0
    while i < n:
        size = int(rng.integers(1, min(d_max, n - i) + 1))
        terms.append(
            NormTerm(
                indices=tuple(range(i, i + size)),
                weight=float(rng.uniform(0.25, 4.0)),
                exponent=float(rng.choice(q_choices)),
            )
        )
        i += size
    max_group = max(len(t.indices) for t in terms)
    a_min = float(rng.uniform(0.5, 2.0))
    a_max = a_min * float(rng.uniform(1.0, rho_max))
    header = InstanceHeader(
        n=n,
        norm_terms=tuple(terms),
        d=max(row_cap, max_group),
        a_min=a_min,
        a_max=a_max,
        disjoint=True,
    )
    m = int(rng.integers(1, m_max + 1))
    constraints = []
    for _ in range(m):
        k = int(rng.integers(1, row_cap + 1))
        idx = rng.choice(n, size=k, replace=False)
        coef = rng.uniform(a_min, a_max, size=k)
        constraints.append(
            CoveringConstraint(tuple((int(i2), float(a)) for i2, a in zip(idx, coef)))
        )
    return header, constraints


def random_overlapping_instance(
    rng: np.random.Generator,
    n_max: int = 20,
    r_max: int = 5,
    m_max: int = 20,
    rho_max: float = 4.0,
    q_choices=Q_CHOICES,
) -> tuple[InstanceHeader, list[CoveringConstraint]]:
    """Random instance whose norm groups may share variables."""
    n = int(rng.integers(2, n_max + 1))
    r = int(rng.integers(2, r_max + 1))
    terms = []
    for _ in range(r):
        size = int(rng.integers(1, min(6, n) + 1))
        idx = rng.choice(n, size=size, replace=False)
        terms.append(
            NormTerm(
                indices=tuple(int(i) for i in idx),
                weight=float(rng.uniform(0.25, 4.0)),
                exponent=float(rng.choice(q_choices)),
            )
        )
    # make sure every variable is costed so no free saturation kicks in
    covered = {i for t in terms for i in t.indices}
    missing = tuple(sorted(set(range(n)) - covered))
    if missing:
        terms.append(NormTerm(indices=missing, weight=1.0, exponent=2.0))
    max_group = max(len(t.indices) for t in terms)
    row_cap = int(rng.integers(1, min(8, n) + 1))
    a_min = float(rng.uniform(0.5, 2.0))
    a_max = a_min * float(rng.uniform(1.0, rho_max))
    header = InstanceHeader(
        n=n,
        norm_terms=tuple(terms),
        d=max(row_cap, max_group),
        a_min=a_min,
        a_max=a_max,
        disjoint=False,
    )
    m = int(rng.integers(1, m_max + 1))
    constraints = []
    for _ in range(m):
        k = int(rng.integers(1, row_cap + 1))
        idx = rng.choice(n, size=k, replace=False)
        coef = rng.uniform(a_min, a_max, size=k)
        constraints.append(
            CoveringConstraint(tuple((int(i2), float(a)) for i2, a in zip(idx, coef)))
        )
    return header, constraints


def random_tiny_instance(
    rng: np.random.Generator,
    n_max: int = 4,
    m_max: int = 6,
    d_max: int = 4,
    rho_max: float = 4.0,
    q_choices=(1.0, 1.5, 2.0, 3.0),
) -> tuple[InstanceHeader, list[CoveringConstraint]]:
    """Small disjoint instance sized for the grid oracle (n <= 4)."""
    header, constraints = random_disjoint_instance(
        rng, n_max=n_max, m_max=m_max, d_max=d_max, rho_max=rho_max, q_choices=q_choices
    )
    return header, constraints


def disjoint_corpus(seed: int, count: int, **kwargs):
    rng = np.random.default_rng(seed)
    return [random_disjoint_instance(rng, **kwargs) for _ in range(count)]


def overlapping_corpus(seed: int, count: int, **kwargs):
    rng = np.random.default_rng(seed)
    return [random_overlapping_instance(rng, **kwargs) for _ in range(count)]


def tiny_corpus(seed: int, count: int, **kwargs):
    rng = np.random.default_rng(seed)
    return [random_tiny_instance(rng, **kwargs) for _ in range(count)]


def routing_fixture() -> tuple[RoutingNetwork, list[tuple[int, int]]]:
    """Six-edge two-hop network satisfying the high-capacity precondition.

    Three parallel edges 0 -> 1 under an l2 capacity group and three parallel
    edges 1 -> 2 under an l-infinity group; 200 identical requests (0, 2).
    Capacities clear 8*ln(6)*|S|^(1/p) (24.83 and 14.33 respectively).
    """
    graph = Digraph(n=3, edges=((0, 1), (0, 1), (0, 1), (1, 2), (1, 2), (1, 2)))
    network = RoutingNetwork(
        graph=graph,
        groups=(
            CapacityGroup(edges=(0, 1, 2), p=2.0, c=26.0),
            CapacityGroup(edges=(3, 4, 5), p=float("inf"), c=15.0),
        ),
    )
    requests = [(0, 2)] * 200
    return network, requests


def bab_two_node_fixture() -> BabNetwork:
    """Single directed edge with both cost kinds positive."""
    return BabNetwork(
        graph=Digraph(n=2, edges=((0, 1),)),
        fixed_cost=(3.0,),
        incr_cost=(1.0,),
    )


def bab_diamond_fixture() -> BabNetwork:
    """Four nodes, two parallel two-hop routes 0 -> 3 with asymmetric costs."""
    graph = Digraph(n=4, edges=((0, 1), (1, 3), (0, 2), (2, 3)))
    return BabNetwork(
        graph=graph,
        fixed_cost=(2.0, 2.0, 5.0, 5.0),
        incr_cost=(1.0, 1.0, 0.5, 0.5),
    )
