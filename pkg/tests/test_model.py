import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from normcover.errors import (
    DomainError,
    HeaderViolationError,
    InvalidInstanceError,
    SingularGradientError,
)
from normcover.model import (
    UNCOSTED,
    CoveringConstraint,
    InstanceHeader,
    NormTerm,
    dual_exponent,
    eval_gradient,
    eval_objective,
    group_index,
    instance_stats,
    norm_q,
)

from conftest import brute_objective, single_term_header


def test_dual_exponent_values():
    assert dual_exponent(2.0) == 2.0
    assert dual_exponent(1.0) == math.inf
    assert dual_exponent(1.5) == pytest.approx(3.0, rel=1e-15)


def test_dual_exponent_rejects_bad_q():
    with pytest.raises(InvalidInstanceError):
        dual_exponent(0.5)
    with pytest.raises(InvalidInstanceError):
        dual_exponent(float("nan"))


def test_norm_term_validation():
    with pytest.raises(InvalidInstanceError):
        NormTerm((), 1.0, 2.0)
    with pytest.raises(InvalidInstanceError):
        NormTerm((0, 0), 1.0, 2.0)
    with pytest.raises(InvalidInstanceError):
        NormTerm((0,), -1.0, 2.0)
    t = NormTerm((0, 1), 1.0, 1.0)
    assert t.dual == math.inf


def test_constraint_validation():
    with pytest.raises(InvalidInstanceError):
        CoveringConstraint(())
    with pytest.raises(InvalidInstanceError):
        CoveringConstraint(((0, 0.0),))
    with pytest.raises(InvalidInstanceError):
        CoveringConstraint(((0, 1.0), (0, 2.0)))


def test_header_validation():
    with pytest.raises(InvalidInstanceError):
        InstanceHeader(n=2, norm_terms=(NormTerm((0, 1), 1.0, 2.0),), d=1, a_min=1, a_max=1)
    with pytest.raises(InvalidInstanceError):
        InstanceHeader(n=1, norm_terms=(), d=1, a_min=2.0, a_max=1.0)
    with pytest.raises(InvalidInstanceError):
        InstanceHeader(n=1, norm_terms=(NormTerm((1,), 1.0, 2.0),), d=1, a_min=1, a_max=1)
    with pytest.raises(InvalidInstanceError):
        InstanceHeader(
            n=2,
            norm_terms=(NormTerm((0, 1), 1.0, 2.0), NormTerm((1,), 1.0, 1.0)),
            d=2,
            a_min=1,
            a_max=1,
            disjoint=True,
        )


def test_group_index_marks_uncosted_and_zero_weight():
    header = InstanceHeader(
        n=3,
        norm_terms=(NormTerm((0,), 1.0, 2.0), NormTerm((1,), 0.0, 2.0)),
        d=3,
        a_min=1,
        a_max=1,
    )
    owner = group_index(header)
    assert owner[0] == 0
    assert owner[1] == UNCOSTED
    assert owner[2] == UNCOSTED


def test_group_index_rejects_overlap():
    header = InstanceHeader(
        n=2,
        norm_terms=(NormTerm((0, 1), 1.0, 2.0), NormTerm((1,), 1.0, 1.0)),
        d=2,
        a_min=1,
        a_max=1,
    )
    with pytest.raises(InvalidInstanceError):
        group_index(header)


def test_objective_three_four_five():
    header = single_term_header(2, 1.0, 2.0)
    assert eval_objective(header, [3.0, 4.0]) == pytest.approx(5.0, rel=1e-14)


def test_objective_zero_point():
    header = single_term_header(3, 2.0, 3.0)
    assert eval_objective(header, [0.0, 0.0, 0.0]) == 0.0


def test_objective_two_terms_hand_value():
    # 1 * |x0| + 2 * ||(x1, x2)||_2 at the all-ones point, against the
    # scalar brute-force evaluator
    header = InstanceHeader(
        n=3,
        norm_terms=(NormTerm((0,), 1.0, 1.0), NormTerm((1, 2), 2.0, 2.0)),
        d=2,
        a_min=1,
        a_max=1,
        disjoint=True,
    )
    x = [1.0, 1.0, 1.0]
    val = eval_objective(header, x)
    assert val == pytest.approx(1.0 + 2.0 * math.sqrt(2.0), rel=1e-14)
    assert val == pytest.approx(brute_objective(header, x), rel=1e-14)


def test_objective_rejects_negative():
    header = single_term_header(2, 1.0, 2.0)
    with pytest.raises(DomainError):
        eval_objective(header, [1.0, -0.5])


def test_gradient_euclidean():
    header = single_term_header(2, 1.0, 2.0)
    g = eval_gradient(header, [3.0, 4.0])
    assert g == pytest.approx([0.6, 0.8], rel=1e-14)


def test_gradient_linear_term():
    header = single_term_header(1, 5.0, 1.0)
    assert eval_gradient(header, [0.37])[0] == 5.0


def test_gradient_cubic_finite_difference():
    header = single_term_header(2, 2.0, 3.0)
    x = np.array([1.0, 1.0])
    g = eval_gradient(header, x)
    assert g == pytest.approx([2.0 ** (1.0 / 3.0)] * 2, rel=1e-12)
    h = 1e-6
    for i in range(2):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        fd = (eval_objective(header, xp) - eval_objective(header, xm)) / (2 * h)
        assert g[i] == pytest.approx(fd, rel=1e-6)


def test_gradient_singular():
    header = single_term_header(2, 1.0, 2.0)
    with pytest.raises(SingularGradientError):
        eval_gradient(header, [0.0, 1.0])


def test_instance_stats_examples():
    header = InstanceHeader(
        n=2,
        norm_terms=(NormTerm((0,), 1.0, 2.0), NormTerm((1,), 1.0, 2.0)),
        d=2,
        a_min=1.0,
        a_max=4.0,
        disjoint=True,
    )
    stats = instance_stats(header, [CoveringConstraint(((0, 1.0), (1, 1.0)))])
    assert stats.d == 2 and stats.rho == 1.0
    stats = instance_stats(
        header,
        [CoveringConstraint(((0, 1.0),)), CoveringConstraint(((1, 4.0),))],
    )
    assert stats.rho == 4.0


def test_instance_stats_block_family():
    # the l2 block family at m = 4: rows have 4 entries but the single norm
    # group spans all 16 variables, and d is the max of the two
    from normcover.generators import lower_bound_demo_instance

    header, constraints = lower_bound_demo_instance(4)
    stats = instance_stats(header, constraints)
    assert stats.d == 16
    assert stats.rho == 1.0
    assert max(len(c.entries) for c in constraints) == 4


def test_instance_stats_header_violation():
    header = single_term_header(2, 1.0, 2.0, d=2, a_min=1.0, a_max=2.0)
    with pytest.raises(HeaderViolationError):
        instance_stats(header, [CoveringConstraint(((0, 4.0),))])
    with pytest.raises(HeaderViolationError):
        instance_stats(header, [CoveringConstraint(((5, 1.0),))])


small_instances = st.integers(min_value=1, max_value=6).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(
            st.sampled_from([1.0, 1.5, 2.0, 3.0, 10.0]), min_size=1, max_size=max(1, n)
        ),
        st.lists(
            st.floats(min_value=0.1, max_value=5.0), min_size=n, max_size=n
        ),
    )
)


def _build_header(n, exponents):
    # chop [0, n) into consecutive groups cycling over the sampled exponents
    terms = []
    i = 0
    k = 0
    while i < n:
        size = min(n - i, 1 + (k % 3))
        terms.append(NormTerm(tuple(range(i, i + size)), 1.0 + 0.5 * k, exponents[k % len(exponents)]))
        i += size
        k += 1
    return InstanceHeader(n=n, norm_terms=tuple(terms), d=n, a_min=1, a_max=1, disjoint=True)


@settings(max_examples=50, deadline=None)
@given(small_instances)
def test_gradient_matches_finite_differences(data):
    from conftest import fd_gradient

    n, exponents, xs = data
    header = _build_header(n, exponents)
    x = np.array(xs)
    g = eval_gradient(header, x)
    fd = fd_gradient(header, list(x))
    for i in range(n):
        assert g[i] == pytest.approx(fd[i], rel=1e-5)


@settings(max_examples=50, deadline=None)
@given(small_instances)
def test_euler_identity(data):
    # norms are 1-homogeneous: x . grad f(x) = f(x)
    n, exponents, xs = data
    header = _build_header(n, exponents)
    x = np.array(xs)
    g = eval_gradient(header, x)
    assert float(x @ g) == pytest.approx(eval_objective(header, x), rel=1e-8)


@settings(max_examples=50, deadline=None)
@given(small_instances, st.lists(st.floats(min_value=0.0, max_value=2.0), min_size=6, max_size=6))
def test_objective_monotone(data, bumps):
    n, exponents, xs = data
    header = _build_header(n, exponents)
    x = np.array(xs)
    x2 = x + np.array(bumps[:n])
    assert eval_objective(header, x2) >= eval_objective(header, x) - 1e-12


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(min_value=1e-4, max_value=1e2), min_size=1, max_size=8),
    st.sampled_from([1.5, 2.0, 3.0, 7.0, 10.0, 16.0]),
)
def test_log_and_direct_norms_agree(values, q):
    vals = np.array(values)
    direct = norm_q(vals, q, method="direct")
    logd = norm_q(vals, q, method="log")
    assert logd == pytest.approx(direct, rel=1e-10)
