from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unatest.domain import CapacityError, ConstantFunction, GridShape, make_dense
from unatest.generators import (
    HardInstanceRecord,
    gen_adaptive_lb_family,
    gen_b_monotone,
    gen_no_sample,
    gen_yes_sample,
)
from unatest.groundtruth import (
    CertificateKind,
    CertificateMethod,
    decreasing_pair_fraction,
    dist_b_monotone_exact,
    dist_line_antimonotone,
    dist_line_monotone,
    dist_unate_exact,
    dist_unate_matching_lb,
    is_unate_exact,
    mu_profile,
    no_family_distance_lb,
    tree_tester_exact,
)
from unatest.testers import Directions, verify_witness

XOR = make_dense(GridShape(2, 2), [0, 1, 1, 0])


def rng(seed):
    return np.random.default_rng(seed)


def brute_force_lns(values):
    best = 0
    n = len(values)
    for size in range(n, 0, -1):
        for keep in combinations(range(n), size):
            sub = [values[i] for i in keep]
            if all(a <= b for a, b in zip(sub, sub[1:])):
                return size
    return 0


# ---------------------------------------------------------------------------
# line distances


def test_line_distance_examples():
    assert dist_line_monotone([0, 0, 1, 5]) == 0
    assert dist_line_monotone([4, 3, 2, 1]) == Fraction(3, 4)
    assert dist_line_monotone([1, 0, 3, 2]) == Fraction(1, 2)
    assert dist_line_antimonotone([4, 3, 2, 1]) == 0


@settings(max_examples=150)
@given(st.lists(st.integers(min_value=-3, max_value=3), min_size=1, max_size=7))
def test_line_distance_matches_brute_force(values):
    n = len(values)
    assert dist_line_monotone(values) == Fraction(n - brute_force_lns(values), n)


# ---------------------------------------------------------------------------
# unateness scan


def test_is_unate_constant_and_xor():
    assert is_unate_exact(ConstantFunction(GridShape(2, 3)))[0]
    ok, witness = is_unate_exact(XOR)
    assert not ok
    assert verify_witness(XOR, witness)


def test_is_unate_on_grid():
    fn = make_dense(GridShape(4, 1), [1, 0, 3, 2])
    ok, witness = is_unate_exact(fn)
    assert not ok and witness.dimension == 0
    assert verify_witness(fn, witness)


def test_is_unate_capacity_error():
    with pytest.raises(CapacityError):
        is_unate_exact(ConstantFunction(GridShape(2, 30)))


# ---------------------------------------------------------------------------
# exact distances


def test_dist_b_monotone_examples():
    assert dist_b_monotone_exact(ConstantFunction(GridShape(2, 2)), [0, 0]) == 0
    assert dist_b_monotone_exact(XOR, [0, 0]) == Fraction(1, 4)
    line = make_dense(GridShape(4, 1), [4, 3, 2, 1])
    assert dist_b_monotone_exact(line, [0]) == dist_line_monotone([4, 3, 2, 1])
    assert dist_b_monotone_exact(line, [1]) == 0


def test_dist_unate_examples():
    cert = dist_unate_exact(XOR)
    assert cert.value == Fraction(1, 4)
    assert cert.kind is CertificateKind.EXACT
    g, _ = gen_adaptive_lb_family(4, 1, Fraction(1, 4), 1, 1)
    assert dist_unate_exact(g).value >= Fraction(1, 4)
    fn, _ = gen_yes_sample(4, rng(0))
    assert dist_unate_exact(fn).value == 0


def test_matching_lb_dominated_by_exact():
    assert dist_unate_matching_lb(XOR).value == Fraction(1, 4)
    for t in range(50):
        fn = make_dense(GridShape(2, 3), rng(t).integers(0, 4, size=8))
        lb = dist_unate_matching_lb(fn)
        assert lb.kind is CertificateKind.LOWER_BOUND
        assert lb.value <= dist_unate_exact(fn).value


def test_matching_lb_zero_on_unate():
    for t in range(10):
        r = rng(t)
        fn = gen_b_monotone(GridShape(2, 4), r.integers(0, 2, 4), r)
        assert dist_unate_matching_lb(fn).value == 0


# ---------------------------------------------------------------------------
# structural lower bound for the adversarial family


def test_no_family_lb_one_sided_orientation_is_zero():
    record = HardInstanceRecord(d=4, k=1, R=(0, 3), r=(0, 3, 0, 3),
                                alpha=(1, 1, 1, 1), beta=(1, 1, 1, 1))
    assert no_family_distance_lb(record).value == 0


def test_no_family_lb_balanced_orientations_quarter():
    # each special dimension used by 2 subcubes, split evenly by sign
    record = HardInstanceRecord(d=4, k=1, R=(1, 2), r=(1, 1, 2, 2),
                                alpha=(1, 1, 1, 1), beta=(1, -1, 1, -1))
    cert = no_family_distance_lb(record)
    assert cert.value == Fraction(1, 4)
    assert cert.method is CertificateMethod.STRUCTURAL_NO_FAMILY


def test_no_family_lb_dominated_by_exact_distance():
    for t in range(25):
        fn, record = gen_no_sample(4, rng(t))
        assert no_family_distance_lb(record).value <= dist_unate_exact(fn).value


# ---------------------------------------------------------------------------
# mu-profiles


def test_mu_profile_xor_and_monotone():
    profile = mu_profile(XOR)
    assert profile.alpha == (Fraction(1, 2), Fraction(1, 2))
    assert profile.beta == (Fraction(1, 2), Fraction(1, 2))
    assert profile.mu == (Fraction(1, 2), Fraction(1, 2))
    mono = make_dense(GridShape(2, 2), [0, 1, 2, 3])
    assert all(a == 0 for a in mu_profile(mono).alpha)


def test_mu_profile_hypercube_edge_fractions_sum_bound():
    for t in range(20):
        fn = make_dense(GridShape(2, 3), rng(t).integers(0, 4, size=8))
        profile = mu_profile(fn)
        assert all(0 <= a <= 1 and 0 <= b <= 1 and a + b <= 1
                   for a, b in zip(profile.alpha, profile.beta))


@pytest.mark.parametrize("n,d_max", [(2, 4), (4, 3)])
def test_dimension_reduction_inequality(n, d_max):
    for t in range(40):
        r = rng(t)
        d = int(r.integers(1, d_max + 1))
        fn = make_dense(GridShape(n, d), r.integers(0, 6, size=n**d))
        profile = mu_profile(fn)
        eps_star = dist_b_monotone_exact(fn, profile.b_star)
        assert profile.mu_total >= Fraction(eps_star, 4)


def test_oracle_consistency_unate_iff_zero_distance():
    for t in range(30):
        fn = make_dense(GridShape(2, 3), rng(t).integers(0, 3, size=8))
        assert (dist_unate_exact(fn).value == 0) == is_unate_exact(fn)[0]


# ---------------------------------------------------------------------------
# exact tree-tester distribution


def test_tree_tester_exact_worked_example():
    probs = tree_tester_exact([1, 0, 3, 2])
    assert probs == {
        Directions.NONE: Fraction(1, 4),
        Directions.UP: Fraction(1, 4),
        Directions.DOWN: Fraction(1, 4),
        Directions.BOTH: Fraction(1, 4),
    }


def test_tree_tester_exact_monotone_has_no_down():
    probs = tree_tester_exact(list(range(8)))
    assert probs[Directions.DOWN] == 0 and probs[Directions.BOTH] == 0


@settings(max_examples=200)
@given(st.lists(st.integers(min_value=0, max_value=5), min_size=1, max_size=8))
def test_down_probability_dominates_distance(values):
    probs = tree_tester_exact(values)
    down = probs[Directions.DOWN] + probs[Directions.BOTH]
    assert down >= dist_line_monotone(values)


@settings(max_examples=200)
@given(st.lists(st.integers(min_value=0, max_value=5), min_size=2, max_size=8))
def test_far_line_dichotomy(values):
    eps = dist_line_monotone(values)
    if eps == 0:
        return
    both = tree_tester_exact(values)[Directions.BOTH]
    assert both >= eps / 25 or decreasing_pair_fraction(values) >= eps / 25


def test_decreasing_pair_fraction():
    assert decreasing_pair_fraction([3, 2, 1]) == 1
    assert decreasing_pair_fraction([1, 2, 3]) == 0
    assert decreasing_pair_fraction([1, 0, 3, 2]) == Fraction(2, 6)
