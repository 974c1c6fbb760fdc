import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unatest.domain import ConstantFunction, CountingOracle, GridShape, make_dense
from unatest.generators import gen_b_monotone, gen_no_sample, gen_yes_sample
from unatest.testers import (
    Decision,
    Directions,
    ParameterError,
    TESTERS,
    Verdict,
    WitnessKind,
    WorkInvestmentSchedule,
    adaptive_hypercube_test,
    adaptive_hypergrid_test,
    nonadaptive_hypercube_test,
    nonadaptive_hypergrid_test,
    tree_search_path,
    tree_tester,
    verify_witness,
)

XOR = [0, 1, 1, 0]


def xor_fn():
    return make_dense(GridShape(2, 2), XOR)


def rng(seed):
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# tree search paths


def test_tree_path_examples():
    assert tree_search_path(8, 3) == (3,)
    assert tree_search_path(4, 0) == (1, 0)
    assert tree_search_path(4, 3) == (1, 2, 3)


@given(st.integers(min_value=1, max_value=64), st.data())
def test_tree_path_shape(n, data):
    x = data.draw(st.integers(min_value=0, max_value=n - 1))
    path = tree_search_path(n, x)
    assert path[0] == (n - 1) // 2       # the root
    assert path[-1] == x
    assert len(path) <= int(math.log2(n)) + 1
    assert len(set(path)) == len(path)


def test_tree_path_out_of_range():
    with pytest.raises(Exception):
        tree_search_path(4, 4)


class _FixedX:
    """rng stub steering the tree tester to a chosen target."""

    def __init__(self, x):
        self.x = x

    def integers(self, *a, **k):
        return self.x


class _LineStub:
    def __init__(self, values):
        self.shape = GridShape(len(values), 1)
        self.values = values
        self.count = 0

    def query_index(self, t):
        self.count += 1
        return self.values[t]


def test_tree_tester_exhaustive_example():
    # h = [1, 0, 3, 2]: one outcome of each kind across the four targets
    expected = {0: Directions.DOWN, 1: Directions.NONE,
                2: Directions.UP, 3: Directions.BOTH}
    for x, want in expected.items():
        line = _LineStub([1, 0, 3, 2])
        assert tree_tester(line, _FixedX(x)) is want
        assert line.count == len(tree_search_path(4, x))


def test_tree_tester_monotone_lines():
    for x in range(8):
        assert not tree_tester(_LineStub(list(range(8))), _FixedX(x)) & Directions.DOWN
    for x in range(4):
        got = tree_tester(_LineStub([3, 2, 1, 0]), _FixedX(x))
        want = Directions.NONE if len(tree_search_path(4, x)) == 1 else Directions.DOWN
        assert got is want


# ---------------------------------------------------------------------------
# work-investment schedule


def test_schedule_worked_example():
    s = WorkInvestmentSchedule.build(4, 0.5)
    assert s.r_max == 15
    assert (s.entries[0].r, s.entries[0].reps, s.entries[0].batch) == (1, 89, 6)
    assert s.total_queries == sum(e.reps * 6 * 2**e.r for e in s.entries)


@given(st.integers(min_value=1, max_value=64),
       st.fractions(min_value="1/100", max_value="49/100"))
def test_schedule_entries_positive_nonincreasing(d, eps):
    s = WorkInvestmentSchedule.build(d, float(eps))
    assert s.entries
    assert all(e.reps >= 1 and e.batch == 3 * 2**e.r for e in s.entries)
    reps = [e.reps for e in s.entries]
    assert reps == sorted(reps, reverse=True)
    assert [e.r for e in s.entries] == list(range(1, len(reps) + 1))
    assert s.r_max >= len(s.entries)


def test_eps_range_enforced():
    oracle = CountingOracle(xor_fn())
    for tester in TESTERS.values():
        for bad in (0.0, 0.5, 0.7, -0.1):
            with pytest.raises(ParameterError):
                tester(oracle, bad, rng(0))


# ---------------------------------------------------------------------------
# nonadaptive hypercube tester


def test_na_cube_deterministic_query_count():
    total = WorkInvestmentSchedule.build(5, 0.25).total_queries
    for seed, table in ((0, [0] * 32), (1, list(range(32)))):
        oracle = CountingOracle(make_dense(GridShape(2, 5), table),
                                record_transcript=False)
        verdict = nonadaptive_hypercube_test(oracle, 0.25, rng(seed))
        assert verdict.queries_used == total == oracle.count


def test_na_cube_plan_is_value_independent():
    plans = []
    for table in ([0] * 16, list(range(16))):
        oracle = CountingOracle(make_dense(GridShape(2, 4), table))
        nonadaptive_hypercube_test(oracle, 0.3, rng(7))
        plans.append(sorted(p for p, _ in oracle.transcript))
    assert plans[0] == plans[1]


def test_na_cube_accepts_unate():
    for t in range(20):
        fn, _ = gen_yes_sample(4, rng(t))
        verdict = nonadaptive_hypercube_test(
            CountingOracle(fn, record_transcript=False), 0.1, rng(t))
        assert verdict.decision is Decision.ACCEPT
        assert verdict.witness is None and not verdict.aborted


def test_na_cube_rejects_xor_with_valid_witness():
    fn = xor_fn()
    for t in range(10):
        verdict = nonadaptive_hypercube_test(
            CountingOracle(fn, record_transcript=False), 0.25, rng(t))
        assert verdict.decision is Decision.REJECT
        assert verdict.witness.kind is WitnessKind.EDGE_PAIR
        assert verify_witness(fn, verdict.witness)


def test_na_cube_requires_hypercube():
    with pytest.raises(ParameterError):
        nonadaptive_hypercube_test(
            CountingOracle(ConstantFunction(GridShape(3, 2))), 0.25, rng(0))


# ---------------------------------------------------------------------------
# adaptive hypercube tester


def test_ad_cube_constant_query_count():
    for eps, d in ((0.25, 5), (0.4, 3), (0.125, 8)):
        oracle = CountingOracle(ConstantFunction(GridShape(2, d)))
        verdict = adaptive_hypercube_test(oracle, eps, rng(0))
        assert verdict.decision is Decision.ACCEPT
        assert not verdict.aborted
        assert verdict.queries_used == 2 * d * math.ceil(10 / eps)


def test_ad_cube_rejects_xor():
    # per-pass rejection probability is 3/4; 40 passes make accepts vanish
    fn = xor_fn()
    for t in range(50):
        verdict = adaptive_hypercube_test(
            CountingOracle(fn, record_transcript=False), 0.25, rng(t))
        assert verdict.decision is Decision.REJECT
        assert verify_witness(fn, verdict.witness)


def test_ad_cube_cap_holds_on_far_instances():
    for t in range(30):
        fn, _ = gen_no_sample(8, rng(t))
        cap = 240 * fn.shape.d / 0.125
        verdict = adaptive_hypercube_test(
            CountingOracle(fn, record_transcript=False), 0.125, rng(t))
        assert verdict.queries_used <= cap


def test_verdict_invariants():
    with pytest.raises(ValueError):
        Verdict(Decision.REJECT, 4, witness=None)
    with pytest.raises(ValueError):
        Verdict(Decision.REJECT, 4, witness=object(), aborted=True)


# ---------------------------------------------------------------------------
# hypergrid testers


def test_ad_grid_accepts_unate_grids():
    shape = GridShape(5, 3)
    for t in range(20):
        r = rng(t)
        fn = gen_b_monotone(shape, r.integers(0, 2, 3), r)
        verdict = adaptive_hypergrid_test(
            CountingOracle(fn, record_transcript=False), 0.2, r)
        assert verdict.decision is Decision.ACCEPT


def test_ad_grid_rejects_far_line_with_tree_witness():
    fn = make_dense(GridShape(4, 1), [1, 0, 3, 2])
    rejected = 0
    for t in range(40):
        verdict = adaptive_hypergrid_test(
            CountingOracle(fn, record_transcript=False), 0.25, rng(t))
        if verdict.decision is Decision.REJECT:
            rejected += 1
            assert verdict.witness.kind is WitnessKind.TREE_PATH
            assert verify_witness(fn, verdict.witness)
    assert rejected >= 30


def test_ad_grid_matches_ad_cube_on_hypercubes():
    # for n=2 the tree probe reduces to edge behavior; compare rejection
    # rates on an instance with an intermediate rejection probability
    fn = make_dense(GridShape(2, 3), [0, 1, 0, 1, 0, 1, 1, 0])
    trials = 1500
    rates = []
    for tester in (adaptive_hypercube_test, adaptive_hypergrid_test):
        hits = sum(
            tester(CountingOracle(fn, record_transcript=False), 0.49, rng(t)
                   ).decision is Decision.REJECT
            for t in range(trials)
        )
        rates.append(hits / trials)
    # ~3.5 sigma band for a binomial at these rates
    assert abs(rates[0] - rates[1]) < 0.05


def test_na_grid_phase1_rejects_certain_far_line():
    # per phase-1 iteration the tree probe sees both directions w.p. 1/4;
    # 880 iterations make acceptance essentially impossible
    fn = make_dense(GridShape(4, 1), [1, 0, 3, 2])
    for t in range(10):
        verdict = nonadaptive_hypergrid_test(
            CountingOracle(fn, record_transcript=False), 0.25, rng(t))
        assert verdict.decision is Decision.REJECT
        assert verify_witness(fn, verdict.witness)


def test_na_grid_accepts_unate_and_counts_all_queries():
    shape = GridShape(4, 2)
    r = rng(3)
    fn = gen_b_monotone(shape, [1, 0], r)
    oracle = CountingOracle(fn, record_transcript=False)
    verdict = nonadaptive_hypergrid_test(oracle, 0.3, r)
    assert verdict.decision is Decision.ACCEPT
    assert verdict.queries_used == oracle.count


def test_na_grid_plan_is_value_independent():
    shape = GridShape(3, 2)
    plans = []
    for table in ([0] * 9, list(range(9))):
        oracle = CountingOracle(make_dense(shape, table))
        nonadaptive_hypergrid_test(oracle, 0.45, rng(11))
        plans.append(sorted(p for p, _ in oracle.transcript))
    assert plans[0] == plans[1]


# ---------------------------------------------------------------------------
# cross-tester properties


@pytest.mark.parametrize("tester_id", sorted(TESTERS))
def test_determinism(tester_id):
    fn, _ = gen_no_sample(4, rng(5))
    target = fn if tester_id.endswith("cube") else \
        make_dense(GridShape(4, 2), [1, 0, 3, 2, 2, 2, 2, 2, 0, 0, 1, 1, 5, 5, 5, 4])
    results = []
    for _ in range(2):
        oracle = CountingOracle(target)
        verdict = TESTERS[tester_id](oracle, 0.125, rng(21))
        results.append((verdict, tuple(oracle.transcript)))
    assert results[0] == results[1]


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_rejections_always_carry_verifiable_witnesses(seed):
    r = rng(seed)
    table = r.integers(0, 3, size=16)
    fn = make_dense(GridShape(2, 4), table)
    for tester_id in sorted(TESTERS):
        verdict = TESTERS[tester_id](
            CountingOracle(fn, record_transcript=False), 0.3, rng(seed + 1))
        if verdict.decision is Decision.REJECT:
            assert verify_witness(fn, verdict.witness)
