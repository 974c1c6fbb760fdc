"""Unateness testers over hypercubes and hypergrids.

A function on ``[n]^d`` is unate when every coordinate is either nondecreasing
or nonincreasing (direction may vary per coordinate).  This package bundles
randomized query testers for unateness, hard-instance generators, exact
ground-truth distance oracles, and a reproducible experiment harness.
"""

from .domain import (
    CapacityError,
    ConstantFunction,
    CountingOracle,
    DenseFunction,
    DomainError,
    Function,
    GridShape,
    PairClass,
    classify_pair,
    dense_from_json,
    function_to_json,
    make_dense,
    restrict_to_line,
    sample_i_edge,
    sample_i_pair,
)
from .generators import (
    GridLiftParams,
    HardInstanceRecord,
    cap_c,
    cap_set,
    gen_adaptive_lb_family,
    gen_b_monotone,
    gen_no_sample,
    gen_yes_sample,
    lift_hypercube_to_hypergrid,
)
from .groundtruth import (
    DistanceCertificate,
    MuProfile,
    dist_b_monotone_exact,
    dist_line_monotone,
    dist_unate_exact,
    dist_unate_matching_lb,
    is_unate_exact,
    mu_profile,
    no_family_distance_lb,
    tree_tester_exact,
)
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    query_scaling_sweep,
    run_experiment,
    verify_suite,
    wilson_interval,
)
from .testers import (
    Decision,
    Directions,
    TESTERS,
    Verdict,
    ViolationWitness,
    WorkInvestmentSchedule,
    adaptive_hypercube_test,
    adaptive_hypergrid_test,
    nonadaptive_hypercube_test,
    nonadaptive_hypergrid_test,
    tree_search_path,
    tree_tester,
    verify_witness,
)

__version__ = "0.1.0"
