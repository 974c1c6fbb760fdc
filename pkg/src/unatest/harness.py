"""Reproducible Monte-Carlo experiment driver.

Each trial derives its own RNG stream from ``(master seed, trial index)``, so
reports are deterministic regardless of how trials are scheduled.  Reports are
self-auditing: the aggregate block is recomputable from the per-trial rows.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import generators, groundtruth, testers
from .domain import ConstantFunction, CountingOracle, DomainError, Function, GridShape

TESTER_IDS = ("na-cube", "ad-cube", "na-grid", "ad-grid")
CERTIFY_MODES = ("none", "exact", "lower-bound")


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    """Per-trial stream: deterministic and independent across trials."""
    return np.random.default_rng(np.random.SeedSequence([master_seed, trial]))


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


# ---------------------------------------------------------------------------
# Instance families


def make_instance(spec: dict, rng) -> tuple[Function, Optional[generators.HardInstanceRecord]]:
    """Instantiate one function from a family spec.

    Specs: {"family": "constant"|"bmono"|"yes"|"no"|"glift", ...params}.
    Hypercube families accept "lift_n" to lift the sample onto [n]^d.
    """
    family = spec.get("family")
    record = None
    if family == "constant":
        fn: Function = ConstantFunction(GridShape(int(spec.get("n", 2)), int(spec["d"])))
    elif family == "bmono":
        shape = GridShape(int(spec.get("n", 2)), int(spec["d"]))
        b = spec.get("b")
        if b is None:
            b = [int(v) for v in rng.integers(0, 2, size=shape.d)]
        fn = generators.gen_b_monotone(shape, b, rng)
    elif family == "yes":
        fn, record = generators.gen_yes_sample(int(spec["d"]), rng)
    elif family == "no":
        fn, record = generators.gen_no_sample(int(spec["d"]), rng)
    elif family == "glift":
        mp = generators.GridLiftParams(
            n=int(spec["n"]), d=int(spec["d"]), eps=Fraction(spec["eps"]),
            j=1, k=1,
        )
        j = int(spec["j"]) if "j" in spec else int(rng.integers(1, mp.m_prime + 1))
        k = int(spec["k"]) if "k" in spec else int(rng.integers(1, mp.num_slabs + 1))
        fn, _ = generators.gen_adaptive_lb_family(mp.n, mp.d, mp.eps, j, k)
    else:
        raise DomainError(f"unknown instance family: {family!r}")
    if "lift_n" in spec and spec["lift_n"] is not None:
        fn = generators.lift_hypercube_to_hypergrid(fn, int(spec["lift_n"]))
    if spec.get("dense"):
        fn = fn.to_dense()
    return fn, record


# ---------------------------------------------------------------------------
# Experiments


@dataclass(frozen=True)
class ExperimentConfig:
    tester: str
    family: dict
    eps: float
    trials: int
    seed: int
    certify: str = "none"               # none | exact | lower-bound
    threshold: Optional[Fraction] = None
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.tester not in TESTER_IDS:
            raise DomainError(f"unknown tester id {self.tester!r}")
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        if not 0 < self.eps < 0.5:
            raise DomainError("eps must be in (0, 1/2)")
        if self.certify not in CERTIFY_MODES:
            raise DomainError(f"unknown certification mode {self.certify!r}")
        if self.certify != "none":
            if self.threshold is None or not 0 < self.threshold <= 1:
                raise DomainError("certification threshold must be in (0, 1]")
        if self.jobs < 1:
            raise DomainError("jobs must be >= 1")

    def to_json(self) -> dict:
        return {
            "tester": self.tester,
            "family": self.family,
            "eps": self.eps,
            "trials": self.trials,
            "seed": self.seed,
            "certify": self.certify,
            "threshold": None if self.threshold is None
            else [self.threshold.numerator, self.threshold.denominator],
            "jobs": self.jobs,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentConfig":
        threshold = doc.get("threshold")
        if isinstance(threshold, (list, tuple)):
            threshold = Fraction(threshold[0], threshold[1])
        elif threshold is not None:
            threshold = Fraction(threshold)
        return cls(
            tester=doc["tester"],
            family=dict(doc["family"]),
            eps=float(doc["eps"]),
            trials=int(doc["trials"]),
            seed=int(doc["seed"]),
            certify=doc.get("certify", "none"),
            threshold=threshold,
            jobs=int(doc.get("jobs", 1)),
        )


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    rejected: bool
    queries: int
    aborted: bool
    certified: Optional[Fraction]   # certified distance, if requested
    included: bool                  # counted in the conditional rejection rate

    def to_json(self) -> dict:
        return {
            "trial": self.trial,
            "rejected": self.rejected,
            "queries": self.queries,
            "aborted": self.aborted,
            "certified": None if self.certified is None
            else [self.certified.numerator, self.certified.denominator],
            "included": self.included,
        }


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    records: tuple[TrialRecord, ...]
    version: str = "unatest 0.1.0"

    @property
    def aggregates(self) -> dict:
        included = [r for r in self.records if r.included]
        rejected = sum(r.rejected for r in included)
        queries = [r.queries for r in self.records]
        lo, hi = wilson_interval(rejected, len(included))
        return {
            "trials": len(self.records),
            "included": len(included),
            "rejections": rejected,
            "rejection_rate": rejected / len(included) if included else None,
            "wilson95": [lo, hi],
            "queries_mean": float(np.mean(queries)),
            "queries_max": int(np.max(queries)),
            "queries_p50": float(np.percentile(queries, 50)),
            "queries_p95": float(np.percentile(queries, 95)),
            "aborts": sum(r.aborted for r in self.records),
        }

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "version": self.version,
            "aggregates": self.aggregates,
            "trials": [r.to_json() for r in self.records],
        }


def _run_trial(config: ExperimentConfig, trial: int) -> TrialRecord:
    rng = trial_rng(config.seed, trial)
    fn, record = make_instance(config.family, rng)
    certified: Optional[Fraction] = None
    included = True
    if config.certify == "lower-bound":
        if record is None:
            raise DomainError("lower-bound certification needs a hard-instance family")
        certified = groundtruth.no_family_distance_lb(record).value
        included = certified >= config.threshold
    elif config.certify == "exact":
        certified = groundtruth.dist_unate_exact(fn).value
        included = certified >= config.threshold
    oracle = CountingOracle(fn, record_transcript=False)
    verdict = testers.TESTERS[config.tester](oracle, config.eps, rng)
    return TrialRecord(
        trial=trial,
        rejected=verdict.decision is testers.Decision.REJECT,
        queries=verdict.queries_used,
        aborted=verdict.aborted,
        certified=certified,
        included=included,
    )


def _run_trial_star(args) -> TrialRecord:
    return _run_trial(*args)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run all trials and assemble the report; deterministic given the
    config, independent of the parallelism width."""
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            records = list(
                pool.map(
                    _run_trial_star,
                    ((config, t) for t in range(config.trials)),
                    chunksize=max(1, config.trials // (config.jobs * 8)),
                )
            )
    else:
        records = [_run_trial(config, t) for t in range(config.trials)]
    records.sort(key=lambda r: r.trial)
    return ExperimentReport(config=config, records=tuple(records))


# ---------------------------------------------------------------------------
# Query scaling sweeps


def query_scaling_sweep(
    tester: str,
    eps: float,
    d_values: Sequence[int] = (),
    n_values: Sequence[int] = (),
    d: Optional[int] = None,
    seed: int = 0,
    trials: int = 100,
    family: Optional[dict] = None,
) -> list[dict]:
    """Query counts across a parameter range.

    The nonadaptive hypercube tester has a closed-form exact count; the other
    testers report means over trials on the given family (default: constant
    functions, the adaptive testers' worst accepting case of zero early
    exits)."""
    if tester not in TESTER_IDS:
        raise DomainError(f"unknown tester id {tester!r}")
    rows = []
    if tester == "na-cube":
        for dv in d_values:
            schedule = testers.WorkInvestmentSchedule.build(dv, eps)
            rows.append({"tester": tester, "d": dv, "n": 2, "eps": eps,
                         "queries": schedule.total_queries, "exact": True})
        return rows

    combos: list[tuple[int, int]]
    if n_values:
        if d is None:
            raise DomainError("n sweep needs a fixed d")
        combos = [(nv, d) for nv in n_values]
    else:
        combos = [(2, dv) for dv in d_values]
    for nv, dv in combos:
        fam = dict(family) if family else {"family": "constant"}
        fam.setdefault("n", nv)
        fam.setdefault("d", dv)
        config = ExperimentConfig(tester=tester, family=fam, eps=eps,
                                  trials=trials, seed=seed)
        report = run_experiment(config)
        rows.append({"tester": tester, "d": dv, "n": nv, "eps": eps,
                     "queries": report.aggregates["queries_mean"], "exact": False})
    return rows


# ---------------------------------------------------------------------------
# Verification suite


def _check_tree_paths(rng) -> tuple[bool, str]:
    got = (
        testers.tree_search_path(8, 3),
        testers.tree_search_path(4, 0),
        testers.tree_search_path(4, 3),
    )
    want = ((3,), (1, 0), (1, 2, 3))
    return got == want, f"paths {got}"


def _check_schedule(rng) -> tuple[bool, str]:
    s = testers.WorkInvestmentSchedule.build(4, 0.5)
    ok = s.r_max == 15 and s.entries[0].reps == 89 and s.entries[0].r == 1
    ok = ok and all(a.reps >= b.reps for a, b in zip(s.entries, s.entries[1:]))
    return ok, f"r_max={s.r_max}, s_1={s.entries[0].reps}"


def _check_determinism(rng) -> tuple[bool, str]:
    fn, _ = generators.gen_no_sample(4, trial_rng(7, 0))
    runs = []
    for _ in range(2):
        oracle = CountingOracle(fn)
        verdict = testers.nonadaptive_hypercube_test(oracle, 0.125, trial_rng(7, 1))
        runs.append((verdict.decision, verdict.queries_used, verdict.witness,
                     tuple(oracle.transcript)))
    return runs[0] == runs[1], f"decision={runs[0][0].value}"


def _check_nonadaptive_plan(rng) -> tuple[bool, str]:
    shape = GridShape(2, 6)
    f1 = ConstantFunction(shape)
    f2 = generators.gen_b_monotone(shape, [0] * 6, trial_rng(9, 0))
    plans = []
    for f in (f1, f2):
        oracle = CountingOracle(f)
        testers.nonadaptive_hypercube_test(oracle, 0.25, trial_rng(9, 1))
        plans.append(sorted(p for p, _ in oracle.transcript))
    return plans[0] == plans[1], f"{len(plans[0])} queries"


def _one_sided(trials: int):
    def check(rng) -> tuple[bool, str]:
        bad = 0
        for t in range(trials):
            r = trial_rng(11, t)
            fn, _ = generators.gen_yes_sample(4, r)
            lifted = generators.lift_hypercube_to_hypergrid(fn, 4)
            for tester_id in TESTER_IDS:
                target = fn if tester_id.endswith("cube") else lifted
                verdict = testers.TESTERS[tester_id](
                    CountingOracle(target, record_transcript=False), 0.45, r
                )
                bad += verdict.decision is testers.Decision.REJECT
        return bad == 0, f"{bad} rejections over {trials} trials x 4 testers"
    return check


def _check_witness_soundness(rng) -> tuple[bool, str]:
    from .domain import make_dense
    xor = make_dense(GridShape(2, 2), [0, 1, 1, 0])
    for t in range(200):
        verdict = testers.adaptive_hypercube_test(
            CountingOracle(xor), 0.25, trial_rng(13, t)
        )
        if verdict.decision is testers.Decision.REJECT:
            ok = testers.verify_witness(xor, verdict.witness)
            return ok, "witness re-verified"
    return False, "no rejection observed on an antimonotone instance"


def _check_exact_oracles(rng) -> tuple[bool, str]:
    from .domain import make_dense
    xor = make_dense(GridShape(2, 2), [0, 1, 1, 0])
    checks = [
        groundtruth.dist_unate_exact(xor).value == Fraction(1, 4),
        groundtruth.dist_line_monotone([1, 0, 3, 2]) == Fraction(1, 2),
        groundtruth.tree_tester_exact([1, 0, 3, 2])[testers.Directions.BOTH]
        == Fraction(1, 4),
        groundtruth.dist_unate_matching_lb(xor).value == Fraction(1, 4),
    ]
    return all(checks), f"{sum(checks)}/{len(checks)} oracle identities"


def _check_cap_bound(rng) -> tuple[bool, str]:
    for _ in range(200):
        size = int(rng.integers(2, 21))
        dim = int(rng.integers(1, 65))
        c = int(rng.integers(1, 9))
        V = [tuple(int(v) for v in rng.integers(0, 4, size=dim)) for _ in range(size)]
        distinct = len(set(V))
        if distinct < 2:
            continue
        if len(generators.cap_set(V, c)) > c * (distinct - 1):
            return False, f"violated at |V|={distinct}, c={c}"
    return True, "bound held on all sampled sets"


def _check_no_family_lb(rng) -> tuple[bool, str]:
    for t in range(10):
        fn, record = generators.gen_no_sample(4, trial_rng(17, t))
        lb = groundtruth.no_family_distance_lb(record).value
        exact = groundtruth.dist_unate_exact(fn).value
        if lb > exact:
            return False, f"lb {lb} > exact {exact}"
    return True, "lower bound dominated by exact distance"


def _check_dimension_reduction(rng) -> tuple[bool, str]:
    from .domain import make_dense
    for t in range(30):
        r = trial_rng(19, t)
        shape = GridShape(2, int(r.integers(2, 5)))
        fn = make_dense(shape, r.integers(0, 5, size=shape.size))
        profile = groundtruth.mu_profile(fn)
        eps_star = groundtruth.dist_b_monotone_exact(fn, profile.b_star)
        if profile.mu_total < eps_star / 4:
            return False, f"sum mu {profile.mu_total} < eps*/4 = {eps_star / 4}"
    return True, "inequality held on all sampled instances"


def verify_suite(scope: str = "quick", seed: int = 0) -> dict:
    """Run the built-in property checks; returns a machine-readable summary.

    ``quick`` keeps every check under a few seconds; ``full`` raises trial
    counts for the statistical checks.
    """
    if scope not in ("quick", "full"):
        raise DomainError(f"unknown scope {scope!r}")
    checks = [
        ("tree_search_paths", _check_tree_paths),
        ("work_investment_schedule", _check_schedule),
        ("tester_determinism", _check_determinism),
        ("nonadaptive_query_plan", _check_nonadaptive_plan),
        ("one_sided_error", _one_sided(20 if scope == "quick" else 500)),
        ("witness_soundness", _check_witness_soundness),
        ("exact_oracle_identities", _check_exact_oracles),
        ("cap_bound", _check_cap_bound),
        ("no_family_lower_bound", _check_no_family_lb),
        ("dimension_reduction", _check_dimension_reduction),
    ]
    results = []
    rng = np.random.default_rng(seed)
    for name, fn in checks:
        try:
            passed, detail = fn(rng)
        except Exception as exc:  # a crash is a failure, not an error
            passed, detail = False, f"exception: {exc!r}"
        results.append({"name": name, "passed": bool(passed), "detail": detail})
    return {
        "scope": scope,
        "seed": seed,
        "passed": all(r["passed"] for r in results),
        "checks": results,
    }
