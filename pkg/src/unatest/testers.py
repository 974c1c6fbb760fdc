"""Unateness testers for real-valued functions over hypercubes and hypergrids.

Four testers are provided:

* :func:`nonadaptive_hypercube_test` — batched i-edge sampling driven by a
  work-investment schedule; total query count is a deterministic function of
  ``(d, eps)``.
* :func:`adaptive_hypercube_test` — per-dimension edge resampling with a hard
  abort-to-accept query cap of ``240 d / eps``.
* :func:`adaptive_hypergrid_test` — the same structure with binary-search tree
  probes on random axis lines; cap ``240 d log2(n) / eps``.
* :func:`nonadaptive_hypergrid_test` — a tree-probe phase followed by a
  work-investment pair phase.

All testers have one-sided error: a unate function is never rejected, and
every rejection carries a witness that re-verifies against the function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, Flag, auto
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .domain import (
    CountingOracle,
    DomainError,
    Function,
    GridShape,
    PairClass,
    Point,
    _pair_positions,
    classify_values,
)

LN4 = math.log(4)


class ParameterError(DomainError):
    """Tester called with an out-of-range parameter."""


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not 0 < eps < 0.5:
        raise ParameterError(f"eps must be in (0, 1/2), got {eps}")
    return eps


def _ceil_guarded(x: float) -> int:
    """Ceiling that tolerates float representation of exact integers."""
    nearest = round(x)
    if abs(x - nearest) < 1e-9:
        return int(nearest)
    return math.ceil(x)


# ---------------------------------------------------------------------------
# Work-investment schedule


@dataclass(frozen=True)
class ScheduleEntry:
    r: int
    reps: int       # s_r
    batch: int      # pairs sampled per rep: 3 * 2^r


@dataclass(frozen=True)
class WorkInvestmentSchedule:
    """Sampling schedule s_r = ceil(weight * d * ln4 / (eps * 2^r)).

    ``r_max = ceil(3 * log2(scale * d / eps))`` is the nominal range of the
    doubling levels.  Levels are materialized only while the unceiled rate
    ``weight * d * ln4 / (eps * 2^r)`` is at least 1: past that point each
    level would run a single rep whose batch keeps doubling, so the total
    query count would grow as ``(d/eps)^3`` instead of ``(d/eps) log(d/eps)``
    while adding nothing to the detection guarantee (a level with unceiled
    rate below 1 covers only violation densities already covered by the last
    materialized level).
    """

    d: int
    eps: float
    weight: float
    scale: float
    r_max: int
    entries: tuple[ScheduleEntry, ...]

    @classmethod
    def build(
        cls, d: int, eps: float, weight: float = 16.0, scale: float = 4.0
    ) -> "WorkInvestmentSchedule":
        # the schedule formulas are well defined up to eps = 1/2 inclusive
        eps = float(eps)
        if not 0 < eps <= 0.5:
            raise ParameterError(f"eps must be in (0, 1/2], got {eps}")
        if d < 1:
            raise ParameterError(f"d must be >= 1, got {d}")
        r_max = _ceil_guarded(3 * math.log2(scale * d / eps))
        rate = weight * d * LN4 / eps
        entries = []
        for r in range(1, r_max + 1):
            if rate / (1 << r) < 1.0:
                break
            entries.append(
                ScheduleEntry(r=r, reps=_ceil_guarded(rate / (1 << r)), batch=3 << r)
            )
        return cls(d=d, eps=eps, weight=weight, scale=scale, r_max=r_max,
                   entries=tuple(entries))

    @property
    def total_queries(self) -> int:
        """Exact query count of the full plan: two queries per sampled pair."""
        return sum(e.reps * e.batch * 2 for e in self.entries)


# ---------------------------------------------------------------------------
# Tree search paths and the line tester


@lru_cache(maxsize=None)
def tree_search_path(n: int, x: int) -> tuple[int, ...]:
    """Positions visited by a binary search for ``x`` on ``[0, n-1]``.

    Midpoint rule ``mid = (lo + hi) // 2`` on inclusive ranges; the path
    includes the root and ends at ``x``.
    """
    if not 0 <= x < n:
        raise DomainError(f"position {x} out of range for n={n}")
    lo, hi = 0, n - 1
    path = []
    while True:
        mid = (lo + hi) // 2
        path.append(mid)
        if x < mid:
            hi = mid - 1
        elif x > mid:
            lo = mid + 1
        else:
            return tuple(path)


class Directions(Flag):
    NONE = 0
    UP = auto()
    DOWN = auto()
    BOTH = UP | DOWN


@dataclass(frozen=True)
class TreeProbe:
    """Outcome of one tree-tester run on a line."""

    x: int
    directions: Directions
    # position pairs (u, v) with u < v witnessing each direction, if present
    up_pair: Optional[tuple[int, int]] = None
    down_pair: Optional[tuple[int, int]] = None


def _probe_path(values: Sequence[int], path: Sequence[int], x: int) -> TreeProbe:
    order = sorted(range(len(path)), key=lambda k: path[k])
    dirs = Directions.NONE
    up_pair = down_pair = None
    for a in range(len(order)):
        for b in range(a + 1, len(order)):
            u, v = path[order[a]], path[order[b]]
            vu, vv = values[order[a]], values[order[b]]
            if vu < vv and up_pair is None:
                dirs |= Directions.UP
                up_pair = (u, v)
            elif vu > vv and down_pair is None:
                dirs |= Directions.DOWN
                down_pair = (u, v)
        if dirs == Directions.BOTH:
            break
    return TreeProbe(x=x, directions=dirs, up_pair=up_pair, down_pair=down_pair)


def tree_probe(line, rng, query=None) -> TreeProbe:
    """Run one tree-tester step on a 1-d oracle (or :class:`LineView`).

    Picks ``x`` uniformly, queries exactly the binary-search path for ``x``,
    and reports which strict orderings appear among the visited positions.
    ``query`` overrides the per-position query callable (used by the adaptive
    hypergrid tester to enforce its cap).
    """
    n = line.shape.n
    x = int(rng.integers(n))
    path = tree_search_path(n, x)
    q = query if query is not None else line.query_index
    values = [q(t) for t in path]
    return _probe_path(values, path, x)


def tree_tester(line, rng) -> Directions:
    """Direction set seen along a random binary-search path of the line."""
    return tree_probe(line, rng).directions


# ---------------------------------------------------------------------------
# Verdicts and witnesses


class Decision(Enum):
    ACCEPT = "accept"
    REJECT = "reject"


class WitnessKind(Enum):
    EDGE_PAIR = "edge_pair"
    GENERAL_PAIR = "general_pair"
    TREE_PATH = "tree_path"


@dataclass(frozen=True)
class ViolationWitness:
    """Evidence for a rejection: one increasing and one decreasing pair along
    the same dimension.  Each pair is ordered with the smaller coordinate in
    ``dimension`` first."""

    dimension: int
    increasing: tuple[Point, Point]
    decreasing: tuple[Point, Point]
    kind: WitnessKind

    def to_json(self) -> dict:
        return {
            "dimension": self.dimension,
            "increasing": [list(p) for p in self.increasing],
            "decreasing": [list(p) for p in self.decreasing],
            "kind": self.kind.value,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ViolationWitness":
        return cls(
            dimension=int(doc["dimension"]),
            increasing=tuple(tuple(int(c) for c in p) for p in doc["increasing"]),
            decreasing=tuple(tuple(int(c) for c in p) for p in doc["decreasing"]),
            kind=WitnessKind(doc["kind"]),
        )


def _pair_on_axis(pair: tuple[Point, Point], dim: int) -> bool:
    x, y = pair
    return (
        len(x) == len(y)
        and x[dim] < y[dim]
        and all(a == b for j, (a, b) in enumerate(zip(x, y)) if j != dim)
    )


def verify_witness(fn: Function, witness: ViolationWitness) -> bool:
    """Re-evaluate a witness against a fresh view of the function."""
    i = witness.dimension
    if not 0 <= i < fn.shape.d:
        return False
    if not (_pair_on_axis(witness.increasing, i) and _pair_on_axis(witness.decreasing, i)):
        return False
    up = classify_values(fn.value_at(witness.increasing[0]), fn.value_at(witness.increasing[1]))
    down = classify_values(fn.value_at(witness.decreasing[0]), fn.value_at(witness.decreasing[1]))
    return up is PairClass.INCREASING and down is PairClass.DECREASING


@dataclass(frozen=True)
class Verdict:
    decision: Decision
    queries_used: int
    witness: Optional[ViolationWitness] = None
    aborted: bool = False

    def __post_init__(self) -> None:
        if self.decision is Decision.REJECT and self.witness is None:
            raise ValueError("a rejection must carry a witness")
        if self.aborted and self.decision is not Decision.ACCEPT:
            raise ValueError("an aborted run must accept")

    def to_json(self, seed=None) -> dict:
        return {
            "decision": self.decision.value,
            "queries": self.queries_used,
            "aborted": self.aborted,
            "witness": self.witness.to_json() if self.witness else None,
            "seed": seed,
        }


# ---------------------------------------------------------------------------
# Shared batched pair phase (nonadaptive testers)


def _run_pair_phase(
    oracle: CountingOracle,
    schedule: WorkInvestmentSchedule,
    rng,
    edges_only: bool,
    kind: WitnessKind,
) -> Optional[ViolationWitness]:
    """Execute a full work-investment pair plan, returning the first
    violation in plan order (or None).

    The whole plan is drawn and queried regardless of intermediate findings,
    so the query multiset is value-independent.
    """
    shape = oracle.shape
    n, d = shape.n, shape.d
    lines = shape.line_count
    if edges_only:
        us_tab = np.array([0], dtype=np.int64)
        vs_tab = np.array([1], dtype=np.int64)
    else:
        us_tab, vs_tab = _pair_positions(n)

    witness = None
    for entry in schedule.entries:
        s, b = entry.reps, entry.batch
        dims = rng.integers(d, size=s)
        anchors = rng.integers(lines, size=(s, b))
        ranks = (
            np.zeros((s, b), dtype=np.int64)
            if edges_only
            else rng.integers(len(us_tab), size=(s, b))
        )
        u = us_tab[ranks]
        v = vs_tab[ranks]
        stride = (n ** dims.astype(np.int64))[:, None]
        hi, lo = anchors // stride, anchors % stride
        idx_u = (hi * n + u) * stride + lo
        idx_v = (hi * n + v) * stride + lo
        val_u = np.asarray(oracle.query_indices(idx_u))
        val_v = np.asarray(oracle.query_indices(idx_v))
        if witness is not None:
            continue  # keep querying: the plan is value-independent
        inc = val_u < val_v
        dec = val_u > val_v
        bad = inc.any(axis=1) & dec.any(axis=1)
        if not bad.any():
            continue
        row = int(np.argmax(bad))
        col_inc = int(np.argmax(inc[row]))
        col_dec = int(np.argmax(dec[row]))
        witness = ViolationWitness(
            dimension=int(dims[row]),
            increasing=(
                shape.index_to_point(int(idx_u[row, col_inc])),
                shape.index_to_point(int(idx_v[row, col_inc])),
            ),
            decreasing=(
                shape.index_to_point(int(idx_u[row, col_dec])),
                shape.index_to_point(int(idx_v[row, col_dec])),
            ),
            kind=kind,
        )
    return witness


# ---------------------------------------------------------------------------
# Algorithm implementations


def nonadaptive_hypercube_test(oracle: CountingOracle, eps: float, rng) -> Verdict:
    """Nonadaptive hypercube tester.

    For each doubling level r the schedule runs ``s_r`` reps; each rep fixes a
    uniform dimension i and samples ``3 * 2^r`` i-edges, rejecting when a rep
    sees both an increasing and a decreasing edge.  The query plan is drawn up
    front and executed in full, so ``queries_used`` equals the schedule's
    ``total_queries`` for every input.
    """
    if not oracle.shape.is_hypercube:
        raise ParameterError("this tester requires a hypercube domain")
    eps = _check_eps(eps)
    start = oracle.count
    schedule = WorkInvestmentSchedule.build(oracle.shape.d, eps)
    witness = _run_pair_phase(oracle, schedule, rng, edges_only=True,
                              kind=WitnessKind.EDGE_PAIR)
    used = oracle.count - start
    if witness is not None:
        return Verdict(Decision.REJECT, used, witness)
    return Verdict(Decision.ACCEPT, used)


class _Abort(Exception):
    pass


class _BlockSampler:
    """Uniform integers in [0, bound), drawn from the rng in blocks to keep
    the per-draw overhead of the adaptive testers' inner loops low."""

    def __init__(self, rng, bound: int, block: int = 1024) -> None:
        self._rng = rng
        self._bound = bound
        self._block = block
        self._buf = rng.integers(bound, size=block)
        self._pos = 0

    def draw(self) -> int:
        if self._pos == self._block:
            self._buf = self._rng.integers(self._bound, size=self._block)
            self._pos = 0
        v = self._buf[self._pos]
        self._pos += 1
        return int(v)


class _CappedOracle:
    """Wraps an oracle with a hard query budget; exceeding it aborts."""

    def __init__(self, oracle: CountingOracle, cap: float) -> None:
        self._oracle = oracle
        self._cap = cap
        self.used = 0

    def query_index(self, index: int) -> int:
        if self.used + 1 > self._cap:
            raise _Abort
        self.used += 1
        return self._oracle.query_index(index)


def adaptive_hypercube_test(oracle: CountingOracle, eps: float, rng) -> Verdict:
    """Adaptive hypercube tester.

    ``ceil(10/eps)`` passes; each pass walks dimensions in ascending order,
    samples one i-edge, and if it is non-constant resamples i-edges until a
    second non-constant one appears, rejecting when the two disagree.  A hard
    cap of ``240 d / eps`` queries forces an abort-to-accept.
    """
    shape = oracle.shape
    if not shape.is_hypercube:
        raise ParameterError("this tester requires a hypercube domain")
    eps = _check_eps(eps)
    d = shape.d
    reps = _ceil_guarded(10 / eps)
    capped = _CappedOracle(oracle, 240 * d / eps)
    anchors = _BlockSampler(rng, shape.line_count)

    def sample_edge(i: int) -> tuple[int, int, PairClass]:
        anchor = anchors.draw()
        i0 = shape.insert_coord(anchor, i, 0)
        i1 = i0 + shape.stride(i)
        return i0, i1, classify_values(capped.query_index(i0), capped.query_index(i1))

    try:
        for _ in range(reps):
            for i in range(d):
                lo, hi, cls = sample_edge(i)
                if cls is PairClass.CONSTANT:
                    continue
                while True:
                    lo2, hi2, cls2 = sample_edge(i)
                    if cls2 is not PairClass.CONSTANT:
                        break
                if cls2 is cls:
                    continue
                inc, dec = ((lo, hi), (lo2, hi2)) if cls is PairClass.INCREASING \
                    else ((lo2, hi2), (lo, hi))
                witness = ViolationWitness(
                    dimension=i,
                    increasing=tuple(shape.index_to_point(p) for p in inc),
                    decreasing=tuple(shape.index_to_point(p) for p in dec),
                    kind=WitnessKind.EDGE_PAIR,
                )
                return Verdict(Decision.REJECT, capped.used, witness)
    except _Abort:
        return Verdict(Decision.ACCEPT, capped.used, aborted=True)
    return Verdict(Decision.ACCEPT, capped.used)


def _line_witness(
    shape: GridShape, dim: int, anchor_up: int, anchor_down: int,
    up_pair: tuple[int, int], down_pair: tuple[int, int],
) -> ViolationWitness:
    def pts(anchor, pair):
        return tuple(
            shape.index_to_point(shape.insert_coord(anchor, dim, t)) for t in pair
        )

    return ViolationWitness(
        dimension=dim,
        increasing=pts(anchor_up, up_pair),
        decreasing=pts(anchor_down, down_pair),
        kind=WitnessKind.TREE_PATH,
    )


def adaptive_hypergrid_test(oracle: CountingOracle, eps: float, rng) -> Verdict:
    """Adaptive hypergrid tester.

    ``ceil(10/eps)`` passes; each pass walks dimensions in ascending order and
    runs the tree tester on a random i-line.  A non-empty direction set
    triggers rerunning on fresh i-lines until a second non-empty set appears;
    the pass rejects when the union of the two sets contains both directions.
    Hard abort-to-accept cap: ``240 d log2(n) / eps`` queries.
    """
    shape = oracle.shape
    eps = _check_eps(eps)
    n, d = shape.n, shape.d
    reps = _ceil_guarded(10 / eps)
    capped = _CappedOracle(oracle, 240 * d * math.log2(n) / eps)
    anchors = _BlockSampler(rng, shape.line_count)
    targets = _BlockSampler(rng, n)

    def probe(i: int) -> tuple[int, TreeProbe]:
        anchor = anchors.draw()
        x = targets.draw()
        path = tree_search_path(n, x)
        stride = shape.stride(i)
        hi, lo = divmod(anchor, stride)
        values = [capped.query_index((hi * n + t) * stride + lo) for t in path]
        return anchor, _probe_path(values, path, x)

    try:
        for _ in range(reps):
            for i in range(d):
                a1, p1 = probe(i)
                if p1.directions is Directions.NONE:
                    continue
                while True:
                    a2, p2 = probe(i)
                    if p2.directions is not Directions.NONE:
                        break
                if (p1.directions | p2.directions) is not Directions.BOTH:
                    continue
                up_a, up = (a1, p1.up_pair) if p1.up_pair else (a2, p2.up_pair)
                dn_a, dn = (a1, p1.down_pair) if p1.down_pair else (a2, p2.down_pair)
                witness = _line_witness(shape, i, up_a, dn_a, up, dn)
                return Verdict(Decision.REJECT, capped.used, witness)
    except _Abort:
        return Verdict(Decision.ACCEPT, capped.used, aborted=True)
    return Verdict(Decision.ACCEPT, capped.used)


def nonadaptive_hypergrid_test(oracle: CountingOracle, eps: float, rng) -> Verdict:
    """Nonadaptive hypergrid tester.

    Phase 1: ``ceil(220/eps)`` passes; each pass runs the tree tester on one
    random i-line per dimension and flags any probe whose path shows both an
    increasing and a decreasing pair.  Phase 2: a work-investment plan
    (weight 800, range scale 200) over random i-pairs, flagging any rep that
    sees both directions.  All randomness is drawn before any value is read
    and the full plan is executed, so the query multiset is value-independent.
    """
    shape = oracle.shape
    eps = _check_eps(eps)
    n, d = shape.n, shape.d
    lines = shape.line_count
    reps1 = _ceil_guarded(220 / eps)

    # Phase 1 plan: one (anchor, x) per (pass, dimension), dims ascending.
    anchors = rng.integers(lines, size=(reps1, d))
    xs = rng.integers(n, size=(reps1, d))
    # Phase 2 randomness is drawn by _run_pair_phase from the same stream
    # after phase 1's draws; both plans are value-independent.

    phase1_witness = None
    phase1_order = None
    probes = reps1 * d
    flat_anchor = anchors.ravel()
    flat_dim = np.tile(np.arange(d, dtype=np.int64), reps1)
    flat_x = xs.ravel()
    order_id = np.arange(probes, dtype=np.int64)

    for x in range(n):
        mask = flat_x == x
        if not mask.any():
            continue
        path = np.array(tree_search_path(n, x), dtype=np.int64)
        a = flat_anchor[mask]
        dim = flat_dim[mask]
        stride = n ** dim
        hi, lo = a // stride, a % stride
        idx = (hi[:, None] * n + path[None, :]) * stride[:, None] + lo[:, None]
        vals = np.asarray(oracle.query_indices(idx))
        # check ordered position pairs along the path
        pos_order = np.argsort(path, kind="stable")
        sorted_pos = path[pos_order]
        sv = vals[:, pos_order]
        L = len(path)
        ii, jj = np.triu_indices(L, k=1)
        up = sv[:, ii] < sv[:, jj]
        down = sv[:, ii] > sv[:, jj]
        bad = up.any(axis=1) & down.any(axis=1)
        if not bad.any():
            continue
        rows = np.flatnonzero(bad)
        first = rows[np.argmin(order_id[mask][rows])]
        oid = int(order_id[mask][first])
        if phase1_order is not None and oid >= phase1_order:
            continue
        ku = int(np.argmax(up[first]))
        kd = int(np.argmax(down[first]))
        anchor = int(a[first])
        phase1_order = oid
        phase1_witness = _line_witness(
            shape, int(dim[first]), anchor, anchor,
            (int(sorted_pos[ii[ku]]), int(sorted_pos[jj[ku]])),
            (int(sorted_pos[ii[kd]]), int(sorted_pos[jj[kd]])),
        )

    schedule = WorkInvestmentSchedule.build(d, eps, weight=800.0, scale=200.0)
    phase2_witness = _run_pair_phase(oracle, schedule, rng, edges_only=False,
                                     kind=WitnessKind.GENERAL_PAIR)

    witness = phase1_witness if phase1_witness is not None else phase2_witness
    total = sum(
        len(tree_search_path(n, int(x))) for x in flat_x
    ) + schedule.total_queries
    if witness is not None:
        return Verdict(Decision.REJECT, total, witness)
    return Verdict(Decision.ACCEPT, total)


TESTERS: dict[str, Callable[[CountingOracle, float, object], Verdict]] = {
    "na-cube": nonadaptive_hypercube_test,
    "ad-cube": adaptive_hypercube_test,
    "ad-grid": adaptive_hypergrid_test,
    "na-grid": nonadaptive_hypergrid_test,
}
