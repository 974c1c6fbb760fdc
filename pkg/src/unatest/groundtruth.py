"""Exact, query-unbounded oracles: unateness checks, distances to
(b-)monotonicity and unateness, per-dimension mu-profiles, structural distance
lower bounds for the adversarial family, and exact tree-tester outcome
probabilities.

All distances are exact :class:`fractions.Fraction` values over the domain
size.  Capacity limits raise :class:`CapacityError` rather than silently
approximating.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import combinations, product
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import LinearConstraint, milp
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .domain import CapacityError, DomainError, Function, GridShape
from .generators import HardInstanceRecord
from .testers import (
    Directions,
    ViolationWitness,
    WitnessKind,
    _probe_path,
    tree_search_path,
)

# Exact vertex-cover distances: number of domain points.
VC_CAPACITY = 256
# Matching-based lower bound: edge scan of d * 2^(d-1) hypercube edges per
# orientation, min over 2^d orientations.
MATCHING_DIM_CAP = 12
# Full-scan oracles (unateness check, mu-profile).
SCAN_CAPACITY = 1 << 22


def longest_nondecreasing_run(values: Sequence) -> int:
    """Length of the longest nondecreasing subsequence (patience sorting)."""
    tails: list = []
    for v in values:
        pos = bisect_right(tails, v)
        if pos == len(tails):
            tails.append(v)
        else:
            tails[pos] = v
    return len(tails)


def dist_line_monotone(values: Sequence) -> Fraction:
    """Exact distance of a line to nondecreasing: (n - LNS) / n."""
    n = len(values)
    if n < 1:
        raise DomainError("line must be nonempty")
    return Fraction(n - longest_nondecreasing_run(values), n)


def dist_line_antimonotone(values: Sequence) -> Fraction:
    """Exact distance of a line to nonincreasing."""
    return dist_line_monotone([-v for v in values])


# ---------------------------------------------------------------------------
# Full-scan unateness check


def _dense_cube_view(f: Function, cap: int = SCAN_CAPACITY) -> np.ndarray:
    shape = f.shape
    if shape.size > cap:
        raise CapacityError(f"domain size {shape.size} exceeds the scan capacity")
    values = f.to_dense().values
    # reshape so axis (d-1-i) walks coordinate i
    return values.reshape((shape.n,) * shape.d)


def _axis_pair_points(
    shape: GridShape, dim: int, multi_index: tuple[int, ...]
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    # multi_index comes from a diff along axis d-1-dim; coordinates are the
    # reversed axes, and the diff position t stands for the pair (t, t+1).
    coords = list(multi_index[::-1])
    x = list(coords)
    y = list(coords)
    y[dim] += 1
    return tuple(x), tuple(y)


def is_unate_exact(f: Function) -> tuple[bool, Optional[ViolationWitness]]:
    """Scan every adjacent i-pair; non-unate iff some dimension shows both a
    strict increase and a strict decrease."""
    arr = _dense_cube_view(f)
    shape = f.shape
    for i in range(shape.d):
        axis = shape.d - 1 - i
        diffs = np.diff(arr, axis=axis)
        inc = diffs > 0
        dec = diffs < 0
        if inc.any() and dec.any():
            inc_at = tuple(int(v) for v in np.argwhere(inc)[0])
            dec_at = tuple(int(v) for v in np.argwhere(dec)[0])
            # argwhere multi-indices are in reshaped axes; swap the diff axis
            # coordinate into storage order
            def to_pair(mi):
                mi = list(mi)
                # mi is over arr axes with the diff axis shortened by one
                return _axis_pair_points(shape, i, tuple(mi))

            kind = WitnessKind.EDGE_PAIR if shape.is_hypercube else WitnessKind.GENERAL_PAIR
            witness = ViolationWitness(
                dimension=i,
                increasing=to_pair(inc_at),
                decreasing=to_pair(dec_at),
                kind=kind,
            )
            return False, witness
    return True, None


# ---------------------------------------------------------------------------
# Distance certificates


class CertificateKind(Enum):
    EXACT = "exact"
    LOWER_BOUND = "lower_bound"


class CertificateMethod(Enum):
    VERTEX_COVER = "vertex_cover"
    MATCHING = "matching"
    LNS = "lns"
    STRUCTURAL_NO_FAMILY = "structural_no_family"


@dataclass(frozen=True)
class DistanceCertificate:
    kind: CertificateKind
    value: Fraction
    method: CertificateMethod
    b_star: Optional[tuple[int, ...]] = None

    def to_json(self) -> dict:
        return {
            "distance": [self.value.numerator, self.value.denominator],
            "kind": self.kind.value,
            "method": self.method.value,
            "b_star": list(self.b_star) if self.b_star is not None else None,
        }


def _violated_pairs(values: np.ndarray, shape: GridShape, b: Sequence[int]):
    """All comparable pairs (u, v) with u strictly below v in the b-flipped
    order and f(u) > f(v)."""
    N = shape.size
    coords = np.empty((N, shape.d), dtype=np.int64)
    idx = np.arange(N, dtype=np.int64)
    for i in range(shape.d):
        c = (idx // shape.stride(i)) % shape.n
        coords[:, i] = (shape.n - 1 - c) if b[i] else c
    pairs = []
    for u in range(N):
        le = (coords[u] <= coords).all(axis=1)
        le[u] = False
        for v in np.flatnonzero(le):
            if values[u] > values[v]:
                pairs.append((u, int(v)))
    return pairs


def dist_b_monotone_exact(f: Function, b: Sequence[int]) -> Fraction:
    """Exact distance to b-monotonicity: minimum vertex cover of the violated
    comparable-pair graph over the domain size.

    Covering a minimum vertex set is sufficient (re-extend monotonically over
    the kept points) and necessary (each violated pair needs a change).
    """
    shape = f.shape
    if shape.size > VC_CAPACITY:
        raise CapacityError(
            f"domain size {shape.size} exceeds the exact vertex-cover capacity;"
            " use the matching lower bound"
        )
    b = [int(v) for v in b]
    if len(b) != shape.d:
        raise DomainError("orientation vector has the wrong length")
    values = f.to_dense().values
    pairs = _violated_pairs(values, shape, b)
    if not pairs:
        return Fraction(0)
    return Fraction(_min_vertex_cover_size(pairs, shape.size), shape.size)


def _min_vertex_cover_size(pairs: list[tuple[int, int]], n_vars: int) -> int:
    used = sorted({u for p in pairs for u in p})
    remap = {u: i for i, u in enumerate(used)}
    m, k = len(pairs), len(used)
    rows = np.repeat(np.arange(m), 2)
    cols = np.array([remap[u] for p in pairs for u in p])
    A = csr_matrix((np.ones(2 * m), (rows, cols)), shape=(m, k))
    res = milp(
        c=np.ones(k),
        integrality=np.ones(k),
        bounds=(0, 1),
        constraints=LinearConstraint(A, lb=1, ub=np.inf),
    )
    if not res.success:
        raise RuntimeError(f"vertex cover solve failed: {res.message}")
    return int(round(res.fun))


def dist_unate_exact(f: Function) -> DistanceCertificate:
    """Exact distance to unateness: min over orientations b of the exact
    b-monotone distance."""
    shape = f.shape
    best = None
    best_b = None
    for b in product((0, 1), repeat=shape.d):
        dist = dist_b_monotone_exact(f, b)
        if best is None or dist < best:
            best, best_b = dist, b
            if best == 0:
                break
    return DistanceCertificate(
        kind=CertificateKind.EXACT,
        value=best,
        method=CertificateMethod.VERTEX_COVER,
        b_star=best_b,
    )


def _edge_arrays(shape: GridShape):
    """All hypercube edges as (lo_index, hi_index, dimension) arrays."""
    d = shape.d
    idx = np.arange(shape.size, dtype=np.int64)
    los, his, dims = [], [], []
    for i in range(d):
        mask = (idx >> i) & 1 == 0
        lo = idx[mask]
        los.append(lo)
        his.append(lo | (1 << i))
        dims.append(np.full(lo.shape, i, dtype=np.int64))
    return np.concatenate(los), np.concatenate(his), np.concatenate(dims)


def dist_unate_matching_lb(f: Function) -> DistanceCertificate:
    """Certified lower bound on the unateness distance of a hypercube
    function: min over orientations b of (max matching among b-violated
    edges) / 2^d.  Edge graphs are bipartite by point parity, so each
    matching is a true maximum."""
    shape = f.shape
    if not shape.is_hypercube:
        raise DomainError("matching lower bound is defined on hypercubes")
    if shape.d > MATCHING_DIM_CAP:
        raise CapacityError(
            f"d={shape.d} exceeds the matching capacity ({MATCHING_DIM_CAP})"
        )
    values = f.to_dense().values
    lo, hi, dims = _edge_arrays(shape)
    inc = values[lo] < values[hi]
    dec = values[lo] > values[hi]
    parity = np.fromiter(
        (bin(i).count("1") & 1 for i in range(shape.size)),
        dtype=np.int64, count=shape.size,
    )

    best = None
    best_b = None
    for b in product((0, 1), repeat=shape.d):
        bvec = np.array(b, dtype=np.int64)
        viol = np.where(bvec[dims] == 0, dec, inc)
        size = _max_matching_size(lo[viol], hi[viol], parity, shape.size)
        dist = Fraction(size, shape.size)
        if best is None or dist < best:
            best, best_b = dist, b
            if best == 0:
                break
    return DistanceCertificate(
        kind=CertificateKind.LOWER_BOUND,
        value=best,
        method=CertificateMethod.MATCHING,
        b_star=best_b,
    )


def _max_matching_size(u: np.ndarray, v: np.ndarray, parity: np.ndarray, N: int) -> int:
    if u.size == 0:
        return 0
    # bipartition by parity: every edge joins an even point to an odd point
    even = np.flatnonzero(parity == 0)
    odd = np.flatnonzero(parity == 1)
    even_pos = np.full(N, -1, dtype=np.int64)
    odd_pos = np.full(N, -1, dtype=np.int64)
    even_pos[even] = np.arange(even.size)
    odd_pos[odd] = np.arange(odd.size)
    a = np.where(parity[u] == 0, u, v)
    b = np.where(parity[u] == 0, v, u)
    graph = csr_matrix(
        (np.ones(u.size, dtype=np.int8), (even_pos[a], odd_pos[b])),
        shape=(even.size, odd.size),
    )
    match = maximum_bipartite_matching(graph, perm_type="column")
    return int((match >= 0).sum())


def no_family_distance_lb(record: HardInstanceRecord) -> DistanceCertificate:
    """Structural lower bound for the far adversarial variant:
    sum over special dimensions r of min(|A_r^+|, |A_r^-|) / (2m), where
    A_r^{+/-} splits the subcubes using r by orientation sign.  Valid because
    the violating r-edges of distinct subcubes are disjoint."""
    total = 0
    for r in record.R:
        plus = sum(1 for i in range(record.m) if record.r[i] == r and record.beta[i] == 1)
        minus = sum(1 for i in range(record.m) if record.r[i] == r and record.beta[i] == -1)
        total += min(plus, minus)
    return DistanceCertificate(
        kind=CertificateKind.LOWER_BOUND,
        value=Fraction(total, 2 * record.m),
        method=CertificateMethod.STRUCTURAL_NO_FAMILY,
    )


# ---------------------------------------------------------------------------
# Mu-profiles


@dataclass(frozen=True)
class MuProfile:
    """Per-dimension decreasing/increasing evidence.

    On hypercubes alpha_i / beta_i are the exact fractions of decreasing /
    increasing i-edges; on wider grids they are the average per-line exact
    distances to nondecreasing / nonincreasing.  mu_i = min(alpha_i, beta_i);
    b_star orients each dimension toward its weaker violation side."""

    alpha: tuple[Fraction, ...]
    beta: tuple[Fraction, ...]

    @property
    def mu(self) -> tuple[Fraction, ...]:
        return tuple(min(a, b) for a, b in zip(self.alpha, self.beta))

    @property
    def b_star(self) -> tuple[int, ...]:
        return tuple(0 if a < b else 1 for a, b in zip(self.alpha, self.beta))

    @property
    def mu_total(self) -> Fraction:
        return sum(self.mu, Fraction(0))


def mu_profile(f: Function) -> MuProfile:
    arr = _dense_cube_view(f)
    shape = f.shape
    alphas, betas = [], []
    for i in range(shape.d):
        axis = shape.d - 1 - i
        lines = np.moveaxis(arr, axis, -1).reshape(-1, shape.n)
        if shape.is_hypercube:
            alphas.append(Fraction(int((lines[:, 0] > lines[:, 1]).sum()), len(lines)))
            betas.append(Fraction(int((lines[:, 0] < lines[:, 1]).sum()), len(lines)))
        else:
            a = sum((dist_line_monotone(line.tolist()) for line in lines), Fraction(0))
            b = sum((dist_line_antimonotone(line.tolist()) for line in lines), Fraction(0))
            alphas.append(a / len(lines))
            betas.append(b / len(lines))
    return MuProfile(alpha=tuple(alphas), beta=tuple(betas))


# ---------------------------------------------------------------------------
# Exact tree-tester outcome distribution


def tree_tester_exact(values: Sequence) -> dict[Directions, Fraction]:
    """Exact outcome probabilities of the tree tester on one line: enumerate
    all n equally likely search targets."""
    n = len(values)
    if n < 1:
        raise DomainError("line must be nonempty")
    counts = {
        Directions.NONE: 0,
        Directions.UP: 0,
        Directions.DOWN: 0,
        Directions.BOTH: 0,
    }
    for x in range(n):
        path = tree_search_path(n, x)
        probe = _probe_path([values[t] for t in path], path, x)
        counts[probe.directions] += 1
    return {k: Fraction(v, n) for k, v in counts.items()}


def decreasing_pair_fraction(values: Sequence) -> Fraction:
    """Fraction of position pairs u < v with values[u] > values[v], among all
    C(n, 2) pairs."""
    n = len(values)
    if n < 2:
        return Fraction(0)
    bad = sum(1 for u, v in combinations(range(n), 2) if values[u] > values[v])
    return Fraction(bad, n * (n - 1) // 2)
