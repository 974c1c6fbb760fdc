"""Instance generators: unate positives, adversarial hypercube distributions,
the hypergrid lower-bound family, the hypercube-to-hypergrid lift, and the
cap combinatorics.

Coordinate convention: storage dimensions are 0-indexed and dimension 0 is
the least significant digit of the linear index.  The hard-instance value
formulas weight storage dimension ``b`` by ``3^(b+1)``, so weights are the
powers ``3^1, ..., 3^(d')`` over distinct dimensions and every nonzero signed
combination has a well-defined sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence, Union

import numpy as np

from .domain import CapacityError, DomainError, Function, GridShape

# Largest supported hard-instance ambient dimension: sum of |3^(b+1)| terms
# must stay within exact int64 range.
MAX_HARD_DIM = 37


def _is_pow2(x: int) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


def _coord_grid(shape: GridShape, indices: np.ndarray, dim: int) -> np.ndarray:
    return (indices // (shape.n ** dim)) % shape.n


# ---------------------------------------------------------------------------
# Random unate positives


class BMonotoneFunction(Function):
    """Sum of per-coordinate nondecreasing step tables plus a monotone
    threshold interaction term, evaluated on orientation-flipped coordinates.
    Exactly b-monotone by construction."""

    def __init__(self, shape: GridShape, b: Sequence[int],
                 tables: np.ndarray, thresholds: np.ndarray, bonus: int) -> None:
        self.shape = shape
        self.b = tuple(int(v) for v in b)
        self._tables = tables            # (d, n), each row nondecreasing
        self._thresholds = thresholds    # (d,)
        self._bonus = int(bonus)
        self._table_rows = [[int(v) for v in row] for row in tables]
        self._thr_list = [int(t) for t in thresholds]

    def value_at_index(self, index: int) -> int:
        index = int(index)
        n = self.shape.n
        acc = 0
        hit = True
        for i in range(self.shape.d):
            index, y = divmod(index, n)
            if self.b[i]:
                y = n - 1 - y
            acc += self._table_rows[i][y]
            hit = hit and y >= self._thr_list[i]
        return acc + (self._bonus if hit else 0)

    def values_at_indices(self, indices: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        n = self.shape.n
        acc = np.zeros(idx.shape, dtype=np.int64)
        hit = np.ones(idx.shape, dtype=bool)
        for i in range(self.shape.d):
            y = _coord_grid(self.shape, idx, i)
            if self.b[i]:
                y = n - 1 - y
            acc += self._tables[i][y]
            hit &= y >= self._thresholds[i]
        return acc + self._bonus * hit


def gen_b_monotone(shape: GridShape, b: Sequence[int], rng) -> BMonotoneFunction:
    """Random function that is nondecreasing in every coordinate i with
    b_i = 0 and nonincreasing where b_i = 1.

    Step increments are zero-inflated so many lines come out constant; this
    keeps the Constant pair class exercised and leaves some dimensions with
    no influence at all.
    """
    b = [int(v) for v in b]
    if len(b) != shape.d or any(v not in (0, 1) for v in b):
        raise DomainError(f"orientation vector must be {shape.d} bits")
    n, d = shape.n, shape.d
    tables = np.zeros((d, n), dtype=np.int64)
    for i in range(d):
        steps = rng.integers(0, 4, size=n - 1)
        steps = steps * (rng.random(n - 1) < 0.45)
        tables[i, 1:] = np.cumsum(steps)
    thresholds = rng.integers(0, n, size=d)
    bonus = int(rng.integers(0, 2)) * int(rng.integers(1, 8))
    return BMonotoneFunction(shape, b, tables, thresholds, bonus)


# ---------------------------------------------------------------------------
# Adversarial hypercube distributions


@dataclass(frozen=True)
class HardInstanceRecord:
    """Shared randomness of one adversarial draw.

    ``d`` is the base dimension (a power of two, >= 4); the ambient cube has
    ``dprime = d + log2(d)`` dimensions, split into ``m = d`` subcubes indexed
    by the top ``log2(d)`` coordinates.  ``R`` holds ``2^k`` special
    dimensions; subcube ``i`` exposes only ``r[i]`` of them, with orientation
    ``alpha[r[i]]`` in the unate variant and ``beta[i]`` in the far variant.
    All dimensions are 0-indexed storage dimensions.
    """

    d: int
    k: int
    R: tuple[int, ...]
    r: tuple[int, ...]
    alpha: tuple[int, ...]
    beta: tuple[int, ...]

    def __post_init__(self) -> None:
        if not _is_pow2(self.d) or self.d < 4:
            raise DomainError(f"base dimension must be a power of two >= 4, got {self.d}")
        log2d = self.d.bit_length() - 1
        if not 1 <= self.k <= log2d // 2:
            raise DomainError(f"k={self.k} outside [1, {log2d // 2}]")
        if len(self.R) != 1 << self.k or len(set(self.R)) != len(self.R):
            raise DomainError("R must contain exactly 2^k distinct dimensions")
        if not all(0 <= b < self.d for b in self.R):
            raise DomainError("R must be a subset of the base dimensions")
        if len(self.r) != self.m or any(ri not in set(self.R) for ri in self.r):
            raise DomainError("each subcube's special dimension must come from R")
        if len(self.alpha) != self.d or len(self.beta) != self.m:
            raise DomainError("orientation vectors have the wrong length")
        if any(s not in (-1, 1) for s in self.alpha + self.beta):
            raise DomainError("orientations must be +/-1")

    @property
    def m(self) -> int:
        return self.d

    @property
    def dprime(self) -> int:
        return self.d + (self.d.bit_length() - 1)


def gen_hard_record(d: int, rng) -> HardInstanceRecord:
    """Draw the shared randomness (k, R, {r_i}, alpha, beta) for dimension d."""
    if not _is_pow2(d) or d < 4:
        raise DomainError(f"base dimension must be a power of two >= 4, got {d}")
    if d + (d.bit_length() - 1) > MAX_HARD_DIM:
        raise CapacityError(
            f"ambient dimension exceeds the exact value range (d' > {MAX_HARD_DIM})"
        )
    log2d = d.bit_length() - 1
    k = int(rng.integers(1, log2d // 2 + 1))
    R = tuple(sorted(int(b) for b in rng.choice(d, size=1 << k, replace=False)))
    r = tuple(int(v) for v in rng.choice(np.array(R), size=d))
    alpha = tuple(int(v) for v in rng.choice([-1, 1], size=d))
    beta = tuple(int(v) for v in rng.choice([-1, 1], size=d))
    return HardInstanceRecord(d=d, k=k, R=R, r=r, alpha=alpha, beta=beta)


def subcube_index(record: HardInstanceRecord, index) -> Union[int, np.ndarray]:
    """Subcube of a point: the value of the top log2(d) coordinates."""
    return index >> record.d


class HardInstanceFunction(Function):
    """Closed-form adversarial function on {0,1}^(d').

    Value: the monotone part ``sum over storage dims b outside R of
    x_b * 3^(b+1)``, plus one signed special term ``sign * x_{r_i} *
    3^(r_i + 1)`` where i is the point's subcube.  The unate variant signs
    subcubes by ``alpha[r_i]`` (consistent per dimension); the far variant by
    ``beta[i]`` (independent per subcube).
    """

    def __init__(self, record: HardInstanceRecord, unate: bool) -> None:
        self.record = record
        self.unate = unate
        self.shape = GridShape(2, record.dprime)
        in_R = np.zeros(record.dprime, dtype=bool)
        in_R[list(record.R)] = True
        weights = np.array([3 ** (b + 1) for b in range(record.dprime)],
                           dtype=np.int64)
        weights[in_R] = 0
        self._weights = weights
        r = np.array(record.r, dtype=np.int64)
        self._sub_r = r
        self._sub_pow = np.array([3 ** (int(ri) + 1) for ri in record.r],
                                 dtype=np.int64)
        signs = [record.alpha[ri] for ri in record.r] if unate else list(record.beta)
        self._sub_sign = np.array(signs, dtype=np.int64)
        # scalar fast path state (plain ints)
        self._w_list = [int(w) for w in weights]
        self._r_list = list(record.r)
        self._sign_list = signs
        self._pow_list = [3 ** (ri + 1) for ri in record.r]

    def value_at_index(self, index: int) -> int:
        index = int(index)
        acc = 0
        for b, w in enumerate(self._w_list):
            if w and (index >> b) & 1:
                acc += w
        i = index >> self.record.d
        if (index >> self._r_list[i]) & 1:
            acc += self._sign_list[i] * self._pow_list[i]
        return acc

    def values_at_indices(self, indices: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        acc = np.zeros(idx.shape, dtype=np.int64)
        for b in range(self.record.dprime):
            w = int(self._weights[b])
            if w:
                acc += ((idx >> b) & 1) * w
        sub = idx >> self.record.d
        bit = (idx >> self._sub_r[sub]) & 1
        return acc + self._sub_sign[sub] * bit * self._sub_pow[sub]


def gen_yes_sample(d: int, rng) -> tuple[HardInstanceFunction, HardInstanceRecord]:
    """Sample from the unate side of the adversarial distribution."""
    record = gen_hard_record(d, rng)
    return HardInstanceFunction(record, unate=True), record


def gen_no_sample(d: int, rng) -> tuple[HardInstanceFunction, HardInstanceRecord]:
    """Sample from the far side of the adversarial distribution; usually
    1/8-far from unate (certify with the ground-truth lower bound)."""
    record = gen_hard_record(d, rng)
    return HardInstanceFunction(record, unate=False), record


# ---------------------------------------------------------------------------
# Hypergrid lower-bound family (binary encoding of grid points)


@dataclass(frozen=True)
class GridLiftParams:
    """Parameters of the hypergrid family: side n = 2^ell, dimension d,
    eps = 2^(-t) with t >= 1, encoded bits m = d*ell, live prefix
    m' = m - t + 1, labels j in [m'] and k in [1/(2 eps)] (both 1-indexed)."""

    n: int
    d: int
    eps: Fraction
    j: int
    k: int

    def __post_init__(self) -> None:
        if not _is_pow2(self.n) or self.n < 2:
            raise DomainError(f"side length must be a power of two >= 2, got {self.n}")
        if self.d < 1:
            raise DomainError("dimension must be >= 1")
        inv = 1 / self.eps
        if inv.denominator != 1 or not _is_pow2(int(inv)) or int(inv) < 2:
            raise DomainError(f"eps must be 2^-t with t >= 1, got {self.eps}")
        if self.m_prime < 1:
            raise DomainError(
                f"eps too small for this grid: need log2(1/eps) <= {self.m}"
            )
        if not 1 <= self.j <= self.m_prime:
            raise DomainError(f"j={self.j} outside [1, {self.m_prime}]")
        if not 1 <= self.k <= self.num_slabs:
            raise DomainError(f"k={self.k} outside [1, {self.num_slabs}]")

    @property
    def ell(self) -> int:
        return self.n.bit_length() - 1

    @property
    def m(self) -> int:
        return self.d * self.ell

    @property
    def t(self) -> int:
        return int(1 / self.eps).bit_length() - 1

    @property
    def m_prime(self) -> int:
        return self.m - self.t + 1

    @property
    def num_slabs(self) -> int:
        """Number of slabs S_k: 1/(2 eps)."""
        return 1 << (self.t - 1)

    @property
    def violating_dimension(self) -> int:
        """0-indexed grid dimension whose encoded bit j lives in."""
        return (self.j - 1) // self.ell


class GridFamilyFunction(Function):
    """g value at grid point y with encoded integer v = linear index of y:
    ``2v - 2^j - 1`` when bit (j-1) of v is set and v lies in slab S_k,
    otherwise ``2v``.  The companion baseline is ``2v`` everywhere."""

    def __init__(self, params: GridLiftParams, perturbed: bool) -> None:
        self.params = params
        self.perturbed = perturbed
        self.shape = GridShape(params.n, params.d)
        self._lo = (params.k - 1) << params.m_prime
        self._hi = (params.k << params.m_prime) - 1

    def value_at_index(self, index: int) -> int:
        v = int(index)
        if (
            self.perturbed
            and (v >> (self.params.j - 1)) & 1
            and self._lo <= v <= self._hi
        ):
            return 2 * v - (1 << self.params.j) - 1
        return 2 * v

    def values_at_indices(self, indices: np.ndarray) -> np.ndarray:
        v = np.asarray(indices, dtype=np.int64)
        base = 2 * v
        if not self.perturbed:
            return base
        j = self.params.j
        hit = (((v >> (j - 1)) & 1) == 1) & (v >= self._lo) & (v <= self._hi)
        return np.where(hit, base - ((1 << j) + 1), base)


def gen_adaptive_lb_family(
    n: int, d: int, eps, j: int, k: int
) -> tuple[GridFamilyFunction, GridFamilyFunction]:
    """The far function g~_{j,k} over [n]^d and its monotone companion f~."""
    params = GridLiftParams(n=n, d=d, eps=Fraction(eps), j=j, k=k)
    return GridFamilyFunction(params, True), GridFamilyFunction(params, False)


# ---------------------------------------------------------------------------
# Hypercube-to-hypergrid lift


class LiftedFunction(Function):
    """f composed with the coordinatewise threshold a -> 1[a >= n/2]."""

    def __init__(self, base: Function, n: int) -> None:
        if not base.shape.is_hypercube:
            raise DomainError("only hypercube functions can be lifted")
        if not _is_pow2(n):
            raise DomainError(f"side length must be a power of two, got {n}")
        self.base = base
        self.shape = GridShape(n, base.shape.d)

    def value_at_index(self, index: int) -> int:
        index = int(index)
        n, half = self.shape.n, self.shape.n // 2
        cube = 0
        for i in range(self.shape.d):
            index, c = divmod(index, n)
            if c >= half:
                cube |= 1 << i
        return self.base.value_at_index(cube)

    def values_at_indices(self, indices: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        n, half = self.shape.n, self.shape.n // 2
        cube = np.zeros(idx.shape, dtype=np.int64)
        for i in range(self.shape.d):
            cube += (((idx // (n ** i)) % n) >= half).astype(np.int64) << i
        return self.base.values_at_indices(cube)


def lift_hypercube_to_hypergrid(f: Function, n: int) -> LiftedFunction:
    return LiftedFunction(f, n)


# ---------------------------------------------------------------------------
# Cap combinatorics


def cap_c(x: Sequence[int], y: Sequence[int], c: int = 5) -> tuple[int, ...]:
    """The min(c, #differing) most significant coordinates where x and y
    differ, most significant first."""
    if len(x) != len(y):
        raise DomainError("points must have equal dimension")
    if c < 1:
        raise DomainError("c must be >= 1")
    diff = [i for i in range(len(x) - 1, -1, -1) if x[i] != y[i]]
    if not diff:
        raise DomainError("cap is undefined for equal points")
    return tuple(diff[:c])


def cap_set(V: Sequence[Sequence[int]], c: int = 5) -> frozenset[int]:
    """Union of cap_c over all pairs of distinct points of V.  Bounded by
    c * (|V| - 1)."""
    out: set[int] = set()
    pts = [tuple(p) for p in V]
    for a, b in combinations(pts, 2):
        if a != b:
            out.update(cap_c(a, b, c))
    return frozenset(out)
