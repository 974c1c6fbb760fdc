"""Grid domains, exact integer-valued functions, and query-counting oracles.

The domain is the hypergrid ``[n]^d`` with 0-indexed coordinates
``{0, ..., n-1}``; the hypercube is the special case ``n = 2``.  Points are
tuples of coordinates and are interchangeable with their mixed-radix linear
index (coordinate 0 is the least significant digit).  All function values are
exact Python / int64 integers so that pair classification is never corrupted
by floating-point ties.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

# Domain size must fit signed 64-bit index arithmetic.
MAX_INDEX = 1 << 62
# Values are kept clear of int64 overflow (sums of 3^b terms stay below this).
MAX_ABS_VALUE = (1 << 62) - 1
# Cap for materializing dense value tables.
MAX_DENSE_SIZE = 1 << 24

Point = tuple[int, ...]


class DomainError(ValueError):
    """Invalid shape, point, or parameter."""


class CapacityError(DomainError):
    """Instance too large for an exact / dense computation."""


@dataclass(frozen=True)
class GridShape:
    """The domain ``[n]^d``: side length ``n >= 2``, dimension ``d >= 1``."""

    n: int
    d: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise DomainError(f"side length must be >= 2, got {self.n}")
        if self.d < 1:
            raise DomainError(f"dimension must be >= 1, got {self.d}")
        if self.n ** self.d > MAX_INDEX:
            raise DomainError(
                f"domain size {self.n}^{self.d} exceeds the index range"
            )
        # cached powers; recomputing n**d dominates hot query loops otherwise
        object.__setattr__(self, "_strides", tuple(self.n ** i for i in range(self.d)))
        object.__setattr__(self, "size", self.n ** self.d)

    @property
    def is_hypercube(self) -> bool:
        return self.n == 2

    def stride(self, dim: int) -> int:
        """Weight of coordinate ``dim`` in the mixed-radix index."""
        self._check_dim(dim)
        return self._strides[dim]

    def _check_dim(self, dim: int) -> None:
        if not 0 <= dim < self.d:
            raise DomainError(f"dimension {dim} out of range for d={self.d}")

    def contains(self, coords: Sequence[int]) -> bool:
        return len(coords) == self.d and all(0 <= c < self.n for c in coords)

    def validate_point(self, coords: Sequence[int]) -> Point:
        if not self.contains(coords):
            raise DomainError(f"point {tuple(coords)} not in [{self.n}]^{self.d}")
        return tuple(int(c) for c in coords)

    def point_to_index(self, coords: Sequence[int]) -> int:
        self.validate_point(coords)
        idx = 0
        for c in reversed(coords):
            idx = idx * self.n + int(c)
        return idx

    def index_to_point(self, index: int) -> Point:
        index = int(index)
        if not 0 <= index < self.size:
            raise DomainError(f"index {index} out of range")
        coords = []
        for _ in range(self.d):
            index, c = divmod(index, self.n)
            coords.append(c)
        return tuple(coords)

    def coord_of(self, index, dim: int):
        """Coordinate ``dim`` of the point(s) with the given linear index."""
        return (index // self.stride(dim)) % self.n

    def insert_coord(self, anchor, dim: int, t):
        """Index of the point obtained by inserting digit ``t`` at ``dim``.

        ``anchor`` indexes the reduced grid ``[n]^(d-1)`` (an i-line); works
        elementwise on numpy arrays as well as scalars.
        """
        s = self.stride(dim)
        hi, lo = anchor // s, anchor % s
        return (hi * self.n + t) * s + lo

    def drop_coord(self, index: int, dim: int) -> int:
        """Inverse of :meth:`insert_coord`: the line anchor of ``index``."""
        s = self.stride(dim)
        return (index // (s * self.n)) * s + index % s

    @property
    def line_count(self) -> int:
        """Number of i-lines for any fixed dimension."""
        return self.size // self.n


class Function(ABC):
    """An exactly evaluatable function on a grid shape.

    Evaluation is pure: the same point always yields the same value.
    """

    shape: GridShape

    @abstractmethod
    def value_at_index(self, index: int) -> int:
        ...

    def values_at_indices(self, indices: np.ndarray) -> np.ndarray:
        """Vectorized evaluation; subclasses override with fast paths."""
        flat = np.asarray(indices, dtype=np.int64).ravel()
        out = np.fromiter(
            (self.value_at_index(int(i)) for i in flat), dtype=np.int64, count=flat.size
        )
        return out.reshape(np.shape(indices))

    def value_at(self, point: Sequence[int]) -> int:
        return self.value_at_index(self.shape.point_to_index(point))

    def to_dense(self) -> "DenseFunction":
        if self.shape.size > MAX_DENSE_SIZE:
            raise CapacityError(
                f"domain size {self.shape.size} too large for a dense table"
            )
        values = self.values_at_indices(np.arange(self.shape.size, dtype=np.int64))
        return DenseFunction(self.shape, values)


class DenseFunction(Function):
    """Function backed by a dense table of ``n^d`` exact integer values."""

    def __init__(self, shape: GridShape, values) -> None:
        arr = np.asarray(values)
        if arr.ndim != 1 or arr.size != shape.size:
            raise DomainError(
                f"table length {arr.size} does not match domain size {shape.size}"
            )
        if arr.dtype == object or not np.issubdtype(arr.dtype, np.integer):
            py = [int(v) for v in arr]
            if any(abs(v) > MAX_ABS_VALUE for v in py):
                raise CapacityError("table value exceeds the exact int64 range")
            arr = np.array(py, dtype=np.int64)
        else:
            arr = arr.astype(np.int64)
        self.shape = shape
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    def value_at_index(self, index: int) -> int:
        if not 0 <= index < self.shape.size:
            raise DomainError(f"index {index} out of range")
        return int(self._values[index])

    def values_at_indices(self, indices: np.ndarray) -> np.ndarray:
        return self._values[indices]

    def to_dense(self) -> "DenseFunction":
        return self


class ConstantFunction(Function):
    def __init__(self, shape: GridShape, value: int = 0) -> None:
        self.shape = shape
        self._value = int(value)

    def value_at_index(self, index: int) -> int:
        if not 0 <= index < self.shape.size:
            raise DomainError(f"index {index} out of range")
        return self._value

    def values_at_indices(self, indices: np.ndarray) -> np.ndarray:
        return np.full(np.shape(indices), self._value, dtype=np.int64)


def make_dense(shape: GridShape, table: Sequence[int]) -> DenseFunction:
    """Build a dense function from a value table in mixed-radix index order."""
    return DenseFunction(shape, table)


def function_to_json(fn: Function) -> dict:
    """Serialize a function as a dense JSON document."""
    dense = fn.to_dense()
    return {
        "n": fn.shape.n,
        "d": fn.shape.d,
        "values": [int(v) for v in dense.values],
    }


def dense_from_json(doc: dict) -> DenseFunction:
    shape = GridShape(int(doc["n"]), int(doc["d"]))
    return DenseFunction(shape, [int(v) for v in doc["values"]])


class CountingOracle:
    """Query access to a function with per-call counting.

    Every evaluation call is counted, including repeated queries to the same
    point.  When ``record_transcript`` is set the ordered ``(point, value)``
    transcript is kept; large experiments disable it to bound memory.
    """

    def __init__(self, fn: Function, record_transcript: bool = True) -> None:
        self.fn = fn
        self.shape = fn.shape
        self.count = 0
        self.transcript: list[tuple[Point, int]] | None = (
            [] if record_transcript else None
        )

    def query(self, point: Sequence[int]) -> int:
        idx = self.shape.point_to_index(point)
        return self.query_index(idx)

    def query_index(self, index: int) -> int:
        if not 0 <= index < self.shape.size:
            raise DomainError(f"index {index} out of range")
        value = self.fn.value_at_index(index)
        self.count += 1
        if self.transcript is not None:
            self.transcript.append((self.shape.index_to_point(index), value))
        return value

    def query_indices(self, indices: np.ndarray) -> np.ndarray:
        indices = np.asarray(indices, dtype=np.int64)
        if indices.size and (indices.min() < 0 or indices.max() >= self.shape.size):
            raise DomainError("query index out of range")
        values = self.fn.values_at_indices(indices)
        self.count += int(indices.size)
        if self.transcript is not None:
            for i, v in zip(indices.ravel(), np.asarray(values).ravel()):
                self.transcript.append((self.shape.index_to_point(int(i)), int(v)))
        return values


class PairClass(Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"
    CONSTANT = "constant"


def classify_values(v_low: int, v_high: int) -> PairClass:
    """Classify a pair by the values at its lower and upper point."""
    if v_low < v_high:
        return PairClass.INCREASING
    if v_low > v_high:
        return PairClass.DECREASING
    return PairClass.CONSTANT


def classify_pair(
    oracle: CountingOracle, x: Sequence[int], y: Sequence[int]
) -> PairClass:
    """Classify the ordered pair (x, y); the caller supplies the lower point
    first.  Consumes exactly two queries."""
    x = oracle.shape.validate_point(x)
    y = oracle.shape.validate_point(y)
    if x == y:
        raise DomainError("pair endpoints must be distinct")
    return classify_values(oracle.query(x), oracle.query(y))


def sample_i_edge(shape: GridShape, dim: int, rng) -> tuple[Point, Point]:
    """Uniformly random i-edge of the hypercube: x_i = 0, y_i = 1."""
    if not shape.is_hypercube:
        raise DomainError("i-edges are defined on hypercubes only")
    shape._check_dim(dim)
    anchor = int(rng.integers(shape.line_count))
    i0 = shape.insert_coord(anchor, dim, 0)
    return shape.index_to_point(i0), shape.index_to_point(i0 + shape.stride(dim))


@lru_cache(maxsize=None)
def _pair_positions(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Lookup tables mapping a pair rank < C(n,2) to positions u < v."""
    us, vs = np.triu_indices(n, k=1)
    return us.astype(np.int64), vs.astype(np.int64)


def sample_i_pair(shape: GridShape, dim: int, rng) -> tuple[Point, Point]:
    """Uniformly random i-pair: a random i-line, then a random position pair,
    returned with the smaller i-coordinate first."""
    shape._check_dim(dim)
    anchor = int(rng.integers(shape.line_count))
    us, vs = _pair_positions(shape.n)
    rank = int(rng.integers(len(us)))
    u, v = int(us[rank]), int(vs[rank])
    return (
        shape.index_to_point(shape.insert_coord(anchor, dim, u)),
        shape.index_to_point(shape.insert_coord(anchor, dim, v)),
    )


class LineRestriction(Function):
    """The 1-d function h(t) = f(anchor with coordinate ``dim`` set to t)."""

    def __init__(self, fn: Function, dim: int, anchor: Sequence[int]) -> None:
        fn.shape._check_dim(dim)
        anchor_idx = fn.shape.point_to_index(anchor)
        self._fn = fn
        self._dim = dim
        self._anchor = fn.shape.drop_coord(anchor_idx, dim)
        self._parent_shape = fn.shape
        self.shape = GridShape(fn.shape.n, 1)

    def parent_index(self, t: int) -> int:
        return self._parent_shape.insert_coord(self._anchor, self._dim, t)

    def value_at_index(self, index: int) -> int:
        if not 0 <= index < self.shape.n:
            raise DomainError(f"line position {index} out of range")
        return self._fn.value_at_index(self.parent_index(index))

    def values_at_indices(self, indices: np.ndarray) -> np.ndarray:
        idx = self._parent_shape.insert_coord(
            np.int64(self._anchor), self._dim, np.asarray(indices, dtype=np.int64)
        )
        return self._fn.values_at_indices(idx)


class LineView:
    """1-d query view of one i-line; queries pass through to the parent
    oracle and are counted there."""

    def __init__(self, oracle: CountingOracle, dim: int, anchor: Sequence[int]) -> None:
        oracle.shape._check_dim(dim)
        self._oracle = oracle
        self._dim = dim
        self._anchor = oracle.shape.drop_coord(oracle.shape.point_to_index(anchor), dim)
        self.shape = GridShape(oracle.shape.n, 1)

    @property
    def count(self) -> int:
        return self._oracle.count

    def parent_index(self, t: int) -> int:
        return self._oracle.shape.insert_coord(self._anchor, self._dim, t)

    def query_index(self, t: int) -> int:
        if not 0 <= t < self.shape.n:
            raise DomainError(f"line position {t} out of range")
        return self._oracle.query_index(self.parent_index(t))

    def parent_point(self, t: int) -> Point:
        return self._oracle.shape.index_to_point(self.parent_index(t))


def restrict_to_line(
    f: Union[Function, CountingOracle], dim: int, anchor: Sequence[int]
) -> Union[LineRestriction, LineView]:
    """Restrict a function (or counting oracle) to the i-line through
    ``anchor``; the anchor's own i-coordinate is ignored."""
    if isinstance(f, CountingOracle):
        return LineView(f, dim, anchor)
    return LineRestriction(f, dim, anchor)
