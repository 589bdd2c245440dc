"""Shared data model: weighted microdata, pseudo-observations, evaluation grids."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    MvLorenzError,
    NegativeValueError,
    NonpositiveWeightError,
    OutOfRangeError,
    TooFewRowsError,
    ZeroColumnError,
)

DEFAULT_GRID_POINTS = 101


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def prefix_sums(x: np.ndarray) -> np.ndarray:
    """Running sums of ``x`` accumulated in extended precision.

    Accumulating in ``longdouble`` keeps the rounding error of long running
    sums well below the 1e-12 checks used throughout; the result is rounded
    once to float64.
    """
    return np.cumsum(np.asarray(x, dtype=np.longdouble)).astype(float)


def _digest(*arrays: np.ndarray) -> str:
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a, dtype=float)
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Validated ``n x d`` table of non-negative amounts with row weights.

    Weights act as replication mass: a row with weight 3 counts exactly like
    three identical rows with weight 1.
    """

    values: np.ndarray
    weights: np.ndarray
    var_names: tuple

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise MvLorenzError(f"values must be a 2-d array, got shape {values.shape}")
        n, d = values.shape
        weights = np.asarray(self.weights, dtype=float)
        if weights.shape != (n,):
            raise MvLorenzError(f"expected {n} weights, got shape {weights.shape}")
        if len(self.var_names) != d:
            raise MvLorenzError(f"expected {d} variable names, got {len(self.var_names)}")
        if n <= d:
            raise TooFewRowsError(f"need more rows than variables (n={n}, d={d})")
        if not np.all(np.isfinite(values)):
            raise MvLorenzError("values must be finite")
        if np.any(values < 0):
            j, i = np.argwhere(values < 0)[0]
            raise NegativeValueError(
                f"negative value {values[j, i]!r} in row {j}, column {self.var_names[i]!r}"
            )
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise NonpositiveWeightError("weights must be finite and strictly positive")
        totals = (weights[:, None] * values).sum(axis=0)
        if not np.all(np.isfinite(totals)):
            raise MvLorenzError("column totals overflow")
        for i in np.flatnonzero(totals <= 0):
            raise ZeroColumnError(f"column {self.var_names[i]!r} has no positive entry")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "weights", _frozen(weights))
        object.__setattr__(self, "var_names", tuple(str(v) for v in self.var_names))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def total_weight(self) -> float:
        return float(prefix_sums(self.weights)[-1])

    @property
    def means(self) -> np.ndarray:
        """Weighted column means."""
        return np.array(
            [prefix_sums(self.weights * self.values[:, i])[-1] for i in range(self.d)]
        ) / self.total_weight

    @property
    def source_hash(self) -> str:
        return _digest(self.values, self.weights)

    def column(self, i: int) -> np.ndarray:
        return self.values[:, i]

    def select(self, columns: Sequence[int]) -> "Dataset":
        columns = list(columns)
        return Dataset(
            self.values[:, columns], self.weights, tuple(self.var_names[i] for i in columns)
        )

    def replace_values(self, values: np.ndarray) -> "Dataset":
        return Dataset(values, self.weights, self.var_names)


def build_dataset(
    rows,
    weights: Optional[Sequence[float]] = None,
    var_names: Optional[Sequence[str]] = None,
) -> Dataset:
    """Build a validated :class:`Dataset` from row vectors.

    Row order is preserved. Negative amounts are rejected rather than
    dropped; filtering belongs to :mod:`mvlorenz.ingestion`.
    """
    values = np.asarray(rows, dtype=float)
    if values.size == 0:
        raise TooFewRowsError("no rows given")
    if values.ndim == 1:
        values = values[:, None]
    n, d = values.shape
    if weights is None:
        weights = np.ones(n)
    if var_names is None:
        var_names = tuple(f"x{i + 1}" for i in range(d))
    return Dataset(values, weights, tuple(var_names))


@dataclass(frozen=True, eq=False)
class PseudoObservations:
    """Per-unit cumulative shares of each variable's total, row-aligned with the source."""

    stars: np.ndarray
    weights: np.ndarray
    source_hash: str

    def __post_init__(self):
        stars = np.asarray(self.stars, dtype=float)
        if stars.ndim != 2:
            raise MvLorenzError("stars must be a 2-d array")
        if np.any(stars < 0) or np.any(stars > 1):
            raise OutOfRangeError("pseudo-observations must lie in [0, 1]")
        object.__setattr__(self, "stars", _frozen(stars))
        object.__setattr__(self, "weights", _frozen(self.weights))

    @property
    def n(self) -> int:
        return self.stars.shape[0]

    @property
    def d(self) -> int:
        return self.stars.shape[1]

    @property
    def total_weight(self) -> float:
        return float(prefix_sums(self.weights)[-1])

    def select(self, columns: Sequence[int]) -> "PseudoObservations":
        return PseudoObservations(self.stars[:, list(columns)], self.weights, self.source_hash)


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Per-dimension evaluation knots; each list runs strictly upward from 0 to 1."""

    knots: tuple

    def __post_init__(self):
        knots = []
        for k in self.knots:
            k = np.asarray(k, dtype=float)
            if k.ndim != 1 or k.size < 2:
                raise MvLorenzError("each knot list needs at least the points 0 and 1")
            if k[0] != 0.0 or k[-1] != 1.0:
                raise OutOfRangeError("knot lists must start at 0 and end at 1")
            if np.any(np.diff(k) <= 0):
                raise MvLorenzError("knots must be strictly increasing")
            knots.append(_frozen(k))
        if not knots:
            raise MvLorenzError("grid needs at least one dimension")
        object.__setattr__(self, "knots", tuple(knots))

    @classmethod
    def uniform(cls, d: int, m: int = DEFAULT_GRID_POINTS) -> "GridSpec":
        if m < 2:
            raise MvLorenzError("a grid needs at least 2 points per dimension")
        k = np.linspace(0.0, 1.0, m)
        return cls(tuple(k for _ in range(d)))

    @property
    def d(self) -> int:
        return len(self.knots)

    @property
    def shape(self) -> tuple:
        return tuple(k.size for k in self.knots)

    def points(self) -> np.ndarray:
        """All grid points as an ``(N, d)`` array in C order (last axis fastest)."""
        mesh = np.meshgrid(*self.knots, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)
