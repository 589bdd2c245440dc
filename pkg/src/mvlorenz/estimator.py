"""Nonparametric estimation of the multivariate inverse Lorenz surface and Gini.

All estimators work on pseudo-observations: for unit ``j`` and variable
``i`` the share of the variable's total held by units whose value does not
exceed unit ``j``'s. The surface at ``u`` is the weighted fraction of units
whose pseudo-observations are all ``<= u``; the Gini is an affine map of the
weighted mean of ``prod_i (1 - star_ij)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import Dataset, GridSpec, PseudoObservations, _frozen
from .errors import (
    DimensionMismatchError,
    MvLorenzError,
    OutOfRangeError,
    WrongDimensionError,
)
from .lorenz import star_column

SURFACE_TOL = 1e-9


def pseudo_observations(data: Dataset) -> PseudoObservations:
    """Column-wise cumulative value shares, row-aligned with ``data``."""
    stars = np.column_stack(
        [star_column(data.values[:, i], data.weights) for i in range(data.d)]
    )
    return PseudoObservations(stars, data.weights, data.source_hash)


def _as_pseudo(obj: Union[Dataset, PseudoObservations]) -> PseudoObservations:
    if isinstance(obj, Dataset):
        return pseudo_observations(obj)
    return obj


def _weighted_mean(w: np.ndarray, x: np.ndarray) -> float:
    return math.fsum(w * x) / math.fsum(w)


def lower_frechet(u) -> np.ndarray:
    """``max(0, sum(u) - (d - 1))`` along the last axis."""
    u = np.asarray(u, dtype=float)
    d = u.shape[-1]
    return np.maximum(0.0, u.sum(axis=-1) - (d - 1))


def meilc_point(pseudo, u) -> float:
    """Weighted fraction of units with every pseudo-observation ``<= u``."""
    pseudo = _as_pseudo(pseudo)
    u = np.asarray(u, dtype=float)
    if u.shape != (pseudo.d,):
        raise DimensionMismatchError(f"expected a {pseudo.d}-vector, got shape {u.shape}")
    if np.any(np.isnan(u)) or np.any(u < 0) or np.any(u > 1):
        raise OutOfRangeError("evaluation point must lie in [0, 1]^d")
    inside = np.all(pseudo.stars <= u, axis=1)
    return math.fsum(pseudo.weights[inside]) / math.fsum(pseudo.weights)


@dataclass(frozen=True, eq=False)
class MeilcSurface:
    """Dense grid of surface values; ``values[i1, ..., id]`` sits at ``(knots[0][i1], ...)``.

    Construction checks ``value <= 1``, monotonicity along every axis, the
    unit corner and the lower Frechet bound ``W(u)``, to within
    ``SURFACE_TOL``. An empirical surface is a step function whose margins
    can trail the diagonal by up to the weight share of one tie group, so it
    can dip below ``W`` by the sum of those shares; ``lower_slack`` records that
    allowance and :meth:`frechet_gap` reports the actual shortfall.
    """

    grid: GridSpec
    values: np.ndarray
    lower_slack: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise MvLorenzError(f"values shape {values.shape} != grid shape {self.grid.shape}")
        if not self.lower_slack >= 0:
            raise MvLorenzError("lower_slack must be non-negative")
        problems = surface_violations(self.grid, values, SURFACE_TOL, self.lower_slack)
        if problems:
            raise MvLorenzError("invalid surface: " + "; ".join(problems))
        object.__setattr__(self, "values", _frozen(values))

    @property
    def d(self) -> int:
        return self.grid.d

    def frechet_gap(self) -> float:
        """Largest amount by which the surface falls below ``W`` (0 if never)."""
        lower = lower_frechet(self.grid.points()).reshape(self.grid.shape)
        return float(max(0.0, np.max(lower - self.values)))

    def rows(self):
        """Long-form ``(u_1, ..., u_d, value)`` tuples in C order."""
        pts = self.grid.points()
        return [tuple(p) + (v,) for p, v in zip(pts.tolist(), self.values.ravel().tolist())]


def surface_violations(
    grid: GridSpec, values: np.ndarray, tol: float = SURFACE_TOL, lower_slack: float = 0.0
) -> list:
    """Describe every violated surface invariant; empty when the surface is valid."""
    problems = []
    lower = lower_frechet(grid.points()).reshape(grid.shape)
    if np.any(values < lower - lower_slack - tol):
        problems.append("below the lower Frechet bound")
    if np.any(values > 1 + tol):
        problems.append("above 1")
    for axis in range(values.ndim):
        if np.any(np.diff(values, axis=axis) < -tol):
            problems.append(f"decreasing along axis {axis}")
    if abs(values[(-1,) * values.ndim] - 1.0) > tol:
        problems.append("value at the unit corner is not 1")
    return problems


def meilc_surface(pseudo, grid: GridSpec) -> MeilcSurface:
    """Evaluate the empirical surface on every grid point in one pass.

    The result carries as ``lower_slack`` the most the step surface can fall
    below the lower Frechet bound (see :func:`_step_slack`).

    Each unit is binned at the first knot (per axis) at or above its
    pseudo-observation; cumulative sums over all axes then give the mass in
    each lower orthant. With integer weights every value equals
    :func:`meilc_point` exactly.
    """
    pseudo = _as_pseudo(pseudo)
    if grid.d != pseudo.d:
        raise DimensionMismatchError(f"grid has {grid.d} dimensions, data has {pseudo.d}")
    idx = [
        np.searchsorted(knots, pseudo.stars[:, i], side="left")
        for i, knots in enumerate(grid.knots)
    ]
    flat = np.ravel_multi_index(idx, grid.shape)
    mass = np.bincount(flat, weights=pseudo.weights, minlength=int(np.prod(grid.shape)))
    cube = mass.reshape(grid.shape)
    for axis in range(grid.d):
        cube = np.cumsum(cube, axis=axis)
    total = math.fsum(pseudo.weights)
    return MeilcSurface(grid, cube / total, _step_slack(pseudo, total))


def _step_slack(pseudo: PseudoObservations, total: float) -> float:
    """Sum over variables of the heaviest tie group's weight share.

    A marginal step function trails the diagonal by less than the mass of
    the group it is about to jump over, so the surface stays above
    ``W(u)`` minus this amount.
    """
    slack = 0.0
    for i in range(pseudo.d):
        _, inverse = np.unique(pseudo.stars[:, i], return_inverse=True)
        slack += float(np.bincount(inverse, weights=pseudo.weights).max()) / total
    return min(slack, float(pseudo.d))


def megc(pseudo) -> float:
    """Multivariate Gini from pseudo-observations (or directly from a Dataset).

    No clipping: at very small ``n`` the estimate can leave [0, 1].
    """
    pseudo = _as_pseudo(pseudo)
    f = math.factorial(pseudo.d + 1)
    volume = _weighted_mean(pseudo.weights, np.prod(1.0 - pseudo.stars, axis=1))
    return (f * volume - 1.0) / (f - 1.0)


@dataclass(frozen=True)
class GiniDecomposition:
    """Two-variable Gini split into a cross moment and the two plugin marginal Ginis."""

    cross_moment: float
    g1: float
    g2: float

    @property
    def megc(self) -> float:
        return 1.2 * self.cross_moment + 0.6 * self.g1 + 0.6 * self.g2 - 0.2

    def as_dict(self) -> dict:
        return {
            "cross_moment": self.cross_moment,
            "g1": self.g1,
            "g2": self.g2,
            "megc": self.megc,
        }


def megc_decomposition(pseudo) -> GiniDecomposition:
    pseudo = _as_pseudo(pseudo)
    if pseudo.d != 2:
        raise WrongDimensionError(f"decomposition needs exactly 2 variables, got {pseudo.d}")
    w, s = pseudo.weights, pseudo.stars
    return GiniDecomposition(
        cross_moment=_weighted_mean(w, s[:, 0] * s[:, 1]),
        g1=1.0 - 2.0 * _weighted_mean(w, s[:, 0]),
        g2=1.0 - 2.0 * _weighted_mean(w, s[:, 1]),
    )


def megc_bounds(g1: float, g2: float) -> tuple:
    """Range of the two-variable Gini attainable for given marginal Ginis.

    The lower end corresponds to a vanishing cross moment, the upper end to
    the comonotone coupling.
    """
    for g in (g1, g2):
        if not 0.0 <= g <= 1.0:
            raise OutOfRangeError(f"marginal Gini {g!r} outside [0, 1]")
    lower = 0.6 * g1 + 0.6 * g2 - 0.2
    upper = 0.4 - 0.6 * max(g1, g2) + 0.6 * g1 + 0.6 * g2
    return lower, upper
