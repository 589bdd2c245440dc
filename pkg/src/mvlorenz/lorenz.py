"""Empirical univariate Lorenz curves, their inverses, and Gini coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import _frozen, prefix_sums
from .errors import MvLorenzError, OutOfRangeError

TRAPEZOID = "trapezoid"
PLUGIN = "plugin"
CONVENTIONS = (TRAPEZOID, PLUGIN)


def _validated_column(values, weights):
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise MvLorenzError("expected a non-empty 1-d column")
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != x.shape:
        raise MvLorenzError("values and weights differ in length")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise MvLorenzError("values must be finite and non-negative")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise MvLorenzError("weights must be finite and positive")
    if not np.any(x > 0):
        raise MvLorenzError("column has no positive entry")
    return x, w


def _grouped(x, w):
    """Distinct sorted values, the weight and amount carried by each, and the row->group map."""
    levels, inverse = np.unique(x, return_inverse=True)
    mass = np.bincount(inverse, weights=w, minlength=levels.size)
    amount = np.bincount(inverse, weights=w * x, minlength=levels.size)
    return levels, mass, amount, inverse


def star_column(values, weights=None) -> np.ndarray:
    """Cumulative share of the column total held by units at or below each unit's value.

    Ties count on both sides, so every member of a tied group receives the
    share accumulated through the whole group.
    """
    x, w = _validated_column(values, weights)
    _, _, amount, inverse = _grouped(x, w)
    cum = prefix_sums(amount)
    shares = cum / cum[-1]
    return shares[inverse]


@dataclass(frozen=True, eq=False)
class LorenzCurve:
    """Piecewise-linear Lorenz curve through ``(knots_u[k], knots_s[k])``."""

    knots_u: np.ndarray
    knots_s: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.knots_u, dtype=float)
        s = np.asarray(self.knots_s, dtype=float)
        if u.shape != s.shape or u.ndim != 1 or u.size < 2:
            raise MvLorenzError("knot arrays must be 1-d, equal length, at least 2 points")
        if u[0] != 0 or u[-1] != 1 or s[0] != 0 or s[-1] != 1:
            raise MvLorenzError("Lorenz curve must run from (0, 0) to (1, 1)")
        if np.any(np.diff(u) <= 0) or np.any(np.diff(s) < 0):
            raise MvLorenzError("knots must be increasing")
        object.__setattr__(self, "knots_u", _frozen(u))
        object.__setattr__(self, "knots_s", _frozen(s))

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.knots_s) / np.diff(self.knots_u)

    def __call__(self, u):
        return lorenz_eval(self, u)

    def inverse(self, s):
        return inverse_lorenz_eval(self, s)

    def area(self) -> float:
        """Exact integral of the piecewise-linear curve over [0, 1]."""
        du = np.diff(self.knots_u)
        return 0.5 * math.fsum(du * (self.knots_s[1:] + self.knots_s[:-1]))


def empirical_lorenz(values, weights=None) -> LorenzCurve:
    """Lorenz curve of a weighted sample, one knot per distinct value."""
    x, w = _validated_column(values, weights)
    _, mass, amount, _ = _grouped(x, w)
    cum_w = prefix_sums(mass)
    cum_x = prefix_sums(amount)
    u = np.concatenate([[0.0], cum_w / cum_w[-1]])
    s = np.concatenate([[0.0], cum_x / cum_x[-1]])
    return LorenzCurve(u, s)


def _check_unit(x, what):
    a = np.asarray(x, dtype=float)
    if np.any(np.isnan(a)) or np.any(a < 0) or np.any(a > 1):
        raise OutOfRangeError(f"{what} must lie in [0, 1]")
    return a


def lorenz_eval(curve: LorenzCurve, u):
    """Share of the total held by the poorest fraction ``u`` (linear between knots)."""
    a = _check_unit(u, "population fraction")
    out = np.interp(a, curve.knots_u, curve.knots_s)
    return float(out) if out.ndim == 0 else out


def inverse_lorenz_eval(curve: LorenzCurve, s):
    """Largest population fraction holding a combined share of at most ``s``.

    For ``s > 0`` this is ``inf{t : L(t) >= s}``; at ``s = 0`` it is
    ``sup{t : L(t) = 0}``, which is positive when some units hold nothing.
    """
    a = _check_unit(s, "share")
    flat = np.atleast_1d(a)
    ku, ks = curve.knots_u, curve.knots_s
    out = np.empty_like(flat)

    zero = flat == 0
    if np.any(zero):
        last_zero = np.searchsorted(ks, 0.0, side="right") - 1
        out[zero] = ku[last_zero]

    pos = ~zero
    if np.any(pos):
        sv = flat[pos]
        k = np.clip(np.searchsorted(ks, sv, side="left"), 1, ks.size - 1)
        s0, s1 = ks[k - 1], ks[k]
        u0, u1 = ku[k - 1], ku[k]
        out[pos] = u0 + (sv - s0) / (s1 - s0) * (u1 - u0)

    return float(out[0]) if a.ndim == 0 else out.reshape(a.shape)


def gini(values, weights=None, convention: str = TRAPEZOID) -> float:
    """Univariate Gini coefficient.

    Parameters
    ----------
    values, weights : array_like
        Non-negative amounts and optional positive weights.
    convention : {"trapezoid", "plugin"}
        ``trapezoid`` integrates the interpolated Lorenz curve, which equals the
        classic mean-difference Gini. ``plugin`` is one minus twice the
        weighted mean of the pseudo-observations; it is the one-variable case
        of the multivariate estimator and sits exactly ``1/n`` below the
        trapezoid value for ``n`` distinct unit-weight values.
    """
    if convention == TRAPEZOID:
        return 1.0 - 2.0 * empirical_lorenz(values, weights).area()
    if convention == PLUGIN:
        x, w = _validated_column(values, weights)
        stars = star_column(x, w)
        return 1.0 - 2.0 * math.fsum(w * stars) / math.fsum(w)
    raise MvLorenzError(f"unknown Gini convention {convention!r}; use one of {CONVENTIONS}")

