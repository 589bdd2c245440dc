"""Parametric copulas and margins: CDFs, sampling, rank-correlation calibration,
and the model-implied inverse Lorenz surface and multivariate Gini.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr, ndtri, owens_t

from .core import GridSpec
from .errors import (
    DimensionMismatchError,
    MvLorenzError,
    OutOfRangeError,
    ParameterOutOfDomainError,
    UnattainableError,
    UnsupportedDimensionError,
    UnsupportedFamilyError,
)
from .estimator import MeilcSurface
from .lorenz import LorenzCurve, inverse_lorenz_eval, lorenz_eval

log = logging.getLogger(__name__)

INDEPENDENCE = "independence"
COMONOTONE = "comonotone"
COUNTERMONOTONE = "countermonotone"
GAUSSIAN = "gaussian"
CLAYTON = "clayton"
GUMBEL = "gumbel"
FAMILIES = (INDEPENDENCE, COMONOTONE, COUNTERMONOTONE, GAUSSIAN, CLAYTON, GUMBEL)
PARAMETRIC = (GAUSSIAN, CLAYTON, GUMBEL)

# Substream size for sampling. Fixed, so output never depends on worker count.
CHUNK = 1 << 16

# Monte-Carlo sample behind the gaussian CDF for d >= 3.
MC_CDF_COUNT = 1 << 17
MC_CDF_SEED = 0

CALIBRATION_BRACKET = {CLAYTON: (1e-6, 50.0), GUMBEL: (1.0 + 1e-6, 50.0)}


@dataclass(frozen=True)
class CopulaModel:
    family: str
    parameter: Optional[float] = None
    dim: int = 2

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UnsupportedFamilyError(f"unknown copula family {self.family!r}")
        if self.dim < 2:
            raise UnsupportedDimensionError("copulas need at least 2 dimensions")
        if self.family == COUNTERMONOTONE and self.dim != 2:
            raise UnsupportedDimensionError("the countermonotone copula exists only for d = 2")
        if self.family not in PARAMETRIC:
            if self.parameter is not None:
                raise ParameterOutOfDomainError(f"{self.family} copula takes no parameter")
            return
        if self.parameter is None or not math.isfinite(self.parameter):
            raise ParameterOutOfDomainError(f"{self.family} copula needs a finite parameter")
        p = float(self.parameter)
        object.__setattr__(self, "parameter", p)
        if self.family == GAUSSIAN and not -1.0 / (self.dim - 1) < p < 1.0:
            raise ParameterOutOfDomainError(
                f"gaussian correlation must lie in (-1/(d-1), 1), got {p}"
            )
        if self.family == CLAYTON and not p > 0:
            raise ParameterOutOfDomainError(f"clayton theta must be > 0, got {p}")
        if self.family == GUMBEL and not p >= 1:
            raise ParameterOutOfDomainError(f"gumbel theta must be >= 1, got {p}")

    def __str__(self):
        if self.parameter is None:
            return f"{self.family}(d={self.dim})"
        return f"{self.family}({self.parameter:.6g}, d={self.dim})"


@dataclass(frozen=True, eq=False)
class MarginalModel:
    """Marginal inverse Lorenz curve: ``u ** a`` (``a`` in (0, 1]) or an empirical curve."""

    exponent: Optional[float] = None
    curve: Optional[LorenzCurve] = None

    def __post_init__(self):
        if (self.exponent is None) == (self.curve is None):
            raise MvLorenzError("give exactly one of exponent or curve")
        if self.exponent is not None and not 0.0 < self.exponent <= 1.0:
            raise ParameterOutOfDomainError(f"power exponent must lie in (0, 1], got {self.exponent}")

    @classmethod
    def power(cls, a: float) -> "MarginalModel":
        return cls(exponent=float(a))

    @classmethod
    def diagonal(cls) -> "MarginalModel":
        return cls(exponent=1.0)

    @classmethod
    def empirical(cls, curve: LorenzCurve) -> "MarginalModel":
        return cls(curve=curve)

    @property
    def form(self) -> str:
        if self.curve is not None:
            return "empirical"
        return "diagonal" if self.exponent == 1.0 else "power_inverse"

    def inverse_lorenz(self, u):
        if self.curve is not None:
            return inverse_lorenz_eval(self.curve, u)
        return np.power(u, self.exponent)

    def lorenz(self, u):
        if self.curve is not None:
            return lorenz_eval(self.curve, u)
        return np.power(u, 1.0 / self.exponent)

    def gini(self) -> float:
        if self.curve is not None:
            return 1.0 - 2.0 * self.curve.area()
        return (1.0 - self.exponent) / (1.0 + self.exponent)


# ---------------------------------------------------------------------------
# CDFs


def bivariate_normal_cdf(h, k, r: float):
    """``P(Z1 <= h, Z2 <= k)`` for standard normals with correlation ``r``, via Owen's T."""
    h, k = np.broadcast_arrays(np.asarray(h, dtype=float), np.asarray(k, dtype=float))
    s = math.sqrt((1.0 - r) * (1.0 + r))
    with np.errstate(divide="ignore", invalid="ignore"):
        ah = (k - r * h) / (h * s)
        ak = (h - r * k) / (k * s)
    # T(0, a) is finite for a = +-inf; a = nan only occurs at h = k = 0.
    ah = np.where(np.isnan(ah), 0.0, ah)
    ak = np.where(np.isnan(ak), 0.0, ak)
    hk = h * k
    beta = np.where((hk < 0) | ((hk == 0) & (h + k < 0)), 0.5, 0.0)
    p = 0.5 * ndtr(h) + 0.5 * ndtr(k) - owens_t(h, ah) - owens_t(k, ak) - beta
    origin = (h == 0) & (k == 0)
    if np.any(origin):
        p = np.where(origin, 0.25 + math.asin(r) / (2.0 * math.pi), p)
    return np.clip(p, 0.0, 1.0)


def _clayton_cdf(u, theta):
    # (sum u^-theta - (d-1))^(-1/theta), evaluated in log space to survive large theta
    d = u.shape[-1]
    with np.errstate(divide="ignore"):
        t = -theta * np.log(u)
    m = t.max(axis=-1, keepdims=True)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    inner = np.exp(t - m_safe).sum(axis=-1) - (d - 1) * np.exp(-m_safe[..., 0])
    with np.errstate(divide="ignore", invalid="ignore"):
        log_c = -(m_safe[..., 0] + np.log(inner)) / theta
        out = np.exp(log_c)
    return np.where(np.isfinite(m[..., 0]), out, 0.0)


def _gumbel_cdf(u, theta):
    with np.errstate(divide="ignore"):
        a = -np.log(u)
    m = a.max(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(m > 0, a / np.where(m > 0, m, 1.0), 0.0)
        norm = m[..., 0] * np.power(np.power(ratio, theta).sum(axis=-1), 1.0 / theta)
    return np.where(np.isfinite(m[..., 0]), np.exp(-norm), 0.0)


@lru_cache(maxsize=8)
def _gaussian_reference_sample(r: float, d: int, count: int, seed: int) -> np.ndarray:
    u = copula_sample(CopulaModel(GAUSSIAN, r, d), count, seed)
    u.setflags(write=False)
    return u


def _gaussian_cdf_mc(u, r, count, seed, block=64):
    d = u.shape[-1]
    sample = _gaussian_reference_sample(r, d, count, seed)
    flat = u.reshape(-1, d)
    p = np.empty(flat.shape[0])
    for start in range(0, flat.shape[0], block):
        q = flat[start:start + block]
        inside = np.ones((q.shape[0], count), dtype=bool)
        for i in range(d):
            inside &= sample[None, :, i] <= q[:, None, i]
        p[start:start + block] = inside.mean(axis=1)
    return p.reshape(u.shape[:-1])


def copula_cdf(
    model: CopulaModel,
    u,
    *,
    return_std_error: bool = False,
    mc_count: int = MC_CDF_COUNT,
    mc_seed: int = MC_CDF_SEED,
):
    """Evaluate the copula at ``u`` (shape ``(..., d)``).

    Closed forms for the bounds, independence, Clayton and Gumbel; Owen's T
    for the bivariate gaussian. The gaussian copula in ``d >= 3`` is the
    empirical CDF of a fixed seeded sample of ``mc_count`` draws, so repeated
    calls share random numbers and stay monotone; with
    ``return_std_error=True`` the binomial standard error is returned as well
    (zero for every exact family).
    """
    u = np.asarray(u, dtype=float)
    if u.shape[-1:] != (model.dim,):
        raise DimensionMismatchError(f"expected points of dimension {model.dim}, got {u.shape}")
    if np.any(np.isnan(u)) or np.any(u < 0) or np.any(u > 1):
        raise OutOfRangeError("copula arguments must lie in [0, 1]")
    se = None
    fam = model.family
    if fam == INDEPENDENCE:
        p = np.prod(u, axis=-1)
    elif fam == COMONOTONE:
        p = np.min(u, axis=-1)
    elif fam == COUNTERMONOTONE:
        p = np.maximum(u[..., 0] + u[..., 1] - 1.0, 0.0)
    elif fam == CLAYTON:
        p = _clayton_cdf(u, model.parameter)
    elif fam == GUMBEL:
        p = _gumbel_cdf(u, model.parameter)
    elif model.dim == 2:
        u1, u2 = u[..., 0], u[..., 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            p = bivariate_normal_cdf(ndtri(u1), ndtri(u2), model.parameter)
        p = np.where(u1 == 1.0, u2, np.where(u2 == 1.0, u1, p))
        p = np.where((u1 == 0.0) | (u2 == 0.0), 0.0, p)
    else:
        p = _gaussian_cdf_mc(u, model.parameter, mc_count, mc_seed)
        se = np.sqrt(p * (1.0 - p) / mc_count)
    p = np.asarray(p, dtype=float)
    if se is None:
        se = np.zeros_like(p)
    if p.ndim == 0:
        p, se = float(p), float(se)
    return (p, se) if return_std_error else p


# ---------------------------------------------------------------------------
# sampling


def _substream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def _positive_stable(rng, alpha, size):
    # Kanter's representation; Laplace transform exp(-t ** alpha)
    theta = rng.uniform(0.0, math.pi, size)
    w = rng.standard_exponential(size)
    if alpha == 1.0:
        return np.ones(size)
    return (np.sin(alpha * theta) / np.sin(theta) ** (1.0 / alpha)) * (
        np.sin((1.0 - alpha) * theta) / w
    ) ** ((1.0 - alpha) / alpha)


def _sample_chunk(model: CopulaModel, size: int, rng: np.random.Generator) -> np.ndarray:
    d, fam = model.dim, model.family
    if fam == INDEPENDENCE:
        return rng.random((size, d))
    if fam == COMONOTONE:
        return np.repeat(rng.random((size, 1)), d, axis=1)
    if fam == COUNTERMONOTONE:
        v = rng.random(size)
        return np.column_stack([v, 1.0 - v])
    if fam == GAUSSIAN:
        r = model.parameter
        corr = np.full((d, d), r)
        np.fill_diagonal(corr, 1.0)
        chol = np.linalg.cholesky(corr)
        return ndtr(rng.standard_normal((size, d)) @ chol.T)
    if fam == CLAYTON:
        theta = model.parameter
        v = rng.gamma(1.0 / theta, 1.0, size)
        e = rng.standard_exponential((size, d))
        return np.power(1.0 + e / v[:, None], -1.0 / theta)
    theta = model.parameter
    alpha = 1.0 / theta
    s = _positive_stable(rng, alpha, size)
    e = rng.standard_exponential((size, d))
    return np.exp(-np.power(e / s[:, None], alpha))


def _chunks(count: int):
    return [(i, min(CHUNK, count - i * CHUNK)) for i in range(-(-count // CHUNK))]


def _run_chunks(fn, count: int, threads: int):
    jobs = _chunks(count)
    if threads <= 1 or len(jobs) == 1:
        return [fn(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def copula_sample(model: CopulaModel, count: int, seed: int, threads: int = 1) -> np.ndarray:
    """Draw ``count`` points from the copula as an ``(count, d)`` array.

    Points are produced in fixed-size blocks, block ``k`` from its own
    Philox substream keyed on ``(seed, k)``; the result is therefore
    identical for every ``threads`` setting.
    """
    if count < 1:
        raise MvLorenzError("count must be at least 1")
    parts = _run_chunks(lambda k, size: _sample_chunk(model, size, _substream(seed, k)), count, threads)
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
# Spearman calibration


def _gauss_legendre_panels(panels: int, order: int):
    """Composite Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _copula_volume(model: CopulaModel, panels: int = 32, order: int = 8) -> float:
    """Integral of an exchangeable bivariate copula over the unit square.

    The square is folded onto the triangle ``v <= u`` and mapped to the unit
    square via ``v = u t``, which keeps the diagonal kink on the boundary.
    """
    x, w = _gauss_legendre_panels(panels, order)
    uu, tt = np.meshgrid(x, x, indexing="ij")
    vals = copula_cdf(model, np.stack([uu, uu * tt], axis=-1)) * uu
    return 2.0 * float(w @ vals @ w)


def spearman_rho(model: CopulaModel) -> float:
    """Spearman's rank correlation of a bivariate copula."""
    if model.dim != 2:
        raise UnsupportedDimensionError("rank correlation is defined here for d = 2")
    fam = model.family
    if fam == INDEPENDENCE:
        return 0.0
    if fam == COMONOTONE:
        return 1.0
    if fam == COUNTERMONOTONE:
        return -1.0
    if fam == GAUSSIAN:
        return 6.0 / math.pi * math.asin(model.parameter / 2.0)
    return 12.0 * _copula_volume(model) - 3.0


def spearman_to_param(family: str, rho_s: float, tol: float = 1e-9) -> float:
    """Copula parameter whose Spearman rank correlation equals ``rho_s``.

    Gaussian uses ``r = 2 sin(pi rho_s / 6)``. Clayton and Gumbel bisect on
    the quadrature value of ``12 * integral(C) - 3`` until within ``tol``.
    """
    if family == GAUSSIAN:
        if not -1.0 < rho_s < 1.0:
            raise UnattainableError(f"gaussian rank correlation must lie in (-1, 1), got {rho_s}")
        return 2.0 * math.sin(math.pi * rho_s / 6.0)
    if family not in CALIBRATION_BRACKET:
        raise UnsupportedFamilyError(f"{family!r} has no parameter to calibrate")
    lo, hi = CALIBRATION_BRACKET[family]

    def rho(theta):
        return spearman_rho(CopulaModel(family, theta))

    r_lo, r_hi = rho(lo), rho(hi)
    if not r_lo < rho_s < r_hi:
        raise UnattainableError(
            f"{family} rank correlation {rho_s} outside attainable ({r_lo:.6g}, {r_hi:.6g})"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        r_mid = rho(mid)
        if abs(r_mid - rho_s) <= tol:
            break
        if r_mid < rho_s:
            lo = mid
        else:
            hi = mid
    return mid


# ---------------------------------------------------------------------------
# model-implied surface and Gini


def _check_margins(copula: CopulaModel, margins: Sequence[MarginalModel]):
    if len(margins) != copula.dim:
        raise DimensionMismatchError(f"need {copula.dim} margins, got {len(margins)}")


def parametric_meilc(copula: CopulaModel, margins: Sequence[MarginalModel], u, **cdf_kwargs):
    """Copula evaluated at the marginal inverse Lorenz curves; ``u`` has shape ``(..., d)``."""
    _check_margins(copula, margins)
    u = np.asarray(u, dtype=float)
    if u.shape[-1:] != (copula.dim,):
        raise DimensionMismatchError(f"expected points of dimension {copula.dim}")
    if np.any(np.isnan(u)) or np.any(u < 0) or np.any(u > 1):
        raise OutOfRangeError("evaluation point must lie in [0, 1]^d")
    inv = np.stack([np.asarray(m.inverse_lorenz(u[..., i])) for i, m in enumerate(margins)], axis=-1)
    return copula_cdf(copula, inv, **cdf_kwargs)


def parametric_surface(copula: CopulaModel, margins: Sequence[MarginalModel], grid: GridSpec) -> MeilcSurface:
    if grid.d != copula.dim:
        raise DimensionMismatchError("grid and copula dimensions differ")
    values = parametric_meilc(copula, margins, grid.points())
    slack = 0.0
    if copula.family == GAUSSIAN and copula.dim > 2:
        # empirical CDF of the reference sample; its margins wander by O(1/sqrt(count))
        slack = copula.dim * 3.0 / math.sqrt(MC_CDF_COUNT)
    return MeilcSurface(grid, np.asarray(values).reshape(grid.shape), slack)


def _normalize_volume(volume: float, d: int) -> float:
    f = math.factorial(d + 1)
    return (f * volume - 1.0) / (f - 1.0)


def parametric_megc_mc(
    copula: CopulaModel,
    margins: Sequence[MarginalModel],
    count: int = 10**6,
    seed: int = 0,
    threads: int = 1,
) -> tuple:
    """Monte-Carlo Gini of a copula/margin model.

    The surface integral equals ``E[prod_i (1 - L_i(U_i))]`` for ``U`` drawn
    from the copula, where ``L_i`` is the marginal Lorenz curve. Returns
    ``(estimate, std_error)``.
    """
    _check_margins(copula, margins)
    if count < 1000:
        raise MvLorenzError("use at least 1000 draws")

    def block(k, size):
        u = _sample_chunk(copula, size, _substream(seed, k))
        prod = np.ones(size)
        for i, m in enumerate(margins):
            prod *= 1.0 - np.asarray(m.lorenz(u[:, i]))
        return prod

    prods = np.concatenate(_run_chunks(block, count, threads))
    f = math.factorial(copula.dim + 1)
    mean = float(prods.mean())
    se = float(prods.std(ddof=1)) / math.sqrt(count)
    return _normalize_volume(mean, copula.dim), f * se / (f - 1.0)


def _surface_integral(copula, margins, panels, order=4, block=64):
    x, w = _gauss_legendre_panels(panels, order)
    inv1 = np.asarray(margins[0].inverse_lorenz(x))
    inv2 = np.asarray(margins[1].inverse_lorenz(x))
    total = 0.0
    for start in range(0, x.size, block):
        a = inv1[start:start + block]
        pts = np.stack(np.broadcast_arrays(a[:, None], inv2[None, :]), axis=-1)
        total += float(w[start:start + block] @ copula_cdf(copula, pts) @ w)
    return total


def parametric_megc_quadrature(
    copula: CopulaModel,
    margins: Sequence[MarginalModel],
    tol: float = 1e-4,
    panels: int = 128,
    max_panels: int = 1024,
    return_error: bool = False,
):
    """Gini of a bivariate copula/margin model by tensor Gauss-Legendre quadrature.

    The panel count doubles until two successive integrals agree to ``tol``
    (in Gini units); the finer value is returned, optionally with the
    difference as error estimate.
    """
    _check_margins(copula, margins)
    if copula.dim != 2:
        raise UnsupportedDimensionError("quadrature Gini is implemented for d = 2 only")
    coarse = _normalize_volume(_surface_integral(copula, margins, panels), 2)
    while True:
        panels *= 2
        fine = _normalize_volume(_surface_integral(copula, margins, panels), 2)
        err = abs(fine - coarse)
        if err <= tol or panels >= max_panels:
            break
        coarse = fine
    if err > tol:
        log.warning("quadrature error estimate %.2g exceeds tolerance %.2g", err, tol)
    return (fine, err) if return_error else fine


def independence_megc(ginis: Sequence[float], d: Optional[int] = None) -> float:
    """Closed-form multivariate Gini for independent variables with marginal Ginis ``ginis``."""
    ginis = [float(g) for g in ginis]
    if d is None:
        d = len(ginis)
    if d != len(ginis) or d < 1:
        raise DimensionMismatchError(f"expected {d} marginal Ginis, got {len(ginis)}")
    for g in ginis:
        if not 0.0 <= g <= 1.0:
            raise OutOfRangeError(f"marginal Gini {g!r} outside [0, 1]")
    f = math.factorial(d + 1)
    return (f * 0.5**d * math.prod(1.0 + g for g in ginis) - 1.0) / (f - 1)
