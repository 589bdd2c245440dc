"""Shared fixtures and slow, independent reference implementations."""

import math
from itertools import product

import numpy as np
import pytest
from scipy import integrate, stats

from mvlorenz import build_dataset

SOCIETY_1 = [(3, 3), (4, 4), (6, 6)]
SOCIETY_2 = [(5, 3), (2, 4), (6, 6)]
SOCIETY_3 = [(4, 3), (3, 4), (6, 6)]
PDBT_BEFORE = [(5, 4), (4, 5), (3, 2), (2, 3)]
PDBT_AFTER = [(3.9, 4), (4, 5), (3, 2), (3.1, 3)]

# Published per-country summary: income Gini, wealth Gini, multivariate Gini, rank correlation.
COUNTRY_SUMMARY = {
    "Australia": (0.33, 0.62, 0.46, 0.28),
    "Austria": (0.28, 0.67, 0.47, 0.41),
    "Canada": (0.32, 0.66, 0.48, 0.41),
    "Finland": (0.25, 0.60, 0.43, 0.41),
    "Germany": (0.29, 0.65, 0.47, 0.56),
    "Greece": (0.32, 0.55, 0.45, 0.41),
    "Italy": (0.34, 0.58, 0.48, 0.56),
    "Luxembourg": (0.39, 0.63, 0.51, 0.54),
    "Slovakia": (0.34, 0.51, 0.44, 0.40),
    "Slovenia": (0.36, 0.59, 0.46, 0.29),
    "South Africa": (0.61, 0.85, 0.71, 0.43),
    "Spain": (0.38, 0.60, 0.50, 0.45),
    "United Kingdom": (0.35, 0.60, 0.48, 0.55),
    "United States": (0.45, 0.80, 0.61, 0.63),
}


@pytest.fixture
def society1():
    return build_dataset(SOCIETY_1)


@pytest.fixture
def society2():
    return build_dataset(SOCIETY_2)


@pytest.fixture
def society3():
    return build_dataset(SOCIETY_3)


def random_dataset(rng, n, d, integer_weights=False, ties=False, zeros=False):
    if ties:
        values = rng.integers(0 if zeros else 1, 6, size=(n, d)).astype(float)
    else:
        values = rng.lognormal(0.0, 1.0, size=(n, d))
        if zeros:
            values[rng.random((n, d)) < 0.2] = 0.0
    values[0] = np.maximum(values[0], 1.0)
    if integer_weights:
        weights = rng.integers(1, 5, size=n).astype(float)
    else:
        weights = rng.uniform(0.2, 3.0, size=n)
    return build_dataset(values.tolist(), weights.tolist())


# ---------------------------------------------------------------------------
# oracles


def pairwise_gini(x, w=None):
    """Mean-difference Gini, computed by an explicit double sum."""
    x = np.asarray(x, dtype=float)
    w = np.ones_like(x) if w is None else np.asarray(w, dtype=float)
    total = w.sum()
    mu = (w * x).sum() / total
    s = 0.0
    for i in range(x.size):
        for j in range(x.size):
            s += w[i] * w[j] * abs(x[i] - x[j])
    return s / (2.0 * total**2 * mu)


def brute_stars(values, weights):
    """Pseudo-observations by a double loop."""
    values = np.asarray(values, dtype=float)
    n, d = values.shape
    out = np.zeros((n, d))
    for i in range(d):
        col_total = sum(weights[l] * values[l, i] for l in range(n))
        for j in range(n):
            out[j, i] = sum(weights[l] * values[l, i] for l in range(n) if values[l, i] <= values[j, i]) / col_total
    return out


def brute_meilc(stars, weights, u):
    mass = sum(w for s, w in zip(stars, weights) if all(si <= ui for si, ui in zip(s, u)))
    return mass / sum(weights)


def brute_megc(stars, weights):
    d = len(stars[0])
    f = math.factorial(d + 1)
    mean = sum(w * math.prod(1 - s for s in row) for row, w in zip(stars, weights)) / sum(weights)
    return (f * mean - 1) / (f - 1)


def bvn_cdf_quad(h, k, r):
    """Bivariate normal CDF by integrating the conditional normal over x."""
    if r == 0:
        return stats.norm.cdf(h) * stats.norm.cdf(k)
    s = math.sqrt(1 - r * r)
    f = lambda x: stats.norm.pdf(x) * stats.norm.cdf((k - r * x) / s)
    val, _ = integrate.quad(f, -np.inf, h, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def spearman_dblquad(cdf):
    val, _ = integrate.dblquad(lambda v, u: cdf(u, v), 0, 1, 0, 1, epsabs=1e-11, epsrel=1e-11)
    return 12 * val - 3


def grid_points(knots):
    return list(product(*knots))


def write_synthetic_survey(path, households=10_000, seed=0):
    """Household CSV with missing cells, negative amounts, tiny weights and one gross outlier."""
    rng = np.random.default_rng(seed)
    size = rng.integers(1, 6, size=households)
    weight = np.round(rng.uniform(0.5, 12.0, size=households), 3)
    income = np.round(rng.lognormal(10.0, 0.6, size=households), 2)
    wealth = np.round(rng.lognormal(11.0, 1.2, size=households), 2)
    wealth[rng.random(households) < 0.02] *= -1
    lines = ["hid,income,wealth,hh_size,hh_weight"]
    for i in range(households):
        inc = "n/a" if i % 997 == 5 else repr(float(income[i]))
        lines.append(f"{i},{inc},{float(wealth[i])!r},{int(size[i])},{float(weight[i])!r}")
    lines.append(f"{households},1e12,1000.0,1,1.0")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


SURVEY_CONFIG = {
    "value_columns": ["income", "wealth"],
    "weight_column": "hh_weight",
    "household_size_column": "hh_size",
}


# ---------------------------------------------------------------------------
# acceptance summary: one line per criterion at the end of the run

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    _CRITERIA[number] = (title, call.excinfo is None)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}")
