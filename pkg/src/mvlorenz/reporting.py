"""Per-population inequality reports, the cross-population dominance order,
and text exports (surface CSV/JSON, Graphviz DOT).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .core import Dataset, GridSpec
from .errors import DimensionMismatchError, MvLorenzError, ParseError
from .estimator import MeilcSurface, lower_frechet, megc, pseudo_observations
from .ingestion import format_float
from .lorenz import TRAPEZOID, gini


@dataclass(frozen=True)
class InequalityReport:
    entity: str
    marginal_ginis: Tuple[float, ...]
    megc: float
    spearman_rho: Tuple[Tuple[float, ...], ...]
    n_effective: float
    var_names: Tuple[str, ...] = ()

    @property
    def d(self) -> int:
        return len(self.marginal_ginis)

    def profile(self) -> Tuple[float, ...]:
        """The coordinates compared by the dominance order."""
        return tuple(self.marginal_ginis) + (self.megc,)

    def as_dict(self) -> dict:
        return {
            "entity": self.entity,
            "var_names": list(self.var_names),
            "marginal_ginis": list(self.marginal_ginis),
            "megc": self.megc,
            "spearman_rho": [list(r) for r in self.spearman_rho],
            "n_effective": self.n_effective,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InequalityReport":
        return cls(
            entity=d["entity"],
            marginal_ginis=tuple(d["marginal_ginis"]),
            megc=d["megc"],
            spearman_rho=tuple(tuple(r) for r in d["spearman_rho"]),
            n_effective=d["n_effective"],
            var_names=tuple(d.get("var_names", ())),
        )

    @classmethod
    def from_summary(cls, entity, ginis, megc_value, rho=None) -> "InequalityReport":
        """Report built from published summary figures.

        ``rho`` (the pairwise rank correlation, d = 2 only) may be omitted, in
        which case off-diagonal entries are NaN.
        """
        d = len(ginis)
        if rho is not None and d != 2:
            raise DimensionMismatchError("a scalar rank correlation needs exactly 2 variables")
        off = math.nan if rho is None else float(rho)
        matrix = tuple(tuple(1.0 if i == j else off for j in range(d)) for i in range(d))
        return cls(str(entity), tuple(float(g) for g in ginis), float(megc_value), matrix, math.nan)


def weighted_ranks(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Mid-point of each tie group's cumulative-weight interval.

    With unit weights this is the average rank minus one half.
    """
    levels, inverse = np.unique(x, return_inverse=True)
    mass = np.bincount(inverse, weights=w, minlength=levels.size)
    upper = np.cumsum(mass)
    return (upper - mass / 2.0)[inverse]


def weighted_spearman(values: np.ndarray, weights=None) -> np.ndarray:
    """Weighted Pearson correlation of weighted mid-ranks, column against column.

    A column without rank variation has no defined correlation; its
    off-diagonal entries are reported as 0.
    """
    values = np.asarray(values, dtype=float)
    n, d = values.shape
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    ranks = np.column_stack([weighted_ranks(values[:, i], w) for i in range(d)])
    p = w / w.sum()
    centered = ranks - p @ ranks
    cov = (centered * p[:, None]).T @ centered
    sd = np.sqrt(np.diag(cov))
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = cov / np.outer(sd, sd)
    rho = np.where(np.outer(sd, sd) > 0, rho, 0.0)
    rho = np.clip((rho + rho.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(rho, 1.0)
    return rho


def report(data: Dataset, label: str) -> InequalityReport:
    rho = weighted_spearman(data.values, data.weights)
    return InequalityReport(
        entity=str(label),
        marginal_ginis=tuple(
            gini(data.values[:, i], data.weights, TRAPEZOID) for i in range(data.d)
        ),
        megc=megc(pseudo_observations(data)),
        spearman_rho=tuple(tuple(float(v) for v in r) for r in rho),
        n_effective=data.total_weight,
        var_names=data.var_names,
    )


@dataclass(frozen=True)
class DominanceGraph:
    """Edges point from the more unequal entity to the less unequal one."""

    nodes: Tuple[str, ...]
    edges: Tuple[Tuple[str, str], ...]
    reduced: bool

    def successors(self, node: str) -> List[str]:
        return [b for a, b in self.edges if a == node]

    def reachable(self) -> set:
        """All ``(a, b)`` with a directed path from ``a`` to ``b``."""
        out = set()
        for start in self.nodes:
            stack, seen = [start], set()
            while stack:
                for nxt in self.successors(stack.pop()):
                    if nxt not in seen:
                        seen.add(nxt)
                        stack.append(nxt)
            out |= {(start, b) for b in seen}
        return out


def _dominates(a: InequalityReport, b: InequalityReport) -> bool:
    pa, pb = a.profile(), b.profile()
    return all(x >= y for x, y in zip(pa, pb)) and any(x > y for x, y in zip(pa, pb))


def dominance_graph(reports: Sequence[InequalityReport], reduce: bool = True) -> DominanceGraph:
    """Componentwise order on (marginal Ginis, multivariate Gini).

    ``reduce`` drops every edge implied by transitivity, giving the Hasse
    diagram. The relation is a strict partial order, so an edge ``a -> c`` is
    redundant exactly when some ``b`` has ``a -> b`` and ``b -> c``.
    """
    reports = list(reports)
    if len({r.d for r in reports}) > 1:
        raise DimensionMismatchError("reports cover different numbers of variables")
    labels = [r.entity for r in reports]
    if len(set(labels)) != len(labels):
        raise MvLorenzError("entity labels must be unique")
    by_label = {r.entity: r for r in reports}
    nodes = tuple(sorted(labels))
    edges = {(a, b) for a in nodes for b in nodes if a != b and _dominates(by_label[a], by_label[b])}
    if reduce:
        edges = {
            (a, c)
            for a, c in edges
            if not any((a, b) in edges and (b, c) in edges for b in nodes)
        }
    return DominanceGraph(nodes, tuple(sorted(edges)), reduce)


def _dot_id(label: str) -> str:
    return '"' + label.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(graph: DominanceGraph, name: str = "dominance") -> str:
    """Graphviz document; nodes and edges in lexicographic order."""
    lines = [f"digraph {name} {{", "  rankdir=TB;"]
    lines += [f"  {_dot_id(n)};" for n in sorted(graph.nodes)]
    lines += [f"  {_dot_id(a)} -> {_dot_id(b)};" for a, b in sorted(graph.edges)]
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_surface(surface: MeilcSurface, fmt: str = "csv") -> str:
    """Long-form ``u_1, ..., u_d, value`` rows in grid order.

    CSV numbers carry 17 significant digits and JSON uses shortest
    round-trip reprs, so parsing either back reproduces every value exactly.
    """
    header = [f"u{i + 1}" for i in range(surface.d)] + ["value"]
    rows = surface.rows()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows([format_float(x) for x in row] for row in rows)
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "d": surface.d,
            "knots": [k.tolist() for k in surface.grid.knots],
            "columns": header,
            "rows": [list(r) for r in rows],
            "lower_slack": surface.lower_slack,
        }
        return json.dumps(doc) + "\n"
    raise MvLorenzError(f"unknown surface format {fmt!r}; use 'csv' or 'json'")


def read_surface(text: str, fmt: str = "csv") -> MeilcSurface:
    """Inverse of :func:`export_surface`."""
    if fmt == "json":
        doc = json.loads(text)
        grid = GridSpec(tuple(np.asarray(k) for k in doc["knots"]))
        vals = np.array([r[-1] for r in doc["rows"]], dtype=float)
        return MeilcSurface(grid, vals.reshape(grid.shape), doc.get("lower_slack", 0.0))
    if fmt != "csv":
        raise MvLorenzError(f"unknown surface format {fmt!r}")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][-1] != "value":
        raise ParseError("not a surface CSV", row=1)
    body = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float)
    d = body.shape[1] - 1
    knots = tuple(np.unique(body[:, i]) for i in range(d))
    grid = GridSpec(knots)
    if body.shape[0] != math.prod(grid.shape):
        raise ParseError("surface rows do not form a full grid")
    values = body[:, -1].reshape(grid.shape)
    # the CSV carries no weights, so accept whatever step shortfall is present
    lower = lower_frechet(grid.points()).reshape(grid.shape)
    return MeilcSurface(grid, values, float(max(0.0, np.max(lower - values))))


def reports_from_summary(text: str) -> List[InequalityReport]:
    """Reports from a summary CSV.

    Required columns are ``entity`` and ``megc``; an optional
    ``spearman_rho`` column holds the rank correlation. Every other column is
    read, in header order, as a marginal Gini.
    """
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    for required in ("entity", "megc"):
        if required not in header:
            raise ParseError(f"summary table lacks an {required!r} column", row=1)
    gini_cols = [c for c in header if c not in ("entity", "megc", "spearman_rho")]
    if not gini_cols:
        raise ParseError("summary table has no marginal Gini columns", row=1)
    out = []
    for lineno, row in enumerate(reader, start=2):
        try:
            ginis = [float(row[c]) for c in gini_cols]
            rho = row.get("spearman_rho")
            rho = float(rho) if rho not in (None, "") else None
            out.append(InequalityReport.from_summary(row["entity"], ginis, float(row["megc"]), rho))
        except (TypeError, ValueError) as exc:
            raise ParseError(str(exc), row=lineno) from None
    return out
