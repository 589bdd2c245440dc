"""Survey microdata loading and preprocessing.

The pipeline runs in a fixed order:

1. keep complete cases (every used column numeric, household size a
   positive integer, weight non-negative);
2. drop households with a negative amount in any value column;
3. equivalize amounts by ``household_size ** -exponent``;
4. give each household the multiplicity ``K = size * floor(weight)`` and
   drop those with ``K = 0``;
5. drop households more than ``outlier_sigma`` standard deviations from the
   mean in any variable, with moments taken over the K-weighted population.

The result is either replicated row by row (``K`` copies, weight 1) or kept
as one weighted row per household; both give identical estimates.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import Dataset
from .errors import (
    ConfigError,
    EmptyResultError,
    MissingColumnError,
    MvLorenzError,
    ParseError,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

DEFAULT_REPLICATION_CAP = 10**7
WEIGHT_COLUMN = "weight"
POST_REPLICATION = "post_replication"
PRE_REPLICATION = "pre_replication"


@dataclass(frozen=True, eq=False)
class RawTable:
    """Columns parsed to float; unparseable or non-finite cells hold NaN."""

    names: Tuple[str, ...]
    columns: Dict[str, np.ndarray]

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def require(self, names: Sequence[str]):
        missing = [c for c in names if c not in self.columns]
        if missing:
            raise MissingColumnError(f"missing column(s): {', '.join(missing)}")

    def matrix(self, names: Sequence[str]) -> np.ndarray:
        self.require(names)
        if not names:
            return np.empty((self.n_rows, 0))
        return np.column_stack([self.columns[c] for c in names])

    def incomplete(self, names: Sequence[str]) -> np.ndarray:
        """Rows where any of ``names`` failed to parse."""
        return np.any(np.isnan(self.matrix(names)), axis=1)


def _parse_cell(cell: str) -> float:
    try:
        x = float(cell)
    except ValueError:
        return math.nan
    return x if math.isfinite(x) else math.nan


def load_table(
    path,
    delimiter: str = ",",
    has_header: bool = True,
    required: Sequence[str] = (),
) -> RawTable:
    """Read a delimited UTF-8 file into a :class:`RawTable`.

    ``path`` may also be an open text stream. Rows with the wrong number of
    fields raise :class:`ParseError`; non-numeric cells become NaN and mark
    their row incomplete.
    """
    if hasattr(path, "read"):
        return _read_table(path, delimiter, has_header, required)
    with open(path, newline="", encoding="utf-8") as fh:
        return _read_table(fh, delimiter, has_header, required)


def _read_table(fh, delimiter, has_header, required):
    reader = csv.reader(fh, delimiter=delimiter)
    rows = [(i, r) for i, r in enumerate(reader, start=1) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty input")
    if has_header:
        _, header = rows.pop(0)
        names = tuple(h.strip() for h in header)
        if len(set(names)) != len(names):
            raise ParseError("duplicate column names in header", row=1)
    else:
        names = tuple(f"col{i + 1}" for i in range(len(rows[0][1])))
    cells = []
    for lineno, r in rows:
        if len(r) != len(names):
            raise ParseError(f"expected {len(names)} fields, found {len(r)}", row=lineno)
        cells.append([_parse_cell(c.strip()) for c in r])
    data = np.array(cells, dtype=float).reshape(len(cells), len(names))
    table = RawTable(names, {name: data[:, i] for i, name in enumerate(names)})
    table.require(required)
    return table


@dataclass(frozen=True)
class PipelineConfig:
    value_columns: Tuple[str, ...]
    weight_column: Optional[str] = None
    household_size_column: Optional[str] = None
    drop_negative: bool = True
    equivalize_exponent: float = 0.5
    replicate: Optional[bool] = None
    outlier_sigma: float = 30.0
    outlier_stats: str = POST_REPLICATION
    replication_cap: int = DEFAULT_REPLICATION_CAP

    def __post_init__(self):
        if isinstance(self.value_columns, str) or not self.value_columns:
            raise ConfigError("value_columns must be a non-empty list of column names")
        object.__setattr__(self, "value_columns", tuple(self.value_columns))
        if self.equivalize_exponent < 0:
            raise ConfigError("equivalize_exponent must be >= 0")
        if self.outlier_sigma < 0:
            raise ConfigError("outlier_sigma must be >= 0")
        if self.outlier_stats not in (POST_REPLICATION, PRE_REPLICATION):
            raise ConfigError(f"outlier_stats must be {POST_REPLICATION!r} or {PRE_REPLICATION!r}")
        if self.replication_cap < 1:
            raise ConfigError("replication_cap must be positive")
        if self.replicate is None:
            both = self.weight_column is not None and self.household_size_column is not None
            object.__setattr__(self, "replicate", both)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        if "value_columns" not in d:
            raise ConfigError("config needs value_columns")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        try:
            if path.suffix.lower() == ".toml":
                d = tomllib.loads(text)
            else:
                d = json.loads(text)
        except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from None
        return cls.from_dict(d)

    def used_columns(self) -> List[str]:
        cols = list(self.value_columns)
        cols += [c for c in (self.weight_column, self.household_size_column) if c]
        return cols


@dataclass
class DropReport:
    input_rows: int = 0
    incomplete: int = 0
    negative: int = 0
    zero_multiplicity: int = 0
    outliers: int = 0
    output_rows: int = 0
    output_households: int = 0
    population: int = 0
    replicated: bool = False
    notes: List[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def _moments(x: np.ndarray, k: np.ndarray):
    total = k.sum()
    mean = (k[:, None] * x).sum(axis=0) / total
    var = (k[:, None] * (x - mean) ** 2).sum(axis=0) / total
    return mean, np.sqrt(var)


def preprocess(table: RawTable, config: PipelineConfig) -> Tuple[Dataset, DropReport]:
    table.require(config.used_columns())
    report = DropReport(input_rows=table.n_rows)

    values = table.matrix(config.value_columns)
    size = table.columns[config.household_size_column] if config.household_size_column else None
    weight = table.columns[config.weight_column] if config.weight_column else None

    # 1. complete cases
    keep = ~table.incomplete(config.used_columns())
    with np.errstate(invalid="ignore"):
        if size is not None:
            keep &= (size >= 1) & (size == np.floor(size))
        if weight is not None:
            keep &= weight >= 0
    report.incomplete = int((~keep).sum())

    # 2. negative amounts
    if config.drop_negative:
        neg = keep & np.any(values < 0, axis=1)
        report.negative = int(neg.sum())
        keep &= ~neg

    idx = np.flatnonzero(keep)
    values = values[idx]

    # 3. equivalization
    if size is not None and config.equivalize_exponent != 0:
        values = values / size[idx, None] ** config.equivalize_exponent

    # 4. multiplicity
    k = np.ones(idx.size, dtype=np.int64)
    if size is not None:
        k *= size[idx].astype(np.int64)
    if weight is not None:
        k *= np.floor(weight[idx]).astype(np.int64)
    nonzero = k > 0
    report.zero_multiplicity = int((~nonzero).sum())
    idx, values, k = idx[nonzero], values[nonzero], k[nonzero]

    # 5. outliers
    if config.outlier_sigma > 0 and idx.size:
        mass = k if config.outlier_stats == POST_REPLICATION else np.ones_like(k)
        mean, sd = _moments(values, mass.astype(float))
        far = np.any(np.abs(values - mean) > config.outlier_sigma * sd, axis=1)
        report.outliers = int(far.sum())
        idx, values, k = idx[~far], values[~far], k[~far]

    if idx.size == 0:
        raise EmptyResultError("no rows left after preprocessing")
    report.output_households = int(idx.size)
    report.population = int(k.sum())

    replicate = config.replicate
    if replicate and report.population > config.replication_cap:
        msg = (
            f"replicating would create {report.population} rows (cap {config.replication_cap});"
            " keeping one weighted row per household instead"
        )
        log.warning(msg)
        report.notes.append(msg)
        replicate = False
    if replicate:
        values = np.repeat(values, k, axis=0)
        weights = np.ones(values.shape[0])
    else:
        weights = k.astype(float)
    report.replicated = bool(replicate)
    report.output_rows = int(values.shape[0])
    return Dataset(values, weights, config.value_columns), report


def dataset_from_table(
    table: RawTable,
    columns: Optional[Sequence[str]] = None,
    weight_column: Optional[str] = None,
) -> Dataset:
    """Build a Dataset from an already clean numeric table.

    Without explicit ``weight_column`` a column named ``weight`` is used as
    weights if present; all other columns (or ``columns``) become variables.
    """
    if weight_column is None and WEIGHT_COLUMN in table.columns:
        weight_column = WEIGHT_COLUMN
    if columns is None:
        columns = [c for c in table.names if c != weight_column]
    columns = list(columns)
    used = columns + ([weight_column] if weight_column else [])
    table.require(used)
    bad = np.flatnonzero(table.incomplete(used))
    if bad.size:
        row = int(bad[0]) + 1
        col = next(c for c in used if math.isnan(table.columns[c][bad[0]]))
        raise ParseError("non-numeric value", row=row, column=col)
    weights = table.columns[weight_column] if weight_column else np.ones(table.n_rows)
    return Dataset(table.matrix(columns), weights, tuple(columns))


def read_dataset(path, columns=None, weight_column=None, delimiter=",") -> Dataset:
    return dataset_from_table(load_table(path, delimiter=delimiter), columns, weight_column)


def format_float(x: float, digits: int = 17) -> str:
    return format(float(x), f".{digits}g")


def write_dataset_csv(data: Dataset, out=None, with_weights: bool = True) -> str:
    """Dataset as CSV with full-precision numbers; written to ``out`` if given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = list(data.var_names) + ([WEIGHT_COLUMN] if with_weights else [])
    if with_weights and WEIGHT_COLUMN in data.var_names:
        raise MvLorenzError(f"a variable is already called {WEIGHT_COLUMN!r}")
    w.writerow(header)
    for row, wt in zip(data.values.tolist(), data.weights.tolist()):
        cells = [format_float(v) for v in row]
        if with_weights:
            cells.append(format_float(wt))
        w.writerow(cells)
    text = buf.getvalue()
    if out is not None:
        if hasattr(out, "write"):
            out.write(text)
        else:
            Path(out).write_text(text, encoding="utf-8")
    return text
