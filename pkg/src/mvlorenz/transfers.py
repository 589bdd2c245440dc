"""Inequality-relevant transfers and the multivariate Lorenz order between datasets.

Two transfer kinds are supported. A correlation increasing transformation
(``cit``) gives one unit the elementwise maximum and the other the
elementwise minimum of their two rows. A Pigou-Dalton bundle transfer
(``pdbt``) moves non-negative amounts from a unit that is at least as rich
in every attribute to a poorer one.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .core import Dataset, GridSpec
from .errors import (
    DimensionMismatchError,
    IndexOutOfRangeError,
    InvalidTransferError,
    MvLorenzError,
    NegativeResultError,
    NotRicherError,
    UnequalWeightsError,
)
from .estimator import megc, meilc_surface, pseudo_observations

log = logging.getLogger(__name__)

CIT = "cit"
PDBT = "pdbt"
ORDER_TOL = 1e-12
# Above this many comparison points lorenz_order falls back to the plain grid.
MAX_COMPARISON_POINTS = 4_000_000


class Order(str, enum.Enum):
    A_DOMINATES = "a_dominates"
    B_DOMINATES = "b_dominates"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"

    @property
    def gloss(self) -> str:
        return {
            Order.A_DOMINATES: "A ⪰ B: A is more unequal than B",
            Order.B_DOMINATES: "B ⪰ A: B is more unequal than A",
            Order.EQUAL: "A and B have the same inverse Lorenz surface",
            Order.INCOMPARABLE: "the surfaces cross: A and B are not ordered",
        }[self]


@dataclass(frozen=True)
class TransferRecord:
    kind: str
    actors: Tuple[int, int]
    before_megc: float
    after_megc: float
    amounts: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.kind == CIT and self.after_megc < self.before_megc - 1e-12:
            raise MvLorenzError(
                f"CIT lowered the multivariate Gini ({self.before_megc!r} -> {self.after_megc!r})"
            )

    @property
    def change(self) -> float:
        return self.after_megc - self.before_megc

    def as_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "actors": list(self.actors),
            "before_megc": self.before_megc,
            "after_megc": self.after_megc,
        }
        if self.amounts is not None:
            out["amounts"] = list(self.amounts)
        return out


def _check_index(data: Dataset, *rows: int):
    for r in rows:
        if not isinstance(r, (int, np.integer)) or not 0 <= r < data.n:
            raise IndexOutOfRangeError(f"row index {r!r} outside 0..{data.n - 1}")


def apply_cit(data: Dataset, t: int, z: int) -> Dataset:
    """Row ``t`` receives the elementwise max of rows ``t`` and ``z``, row ``z`` the min."""
    _check_index(data, t, z)
    if t == z:
        raise InvalidTransferError("a CIT needs two distinct rows")
    if data.weights[t] != data.weights[z]:
        raise UnequalWeightsError(
            f"rows {t} and {z} carry different weights ({data.weights[t]} vs {data.weights[z]})"
        )
    values = np.array(data.values)
    hi = np.maximum(values[t], values[z])
    lo = np.minimum(values[t], values[z])
    values[t], values[z] = hi, lo
    return data.replace_values(values)


def apply_pdbt(data: Dataset, donor: int, recipient: int, amounts: Sequence[float]) -> Dataset:
    """Move ``amounts`` from ``donor`` to ``recipient``.

    The donor must be weakly richer in every attribute and strictly richer in
    at least one; at least one amount must be positive.
    """
    _check_index(data, donor, recipient)
    amounts = np.asarray(amounts, dtype=float)
    if amounts.shape != (data.d,):
        raise DimensionMismatchError(f"expected {data.d} amounts, got shape {amounts.shape}")
    if not np.all(np.isfinite(amounts)) or np.any(amounts < 0) or not np.any(amounts > 0):
        raise InvalidTransferError("amounts must be finite, non-negative and not all zero")
    giver, taker = data.values[donor], data.values[recipient]
    if donor == recipient or not (np.all(giver >= taker) and np.any(giver > taker)):
        raise NotRicherError(
            f"row {donor} {giver.tolist()} does not dominate row {recipient} {taker.tolist()}"
        )
    values = np.array(data.values)
    values[donor] -= amounts
    values[recipient] += amounts
    if np.any(values[donor] < 0):
        raise NegativeResultError(f"transfer leaves row {donor} with a negative amount")
    return data.replace_values(values)


def parse_transfer_specs(lines: Iterable[str]) -> List[dict]:
    """Parse JSON-lines transfer specs, skipping blank lines."""
    specs = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            spec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InvalidTransferError(f"line {lineno}: {exc.msg}") from None
        kind = spec.get("kind") if isinstance(spec, dict) else None
        keys = {CIT: ("t", "z"), PDBT: ("from", "to", "amounts")}.get(kind)
        if keys is None:
            raise InvalidTransferError(f"line {lineno}: kind must be 'cit' or 'pdbt'")
        missing = [k for k in keys if k not in spec]
        if missing:
            raise InvalidTransferError(f"line {lineno}: missing {', '.join(missing)}")
        specs.append(spec)
    return specs


def apply_transfers(data: Dataset, specs: Iterable[dict]) -> Tuple[Dataset, List[TransferRecord]]:
    """Apply transfers in order, recording the multivariate Gini around each step."""
    records = []
    current = megc(pseudo_observations(data))
    for spec in specs:
        kind = spec["kind"]
        if kind == CIT:
            actors = (spec["t"], spec["z"])
            data = apply_cit(data, *actors)
            amounts = None
        elif kind == PDBT:
            actors = (spec["from"], spec["to"])
            data = apply_pdbt(data, *actors, spec["amounts"])
            amounts = tuple(float(a) for a in spec["amounts"])
        else:
            raise InvalidTransferError(f"unknown transfer kind {kind!r}")
        after = megc(pseudo_observations(data))
        records.append(TransferRecord(kind, actors, current, after, amounts))
        current = after
    return data, records


def audit_cim(data: Dataset, transfers: Iterable) -> List[TransferRecord]:
    """Apply a sequence of CITs, given as ``(t, z)`` pairs or spec dicts."""
    specs = []
    for tr in transfers:
        if isinstance(tr, dict):
            if tr.get("kind", CIT) != CIT:
                raise InvalidTransferError("audit_cim accepts CITs only")
            specs.append({"kind": CIT, "t": tr["t"], "z": tr["z"]})
        else:
            t, z = tr
            specs.append({"kind": CIT, "t": t, "z": z})
    _, records = apply_transfers(data, specs)
    return records


def _comparison_grid(a: Dataset, b: Dataset, grid: GridSpec) -> GridSpec:
    pa, pb = pseudo_observations(a), pseudo_observations(b)
    knots = [
        np.unique(np.concatenate([grid.knots[i], pa.stars[:, i], pb.stars[:, i]]))
        for i in range(a.d)
    ]
    if math.prod(k.size for k in knots) > MAX_COMPARISON_POINTS:
        log.warning(
            "too many surface breakpoints to compare exactly; comparing on the %s grid only",
            "x".join(map(str, grid.shape)),
        )
        return grid
    return GridSpec(tuple(knots))


def lorenz_order(a: Dataset, b: Dataset, grid: Optional[GridSpec] = None) -> Order:
    """Compare two datasets by their empirical inverse Lorenz surfaces.

    ``A_DOMINATES`` means A's surface is everywhere at least B's and somewhere
    larger, i.e. A is the more unequal. Both surfaces are step functions, so
    evaluating at the union of their breakpoints (plus ``grid``) decides the
    order exactly.
    """
    if a.d != b.d:
        raise DimensionMismatchError(f"datasets have {a.d} and {b.d} variables")
    grid = grid or GridSpec.uniform(a.d)
    if grid.d != a.d:
        raise DimensionMismatchError("grid dimension differs from the data")
    points = _comparison_grid(a, b, grid)
    diff = meilc_surface(pseudo_observations(a), points).values - meilc_surface(
        pseudo_observations(b), points
    ).values
    a_ge = bool(np.all(diff >= -ORDER_TOL))
    b_ge = bool(np.all(diff <= ORDER_TOL))
    if a_ge and b_ge:
        return Order.EQUAL
    if a_ge:
        return Order.A_DOMINATES
    if b_ge:
        return Order.B_DOMINATES
    return Order.INCOMPARABLE
