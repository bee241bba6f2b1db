"""HHI concentration and merger screening.

Shares are percents (a monopoly scores 10000).  All boundary choices live in
:data:`CLASS_BOUNDS` and :func:`screening_action`:

* HHI exactly 1500 or exactly 2500 is moderately concentrated.
* A delta of exactly 100 falls in the lower band (no further analysis);
  exactly 200 falls in the middle band.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from marketdef.errors import DomainError, ParseError, SchemaError

UNCONCENTRATED = "Unconcentrated"
MODERATE = "ModeratelyConcentrated"
HIGH = "HighlyConcentrated"

NO_FURTHER = "NoFurtherAnalysis"
CONCERN = "SignificantConcern"
PRESUMED = "PresumedEnhancement"

CLASS_BOUNDS = (1500.0, 2500.0)
DELTA_BOUNDS = (100.0, 200.0)
SUM_TOLERANCE = 0.1


@dataclass(frozen=True)
class MarketShares:
    labels: tuple[str, ...]
    shares_pct: tuple[float, ...]

    def __post_init__(self):
        labels = tuple(str(s) for s in self.labels)
        shares = tuple(float(s) for s in self.shares_pct)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "shares_pct", shares)
        if len(labels) != len(shares) or not labels:
            raise DomainError("need one share per firm and at least one firm")
        if len(set(labels)) != len(labels):
            raise DomainError("firm labels must be unique")
        if any(s < 0 or not math.isfinite(s) for s in shares):
            raise DomainError("market shares must be finite and non-negative")
        if abs(self.total - 100.0) > SUM_TOLERANCE + 1e-9:
            raise DomainError(f"shares sum to {self.total}, not 100 within {SUM_TOLERANCE}")

    @classmethod
    def from_mapping(cls, mapping: dict) -> "MarketShares":
        return cls(tuple(mapping), tuple(mapping.values()))

    @property
    def total(self) -> float:
        return math.fsum(self.shares_pct)

    @property
    def needs_renormalization(self) -> bool:
        return self.total != 100.0

    def normalized(self) -> tuple[float, ...]:
        t = self.total
        if t == 100.0:
            return self.shares_pct
        return tuple(s * 100.0 / t for s in self.shares_pct)

    def as_dict(self) -> dict:
        return dict(zip(self.labels, self.shares_pct))


@dataclass(frozen=True)
class ScreeningReport:
    hhi_pre: float
    hhi_post: float
    delta: float
    class_pre: str
    class_post: str
    action: str
    merged_label: str = ""
    renormalized: bool = False

    def to_dict(self) -> dict:
        return {
            "action": self.action,
            "class_post": self.class_post,
            "class_pre": self.class_pre,
            "delta": self.delta,
            "hhi_post": self.hhi_post,
            "hhi_pre": self.hhi_pre,
            "merged_label": self.merged_label,
            "renormalized": self.renormalized,
        }


def hhi(shares: MarketShares) -> float:
    """Sum of squared percent shares (renormalized to 100 first)."""
    return math.fsum(s * s for s in shares.normalized())


def classify(h: float) -> str:
    if not -1e-9 <= h <= 10000.0 + 1e-9:
        raise DomainError(f"HHI {h} outside [0, 10000]")
    lo, hi = CLASS_BOUNDS
    if h < lo:
        return UNCONCENTRATED
    if h <= hi:
        return MODERATE
    return HIGH


def merge_shares(shares: MarketShares, merging: Iterable[str]) -> MarketShares:
    """Combine the merging firms into one entry placed where the first of them was.

    The combined label joins the member labels with ``+`` in their original
    order; a single-firm "merger" returns the shares unchanged.
    """
    merging = list(dict.fromkeys(str(m) for m in merging))
    if not merging:
        raise DomainError("no merging firms given")
    unknown = [m for m in merging if m not in shares.labels]
    if unknown:
        raise SchemaError(f"unknown firm label(s): {', '.join(unknown)}")
    if len(merging) == 1:
        return shares
    members = [lab for lab in shares.labels if lab in merging]
    combined = math.fsum(s for lab, s in zip(shares.labels, shares.shares_pct) if lab in merging)
    labels, values, placed = [], [], False
    for lab, s in zip(shares.labels, shares.shares_pct):
        if lab in merging:
            if not placed:
                labels.append("+".join(members))
                values.append(combined)
                placed = True
            continue
        labels.append(lab)
        values.append(s)
    return MarketShares(tuple(labels), tuple(values))


def screening_action(class_post: str, delta: float) -> str:
    lo, hi = DELTA_BOUNDS
    if class_post == UNCONCENTRATED or delta <= lo:
        return NO_FURTHER
    if class_post == MODERATE:
        return CONCERN
    return CONCERN if delta <= hi else PRESUMED


def screen(pre: MarketShares, merging: Iterable[str]) -> ScreeningReport:
    merging = list(merging)
    post = merge_shares(pre, merging)
    h0, h1 = hhi(pre), hhi(post)
    c0, c1 = classify(h0), classify(h1)
    delta = h1 - h0
    return ScreeningReport(
        hhi_pre=h0,
        hhi_post=h1,
        delta=delta,
        class_pre=c0,
        class_post=c1,
        action=screening_action(c1, delta),
        merged_label="+".join(lab for lab in pre.labels if lab in set(merging)),
        renormalized=pre.needs_renormalization,
    )


def load_shares_csv(path, label_column: str = "label", share_column: str = "share_pct") -> MarketShares:
    """Read ``label,share_pct`` rows.  Row numbers in errors count data rows from 1."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file, header row required")
        for col in (label_column, share_column):
            if col not in reader.fieldnames:
                raise SchemaError(f"{path}: column {col!r} not found")
        labels, shares = [], []
        for i, row in enumerate(reader, start=1):
            lab = (row.get(label_column) or "").strip()
            raw = (row.get(share_column) or "").strip()
            if not lab:
                raise ParseError(f"{path}: row {i}: empty firm label")
            try:
                val = float(raw)
            except ValueError:
                raise ParseError(f"{path}: row {i}: cannot parse share {raw!r}") from None
            if not math.isfinite(val):
                raise ParseError(f"{path}: row {i}: non-finite share {raw!r}")
            labels.append(lab)
            shares.append(val)
    return MarketShares(tuple(labels), tuple(shares))


def equal_shares(n: int) -> MarketShares:
    return MarketShares(tuple(f"F{i + 1}" for i in range(n)), tuple([100.0 / n] * n))


def shares_from(values: Sequence[float], labels: Sequence[str] | None = None) -> MarketShares:
    labels = labels or [f"F{i + 1}" for i in range(len(values))]
    return MarketShares(tuple(labels), tuple(values))
