"""Product-feature ingestion, standardization and 2-D projection.

The clustering substrate is an ``n x d`` matrix whose rows are products (or
providers) and whose columns are substitutability features.  Features are
z-scored with the sample standard deviation (``n - 1`` denominator) so that
every dimension carries the same weight in Euclidean distance.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from marketdef.errors import (
    DegenerateColumnError,
    DimensionError,
    DomainError,
    ParseError,
    SchemaError,
)

NUMERIC = "numeric"
BINARY = "binary"
ZSCORE = "zscore"
NONE = "none"


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str = NUMERIC
    transform: str = ZSCORE

    def __post_init__(self):
        if self.kind not in (NUMERIC, BINARY):
            raise SchemaError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if self.transform not in (ZSCORE, NONE):
            raise SchemaError(f"feature {self.name!r}: unknown transform {self.transform!r}")

    @classmethod
    def from_dict(cls, d) -> "FeatureSpec":
        if isinstance(d, str):
            return cls(d)
        try:
            return cls(d["name"], d.get("kind", NUMERIC), d.get("transform", ZSCORE))
        except KeyError as exc:
            raise SchemaError(f"feature spec {d!r} has no 'name'") from exc

    def to_dict(self) -> dict:
        return {"kind": self.kind, "name": self.name, "transform": self.transform}


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ProductFeatureMatrix:
    """Products x features.

    Attributes:
        product_ids: row labels, in file order.
        specs: one :class:`FeatureSpec` per column.
        values: ``(n, d)`` float array (read-only).
        standardized: True once :func:`standardize` has been applied.
        id_column: header used for the id column when serialized.
    """

    product_ids: tuple[str, ...]
    specs: tuple[FeatureSpec, ...]
    values: np.ndarray
    standardized: bool = False
    id_column: str = "product_id"

    def __post_init__(self):
        object.__setattr__(self, "product_ids", tuple(str(p) for p in self.product_ids))
        object.__setattr__(self, "specs", tuple(self.specs))
        values = _frozen(self.values)
        if values.ndim != 2:
            raise DimensionError("feature values must be a 2-D matrix")
        object.__setattr__(self, "values", values)
        n, d = values.shape
        if n < 2 or d < 1:
            raise DimensionError(f"need at least 2 products and 1 feature, got {n}x{d}")
        if len(self.product_ids) != n:
            raise DimensionError("product_ids length does not match the number of rows")
        if len(self.specs) != d:
            raise DimensionError("specs length does not match the number of columns")
        names = [s.name for s in self.specs]
        if len(set(names)) != len(names):
            raise SchemaError("feature names must be unique")
        if not np.all(np.isfinite(values)):
            raise DomainError("feature matrix contains non-finite entries")
        if not self.standardized:
            for j, s in enumerate(self.specs):
                if s.kind == BINARY and not np.all((values[:, j] == 0) | (values[:, j] == 1)):
                    raise DomainError(f"binary feature {s.name!r} has values outside {{0, 1}}")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.specs]

    def index_of(self, product_id: str) -> int:
        try:
            return self.product_ids.index(str(product_id))
        except ValueError:
            raise SchemaError(f"unknown product id {product_id!r}") from None


@dataclass(frozen=True)
class PcaProjection:
    components: np.ndarray
    scores: np.ndarray
    variance_explained: tuple[float, float]
    center: np.ndarray = field(default=None, repr=False)


def _parse_cell(text: str, path, row: int, column: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"{path}: row {row}, column {column!r}: cannot parse {text!r} as a number") from None
    if not math.isfinite(v):
        raise ParseError(f"{path}: row {row}, column {column!r}: non-finite value {text!r}")
    return v


def load_csv(path, spec: Sequence[FeatureSpec], id_column: str) -> ProductFeatureMatrix:
    """Read a header-first CSV into an unstandardized matrix.

    Rows keep file order.  Row numbers in error messages count data rows
    from 1 (the header is not counted).
    """
    spec = [s if isinstance(s, FeatureSpec) else FeatureSpec.from_dict(s) for s in spec]
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, header row required") from None
        header = [h.strip() for h in header]
        if id_column not in header:
            raise SchemaError(f"{path}: id column {id_column!r} not found")
        cols = {}
        for s in spec:
            if s.name not in header:
                raise SchemaError(f"{path}: declared column {s.name!r} not found")
            cols[s.name] = header.index(s.name)
        id_idx = header.index(id_column)
        ids, rows = [], []
        for rownum, rec in enumerate(reader, start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise ParseError(f"{path}: row {rownum} has {len(rec)} fields, expected {len(header)}")
            ids.append(rec[id_idx].strip())
            vals = []
            for s in spec:
                v = _parse_cell(rec[cols[s.name]].strip(), path, rownum, s.name)
                if s.kind == BINARY and v not in (0.0, 1.0):
                    raise DomainError(f"{path}: row {rownum}, binary column {s.name!r} has value {v!r}")
                vals.append(v)
            rows.append(vals)
    if len(rows) < 2:
        raise DimensionError(f"{path}: need at least 2 data rows, got {len(rows)}")
    return ProductFeatureMatrix(ids, spec, np.array(rows, dtype=float), False, id_column)


def format_number(v: float) -> str:
    """Shortest string that round-trips to the same double."""
    v = float(v)
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def csv_text(m: ProductFeatureMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([m.id_column, *m.names])
    for pid, row in zip(m.product_ids, m.values):
        w.writerow([pid, *(format_number(v) for v in row)])
    return buf.getvalue()


def write_csv(m: ProductFeatureMatrix, path) -> None:
    Path(path).write_text(csv_text(m), encoding="utf-8")


def collapse_columns(m: ProductFeatureMatrix, groups: dict[str, Sequence[str]]) -> ProductFeatureMatrix:
    """Replace groups of columns by their row-wise mean.

    Used for pre-averaging, e.g. five yearly premiums into one average
    premium per coverage type.  Output columns follow ``groups`` order and are
    numeric/z-score features.
    """
    out, specs = [], []
    for name, members in groups.items():
        idx = []
        for c in members:
            if c not in m.names:
                raise SchemaError(f"column {c!r} not found")
            idx.append(m.names.index(c))
        out.append(m.values[:, idx].mean(axis=1))
        specs.append(FeatureSpec(name))
    return ProductFeatureMatrix(m.product_ids, specs, np.column_stack(out), False, m.id_column)


def standardize(m: ProductFeatureMatrix) -> ProductFeatureMatrix:
    """Z-score every ``zscore`` column with the sample standard deviation.

    Applying it to an already standardized matrix is allowed and changes
    nothing beyond rounding.

    Raises:
        DegenerateColumnError: a z-score column is constant.
    """
    x = np.array(m.values, dtype=float)
    for j, s in enumerate(m.specs):
        if s.transform != ZSCORE:
            continue
        col = x[:, j]
        mu = col.mean()
        sd = col.std(ddof=1)
        if not sd > 0 or np.all(col == col[0]):
            raise DegenerateColumnError(s.name)
        x[:, j] = (col - mu) / sd
    return replace(m, values=x, standardized=True)


def constant_columns(m: ProductFeatureMatrix) -> list[str]:
    return [s.name for j, s in enumerate(m.specs)
            if s.transform == ZSCORE and np.all(m.values[:, j] == m.values[0, j])]


def drop_columns(m: ProductFeatureMatrix, names: Iterable[str]) -> ProductFeatureMatrix:
    names = set(names)
    keep = [j for j, s in enumerate(m.specs) if s.name not in names]
    if not keep:
        raise DimensionError("no feature columns left after dropping")
    return replace(m, specs=tuple(m.specs[j] for j in keep), values=m.values[:, keep])


def _as_array(m) -> np.ndarray:
    if isinstance(m, ProductFeatureMatrix):
        return np.asarray(m.values, dtype=float)
    return np.asarray(m, dtype=float)


def principal_axes(x: np.ndarray):
    """Centered SVD with the deterministic sign convention.

    Returns ``(center, axes, eigenvalues)`` where ``axes`` has one unit
    column per principal direction and ``eigenvalues`` are sample variances
    along them, in non-increasing order.
    """
    center = x.mean(axis=0)
    xc = x - center
    _, s, vt = np.linalg.svd(xc, full_matrices=True)
    axes = vt.T.copy()
    for j in range(axes.shape[1]):
        col = axes[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            axes[:, j] = -col
    ev = np.zeros(axes.shape[1])
    ev[: len(s)] = s**2 / (x.shape[0] - 1)
    return center, axes, ev


def pca2(m) -> PcaProjection:
    """Project onto the top two principal components.

    Each component is signed so that its entry of largest magnitude is
    non-negative.  Variance fractions below ``1e-12`` of the total are
    reported as exactly 0.
    """
    x = _as_array(m)
    if x.ndim != 2 or x.shape[1] < 2:
        raise DimensionError("pca2 needs at least 2 feature columns")
    if x.shape[0] < 3:
        raise DimensionError("pca2 needs at least 3 rows")
    center, axes, ev = principal_axes(x)
    comps = axes[:, :2]
    scores = (x - center) @ comps
    total = ev.sum()
    if total <= 0:
        frac = (0.0, 0.0)
    else:
        f = ev[:2] / total
        f[f < 1e-12] = 0.0
        frac = (float(f[0]), float(f[1]))
    return PcaProjection(_frozen(comps), _frozen(scores), frac, _frozen(center))


def sample_size(sigma: float, width: float) -> int:
    """Respondents needed for a 95% interval of full width ``width``.

    ``ceil(16 sigma^2 / W^2)``, computed in exact rational arithmetic so
    that exact integers are not bumped up by rounding noise.
    """
    if not (sigma > 0 and width > 0):
        raise DomainError("sigma and width must be positive")
    return math.ceil(16 * Fraction(sigma) ** 2 / Fraction(width) ** 2)
