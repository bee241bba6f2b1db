"""Critical loss analysis for the hypothetical monopolist test.

Sign convention: elasticities are entered as non-negative magnitudes.  The
own-price term is the size of the quantity fall, the cross-price term the
size of the recaptured gain.  Passing a signed (negative) own elasticity
would silently flip every verdict, so negative magnitudes are rejected.

Units: :func:`critical_loss` returns a percent; each actual-loss variant
returns the natural unit of its formula (units of quantity for the demand
and elasticity forms, a fraction for the diversion-ratio and margin
forms).  :func:`ssnip_verdict` takes explicit unit tags for both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from marketdef.errors import DomainError, UnitError

PERCENT = "percent"
FRACTION = "fraction"

DEMAND_EQ17 = "demand_eq17"
ELASTICITY_EQ23 = "elasticity_eq23"
ADR_EQ26 = "adr_eq26"
OBRIEN_EQ22 = "obrien_eq22"
METHODS = (DEMAND_EQ17, ELASTICITY_EQ23, ADR_EQ26, OBRIEN_EQ22)
DISCOURAGED = frozenset({ADR_EQ26, OBRIEN_EQ22})

CAVEATS = {
    ADR_EQ26: "aggregate-diversion-ratio loss assumes margin = 1/elasticity and zero fixed cost; "
              "tends to conclude a narrower market than a demand-based actual loss",
    OBRIEN_EQ22: "margin-elasticity loss assumes a smooth linear demand at the current price; "
                 "tends to conclude a narrower market than a demand-based actual loss",
}


@dataclass(frozen=True)
class FirmEconomics:
    p0: float
    avc0: float
    q0: float
    fixed_cost: float = 0.0

    def __post_init__(self):
        if not self.p0 > 0:
            raise DomainError("price must be positive")
        if not self.q0 > 0:
            raise DomainError("quantity must be positive")
        if self.avc0 < 0 or self.fixed_cost < 0:
            raise DomainError("costs must be non-negative")

    @property
    def margin(self) -> float:
        return contribution_margin(self.p0, self.avc0)


@dataclass(frozen=True)
class SsnipScenario:
    """Which products receive the price increase.

    A descriptive record only; subsets are not enumerated automatically.
    """

    variant: str = "all_products"
    y: float = 0.05
    product_indices: tuple[int, ...] = ()
    n_products: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "product_indices", tuple(int(i) for i in self.product_indices))
        if not 0 < self.y <= 0.5:
            raise DomainError("SSNIP fraction must lie in (0, 0.5]")
        if self.variant not in ("all_products", "subset", "single"):
            raise DomainError(f"unknown SSNIP variant {self.variant!r}")
        if self.variant == "single" and len(self.product_indices) != 1:
            raise DomainError("a single-product SSNIP names exactly one product")
        if self.variant == "all_products" and self.n_products is not None:
            if sorted(self.product_indices) != list(range(self.n_products)):
                raise DomainError("an all-products SSNIP must cover every product")

    def to_dict(self) -> dict:
        return {"product_indices": list(self.product_indices), "variant": self.variant, "y": self.y}


@dataclass(frozen=True)
class ClaVerdict:
    critical_loss_pct: float
    actual_loss_pct: float
    profitable: bool
    method: str
    discouraged: bool
    scenario: SsnipScenario = field(default_factory=SsnipScenario)
    caveat: str | None = None

    def to_dict(self) -> dict:
        return {
            "actual_loss_pct": self.actual_loss_pct,
            "caveat": self.caveat,
            "critical_loss_pct": self.critical_loss_pct,
            "discouraged": self.discouraged,
            "method": self.method,
            "profitable": self.profitable,
            "scenario": self.scenario.to_dict(),
        }


def contribution_margin(p0: float, avc0: float) -> float:
    """(P0 - AVC0) / P0."""
    if not p0 > 0:
        raise DomainError("price must be positive")
    if avc0 < 0:
        raise DomainError("average variable cost must be non-negative")
    if avc0 >= p0:
        raise DomainError(f"non-positive contribution margin: avc0={avc0} >= p0={p0}")
    return (p0 - avc0) / p0


def critical_loss(y: float, cm: float) -> float:
    """Critical loss in percent, 100 * y / (y + cm), with AVC1 = AVC0."""
    if not (y > 0 and cm > 0):
        raise DomainError("price increase and margin must be positive")
    return 100.0 * y / (y + cm)


def critical_loss_general(y: float, p0: float, avc0: float, avc1: float) -> float:
    """Critical loss as a fraction when post-increase AVC differs from AVC0.

    (y p0 + avc0 - avc1) / (p0 + y p0 - avc1).  Reduces to
    ``critical_loss(y, cm) / 100`` when ``avc1 == avc0``.
    """
    if not (y > 0 and p0 > 0):
        raise DomainError("price increase and price must be positive")
    den = p0 + y * p0 - avc1
    if not den > 0:
        raise DomainError("post-increase price does not exceed AVC1")
    return (y * p0 + avc0 - avc1) / den


def actual_loss_demand(dA_p0: float, dA_p1: float, dB_p0: float, dB_p1: float) -> float:
    """Units lost by the raised product net of units recaptured in-market.

    Negative when recapture exceeds the loss.
    """
    if min(dA_p0, dA_p1, dB_p0, dB_p1) < 0:
        raise DomainError("demand quantities must be non-negative")
    return (dA_p0 - dA_p1) - (dB_p1 - dB_p0)


def actual_loss_elasticities(y: float, e_aa: float, q_a: float, e_ba: float, q_b: float) -> float:
    """y * e_aa * q_a - y * e_ba * q_b, elasticities as magnitudes."""
    if not y > 0:
        raise DomainError("price increase must be positive")
    if e_aa < 0 or e_ba < 0:
        raise DomainError("elasticities are entered as non-negative magnitudes")
    if not (q_a > 0 and q_b > 0):
        raise DomainError("quantities must be positive")
    return y * e_aa * q_a - y * e_ba * q_b


def actual_loss_adr(y: float, m: float, d: float) -> float:
    """(y / m) * (1 - d), as a fraction of sales.  Discouraged."""
    if not m > 0:
        raise DomainError("gross margin must be positive")
    if not 0 <= d <= 1:
        raise DomainError("diversion ratio must lie in [0, 1]")
    return (y / m) * (1 - d)


def actual_loss_obrien(y: float, cm: float, e_aa: float) -> float:
    """y * (1/cm - e_aa), as a fraction of sales.  Discouraged.

    Units are taken as given; the bracket mixes an inverse margin with an
    elasticity and no reconciliation is attempted.
    """
    if not cm > 0:
        raise DomainError("contribution margin must be positive")
    return y * (1 / cm - e_aa)


def loss_pct(units_lost: float, q0: float) -> float:
    """Express a unit loss as a percent of pre-increase sales."""
    if not q0 > 0:
        raise DomainError("baseline quantity must be positive")
    return 100.0 * units_lost / q0


def hm_avc_simple(avcs: Sequence[float]) -> float:
    """Unweighted mean AVC across the candidate market's firms."""
    avcs = [float(a) for a in avcs]
    if not avcs:
        raise DomainError("no AVC values")
    if any(a < 0 for a in avcs):
        raise DomainError("AVC values must be non-negative")
    return math.fsum(avcs) / len(avcs)


def hm_avc_weighted(pairs: Sequence[tuple[float, float]]) -> float:
    """Quantity-weighted mean AVC, sum(avc * q) / sum(q)."""
    pairs = [(float(a), float(q)) for a, q in pairs]
    if not pairs:
        raise DomainError("no (AVC, quantity) pairs")
    if any(q <= 0 for _, q in pairs):
        raise DomainError("quantities must be positive")
    if any(a < 0 for a, _ in pairs):
        raise DomainError("AVC values must be non-negative")
    # weights relative to the first quantity: equal quantities become exactly 1.0,
    # so the equal-weight case reduces to hm_avc_simple bit for bit
    q0 = pairs[0][1]
    w = [q / q0 for _, q in pairs]
    return math.fsum(a * wi for (a, _), wi in zip(pairs, w)) / math.fsum(w)


def _to_pct(value: float, unit: str) -> float:
    if unit == PERCENT:
        return float(value)
    if unit == FRACTION:
        return 100.0 * float(value)
    raise UnitError(f"unknown unit tag {unit!r}")


def ssnip_verdict(cl, al, method: str, scenario: SsnipScenario | None = None,
                  cl_unit: str = PERCENT, al_unit: str = PERCENT) -> ClaVerdict:
    """Profitable iff actual loss < critical loss (a tie leaves profit unchanged).

    Both sides must carry the same unit tag.  The comparison is done in the
    given unit; the record stores percents.
    """
    if cl_unit != al_unit:
        raise UnitError(f"critical loss in {cl_unit} but actual loss in {al_unit}")
    if method not in METHODS:
        raise DomainError(f"unknown actual-loss method {method!r}")
    _to_pct(0, cl_unit)
    if cl < 0:
        raise DomainError("critical loss must be non-negative")
    return ClaVerdict(
        critical_loss_pct=_to_pct(cl, cl_unit),
        actual_loss_pct=_to_pct(al, al_unit),
        profitable=bool(al < cl),
        method=method,
        discouraged=method in DISCOURAGED,
        scenario=scenario or SsnipScenario(),
        caveat=CAVEATS.get(method),
    )


def upp(d12: float, p2: float, c2: float, e1: float, c1: float) -> float:
    """Net upward pricing pressure on product 1: d12 (p2 - c2) - e1 c1.

    Positive values flag the merger for scrutiny.
    """
    if not 0 <= d12 <= 1:
        raise DomainError("diversion ratio must lie in [0, 1]")
    if min(p2, c2, c1) < 0:
        raise DomainError("prices and costs must be non-negative")
    return d12 * (p2 - c2) - e1 * c1
