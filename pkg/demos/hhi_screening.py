"""Merger screening with the Herfindahl-Hirschman index.

Three toy markets, from fragmented to tight, each with one proposed
merger.  Shares are in percent.
"""
from marketdef import concentration as hc

markets = {
    "ten equal firms": (hc.equal_shares(10), ["F1", "F2"]),
    "regional grocers": (hc.MarketShares(("North", "South", "East", "West", "Other"), (28, 22, 20, 18, 12)),
                         ["East", "West"]),
    "three carriers": (hc.MarketShares(("A", "B", "C"), (40, 30, 30)), ["B", "C"]),
}

for name, (shares, merging) in markets.items():
    r = hc.screen(shares, merging)
    print(f"{name}: HHI {r.hhi_pre:.0f} -> {r.hhi_post:.0f} (delta {r.delta:.0f}), "
          f"{r.class_post}; {r.action}")

# rounded survey shares that add to 99.99 are rescaled, and the report says so
r = hc.screen(hc.shares_from([33.33, 33.33, 33.33]), ["F1", "F2"])
print(f"rounded shares: renormalized={r.renormalized}, post-merger HHI {r.hhi_post:.1f}")
