"""Critical loss against actual loss for a candidate market.

A hypothetical monopolist sells product A at 10 with variable cost 8.
Substitute B sits inside the candidate market, so some of A's lost sales
come back.  We compare the break-even loss with the loss implied by a
linear demand system, then show how thin margins change the answer.
"""
from marketdef import cla


def qa(pa, pb):
    return 1000 - 40 * pa + 10 * pb


def qb(pa, pb):
    return 600 + 12 * pa - 30 * pb


y = 0.05
pa, pb, avc = 10.0, 8.0, 8.0
cm = cla.contribution_margin(pa, avc)
cl = cla.critical_loss(y, cm)
print(f"margin {cm:.0%}, {y:.0%} price rise -> critical loss {cl:.2f}% of A's sales")

lost = cla.actual_loss_demand(qa(pa, pb), qa(pa * (1 + y), pb), qb(pa, pb), qb(pa * (1 + y), pb))
al = cla.loss_pct(lost, qa(pa, pb))
v = cla.ssnip_verdict(cl, al, cla.DEMAND_EQ17)
print(f"net units lost {lost:.1f} -> actual loss {al:.2f}%; profitable: {v.profitable}")

# the same number from elasticities (magnitudes)
e_aa = 40 * pa / qa(pa, pb)
e_ba = 12 * pa / qb(pa, pb)
print("elasticity form gives", cla.actual_loss_elasticities(y, e_aa, qa(pa, pb), e_ba, qb(pa, pb)))

# shortcut formulas, kept for comparison only
adr = cla.actual_loss_adr(y, cm, 0.5) * 100
vs = cla.ssnip_verdict(cl, adr, cla.ADR_EQ26)
print(f"diversion-ratio shortcut: {adr:.2f}% ({'profitable' if vs.profitable else 'not profitable'}); {vs.caveat}")

print("\nmargin  critical loss")
for c in (0.01, 0.05, 0.1, 0.25, 0.5, 0.9):
    print(f"{c:5.2f}   {cla.critical_loss(y, c):6.2f}%")
print("high margins make even small losses unprofitable, which is why the test can cut both ways")
