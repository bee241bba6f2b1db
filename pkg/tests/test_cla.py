import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from marketdef import cla
from marketdef.errors import DomainError, UnitError


@pytest.mark.parametrize("p0,avc0,cm", [(100, 75, 0.25), (100, 0, 1.0), (80, 60, 0.25)])
def test_contribution_margin(p0, avc0, cm):
    assert cla.contribution_margin(p0, avc0) == cm


def test_margin_non_positive():
    with pytest.raises(DomainError):
        cla.contribution_margin(50, 50)
    with pytest.raises(DomainError):
        cla.contribution_margin(50, 60)


def test_critical_loss_values():
    assert abs(cla.critical_loss(0.05, 0.25) - 100 / 6) < 1e-9
    assert cla.critical_loss(0.1, 0.4) == pytest.approx(20.0, abs=1e-12)
    assert cla.critical_loss(0.05, 1e-9) > 99.99
    with pytest.raises(DomainError):
        cla.critical_loss(0.05, 0)


def test_critical_loss_monotone_on_grid():
    ys = np.linspace(0.01, 0.5, 25)
    cms = np.linspace(0.01, 1.0, 25)
    grid = np.array([[cla.critical_loss(y, c) for c in cms] for y in ys])
    assert np.all(np.diff(grid, axis=1) < 0)
    assert np.all(np.diff(grid, axis=0) > 0)
    assert np.all((grid > 0) & (grid < 100))


def test_general_form_reduces():
    for y, p0, avc in [(0.05, 100, 75), (0.1, 40, 10), (0.2, 7, 6)]:
        cm = cla.contribution_margin(p0, avc)
        g = cla.critical_loss_general(y, p0, avc, avc)
        assert g * 100 == pytest.approx(cla.critical_loss(y, cm), abs=1e-12)
    # a cheaper post-increase cost raises the break-even loss
    assert cla.critical_loss_general(0.05, 100, 75, 70) > cla.critical_loss_general(0.05, 100, 75, 75)


def test_actual_loss_demand():
    assert cla.actual_loss_demand(1000, 900, 400, 460) == 40
    assert cla.actual_loss_demand(5, 5, 5, 5) == 0
    assert cla.actual_loss_demand(1000, 950, 400, 480) == -30
    with pytest.raises(DomainError):
        cla.actual_loss_demand(-1, 0, 0, 0)


def test_actual_loss_elasticities():
    assert cla.actual_loss_elasticities(0.05, 2, 1000, 0.5, 400) == pytest.approx(90)
    assert cla.actual_loss_elasticities(0.05, 0, 1000, 0, 400) == 0
    with pytest.raises(DomainError, match="magnitudes"):
        cla.actual_loss_elasticities(0.05, -2, 1000, 0.5, 400)


def test_elasticity_form_matches_demand_form():
    # linear demands built from (e, q, y): dQ_A = y e_aa q_a, dQ_B = y e_ba q_b
    y, e_aa, q_a, e_ba, q_b = 0.05, 2.5, 800.0, 0.7, 300.0
    qa1 = q_a - y * e_aa * q_a
    qb1 = q_b + y * e_ba * q_b
    d = cla.actual_loss_demand(q_a, qa1, q_b, qb1)
    e = cla.actual_loss_elasticities(y, e_aa, q_a, e_ba, q_b)
    assert abs(d - e) < 1e-9


def test_adr():
    assert cla.actual_loss_adr(0.05, 0.25, 0.5) == pytest.approx(0.10)
    assert cla.actual_loss_adr(0.3, 0.1, 1.0) == 0
    assert cla.actual_loss_adr(0.05, 0.25, 0.0) == 0.05 / 0.25
    with pytest.raises(DomainError):
        cla.actual_loss_adr(0.05, 0, 0.5)


def test_obrien():
    assert cla.actual_loss_obrien(0.05, 0.25, 1) == pytest.approx(0.15)
    assert cla.actual_loss_obrien(0.05, 0.25, 4) == 0
    assert cla.actual_loss_obrien(0.1, 0.5, 0) == pytest.approx(0.2)
    with pytest.raises(DomainError):
        cla.actual_loss_obrien(0.1, 0, 1)


def test_hm_avc():
    assert cla.hm_avc_simple([10, 20, 30]) == 20
    assert cla.hm_avc_simple([7.5]) == 7.5
    assert cla.hm_avc_weighted([(10, 1), (20, 3)]) == 17.5
    assert cla.hm_avc_weighted([(10, 1e6), (20, 1)]) == pytest.approx(10, abs=1e-3)
    with pytest.raises(DomainError):
        cla.hm_avc_simple([])
    with pytest.raises(DomainError):
        cla.hm_avc_weighted([(10, 0)])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1e4), min_size=1, max_size=12), st.floats(1e-3, 1e6))
def test_weighted_equal_quantities_is_simple(avcs, q):
    assert cla.hm_avc_weighted([(a, q) for a in avcs]) == cla.hm_avc_simple(avcs)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1e4), min_size=1, max_size=12), st.randoms())
def test_simple_mean_permutation_invariant(avcs, rnd):
    shuffled = avcs[:]
    rnd.shuffle(shuffled)
    assert cla.hm_avc_simple(shuffled) == cla.hm_avc_simple(avcs)


def test_verdict_examples():
    cl = cla.critical_loss(0.05, 0.25)
    assert cla.ssnip_verdict(cl, 12, cla.DEMAND_EQ17).profitable
    assert not cla.ssnip_verdict(cl, cl, cla.DEMAND_EQ17).profitable
    assert not cla.ssnip_verdict(cl, 40, cla.DEMAND_EQ17).profitable


def test_verdict_units():
    with pytest.raises(UnitError):
        cla.ssnip_verdict(16.67, 0.12, cla.DEMAND_EQ17, al_unit=cla.FRACTION)
    v = cla.ssnip_verdict(0.1667, 0.12, cla.DEMAND_EQ17, cl_unit=cla.FRACTION, al_unit=cla.FRACTION)
    assert v.profitable and v.critical_loss_pct == pytest.approx(16.67)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 100), st.floats(-50, 150))
def test_verdict_scale_invariant(cl, al):
    pct = cla.ssnip_verdict(cl, al, cla.ELASTICITY_EQ23)
    frac = cla.ssnip_verdict(cl / 100, al / 100, cla.ELASTICITY_EQ23, cl_unit=cla.FRACTION, al_unit=cla.FRACTION)
    # dividing both sides by 100 can only reorder values that were within an ulp
    if abs(cl - al) > 1e-9 * max(1.0, abs(cl)):
        assert pct.profitable == frac.profitable


def test_discouraged_flags():
    for m in cla.METHODS:
        v = cla.ssnip_verdict(10, 5, m)
        assert v.discouraged == (m in (cla.ADR_EQ26, cla.OBRIEN_EQ22))
        assert (v.caveat is not None) == v.discouraged
    with pytest.raises(DomainError):
        cla.ssnip_verdict(10, 5, "eq18")


def test_scenarios():
    cla.SsnipScenario("single", 0.05, (2,))
    cla.SsnipScenario("all_products", 0.1, (0, 1, 2), n_products=3)
    with pytest.raises(DomainError):
        cla.SsnipScenario("single", 0.05, (1, 2))
    with pytest.raises(DomainError):
        cla.SsnipScenario("all_products", 0.05, (0, 2), n_products=3)
    with pytest.raises(DomainError):
        cla.SsnipScenario(y=0.6)


def test_upp():
    assert cla.upp(0.3, 100, 60, 0.1, 50) == pytest.approx(7)
    assert cla.upp(0, 100, 60, 0, 50) == 0
    assert cla.upp(0.3, 100, 60, 1, 50) < 0
    with pytest.raises(DomainError):
        cla.upp(1.2, 100, 60, 0, 50)


def test_firm_economics():
    f = cla.FirmEconomics(100, 75, 1000)
    assert f.margin == 0.25
    with pytest.raises(DomainError):
        cla.FirmEconomics(0, 1, 1)
