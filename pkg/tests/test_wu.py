import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import trapezoid

from chenbound import buchstab, wu
from chenbound.quadrature import QuadratureConfig, UndefinedIntegrand, integrate_ordered

ROW1 = wu.WU_ROWS[1]
EG = buchstab.OMEGA_LIMIT
THESIS_PSI1 = {5: 0.00947409, 6: 0.00659089, 7: 0.00354796, 8: 0.00105838, 9: 0.0}


def test_alpha_row1():
    a = wu.alpha_set(ROW1)
    assert a[1] == pytest.approx(1.53, abs=1e-14)
    assert a[2] == pytest.approx(2.54, abs=1e-14)
    assert a[3] == pytest.approx(4.54 - 4.54 / 2.2 - 1, abs=1e-14)
    assert a[3] == pytest.approx(1.4763636, abs=1e-7)
    assert a[9] == pytest.approx(3.53 - 3.53 / 2.90 - 1, abs=1e-14)


@pytest.mark.parametrize("row", [1, 2, 3, 4])
def test_published_rows_are_admissible(row):
    assert wu.WU_ROWS[row].psi2_violations() == []


def test_constraint_violations_are_reported():
    bad = wu.WuParams(2.2, 4.54, 3.53, 2.90, 3.0)  # k3 > k2
    with pytest.raises(wu.ConstraintViolation) as exc:
        wu.alpha_set(bad)
    assert any("k3" in f for f in exc.value.failures)
    with pytest.raises(wu.ConstraintViolation):
        wu.psi1(2.2, 3.1)  # s' - s'/s < 2
    with pytest.raises(wu.ConstraintViolation):
        wu.psi2(wu.WuParams(2.6, 3.58))
    with pytest.raises(wu.ConstraintViolation):
        wu.i2(9, 3.0, bad)


def test_sigma_oracles():
    # values from 30-digit mpmath quadrature
    assert wu.sigma(3, 3, 4) == 0.0
    assert wu.sigma(3, 5, 4) == pytest.approx(0.17169341969587589919, abs=1e-13)
    assert wu.sigma0(1.0) == 0.0
    assert wu.sigma0(2.0) == pytest.approx(0.06903253559601151241, abs=1e-13)
    assert wu.sigma0(3.0) == pytest.approx(0.20728245287250562419, abs=1e-13)
    t = np.array([1.0, 2.0, 3.0])
    assert np.allclose(wu.sigma0(t), [wu.sigma0(x) for x in t], rtol=0, atol=1e-15)


def test_sigma_against_trapezoid():
    t = np.linspace(3.0, 5.0, 200_001)
    ref = trapezoid(np.log(4 / (t - 1)) / t, t)
    assert wu.sigma(3, 5, 4) == pytest.approx(ref, abs=1e-8)


def test_xi1_points():
    s, sp = 2.6, 3.58
    assert wu.xi1(1.0, s, sp) == 0.0
    d = (s - 1) * (sp - 1)
    t = 2.9
    expect = wu.sigma0(t) / (2 * t) * math.log(16 / d) + math.log((t + 1) ** 2 / d) / (2 * t)
    assert wu.xi1(t, s, sp) == pytest.approx(expect, rel=1e-14)
    t = 1.4  # alpha3 = 1.2031 <= t <= alpha2 = 1.58
    expect = (wu.sigma0(t) / (2 * t) * math.log(16 / d)
              + math.log((t + 1) / ((s - 1) * (sp - 1 - t))) / (2 * t))
    assert wu.xi1(t, s, sp) == pytest.approx(expect, rel=1e-14)


def test_xi2_points():
    assert wu.xi2(1.0, ROW1) == 0.0
    t = np.linspace(1.0, 3.0, 41)
    for plus in (True, False):
        assert np.allclose(wu.xi2(t, ROW1, plus), wu.xi2_terms(t, ROW1, plus).sum(axis=0), rtol=0, atol=0)
    prod5 = 1.2 * 3.54 * 2.53 * 1.9 * 1.44
    terms = wu.xi2_terms(3.0, ROW1)
    assert terms[1, 0] == pytest.approx(math.log(4**5 / prod5) / 15, rel=1e-14)


@pytest.mark.parametrize("row", [1, 2, 3, 4])
def test_indicator_zero_terms(row):
    p = wu.WU_ROWS[row]
    a = wu.alpha_values(p)
    spans = [None, (a[1], 3), (a[8], a[0]), (a[4], a[1]), (a[2], a[1]), (a[0], a[1]),
             (a[6], a[4]), (a[4], a[7]), (a[5], a[7]), (a[7], a[1])]
    t = np.linspace(1.0, 3.0, 2001)
    terms = wu.xi2_terms(t, p)
    for k, span in enumerate(spans):
        if span is None:
            continue
        lo, hi = span
        outside = (t < lo) | (t > hi) | np.full(t.shape, lo > hi)
        assert np.all(terms[k, outside] == 0.0), k


def test_xi2_reversed_interval_contributes_nothing():
    # admissible rows never reverse an interval, so use k1 > s' (alpha1 > alpha2)
    p = wu.WuParams(2.2, 3.5, 3.8, 2.9, 2.44)
    a = wu.alpha_values(p)
    assert a[0] > a[1]
    terms = wu.xi2_terms(np.linspace(1, 3, 501), p)
    assert np.all(terms[5] == 0.0)
    assert np.all(wu._ind(np.linspace(0, 4, 81), 2.0, 1.0) == 0.0)
    assert wu._ind(np.array([1.0, 2.0]), 1.0, 2.0).tolist() == [1.0, 1.0]


def test_phi_low_i1_is_two():
    assert wu.phi_low(wu.i1_domain(2.6, 3.58).domain, 1) == 2.0


def test_i1_empty_domain_is_zero():
    assert wu.i1(2.0, 3.0, 3.0) == 0.0


def test_i1_against_independent_oracle():
    # scipy tplquad with the delay-ODE omega, abs err 8e-9
    assert wu.i1(2.0, 2.6, 3.58) == pytest.approx(0.0093918526007, abs=1e-9)


def test_i1_below_threshold_is_undefined():
    w = wu.i2_domain(21, ROW1)
    lo = wu.phi_low(w.domain, w.divisor)
    assert lo > 2
    with pytest.raises(UndefinedIntegrand):
        wu.i2(21, lo - 0.05, ROW1)


def test_i2_dispatch():
    dims = {i: wu.i2_domain(i, ROW1).domain.dim for i in range(9, 22)}
    assert dims == {**{i: 3 for i in range(9, 16)}, **{i: 4 for i in range(16, 20)}, 20: 5, 21: 6}
    assert wu.i2_domain(20, ROW1).exponents == (1, 1, 2, 0, 1)
    assert wu.i2_domain(20, ROW1, "alternate").exponents == (1, 1, 1, 2, 1)
    with pytest.raises(ValueError):
        wu.i2_domain(22, ROW1)
    with pytest.raises(ValueError):
        wu.i2_domain(20, ROW1, "other")


def test_i2_degenerate_domain():
    # k1 = k3 collapses the I2_9 domain; such k's are outside the admissible
    # region (alpha5 < alpha8 needs k > s'), so integrate the domain directly
    p = wu.WuParams(2.2, 4.54, 3.0, 3.0, 3.0)
    w = wu.i2_domain(9, p)
    assert w.domain.volume() == 0.0
    assert integrate_ordered(w.integrand(3.0, wu.DEFAULT_WU.omega), w.domain) == 0.0
    with pytest.raises(wu.ConstraintViolation):
        wu.i2(9, 3.0, p)


def test_constant_tail_factorisation_i1():
    dom = wu.i1_domain(2.6, 3.58)
    weight = integrate_ordered(dom.weight_only(), dom.domain, QuadratureConfig(abs_tol=1e-13, rel_tol=1e-12))
    assert wu.i1(30.0, 2.6, 3.58) == pytest.approx(EG * weight, rel=1e-4)


@pytest.mark.parametrize("i", range(9, 22))
def test_constant_tail_factorisation_i2(i):
    cfg = wu.DEFAULT_WU
    w = wu.i2_domain(i, ROW1)
    weight = integrate_ordered(w.weight_only(), w.domain, cfg.quad)
    for phi in (30.0, 45.0):
        assert wu.i2(i, phi, ROW1, cfg) == pytest.approx(EG * weight, rel=1e-3)


def _pipeline_domains():
    for r in range(5, 10):
        p = wu.WU_ROWS[r]
        yield f"I1-row{r}", wu.i1_domain(p.s, p.s_prime)
    for r in range(1, 5):
        for i in range(9, 22):
            yield f"I2_{i}-row{r}", wu.i2_domain(i, wu.WU_ROWS[r])


@pytest.mark.parametrize("name,w", list(_pipeline_domains()), ids=lambda v: v if isinstance(v, str) else "")
def test_phi_feasibility_agrees(name, w):
    if w.domain.is_empty():
        pytest.skip("empty domain")
    analytic = wu.phi_low(w.domain, w.divisor)
    numeric = wu.numeric_phi_low(w)
    assert abs(numeric - analytic) <= 0.002


def test_i1_shrinks_with_domain():
    # 1/s' <= t <= u <= v <= 1/s shrinks as s' decreases to s
    vals = [wu.i1(2.0, 2.6, sp) for sp in (3.9, 3.7, 3.58, 3.3, 3.0, 2.8)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_i1_maximal_at_two():
    for r in range(5, 9):
        p = wu.WU_ROWS[r]
        assert wu.i1_max(p.s, p.s_prime).phi_max == 2.0


def test_i2_11_interior_maximum():
    m = wu.i2_max(11, ROW1)
    assert m.phi_max > m.phi_low
    assert m.phi_low <= m.phi_max


def test_log_ratio_integral_oriented():
    # 30-digit mpmath values
    assert wu.log_ratio_integral(2.90) == pytest.approx(0.00267779778274834254, abs=1e-15)
    assert wu.log_ratio_integral(4.54) == pytest.approx(0.28196905366826550741, abs=1e-14)
    assert wu.log_ratio_integral(3.0) == 0.0
    with pytest.raises(ValueError):
        wu.log_ratio_integral(2.0)


@pytest.mark.parametrize("row", [5, 6, 7, 8, 9])
def test_psi1_thesis_column(row):
    p = wu.WU_ROWS[row]
    assert wu.psi1(p.s, p.s_prime) == pytest.approx(THESIS_PSI1[row], abs=1e-4)


def test_psi1_one_dimensional_part():
    parts = wu.psi1_parts(2.6, 3.58)
    # -L(3.58) + S/2 from 30-digit mpmath
    assert -parts["log_term"] + 0.5 * parts["switch_term"] == pytest.approx(0.01886594345439206769, abs=1e-13)
    assert parts["value"] == pytest.approx(0.01886594345439207 - parts["i1"].value, abs=1e-15)


@pytest.mark.parametrize("row", [5, 6, 7, 8])
def test_psi1_argmax_stability(row):
    p = wu.WU_ROWS[row]
    sps = np.round(np.arange(3.0, 5.0 + 1e-9, 0.01), 10)
    vals = []
    for sp in sps:
        if wu.WuParams(p.s, sp).psi1_violations():
            continue
        vals.append((wu.psi1(p.s, sp), sp))
    best = max(vals)[1]
    assert abs(best - p.s_prime) <= 0.01 + 1e-9


@pytest.fixture(scope="module")
def cheap_row1():
    cheap = replace(wu.DEFAULT_WU, quad=replace(wu.DEFAULT_WU.quad, mc_samples=1 << 12))
    return cheap, wu.psi2_parts(ROW1, cheap)


def test_psi2_one_dimensional_part(cheap_row1):
    # five 1-D integrals, 30-digit mpmath value
    assert cheap_row1[1]["one_d"] == pytest.approx(0.04792500083815639050, abs=1e-13)


def test_psi2_upper_index_variant(cheap_row1):
    cheap, full = cheap_row1
    short = wu.psi2_parts(ROW1, replace(cheap, i2_upper=19))
    assert sorted(full["i2"]) == list(range(9, 22))
    assert sorted(short["i2"]) == list(range(9, 20))
    extra = full["i2"][20].value + full["i2"][21].value
    assert short["value"] - full["value"] == pytest.approx(0.4 * extra, abs=1e-15)
