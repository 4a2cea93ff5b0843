import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chenbound.quadrature import (
    NonConvergent,
    OrderedDomain,
    QuadratureConfig,
    Ref,
    ThresholdNotBracketed,
    UndefinedIntegrand,
    bisect_threshold,
    grid_maximize,
    integrate_1d,
    integrate_ordered,
)

TIGHT = QuadratureConfig(abs_tol=1e-12, rel_tol=1e-12)


def test_integrate_1d_polynomial_and_log():
    assert integrate_1d(lambda x: x**2, 0.0, 1.0, TIGHT) == pytest.approx(1 / 3, abs=1e-14)
    assert integrate_1d(np.log, 1.0, math.e, TIGHT) == pytest.approx(1.0, abs=1e-13)


def test_integrate_1d_scalar_callable():
    assert integrate_1d(lambda x: math.sin(x), 0.0, math.pi, TIGHT) == pytest.approx(2.0, abs=1e-12)


def test_integrate_1d_kink_with_breakpoint():
    f = lambda x: np.abs(x - 0.3)  # noqa: E731
    exact = 0.3**2 / 2 + 0.7**2 / 2
    assert integrate_1d(f, 0.0, 1.0, TIGHT, breakpoints=[0.3]) == pytest.approx(exact, abs=1e-14)
    assert integrate_1d(f, 0.0, 1.0, TIGHT) == pytest.approx(exact, abs=1e-11)


def test_integrate_1d_degenerate_and_reversed():
    assert integrate_1d(np.exp, 2.0, 2.0) == 0.0
    with pytest.raises(ValueError):
        integrate_1d(np.exp, 2.0, 1.0)


def test_integrate_1d_nonconvergent():
    cfg = QuadratureConfig(abs_tol=1e-15, rel_tol=1e-15, max_depth=3)
    with pytest.raises(NonConvergent):
        integrate_1d(lambda x: np.sign(x - 1 / 3), 0.0, 1.0, cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(abs_tol=0)
    with pytest.raises(ValueError):
        QuadratureConfig(mc_samples=0)
    with pytest.raises(ValueError):
        QuadratureConfig(max_depth=0)


def test_ref_must_point_backwards():
    with pytest.raises(ValueError):
        OrderedDomain((0.0, Ref(1)), (1.0, 1.0))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_chain_volume(n):
    dom = OrderedDomain.chain(0.25, 0.75, n)
    exact = 0.5**n / math.factorial(n)
    assert dom.volume() == pytest.approx(exact)
    assert integrate_ordered(lambda x: np.ones(len(x)), dom, QuadratureConfig(mc_samples=4096)) == pytest.approx(exact, rel=1e-12)


def test_product_volume():
    dom = OrderedDomain.product(OrderedDomain.chain(0.0, 1.0, 2), OrderedDomain.chain(1.0, 3.0, 1))
    assert dom.volume() == pytest.approx(1.0)
    val = integrate_ordered(lambda x: np.ones(len(x)), dom, method="iterated")
    assert val == pytest.approx(1.0, abs=1e-12)


def test_empty_domain_is_zero():
    dom = OrderedDomain.product(OrderedDomain.chain(0.5, 0.4, 2), OrderedDomain.chain(0.0, 1.0, 1))
    assert dom.is_empty()
    assert integrate_ordered(lambda x: np.ones(len(x)), dom) == 0.0


def test_iterated_matches_closed_form():
    # int_{0<=t<=u<=v<=1} t u v = 1/48
    dom = OrderedDomain.chain(0.0, 1.0, 3)
    val = integrate_ordered(lambda x: np.prod(x, axis=1), dom, TIGHT, method="iterated")
    assert val == pytest.approx(1 / 48, abs=1e-14)


def test_qmc_matches_closed_form_in_6d():
    dom = OrderedDomain.chain(0.0, 1.0, 6)
    val = integrate_ordered(lambda x: x.sum(axis=1), dom, QuadratureConfig(mc_samples=1 << 16), method="qmc")
    # E[sum of order statistics] = 3 on the unit cube, times volume 1/720
    assert val == pytest.approx(3 / 720, rel=1e-9)


def test_qmc_general_domain_uses_indicator():
    # upper bound referring to an earlier variable is not a chain block
    dom = OrderedDomain((0.0, 0.0), (1.0, Ref(0)))
    assert dom.blocks() is None
    val = integrate_ordered(lambda x: np.ones(len(x)), dom, QuadratureConfig(mc_samples=1 << 16), method="qmc")
    assert val == pytest.approx(0.5, abs=5e-3)


def test_unknown_method():
    with pytest.raises(ValueError):
        integrate_ordered(lambda x: x[:, 0], OrderedDomain.chain(0, 1, 1), method="simpson")


def test_iterated_and_qmc_agree_on_smooth_integrand():
    dom = OrderedDomain.product(OrderedDomain.chain(0.2, 0.5, 2), OrderedDomain.chain(0.3, 0.4, 2))
    f = lambda x: 1.0 / np.prod(x, axis=1)  # noqa: E731
    a = integrate_ordered(f, dom, TIGHT, method="iterated")
    b = integrate_ordered(f, dom, QuadratureConfig(mc_samples=1 << 18), method="qmc")
    assert b == pytest.approx(a, rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(0.1, 0.5), w=st.floats(0.05, 0.5), n=st.integers(1, 3))
def test_volume_property(a, w, n):
    dom = OrderedDomain.chain(a, a + w, n)
    assert integrate_ordered(lambda x: np.ones(len(x)), dom, method="iterated") == pytest.approx(
        w**n / math.factorial(n), rel=1e-10)


def test_grid_maximize_interior():
    x, v = grid_maximize(lambda p: -(p - 2.3456) ** 2, 2.0, 4.0)
    assert x == pytest.approx(2.346, abs=1e-3)
    assert v <= 0


def test_grid_maximize_left_edge():
    x, _ = grid_maximize(lambda p: -p, 2.0, 4.0)
    assert x == 2.0


def test_grid_maximize_skips_undefined():
    def g(p):
        if p < 2.5:
            raise UndefinedIntegrand("no")
        return -p
    x, _ = grid_maximize(g, 2.0, 4.0)
    assert x == pytest.approx(2.5)


def test_grid_maximize_all_undefined():
    def g(p):
        raise UndefinedIntegrand("never")
    with pytest.raises(UndefinedIntegrand):
        grid_maximize(g, 2.0, 3.0)


def test_bisect_threshold():
    t = bisect_threshold(lambda p: p >= 2.71828, 2.0, 5.0, 1e-3)
    assert 2.71828 <= t <= 2.71828 + 1e-3
    assert bisect_threshold(lambda p: True, 2.0, 5.0) == 2.0
    with pytest.raises(ThresholdNotBracketed):
        bisect_threshold(lambda p: False, 2.0, 5.0)
