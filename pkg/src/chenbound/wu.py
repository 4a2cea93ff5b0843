"""Wu's weighted integrals: the alpha breakpoints, sigma/sigma0, the kernels
Xi1/Xi2, the omega-weighted integrals I1 and I2_i (i = 9..21) with their
maximisation over phi, and the source terms Psi1/Psi2."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import buchstab
from .quadrature import (
    DEFAULT_CONFIG,
    OrderedDomain,
    QuadratureConfig,
    Ref,
    UndefinedIntegrand,
    bisect_threshold,
    grid_maximize,
    integrate_1d,
    integrate_ordered,
    qmc_nodes,
)


class ConstraintViolation(ValueError):
    def __init__(self, failures: list[str]):
        self.failures = failures
        super().__init__("; ".join(failures))


@dataclass(frozen=True)
class WuParams:
    s: float
    s_prime: float
    k1: Optional[float] = None
    k2: Optional[float] = None
    k3: Optional[float] = None

    @property
    def has_ks(self) -> bool:
        return None not in (self.k1, self.k2, self.k3)

    def psi1_violations(self) -> list[str]:
        s, sp = self.s, self.s_prime
        out = []
        if not 2 <= s <= 3:
            out.append(f"2 <= s <= 3 fails (s={s})")
        if not 3 <= sp <= 5:
            out.append(f"3 <= s' <= 5 fails (s'={sp})")
        if sp - sp / s < 2 - 1e-12:
            out.append(f"s' - s'/s >= 2 fails ({sp - sp / s:.6g})")
        return out

    def psi2_violations(self) -> list[str]:
        out = self.psi1_violations()
        if not self.has_ks:
            return out + ["k1, k2, k3 are required"]
        if not self.s <= self.k3 <= self.k2 <= self.k1 <= self.s_prime:
            out.append("s <= k3 <= k2 <= k1 <= s' fails")
        a = alpha_values(self)
        for i, x in enumerate(a, start=1):
            if not 1 <= x <= 3:
                out.append(f"1 <= alpha{i} <= 3 fails (alpha{i}={x:.6g})")
        if not a[0] < a[3]:
            out.append("alpha1 < alpha4 fails")
        if not a[4] < a[7]:
            out.append("alpha5 < alpha8 fails")
        return out


# Parameter rows published alongside the 9-point discretisation
# (s_i = 2.1 + 0.1 i); k's only for the Psi2 rows 1-4.
WU_ROWS: dict[int, WuParams] = {
    1: WuParams(2.2, 4.54, 3.53, 2.90, 2.44),
    2: WuParams(2.3, 4.50, 3.54, 2.88, 2.43),
    3: WuParams(2.4, 4.46, 3.57, 2.87, 2.40),
    4: WuParams(2.5, 4.12, 3.56, 2.91, 2.50),
    5: WuParams(2.6, 3.58),
    6: WuParams(2.7, 3.47),
    7: WuParams(2.8, 3.34),
    8: WuParams(2.9, 3.19),
    9: WuParams(3.0, 3.00),
}


@dataclass(frozen=True)
class AlphaSet:
    alpha: tuple  # alpha[0] is alpha_1

    def __getitem__(self, i: int) -> float:
        return self.alpha[i - 1]


def alpha_values(p: WuParams) -> tuple:
    s, sp, k1, k2, k3 = p.s, p.s_prime, p.k1, p.k2, p.k3
    return (
        k1 - 2,
        sp - 2,
        sp - sp / s - 1,
        sp - sp / k2 - 1,
        sp - sp / k3 - 1,
        sp - 2 * sp / k2,
        sp - sp / k1 - sp / k3,
        sp - sp / k1 - sp / k2,
        k1 - k1 / k2 - 1,
    )


def alpha_set(p: WuParams) -> AlphaSet:
    """The nine breakpoints; raises :class:`ConstraintViolation` if the
    parameter tuple is outside the admissible region."""
    bad = p.psi2_violations()
    if bad:
        raise ConstraintViolation(bad)
    return AlphaSet(alpha_values(p))


# --------------------------------------------------------------------------
# sigma and sigma0


def sigma(a: float, b: float, c: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``int_a^b log(c/(t-1)) dt/t``."""
    if not 1 < a or c <= 0:
        raise ValueError("sigma requires 1 < a and c > 0")
    if b <= a:
        return 0.0
    return integrate_1d(lambda t: np.log(c / (t - 1.0)) / t, a, b, cfg)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(40)


@lru_cache(maxsize=1)
def sigma_denominator() -> float:
    d = 1.0 - sigma(3.0, 5.0, 4.0, QuadratureConfig(abs_tol=1e-15, rel_tol=1e-15))
    if abs(d) < 1e-12:
        raise ArithmeticError("1 - sigma(3, 5, 4) vanishes")
    return d


def sigma0(t):
    """``sigma(3, t+2, t+1) / (1 - sigma(3, 5, 4))``, vectorised over ``t``.

    The numerator uses a fixed 40-point Gauss-Legendre rule: the integrand is
    analytic on ``[3, t+2]`` with its nearest singularity at 1, so the rule is
    at machine precision for ``t <= 3``.
    """
    t = np.asarray(t, dtype=float)
    half = 0.5 * (t - 1.0)
    mid = 3.0 + half
    x = mid[..., None] + half[..., None] * _GL_X
    vals = np.log((t[..., None] + 1.0) / (x - 1.0)) / x
    num = half * (vals @ _GL_W)
    out = np.where(t > 1.0, num, 0.0) / sigma_denominator()
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# kernels


def _ind(t, a, b):
    return ((a <= t) & (t <= b) & (a <= b)).astype(float)


def _safe_log(x):
    # only meaningful where the indicator is on; keeps nan out of the products
    return np.log(np.where((x > 0) & np.isfinite(x), x, 1.0))


def xi1(t, s: float, s_prime: float):
    t = np.asarray(t, dtype=float)
    sp = s_prime
    a2 = sp - 2
    a3 = sp - sp / s - 1
    d = (s - 1) * (sp - 1)
    out = (sigma0(t) / (2 * t)) * math.log(16 / d)
    out = out + _ind(t, a2, 3) / (2 * t) * _safe_log((t + 1) ** 2 / d)
    with np.errstate(divide="ignore"):
        out = out + _ind(t, a3, a2) / (2 * t) * _safe_log((t + 1) / ((s - 1) * (sp - 1 - t)))
    return float(out) if out.ndim == 0 else out


def xi2_terms(t, p: WuParams, plus_sign: bool = True) -> np.ndarray:
    """The ten summands of Xi2 as rows of an array.

    ``plus_sign`` selects the printed ``1/(5t(1 + t/s'))`` weight on the
    [alpha7, alpha5] term; ``False`` uses ``1 - t/s'`` like its neighbours.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    s, sp, k1, k2, k3 = p.s, p.s_prime, p.k1, p.k2, p.k3
    a = alpha_values(p)
    prod5 = (s - 1) * (sp - 1) * (k1 - 1) * (k2 - 1) * (k3 - 1)
    w = 1 / (5 * t)
    wp = 1 / (5 * t * (1 + t / sp)) if plus_sign else 1 / (5 * t * (1 - t / sp))
    wm = 1 / (5 * t * (1 - t / sp))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.array(_xi2_term_list(t, p, a, w, wp, wm, prod5))


def _xi2_term_list(t, p, a, w, wp, wm, prod5) -> list:
    s, sp, k1, k2, k3 = p.s, p.s_prime, p.k1, p.k2, p.k3
    al = lambda i: a[i - 1]  # noqa: E731
    return [
        sigma0(t) * w * math.log(1024 / prod5),
        _ind(t, al(2), 3) * w * _safe_log((t + 1) ** 5 / prod5),
        _ind(t, al(9), al(1)) * w * _safe_log((t + 1) / ((k2 - 1) * (k1 - 1 - t))),
        _ind(t, al(5), al(2)) * w * _safe_log((t + 1) / ((k3 - 1) * (sp - 1 - t))),
        _ind(t, al(3), al(2)) * w * _safe_log((t + 1) / ((s - 1) * (sp - 1 - t))),
        _ind(t, al(1), al(2)) * w * _safe_log((t + 1) ** 2 / ((k1 - 1) * (k2 - 1))),
        _ind(t, al(7), al(5)) * wp * _safe_log(sp**2 / ((k1 * sp - sp - k1 * t) * (k3 * sp - sp - k3 * t))),
        _ind(t, al(5), al(8)) * wm * _safe_log(sp * (sp - 1 - t) / (k1 * sp - sp - k1 * t)),
        _ind(t, al(6), al(8)) * wm * _safe_log(sp / (k2 * sp - sp - k2 * t)),
        _ind(t, al(8), al(2)) * wm * _safe_log(sp - 1 - t),
    ]


def xi2(t, p: WuParams, plus_sign: bool = True):
    scalar = np.ndim(t) == 0
    out = xi2_terms(t, p, plus_sign).sum(axis=0)
    return float(out[0]) if scalar else out


def xi1_breakpoints(s: float, s_prime: float) -> list[float]:
    return [s_prime - 2, s_prime - s_prime / s - 1]


def xi2_breakpoints(p: WuParams) -> list[float]:
    return list(alpha_values(p))


# --------------------------------------------------------------------------
# omega-weighted integrals


@dataclass(frozen=True)
class WeightedIntegral:
    """``int_D omega((phi - sum x)/x_d) / prod x_i**e_i dx`` on an ordered domain."""

    domain: OrderedDomain
    divisor: int
    exponents: tuple

    def integrand(self, phi: float, omega: Callable) -> Callable[[np.ndarray], np.ndarray]:
        e = np.asarray(self.exponents, dtype=float)

        def f(x: np.ndarray) -> np.ndarray:
            arg = (phi - x.sum(axis=1)) / x[:, self.divisor]
            if arg.size and arg.min() < 1.0 - 1e-12:
                raise UndefinedIntegrand(f"omega argument {arg.min():.6g} < 1 at phi={phi}")
            return omega(np.maximum(arg, 1.0)) / np.prod(x**e, axis=1)

        return f

    def weight_only(self) -> Callable[[np.ndarray], np.ndarray]:
        e = np.asarray(self.exponents, dtype=float)
        return lambda x: 1.0 / np.prod(x**e, axis=1)


def i1_domain(s: float, s_prime: float) -> WeightedIntegral:
    return WeightedIntegral(OrderedDomain.chain(1 / s_prime, 1 / s, 3), 1, (1, 2, 1))


def _C(a, b, n):
    return OrderedDomain.chain(a, b, n)


def i2_domain(i: int, p: WuParams, weight20: str = "printed") -> WeightedIntegral:
    """Domain, omega divisor and weight of I2_i.

    ``weight20`` chooses between the weight printed for i = 20,
    ``1/(t u v^2 x)``, and the variant ``1/(t u v w^2 x)`` (``"alternate"``).
    """
    s, sp, k1, k2, k3 = p.s, p.s_prime, p.k1, p.k2, p.k3
    P = OrderedDomain.product
    doms = {
        9: P(_C(1 / k1, 1 / k3, 3)),
        10: P(_C(1 / k1, 1 / k2, 2), _C(1 / k2, 1 / s, 1)),
        11: P(_C(1 / k1, 1 / k2, 1), _C(1 / k2, 1 / k3, 2)),
        12: P(_C(1 / sp, 1 / k1, 2), _C(1 / k3, 1 / s, 1)),
        13: P(_C(1 / sp, 1 / k1, 1), _C(1 / k1, 1 / k2, 1), _C(1 / k2, 1 / s, 1)),
        14: P(_C(1 / sp, 1 / k1, 1), _C(1 / k2, 1 / s, 2)),
        15: P(_C(1 / k1, 1 / k2, 1), _C(1 / k2, 1 / k3, 1), _C(1 / k3, 1 / s, 1)),
        16: P(_C(1 / k2, 1 / k3, 4)),
        17: P(_C(1 / k2, 1 / k3, 3), _C(1 / k3, 1 / s, 1)),
        18: P(_C(1 / k2, 1 / k3, 2), _C(1 / k3, 1 / s, 2)),
        19: P(_C(1 / k1, 1 / k2, 1), _C(1 / k3, 1 / s, 3)),
        20: P(_C(1 / k2, 1 / k3, 1), _C(1 / k3, 1 / s, 4)),
        21: P(_C(1 / k3, 1 / s, 6)),
    }
    if i not in doms:
        raise ValueError(f"I2_i is defined for 9 <= i <= 21, got {i}")
    if i <= 15:
        return WeightedIntegral(doms[i], 1, (1, 2, 1))
    if i <= 19:
        return WeightedIntegral(doms[i], 2, (1, 1, 2, 1))
    if i == 20:
        if weight20 == "printed":
            return WeightedIntegral(doms[i], 3, (1, 1, 2, 0, 1))
        if weight20 == "alternate":
            return WeightedIntegral(doms[i], 3, (1, 1, 1, 2, 1))
        raise ValueError(f"unknown weight20 variant {weight20!r}")
    return WeightedIntegral(doms[i], 4, (1, 1, 1, 1, 2, 1))


def phi_low(dom: OrderedDomain, divisor_var: int, p: WuParams | None = None) -> float:
    """Least phi >= 2 with every omega argument ``(phi - sum)/x_d >= 1``.

    The argument decreases in every coordinate, so the binding point is the
    componentwise-maximal corner of the domain.
    """
    if dom.is_empty():
        return 2.0
    _, hi = dom.bounding_box()
    return max(2.0, float(hi.sum() + hi[divisor_var]))


def integrand_defined(w: WeightedIntegral, phi: float, omega: Callable, probe: int = 4) -> bool:
    """Probe the integrand on a closed grid through the chain limits (corners
    included); False if omega would be evaluated below 1 anywhere on it."""
    if w.domain.is_empty():
        return True
    pts = _closed_grid(w.domain, probe)
    try:
        w.integrand(phi, omega)(pts)
    except UndefinedIntegrand:
        return False
    return True


@lru_cache(maxsize=64)
def _closed_grid(dom: OrderedDomain, probe: int) -> np.ndarray:
    xi = np.linspace(0.0, 1.0, probe + 1)
    pts = np.zeros((1, 0))
    for i in range(dom.dim):
        lo = pts[:, dom.lower[i].index] if isinstance(dom.lower[i], Ref) else np.full(len(pts), dom.lower[i])
        hi = pts[:, dom.upper[i].index] if isinstance(dom.upper[i], Ref) else np.full(len(pts), dom.upper[i])
        new = lo[:, None] + np.maximum(hi - lo, 0.0)[:, None] * xi[None, :]
        pts = np.concatenate([np.repeat(pts, len(xi), axis=0), new.reshape(-1, 1)], axis=1)
    return pts


# --------------------------------------------------------------------------
# evaluation context


@dataclass(frozen=True)
class WuConfig:
    """Numerical settings for the I/Psi evaluations."""

    quad: QuadratureConfig = field(default_factory=lambda: QuadratureConfig(abs_tol=1e-9, rel_tol=1e-5))
    spline_degree: int = 20
    spline_intervals: int = 10
    phi_tol0: float = 0.1
    phi_tol_final: float = 0.001
    i1_phi_max: float = 4.0
    i2_phi_max: float = 5.0
    i2_upper: int = 21           # 19 reproduces the shorter sum in the appendix code
    weight20: str = "printed"
    xi2_plus_sign: bool = False

    @property
    def omega(self) -> buchstab.BuchstabSpline:
        return _spline(self.spline_degree, self.spline_intervals)


@lru_cache(maxsize=8)
def _spline(degree: int, intervals: int) -> buchstab.BuchstabSpline:
    return buchstab.build_spline(degree, intervals)


DEFAULT_WU = WuConfig()


@lru_cache(maxsize=2)
def _qmc_prepared(w: WeightedIntegral, samples: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # phi enters only through omega's argument, so weights, sums and the
    # divisor column are computed once per domain
    pts, weight = qmc_nodes(w.domain, samples, 0)
    wts = weight / np.prod(pts ** np.asarray(w.exponents, dtype=float), axis=1)
    return pts.sum(axis=1), pts[:, w.divisor].copy(), wts


def _integrate_weighted(w: WeightedIntegral, phi: float, cfg: WuConfig) -> float:
    lo = phi_low(w.domain, w.divisor)
    if phi < lo - 1e-12:
        raise UndefinedIntegrand(f"phi={phi} below the feasibility threshold {lo:.6g}")
    if w.domain.dim <= 3 or w.domain.is_empty():
        return integrate_ordered(w.integrand(phi, cfg.omega), w.domain, cfg.quad)
    total, xd, wts = _qmc_prepared(w, cfg.quad.mc_samples)
    arg = (phi - total) / xd
    if arg.size and arg.min() < 1.0 - 1e-12:
        raise UndefinedIntegrand(f"omega argument {arg.min():.6g} < 1 at phi={phi}")
    return float(np.dot(cfg.omega(np.maximum(arg, 1.0)), wts))


def i1(phi: float, s: float, s_prime: float, cfg: WuConfig = DEFAULT_WU) -> float:
    """Inner (phi fixed) value of I1."""
    return _integrate_weighted(i1_domain(s, s_prime), phi, cfg)


def i2(i: int, phi: float, p: WuParams, cfg: WuConfig = DEFAULT_WU) -> float:
    """Inner (phi fixed) value of I2_i."""
    bad = p.psi2_violations()
    if bad:
        raise ConstraintViolation(bad)
    return _integrate_weighted(i2_domain(i, p, cfg.weight20), phi, cfg)


@dataclass(frozen=True)
class MaxResult:
    phi_max: float
    value: float
    phi_low: float


def _maximize(w: WeightedIntegral, upper: float, cfg: WuConfig) -> MaxResult:
    lo = phi_low(w.domain, w.divisor)
    if w.domain.is_empty():
        return MaxResult(lo, 0.0, lo)
    x, v = grid_maximize(lambda phi: _integrate_weighted(w, phi, cfg), lo, max(upper, lo),
                         cfg.phi_tol0, cfg.phi_tol_final)
    return MaxResult(x, v, lo)


def i1_max(s: float, s_prime: float, cfg: WuConfig = DEFAULT_WU) -> MaxResult:
    return _maximize(i1_domain(s, s_prime), cfg.i1_phi_max, cfg)


def i2_max(i: int, p: WuParams, cfg: WuConfig = DEFAULT_WU) -> MaxResult:
    bad = p.psi2_violations()
    if bad:
        raise ConstraintViolation(bad)
    return _maximize(i2_domain(i, p, cfg.weight20), cfg.i2_phi_max, cfg)


def numeric_phi_low(w: WeightedIntegral, cfg: WuConfig = DEFAULT_WU, tol: float = 1e-3) -> float:
    """Feasibility threshold found by bisection on :func:`integrand_defined`."""
    return bisect_threshold(lambda phi: integrand_defined(w, phi, cfg.omega), 2.0, 5.0, tol)


# --------------------------------------------------------------------------
# one-dimensional pieces and Psi


def log_ratio_integral(upper: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``int_2^{upper-1} log(t-1)/t dt`` as an oriented integral.

    For ``upper < 3`` (every k2 in the published rows) the limits are
    reversed and the value is positive, since log(t-1) < 0 on (1, 2).
    """
    if upper <= 2.0:
        raise ValueError(f"log(t-1) needs upper - 1 > 1, got upper={upper}")
    f = lambda t: np.log(t - 1.0) / t  # noqa: E731
    b = upper - 1.0
    return integrate_1d(f, 2.0, b, cfg) if b >= 2.0 else -integrate_1d(f, b, 2.0, cfg)


def switch_integral(c: float, lo_param: float, hi_param: float,
                    cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``int_{1-1/lo}^{1-1/hi} log(c t - 1)/(t(1-t)) dt``."""
    a, b = 1 - 1 / lo_param, 1 - 1 / hi_param
    if b <= a:
        return 0.0
    return integrate_1d(lambda t: np.log(c * t - 1.0) / (t * (1.0 - t)), a, b, cfg)


def psi1_parts(s: float, s_prime: float, cfg: WuConfig = DEFAULT_WU) -> dict:
    """Terms of Psi1 and the I1 maximisation.

    The first integral enters with a minus sign: that is the sign under which
    the published Psi1 values are reproduced and the one used for the same
    term in Psi2.
    """
    bad = WuParams(s, s_prime).psi1_violations()
    if bad:
        raise ConstraintViolation(bad)
    q = replace(cfg.quad, abs_tol=1e-12, rel_tol=1e-12)
    m = i1_max(s, s_prime, cfg)
    first = log_ratio_integral(s_prime, q)
    second = switch_integral(s_prime, s, s_prime, q)
    return {
        "log_term": first,
        "switch_term": second,
        "i1": m,
        "value": -first + 0.5 * second - m.value,
    }


def psi1(s: float, s_prime: float, cfg: WuConfig = DEFAULT_WU) -> float:
    return psi1_parts(s, s_prime, cfg)["value"]


def psi2_parts(p: WuParams, cfg: WuConfig = DEFAULT_WU) -> dict:
    bad = p.psi2_violations()
    if bad:
        raise ConstraintViolation(bad)
    q = replace(cfg.quad, abs_tol=1e-12, rel_tol=1e-12)
    one_d = (
        -0.4 * log_ratio_integral(p.s_prime, q)
        - 0.4 * log_ratio_integral(p.k1, q)
        - 0.2 * log_ratio_integral(p.k2, q)
        + 0.2 * switch_integral(p.s_prime, p.s, p.s_prime, q)
        + 0.2 * switch_integral(p.k1, p.k3, p.k1, q)
    )
    maxima = {i: i2_max(i, p, cfg) for i in range(9, cfg.i2_upper + 1)}
    total = sum(m.value for m in maxima.values())
    return {"one_d": one_d, "i2": maxima, "value": one_d - 0.4 * total}


def psi2(p: WuParams, cfg: WuConfig = DEFAULT_WU) -> float:
    return psi2_parts(p, cfg)["value"]
