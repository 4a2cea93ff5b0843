"""Numeric kernels: adaptive 1-D quadrature, integration over chain-ordered
domains, grid-refinement maximisation and threshold bisection."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence, Union

import numpy as np
from scipy.stats import qmc


class NonConvergent(RuntimeError):
    pass


class UndefinedIntegrand(ValueError):
    """The integrand was asked for a value outside its region of validity."""


class ThresholdNotBracketed(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-8
    rel_tol: float = 1e-4
    max_depth: int = 50
    mc_samples: int = 2_000_000
    # finest per-dimension panel count tried by the iterated product rule
    max_panels: int = 16

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")


DEFAULT_CONFIG = QuadratureConfig()

# Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
_XK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])
_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_KW = np.concatenate([_WK[:-1], _WK[::-1]])
_GW = np.zeros(15)
_GW[1::2] = np.concatenate([_WG[:-1], _WG[::-1]])


def _as_vectorized(f: Callable, at: float) -> Callable[[np.ndarray], np.ndarray]:
    # two points, so scalar-only callables fail instead of silently converting
    probe = np.array([at, at])
    try:
        r = np.asarray(f(probe))
        if r.shape == probe.shape:
            return f
    except Exception:  # noqa: BLE001 - scalar-only callables end up here
        pass
    return np.vectorize(f, otypes=[float])


def _gk15(f, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c[:, None] + h[:, None] * _NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    k = h * (fx @ _KW)
    g = h * (fx @ _GW)
    return k, np.abs(k - g)


def integrate_1d(f: Callable, a: float, b: float, cfg: QuadratureConfig = DEFAULT_CONFIG,
                 breakpoints: Sequence[float] = ()) -> float:
    """Adaptive Gauss-Kronrod (7/15) integral of ``f`` over ``[a, b]``.

    ``f`` should accept a 1-D array; scalar callables are wrapped.  Panels are
    bisected, worst error first, until the summed Kronrod-Gauss difference is
    below ``max(abs_tol, rel_tol*|I|)``.  Optional ``breakpoints`` seed the
    initial panels (kinks of the integrand).
    """
    if b < a:
        raise ValueError("integrate_1d requires a <= b")
    if a == b:
        return 0.0
    f = _as_vectorized(f, 0.5 * (a + b))
    cuts = sorted({a, b, *(p for p in breakpoints if a < p < b)})
    lo = np.array(cuts[:-1])
    hi = np.array(cuts[1:])
    vals, errs = _gk15(f, lo, hi)
    heap = [(-e, l, h, v, 0) for e, l, h, v in zip(errs, lo, hi, vals)]
    heapq.heapify(heap)
    total = float(np.sum(vals))
    err = float(np.sum(errs))
    while err > max(cfg.abs_tol, cfg.rel_tol * abs(total)):
        ne, l, h, v, depth = heapq.heappop(heap)
        if depth >= cfg.max_depth:
            raise NonConvergent(f"integrate_1d: max_depth reached on [{l}, {h}] (error {err:.3g})")
        m = 0.5 * (l + h)
        v2, e2 = _gk15(f, np.array([l, m]), np.array([m, h]))
        total += float(v2.sum()) - v
        err += float(e2.sum()) + ne
        heapq.heappush(heap, (-e2[0], l, m, v2[0], depth + 1))
        heapq.heappush(heap, (-e2[1], m, h, v2[1], depth + 1))
    return total


# --------------------------------------------------------------------------
# ordered domains

Bound = Union[float, "Ref"]


@dataclass(frozen=True)
class Ref:
    """Bound given by the value of an earlier variable in the chain."""
    index: int


@dataclass(frozen=True)
class OrderedDomain:
    """Region ``{x : lower_i <= x_i <= upper_i}`` where every bound is a
    constant or a :class:`Ref` to an earlier variable.

    ``OrderedDomain.chain(a, b, 3)`` is ``a <= t <= u <= v <= b``.
    """

    lower: tuple
    upper: tuple

    def __post_init__(self):
        if len(self.lower) != len(self.upper) or not self.lower:
            raise ValueError("lower/upper must be non-empty and of equal length")
        for i, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            for bnd in (lo, hi):
                if isinstance(bnd, Ref) and not 0 <= bnd.index < i:
                    raise ValueError(f"variable {i} refers to variable {bnd.index}, which is not earlier")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @classmethod
    def chain(cls, a: float, b: float, n: int) -> "OrderedDomain":
        lower = (float(a),) + tuple(Ref(i) for i in range(n - 1))
        return cls(lower, (float(b),) * n)

    @classmethod
    def product(cls, *blocks: "OrderedDomain") -> "OrderedDomain":
        """Cartesian product of independent domains (variables concatenated)."""
        lower, upper = [], []
        for blk in blocks:
            off = len(lower)
            shift = lambda x: Ref(x.index + off) if isinstance(x, Ref) else float(x)  # noqa: E731
            lower.extend(shift(x) for x in blk.lower)
            upper.extend(shift(x) for x in blk.upper)
        return cls(tuple(lower), tuple(upper))

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Interval propagation of the bounds (outer box of the region)."""
        lo = np.empty(self.dim)
        hi = np.empty(self.dim)
        for i in range(self.dim):
            lo[i] = lo[self.lower[i].index] if isinstance(self.lower[i], Ref) else self.lower[i]
            hi[i] = hi[self.upper[i].index] if isinstance(self.upper[i], Ref) else self.upper[i]
        return lo, hi

    def is_empty(self) -> bool:
        lo, hi = self.bounding_box()
        return bool(np.any(lo > hi))

    def blocks(self) -> list[tuple[int, int, float, float]] | None:
        """Split into runs ``lo <= x_i <= x_{i+1} <= ... <= hi`` with constant
        ends.  Returns ``None`` when the domain is not of that product form."""
        out = []
        i = 0
        while i < self.dim:
            lo, hi = self.lower[i], self.upper[i]
            if isinstance(lo, Ref) or isinstance(hi, Ref):
                return None
            j = i + 1
            while j < self.dim and self.lower[j] == Ref(j - 1) and self.upper[j] == hi:
                j += 1
            out.append((i, j, float(lo), float(hi)))
            i = j
        return out

    def volume(self) -> float:
        """Exact volume for product-of-simplex domains."""
        blk = self.blocks()
        if blk is None:
            raise ValueError("exact volume only for product-of-chain domains")
        vol = 1.0
        for i, j, lo, hi in blk:
            vol *= max(hi - lo, 0.0) ** (j - i) / math.factorial(j - i)
        return vol


@lru_cache(maxsize=64)
def _gauss_panels(q: int, panels: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(q)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    edges = np.arange(panels) / panels
    nodes = (edges[:, None] + x[None, :] / panels).ravel()
    weights = np.tile(w / panels, panels)
    return nodes, weights


@lru_cache(maxsize=128)
def _iterated_nodes(dom: OrderedDomain, q: int, panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Product Gauss rule mapped through the chain limits, outermost variable first."""
    xi, wi = _gauss_panels(q, panels)
    pts = np.zeros((1, 0))
    wts = np.ones(1)
    for i in range(dom.dim):
        lo = pts[:, dom.lower[i].index] if isinstance(dom.lower[i], Ref) else np.full(len(pts), dom.lower[i])
        hi = pts[:, dom.upper[i].index] if isinstance(dom.upper[i], Ref) else np.full(len(pts), dom.upper[i])
        span = np.maximum(hi - lo, 0.0)
        new = lo[:, None] + span[:, None] * xi[None, :]
        wts = (wts[:, None] * span[:, None] * wi[None, :]).ravel()
        pts = np.concatenate([np.repeat(pts, len(xi), axis=0), new.reshape(-1, 1)], axis=1)
        keep = wts > 0
        pts, wts = pts[keep], wts[keep]
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


_QMC_CHUNK = 1 << 18


@lru_cache(maxsize=4)
def qmc_nodes(dom: OrderedDomain, samples: int, seed: int) -> tuple[np.ndarray, float]:
    """Sobol points folded onto the domain, plus the common weight.

    Product-of-chain domains are sampled exactly by sorting coordinates within
    each chain; anything else keeps the box points and zero-weights those that
    break the chain constraints.
    """
    m = max(int(math.ceil(math.log2(samples))), 1)
    u = qmc.Sobol(dom.dim, scramble=True, seed=seed).random_base2(m)
    blocks = dom.blocks()
    if blocks is not None:
        pts = np.empty_like(u)
        for i, j, lo, hi in blocks:
            seg = np.sort(u[:, i:j], axis=1) if j - i > 1 else u[:, i:j]
            pts[:, i:j] = lo + (hi - lo) * seg
        weight = dom.volume() / len(pts)
    else:
        lo, hi = dom.bounding_box()
        pts = lo + (hi - lo) * u
        ok = np.ones(len(pts), dtype=bool)
        for i in range(dom.dim):
            for bnd, sign in ((dom.lower[i], 1), (dom.upper[i], -1)):
                ref = pts[:, bnd.index] if isinstance(bnd, Ref) else bnd
                ok &= sign * (pts[:, i] - ref) >= 0
        pts = pts[ok]
        weight = float(np.prod(hi - lo)) / len(u)
    pts.setflags(write=False)
    return pts, weight


def integrate_ordered(f: Callable, dom: OrderedDomain, cfg: QuadratureConfig = DEFAULT_CONFIG,
                      method: str = "auto", seed: int = 0) -> float:
    """Integrate ``f(x)`` over an ordered domain.

    ``f`` receives an ``(n, dim)`` array of points and returns ``n`` values.
    ``method`` is ``"iterated"`` (product Gauss-Legendre through the chain
    limits, panel count doubled until two levels agree), ``"qmc"`` (scrambled
    Sobol points with a fixed ``seed``) or ``"auto"`` (iterated up to three
    dimensions, qmc above).  Empty domains give exactly 0.
    """
    if dom.dim > 6:
        raise ValueError("at most six dimensions are supported")
    if dom.is_empty():
        return 0.0
    if method == "auto":
        method = "iterated" if dom.dim <= 3 else "qmc"
    if method == "qmc":
        pts, weight = qmc_nodes(dom, cfg.mc_samples, seed)
        total = 0.0
        for start in range(0, len(pts), _QMC_CHUNK):
            total += float(np.sum(f(pts[start:start + _QMC_CHUNK])))
        return total * weight
    if method != "iterated":
        raise ValueError(f"unknown method {method!r}")
    q = 8 if dom.dim <= 3 else 5
    prev = None
    panels = 1
    while True:
        pts, wts = _iterated_nodes(dom, q, panels)
        val = float(np.dot(f(pts), wts)) if len(wts) else 0.0
        if prev is not None and abs(val - prev) <= max(cfg.abs_tol, cfg.rel_tol * abs(val)):
            return val
        if panels >= cfg.max_panels:
            raise NonConvergent(f"iterated rule did not settle (last change {abs(val - prev):.3g})")
        prev = val
        panels *= 2


# --------------------------------------------------------------------------
# one-dimensional searches


def grid_maximize(g: Callable[[float], float], lo: float, hi: float,
                  tol0: float = 0.1, tol_final: float = 0.001) -> tuple[float, float]:
    """Scan-and-zoom maximisation.

    Scans ``lo, lo+eps, ..., hi``, recentres on the best point with the left
    edge clamped at the original ``lo``, divides ``eps`` by 10 and repeats
    while ``eps >= tol_final``.  Points where ``g`` raises
    :class:`UndefinedIntegrand` or returns nan are skipped; ties go to the
    smaller argument.
    """
    if hi < lo:
        raise ValueError("grid_maximize requires lo <= hi")
    if not tol0 > tol_final > 0:
        raise ValueError("need tol0 > tol_final > 0")
    floor = lo
    eps = tol0
    best_x, best_v = None, -math.inf
    cache: dict[float, float] = {}
    while eps >= tol_final * (1 - 1e-9):
        n = int(math.floor((hi - lo) / eps + 1e-9))
        pass_x, pass_v = None, -math.inf
        for i in range(n + 1):
            x = round(lo + i * eps, 12)
            if x not in cache:
                try:
                    v = float(g(x))
                except UndefinedIntegrand:
                    v = math.nan
                cache[x] = v
            v = cache[x]
            if not math.isnan(v) and v > pass_v:
                pass_x, pass_v = x, v
        if pass_x is None:
            raise UndefinedIntegrand(f"function undefined on the whole window [{lo}, {hi}]")
        best_x, best_v = pass_x, pass_v
        lo = max(best_x - eps, floor)
        hi = best_x + eps
        eps /= 10.0
    return best_x, best_v


def bisect_threshold(defined: Callable[[float], bool], lo: float, hi: float, tol: float = 1e-3) -> float:
    """Least point where a monotone (false then true) predicate holds."""
    if defined(lo):
        return lo
    if not defined(hi):
        raise ThresholdNotBracketed(f"predicate false at upper end {hi}")
    while abs(hi - lo) >= tol:
        mid = 0.5 * (lo + hi)
        if defined(mid):
            hi = mid
        else:
            lo = mid
    return hi
