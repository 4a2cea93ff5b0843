"""Discretisation of [2, 3], the matrix A and vector B, the solution of
(I - A) X = B and Chen's constant 8 (1 - x_1)."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import BarycentricInterpolator, PchipInterpolator

from . import wu
from .quadrature import integrate_1d
from .wu import WU_ROWS, WuConfig, WuParams

log = logging.getLogger(__name__)

PSI1, PSI2 = "Psi1", "Psi2"

# B vector used for the published 9-point solution (rows 1-4 Psi2, 5-9 Psi1).
WU_PUBLISHED_B = (0.015826357, 0.015247971, 0.013898757, 0.011776059,
                  0.009405211, 0.006558950, 0.003536751, 0.001056651, 0.0)

# Published solution vector for that system.
WU_PUBLISHED_X = (0.0223939, 0.0217196, 0.0202876, 0.0181433, 0.0158644,
                  0.0129923, 0.0100686, 0.0078162, 0.0072943)


class SingularMatrix(ArithmeticError):
    pass


class RootNotBracketed(ValueError):
    pass


@dataclass
class Discretization:
    """Grid ``s_0 = 1 < s_1 < ... < s_n = 3`` with a kernel kind per row.

    ``params[i]`` may leave ``s_prime`` as ``None`` for Psi1 rows whose s' is
    to be found by scanning.
    """

    kind: str
    points: np.ndarray            # s_0 .. s_n
    row_kind: list[str]
    params: list[WuParams | None]

    def __post_init__(self):
        pts = self.points
        if pts[0] != 1.0 or not np.all(np.diff(pts) > 0) or not math.isclose(pts[-1], 3.0):
            raise ValueError("grid must start at 1, increase strictly and end at 3")
        kinds = self.row_kind
        if PSI1 in kinds and PSI2 in kinds[kinds.index(PSI1):]:
            raise ValueError("Psi2 rows must precede Psi1 rows")

    @property
    def n(self) -> int:
        return len(self.points) - 1

    @property
    def s(self) -> np.ndarray:
        return self.points[1:]


def build_grid(kind: str) -> Discretization:
    """``nine``, ``forty`` (45 rows), ``fourhundred`` (405 rows) or ``custom:N``."""
    if kind == "nine":
        s = [2.1 + 0.1 * i for i in range(1, 10)]
        rows = [WU_ROWS[i] for i in range(1, 10)]
        kinds = [PSI2] * 4 + [PSI1] * 5
    elif kind in ("forty", "fourhundred"):
        step, count = (0.01, 40) if kind == "forty" else (0.001, 400)
        s = [2.1 + 0.1 * i for i in range(1, 6)]
        s += [2.6 + step * (i - 5) for i in range(6, count + 6)]
        kinds = [PSI2] * 4 + [PSI1] * (len(s) - 4)
        # Psi1 rows get s' by scanning, the s = 2.6 row included
        rows = [WU_ROWS[i] for i in range(1, 5)] + [None] * (len(s) - 4)
    elif kind.startswith("custom:"):
        n = int(kind.split(":", 1)[1])
        if n < 2:
            raise ValueError("custom grids need at least 2 points")
        s = list(np.round(np.linspace(2.2, 3.0, n), 12))
        # Psi2 rows take interpolated published parameters, Psi1 rows scan s'
        ip = WuInterpolants.from_published()
        m = ip.crossing()
        kinds = [PSI2 if x < m else PSI1 for x in s]
        rows = [_feasible_params(ip, x) if k == PSI2 else None for x, k in zip(s, kinds)]
    else:
        raise ValueError(f"unknown grid kind {kind!r}")
    s = np.round(np.array(s), 12)
    return Discretization(kind, np.concatenate([[1.0], s]), kinds, rows)


# --------------------------------------------------------------------------
# matrix A

_GL20 = np.polynomial.legendre.leggauss(20)


def kernel_for(kind: str, p: WuParams, cfg: WuConfig = wu.DEFAULT_WU) -> tuple[Callable, list[float]]:
    if kind == PSI2:
        return (lambda t: wu.xi2(t, p, cfg.xi2_plus_sign)), wu.xi2_breakpoints(p)
    return (lambda t: wu.xi1(t, p.s, p.s_prime)), wu.xi1_breakpoints(p.s, p.s_prime)


def panel_integrals(kernel: Callable, edges: np.ndarray, breakpoints: Sequence[float]) -> np.ndarray:
    """Integrals of ``kernel`` over consecutive ``edges``.

    Each panel is cut at the kernel's breakpoints and every smooth piece gets
    a 20-point Gauss-Legendre rule.
    """
    cuts = np.union1d(edges, [b for b in breakpoints if edges[0] < b < edges[-1]])
    x, w = _GL20
    half = 0.5 * np.diff(cuts)
    mid = 0.5 * (cuts[1:] + cuts[:-1])
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(kernel(nodes.ravel())).reshape(nodes.shape)
    pieces = half * (vals @ w)
    owner = np.searchsorted(edges, mid, side="right") - 1
    return np.bincount(owner, weights=pieces, minlength=len(edges) - 1)


def build_A(d: Discretization, params: Sequence[WuParams], cfg: WuConfig = wu.DEFAULT_WU,
            adaptive: bool = False) -> np.ndarray:
    """``a[i, j] = int_{s_{j-1}}^{s_j} Xi(t, s_i) dt`` with Xi2 on Psi2 rows.

    ``adaptive=True`` integrates every entry separately with
    :func:`integrate_1d` instead of the piecewise Gauss rule.
    """
    n = d.n
    A = np.zeros((n, n))
    for i in range(n):
        kernel, brk = kernel_for(d.row_kind[i], params[i], cfg)
        if adaptive:
            for j in range(n):
                A[i, j] = integrate_1d(kernel, d.points[j], d.points[j + 1],
                                       wu.replace(cfg.quad, abs_tol=1e-13, rel_tol=1e-12), brk)
        else:
            A[i] = panel_integrals(kernel, d.points, brk)
    return A


# --------------------------------------------------------------------------
# vector B


def scan_s_prime(s: float, cfg: WuConfig = wu.DEFAULT_WU, lo: float = 3.0, hi: float = 5.0,
                 coarse: float = 0.01, fine: float = 0.001) -> tuple[float, float]:
    """Maximise Psi1(s, .) over admissible s' in [lo, hi].

    A ``coarse`` pass over the whole range is followed by one ``fine`` pass in
    the neighbouring cells of the best point.
    """
    start = max(lo, math.ceil(2 * s / (s - 1) / coarse - 1e-9) * coarse)  # s' - s'/s >= 2

    def g(sp):
        return wu.psi1(s, sp, cfg)

    best_sp, best = None, -math.inf
    for sp in np.round(np.arange(start, hi + coarse / 2, coarse), 10):
        v = g(sp)
        if v > best:
            best_sp, best = float(sp), v
    window_lo = max(start, best_sp - coarse)
    for sp in np.round(np.arange(window_lo, min(hi, best_sp + coarse) + fine / 2, fine), 10):
        v = g(sp)
        if v > best:
            best_sp, best = float(sp), v
    return best_sp, best


@dataclass
class RowResult:
    index: int
    s: float
    kind: str
    params: WuParams
    value: float
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0


def compute_row(i: int, d: Discretization, cfg: WuConfig, cache=None) -> RowResult:
    t0 = time.perf_counter()
    s = float(d.s[i])
    kind = d.row_kind[i]
    p = d.params[i]
    detail: dict = {}
    if kind == PSI2:
        if p is None or not p.has_ks:
            raise ValueError(f"row {i + 1}: Psi2 rows need published parameters")
        parts = cache.psi2(p, cfg) if cache is not None else wu.psi2_parts(p, cfg)
        value = parts["value"]
        detail = {"i2": {k: (m.phi_max, m.value, m.phi_low) for k, m in parts["i2"].items()}}
    else:
        if p is None or p.s_prime is None:
            sp, _ = scan_s_prime(s, cfg)
            p = WuParams(s, sp)
        parts = cache.psi1(p, cfg) if cache is not None else wu.psi1_parts(p.s, p.s_prime, cfg)
        value = parts["value"]
        m = parts["i1"]
        detail = {"phi_max": m.phi_max, "phi_low": m.phi_low}
    return RowResult(i + 1, s, kind, p, value, detail, time.perf_counter() - t0)


def build_B(d: Discretization, cfg: WuConfig = wu.DEFAULT_WU, threads: int = 1,
            cache=None) -> tuple[np.ndarray, list[RowResult]]:
    """Psi values for every row; rows are independent and may run in threads."""
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(lambda i: compute_row(i, d, cfg, cache), range(d.n)))
    else:
        rows = [compute_row(i, d, cfg, cache) for i in range(d.n)]
    return np.array([r.value for r in rows]), rows


# --------------------------------------------------------------------------
# solve


@dataclass
class ChenSystem:
    A: np.ndarray
    B: np.ndarray
    X: np.ndarray
    c_star: float
    residual: float
    first_is_max: bool


def solve_system(A: np.ndarray, B: np.ndarray) -> ChenSystem:
    """Solve ``(I - A) X = B`` (LU with partial pivoting); ``C* = 8 (1 - x_1)``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    M = np.eye(len(B)) - A
    try:
        X = np.linalg.solve(M, B)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(str(exc)) from exc
    if not np.all(np.isfinite(X)) or np.linalg.cond(M) > 1e14:
        raise SingularMatrix("I - A is numerically singular")
    residual = float(np.max(np.abs(M @ X - B))) if len(B) else 0.0
    first_is_max = bool(np.argmax(X) == 0)
    if not first_is_max:
        log.warning("x_1 is not the largest entry of X (argmax at %d)", int(np.argmax(X)) + 1)
    return ChenSystem(A, B, X, 8.0 * (1.0 - X[0]), residual, first_is_max)


def row_params(d: Discretization, rows: Sequence[RowResult]) -> list[WuParams]:
    return [r.params for r in rows]


@dataclass
class GridReport:
    grid: str
    points: list[float]
    x: list[float]
    c_star: float
    residual: float
    wall_seconds: float
    b_seconds: float = 0.0
    a_seconds: float = 0.0
    rows: list[RowResult] = field(default_factory=list, repr=False)
    system: ChenSystem | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "grid": self.grid,
            "points": self.points,
            "x": self.x,
            "c_star": self.c_star,
            "residual": self.residual,
            "wall_seconds": self.wall_seconds,
        }


def solve_grid(kind: str, cfg: WuConfig = wu.DEFAULT_WU, b_source: str = "computed",
               threads: int = 1, cache=None) -> GridReport:
    """Build B and A for a grid kind and solve the system."""
    t0 = time.perf_counter()
    d = build_grid(kind)
    if b_source == "wu-published":
        if kind != "nine":
            raise ValueError("the published B vector only exists for the nine grid")
        B = np.array(WU_PUBLISHED_B)
        params = [WU_ROWS[i] for i in range(1, 10)]
        rows: list[RowResult] = []
    elif b_source == "computed":
        B, rows = build_B(d, cfg, threads, cache)
        params = row_params(d, rows)
    else:
        raise ValueError(f"unknown b_source {b_source!r}")
    tb = time.perf_counter()
    A = build_A(d, params, cfg)
    ta = time.perf_counter()
    sys_ = solve_system(A, B)
    return GridReport(kind, [float(x) for x in d.points], [float(x) for x in sys_.X], float(sys_.c_star),
                      sys_.residual, time.perf_counter() - t0, tb - t0, ta - tb, rows, sys_)


def refine_experiment(kinds: Sequence[str] = ("nine", "forty"), cfg: WuConfig = wu.DEFAULT_WU,
                      threads: int = 1, cache=None) -> list[dict]:
    """C* for successively finer grids on [2.6, 3.0]."""
    out = []
    for kind in kinds:
        rep = solve_grid(kind, cfg, "computed", threads, cache)
        out.append({"grid": kind, "points": len(rep.points) - 1, "x1": rep.x[0], "c_star": rep.c_star,
                    "b_seconds": rep.b_seconds, "a_seconds": rep.a_seconds, "wall_seconds": rep.wall_seconds})
    return out


# --------------------------------------------------------------------------
# interpolation experiment


class LocalCubic:
    """Piecewise cubic through the four nodes nearest each interval.

    Outside the nodes the end cubic is continued. Unlike a monotone scheme
    this keeps the curvature of the data, which is what makes the two Psi
    curves meet."""

    def __init__(self, x, y):
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        if self.x.size < 4 or np.any(np.diff(self.x) <= 0):
            raise ValueError("need at least four increasing nodes")
        n = self.x.size
        self._pieces = [BarycentricInterpolator(self.x[j:j + 4], self.y[j:j + 4])
                        for j in range(n - 3)]

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        n = self.x.size
        i = np.clip(np.searchsorted(self.x, z, side="right") - 1, 0, n - 2)
        start = np.clip(i - 1, 0, n - 4)
        out = np.empty(z.shape)
        flat, zf = out.reshape(-1), z.reshape(-1)
        for j in np.unique(start):
            sel = (start == j).reshape(-1)
            flat[sel] = self._pieces[j](zf[sel])
        return out if out.ndim else float(out)


@dataclass
class WuInterpolants:
    psi1: Callable
    psi2: Callable
    s_prime: Callable
    k1: Callable
    k2: Callable
    k3: Callable

    @classmethod
    def from_published(cls, scheme: str = "local-cubic") -> "WuInterpolants":
        """Interpolants through the published rows.

        ``scheme`` is ``"local-cubic"`` or ``"pchip"`` (monotone; its Psi
        curves do not cross on [2.5, 2.6])."""
        if scheme not in ("local-cubic", "pchip"):
            raise ValueError(f"unknown scheme {scheme!r}")
        s = np.array([WU_ROWS[i].s for i in range(1, 10)])
        b = np.array(WU_PUBLISHED_B)
        sp = np.array([WU_ROWS[i].s_prime for i in range(1, 10)])
        ks = np.array([[WU_ROWS[i].k1, WU_ROWS[i].k2, WU_ROWS[i].k3] for i in range(1, 5)])
        mono = lambda x, y: PchipInterpolator(x, y, extrapolate=True)  # noqa: E731
        mk = LocalCubic if scheme == "local-cubic" else mono
        return cls(mk(s[4:], b[4:]), mk(s[:4], b[:4]), mono(s, sp),
                   mk(s[:4], ks[:, 0]), mk(s[:4], ks[:, 1]), mk(s[:4], ks[:, 2]))

    def crossing(self, lo: float = 2.5, hi: float = 2.6, tol: float = 1e-12) -> float:
        """Root of Psi1 - Psi2 in ``[lo, hi]`` by bisection."""
        g = lambda x: float(self.psi1(x) - self.psi2(x))  # noqa: E731
        glo, ghi = g(lo), g(hi)
        if glo == 0:
            return lo
        if ghi == 0:
            return hi
        if glo * ghi > 0:
            raise RootNotBracketed(f"Psi1 - Psi2 has the same sign at {lo} and {hi}")
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if g(mid) * glo > 0:
                lo, glo = mid, g(mid)
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def psi_best(self, s, m: float):
        s = np.asarray(s, dtype=float)
        return np.where(s <= m, self.psi2(np.maximum(s, 2.2)), self.psi1(s))

    def params_at(self, s: float) -> WuParams:
        return WuParams(float(s), float(self.s_prime(s)), float(self.k1(s)), float(self.k2(s)), float(self.k3(s)))


def _nearest_feasible(s: float, rows: Sequence[WuParams]) -> WuParams:
    """Parameters of the nearest published row that stay feasible at ``s``."""
    for q in sorted(rows, key=lambda q: abs(q.s - s)):
        cand = replace(q, s=s)
        if not cand.psi2_violations():
            return cand
    raise wu.ConstraintViolation(f"no published row gives feasible parameters at s={s}")


def _feasible_params(ip: WuInterpolants, s: float) -> WuParams:
    p = ip.params_at(s)
    if p.psi2_violations():
        log.warning("interpolated parameters infeasible at s=%.4f: %s", s, p.psi2_violations())
        return _nearest_feasible(s, [WU_ROWS[i] for i in range(1, 5)])
    return p


def interpolation_experiment(n_intervals: int, cfg: WuConfig = wu.DEFAULT_WU,
                             scheme: str = "local-cubic") -> dict:
    """C* from interpolated published data on a uniform n-point grid of [2.2, 3]."""
    if n_intervals < 9:
        raise ValueError("n_intervals must be >= 9")
    ip = WuInterpolants.from_published(scheme)
    m = ip.crossing()
    s = np.round(np.linspace(2.2, 3.0, n_intervals), 12)
    d = Discretization(f"interp:{n_intervals}", np.concatenate([[1.0], s]),
                       [PSI2 if x < m else PSI1 for x in s], [None] * n_intervals)
    params = []
    fallbacks = 0
    for x, kind in zip(s, d.row_kind):
        if kind == PSI1:
            params.append(WuParams(float(x), float(ip.s_prime(x))))
            continue
        p = _feasible_params(ip, float(x))
        fallbacks += p != ip.params_at(float(x))
        params.append(p)
    A = build_A(d, params, cfg)
    B = ip.psi_best(s, m)
    sys_ = solve_system(A, B)
    return {"intervals": n_intervals, "crossing_root": m, "c_star": float(sys_.c_star),
            "x1": float(sys_.X[0]), "residual": sys_.residual, "fallback_rows": fallbacks}
