"""Buchstab's function omega(u).

Two independent evaluators are provided:

* :class:`BuchstabSpline` -- piecewise Taylor polynomials expanded about the
  midpoint of each unit interval, with the a-priori truncation bound
  ``3**-(N+1)``;
* :class:`OdeReference` -- a method-of-steps solution of the delay
  differential equation ``(u w(u))' = w(u-1)``.

Both accept scalars or numpy arrays.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

EULER_GAMMA = 0.57721566490153286060651209
OMEGA_LIMIT = math.exp(-EULER_GAMMA)

SPLINE_FORMAT_VERSION = 1


class BuchstabDomainError(ValueError):
    """Raised when omega is requested below u = 1 (or outside a table)."""


def omega_closed(u):
    """Closed form of omega on [1, 3]: ``1/u`` then ``(log(u-1) + 1)/u``."""
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 1.0) or np.any(arr > 3.0) or np.any(np.isnan(arr)):
        raise BuchstabDomainError("omega_closed is only defined on [1, 3]")
    with np.errstate(divide="ignore"):
        out = np.where(arr <= 2.0, 1.0 / arr, (np.log(np.maximum(arr - 1.0, 1.0)) + 1.0) / arr)
    return float(out) if out.ndim == 0 else out


def error_bound(degree: int) -> float:
    """Uniform truncation bound for a degree-``degree`` midpoint spline."""
    if degree < 1:
        raise ValueError("degree must be >= 1")
    return 3.0 ** -(degree + 1)


def _base_coefficients(degree: int) -> np.ndarray:
    # Taylor coefficients of (log(u-1) + 1)/u about u = 5/2.
    c = 1.0 + math.log(1.5)
    a = np.empty(degree + 1)
    for k in range(degree + 1):
        tail = sum(0.6**m / (k - m) for m in range(k))
        a[k] = (-1) ** (k + 1) * (-c / 2.5 ** (k + 1) + 0.6 * (2.0 / 3.0) ** (k + 1) * tail)
    return a


@dataclass(frozen=True)
class BuchstabSpline:
    """Midpoint Taylor spline of omega on [2, intervals+1].

    ``coeffs[j-2, m]`` is the coefficient of ``(u - (j + 1/2))**m`` on
    ``[j, j+1)``.  Below 2 the exact ``1/u`` is used and from
    ``intervals + 1`` on the constant ``exp(-gamma)``.
    """

    degree: int
    intervals: int
    coeffs: np.ndarray = field(repr=False)
    tail: float = OMEGA_LIMIT
    error_bound: float = 0.0

    @classmethod
    def build(cls, degree: int = 20, intervals: int = 10) -> "BuchstabSpline":
        if degree < 1:
            raise ValueError("degree must be >= 1")
        if intervals < 2:
            raise ValueError("intervals must be >= 2")
        n = degree
        a = np.zeros((intervals - 1, n + 1))
        a[0] = _base_coefficients(n)
        k = np.arange(n + 1)
        weights = (1.0 / 2.0**k)
        for row, j in enumerate(range(3, intervals + 1), start=1):
            prev = a[row - 1]
            a[row, 0] = np.sum(prev * weights * (j + (-1.0) ** k / (2.0 * (k + 1)))) / (j + 0.5)
            for m in range(1, n + 1):
                a[row, m] = (prev[m - 1] / m - a[row, m - 1]) / (j + 0.5)
        a.setflags(write=False)
        return cls(degree, intervals, a, OMEGA_LIMIT, error_bound(degree))

    def __call__(self, u):
        return spline_eval(self, u)

    @property
    def upper(self) -> float:
        """Right end of the polynomial pieces; the tail constant applies beyond."""
        return float(self.intervals + 1)

    def to_json(self) -> str:
        return json.dumps(
            {
                "version": SPLINE_FORMAT_VERSION,
                "degree": self.degree,
                "intervals": self.intervals,
                "coeffs": {str(j): list(map(float, row)) for j, row in enumerate(self.coeffs, start=2)},
                "tail": self.tail,
                "error_bound": self.error_bound,
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str) -> "BuchstabSpline":
        doc = json.loads(text)
        if doc.get("version") != SPLINE_FORMAT_VERSION:
            raise ValueError(f"unsupported spline format version {doc.get('version')!r}")
        k = int(doc["intervals"])
        rows = [doc["coeffs"][str(j)] for j in range(2, k + 1)]
        coeffs = np.array(rows, dtype=float)
        if coeffs.shape != (k - 1, int(doc["degree"]) + 1):
            raise ValueError("coefficient table does not match degree/intervals")
        coeffs.setflags(write=False)
        return cls(int(doc["degree"]), k, coeffs, float(doc["tail"]), float(doc["error_bound"]))


def build_spline(degree: int = 20, intervals: int = 10) -> BuchstabSpline:
    return BuchstabSpline.build(degree, intervals)


def spline_eval(spline: BuchstabSpline, u):
    """Evaluate the spline at ``u >= 1`` (scalar or array)."""
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 1.0) or np.any(np.isnan(arr)):
        raise BuchstabDomainError("omega(u) requires u >= 1")
    out = np.full(arr.shape, spline.tail)
    low = arr < 2.0
    out[low] = 1.0 / arr[low]
    for j in range(2, spline.intervals + 1):
        sel = (arr >= j) & (arr < j + 1)
        if not np.any(sel):
            continue
        x = arr[sel] - (j + 0.5)
        c = spline.coeffs[j - 2]
        acc = np.full(x.shape, c[-1])
        for m in range(spline.degree - 1, -1, -1):
            acc *= x
            acc += c[m]
        out[sel] = acc
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class OdeReference:
    """Method-of-steps solution of ``(u w)' = w(u-1)`` on ``[1, u_max]``.

    The solution is tabulated at spacing ``grid_step`` on every unit interval
    together with ``w'`` from the equation itself; evaluation between nodes is
    cubic Hermite.  The deviation ``w - exp(-gamma)`` is what is actually
    integrated, so the tabulated values keep full relative precision as they
    decay.
    """

    grid_step: float
    u_max: float
    tolerance: float
    deviation: np.ndarray = field(repr=False)   # shape (intervals, M+1)
    derivative: np.ndarray = field(repr=False)

    @property
    def values(self) -> np.ndarray:
        """(u, omega(u)) node pairs."""
        m = self.deviation.shape[1] - 1
        us, ws = [], []
        for i, row in enumerate(self.deviation):
            start = 1 + i
            us.append(start + self.grid_step * np.arange(m + (i == len(self.deviation) - 1)))
            ws.append(row[: len(us[-1])] + OMEGA_LIMIT)
        return np.column_stack([np.concatenate(us), np.concatenate(ws)])

    def __call__(self, u):
        return self.deviation_at(u) + OMEGA_LIMIT

    def deviation_at(self, u):
        """``omega(u) - exp(-gamma)`` by Hermite interpolation."""
        arr = np.asarray(u, dtype=float)
        if np.any(arr < 1.0) or np.any(arr > self.u_max) or np.any(np.isnan(arr)):
            raise BuchstabDomainError(f"ODE table covers [1, {self.u_max}]")
        out = _hermite(self.deviation, self.derivative, self.grid_step, arr)
        return float(out) if out.ndim == 0 else out


def _hermite(dev: np.ndarray, der: np.ndarray, h: float, u: np.ndarray) -> np.ndarray:
    nint, width = dev.shape
    m = width - 1
    j = np.minimum(np.floor(u).astype(int), nint)  # interval starting at j
    j = np.minimum(j, nint)
    row = j - 1
    local = u - j
    # the last node of the table sits at the right end of the final interval
    last = row >= nint
    row = np.where(last, nint - 1, row)
    local = np.where(last, 1.0, local)
    pos = local / h
    i = np.minimum(np.floor(pos).astype(int), m - 1)
    s = pos - i
    y0, y1 = dev[row, i], dev[row, i + 1]
    d0, d1 = der[row, i] * h, der[row, i + 1] * h
    s2, s3 = s * s, s * s * s
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * d0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * d1


def _solve(u_max: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    m = int(round(1.0 / h))
    if not math.isclose(m * h, 1.0, rel_tol=1e-12):
        raise ValueError("grid_step must divide 1")
    h = 1.0 / m
    nint = int(math.ceil(u_max - 1.0 - 1e-12))
    s = np.arange(m + 1) * h
    dev = np.empty((nint, m + 1))
    der = np.empty((nint, m + 1))
    u = 1.0 + s
    dev[0] = 1.0 / u - OMEGA_LIMIT
    der[0] = -1.0 / u**2
    for row in range(1, nint):
        j = row + 1
        u = j + s
        prev_dev, prev_der = dev[row - 1], der[row - 1]
        # delayed values at nodes and half nodes of [j-1, j]
        g_node = prev_dev
        g_half = 0.5 * (prev_dev[:-1] + prev_dev[1:]) + 0.125 * h * (prev_der[:-1] - prev_der[1:])
        # classical RK4 on y = u*W, y' = W(u-1); k2 = k3 since y' is independent of y
        incr = h / 6.0 * (g_node[:-1] + 4.0 * g_half + g_node[1:])
        y = np.empty(m + 1)
        y[0] = j * dev[row - 1, -1]
        y[1:] = y[0] + np.cumsum(incr)
        dev[row] = y / u
        der[row] = (prev_dev - dev[row]) / u
    return dev, der


def ode_reference(u_max: float = 12.0, tol: float = 1e-12, grid_step: float = 1e-3,
                  max_subdivisions: int = 4) -> OdeReference:
    """Tabulate omega on [1, u_max] by the method of steps.

    The step is halved until two successive tables agree to ``tol`` at the
    coarse nodes; :class:`RuntimeError` if ``max_subdivisions`` halvings do
    not suffice.
    """
    if u_max < 2.0:
        raise ValueError("u_max must be >= 2")
    if tol <= 0:
        raise ValueError("tol must be positive")
    h = grid_step
    dev, der = _solve(u_max, h)
    for _ in range(max_subdivisions):
        fine_dev, fine_der = _solve(u_max, h / 2)
        diff = np.max(np.abs(fine_dev[:, ::2] - dev))
        dev, der, h = fine_dev, fine_der, h / 2
        if diff <= tol:
            break
    else:
        raise RuntimeError(f"ODE reference could not reach tol={tol:g} (last change {diff:.3g})")
    dev.setflags(write=False)
    der.setflags(write=False)
    return OdeReference(h, float(dev.shape[0] + 1), tol, dev, der)
