"""Primes, Goldbach decomposition counts D(N), the twin prime constant and
the extended-Goldbach estimate 2 Theta(N)."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

MAX_SIEVE = 2_000_000_000


class GoldbachDomainError(ValueError):
    pass


@dataclass(frozen=True)
class PrimeTable:
    limit: int
    is_prime: np.ndarray = field(repr=False)
    _cumulative: np.ndarray = field(repr=False)

    def pi(self, x: int) -> int:
        """Number of primes <= x."""
        if x < 0:
            return 0
        return int(self._cumulative[min(int(x), self.limit)])

    @property
    def primes(self) -> np.ndarray:
        return np.flatnonzero(self.is_prime)


def sieve(limit: int) -> PrimeTable:
    """Sieve of Eratosthenes over ``[0, limit]``."""
    if limit < 2:
        raise ValueError("limit must be >= 2")
    if limit > MAX_SIEVE:
        raise MemoryError(f"refusing to sieve beyond {MAX_SIEVE}")
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if flags[p]:
            flags[p * p::2 * p] = False
    flags.setflags(write=False)
    cum = np.cumsum(flags, dtype=np.int64)
    cum.setflags(write=False)
    return PrimeTable(limit, flags, cum)


def _check_even(N: int, pt: PrimeTable) -> None:
    if N % 2 or N < 4:
        raise GoldbachDomainError(f"N must be even and >= 4, got {N}")
    if N > pt.limit:
        raise GoldbachDomainError(f"N={N} exceeds the sieve limit {pt.limit}")


def d_count(N: int, pt: PrimeTable) -> int:
    """Number of unordered decompositions ``N = p + q`` with ``p <= q`` prime."""
    _check_even(N, pt)
    p = np.arange(2, N // 2 + 1)
    return int(np.count_nonzero(pt.is_prime[p] & pt.is_prime[N - p]))


def d_counts_upto(max_N: int, pt: PrimeTable) -> np.ndarray:
    """``D(N)`` for every N in ``[0, max_N]`` (odd entries are meaningless).

    Uses one FFT self-convolution of the prime indicator; the ordered count
    plus the diagonal term is halved to give unordered pairs.
    """
    if max_N > pt.limit:
        raise GoldbachDomainError(f"max_N={max_N} exceeds the sieve limit {pt.limit}")
    ind = pt.is_prime[: max_N + 1].astype(float)
    size = 1 << (2 * len(ind) - 1).bit_length()
    spec = np.fft.rfft(ind, size)
    ordered = np.rint(np.fft.irfft(spec * spec, size)[: max_N + 1]).astype(np.int64)
    diag = np.zeros(max_N + 1, dtype=np.int64)
    half = np.arange(0, max_N // 2 + 1)
    diag[2 * half] = pt.is_prime[half]
    return (ordered + diag) // 2


def twin_prime_constant(prime_limit: int = 1_000_000) -> float:
    """Truncated product ``prod_{2 < p <= prime_limit} (1 - 1/(p-1)^2)``."""
    if prime_limit < 3:
        return 1.0
    p = sieve(prime_limit).primes[1:].astype(float)
    return float(np.exp(np.sum(np.log1p(-1.0 / (p - 1.0) ** 2))))


def odd_prime_factors(N: int) -> list[int]:
    out = []
    n = N
    while n % 2 == 0:
        n //= 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 2
    if n > 1:
        out.append(n)
    return out


def theta(N: int, c0: float | None = None) -> float:
    """``Theta(N) = C_N N / log(N)^2`` with ``C_N = C_0 prod_{p | N, p > 2} (p-1)/(p-2)``."""
    if N % 2 or N < 4:
        raise GoldbachDomainError(f"N must be even and >= 4, got {N}")
    if c0 is None:
        c0 = twin_prime_constant()
    cn = c0
    for p in odd_prime_factors(N):
        cn *= 1.0 + 1.0 / (p - 2)
    return cn * N / math.log(N) ** 2


@dataclass(frozen=True)
class GoldbachRecord:
    N: int
    d: int
    theta: float
    color_class: int


def comet(max_N: int, filter: str = "all", pt: PrimeTable | None = None,
          c0: float | None = None) -> list[GoldbachRecord]:
    """Records for even ``4 <= N <= max_N``; ``filter="12p"`` keeps ``N = 12 p``."""
    if filter not in ("all", "12p"):
        raise ValueError("filter must be 'all' or '12p'")
    if max_N < 4:
        return []
    pt = pt or sieve(max(max_N, 2))
    c0 = twin_prime_constant() if c0 is None else c0
    D = d_counts_upto(max_N, pt)
    Ns = range(4, max_N + 1, 2)
    if filter == "12p":
        Ns = [N for N in range(24, max_N + 1, 12) if pt.is_prime[N // 12]]
    return [GoldbachRecord(N, int(D[N]), theta(N, c0), (N // 2) % 3) for N in Ns]


def comet_csv(max_N: int, filter: str = "all", pt: PrimeTable | None = None,
              c0: float | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "D", "two_theta", "color_class"])
    for r in comet(max_N, filter, pt, c0):
        w.writerow([r.N, r.d, f"{2 * r.theta:.6f}", r.color_class])
    return buf.getvalue()
