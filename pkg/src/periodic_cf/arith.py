"""Divisor sums, the period-sum bound f, and the red-number apparatus.

Red numbers are the ``Q`` whose sqrt has an odd period, equivalently those
for which ``x^2 - Q y^2 = -1`` is solvable.  ``M`` is the set of sums of two
squares, which contains them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from typing import Optional

import numpy as np

from .core import convergents, expand_sqrt, is_square, isqrt, sqrt_period_length
from .errors import InvalidDiscriminant, InvariantViolation, RationalRoot

log = logging.getLogger(__name__)

# Largest argument for which tau values come from the shared sieve.
SIEVE_CAP = 4_000_000


@dataclass
class DivisorTable:
    """``counts[n] == tau(n)`` for ``1 <= n <= limit``; ``counts[0]`` is unused."""

    limit: int
    counts: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, limit: int) -> "DivisorTable":
        if limit < 1:
            raise ValueError("limit must be positive")
        counts = np.zeros(limit + 1, dtype=np.int32)
        # divisor pairs (d, n/d) with d < n/d, then the square roots
        for d in range(1, isqrt(limit) + 1):
            counts[d * (d + 1) :: d] += 2
            counts[d * d] += 1
        return cls(limit, counts)

    def __getitem__(self, n: int) -> int:
        return int(self.counts[n])


_shared: Optional[DivisorTable] = None


def shared_table(limit: int) -> DivisorTable:
    """Process-wide table covering at least ``limit``; grows geometrically."""
    global _shared
    if _shared is None or _shared.limit < limit:
        grown = max(2 * (_shared.limit if _shared else 0), 1 << 16)
        size = max(limit, min(grown, SIEVE_CAP))
        log.debug("building divisor table up to %d", size)
        _shared = DivisorTable.build(size)
    return _shared


def tau(n: int) -> int:
    """Number of divisors, by trial division."""
    if n < 1:
        raise ValueError("tau is defined for n >= 1")
    count = 0
    r = isqrt(n)
    for d in range(1, r + 1):
        if n % d == 0:
            count += 2
    if r * r == n:
        count -= 1
    return count


def _tau_lookup(table: Optional[DivisorTable], n: int) -> int:
    if table is not None and n <= table.limit:
        return int(table.counts[n])
    if n <= SIEVE_CAP:
        return int(shared_table(n).counts[n])
    return tau(n)


def big_d(Q: int, table: Optional[DivisorTable] = None) -> int:
    """``sum_{u=1}^{isqrt(Q)} tau(Q - u^2)``, skipping a zero argument."""
    if Q < 1:
        raise ValueError("Q must be positive")
    total = 0
    for u in range(1, isqrt(Q) + 1):
        n = Q - u * u
        if n > 0:
            total += _tau_lookup(table, n)
    return total


def big_d_table(n: int, table: Optional[DivisorTable] = None) -> np.ndarray:
    """``out[Q] == big_d(Q)`` for ``0 <= Q <= n`` (``out[0] == 0``)."""
    if table is None or table.limit < n:
        table = DivisorTable.build(max(n, 1))
    tau_arr = table.counts[: n + 1].astype(np.int64)
    tau_arr[0] = 0  # zero argument contributes nothing
    out = np.zeros(n + 1, dtype=np.int64)
    for u in range(1, isqrt(n) + 1):
        out[u * u :] += tau_arr[: n + 1 - u * u]
    return out


@dataclass
class HickersonSweep:
    Q_max: int
    checked: int
    violations: list[int]
    max_ratio: float  # largest T0(Q) / D(Q)

    @property
    def ok(self) -> bool:
        return not self.violations


def hickerson_sweep(Q_max: int, t0: np.ndarray) -> HickersonSweep:
    """``T0(Q) <= D(Q)`` for every non-square ``2 <= Q <= Q_max``."""
    bound = big_d_table(Q_max)
    qs = np.arange(Q_max + 1)
    roots = np.floor(np.sqrt(qs)).astype(np.int64)
    nonsquare = roots * roots != qs
    nonsquare[:2] = False
    t = t0[: Q_max + 1]
    bad = np.nonzero(nonsquare & (t > bound))[0]
    ratio = float(np.max(t[nonsquare] / bound[nonsquare])) if nonsquare.any() else 0.0
    return HickersonSweep(Q_max, int(nonsquare.sum()), [int(q) for q in bad], ratio)


def f_bound(delta: int, table: Optional[DivisorTable] = None) -> int:
    """Upper bound for the partial-quotient sum over one period of a root of
    discriminant ``delta``; equals the number of river triples ``(a, b, h)``
    with ``a > 0 > b`` and ``h^2 - 4ab = delta``.
    """
    if delta < 2 or is_square(delta):
        raise RationalRoot(f"discriminant {delta} must be a non-square >= 2")
    if delta % 4 == 0:
        Q = delta // 4
        return 2 * big_d(Q, table) + _tau_lookup(table, Q)
    if delta % 4 != 1:
        raise InvalidDiscriminant(f"discriminant {delta} is 2 or 3 mod 4")
    total = 0
    i = 1
    while i * i < delta:
        num = delta - i * i
        if num % 4:
            raise InvariantViolation(f"(delta - i^2)/4 not integral for delta={delta}, i={i}")
        total += _tau_lookup(table, num // 4)
        i += 2
    return 2 * total


def count_river_triples(delta: int) -> int:
    """Brute-force count of ``(a, b, h)``, ``a > 0 > b``, ``h^2 - 4ab = delta``."""
    count = 0
    h = -isqrt(delta)
    while h * h <= delta:
        num = delta - h * h
        if num > 0 and num % 4 == 0:
            n = num // 4  # a * (-b) == n
            count += sum(1 for a in range(1, n + 1) if n % a == 0)
        h += 1
    return count


@dataclass(frozen=True)
class HickersonRecord:
    Q: int
    T0: int
    D: int

    @property
    def ok(self) -> bool:
        return self.T0 <= self.D


def hickerson_check(Q: int, table: Optional[DivisorTable] = None) -> HickersonRecord:
    if Q < 2 or is_square(Q):
        raise RationalRoot(f"{Q} is not a non-square >= 2")
    return HickersonRecord(Q, sqrt_period_length(Q), big_d(Q, table))


def negative_pell(Q: int) -> Optional[tuple[int, int]]:
    """Least positive solution of ``x^2 - Q y^2 = -1`` or ``None``."""
    cf = expand_sqrt(Q)
    T = cf.T
    if T % 2 == 0:
        return None
    c = convergents(cf, T - 1)[-1]
    if c.p * c.p - Q * c.q * c.q != -1:
        raise InvariantViolation(f"convergent {c.p}/{c.q} does not solve x^2-{Q}y^2=-1")
    return c.p, c.q


def first_unit_norm(Q: int) -> tuple[int, int, int]:
    """Scan convergents of sqrt(Q) for the first one with norm +-1.

    Returns ``(x, y, norm)``.  Every solution of ``x^2 - Q y^2 = -1`` is a
    convergent and the least one precedes every ``+1`` solution, so the norm
    sign decides solvability without looking at the period length.
    """
    a0 = isqrt(Q)
    if a0 * a0 == Q:
        raise RationalRoot(f"{Q} is a perfect square")
    m, d, a = 0, 1, a0
    p0, q0, p1, q1 = 1, 0, a0, 1
    while True:
        norm = p1 * p1 - Q * q1 * q1
        if norm in (1, -1):
            return p1, q1, norm
        m = d * a - m
        d = (Q - m * m) // d
        a = (a0 + m) // d
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0


def factorize(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def is_sum_two_squares(Q: int) -> bool:
    """``Q = u^2 + v^2`` with integers ``u, v >= 0`` (zero allowed)."""
    if Q < 0:
        return False
    if Q == 0:
        return True
    return all(e % 2 == 0 for p, e in factorize(Q).items() if p % 4 == 3)


def smallest_prime_factors(n: int) -> np.ndarray:
    spf = np.zeros(n + 1, dtype=np.int64)
    for i in range(2, isqrt(n) + 1):
        if spf[i] == 0:
            block = spf[i * i :: i]
            block[block == 0] = i
    rest = np.nonzero(spf == 0)[0]
    spf[rest] = rest
    return spf


def sum_two_squares_mask(n: int, spf: Optional[np.ndarray] = None) -> np.ndarray:
    """``mask[Q]`` for ``0 <= Q <= n`` by the prime-exponent criterion."""
    if spf is None:
        spf = smallest_prime_factors(n)
    mask = np.zeros(n + 1, dtype=bool)
    mask[0] = True
    for Q in range(1, n + 1):
        x = Q
        ok = True
        while x > 1:
            p = int(spf[x])
            e = 0
            while x % p == 0:
                x //= p
                e += 1
            if p % 4 == 3 and e % 2:
                ok = False
                break
        mask[Q] = ok
    return mask


def positive_two_squares_mask(n: int) -> np.ndarray:
    """``mask[Q]`` iff ``Q = u^2 + v^2`` with ``u, v >= 1``, by direct marking."""
    mask = np.zeros(n + 1, dtype=bool)
    for u in range(1, isqrt(n) + 1):
        v = np.arange(u, isqrt(n - u * u) + 1)
        mask[u * u + v * v] = True
    return mask


def t0_table(n: int, jobs: int = 1) -> np.ndarray:
    """``T0(q)`` for ``0 <= q <= n``; zero at perfect squares and at 0, 1."""
    from .sweep import parallel_map

    chunks = _chunks(2, n + 1, jobs)
    parts = parallel_map(_t0_chunk, chunks, jobs)
    out = np.zeros(n + 1, dtype=np.int64)
    for (lo, hi), vals in zip(chunks, parts):
        out[lo:hi] = vals
    return out


def _t0_chunk(bounds: tuple[int, int]) -> list[int]:
    lo, hi = bounds
    return [sqrt_period_length(q) for q in range(lo, hi)]


def _chunks(lo: int, hi: int, jobs: int) -> list[tuple[int, int]]:
    pieces = max(1, jobs * 4)
    step = max(1, -(-(hi - lo) // pieces))
    return [(a, min(a + step, hi)) for a in range(lo, hi, step)]


@dataclass(frozen=True)
class RedClassification:
    Q: int
    T0: int
    in_K: bool
    in_M: bool
    pell: Optional[tuple[int, int]]


def classify(Q: int) -> RedClassification:
    if Q < 2 or is_square(Q):
        raise RationalRoot(f"{Q} is not a non-square >= 2")
    T0 = sqrt_period_length(Q)
    pell = negative_pell(Q)
    rec = RedClassification(Q, T0, T0 % 2 == 1, is_sum_two_squares(Q), pell)
    if (rec.pell is not None) != rec.in_K or (rec.in_K and not rec.in_M):
        raise InvariantViolation(f"inconsistent red classification {rec}")
    return rec


@dataclass
class CensusReport:
    n: int
    k_count: int
    m_count: int
    m_count_no_zero: int

    @property
    def ratio(self) -> float:
        return self.k_count / self.m_count

    @property
    def ratio_no_zero(self) -> float:
        return self.k_count / self.m_count_no_zero


def red_census(n: int, t0: Optional[np.ndarray] = None, jobs: int = 1) -> CensusReport:
    """Counts of ``K_n`` and ``M_n``.

    ``m_count`` admits 0 as a square (so 1, 4, 9, ... are in M);
    ``m_count_no_zero`` requires both squares positive.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if t0 is None or len(t0) <= n:
        t0 = t0_table(n, jobs)
    k = int(np.count_nonzero(t0[1 : n + 1] % 2 == 1))
    m = int(np.count_nonzero(sum_two_squares_mask(n)[1:]))
    m0 = int(np.count_nonzero(positive_two_squares_mask(n)[1:]))
    return CensusReport(n, k, m, m0)


def k_obstruction_violations(t0: np.ndarray) -> list[int]:
    """Members of K divisible by 4 or by a prime 3 mod 4 (expected empty)."""
    n = len(t0) - 1
    spf = smallest_prime_factors(n)
    bad = []
    for Q in np.nonzero(t0 % 2 == 1)[0]:
        Q = int(Q)
        if Q % 4 == 0:
            bad.append(Q)
            continue
        x = Q
        while x > 1:
            p = int(spf[x])
            if p % 4 == 3:
                bad.append(Q)
                break
            while x % p == 0:
                x //= p
    return bad


def primes_up_to(n: int) -> np.ndarray:
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, isqrt(n) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    return np.nonzero(sieve)[0]


@dataclass(frozen=True)
class ProductReport:
    prime_limit: int
    partial: Decimal
    lower: Decimal  # certified lower bound for the infinite product

    def contains(self, value: float, tol: float) -> bool:
        return float(self.lower) - tol <= value <= float(self.partial) + tol


def theorem3_product(prime_limit: int, digits: int = 40) -> ProductReport:
    """``prod (1 - 1/p^2)`` over primes ``p <= prime_limit`` with ``p % 4 != 1``.

    The infinite product lies in ``[partial * (1 - 1/prime_limit), partial]``
    since the omitted factors multiply to at least ``1 - sum_{n > L} 1/n^2``.
    """
    if prime_limit < 2:
        raise ValueError("prime_limit must be at least 2")
    with localcontext() as ctx:
        ctx.prec = digits
        prod = Decimal(1)
        for p in primes_up_to(prime_limit):
            p = int(p)
            if p % 4 != 1:
                prod *= 1 - Decimal(1) / (p * p)
        lower = prod * (1 - Decimal(1) / prime_limit)
    return ProductReport(prime_limit, prod, lower)


@dataclass
class PrimeParityReport:
    prime_limit: int
    checked: int
    counterexamples: list[int]

    @property
    def ok(self) -> bool:
        return not self.counterexamples


def theorem34_check(prime_limit: int) -> PrimeParityReport:
    """For every prime Q: odd sqrt-period <=> Q % 4 != 3 <=> Q is a sum of two squares."""
    bad = []
    primes = primes_up_to(prime_limit)
    for Q in primes:
        Q = int(Q)
        in_k = sqrt_period_length(Q) % 2 == 1
        in_m = is_sum_two_squares(Q)
        if not (in_k == (Q % 4 != 3) == in_m):
            bad.append(Q)
    return PrimeParityReport(prime_limit, len(primes), bad)


def census_bound_onset(t0: np.ndarray, product: float) -> Optional[int]:
    """Smallest ``n`` from which ``|K_n| < |M_n| * product`` holds for every
    larger ``n`` in the table (``None`` if it fails at the end)."""
    n = len(t0) - 1
    k_cum = np.cumsum(t0 % 2 == 1)
    m_cum = np.cumsum(sum_two_squares_mask(n)) - 1  # drop Q = 0
    holds = k_cum[1:] < m_cum[1:] * product
    if not holds[-1]:
        return None
    failing = np.nonzero(~holds)[0]
    return 1 if len(failing) == 0 else int(failing[-1]) + 2
