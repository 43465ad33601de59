"""Exact quadratic surds and their periodic continued fractions.

A surd is stored as ``(P + sqrt(D)) / Q`` with ``Q | D - P*P``.  Under that
normalisation the classical complete-quotient recurrence

    a  = floor((P + sqrt(D)) / Q)
    P' = a*Q - P
    Q' = (D - P'^2) / Q

stays in the integers, and the period is found as the first repeated
``(P, Q)`` state.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt as _isqrt
from typing import Iterator, Sequence

from .errors import (
    DegenerateDiscriminant,
    InvariantViolation,
    RationalRoot,
    StepBudgetExceeded,
)


def isqrt(n: int) -> int:
    """Floor of the square root of a nonnegative integer, exactly."""
    if n < 0:
        raise ValueError("isqrt of a negative number")
    return _isqrt(n)


def is_square(n: int) -> bool:
    if n < 0:
        return False
    r = _isqrt(n)
    return r * r == n


@dataclass(frozen=True)
class QuadraticSurd:
    """The real number ``(P + sqrt(D)) / Qden`` in canonical form."""

    P: int
    D: int
    Qden: int

    def __post_init__(self):
        if self.D <= 0 or is_square(self.D):
            raise RationalRoot(f"D={self.D} is not a positive non-square")
        if self.Qden == 0:
            raise ValueError("zero denominator")
        if (self.D - self.P * self.P) % self.Qden:
            raise ValueError("Qden must divide D - P^2; use QuadraticSurd.canonical")

    @classmethod
    def canonical(cls, P: int, D: int, Qden: int) -> "QuadraticSurd":
        """Rescale ``(P, D, Qden)`` by the least ``t`` making ``Qden | D - P^2``."""
        if Qden == 0:
            raise ValueError("zero denominator")
        if D <= 0:
            raise DegenerateDiscriminant(f"D={D} <= 0")
        if is_square(D):
            raise RationalRoot(f"D={D} is a perfect square")
        t = abs(Qden) // gcd(Qden, D - P * P)
        P, D, Qden = t * P, t * t * D, t * Qden
        # strip the largest common factor that keeps the form canonical
        g0 = gcd(P, Qden)
        small = [d for d in range(1, isqrt(g0) + 1) if g0 % d == 0]
        for h in sorted(set(small) | {g0 // d for d in small}, reverse=True):
            if D % (h * h) == 0 and (D - P * P) % (h * Qden) == 0:
                return cls(P // h, D // (h * h), Qden // h)
        return cls(P, D, Qden)

    def __float__(self) -> float:
        return (self.P + self.D ** 0.5) / self.Qden

    def conjugate(self) -> "QuadraticSurd":
        # (P - sqrt D)/Q == (-P + sqrt D)/(-Q)
        return QuadraticSurd(-self.P, self.D, -self.Qden)

    def compare(self, num: int, den: int) -> int:
        """Sign of ``self - num/den`` (``den > 0``), by exact integer arithmetic."""
        # self - num/den = (den*P - num*Qden + den*sqrt(D)) / (den*Qden)
        lhs = den * self.P - num * self.Qden
        s = _sign_plus_sqrt(lhs, den * den * self.D)
        return s if self.Qden > 0 else -s


def _sign_plus_sqrt(x: int, d: int) -> int:
    """Sign of ``x + sqrt(d)`` for non-square ``d > 0``."""
    if x >= 0:
        return 1
    return 1 if d > x * x else -1


def make_surd(r: int, p: int, q: int) -> QuadraticSurd:
    """The larger root ``(-p + sqrt(p^2 + 4rq)) / 2r`` of ``r x^2 + p x = q``."""
    if r <= 0:
        raise ValueError("r must be positive")
    delta = p * p + 4 * r * q
    if delta <= 0:
        raise DegenerateDiscriminant(f"discriminant {delta} <= 0 for (r,p,q)=({r},{p},{q})")
    if is_square(delta):
        raise RationalRoot(f"discriminant {delta} is a perfect square for (r,p,q)=({r},{p},{q})")
    return QuadraticSurd.canonical(-p, delta, 2 * r)


def discriminant(r: int, p: int, q: int) -> int:
    return p * p + 4 * r * q


def floor_surd(s: QuadraticSurd) -> int:
    return _floor_state(s.P, isqrt(s.D), s.Qden)


def _floor_state(P: int, root: int, Q: int) -> int:
    # sqrt(D) is irrational, so k <= (P+sqrt D)/Q reduces to a comparison with isqrt(D)
    if Q > 0:
        return (P + root) // Q
    return (P + root + 1) // Q


@dataclass(frozen=True)
class CFExpansion:
    """``[a0; preperiod[1:], (period)...]``."""

    preperiod: tuple[int, ...]
    period: tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.preperiod) - 1

    @property
    def T(self) -> int:
        return len(self.period)

    @property
    def a0(self) -> int:
        return self.preperiod[0]

    def term(self, i: int) -> int:
        if i < len(self.preperiod):
            return self.preperiod[i]
        return self.period[(i - len(self.preperiod)) % len(self.period)]

    def terms(self) -> Iterator[int]:
        yield from self.preperiod
        while True:
            yield from self.period

    def head(self, n: int) -> list[int]:
        return [self.term(i) for i in range(n)]

    def period_sum(self) -> int:
        return sum(self.period)


def minimal_period(seq: Sequence[int]) -> tuple[int, ...]:
    """Shortest ``w`` with ``seq == w * k``."""
    n = len(seq)
    for d in range(1, n + 1):
        if n % d == 0 and all(seq[i] == seq[i % d] for i in range(d, n)):
            return tuple(seq[:d])
    raise AssertionError("unreachable")


def default_max_steps(D: int) -> int:
    """Step budget guaranteed to cover preperiod plus one period."""
    from .arith import SIEVE_CAP, f_bound

    if D % 4 in (2, 3) or D // 4 > SIEVE_CAP:
        # D % 4 in (2, 3) only arises for surds outside the x_+(r,p,q) family.
        # Reduced states satisfy 0 < P < sqrt(D), 0 < Q < 2 sqrt(D), so fewer
        # than 2D of them exist.
        return 2 * D + 8
    return f_bound(D) + 3


def expand(s: QuadraticSurd, max_steps: int | None = None) -> CFExpansion:
    """Periodic continued fraction of ``s``, split into preperiod and period."""
    P, D, Q = s.P, s.D, s.Qden
    if max_steps is None:
        max_steps = _budget_for(s)
    root = isqrt(D)
    seen: dict[tuple[int, int], int] = {}
    quotients: list[int] = []
    for step in range(max_steps + 1):
        key = (P, Q)
        if key in seen:
            start = seen[key]
            pre = tuple(quotients[:start])
            cycle = quotients[start:]
            period = minimal_period(cycle)
            if len(period) != len(cycle):
                raise InvariantViolation(f"state cycle {cycle} is not primitive")
            if not pre:
                # a purely periodic expansion still reports a0 in the preperiod
                pre = (period[0],)
                period = period[1:] + period[:1]
            return CFExpansion(pre, period)
        seen[key] = step
        a = _floor_state(P, root, Q)
        quotients.append(a)
        P = a * Q - P
        num = D - P * P
        if num % Q:
            raise InvariantViolation(f"Q={Q} does not divide D-P^2={num}")
        Q = num // Q
    raise StepBudgetExceeded(f"no period within {max_steps} steps for {s}")


def _budget_for(s: QuadraticSurd) -> int:
    # With Qden > 0 the surd is the larger root of Qden x^2 - 2P x - (D - P^2)/Qden,
    # whose discriminant is 4D; otherwise fall back to counting reduced states.
    if s.Qden > 0:
        return max(default_max_steps(4 * s.D), 64)
    return max(2 * s.D + 8, 64)


def expand_sqrt(q: int) -> CFExpansion:
    if q < 2 or is_square(q):
        raise RationalRoot(f"{q} is not a positive non-square")
    return expand(make_surd(1, 0, q))


def sqrt_period_length(q: int) -> int:
    """``T0(q)`` by the reduced-surd loop for sqrt(q); ends when a == 2*a0.

    Cheaper than :func:`expand` for bulk sweeps; tests pin it to ``expand_sqrt``.
    Returns 0 for perfect squares.
    """
    a0 = _isqrt(q)
    if a0 * a0 == q:
        return 0
    m, d, a = 0, 1, a0
    t = 0
    while a != 2 * a0:
        m = d * a - m
        d = (q - m * m) // d
        a = (a0 + m) // d
        t += 1
    return t


def expand_head(s: QuadraticSurd, n: int) -> list[int]:
    """First ``n`` partial quotients without period detection."""
    P, D, Q = s.P, s.D, s.Qden
    root = isqrt(D)
    out = []
    for _ in range(n):
        a = _floor_state(P, root, Q)
        out.append(a)
        P = a * Q - P
        Q = (D - P * P) // Q
    return out


@dataclass(frozen=True)
class ConvergentPair:
    p: int
    q: int

    def as_fraction(self) -> Fraction:
        return Fraction(self.p, self.q)


def convergents_of(terms: Sequence[int]) -> list[ConvergentPair]:
    out = []
    p0, q0, p1, q1 = 1, 0, terms[0], 1
    out.append(ConvergentPair(p1, q1))
    for a in terms[1:]:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        out.append(ConvergentPair(p1, q1))
    return out


def convergents(cf: CFExpansion, k: int) -> list[ConvergentPair]:
    """``p_0/q_0, ..., p_k/q_k``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return convergents_of(cf.head(k + 1))
