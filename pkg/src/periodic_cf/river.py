"""Partial quotients from a walk along the river of ``r v^2 + p v u - q u^2``.

The walk is the mediant (Stern-Brocot) approximation of ``x_+`` written in
terms of form values.  A state ``(a, b, h)`` holds the value ``a > 0`` of the
lattice vector above the line ``v = x_+ u``, the value ``b < 0`` of the one
below it, and ``h``, the common difference of the arithmetic progression
across the edge between them.  The mediant has value ``c = a + b + h`` and
replaces whichever vector lies on its side of the line, so

    c > 0:  (a, b, h) -> (c, b, h + 2b)
    c < 0:  (a, b, h) -> (a, c, h + 2a)

and ``h^2 - 4ab`` stays equal to the discriminant.  Maximal runs of steps on
one side are the partial quotients.  Because the state space is finite the
walk is periodic, and the number of steps in one cycle is at most the number
of admissible triples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

from .arith import f_bound
from .core import (
    CFExpansion,
    QuadraticSurd,
    _sign_plus_sqrt,
    discriminant,
    expand,
    floor_surd,
    make_surd,
    minimal_period,
)
from .errors import DegenerateDiscriminant, InvariantViolation, RationalRoot

ABOVE, BELOW = 1, -1


@dataclass(frozen=True)
class RiverState:
    a: int
    b: int
    h: int
    n: int = 0

    @property
    def key(self) -> tuple[int, int, int]:
        return self.a, self.b, self.h

    @property
    def delta(self) -> int:
        return self.h * self.h - 4 * self.a * self.b

    @property
    def on_river(self) -> bool:
        return self.a > 0 > self.b


def river_step(s: RiverState) -> RiverState:
    c = s.a + s.b + s.h
    if c > 0:
        nxt = RiverState(c, s.b, s.h + 2 * s.b, s.n + 1)
    elif c < 0:
        nxt = RiverState(s.a, c, s.h + 2 * s.a, s.n + 1)
    else:
        raise InvariantViolation(f"zero form value after {s}: discriminant is a square")
    if nxt.delta != s.delta:
        raise InvariantViolation(f"discriminant not conserved: {s} -> {nxt}")
    return nxt


def step_side(s: RiverState) -> int:
    """Side of the point created by the next river step."""
    return ABOVE if s.a + s.b + s.h > 0 else BELOW


def run_lengths(sides: Sequence[int]) -> list[int]:
    runs: list[int] = []
    prev = None
    for s in sides:
        if s == prev:
            runs[-1] += 1
        else:
            runs.append(1)
            prev = s
    return runs


@dataclass
class RiverTrace:
    """States ``states[k]`` after ``k`` steps and the side of each created point.

    ``lead`` is the partial quotient that precedes the first run when the
    first step goes above the line: 0 for roots in (0, 1), ``floor(x_+)``
    for negative roots (the walk then runs on the fractional part).
    """

    r: int
    p: int
    q: int
    states: list[RiverState] = field(default_factory=list)
    sides: list[int] = field(default_factory=list)
    lead: int = 0
    n0: int = 0  # first step index from which form signs match sides
    l0: int = 0

    @property
    def delta(self) -> int:
        return discriminant(self.r, self.p, self.q)

    @property
    def offset(self) -> int:
        """1 when the first run is a_1 (the leading quotient is not a run)."""
        return 1 if self.sides and self.sides[0] == ABOVE else 0

    def segment(self, k: int) -> int:
        """Index of the partial quotient whose run contains step ``k >= 1``."""
        seg = self.offset
        for i in range(1, k):
            if self.sides[i] != self.sides[i - 1]:
                seg += 1
        return seg

    def segments(self) -> list[int]:
        out = []
        seg = self.offset
        for i, s in enumerate(self.sides):
            if i and s != self.sides[i - 1]:
                seg += 1
            out.append(seg)
        return out


def quotients_from_trace(t: RiverTrace) -> list[int]:
    """Run lengths of the side marks; the last run may still be growing."""
    return run_lengths(t.sides)


class _Walker:
    """Mediant walk that tracks lattice vectors until the river is reached."""

    def __init__(self, r: int, p: int, q: int):
        if r <= 0:
            raise ValueError("r must be positive")
        delta = discriminant(r, p, q)
        if delta <= 0:
            raise DegenerateDiscriminant(f"discriminant {delta} <= 0")
        x = make_surd(r, p, q)  # raises RationalRoot for square delta
        self.lead = 0
        a0 = floor_surd(x)
        if a0 < 0:
            # substitute x = y + a0: the root y in (0, 1) has the same discriminant
            self.lead = a0
            p, q = p + 2 * r * a0, q - r * a0 * a0 - p * a0
            x = make_surd(r, p, q)
        self.r, self.p, self.q, self.delta = r, p, q, delta
        self.x = x
        self.upper = (0, 1)  # (u, v)
        self.lower = (1, 0)
        self.state = RiverState(r, -q, p, 0)
        self.on_river = self._lower_above_minus_root()

    def _lower_above_minus_root(self) -> bool:
        # slope v/u of the lower vector exceeds x_- = (-p - sqrt(delta)) / 2r
        u, v = self.lower
        return _sign_plus_sqrt(2 * self.r * v + self.p * u, u * u * self.delta) > 0

    def step(self) -> int:
        s = self.state
        if self.on_river:
            side = step_side(s)
            self.state = river_step(s)
            return side
        (u1, v1), (u2, v2) = self.upper, self.lower
        mu, mv = u1 + u2, v1 + v2
        c = s.a + s.b + s.h
        side = ABOVE if self.x.compare(mv, mu) < 0 else BELOW
        if side == ABOVE:
            self.upper = (mu, mv)
            self.state = RiverState(c, s.b, s.h + 2 * s.b, s.n + 1)
        else:
            self.lower = (mu, mv)
            self.state = RiverState(s.a, c, s.h + 2 * s.a, s.n + 1)
        self.on_river = self._lower_above_minus_root()
        return side


def init_river(r: int, p: int, q: int) -> tuple[RiverState, RiverTrace]:
    """Walk until the form sign decides the side of every later point.

    For ``rq > 0`` this holds at once (``n0 = l0 = 0``).
    """
    w = _Walker(r, p, q)
    trace = RiverTrace(r, p, q, states=[w.state], lead=w.lead)
    while not w.on_river:
        trace.sides.append(w.step())
        trace.states.append(w.state)
    trace.n0 = w.state.n
    trace.l0 = trace.segment(trace.n0) if trace.n0 else 0
    if not w.state.on_river or w.state.delta != w.delta:
        raise InvariantViolation(f"bad river entry state {w.state}")
    return w.state, trace


def walk(r: int, p: int, q: int, steps: int) -> RiverTrace:
    """Trace of ``steps`` steps from the initial superbasis."""
    w = _Walker(r, p, q)
    trace = RiverTrace(r, p, q, states=[w.state], lead=w.lead)
    n0 = None
    for _ in range(steps):
        if n0 is None and w.on_river:
            n0 = w.state.n
        trace.sides.append(w.step())
        trace.states.append(w.state)
    if n0 is None:
        while not w.on_river:
            w.step()
        n0 = w.state.n
    trace.n0 = n0
    return trace


@dataclass(frozen=True)
class PeriodReport:
    n0: int
    n1: int
    l0: int
    l1: int
    quotients: tuple[int, ...]  # a_{l0+1} .. a_{l1}
    head: tuple[int, ...]  # a_0 .. a_{l0}
    minimal: tuple[int, ...]
    entry: int = 0  # first step whose state lies on the river

    @property
    def period_sum(self) -> int:
        return self.n1 - self.n0

    @property
    def T(self) -> int:
        return len(self.minimal)

    @property
    def cycle_length(self) -> int:
        return self.l1 - self.l0

    @property
    def cycle_parity(self) -> str:
        return "even" if self.cycle_length % 2 == 0 else "odd"

    def term(self, i: int) -> int:
        if i <= self.l0:
            return self.head[i]
        return self.quotients[(i - self.l0 - 1) % len(self.quotients)]


def detect_period(r: int, p: int, q: int, budget: Optional[int] = None) -> PeriodReport:
    """Walk the river until a triple repeats; read the cycle's quotients.

    The cycle is anchored at ``n0``, the first step after the river entry
    that ends a run of same-side steps, so that ``a_{l0+1} .. a_{l1}`` sum
    to exactly ``n1 - n0`` steps.
    """
    state, trace = init_river(r, p, q)
    delta = trace.delta
    if budget is None:
        budget = f_bound(delta) + 1
    sides = trace.sides
    entry = state.n
    a, b, h = state.a, state.b, state.h

    def advance():
        nonlocal a, b, h
        c = a + b + h
        if c > 0:
            a, h = c, h + 2 * b
            sides.append(ABOVE)
        elif c < 0:
            b, h = c, h + 2 * a
            sides.append(BELOW)
        else:
            raise InvariantViolation(f"zero form value at step {len(sides)}")

    seen = {(a, b, h): entry}
    n = entry
    while True:
        advance()
        n += 1
        key = (a, b, h)
        if key in seen:
            break
        if n - entry > budget:
            raise InvariantViolation(
                f"no repeated triple within {budget} steps for ({r},{p},{q}): period-sum bound violated"
            )
        seen[key] = n
    if h * h - 4 * a * b != delta:
        raise InvariantViolation("discriminant drifted during the walk")
    if seen[key] != entry:
        raise InvariantViolation(f"walk re-entered at step {seen[key]}, not at {entry}")
    cycle = n - entry
    # sides[k - 1] is the side of step k; river steps start at entry + 1
    n0 = entry + 1
    while True:
        while len(sides) <= n0:
            advance()
        if sides[n0] != sides[n0 - 1]:
            break
        n0 += 1
    n1 = n0 + cycle
    while len(sides) <= n1:
        advance()
    if sides[n1] == sides[n1 - 1]:
        raise InvariantViolation("cycle end is not a run boundary")
    segs = trace.segments()
    l0, l1 = segs[n0 - 1], segs[n1 - 1]
    stream = ([trace.lead] if trace.offset else []) + run_lengths(sides)
    quotients = tuple(stream[l0 + 1 : l1 + 1])
    head = tuple(stream[: l0 + 1])
    if sum(quotients) != n1 - n0:
        raise InvariantViolation(f"step count {n1 - n0} != quotient sum {sum(quotients)}")
    if len(quotients) % 2:
        raise InvariantViolation(f"odd cycle length {len(quotients)}")
    minimal = minimal_period(quotients)
    expected = len(minimal) * (1 if len(minimal) % 2 == 0 else 2)
    if len(quotients) != expected:
        raise InvariantViolation(f"cycle of {len(quotients)} quotients for minimal period {len(minimal)}")
    return PeriodReport(n0, n1, l0, l1, quotients, head, minimal, entry)


def river_stream(r: int, p: int, q: int) -> Iterator[int]:
    """Partial quotients ``a_0, a_1, ...`` of ``x_+`` produced by the walk."""
    w = _Walker(r, p, q)
    first = w.step()
    if first == ABOVE:
        yield w.lead
    run = 1
    prev = first
    while True:
        side = w.step()
        if side == prev:
            run += 1
        else:
            yield run
            run, prev = 1, side


def oracle_mismatch(r: int, p: int, q: int, cf: Optional[CFExpansion] = None) -> Optional[str]:
    """Compare the walk against the surd recurrence; ``None`` when they agree
    on every index (both sides are eventually periodic, so two cycles past
    the river entry suffice)."""
    rep = detect_period(r, p, q)
    if cf is None:
        cf = expand(make_surd(r, p, q))
    L = len(rep.quotients)
    upto = max(rep.l1 + L, cf.m + 2 * cf.T) + 1
    for i in range(upto):
        if rep.term(i) != cf.term(i):
            return f"a_{i}: river {rep.term(i)} != recurrence {cf.term(i)} for ({r},{p},{q})"
    if set(_rotations(rep.minimal)) != set(_rotations(cf.period)):
        return f"periods differ for ({r},{p},{q}): {rep.minimal} vs {cf.period}"
    return None


def _rotations(seq: Sequence[int]) -> list[tuple[int, ...]]:
    s = tuple(seq)
    return [s[i:] + s[:i] for i in range(len(s))]


@dataclass(frozen=True)
class Theorem2Record:
    r: int
    p: int
    q: int
    delta: int
    T: int
    period_sum: int
    bound: int

    @property
    def odd_period(self) -> bool:
        return self.T % 2 == 1

    @property
    def effective_bound(self) -> int:
        # f is always even: tau(Q) is odd only for square Q
        return self.bound // 2 if self.odd_period else self.bound

    @property
    def ok(self) -> bool:
        return self.period_sum <= self.effective_bound

    @property
    def ratio(self) -> float:
        return self.period_sum / self.effective_bound


def check_theorem2(r: int, p: int, q: int, cf: Optional[CFExpansion] = None) -> Theorem2Record:
    x = make_surd(r, p, q)
    if cf is None:
        cf = expand(x)
    delta = discriminant(r, p, q)
    return Theorem2Record(r, p, q, delta, cf.T, cf.period_sum(), f_bound(delta))


def river_triples(delta: int) -> list[tuple[int, int, int]]:
    """Every ``(a, b, h)`` with ``a > 0 > b`` and ``h^2 - 4ab = delta``."""
    out = []
    h = 0
    while h * h < delta:
        if (delta - h * h) % 4 == 0:
            n = (delta - h * h) // 4
            for a in range(1, n + 1):
                if n % a == 0:
                    for hh in {h, -h}:
                        out.append((a, -(n // a), hh))
        h += 1
    return sorted(out)


def palindromic_rotation(period: Sequence[int]) -> Optional[int]:
    """Smallest ``k`` such that the rotation ``period[k:] + period[:k]`` reads the
    same backwards, either whole or without its last element.

    One of the two happens exactly when the two-way infinite periodic sequence
    is symmetric about some point (between two terms or on a term).
    """
    for k, rot in enumerate(_rotations(period)):
        body = rot[:-1]
        if rot == rot[::-1] or body == body[::-1]:
            return k
    return None


@dataclass(frozen=True)
class PalindromeReport:
    period: tuple[int, ...]
    rotation: Optional[int]
    body_palindrome: bool  # period minus its last element reads the same backwards
    asserted: bool

    @property
    def palindromic(self) -> bool:
        return self.rotation is not None


def palindrome_check(cf: CFExpansion, r: int, p: int) -> PalindromeReport:
    """Mirror symmetry of the periodic part; required when ``p == 0`` or ``r == 1``."""
    period = tuple(cf.period)
    body = period[:-1]
    rep = PalindromeReport(period, palindromic_rotation(period), body == body[::-1], p == 0 or r == 1)
    if rep.palindromic != (tuple(reversed(period)) in set(_rotations(period))):
        raise InvariantViolation(f"rotation and reversal tests disagree on {period}")
    if rep.asserted and not rep.palindromic:
        raise InvariantViolation(f"period {period} is not mirror symmetric (r={r}, p={p})")
    return rep


def conjugate_period_relation(r: int, p: int, q: int) -> bool:
    """Whether the period of ``x_-`` is a rotation of the reversed period of ``x_+``.

    Diagnostic only.
    """
    plus = expand(make_surd(r, p, q)).period
    # x_- = (-p - sqrt(delta)) / 2r = (p + sqrt(delta)) / (-2r)
    minus = expand(QuadraticSurd.canonical(p, discriminant(r, p, q), -2 * r)).period
    return tuple(minus) in set(_rotations(tuple(reversed(plus))))
