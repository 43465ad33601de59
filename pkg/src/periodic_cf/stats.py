"""Empirical partial-quotient frequencies of ``x_+(q)`` against their limits.

Frequencies are computed by full enumeration of ``q``.  Limits are the
Lebesgue measures of cylinder sets ``{x : a_s(x) = A for each (s, A)}``,
exact for a constrained prefix and otherwise enclosed in a certified
interval, plus the single-quotient Gauss-Kuz'min law.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import special

from .core import CFExpansion, expand_head, expand_sqrt, is_square, isqrt, make_surd
from .errors import NodeBudgetExceeded


@dataclass(frozen=True)
class CylinderConstraint:
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.pairs:
            raise ValueError("empty constraint")
        positions = [s for s, _ in self.pairs]
        if len(set(positions)) != len(positions):
            raise ValueError(f"repeated index in {self.pairs}")
        for s, A in self.pairs:
            if s < 1 or A < 1:
                raise ValueError(f"index and value must be positive, got ({s}, {A})")
        object.__setattr__(self, "pairs", tuple(sorted(self.pairs)))

    @classmethod
    def of(cls, *pairs: tuple[int, int]) -> "CylinderConstraint":
        return cls(tuple(pairs))

    @property
    def depth(self) -> int:
        return self.pairs[-1][0]

    @property
    def is_prefix(self) -> bool:
        return [s for s, _ in self.pairs] == list(range(1, self.depth + 1))


def indicator(x_cf: CFExpansion, c: CylinderConstraint) -> bool:
    return all(x_cf.term(s) == A for s, A in c.pairs)


def gk_limit(A: int) -> float:
    """Limit frequency ``log2(1 + 1/(A(A+2)))`` of a partial quotient equal to ``A``."""
    if A < 1:
        raise ValueError("A must be positive")
    return math.log1p(1.0 / (A * (A + 2))) / math.log(2.0)


# --- cylinder measures -------------------------------------------------------


def _denominators(digits: Sequence[int]) -> tuple[int, int]:
    """``(q_k, q_{k-1})`` for ``[0; digits]``."""
    q, qp = 1, 0
    for a in digits:
        q, qp = a * q + qp, q
    return q, qp


def _block_interval(digits: Sequence[int]) -> tuple[Fraction, Fraction]:
    """Endpoints of ``{y in [0,1) : y starts [0; digits, ...]}``, ascending."""
    p, pp, q, qp = 0, 1, 1, 0
    for a in digits:
        p, pp = a * p + pp, p
        q, qp = a * q + qp, q
    ends = sorted((Fraction(p, q), Fraction(p + pp, q + qp)))
    return ends[0], ends[1]


def prefix_measure(digits: Sequence[int]) -> Fraction:
    q, qp = _denominators(digits)
    return Fraction(1, q * (q + qp))


@dataclass(frozen=True)
class Measure:
    lo: float
    hi: float
    exact: Optional[Fraction] = None

    @property
    def value(self) -> float:
        return float(self.exact) if self.exact is not None else 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo


Pattern = tuple[tuple[int, int], ...]


def _shift(pattern: Pattern, by: int) -> Pattern:
    return tuple((s - by, A) for s, A in pattern if s > by)


def _block(pattern: Pattern) -> Optional[list[int]]:
    """Digits when ``pattern`` fixes exactly positions ``1..k``."""
    if [s for s, _ in pattern] == list(range(1, len(pattern) + 1)):
        return [A for _, A in pattern]
    return None


# moments int_S x^j dx for j = 0.._ORDER are tracked through the tree
_ORDER = 8
# absolute float slack per accumulated term
_ULP = 1e-14


@dataclass(frozen=True)
class _Enclosure:
    """Bounds on the moments ``int_S x^j dx`` of a cylinder ``S``; ``j = 0`` is the mass."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    @property
    def width(self) -> float:
        return max(h - l for l, h in zip(self.lo, self.hi))


def _exact(values: Sequence[float]) -> _Enclosure:
    return _Enclosure(tuple(values), tuple(values))


def _interval_piece(P, Pp, Q, Qp, z0: Fraction, z1: Fraction) -> _Enclosure:
    """Moments of ``{x = (P + Pp z)/(Q + Qp z) : z in [z0, z1]}``."""
    x0 = Fraction(P * z0.denominator + Pp * z0.numerator, Q * z0.denominator + Qp * z0.numerator)
    x1 = Fraction(P * z1.denominator + Pp * z1.numerator, Q * z1.denominator + Qp * z1.numerator)
    width = float(abs(x1 - x0))
    a, b = float(x0), float(x1)
    # (b^(j+1) - a^(j+1)) / (j+1) without cancellation
    return _exact([width * sum(b ** i * a ** (j - i) for i in range(j + 1)) / (j + 1) for j in range(_ORDER + 1)])


def _hurwitz(k: int, c: float) -> float:
    return float(special.zeta(k, c))


def _block_integral(k: int, c: float, alpha: float, beta: float) -> float:
    """``int_alpha^beta zeta(k, c + y) dy`` for ``k >= 2``."""
    if k == 2:
        return float(special.psi(c + beta) - special.psi(c + alpha))
    return (_hurwitz(k - 1, c + alpha) - _hurwitz(k - 1, c + beta)) / (k - 1)


def _combine(P, Pp, Q, Qp, integrals: Sequence[tuple[float, float]]) -> _Enclosure:
    """Moments of a range node from ``int zeta(k, c + y) dy``, ``k = 2.._ORDER+2``.

    Over the range ``x = P/Q + eps/(Q^2 u)`` with ``u = B + y + Qp/Q`` and mass
    density ``1/(Q u)^2``; expanding ``x^j`` binomially leaves sums over ``B``
    of ``u^-k``, which are Hurwitz zeta values.
    """
    r = P / Q
    e = (Pp * Q - P * Qp) / (Q * Q)
    q2 = Q * Q
    lo, hi = [], []
    for j in range(_ORDER + 1):
        l = h = 0.0
        for i in range(j + 1):
            coef = math.comb(j, i) * r ** (j - i) * e ** i / q2
            a, b = integrals[i]
            if coef >= 0:
                l += coef * a
                h += coef * b
            else:
                l += coef * b
                h += coef * a
        lo.append(l)
        hi.append(h)
    return _clamp(lo, hi)


def _clamp(lo: list[float], hi: list[float]) -> _Enclosure:
    # 0 <= x^j <= x^(j-1) on [0, 1)
    lo = [max(0.0, v) for v in lo]
    for j in range(1, len(hi)):
        hi[j] = min(hi[j], hi[j - 1])
    return _Enclosure(tuple(lo), tuple(hi))


def _closed_range(P, Pp, Q, Qp, n: int, alpha: Fraction, beta: Fraction) -> _Enclosure:
    """Free digit ``B >= n`` followed by a block fixing ``y`` to ``[alpha, beta]``; exact."""
    c = n + Qp / Q
    vals = [_block_integral(k, c, float(alpha), float(beta)) for k in range(2, _ORDER + 3)]
    e = _combine(P, Pp, Q, Qp, [(v, v) for v in vals])
    return e


def _open_range(P, Pp, Q, Qp, n: int, sub: _Enclosure) -> _Enclosure:
    """Free digit ``B >= n`` followed by a pattern with moments enclosed by ``sub``.

    ``int_S zeta(k, c + y) dy`` is expanded in ``y`` around ``c``; the terms
    use the moments of ``S`` and the Lagrange remainder has a known sign and
    is bounded by the top moment.
    """
    c = n + Qp / Q
    integrals = []
    for k in range(2, _ORDER + 3):
        l = h = 0.0
        for j in range(_ORDER):
            coef = (-1) ** j * math.comb(k + j - 1, j) * _hurwitz(k + j, c)
            if coef >= 0:
                l += coef * sub.lo[j]
                h += coef * sub.hi[j]
            else:
                l += coef * sub.hi[j]
                h += coef * sub.lo[j]
        rem = (-1) ** _ORDER * math.comb(k + _ORDER - 1, _ORDER) * _hurwitz(k + _ORDER, c) * sub.hi[_ORDER]
        l, h = (l, h + rem) if rem >= 0 else (l + rem, h)
        # zeta(k, c + y) is decreasing in y
        l = max(l, _hurwitz(k, c + 1) * sub.lo[0])
        h = min(h, _hurwitz(k, c) * sub.hi[0])
        integrals.append((l, h))
    return _combine(P, Pp, Q, Qp, integrals)


@lru_cache(maxsize=256)
def _enclose(pattern: Pattern, tol: float, node_budget: int) -> _Enclosure:
    """Certified moment bounds for the cylinder ``pattern``.

    Best-first refinement over the values of free positions.  A node at depth
    ``d`` carries the convergent matrix of its prefix, so ``x = (P + Pp z) /
    (Q + Qp z)`` with ``z = T^d x``.  Values ``B >= n`` of a free position not
    yet split off form one range node; it is closed exactly when everything
    after it is a block of fixed digits and otherwise bounded through the
    moments of the shifted remaining pattern.
    """
    size = _ORDER + 1
    if not pattern:
        return _exact([1.0 / (j + 1) for j in range(size)])
    fixed = dict(pattern)
    depth = pattern[-1][0]
    acc_lo = [0.0] * size
    acc_hi = [0.0] * size
    terms = 0
    heap: list = []
    counter = 0

    def add(e: _Enclosure, sign: int = 1):
        for j in range(size):
            acc_lo[j] += sign * e.lo[j]
            acc_hi[j] += sign * e.hi[j]

    def exact(e: _Enclosure):
        nonlocal terms
        terms += 1
        add(e)

    def leaf(d: int, P: int, Pp: int, Q: int, Qp: int):
        while d < depth and (d + 1) in fixed:
            A = fixed[d + 1]
            P, Pp, Q, Qp = A * P + Pp, P, A * Q + Qp, Q
            d += 1
        rest = _shift(pattern, d)
        if not rest:
            exact(_interval_piece(P, Pp, Q, Qp, Fraction(0), Fraction(1)))
            return
        digits = _block(rest)
        if digits is not None:
            exact(_interval_piece(P, Pp, Q, Qp, *_block_interval(digits)))
            return
        push_range(d, P, Pp, Q, Qp, 1)

    def push_range(d: int, P: int, Pp: int, Q: int, Qp: int, n: int):
        nonlocal counter
        rest = _shift(pattern, d + 1)
        digits = _block(rest)
        if digits is not None:
            exact(_closed_range(P, Pp, Q, Qp, n, *_block_interval(digits)))
            return
        e = _open_range(P, Pp, Q, Qp, n, _enclose(rest, tol / 4, node_budget))
        counter += 1
        heapq.heappush(heap, (-e.width, counter, e, d, P, Pp, Q, Qp, n))
        add(e)

    def spread() -> float:
        return max(h - l for l, h in zip(acc_lo, acc_hi))

    leaf(0, 0, 1, 1, 0)
    nodes = 0
    # half the budget goes to refinement, the rest absorbs sub-pattern and float slack
    while heap and spread() > tol / 2:
        _, _, e, d, P, Pp, Q, Qp, n = heapq.heappop(heap)
        add(e, -1)
        nodes += 1
        if nodes > node_budget:
            raise NodeBudgetExceeded(
                f"measure of {pattern} not within {tol} after {node_budget} nodes "
                f"(width {spread() + e.width:.3g})"
            )
        leaf(d + 1, n * P + Pp, P, n * Q + Qp, Q)
        push_range(d, P, Pp, Q, Qp, n + 1)
    slack = _ULP * (terms + counter + 1)
    return _clamp([v - slack for v in acc_lo], [v + slack for v in acc_hi])


def cylinder_measure(c: CylinderConstraint, tol: float = 1e-6, node_budget: int = 200_000) -> Measure:
    """Lebesgue measure of the cylinder set; exact for prefix constraints."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if c.is_prefix:
        v = prefix_measure([A for _, A in c.pairs])
        return Measure(float(v), float(v), v)
    e = _enclose(c.pairs, tol, node_budget)
    if e.hi[0] - e.lo[0] > tol:
        raise NodeBudgetExceeded(f"enclosure width {e.hi[0] - e.lo[0]:.3g} exceeds {tol}")
    return Measure(e.lo[0], e.hi[0])


# --- empirical frequencies ---------------------------------------------------


def _isqrt_vec(n: np.ndarray) -> np.ndarray:
    r = np.floor(np.sqrt(n.astype(np.float64))).astype(np.int64)
    r -= (r * r > n).astype(np.int64)
    r += ((r + 1) * (r + 1) <= n).astype(np.int64)
    return r


def quotient_heads(r: int, p: int, qs: np.ndarray, depth: int) -> tuple[np.ndarray, np.ndarray]:
    """Partial quotients ``a_0..a_depth`` of ``x_+(q)`` for every ``q`` in ``qs``.

    Returns ``(heads, valid)`` where ``valid`` marks ``q`` with a positive
    non-square discriminant; rows of invalid ``q`` are zero.  All arithmetic
    is exact int64; the state magnitudes stay below ``4 * delta``.
    """
    qs = np.asarray(qs, dtype=np.int64)
    delta = p * p + 4 * r * qs
    if delta.size and int(delta.max()) >= 1 << 60:
        raise OverflowError("discriminant too large for the vectorised path")
    root = _isqrt_vec(np.maximum(delta, 0))
    valid = (delta > 0) & (root * root != delta)
    D = delta[valid]
    s = root[valid]
    P = np.full(D.shape, -p, dtype=np.int64)
    Q = np.full(D.shape, 2 * r, dtype=np.int64)
    out = np.zeros((len(qs), depth + 1), dtype=np.int64)
    block = np.empty((len(D), depth + 1), dtype=np.int64)
    for i in range(depth + 1):
        a = np.where(Q > 0, (P + s) // Q, (P + s + 1) // Q)
        block[:, i] = a
        P = a * Q - P
        num = D - P * P
        if np.any(num % Q):
            raise AssertionError("non-integral state in vectorised recurrence")
        Q = num // Q
    out[valid] = block
    return out, valid


@dataclass(frozen=True)
class GKRow:
    s: int
    A: int
    count: int
    total: int
    excluded: int
    gk: float

    @property
    def empirical(self) -> float:
        return self.count / self.total if self.total else 0.0

    @property
    def empirical_fraction(self) -> Fraction:
        return Fraction(self.count, self.total)

    @property
    def abs_err(self) -> float:
        return abs(self.empirical - self.gk)


@dataclass
class GKReport:
    r: int
    p: int
    R: int
    rows: list[GKRow]
    excluded_square_delta: int
    seed: Optional[int] = None


def _sample_qs(R: int, sample: Optional[int], seed: Optional[int]) -> np.ndarray:
    if sample is None:
        return np.arange(1, R + 1, dtype=np.int64)
    rng = np.random.default_rng(seed)
    return rng.integers(1, R + 1, size=sample, dtype=np.int64)


@dataclass(frozen=True)
class CylinderFrequency:
    constraint: CylinderConstraint
    count: int
    total: int
    excluded: int

    @property
    def empirical(self) -> Fraction:
        return Fraction(self.count, self.total) if self.total else Fraction(0)


def empirical_P(r: int, p: int, R: int, c: CylinderConstraint) -> CylinderFrequency:
    """Share of ``q in 1..R`` (positive non-square discriminant) with ``x_+(q)`` in the cylinder.

    ``q`` with a square or nonpositive discriminant are left out of the
    total and counted in ``excluded``.
    """
    if r < 1 or R < 1:
        raise ValueError("r and R must be positive")
    heads, valid = quotient_heads(r, p, np.arange(1, R + 1), c.depth)
    hit = valid.copy()
    for s, A in c.pairs:
        hit &= heads[:, s] == A
    total = int(valid.sum())
    return CylinderFrequency(c, int(hit.sum()), total, R - total)


def gk_report(
    r: int,
    p: int,
    R: int,
    positions: Iterable[int],
    values: Iterable[int],
    sample: Optional[int] = None,
    seed: Optional[int] = None,
) -> GKReport:
    """Single-quotient frequencies ``P(a_s = A)`` for every ``(s, A)`` cell.

    With ``sample`` set, ``q`` is drawn uniformly (with replacement) from
    ``1..R`` using ``seed`` instead of enumerating every value.
    """
    if r < 1 or R < 1:
        raise ValueError("r and R must be positive")
    positions = sorted(set(positions))
    values = sorted(set(values))
    if not positions or positions[0] < 1 or not values or values[0] < 1:
        raise ValueError("positions and values must be nonempty and positive")
    qs = _sample_qs(R, sample, seed)
    rows = []
    excluded = 0
    total = 0
    chunk = 1 << 18
    counts = {(s, A): 0 for s in positions for A in values}
    for start in range(0, len(qs), chunk):
        heads, valid = quotient_heads(r, p, qs[start : start + chunk], positions[-1])
        total += int(valid.sum())
        excluded += int((~valid).sum())
        for s in positions:
            col = heads[valid, s]
            binc = np.bincount(col[col <= values[-1]], minlength=values[-1] + 1)
            for A in values:
                counts[(s, A)] += int(binc[A])
    for s in positions:
        for A in values:
            rows.append(GKRow(s, A, counts[(s, A)], total, excluded, gk_limit(A)))
    return GKReport(r, p, R, rows, excluded, seed if sample is not None else None)


def period_frequency(r: int, p: int, R: int, A: int) -> float:
    """Mean over valid ``q <= R`` of the share of period entries equal to ``A``.

    Diagnostic for the period-uniform statistic; nothing is asserted about it.
    """
    from .core import expand

    shares = []
    for q in range(1, R + 1):
        d = p * p + 4 * r * q
        if d <= 0 or is_square(d):
            continue
        per = expand(make_surd(r, p, q)).period
        shares.append(per.count(A) / len(per))
    return sum(shares) / len(shares) if shares else 0.0


# --- Riemann-sum devices for sqrt(q) -----------------------------------------


def block_count(n: int, c: CylinderConstraint) -> int:
    """Number of ``q`` in ``n^2+1 .. n^2+2n`` with ``sqrt(q)`` in the cylinder."""
    if n < 1:
        raise ValueError("n must be positive")
    depth = c.depth
    count = 0
    for i in range(1, 2 * n + 1):
        head = expand_head(make_surd(1, 0, n * n + i), depth + 1)
        if all(head[s] == A for s, A in c.pairs):
            count += 1
    return count


def lemma1_P(n: int, c: CylinderConstraint) -> Fraction:
    return Fraction(block_count(n, c), 2 * n)


def riemann_partition_check(n: int) -> bool:
    """``(i-1)/2n < sqrt(n^2+i) - n < i/2n`` for ``i = 1..2n``, squared out exactly."""
    if n < 1:
        raise ValueError("n must be positive")
    for i in range(1, 2 * n + 1):
        target = 4 * n * n * (n * n + i)  # (2n sqrt(n^2+i))^2
        if not (2 * n * n + i - 1) ** 2 < target < (2 * n * n + i) ** 2:
            return False
    return True


@dataclass(frozen=True)
class AggregationCheck:
    R: int
    count: int  # q in 1..R^2+2R with sqrt(q) in the cylinder
    P_all: Fraction  # count over every q, squares scoring zero
    P_nonsquare: Fraction  # count over non-square q only
    weighted_all: Fraction  # sum_n 2n/(R^2+2R) * P'_n
    weighted_nonsquare: Fraction  # sum_n 2n/(R^2+R) * P'_n

    @property
    def holds(self) -> bool:
        return self.P_all == self.weighted_all and self.P_nonsquare == self.weighted_nonsquare


def aggregation_check(R: int, c: CylinderConstraint) -> AggregationCheck:
    """Frequency over ``q <= R^2+2R`` against the block-weighted frequencies."""
    N = R * R + 2 * R
    heads, valid = quotient_heads(1, 0, np.arange(1, N + 1), c.depth)
    hit = valid.copy()
    for s, A in c.pairs:
        hit &= heads[:, s] == A
    count = int(hit.sum())
    blocks = [lemma1_P(n, c) for n in range(1, R + 1)]
    w_all = sum((Fraction(2 * n, N) * P for n, P in zip(range(1, R + 1), blocks)), Fraction(0))
    w_ns = sum((Fraction(2 * n, R * R + R) * P for n, P in zip(range(1, R + 1), blocks)), Fraction(0))
    return AggregationCheck(R, count, Fraction(count, N), Fraction(count, int(valid.sum())), w_all, w_ns)


# --- period statistics ---------------------------------------------------------


@dataclass(frozen=True)
class PeriodStats:
    Q: int
    t0_sum: int
    max_t0: int
    argmax: int

    @property
    def avg(self) -> float:
        return self.t0_sum / self.Q

    @property
    def fit_const(self) -> float:
        return self.avg / math.sqrt(self.Q)


def period_stats(Q_max: int, t0: Optional[np.ndarray] = None) -> PeriodStats:
    """Average of ``T0(q)`` over ``q = 1..Q_max`` with squares counted as 0."""
    if Q_max < 2:
        raise ValueError("Q_max must be at least 2")
    if t0 is None:
        from .arith import t0_table

        t0 = t0_table(Q_max)
    window = t0[1 : Q_max + 1]
    k = int(np.argmax(window))
    return PeriodStats(Q_max, int(window.sum()), int(window[k]), k + 1)


def checkpoints(Q_max: int) -> list[int]:
    """Powers of ten below ``Q_max`` followed by ``Q_max`` itself."""
    out = []
    x = 10
    while x < Q_max:
        out.append(x)
        x *= 10
    out.append(Q_max)
    return out


def period_stats_table(Q_max: int, t0: Optional[np.ndarray] = None) -> list[PeriodStats]:
    if t0 is None:
        from .arith import t0_table

        t0 = t0_table(Q_max)
    return [period_stats(Q, t0) for Q in checkpoints(Q_max)]


@dataclass(frozen=True)
class ElementAverageRow:
    r: int
    p: int
    q: int
    delta: int
    T: int
    period_sum: int

    @property
    def mean(self) -> float:
        return self.period_sum / self.T


def period_element_average(triples: Iterable[tuple[int, int, int]]) -> tuple[list[ElementAverageRow], float, float]:
    """Mean partial quotient over one period for each triple, plus the
    least-squares slope and intercept of mean against ``ln(delta)``."""
    from .core import expand

    rows = []
    for r, p, q in triples:
        d = p * p + 4 * r * q
        if d <= 0 or is_square(d):
            continue
        per = expand(make_surd(r, p, q)).period
        rows.append(ElementAverageRow(r, p, q, d, len(per), sum(per)))
    if len(rows) < 2:
        return rows, float("nan"), float("nan")
    x = np.log([row.delta for row in rows])
    y = np.array([row.mean for row in rows])
    slope, intercept = np.polyfit(x, y, 1)
    return rows, float(slope), float(intercept)
