import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from periodic_cf.core import CFExpansion, expand, expand_head, expand_sqrt, is_square, make_surd
from periodic_cf.errors import NodeBudgetExceeded
from periodic_cf.stats import (
    CylinderConstraint,
    aggregation_check,
    checkpoints,
    cylinder_measure,
    empirical_P,
    gk_limit,
    gk_report,
    indicator,
    block_count,
    lemma1_P,
    period_element_average,
    period_stats,
    period_stats_table,
    prefix_measure,
    quotient_heads,
    riemann_partition_check,
)

C = CylinderConstraint.of


# --- constraint and indicator ----------------------------------------------------


@pytest.mark.parametrize("pairs", [((1, 1), (1, 2)), ((0, 1),), ((1, 0),)])
def test_constraint_invariants(pairs):
    with pytest.raises(ValueError):
        CylinderConstraint(pairs)


def test_constraint_empty():
    with pytest.raises(ValueError):
        CylinderConstraint(())


def test_indicator_examples():
    sqrt2 = expand_sqrt(2)
    assert indicator(sqrt2, C((3, 2)))
    assert not indicator(sqrt2, C((1, 1)))
    assert indicator(CFExpansion((0,), (1,)), C((1, 1), (4, 1)))


# --- limits and exact measures -----------------------------------------------------


def test_gk_limit_values():
    assert gk_limit(1) == pytest.approx(math.log(4 / 3) / math.log(2), abs=1e-15)
    assert round(gk_limit(1), 6) == 0.415037
    assert round(gk_limit(2), 6) == 0.169925


def test_gk_limit_partial_sum():
    total = sum(gk_limit(A) for A in range(1, 1001))
    # telescoping: the tail is log2((N+2)/(N+1))
    assert 1 - total == pytest.approx(math.log2(1002 / 1001), rel=1e-9)
    assert 0 < 1 - total < 1.5e-3


def test_prefix_measures():
    assert cylinder_measure(C((1, 1))).exact == Fraction(1, 2)
    assert cylinder_measure(C((1, 2))).exact == Fraction(1, 6)
    assert cylinder_measure(C((1, 2))).width == 0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 30), min_size=1, max_size=6))
def test_prefix_measure_is_interval_length(digits):
    # endpoints [0; digits] and [0; digits[:-1], digits[-1] + 1] bound the cylinder
    def value(ds):
        x = Fraction(0)
        for d in reversed(ds):
            x = 1 / (d + x)
        return x

    a = value(digits)
    b = value(digits[:-1] + [digits[-1] + 1])
    assert prefix_measure(digits) == abs(a - b)
    # the midpoint expands with the given digits
    mid = (a + b) / 2
    x, got = mid, []
    for _ in digits:
        x = 1 / x
        got.append(math.floor(x))
        x -= math.floor(x)
    assert got == digits


def test_prefix_measures_telescope():
    total = sum(prefix_measure([A]) for A in range(1, 1001))
    assert total == 1 - Fraction(1, 1001)
    depth2 = sum(prefix_measure([3, A]) for A in range(1, 1001))
    assert prefix_measure([3]) - depth2 <= Fraction(1, 9 * 1000)


def test_second_position_closed_form():
    # a_2 = 1 means x = 1/(B + y) with y in (1/2, 1): sum of 1/(B+1/2) - 1/(B+1) = 2 ln 2 - 1
    m = cylinder_measure(C((2, 1)))
    assert m.lo <= 2 * math.log(2) - 1 <= m.hi
    assert m.width <= 1e-6


@pytest.mark.parametrize("pairs", [((2, 3),), ((3, 1),), ((3, 2),), ((4, 1),), ((3, 2), (5, 1))])
def test_total_measure_over_first_digit(pairs):
    """mu(S) = sum over B of mu(S with a_1 = B) for a pattern not fixing a_1."""
    whole = cylinder_measure(CylinderConstraint(pairs), tol=1e-7)
    N = 60
    lo = hi = 0.0
    for B in range(1, N + 1):
        part = cylinder_measure(CylinderConstraint(((1, B),) + pairs), tol=1e-9)
        lo += part.lo
        hi += part.hi
    tail = 1.0 / (N + 1)  # measure of a_1 > N
    assert lo <= whole.hi and whole.lo <= hi + tail


def test_third_position_brute_force_bracket():
    """Enumerate (a_1, a_2) <= N exactly; the unenumerated mass bounds the rest."""
    N = 2000
    b1 = np.arange(1, N + 1, dtype=np.float64)[:, None]
    b2 = np.arange(1, N + 1, dtype=np.float64)[None, :]
    # convergent denominators of [0; b1, b2] and [0; b1]
    q1, q0 = b1, 1.0
    q2 = b2 * q1 + q0
    for A in (1, 2, 5):
        # a_3 = A fixes the remainder z to (1/(A+1), 1/A); density 1/(q2 + q1 z)^2
        za, zb = 1 / (A + 1), 1 / A
        part = (zb - za) / ((q2 + q1 * za) * (q2 + q1 * zb))
        lo = float(part.sum())
        covered = float((1 / (q2 * (q2 + q1))).sum())
        hi = lo + (1 - covered)
        m = cylinder_measure(C((3, A)))
        assert lo - 1e-9 <= m.lo and m.hi <= hi + 1e-9
        assert hi - lo < 2e-3


def test_depth_approaches_gk():
    # Lebesgue start converges geometrically to the Gauss-Kuz'min law
    gaps = [abs(cylinder_measure(C((s, 1))).value - gk_limit(1)) for s in (1, 2, 3, 4, 5)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 2e-3


def test_node_budget_error():
    with pytest.raises(NodeBudgetExceeded):
        cylinder_measure(C((6, 3)), tol=1e-9, node_budget=50)


def test_tolerance_must_be_positive():
    with pytest.raises(ValueError):
        cylinder_measure(C((2, 1)), tol=0)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 4), st.integers(1, 6), st.integers(1, 6))
def test_scattered_subset_monotone(s, A, B):
    outer = cylinder_measure(C((s, A)))
    inner = cylinder_measure(C((1, B), (s + 1, A)))
    assert inner.lo <= outer.hi


# --- empirical frequencies ------------------------------------------------------------


def test_empirical_example():
    row = empirical_P(1, 0, 3, C((1, 2)))
    assert (row.count, row.total, row.excluded) == (1, 2, 1)
    assert row.empirical == Fraction(1, 2)


def test_empirical_huge_quotient():
    assert empirical_P(1, 0, 1000, C((2, 10**6))).empirical == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(-9, 9), st.integers(1, 400))
def test_exclusion_accounting(r, p, R):
    row = empirical_P(r, p, R, C((1, 1)))
    assert row.total + row.excluded == R
    assert 0 <= row.empirical <= 1


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(-9, 9), st.integers(-100, 5000))
def test_vector_heads_match_recurrence(r, p, q):
    heads, valid = quotient_heads(r, p, np.array([q]), 8)
    d = p * p + 4 * r * q
    assert bool(valid[0]) == (d > 0 and not is_square(d))
    if valid[0]:
        assert list(heads[0]) == expand_head(make_surd(r, p, q), 9)


def test_empirical_matches_indicator_enumeration():
    r, p, R = 2, 1, 600
    c = C((2, 1), (3, 2))
    count = total = 0
    for q in range(1, R + 1):
        d = p * p + 4 * r * q
        if d <= 0 or is_square(d):
            continue
        total += 1
        count += indicator(expand(make_surd(r, p, q)), c)
    row = empirical_P(r, p, R, c)
    assert (row.count, row.total) == (count, total)


def test_gk_report_rows_and_exclusions():
    rep = gk_report(1, 0, 10_000, [1, 2], range(1, 4))
    assert len(rep.rows) == 6
    assert rep.excluded_square_delta == 100
    assert all(row.total + rep.excluded_square_delta == 10_000 for row in rep.rows)
    single = empirical_P(1, 0, 10_000, C((2, 3)))
    row = next(x for x in rep.rows if (x.s, x.A) == (2, 3))
    assert row.count == single.count


def test_seeded_sampling_is_deterministic():
    a = gk_report(1, 0, 10**8, [3], [1], sample=20_000, seed=11)
    b = gk_report(1, 0, 10**8, [3], [1], sample=20_000, seed=11)
    assert a.rows == b.rows and a.seed == 11
    assert abs(a.rows[0].empirical - gk_limit(1)) < 0.05


# --- Riemann-sum devices --------------------------------------------------------------


def test_lemma1_example():
    assert lemma1_P(1, C((1, 2))) == Fraction(1, 2)


@pytest.mark.parametrize("n", [1, 7, 40])
def test_block_count_integral(n):
    c = C((1, 3))
    assert lemma1_P(n, c) * 2 * n == block_count(n, c)


def test_lemma1_large_n_near_measure():
    # sqrt(n^2+i) - n is close to i/(2n), so a_1 = 1 for about half the block
    assert abs(float(lemma1_P(3000, C((1, 1)))) - 0.5) < 0.01


def test_riemann_partition():
    assert riemann_partition_check(1)
    assert riemann_partition_check(1000)
    with pytest.raises(ValueError):
        riemann_partition_check(0)


@pytest.mark.parametrize("R", [1, 2, 5, 12])
@pytest.mark.parametrize("pairs", [((1, 1),), ((2, 1),), ((1, 2), (3, 1))])
def test_aggregation_identity(R, pairs):
    assert aggregation_check(R, CylinderConstraint(pairs)).holds


# --- period statistics -----------------------------------------------------------------


def test_period_stats_examples():
    ps = period_stats(4)
    assert (ps.t0_sum, ps.avg) == (3, 0.75)
    ps = period_stats(10)
    assert (ps.t0_sum, ps.avg, ps.max_t0, ps.argmax) == (13, 1.3, 4, 7)
    assert ps.fit_const == pytest.approx(1.3 / math.sqrt(10))


def test_period_checkpoints_monotone():
    table = period_stats_table(10_000)
    assert [ps.Q for ps in table] == [10, 100, 1000, 10_000]
    assert checkpoints(10_000) == [10, 100, 1000, 10_000]
    sums = [ps.t0_sum for ps in table]
    assert sums == sorted(sums)
    assert all(a.avg < b.avg for a, b in zip(table, table[1:]))


def test_period_element_average():
    rows, slope, intercept = period_element_average([(1, 0, 2), (1, 0, 13), (1, 0, 4), (1, 0, 3)])
    assert [r.q for r in rows] == [2, 13, 3]  # the square is skipped
    assert rows[0].mean == 2 and rows[1].mean == 2
    assert math.isfinite(slope) and math.isfinite(intercept)
