import pytest
from hypothesis import assume, given, settings, strategies as st

from periodic_cf.arith import count_river_triples, f_bound
from periodic_cf.core import CFExpansion, expand, expand_sqrt, is_square, make_surd
from periodic_cf.errors import InvariantViolation
from periodic_cf.river import (
    ABOVE,
    BELOW,
    RiverState,
    RiverTrace,
    check_theorem2,
    detect_period,
    init_river,
    oracle_mismatch,
    palindrome_check,
    palindromic_rotation,
    quotients_from_trace,
    river_step,
    river_stream,
    river_triples,
    run_lengths,
    walk,
)

SQRT2_ROWS = [(1, -2, 0), (1, -1, 2), (2, -1, 0), (1, -1, -2), (1, -2, 0), (1, -1, 2)]


def test_sqrt2_states_and_segments():
    t = walk(1, 0, 2, 5)
    assert [s.key for s in t.states] == SQRT2_ROWS
    assert t.sides == [BELOW, ABOVE, ABOVE, BELOW, BELOW]
    assert t.segments() == [0, 1, 1, 2, 2]


@pytest.mark.parametrize("state, nxt", list(zip(SQRT2_ROWS, SQRT2_ROWS[1:])))
def test_step_rule_against_sqrt2_rows(state, nxt):
    assert river_step(RiverState(*state)).key == nxt


def test_step_counter_and_discriminant():
    s = RiverState(1, -2, 0)
    for _ in range(10):
        s2 = river_step(s)
        assert s2.n == s.n + 1 and s2.delta == 8
        s = s2


def test_zero_region_value_is_loud():
    # a + b + h == 0 only happens for a square discriminant
    with pytest.raises(InvariantViolation):
        river_step(RiverState(1, -1, 0))


@pytest.mark.parametrize("args, triple", [((1, 0, 2), (1, -2, 0)), ((1, 1, 1), (1, -1, 1))])
def test_init_river_examples(args, triple):
    state, trace = init_river(*args)
    assert state.key == triple and trace.l0 == 0 and trace.n0 == 0
    assert state.delta == args[1] ** 2 + 4 * args[0] * args[2]


def test_detect_period_sqrt2():
    rep = detect_period(1, 0, 2)
    assert rep.period_sum == 4
    assert rep.quotients == (2, 2)
    assert rep.minimal == (2,) and rep.T == 1
    assert rep.cycle_length == 2 and rep.cycle_parity == "even"


def test_detect_period_sqrt3_and_golden():
    assert detect_period(1, 0, 3).minimal == (1, 2)
    g = detect_period(1, 1, 1)
    assert g.minimal == (1,) and set(g.quotients) == {1}


def test_run_lengths():
    assert run_lengths([BELOW, ABOVE, ABOVE, BELOW, BELOW]) == [1, 2, 2]
    assert run_lengths([ABOVE] * 4) == [4]
    assert run_lengths([ABOVE, BELOW] * 3) == [1] * 6


def test_quotients_from_sqrt2_trace():
    assert quotients_from_trace(walk(1, 0, 2, 9))[:4] == [1, 2, 2, 2]


@pytest.mark.parametrize("args, psum, bound, eff", [((1, 0, 2), 2, 4, 2), ((1, 0, 3), 3, 6, 6), ((1, 1, 1), 1, 2, 1)])
def test_period_sum_bound_examples(args, psum, bound, eff):
    rec = check_theorem2(*args)
    assert (rec.period_sum, rec.bound, rec.effective_bound) == (psum, bound, eff)
    assert rec.ok


def test_palindrome_examples():
    rep = palindrome_check(expand_sqrt(13), 1, 0)
    assert rep.body_palindrome and rep.palindromic
    assert palindromic_rotation((2,)) == 0
    assert palindromic_rotation((1, 2)) == 0  # ...1,2,1,2... is symmetric about each 2
    rep = palindrome_check(CFExpansion((0,), (1, 2, 3)), 2, 1)
    assert not rep.asserted and not rep.palindromic


def test_palindrome_assertion_fires():
    with pytest.raises(InvariantViolation):
        palindrome_check(CFExpansion((0,), (1, 2, 3)), 1, 0)


def test_negative_root_shift():
    # x_+ < 0: r=1, p=5, q=-1 gives (-5 + sqrt 21)/2 in (-1, 0)
    stream = river_stream(1, 5, -1)
    cf = expand(make_surd(1, 5, -1))
    assert [next(stream) for _ in range(12)] == cf.head(12)


def test_two_positive_roots_pre_river_phase():
    # rq < 0 with both roots positive: the walk needs a pre-river phase
    _, trace = init_river(2, -5, -1)
    assert trace.n0 > 0
    assert oracle_mismatch(2, -5, -1) is None


# --- properties ----------------------------------------------------------------

triples = st.tuples(st.integers(1, 6), st.integers(-12, 12), st.integers(-60, 2000))


def valid(r, p, q):
    d = p * p + 4 * r * q
    return d > 0 and not is_square(d)


@settings(max_examples=300, deadline=None)
@given(triples)
def test_oracle_equivalence(t):
    assume(valid(*t))
    assert oracle_mismatch(*t) is None


@settings(max_examples=300, deadline=None)
@given(triples)
def test_cycle_identities(t):
    assume(valid(*t))
    rep = detect_period(*t)
    cf = expand(make_surd(*t))
    assert sum(rep.quotients) == rep.n1 - rep.n0
    assert rep.cycle_length % 2 == 0
    assert rep.cycle_length == (2 * cf.T if cf.T % 2 else cf.T)
    assert rep.minimal in {cf.period[k:] + cf.period[:k] for k in range(cf.T)}


@settings(max_examples=300, deadline=None)
@given(triples)
def test_period_sum_bound_property(t):
    assume(valid(*t))
    assert check_theorem2(*t).ok


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 3000))
def test_triple_count_equals_bound(delta):
    assume(delta % 4 in (0, 1) and not is_square(delta))
    triples = river_triples(delta)
    assert len(triples) == count_river_triples(delta) == f_bound(delta)
    assert all(h * h - 4 * a * b == delta for a, b, h in triples)
    # sign flip of h preserves validity
    keys = set(triples)
    assert all((a, b, -h) in keys for a, b, h in triples)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 6), st.integers(-12, 12), st.integers(-60, 2000))
def test_mirror_symmetry_when_p0_or_r1(r, p, q):
    assume(valid(r, p, q) and (p == 0 or r == 1))
    assert palindrome_check(expand(make_surd(r, p, q)), r, p).palindromic


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 20000))
def test_sqrt_palindrome(q):
    assume(not is_square(q))
    rep = palindrome_check(expand_sqrt(q), 1, 0)
    assert rep.body_palindrome and rep.palindromic


def test_trace_offset_semantics():
    t = RiverTrace(1, 1, 1, sides=[ABOVE, BELOW])
    assert t.offset == 1 and t.segment(1) == 1 and t.segment(2) == 2
