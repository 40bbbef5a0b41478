"""Outward-rounded interval arithmetic and the certified zero-set solver."""

from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from niolab.interval import (
    DEFAULT_SWEEP_BRACKET,
    BracketError,
    Interval,
    IntervalDomainError,
    NewtonError,
    ZeroSweepError,
    interval_newton_root,
    lambda_derivative,
    lambda_large_noise,
    zero_set_csv_rows,
    zero_set_sweep,
)

mpmath.mp.dps = 50

# log(2) + log(4) + 1 - 4 evaluated at 50 digits, rounded to nearest float
LIMIT_2_4 = -0.9205584583201643

finite = st.floats(
    min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False
)


def make_interval(lo: float, hi: float) -> Interval:
    if lo > hi:
        lo, hi = hi, lo
    return Interval(lo, hi)


intervals = st.tuples(finite, finite).map(lambda t: make_interval(*t))
positive_intervals = st.tuples(
    st.floats(min_value=1e-6, max_value=1e6),
    st.floats(min_value=1e-6, max_value=1e6),
).map(lambda t: make_interval(*t))


class TestIntervalBasics:
    def test_construction_and_accessors(self):
        box = Interval(1.0, 2.0)
        assert box.lo == 1.0 and box.hi == 2.0
        assert box.mid == 1.5
        assert box.width == 1.0
        assert box.contains(1.5)
        assert not box.contains(2.5)

    def test_invalid_bounds_rejected(self):
        with pytest.raises(ValueError):
            Interval(2.0, 1.0)
        with pytest.raises(ValueError):
            Interval(float("nan"), 1.0)
        with pytest.raises(ValueError):
            Interval(0.0, float("inf"))

    def test_point_interval(self):
        p = Interval.point(3.5)
        assert p.lo == p.hi == 3.5
        assert p.width == 0.0

    def test_sign_predicates(self):
        assert Interval(0.5, 1.0).strictly_positive
        assert Interval(-2.0, -0.5).strictly_negative
        straddle = Interval(-1.0, 1.0)
        assert not straddle.strictly_positive
        assert not straddle.strictly_negative
        assert not Interval(0.0, 1.0).strictly_positive

    def test_intersect(self):
        assert Interval(0.0, 2.0).intersect(Interval(1.0, 3.0)) == Interval(1.0, 2.0)
        assert Interval(0.0, 1.0).intersect(Interval(2.0, 3.0)) is None
        # touching endpoints intersect in a point
        assert Interval(0.0, 1.0).intersect(Interval(1.0, 2.0)) == Interval.point(1.0)

    def test_mid_stays_inside_even_for_huge_bounds(self):
        box = Interval(-1.7e308, 1.7e308)
        assert box.contains(box.mid)


def mp_interval_op(op, x: Interval, y: Interval):
    """Exact 50-digit evaluation of op over interval corners (monotone ops)."""
    xs = [mpmath.mpf(x.lo), mpmath.mpf(x.hi)]
    ys = [mpmath.mpf(y.lo), mpmath.mpf(y.hi)]
    vals = [op(a, b) for a in xs for b in ys]
    return min(vals), max(vals)


class TestArithmeticEnclosure:
    @given(intervals, intervals, finite, finite)
    @settings(max_examples=300)
    def test_add_sub_mul_enclose_real_arithmetic(self, x, y, tx, ty):
        # pick representative points inside each operand
        px = min(max(tx, x.lo), x.hi)
        py = min(max(ty, y.lo), y.hi)
        assert (x + y).contains(px + py)
        assert (x - y).contains(px - py)
        prod = x * y
        exact = mpmath.mpf(px) * mpmath.mpf(py)
        assert mpmath.mpf(prod.lo) <= exact <= mpmath.mpf(prod.hi)

    @given(intervals, positive_intervals, finite, st.floats(min_value=1e-6, max_value=1e6))
    @settings(max_examples=300)
    def test_division_encloses(self, x, y, tx, ty):
        px = min(max(tx, x.lo), x.hi)
        py = min(max(ty, y.lo), y.hi)
        quot = x / y
        exact = mpmath.mpf(px) / mpmath.mpf(py)
        assert mpmath.mpf(quot.lo) <= exact <= mpmath.mpf(quot.hi)

    @given(positive_intervals, st.floats(min_value=1e-6, max_value=1e6))
    @settings(max_examples=300)
    def test_log_encloses(self, x, tx):
        px = min(max(tx, x.lo), x.hi)
        box = x.log()
        exact = mpmath.log(mpmath.mpf(px))
        assert mpmath.mpf(box.lo) <= exact <= mpmath.mpf(box.hi)

    def test_division_by_interval_containing_zero(self):
        with pytest.raises(IntervalDomainError):
            Interval(1.0, 2.0) / Interval(-1.0, 1.0)
        with pytest.raises(IntervalDomainError):
            Interval(1.0, 2.0) / Interval(0.0, 1.0)

    def test_log_of_nonpositive_interval(self):
        with pytest.raises(IntervalDomainError):
            Interval(-1.0, 2.0).log()
        with pytest.raises(IntervalDomainError):
            Interval(0.0, 2.0).log()

    @given(intervals, intervals)
    @settings(max_examples=200)
    def test_inclusion_monotonicity_of_addition(self, x, y):
        # shrinking an operand can only shrink the result
        sub = Interval(x.mid, x.mid)
        full = x + y
        small = sub + y
        assert full.lo <= small.lo and small.hi <= full.hi


class TestLargeNoiseFormula:
    def test_zero_at_unit_parameters(self):
        box = lambda_large_noise(Interval.point(1.0), Interval.point(1.0))
        assert box.contains(0.0)
        assert box.width <= 4.0 * np.spacing(1.0)

    def test_reference_value_at_default_parameters(self):
        box = lambda_large_noise(Interval.point(2.0), Interval.point(4.0))
        assert box.contains(LIMIT_2_4)
        # the true value to 21 digits also lies inside
        exact = mpmath.log(mpmath.mpf(2)) + mpmath.log(mpmath.mpf(4)) + 1 - 4
        assert mpmath.mpf(box.lo) <= exact <= mpmath.mpf(box.hi)
        assert box.width < 1e-14

    def test_sign_change_across_root_bracket(self):
        lo = lambda_large_noise(Interval.point(2.0), Interval.point(2.67834))
        hi = lambda_large_noise(Interval.point(2.0), Interval.point(2.67835))
        assert lo.strictly_positive
        assert hi.strictly_negative

    def test_derivative_formula(self):
        assert lambda_derivative(Interval.point(2.0)).contains(-0.5)
        assert lambda_derivative(Interval.point(1.0)).contains(0.0)
        d = lambda_derivative(Interval(2.0, 4.0))
        assert d.strictly_negative

    def test_soundness_against_high_precision_samples(self):
        rng = np.random.default_rng(717)
        for _ in range(2000):
            a = float(rng.uniform(1.0001, 2.0))
            s = float(rng.uniform(1.0, 6.0))
            box = lambda_large_noise(Interval.point(a), Interval.point(s))
            exact = mpmath.log(mpmath.mpf(a)) + mpmath.log(mpmath.mpf(s)) + 1 - mpmath.mpf(s)
            assert mpmath.mpf(box.lo) <= exact <= mpmath.mpf(box.hi)
            assert box.width < 1e-13


class TestNewtonSolver:
    S_STAR_2 = 2.678346990016660653  # 50-digit root of log 2 + log s + 1 - s

    def test_certifies_root_at_default_slope(self):
        enc = interval_newton_root(Interval.point(2.0), Interval(2.0, 4.0))
        assert enc.certified
        assert enc.s_star.contains(self.S_STAR_2)
        assert 2.0 <= enc.s_star.lo <= enc.s_star.hi <= 4.0
        assert enc.s_star.width < 1e-5

    def test_tight_tolerance_reaches_near_machine_width(self):
        enc = interval_newton_root(
            Interval.point(2.0), Interval(2.0, 4.0), width_tol=1e-13
        )
        assert enc.certified
        assert enc.s_star.contains(self.S_STAR_2)
        assert enc.s_star.width < 1e-13

    def test_width_history_contracts_quadratically(self):
        enc = interval_newton_root(Interval.point(2.0), Interval(2.0, 4.0))
        widths = enc.width_history
        assert widths[0] == 2.0
        assert all(w2 <= w1 for w1, w2 in zip(widths, widths[1:]))
        for w1, w2 in zip(widths, widths[1:]):
            if w1 < 0.1 and w2 > 1e-14:
                assert w2 <= 1.0 * w1 * w1

    def test_rejects_bracket_without_sign_change(self):
        with pytest.raises(BracketError):
            interval_newton_root(Interval.point(1.0), Interval(0.5, 1.5))

    def test_rejects_invalid_tolerance(self):
        with pytest.raises(ValueError):
            interval_newton_root(Interval.point(2.0), Interval(2.0, 4.0), width_tol=0.0)

    def test_interval_parameter_widens_enclosure(self):
        # a thick parameter interval blurs the root location by roughly
        # width(a)/(a |lambda'|); request only a tolerance above that blur
        thin = interval_newton_root(Interval.point(2.0), Interval(2.0, 4.0))
        thick = interval_newton_root(
            Interval(1.999, 2.001), Interval(2.0, 4.0), width_tol=0.01
        )
        assert thick.s_star.width >= thin.s_star.width
        assert thick.s_star.contains(self.S_STAR_2)
        assert thick.certified

    def test_thick_parameter_below_resolution_raises(self):
        with pytest.raises(NewtonError):
            interval_newton_root(
                Interval(1.999, 2.001), Interval(2.0, 4.0), width_tol=1e-6
            )

    def test_root_for_smallest_sweep_parameter(self):
        enc = interval_newton_root(Interval.point(1.00781), DEFAULT_SWEEP_BRACKET)
        assert enc.certified
        assert enc.s_star.contains(1.1299764640658622)


class TestZeroSetSweep:
    def test_single_point_matches_direct_solve(self):
        sweep = zero_set_sweep(2.0, 2.0, 1)
        direct = interval_newton_root(Interval.point(2.0), DEFAULT_SWEEP_BRACKET)
        assert len(sweep) == 1
        assert sweep[0].s_star.lo == direct.s_star.lo
        assert sweep[0].s_star.hi == direct.s_star.hi

    def test_sweep_certified_monotone_and_sign_verified(self):
        points = zero_set_sweep(1.01, 2.0, 33)
        assert len(points) == 33
        mids = [p.s_star.mid for p in points]
        for p in points:
            assert p.certified
            assert p.s_star.width <= 1e-4
        assert all(m1 < m2 for m1, m2 in zip(mids, mids[1:]))
        # rigorous sign verification on both sides of each certified root
        for a_val, p in zip(np.linspace(1.01, 2.0, 33), points):
            a_box = Interval.point(float(a_val))
            below = lambda_large_noise(a_box, Interval.point(p.s_star.lo - 0.01))
            above = lambda_large_noise(a_box, Interval.point(p.s_star.hi + 0.01))
            assert below.strictly_positive
            assert above.strictly_negative

    def test_precondition_errors(self):
        with pytest.raises(ValueError):
            zero_set_sweep(0.9, 2.0, 4)
        with pytest.raises(ValueError):
            zero_set_sweep(1.5, 1.2, 4)
        with pytest.raises(ValueError):
            zero_set_sweep(1.5, 2.5, 4)
        with pytest.raises(ValueError):
            zero_set_sweep(1.5, 2.0, 0)

    def test_csv_rows_schema(self):
        points = zero_set_sweep(1.5, 2.0, 3)
        rows = zero_set_csv_rows(points)
        assert len(rows) == 3
        assert [r[0] for r in rows] == pytest.approx([1.5, 1.75, 2.0])
        for (a_mid, s_lo, s_hi, steps, certified), p in zip(rows, points):
            assert s_lo == p.s_star.lo and s_hi == p.s_star.hi
            assert steps == p.newton_steps
            assert certified is p.certified
