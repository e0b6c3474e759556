"""Exact polynomial / rational-function arithmetic."""

import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from barydd.exactmath import (
    DenominatorVanishes,
    DivisionByZeroFunction,
    Poly,
    RatFun,
    rf_combine,
    rf_equal,
    rf_eval,
)


def P2(terms):
    return Poly(3, terms)  # three vars: x0, x1, x2


x0 = Poly.variable(3, 0)
x1 = Poly.variable(3, 1)
x2 = Poly.variable(3, 2)


class TestPoly:
    def test_add_mul(self):
        p = (x1 + x2) * (x1 - x2)
        assert p == x1 * x1 - x2 * x2

    def test_eval(self):
        p = x1 * x1 + x2.scale(3)
        assert p.eval([F(0), F(2), F(5)]) == 4 + 15

    def test_leading_graded_lex(self):
        p = x1 * x2 + x1  # degree 2 term leads
        assert p.leading()[0] == (0, 1, 1)
        q = x1 * x1 + x1 * x2  # same degree: lex on exponents
        assert q.leading()[0] == (0, 2, 0)

    def test_exact_div(self):
        p = (x1 + x2) * (x1 - x2.scale(2)) * (x0 + x1)
        assert p.exact_div(x1 + x2) == (x1 - x2.scale(2)) * (x0 + x1)
        assert p.exact_div(x1 + x2.scale(5)) is None

    def test_subs_one(self):
        p = x0 * x1 + x0 * x0
        assert p.subs_one(0) == x1 + Poly.const(3, 1)

    def test_json_roundtrip(self):
        p = x1 * x2.scale(F(-7, 3)) + Poly.const(3, F(1, 2))
        assert Poly.from_json(p.to_json(), 3) == p


class TestRatFunGoldens:
    def test_combine_identity(self):
        f = RatFun.variable(3, 1)
        zero = RatFun.const(3, 0)
        assert rf_equal(rf_combine(f, zero, "add"), f)

    def test_combine_reciprocal(self):
        f = RatFun(x1, x2)
        g = RatFun(x2, x1)
        assert rf_equal(rf_combine(f, g, "mul"), RatFun.const(3, 1))

    def test_divide_by_zero(self):
        f = RatFun.variable(3, 1)
        with pytest.raises(DivisionByZeroFunction):
            rf_combine(f, RatFun.const(3, 0), "div")

    def test_dx_expansion(self):
        """363 + 3234 x1 - 2046 x2 equals 33(11(1+10x1-10x2) + 12(4x2-x1)).

        The source prints 3243 for the linear coefficient, which contradicts
        its own factorization; the expansion gives 3234.
        """
        lhs = RatFun.from_poly(Poly.affine(3, 363, [0, 3234, -2046]))
        inner = Poly.affine(3, 11, [0, 110, -110]) + Poly.affine(3, 0, [0, -12, 48])
        rhs = RatFun.from_poly(inner.scale(33))
        assert rf_equal(lhs, rhs)
        bad = RatFun.from_poly(Poly.affine(3, 363, [0, 3243, -2046]))
        assert not rf_equal(bad, rhs)

    def test_uncancelled_common_factor(self):
        assert rf_equal(RatFun(x1, x2), RatFun(x1 * x1, x1 * x2))

    def test_distinct(self):
        assert not rf_equal(RatFun.variable(3, 1), RatFun.variable(3, 2))


class TestEval51:
    """mu_1 of the 8-vertex example evaluates to the vertex indicator."""

    def mu1(self):
        def aff(c0, cs):
            return Poly.affine(4, c0, [0] + cs)

        num = aff(3, [-1, -1, -1]) * aff(2, [-2, -1, 0]) * aff(2, [-1, -4, 0])
        den = (aff(2, [-1, -1, 0]) * aff(3, [-1, -1, 0])).scale(2)
        return RatFun(num, den)

    def test_at_own_vertex(self):
        assert rf_eval(self.mu1(), [1, 0, 0, 0]) == 1

    def test_at_other_vertex(self):
        assert rf_eval(self.mu1(), [1, 1, 0, 0]) == 0

    def test_interior_substitution(self):
        pt = [F(1), F(1, 2), F(1, 4), F(1, 2)]
        num = (3 - F(1, 2) - F(1, 4) - F(1, 2)) * (2 - 1 - F(1, 4)) * (
            2 - F(1, 2) - 1
        )
        den = 2 * (2 - F(3, 4)) * (3 - F(3, 4))
        assert rf_eval(self.mu1(), pt) == num / den

    def test_denominator_vanishes(self):
        f = RatFun(x1, x2)
        with pytest.raises(DenominatorVanishes):
            rf_eval(f, [1, 1, 0])


def random_poly(rng, nvars, deg, nterms):
    terms = {}
    for _ in range(nterms):
        e = [0] * nvars
        for _ in range(deg):
            e[rng.randrange(nvars)] += rng.randint(0, 1)
        terms[tuple(e)] = F(rng.randint(-9, 9), rng.randint(1, 5))
    return Poly(nvars, terms)


class TestPointwiseOracle:
    """Arithmetic agreement with pointwise evaluation on random data."""

    def test_add_matches_double(self):
        rng = random.Random(7)
        p = random_poly(rng, 3, 3, 6)
        q = random_poly(rng, 3, 3, 6)
        if q.is_zero():
            q = Poly.const(3, 1)
        f = RatFun(p, q)
        s = rf_combine(f, f, "add")
        hits = 0
        while hits < 20:
            pt = [F(rng.randint(-8, 8), rng.randint(1, 4)) for _ in range(3)]
            if q.eval(pt) == 0:
                continue
            hits += 1
            assert rf_eval(s, pt) == 2 * p.eval(pt) / q.eval(pt)

    @pytest.mark.parametrize("op", ["add", "sub", "mul", "div"])
    def test_ops_pointwise(self, op):
        rng = random.Random(hash(op) % 1000)
        for _ in range(8):
            f = RatFun(random_poly(rng, 3, 2, 4), random_poly(rng, 3, 2, 3) + Poly.const(3, 1))
            g = RatFun(random_poly(rng, 3, 2, 4), random_poly(rng, 3, 2, 3) + Poly.const(3, 2))
            if op == "div" and g.is_zero():
                continue
            h = rf_combine(f, g, op)
            hits = 0
            tries = 0
            while hits < 6 and tries < 200:
                tries += 1
                pt = [F(rng.randint(-6, 6), rng.randint(1, 3)) for _ in range(3)]
                try:
                    fv, gv = rf_eval(f, pt), rf_eval(g, pt)
                    hv = rf_eval(h, pt)
                except DenominatorVanishes:
                    continue
                if op == "div" and gv == 0:
                    continue
                want = {
                    "add": fv + gv,
                    "sub": fv - gv,
                    "mul": fv * gv,
                    "div": fv / gv if gv else None,
                }[op]
                assert hv == want
                hits += 1
            assert hits >= 3


coeffs = st.fractions(
    min_value=-20, max_value=20, max_denominator=6
)


@st.composite
def polys(draw, nvars=2, max_deg=3):
    n = draw(st.integers(min_value=1, max_value=4))
    terms = {}
    for _ in range(n):
        e = tuple(draw(st.integers(min_value=0, max_value=max_deg)) for _ in range(nvars))
        c = draw(coeffs)
        if c:
            terms[e] = c
    return Poly(nvars, terms)


class TestProperties:
    @given(polys(), polys())
    @settings(max_examples=60, deadline=None)
    def test_rf_equal_reflexive_symmetric(self, p, q):
        if q.is_zero():
            q = Poly.const(2, 1)
        f = RatFun(p, q)
        g = RatFun(p.scale(3), q.scale(3))
        assert rf_equal(f, f)
        assert rf_equal(f, g) and rf_equal(g, f)

    @given(polys(), polys())
    @settings(max_examples=60, deadline=None)
    def test_normalization_idempotent(self, p, q):
        if q.is_zero():
            q = Poly.const(2, 1)
        f = RatFun(p, q)
        g = RatFun(f.num, f.den)
        assert g.num == f.num and g.den == f.den

    @given(polys(), polys())
    @settings(max_examples=40, deadline=None)
    def test_equal_agrees_with_sampling(self, p, q):
        if q.is_zero():
            q = Poly.const(2, 1)
        f = RatFun(p, q)
        g = RatFun(p + q, q)  # differs from f by exactly 1 everywhere
        assert not rf_equal(f, g)
        rng = random.Random(11)
        checked = 0
        for _ in range(60):
            pt = [F(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(2)]
            try:
                assert rf_eval(g, pt) == rf_eval(f, pt) + 1
                checked += 1
            except DenominatorVanishes:
                continue
        assert checked >= 5
