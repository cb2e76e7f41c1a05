"""Graded functional calculus: normal form, derivatives, antibracket,
BV Laplacian.  Anchor values are hand-computed; structural identities run
over seeded random instances and must vanish identically."""

import random

import pytest

from latticebv.errors import MixedGrade
from latticebv.graded import (
    Generator, GradedPolynomial, Kind, antibracket, bv_laplacian,
)
from latticebv.series import FormalSeries, Gaussian, ONE

from helpers import random_poly, small_generator_pool

CAPS = (2, 2)


def one():
    return FormalSeries.one(*CAPS)


def gp(*gens):
    return GradedPolynomial({tuple(gens): one()})


def phi(x, comp=0):
    return Generator(Kind.FIELD, comp, x)


def phis(x, comp=0):
    return Generator(Kind.ANTIFIELD, comp, x)


def ghost(x, comp=0):
    return Generator(Kind.GHOST, comp, x)


def ghost_af(x, comp=0):
    return Generator(Kind.GHOST_ANTIFIELD, comp, x)


class TestNormalForm:
    def test_odd_reorder_sign(self):
        c0, c1 = ghost(0), ghost(1)
        assert gp(c1, c0) == -gp(c0, c1)

    def test_odd_square_is_zero(self):
        c0 = ghost(0)
        assert gp(c0, c0).is_zero
        assert (gp(c0) * gp(c0)).is_zero

    def test_even_commutes(self):
        a, b = phi(0), phi(1)
        assert gp(b, a) == gp(a, b)
        assert gp(a, a) == gp(a) * gp(a)

    def test_even_odd_commute(self):
        a, c = phi(0), ghost(0)
        assert gp(c, a) == gp(a, c)

    def test_grading_table(self):
        rows = {
            Kind.FIELD: (0, 0, 0, 0),
            Kind.GHOST: (1, 0, 0, 1),
            Kind.ANTIGHOST: (-1, 0, 0, 1),
            Kind.NL_FIELD: (0, 0, 0, 0),
            Kind.ANTIFIELD: (-1, 1, 1, 1),
            Kind.GHOST_ANTIFIELD: (-2, 2, 1, 0),
            Kind.ANTIGHOST_ANTIFIELD: (0, 1, 1, 0),
            Kind.NL_ANTIFIELD: (-1, 1, 1, 1),
        }
        for kind, (gh, af, ta, parity) in rows.items():
            g = Generator(kind, 0, 0)
            assert (g.gh, g.af, g.ta, g.parity) == (gh, af, ta, parity)

    def test_partner_round_trip(self):
        for kind in (Kind.FIELD, Kind.GHOST, Kind.ANTIGHOST, Kind.NL_FIELD):
            g = Generator(kind, 1, 2)
            assert g.antifield().base() == g
            assert g.antifield().gh == -g.gh - 1


class TestDerivatives:
    def test_odd_left_vs_right_anchor(self):
        c0, c1 = ghost(0), ghost(1)
        m = gp(c0, c1)
        assert m.derivative(c1, "left") == -gp(c0)
        assert m.derivative(c1, "right") == gp(c0)
        assert m.derivative(c0, "left") == gp(c1)
        assert m.derivative(c0, "right") == -gp(c1)

    def test_even_power_rule(self):
        a = phi(0)
        sq = gp(a) * gp(a)
        assert sq.derivative(a, "left") == 2 * gp(a)
        assert sq.derivative(a, "right") == 2 * gp(a)

    def test_left_right_relation_random(self):
        # d_l X/dg = (-1)^{|g| (|X|+1)} d_r X/dg on parity-homogeneous X
        rng = random.Random(101)
        pool = small_generator_pool(2)
        for _ in range(300):
            X = random_poly(rng, pool, parity=rng.randint(0, 1))
            px = X.parity()
            if px is None:
                continue
            g = rng.choice(pool)
            sign = (-1) ** (g.parity * (px + 1))
            assert X.derivative(g, "left") == X.derivative(g, "right") * sign

    def test_left_leibniz_random(self):
        rng = random.Random(103)
        pool = small_generator_pool(2)
        for _ in range(300):
            X = random_poly(rng, pool, parity=rng.randint(0, 1))
            Y = random_poly(rng, pool)
            px = X.parity()
            if px is None:
                continue
            g = rng.choice(pool)
            lhs = (X * Y).derivative(g, "left")
            rhs = X.derivative(g, "left") * Y \
                + (X * Y.derivative(g, "left")) * ((-1) ** (g.parity * px))
            assert (lhs - rhs).is_zero

    def test_derivatives_commute_distinct_random(self):
        # graded commutation of derivative operators in distinct generators
        rng = random.Random(107)
        pool = small_generator_pool(2)
        for _ in range(200):
            X = random_poly(rng, pool)
            g1, g2 = rng.sample(pool, 2)
            a = X.derivative(g1, "left").derivative(g2, "left")
            b = X.derivative(g2, "left").derivative(g1, "left")
            sign = (-1) ** (g1.parity * g2.parity)
            assert (a - b * sign).is_zero


class TestProduct:
    def test_associative_and_graded_commutative_random(self):
        rng = random.Random(109)
        pool = small_generator_pool(2)
        for _ in range(200):
            X = random_poly(rng, pool, parity=rng.randint(0, 1))
            Y = random_poly(rng, pool, parity=rng.randint(0, 1))
            Z = random_poly(rng, pool)
            assert ((X * Y) * Z - X * (Y * Z)).is_zero
            px, py = X.parity(), Y.parity()
            if px is not None and py is not None:
                assert (X * Y - (Y * X) * ((-1) ** (px * py))).is_zero


class TestAntibracket:
    def test_canonical_pairs(self):
        assert antibracket(gp(phi(0)), gp(phis(0))) == GradedPolynomial.scalar(one())
        assert antibracket(gp(phi(0)), gp(phis(1))).is_zero
        assert antibracket(gp(phis(0)), gp(phi(0))) == -GradedPolynomial.scalar(one())
        assert antibracket(gp(ghost(2)), gp(ghost_af(2))) == GradedPolynomial.scalar(one())

    def test_quadratic_anchor(self):
        # {phi_0^2, phi*_0 phi_0} = 2 phi_0^2, by hand
        x = gp(phi(0)) * gp(phi(0))
        y = gp(phi(0), phis(0))
        assert antibracket(x, y) == 2 * x

    def test_gh_shift(self):
        x = gp(phi(0), phis(0))
        y = gp(ghost(1), ghost_af(1))
        b = antibracket(x, y)
        if not b.is_zero:
            assert b.grading()[0] == x.grading()[0] + y.grading()[0] + 1

    def test_antisymmetry_random(self):
        rng = random.Random(113)
        pool = small_generator_pool(2)
        for _ in range(200):
            X = random_poly(rng, pool, parity=rng.randint(0, 1))
            Y = random_poly(rng, pool, parity=rng.randint(0, 1))
            px, py = X.parity(), Y.parity()
            if px is None or py is None:
                continue
            d = antibracket(X, Y) \
                + antibracket(Y, X) * ((-1) ** ((px + 1) * (py + 1)))
            assert d.is_zero

    def test_leibniz_random(self):
        rng = random.Random(127)
        pool = small_generator_pool(2)
        for _ in range(150):
            X = random_poly(rng, pool, parity=rng.randint(0, 1))
            Y = random_poly(rng, pool, parity=rng.randint(0, 1))
            Z = random_poly(rng, pool)
            px, py = X.parity(), Y.parity()
            if px is None or py is None:
                continue
            lhs = antibracket(X, Y * Z)
            rhs = antibracket(X, Y) * Z \
                + (Y * antibracket(X, Z)) * ((-1) ** ((px + 1) * py))
            assert (lhs - rhs).is_zero

    def test_jacobi_random(self):
        rng = random.Random(131)
        pool = small_generator_pool(2)
        for _ in range(100):
            ps = [rng.randint(0, 1) for _ in range(3)]
            X = random_poly(rng, pool, max_len=2, parity=ps[0])
            Y = random_poly(rng, pool, max_len=2, parity=ps[1])
            Z = random_poly(rng, pool, max_len=2, parity=ps[2])
            if None in (X.parity(), Y.parity(), Z.parity()):
                continue
            px, py, pz = ps
            t = (antibracket(X, antibracket(Y, Z)) * ((-1) ** ((px + 1) * (pz + 1)))
                 + antibracket(Y, antibracket(Z, X)) * ((-1) ** ((py + 1) * (px + 1)))
                 + antibracket(Z, antibracket(X, Y)) * ((-1) ** ((pz + 1) * (py + 1))))
            assert t.is_zero


class TestLaplacian:
    def test_pair_anchors(self):
        assert bv_laplacian(gp(phi(0), phis(0))) == -GradedPolynomial.scalar(one())
        assert bv_laplacian(gp(ghost(0), ghost_af(0))) == GradedPolynomial.scalar(one())
        assert bv_laplacian(gp(phi(0), phis(1))).is_zero

    def test_squares_to_zero_random(self):
        rng = random.Random(137)
        pool = small_generator_pool(2)
        for _ in range(200):
            X = random_poly(rng, pool, max_len=4)
            assert bv_laplacian(bv_laplacian(X)).is_zero

    def test_generator_relation_random(self):
        # lap(XY) = (-1)^{|Y|} lap(X) Y + X lap(Y) + (-1)^{|Y|} {X, Y}
        rng = random.Random(139)
        pool = small_generator_pool(2)
        for _ in range(200):
            X = random_poly(rng, pool, parity=rng.randint(0, 1))
            Y = random_poly(rng, pool, parity=rng.randint(0, 1))
            py = Y.parity()
            if X.parity() is None or py is None:
                continue
            s = (-1) ** py
            lhs = bv_laplacian(X * Y)
            rhs = bv_laplacian(X) * Y * s + X * bv_laplacian(Y) \
                + antibracket(X, Y) * s
            assert (lhs - rhs).is_zero

    def test_strict_mode_rejects_mixed(self):
        mixed = gp(phi(0)) + gp(ghost(0))
        with pytest.raises(MixedGrade):
            bv_laplacian(mixed, strict=True)
        # homogeneous passes
        bv_laplacian(gp(phi(0), phis(0)), strict=True)


class TestSubstitution:
    def test_is_algebra_morphism_random(self):
        rng = random.Random(149)
        pool = small_generator_pool(2)
        for _ in range(100):
            X = random_poly(rng, pool, max_len=2)
            Y = random_poly(rng, pool, max_len=2)
            g = rng.choice([p for p in pool if p.parity == 0])
            image = random_poly(rng, pool, max_len=1, parity=0)
            rules = {g: image}
            lhs = (X * Y).substitute(rules)
            rhs = X.substitute(rules) * Y.substitute(rules)
            assert (lhs - rhs).is_zero

    def test_parity_mismatch_rejected(self):
        rules = {phi(0): gp(ghost(0))}
        with pytest.raises(ValueError):
            gp(phi(0)).substitute(rules)

    def test_shift_substitution(self):
        # phi -> phi + 1
        shift = gp(phi(0)) + GradedPolynomial.scalar(one())
        sq = gp(phi(0)) * gp(phi(0))
        out = sq.substitute({phi(0): shift})
        expect = sq + 2 * gp(phi(0)) + GradedPolynomial.scalar(one())
        assert out == expect

    def test_evaluate(self):
        x = gp(phi(0)) * gp(phi(0)) + GradedPolynomial.scalar(one())
        val = x.evaluate({phi(0): Gaussian(3)})
        assert val == FormalSeries.const(Gaussian(10), *CAPS)

    def test_evaluate_rejects_odd(self):
        with pytest.raises(ValueError):
            gp(ghost(0)).evaluate({ghost(0): Gaussian(1)})
