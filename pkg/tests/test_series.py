"""Exact scalar and truncated-series layer."""

from fractions import Fraction
import random

import pytest

from latticebv.errors import NonzeroConstantTerm, ZeroConstantTerm
from latticebv.series import FormalSeries, Gaussian, I, ONE, rat

from helpers import random_gaussian, random_series


class TestGaussian:
    def test_field_axioms_random(self):
        rng = random.Random(11)
        for _ in range(200):
            a, b, c = (random_gaussian(rng) for _ in range(3))
            assert a + b == b + a
            assert (a + b) + c == a + (b + c)
            assert a * b == b * a
            assert (a * b) * c == a * (b * c)
            assert a * (b + c) == a * b + a * c
            if b:
                assert (a / b) * b == a

    def test_complex_structure(self):
        assert I * I == Gaussian(-1)
        z = Gaussian(Fraction(1, 2), Fraction(-3, 4))
        assert z * z.conjugate() == Gaussian(Fraction(1, 4) + Fraction(9, 16))
        assert (1 / z) * z == ONE

    def test_pow(self):
        z = Gaussian(2, 1)
        assert z ** 0 == ONE
        assert z ** 3 == z * z * z
        assert z ** -2 == ONE / (z * z)

    @pytest.mark.parametrize("text", [
        "0", "1", "-1", "1/2", "-3/4", "i", "-i", "2i", "-2/3i",
        "1/2+3/4i", "-1/2-3i", "5-i",
    ])
    def test_parse_format_round_trip(self, text):
        z = Gaussian.parse(text)
        assert Gaussian.parse(str(z)) == z

    def test_parse_rejects_garbage(self):
        for bad in ["", "one", "1.5", "i+i+", "++2"]:
            with pytest.raises(ValueError):
                Gaussian.parse(bad)


class TestSeriesRing:
    def test_ring_axioms_random(self):
        rng = random.Random(23)
        for _ in range(200):
            a = random_series(rng)
            b = random_series(rng)
            c = random_series(rng)
            assert a + b == b + a
            assert (a + b) + c == a + (b + c)
            assert a * b == b * a
            assert (a * b) * c == a * (b * c)
            assert a * (b + c) == a * b + a * c
            assert (a - a).is_zero

    def test_truncation_drops_above_caps(self):
        h = FormalSeries.hbar(2, 2)
        x = h * h * h
        assert x.is_zero
        l = FormalSeries.lam(2, 2)
        y = (l * l) * l
        assert y.is_zero

    def test_binary_ops_use_min_caps(self):
        a = FormalSeries.one(5, 5)
        b = FormalSeries.one(2, 3)
        c = a * b
        assert (c.hbar_cap, c.lambda_cap) == (2, 3)
        d = a + b
        assert (d.hbar_cap, d.lambda_cap) == (2, 3)

    def test_laurent_floor(self):
        x = FormalSeries.monomial(-2, 1, ONE, 4, 4, hbar_min=-2)
        y = x.shift_hbar(3)
        assert y.coefficient(1, 1) == ONE
        with pytest.raises(ValueError):
            FormalSeries.monomial(-1, 0, ONE, 4, 4)  # below default floor

    def test_negative_lambda_rejected(self):
        with pytest.raises(ValueError):
            FormalSeries({(0, -1): ONE}, 2, 2)


class TestSeriesFunctions:
    def test_invert_round_trip_random(self):
        rng = random.Random(37)
        one = FormalSeries.one(3, 3)
        for _ in range(100):
            a = random_series(rng, 3, 3)
            if not a.constant_term():
                a = a + one
            assert a * a.invert() == one

    def test_invert_needs_constant_term(self):
        with pytest.raises(ZeroConstantTerm):
            FormalSeries.hbar(2, 2).invert()

    def test_exp_quadratic_coefficient(self):
        # exp(i h l / 2): the (h^2, l^2) coefficient is (i/2)^2 / 2! = -1/8,
        # computed by hand from the square of the exponent.
        x = FormalSeries.monomial(1, 1, I * Fraction(1, 2), 4, 4)
        e = x.exp()
        assert e.coefficient(0, 0) == ONE
        assert e.coefficient(1, 1) == I * Fraction(1, 2)
        assert e.coefficient(2, 2) == rat(-1, 8)
        assert e.coefficient(1, 2) == Gaussian(0)

    def test_exp_needs_zero_constant_term(self):
        with pytest.raises(NonzeroConstantTerm):
            FormalSeries.one(2, 2).exp()

    def test_exp_additivity_random(self):
        rng = random.Random(41)
        for _ in range(60):
            a = random_series(rng, 3, 3)
            b = random_series(rng, 3, 3)
            a = a - FormalSeries.const(a.constant_term(), 3, 3)
            b = b - FormalSeries.const(b.constant_term(), 3, 3)
            assert (a + b).exp() == a.exp() * b.exp()
            assert a.exp() * (-a).exp() == FormalSeries.one(3, 3)

    def test_exp_laurent_terminates_with_coupling_weight(self):
        # l/h keys are nilpotent at the caps because every power raises l
        x = FormalSeries.monomial(-1, 1, ONE, 3, 3, hbar_min=-1)
        e = x.exp()
        assert e.coefficient(-3, 3) == rat(1, 6)
        assert e.coefficient(-4, 4) == Gaussian(0)  # beyond lambda cap

    def test_exp_rejects_non_nilpotent_laurent_key(self):
        x = FormalSeries.monomial(-1, 0, ONE, 3, 3, hbar_min=-1)
        with pytest.raises(ValueError):
            x.exp()

    def test_clip_keeps_low_orders(self):
        x = FormalSeries({(-1, 2): ONE, (3, 3): ONE}, 5, 5, hbar_min=-1)
        y = x.truncated(hbar_cap=2, lambda_cap=2)
        assert y.coefficient(-1, 2) == ONE
        assert y.coefficient(3, 3) == Gaussian(0)
