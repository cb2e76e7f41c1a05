"""Shared random-instance builders for property tests.

All sampling is driven by an explicit random.Random so failures replay
exactly from the seed printed by the test.
"""

from fractions import Fraction
import random

from latticebv.series import FormalSeries, Gaussian
from latticebv.graded import Generator, GradedPolynomial, Kind


def random_gaussian(rng: random.Random, zero_ok: bool = True) -> Gaussian:
    g = Gaussian(Fraction(rng.randint(-4, 4), rng.randint(1, 3)),
                 Fraction(rng.randint(-2, 2), rng.randint(1, 2)))
    if not zero_ok and not g:
        return Gaussian(1)
    return g


def random_series(rng: random.Random, hbar_cap=2, lambda_cap=2,
                  max_terms=4) -> FormalSeries:
    table = {}
    for _ in range(rng.randint(0, max_terms)):
        h = rng.randint(0, hbar_cap)
        l = rng.randint(0, lambda_cap)
        table[(h, l)] = random_gaussian(rng)
    return FormalSeries(table, hbar_cap, lambda_cap)


def small_generator_pool(n_sites=3):
    """A compact pool spanning all eight kinds."""
    pool = []
    for kind in Kind:
        for site in range(n_sites):
            pool.append(Generator(kind, 0, site))
    return pool


def random_poly(rng: random.Random, pool=None, hbar_cap=2, lambda_cap=2,
                max_terms=3, max_len=3, parity=None) -> GradedPolynomial:
    """Random polynomial; optionally restricted to one parity."""
    if pool is None:
        pool = small_generator_pool()
    terms = {}
    tries = 0
    want = rng.randint(1, max_terms)
    while len(terms) < want and tries < 40:
        tries += 1
        length = rng.randint(0, max_len)
        key = tuple(rng.choice(pool) for _ in range(length))
        if parity is not None:
            if sum(g.parity for g in key) & 1 != parity:
                continue
        coeff = random_series(rng, hbar_cap, lambda_cap, max_terms=2)
        if coeff.is_zero:
            continue
        terms[key] = coeff
    return GradedPolynomial(terms)


def random_homogeneous_poly(rng, pool=None, **kw):
    """Parity-homogeneous random polynomial (possibly zero)."""
    return random_poly(rng, pool=pool, parity=rng.randint(0, 1), **kw)
