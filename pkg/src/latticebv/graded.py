"""Graded polynomial functionals on a finite lattice multiplet.

Generators are symbols ``kind[component, site]``.  Eight kinds: four
field-type (field, ghost, antighost, nl_field) and their four antifield
partners.  A polynomial is a finite sum of monomials; each monomial is a
sorted tuple of generators with a `FormalSeries` coefficient.  Odd (Grassmann)
generators anticommute, so reordering tracks a sign and an odd generator
squared is zero; both are handled in the normal form, never by callers.

Grading bookkeeping:

    kind                   gh   af   ta   parity
    field                   0    0    0   even
    ghost                  +1    0    0   odd
    antighost              -1    0    0   odd
    nl_field                0    0    0   even
    antifield              -1    1    1   odd
    ghost_antifield        -2    2    1   even
    antighost_antifield     0    1    1   even
    nl_antifield           -1    1    1   odd

gh is the ghost number, af the antifield number, ta flags antifield-type
generators, parity = gh mod 2 rules the Koszul signs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction

from .errors import MixedGrade
from .series import FormalSeries, Gaussian, ONE


class Kind(IntEnum):
    FIELD = 0
    GHOST = 1
    ANTIGHOST = 2
    NL_FIELD = 3
    ANTIFIELD = 4
    GHOST_ANTIFIELD = 5
    ANTIGHOST_ANTIFIELD = 6
    NL_ANTIFIELD = 7


_GH = {
    Kind.FIELD: 0, Kind.GHOST: 1, Kind.ANTIGHOST: -1, Kind.NL_FIELD: 0,
    Kind.ANTIFIELD: -1, Kind.GHOST_ANTIFIELD: -2,
    Kind.ANTIGHOST_ANTIFIELD: 0, Kind.NL_ANTIFIELD: -1,
}
_AF = {
    Kind.FIELD: 0, Kind.GHOST: 0, Kind.ANTIGHOST: 0, Kind.NL_FIELD: 0,
    Kind.ANTIFIELD: 1, Kind.GHOST_ANTIFIELD: 2,
    Kind.ANTIGHOST_ANTIFIELD: 1, Kind.NL_ANTIFIELD: 1,
}
ANTIFIELD_OF = {
    Kind.FIELD: Kind.ANTIFIELD,
    Kind.GHOST: Kind.GHOST_ANTIFIELD,
    Kind.ANTIGHOST: Kind.ANTIGHOST_ANTIFIELD,
    Kind.NL_FIELD: Kind.NL_ANTIFIELD,
}
BASE_OF = {v: k for k, v in ANTIFIELD_OF.items()}
FIELD_KINDS = tuple(ANTIFIELD_OF)
ANTIFIELD_KINDS = tuple(BASE_OF)


@dataclass(frozen=True, order=True)
class Generator:
    kind: Kind
    component: int
    site: int

    @property
    def gh(self) -> int:
        return _GH[self.kind]

    @property
    def af(self) -> int:
        return _AF[self.kind]

    @property
    def ta(self) -> int:
        return 1 if self.kind in BASE_OF else 0

    @property
    def parity(self) -> int:
        return _GH[self.kind] & 1

    def antifield(self) -> "Generator":
        return Generator(ANTIFIELD_OF[self.kind], self.component, self.site)

    def base(self) -> "Generator":
        return Generator(BASE_OF[self.kind], self.component, self.site)

    def __repr__(self):
        return f"{self.kind.name.lower()}[{self.component},{self.site}]"


def normalize_key(key):
    """Sort a generator tuple, returning (koszul_sign, sorted_tuple).

    Returns (0, ()) when an odd generator repeats.
    """
    sign = 1
    out = []
    for g in key:
        i = len(out)
        while i > 0 and out[i - 1] > g:
            i -= 1
        if g.parity:
            if i > 0 and out[i - 1] == g:
                return 0, ()
            crossed = 0
            for x in out[i:]:
                crossed += x.parity
            if crossed & 1:
                sign = -sign
        out.insert(i, g)
    return sign, tuple(out)


def key_parity(key) -> int:
    p = 0
    for g in key:
        p ^= g.parity
    return p


def key_gh(key) -> int:
    return sum(g.gh for g in key)


def key_af(key) -> int:
    return sum(g.af for g in key)


def key_ta(key) -> int:
    return sum(g.ta for g in key)


class GradedPolynomial:
    """Finite sum of graded monomials with series coefficients.

    ``terms`` maps sorted generator tuples to nonzero `FormalSeries`.  The
    empty tuple holds the scalar part.  Construction normalizes arbitrary
    keys (sorting, Koszul signs, odd squares) and drops zero coefficients.
    """

    __slots__ = ("terms",)

    def __init__(self, terms):
        table = {}
        for key, series in terms.items():
            if series.is_zero:
                continue
            sign, nkey = normalize_key(key)
            if sign == 0:
                continue
            contrib = series if sign > 0 else -series
            prior = table.get(nkey)
            merged = contrib if prior is None else prior + contrib
            if merged.is_zero:
                table.pop(nkey, None)
            else:
                table[nkey] = merged
        self.terms = table

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls):
        return cls({})

    @classmethod
    def scalar(cls, series: FormalSeries):
        return cls({(): series})

    @classmethod
    def from_generator(cls, g: Generator, coeff: FormalSeries):
        return cls({(g,): coeff})

    @classmethod
    def _raw(cls, table):
        """Internal: wrap an already-normalized table without copying."""
        out = cls.__new__(cls)
        out.terms = table
        return out

    # -- structure ----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def generators(self):
        seen = set()
        for key in self.terms:
            seen.update(key)
        return seen

    def support(self):
        return sorted({g.site for key in self.terms for g in key})

    def max_degree(self) -> int:
        return max((len(k) for k in self.terms), default=0)

    def min_degree(self) -> int:
        return min((len(k) for k in self.terms), default=0)

    def nonzero_monomials(self) -> int:
        return len(self.terms)

    def order_profile(self):
        """How many monomials carry each (h_power, l_power)."""
        out = {}
        for series in self.terms.values():
            for hl in series.coeffs:
                out[hl] = out.get(hl, 0) + 1
        return dict(sorted(out.items()))

    def grading(self):
        """(gh, af, ta) if homogeneous in all three, else None."""
        result = None
        for key in self.terms:
            g = (key_gh(key), key_af(key), key_ta(key))
            if result is None:
                result = g
            elif result != g:
                return None
        return result

    def require_homogeneous(self, what="operand"):
        g = self.grading()
        if g is None and self.terms:
            raise MixedGrade(f"{what} is not grading-homogeneous")
        return g

    def parity(self):
        """0 or 1 if parity-homogeneous, else None."""
        result = None
        for key in self.terms:
            p = key_parity(key)
            if result is None:
                result = p
            elif result != p:
                return None
        return result

    def gh_part(self, n: int) -> "GradedPolynomial":
        return GradedPolynomial._raw(
            {k: c for k, c in self.terms.items() if key_gh(k) == n})

    def ta_part(self, n: int) -> "GradedPolynomial":
        return GradedPolynomial._raw(
            {k: c for k, c in self.terms.items() if key_ta(k) == n})

    def antifield_free(self) -> bool:
        return all(key_ta(k) == 0 for k in self.terms)

    def degree_part(self, d: int) -> "GradedPolynomial":
        return GradedPolynomial._raw(
            {k: c for k, c in self.terms.items() if len(k) == d})

    def coefficient(self, key) -> FormalSeries:
        sign, nkey = normalize_key(tuple(key))
        if sign == 0 or nkey not in self.terms:
            caps = self._any_caps()
            return FormalSeries.zero(*caps)
        c = self.terms[nkey]
        return c if sign > 0 else -c

    def _any_caps(self):
        for series in self.terms.values():
            return (series.hbar_cap, series.lambda_cap)
        return (0, 0)

    # -- ring operations ------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, GradedPolynomial):
            return NotImplemented
        table = dict(self.terms)
        for key, c in other.terms.items():
            prior = table.get(key)
            merged = c if prior is None else prior + c
            if merged.is_zero:
                table.pop(key, None)
            else:
                table[key] = merged
        return GradedPolynomial._raw(table)

    def __sub__(self, other):
        if not isinstance(other, GradedPolynomial):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return GradedPolynomial._raw({k: -c for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, Gaussian, FormalSeries)):
            return self.map_coefficients(lambda s: s * other)
        if not isinstance(other, GradedPolynomial):
            return NotImplemented
        table = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                sign, nkey = normalize_key(k1 + k2)
                if sign == 0:
                    continue
                c = c1 * c2
                if sign < 0:
                    c = -c
                prior = table.get(nkey)
                merged = c if prior is None else prior + c
                if merged.is_zero:
                    table.pop(nkey, None)
                else:
                    table[nkey] = merged
        return GradedPolynomial._raw(table)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, Gaussian, FormalSeries)):
            return self.map_coefficients(lambda s: s * other)
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, GradedPolynomial):
            return NotImplemented
        return self.terms == other.terms

    __hash__ = None

    def map_coefficients(self, fn) -> "GradedPolynomial":
        table = {}
        for key, c in self.terms.items():
            s = fn(c)
            if not s.is_zero:
                table[key] = s
        return GradedPolynomial._raw(table)

    def shift_hbar(self, k: int) -> "GradedPolynomial":
        return self.map_coefficients(lambda s: s.shift_hbar(k))

    def truncated(self, hbar_cap=None, lambda_cap=None) -> "GradedPolynomial":
        return self.map_coefficients(
            lambda s: s.truncated(hbar_cap=hbar_cap, lambda_cap=lambda_cap))

    # -- derivatives -----------------------------------------------------------

    def derivative(self, g: Generator, side: str) -> "GradedPolynomial":
        """One-sided graded derivative with respect to a single generator.

        side='left': pull g out through the factors to its left; the sign for
        removing position i is (-1)^{|g| * (|g_0| + ... + |g_{i-1}|)}.
        side='right' mirrors from the right.
        """
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        gp = g.parity
        table = {}
        for key, c in self.terms.items():
            for i, gi in enumerate(key):
                if gi != g:
                    continue
                if gp:
                    if side == "left":
                        crossed = sum(x.parity for x in key[:i])
                    else:
                        crossed = sum(x.parity for x in key[i + 1:])
                    flip = crossed & 1
                else:
                    flip = 0
                nkey = key[:i] + key[i + 1:]
                contrib = -c if flip else c
                prior = table.get(nkey)
                merged = contrib if prior is None else prior + contrib
                if merged.is_zero:
                    table.pop(nkey, None)
                else:
                    table[nkey] = merged
        return GradedPolynomial._raw(table)

    # -- substitution -----------------------------------------------------------

    def substitute(self, rules) -> "GradedPolynomial":
        """Replace generators by polynomials.

        Each image must be parity-homogeneous with the parity of the
        generator it replaces (this keeps Koszul bookkeeping meaningful).
        Generators without a rule map to themselves.
        """
        cache = {}
        ident = object()

        def image(g):
            got = cache.get(g)
            if got is None:
                p = rules.get(g)
                if p is None:
                    got = ident
                elif p.is_zero:
                    got = p
                else:
                    ip = p.parity()
                    if ip is None:
                        raise ValueError(
                            f"substitution image for {g} has mixed parity")
                    if ip != g.parity:
                        raise ValueError(
                            f"substitution image for {g} has wrong parity")
                    got = p
                cache[g] = got
            return got

        out = GradedPolynomial.zero()
        for key, c in self.terms.items():
            if not any(g in rules for g in key):
                out = out + GradedPolynomial._raw({key: c})
                continue
            mono = GradedPolynomial.scalar(c)
            for g in key:
                img = image(g)
                if img is ident:
                    mono = mono * GradedPolynomial._raw(
                        {(g,): FormalSeries.one(c.hbar_cap, c.lambda_cap)})
                else:
                    mono = mono * img
            out = out + mono
        return out

    def evaluate(self, assignment) -> FormalSeries:
        """Evaluate at a numeric configuration (even generators only)."""
        result = None
        for key, c in self.terms.items():
            value = c
            for g in key:
                if g.parity:
                    raise ValueError(f"cannot evaluate odd generator {g}")
                value = value * assignment[g]
            result = value if result is None else result + value
        if result is None:
            return FormalSeries.zero(*self._any_caps())
        return result

    def __str__(self):
        if not self.terms:
            return "0"
        bits = []
        for key in sorted(self.terms, key=lambda k: (len(k), k)):
            c = self.terms[key]
            cs = str(c)
            if " + " in cs or key == ():
                cs = f"({cs})"
            name = " ".join(repr(g) for g in key)
            bits.append(f"{cs} {name}".strip())
        return " + ".join(bits)

    __repr__ = __str__


# -- BV structures ---------------------------------------------------------


def antibracket(x: GradedPolynomial, y: GradedPolynomial) -> GradedPolynomial:
    """Graded antibracket pairing each field-type generator with its
    antifield partner:

        {x, y} = sum_a  d_r x/d field_a * d_l y/d antifield_a
                      -  d_r x/d antifield_a * d_l y/d field_a
    """
    out = GradedPolynomial.zero()
    for g in x.generators():
        if g.ta:
            dx = x.derivative(g, "right")
            dy = y.derivative(g.base(), "left")
            if dx.terms and dy.terms:
                out = out - dx * dy
        else:
            dx = x.derivative(g, "right")
            dy = y.derivative(g.antifield(), "left")
            if dx.terms and dy.terms:
                out = out + dx * dy
    return out


def bv_laplacian(x: GradedPolynomial, strict: bool = False) -> GradedPolynomial:
    """Second-order BV operator.

        lap(x) = sum_a (-1)^{|a|+1} d_r(d_r x / d antifield_a) / d field_a

    with |a| the parity of the field generator.  The per-pair sign is the
    unique choice (given the antibracket convention) for which lap squares
    to zero and the generator relation

        lap(XY) = (-1)^{|Y|} lap(X) Y + X lap(Y) + (-1)^{|Y|} {X, Y}

    holds with constant signs; see conventions.py.
    """
    if strict:
        x.require_homogeneous("bv_laplacian argument")
    out = GradedPolynomial.zero()
    for key, c in x.terms.items():
        mono = GradedPolynomial._raw({key: c})
        for g in set(key):
            if not g.ta:
                continue
            base = g.base()
            inner = mono.derivative(g, "right").derivative(base, "right")
            out = (out + inner) if base.parity else (out - inner)
    return out
