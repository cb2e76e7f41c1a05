"""Exact scalars and truncated formal power series.

Scalars are Gaussian rationals (rational real and imaginary parts, stored as
`fractions.Fraction`).  Series are finite coefficient tables in two formal
variables, written ``h`` (the quantization parameter) and ``l`` (the
coupling), truncated at caps carried by every series.  All arithmetic is
exact; a vanishing residual in a test means identically zero at the caps,
not small.

Negative powers of ``h`` are permitted down to a floor ``hbar_min <= 0``
recorded on the series.  The floor never causes truncation; it is a
declaration that Laurent keys are intentional.  Callers that divide by ``h``
are expected to work at a lifted ``hbar_cap`` so that no key is ever dropped
from above mid-computation, and to clip once at the end (see quantum.py).
"""

from __future__ import annotations

import re
from fractions import Fraction

_Q = Fraction  # exact rational backend; single point of swap


def _as_fraction(x) -> Fraction:
    if isinstance(x, (int, Fraction)):
        return _Q(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


class Gaussian:
    """Exact complex number with rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _as_fraction(re)
        self.im = _as_fraction(im)

    # -- arithmetic -----------------------------------------------------

    @staticmethod
    def _coerce(x):
        if isinstance(x, Gaussian):
            return x
        if isinstance(x, (int, Fraction)):
            return Gaussian(x)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Gaussian(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Gaussian(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Gaussian(o.re - self.re, o.im - self.im)

    def __neg__(self):
        return Gaussian(-self.re, -self.im)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Gaussian(self.re * o.re - self.im * o.im,
                        self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        n = o.re * o.re + o.im * o.im
        if n == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return Gaussian((self.re * o.re + self.im * o.im) / n,
                        (self.im * o.re - self.re * o.im) / n)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return (ONE / self) ** (-n)
        out = ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conjugate(self) -> "Gaussian":
        return Gaussian(self.re, -self.im)

    # -- predicates and formatting --------------------------------------

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def magnitude(self) -> Fraction:
        """max(|re|, |im|); used only for reporting residual sizes."""
        return max(abs(self.re), abs(self.im))

    def is_real(self) -> bool:
        return self.im == 0

    def __str__(self):
        if not self:
            return "0"
        parts = []
        if self.re:
            parts.append(str(self.re))
        if self.im:
            if self.im == 1:
                s = "i"
            elif self.im == -1:
                s = "-i"
            else:
                s = f"{self.im}i"
            if parts and not s.startswith("-"):
                parts.append("+" + s)
            else:
                parts.append(s)
        return "".join(parts)

    __repr__ = __str__

    _CHUNK = re.compile(r"[+-]?[^+-]+")
    _RATIONAL = re.compile(r"[+-]?\d+(?:/\d+)?")

    @classmethod
    def parse(cls, s: str) -> "Gaussian":
        """Parse strings like '1/2', '-3', 'i', '2i', '1/2-3/4i'.

        Only integer-ratio forms are accepted; decimal notation is rejected
        so inexact values cannot sneak in through configuration files.
        """
        text = s.replace(" ", "")
        if not text:
            raise ValueError("empty Gaussian rational literal")
        chunks = cls._CHUNK.findall(text)
        if "".join(chunks) != text:
            raise ValueError(f"bad Gaussian rational literal {s!r}")

        def body_fraction(body: str) -> Fraction:
            if not cls._RATIONAL.fullmatch(body):
                raise ValueError(f"bad Gaussian rational literal {s!r}")
            return _Q(body)

        re_part = _Q(0)
        im_part = _Q(0)
        for chunk in chunks:
            if chunk.endswith(("i", "I")):
                body = chunk[:-1]
                if body in ("", "+"):
                    im_part += 1
                elif body == "-":
                    im_part -= 1
                else:
                    im_part += body_fraction(body)
            else:
                re_part += body_fraction(chunk)
        return cls(re_part, im_part)


ZERO = Gaussian(0)
ONE = Gaussian(1)
I = Gaussian(0, 1)


def rat(p, q=1) -> Gaussian:
    """Shorthand for the real Gaussian rational p/q."""
    return Gaussian(_Q(p, q))


class FormalSeries:
    """Truncated polynomial in h and l with Gaussian rational coefficients.

    ``coeffs`` maps ``(h_power, l_power)`` to nonzero Gaussian rationals.
    Keys with h_power > hbar_cap or l_power > lambda_cap are dropped at
    construction (truncation); keys below ``hbar_min`` or with negative
    l_power are structural errors.  Binary operations truncate to the
    componentwise minimum of the operands' caps.
    """

    __slots__ = ("coeffs", "hbar_cap", "lambda_cap", "hbar_min")

    def __init__(self, coeffs, hbar_cap: int, lambda_cap: int, hbar_min: int = 0):
        if hbar_min > 0:
            raise ValueError("hbar_min must be <= 0")
        table = {}
        for (h, l), c in coeffs.items():
            if l < 0:
                raise ValueError(f"negative coupling power in key {(h, l)}")
            if h < hbar_min:
                raise ValueError(f"key {(h, l)} below hbar floor {hbar_min}")
            if h > hbar_cap or l > lambda_cap:
                continue
            g = c if isinstance(c, Gaussian) else Gaussian(c)
            if g:
                table[(h, l)] = g
        self.coeffs = table
        self.hbar_cap = hbar_cap
        self.lambda_cap = lambda_cap
        self.hbar_min = hbar_min

    # -- constructors ----------------------------------------------------

    @classmethod
    def zero(cls, hbar_cap: int, lambda_cap: int, hbar_min: int = 0):
        return cls({}, hbar_cap, lambda_cap, hbar_min)

    @classmethod
    def const(cls, value, hbar_cap: int, lambda_cap: int, hbar_min: int = 0):
        return cls({(0, 0): value}, hbar_cap, lambda_cap, hbar_min)

    @classmethod
    def one(cls, hbar_cap: int, lambda_cap: int, hbar_min: int = 0):
        return cls.const(ONE, hbar_cap, lambda_cap, hbar_min)

    @classmethod
    def monomial(cls, h: int, l: int, value, hbar_cap: int, lambda_cap: int,
                 hbar_min: int = 0):
        return cls({(h, l): value}, hbar_cap, lambda_cap, hbar_min)

    @classmethod
    def hbar(cls, hbar_cap: int, lambda_cap: int):
        return cls.monomial(1, 0, ONE, hbar_cap, lambda_cap)

    @classmethod
    def lam(cls, hbar_cap: int, lambda_cap: int):
        return cls.monomial(0, 1, ONE, hbar_cap, lambda_cap)

    # -- access ----------------------------------------------------------

    def coefficient(self, h: int, l: int) -> Gaussian:
        return self.coeffs.get((h, l), ZERO)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def orders(self):
        return sorted(self.coeffs)

    def nonzero_count(self) -> int:
        return len(self.coeffs)

    def max_magnitude(self) -> Fraction:
        if not self.coeffs:
            return _Q(0)
        return max(c.magnitude() for c in self.coeffs.values())

    def constant_term(self) -> Gaussian:
        return self.coefficient(0, 0)

    # -- cap bookkeeping ---------------------------------------------------

    def _join_caps(self, other: "FormalSeries", for_mul: bool):
        hc = min(self.hbar_cap, other.hbar_cap)
        lc = min(self.lambda_cap, other.lambda_cap)
        if for_mul:
            hm = self.hbar_min + other.hbar_min
        else:
            hm = min(self.hbar_min, other.hbar_min)
        return hc, lc, hm

    def truncated(self, hbar_cap=None, lambda_cap=None, hbar_min=None):
        """Retruncate from above.  Keys below the caps are always kept, so
        clipping a Laurent-valued residual never hides its negative powers
        (hbar_min only widens if needed)."""
        hc = self.hbar_cap if hbar_cap is None else hbar_cap
        lc = self.lambda_cap if lambda_cap is None else lambda_cap
        hm = self.hbar_min if hbar_min is None else hbar_min
        if self.coeffs:
            hm = min(hm, min(h for (h, _) in self.coeffs))
        return FormalSeries(self.coeffs, hc, lc, hm)

    def shift_hbar(self, k: int) -> "FormalSeries":
        """Multiply by h**k (k may be negative)."""
        table = {(h + k, l): c for (h, l), c in self.coeffs.items()}
        return FormalSeries(table, self.hbar_cap, self.lambda_cap,
                            min(0, self.hbar_min + k))

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, FormalSeries):
            return NotImplemented
        hc, lc, hm = self._join_caps(other, for_mul=False)
        table = dict(self.coeffs)
        for k, c in other.coeffs.items():
            s = table.get(k)
            table[k] = c if s is None else s + c
        return FormalSeries(table, hc, lc, hm)

    def __sub__(self, other):
        if not isinstance(other, FormalSeries):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return FormalSeries({k: -c for k, c in self.coeffs.items()},
                            self.hbar_cap, self.lambda_cap, self.hbar_min)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, Gaussian)):
            g = other if isinstance(other, Gaussian) else Gaussian(other)
            return FormalSeries({k: c * g for k, c in self.coeffs.items()},
                                self.hbar_cap, self.lambda_cap, self.hbar_min)
        if not isinstance(other, FormalSeries):
            return NotImplemented
        hc, lc, hm = self._join_caps(other, for_mul=True)
        table = {}
        for (h1, l1), c1 in self.coeffs.items():
            for (h2, l2), c2 in other.coeffs.items():
                h, l = h1 + h2, l1 + l2
                if h > hc or l > lc:
                    continue
                k = (h, l)
                s = table.get(k)
                p = c1 * c2
                table[k] = p if s is None else s + p
        return FormalSeries(table, hc, lc, hm)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, Gaussian)):
            return self * other
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, FormalSeries):
            return NotImplemented
        return self.coeffs == other.coeffs

    __hash__ = None

    # -- series functions ---------------------------------------------------

    def invert(self) -> "FormalSeries":
        """Multiplicative inverse; requires a unit constant term."""
        from .errors import ZeroConstantTerm
        if self.hbar_min != 0:
            raise ValueError("inversion of Laurent series not supported")
        c0 = self.constant_term()
        if not c0:
            raise ZeroConstantTerm("cannot invert a series with zero constant term")
        # u = self/c0 = 1 + n with n nilpotent at the caps; 1/u = sum (-n)^k
        u = self * (ONE / c0)
        minus_n = FormalSeries.one(self.hbar_cap, self.lambda_cap) - u
        out = FormalSeries.one(self.hbar_cap, self.lambda_cap)
        term = out
        while True:
            term = term * minus_n
            if term.is_zero:
                break
            out = out + term
        return out * (ONE / c0)

    def exp(self) -> "FormalSeries":
        """Exponential; requires zero constant term and nilpotency at caps."""
        from .errors import NonzeroConstantTerm
        if self.constant_term():
            raise NonzeroConstantTerm("exp requires a zero constant term")
        for (h, l) in self.coeffs:
            if l == 0 and h <= 0:
                raise ValueError(
                    f"exponent key {(h, l)} is not nilpotent at these caps")
        out = FormalSeries.one(self.hbar_cap, self.lambda_cap) \
            .truncated(hbar_min=self.hbar_min)
        term = out
        k = 0
        while True:
            k += 1
            term = term * self * Fraction(1, k)
            if term.is_zero:
                break
            out = out + term
        return out

    def __str__(self):
        if not self.coeffs:
            return "0"
        bits = []
        for (h, l) in self.orders():
            c = self.coeffs[(h, l)]
            factors = []
            cs = str(c)
            if ("+" in cs[1:]) or ("-" in cs[1:]):
                cs = f"({cs})"
            factors.append(cs)
            if h:
                factors.append(f"h^{h}" if h != 1 else "h")
            if l:
                factors.append(f"l^{l}" if l != 1 else "l")
            bits.append("*".join(factors))
        return " + ".join(bits)

    def __repr__(self):
        return (f"<series {self} | h<= {self.hbar_cap}, l<= {self.lambda_cap}"
                + (f", h>= {self.hbar_min}" if self.hbar_min else "") + ">")
