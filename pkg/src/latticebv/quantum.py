"""Deformation quantization on polynomial functionals: star product, time
ordering, the formal S-matrix, interacting fields, the free quantum BV
operator, and the master identities (QME, MWI).

Contraction normalizations are fixed in conventions.py; every constant
there is pinned by an exact anchor test.  On this finite lattice all
time-ordered products of polynomial functionals are globally defined, so
the renormalized identities coincide with the unrenormalized ones and the
anomaly term reduces to the plain BV Laplacian contribution.
"""

import copy
from dataclasses import dataclass
from fractions import Fraction

from .classical import ExtendedAction, classical_bv, extended_action
from .errors import BoundarySupport, ConsistencyUnverified, EngineError
from .graded import Generator, GradedPolynomial, antibracket, bv_laplacian
from .model import ModelSpec, PropagatorSet
from .series import FormalSeries, Gaussian, I


def _require_interior(m: ModelSpec, *polys):
    inner = set(m.interior_sites())
    for x in polys:
        if any(s not in inner for s in x.support()):
            raise BoundarySupport("argument is not interior-supported")


def _one_poly(m: ModelSpec) -> GradedPolynomial:
    return GradedPolynomial.scalar(m.one())


def _h_times(m: ModelSpec, factor) -> FormalSeries:
    # built above the reporting cap so that the operand windows, not this
    # bookkeeping scalar, decide the truncation of a contraction product
    return FormalSeries.monomial(1, 0, Gaussian(factor),
                                 m.hbar_cap + m.lambda_cap, m.lambda_cap)


def _one_wide(m: ModelSpec) -> FormalSeries:
    """Unit series that never narrows the window of anything it scales."""
    return FormalSeries.one(m.hbar_cap + m.lambda_cap, m.lambda_cap)


def _i_over_h(m: ModelSpec) -> FormalSeries:
    return FormalSeries.monomial(-1, 0, I, *m.caps, hbar_min=-1)


# -- exact truncation windows for Laurent coefficients --------------------------
#
# Exponential elements carry at least one coupling power per inverse-h
# power.  On coefficients with that property the span of the keys
# (h, l) with h + l > hbar_cap + lambda_cap is closed under
# multiplication by anything, so dropping those keys commutes with every
# ring operation: each key inside the remaining "simplex window"
# h + l <= hbar_cap + lambda_cap (hence every key up to the plain h-cap)
# is the exact coefficient of the untruncated object.  Operations that
# pass through exponential elements therefore compute with the lifted
# h-cap and return the full simplex window, so that identities composed
# from several public operations still come out exactly.


def _lifted(m: ModelSpec) -> ModelSpec:
    lifted = copy.copy(m)
    lifted.hbar_cap = m.hbar_cap + m.lambda_cap
    return lifted


def _drop_corner(x: GradedPolynomial, m: ModelSpec) -> GradedPolynomial:
    """Remove keys outside the exact window h + l <= h-cap + coupling-cap.

    Keys in that corner of a product of windowed operands would need
    operand keys from outside their own windows, so their computed values
    are not meaningful and must not be reported.
    """
    bound = m.hbar_cap + m.lambda_cap
    table = {}
    for key, c in x.terms.items():
        kept = {hl: v for hl, v in c.coeffs.items() if hl[0] + hl[1] <= bound}
        if len(kept) != len(c.coeffs):
            c = FormalSeries(kept, c.hbar_cap, c.lambda_cap, c.hbar_min)
        if not c.is_zero:
            table[key] = c
    return GradedPolynomial._raw(table)


def _recap(x: GradedPolynomial, hbar_cap: int,
           lambda_cap: int) -> GradedPolynomial:
    """Re-truncate every coefficient series to the given caps."""
    table = {}
    for key, c in x.terms.items():
        s = FormalSeries(c.coeffs, hbar_cap, lambda_cap,
                         min(c.hbar_min, -lambda_cap))
        if not s.is_zero:
            table[key] = s
    return GradedPolynomial._raw(table)


def _recap_action(s: ExtendedAction, hbar_cap: int,
                  lambda_cap: int) -> ExtendedAction:
    return ExtendedAction(_recap(s.s00, hbar_cap, lambda_cap),
                          _recap(s.theta0, hbar_cap, lambda_cap),
                          _recap(s.v0, hbar_cap, lambda_cap),
                          _recap(s.theta_int, hbar_cap, lambda_cap))


# -- doubled-copy bookkeeping for cross contractions --------------------------


def _shift_key(key, shift: int):
    return tuple(Generator(g.kind, g.component + shift, g.site) for g in key)


def _doubled(m: ModelSpec, x: GradedPolynomial, copy: int) -> GradedPolynomial:
    if copy == 0:
        return x
    shift = m.n_comp * copy
    return GradedPolynomial._raw(
        {_shift_key(k, shift): c for k, c in x.terms.items()})


def _merge(m: ModelSpec, x: GradedPolynomial) -> GradedPolynomial:
    rules = {}
    one = _one_wide(m)
    for g in x.generators():
        if g.component >= m.n_comp:
            rules[g] = GradedPolynomial.from_generator(
                Generator(g.kind, g.component - m.n_comp, g.site), one)
    return x.substitute(rules) if rules else x


def _split_by_copy_parity(m: ModelSpec, x: GradedPolynomial):
    """Split into four parts indexed by (copy-0 parity, copy-1 parity)."""
    parts = {(0, 0): {}, (0, 1): {}, (1, 0): {}, (1, 1): {}}
    for key, c in x.terms.items():
        p0 = sum(g.parity for g in key if g.component < m.n_comp) & 1
        p1 = sum(g.parity for g in key if g.component >= m.n_comp) & 1
        parts[(p0, p1)][key] = c
    return {k: GradedPolynomial._raw(v) for k, v in parts.items()}


def _cross_once(m: ModelSpec, x: GradedPolynomial,
                kernel) -> GradedPolynomial:
    """One application of the contraction sum_ab K_ab between copies.

    Each contraction term carries the Wick sign: the Koszul sign of
    moving the matched pair of generators adjacent to each other, times
    the kernel entry, with no further operator-ordering signs.  Composed
    right/left derivatives on the merged two-copy algebra realize that
    sign only up to (-1)^{|a||G| + |a||b| + |b||F|} per monomial, where
    |F|, |G| are the copy parities; x is split by those parities so the
    factor can be restored row by row.
    """
    out = GradedPolynomial.zero()
    gens = x.generators()
    left = [g for g in gens if not g.ta and g.component < m.n_comp]
    right = [g for g in gens if not g.ta and g.component >= m.n_comp]
    parts = _split_by_copy_parity(m, x)

    def signed(pa, pb):
        acc = GradedPolynomial.zero()
        for (p0, p1), part in parts.items():
            if part.is_zero:
                continue
            if (pa * p1 + pa * pb + pb * p0) & 1:
                acc = acc - part
            else:
                acc = acc + part
        return acc

    for gb in right:
        b_flat = m.flat(Generator(gb.kind, gb.component - m.n_comp, gb.site))
        db_by_pa = {}
        for pa in (0, 1):
            db_by_pa[pa] = signed(pa, gb.parity).derivative(gb, "left")
        if db_by_pa[0].is_zero and db_by_pa[1].is_zero:
            continue
        for ga in left:
            w = kernel.rows[m.flat(ga)][b_flat]
            if not w:
                continue
            d2 = db_by_pa[ga.parity].derivative(ga, "right")
            if not d2.is_zero:
                out = out + d2 * w
    return out


def _cross_product(m: ModelSpec, f: GradedPolynomial, g: GradedPolynomial,
                   kernel) -> GradedPolynomial:
    """m . exp(h <K, d_r x d_l>) on the doubled copy, then merged."""
    term = _doubled(m, f, 0) * _doubled(m, g, 1)
    acc = term
    k = 0
    while True:
        k += 1
        term = _cross_once(m, term, kernel)
        if term.is_zero:
            break
        term = term * _h_times(m, Fraction(1, k))
        if term.is_zero:
            break
        acc = acc + term
    return _merge(m, acc)


# -- products and time ordering ------------------------------------------------


def star_product(m: ModelSpec, p: PropagatorSet, f: GradedPolynomial,
                 g: GradedPolynomial) -> GradedPolynomial:
    """Noncommutative product with the two-point kernel."""
    _require_interior(m, f, g)
    return _drop_corner(_cross_product(m, f, g, p.two_point), m)


def _time_order_key(m: ModelSpec, key, kernel, memo) -> GradedPolynomial:
    """Wick-order one monomial: T(g . rest) = g x_K T(rest), recursively.

    This is the unique algebra map from the pointwise product to the
    kernel-contraction product that fixes 1 and the linear generators;
    on a graded-symmetric kernel the target product is commutative, so
    the recursion order does not matter.
    """
    got = memo.get(key)
    if got is not None:
        return got
    if len(key) <= 1:
        out = GradedPolynomial._raw({key: _one_wide(m)})
    else:
        head = GradedPolynomial._raw({key[:1]: _one_wide(m)})
        out = _cross_product(m, head, _time_order_key(m, key[1:], kernel, memo),
                             kernel)
    memo[key] = out
    return out


def _wick_order(m: ModelSpec, f: GradedPolynomial, kernel) -> GradedPolynomial:
    memo = {}
    out = GradedPolynomial.zero()
    for key, c in f.terms.items():
        out = out + _time_order_key(m, key, kernel, memo) * c
    return out


def time_order(m: ModelSpec, p: PropagatorSet, f: GradedPolynomial,
               inverse: bool = False) -> GradedPolynomial:
    """Wick ordering with the symmetric-causal kernel; inverse negates it."""
    _require_interior(m, f)
    return _drop_corner(_wick_order(m, f, -p.feynman if inverse else p.feynman),
                        m)


def time_ordered_product(m: ModelSpec, p: PropagatorSet, f: GradedPolynomial,
                         g: GradedPolynomial) -> GradedPolynomial:
    """Commutative (graded) product by cross contraction with the
    symmetric-causal kernel; equals T(T^-1 f . T^-1 g) as a property."""
    _require_interior(m, f, g)
    return _drop_corner(_cross_product(m, f, g, p.feynman), m)


def _exp_classical(m: ModelSpec, x: GradedPolynomial) -> GradedPolynomial:
    const = x.terms.get(())
    if const is not None and const.constant_term():
        raise EngineError("classical exponential needs a zero constant part")
    acc = _one_poly(m)
    term = acc
    k = 0
    while True:
        k += 1
        term = term * x * Fraction(1, k)
        if term.is_zero:
            break
        acc = acc + term
        if k > 4 * (m.hbar_cap + m.lambda_cap + 2):
            raise EngineError("exponential did not terminate at the caps")
    return acc


# -- the formal S-matrix --------------------------------------------------------


@dataclass
class ExponentialElement:
    """prefactor . T(exp(exponent)); the exponent carries the i/h weight.

    Products of elements with proportional exponents under the
    time-ordered product keep this shape exactly; the star inverse is
    computed order by order on the expansion.
    """

    prefactor: GradedPolynomial
    exponent: GradedPolynomial

    def __post_init__(self):
        const = self.exponent.terms.get(())
        if const is not None and const.constant_term():
            raise EngineError(
                "exponent must have a vanishing h^0 l^0 constant part")

    def expand(self, m: ModelSpec, p: PropagatorSet) -> GradedPolynomial:
        lm = _lifted(m)
        body = time_order(
            lm, p, _exp_classical(lm, _recap(self.exponent, *lm.caps)))
        pre = _recap(self.prefactor, *lm.caps)
        if pre.nonzero_monomials() == 1 and () in pre.terms:
            out = body * pre.terms[()]
        else:
            out = star_product(lm, p, pre, body)
        return _drop_corner(out, m)


def formal_smatrix(m: ModelSpec, p: PropagatorSet,
                   v: GradedPolynomial) -> ExponentialElement:
    """T-exponential of (i/h) V; V carries its own coupling powers."""
    _require_interior(m, v)
    return ExponentialElement(_one_poly(m), v * _i_over_h(m))


def _as_unit_series(s: FormalSeries) -> FormalSeries:
    if s.hbar_min != 0:
        if s.coeffs and min(h for (h, _) in s.coeffs) < 0:
            raise EngineError(
                "constant part has genuine Laurent terms; not invertible")
        s = FormalSeries(s.coeffs, s.hbar_cap, s.lambda_cap, 0)
    return s


def _star_inverse_core(m: ModelSpec, p: PropagatorSet,
                       x: GradedPolynomial) -> GradedPolynomial:
    const = x.terms.get(())
    if const is None or not const.constant_term():
        raise EngineError("star inverse needs a unit constant part")
    c_inv = _as_unit_series(const).invert()
    u = x * c_inv
    n = u - _one_poly(m)
    acc = _one_poly(m)
    term = acc
    k = 0
    while True:
        k += 1
        term = star_product(m, p, term, n) * Gaussian(-1)
        if term.is_zero:
            break
        acc = acc + term
        if k > 2 * (m.hbar_cap + m.lambda_cap + 2):
            raise EngineError("star inverse did not terminate at the caps")
    return acc * c_inv


def star_inverse(m: ModelSpec, p: PropagatorSet,
                 x: GradedPolynomial) -> GradedPolynomial:
    """Order-by-order inverse of 1 + nilpotent in the star algebra."""
    lm = _lifted(m)
    return _drop_corner(_star_inverse_core(lm, p, _recap(x, *lm.caps)), m)


class _MollerTwist:
    """Shared machinery for the quantum Moller map and its inverse.

    forward(f) = S^-1 * T(exp((i/h)V) f); back(g) = exp(-(i/h)V) T^-1(S * g).
    With V = 0 the pair reduces to time ordering and its inverse, and
    back(forward(f)) = f exactly to the lifted caps.  back runs on the
    unchecked engine because images of the differential may touch the
    boundary stencil.
    """

    def __init__(self, m: ModelSpec, p: PropagatorSet, v: GradedPolynomial):
        self.lm = _lifted(m)
        self.p = p
        expo = _recap(v, *self.lm.caps) * _i_over_h(self.lm)
        self.ecl = _exp_classical(self.lm, expo)
        self.ecl_neg = _exp_classical(self.lm, expo * Gaussian(-1))
        self.s_mat = _wick_order(self.lm, self.ecl, p.feynman)
        self.s_inv = _star_inverse_core(self.lm, p, self.s_mat)

    def forward(self, f: GradedPolynomial) -> GradedPolynomial:
        ordered = _wick_order(
            self.lm, self.ecl * _recap(f, *self.lm.caps), self.p.feynman)
        return _cross_product(self.lm, self.s_inv, ordered, self.p.two_point)

    def back(self, g: GradedPolynomial) -> GradedPolynomial:
        recovered = _cross_product(self.lm, self.s_mat, g, self.p.two_point)
        return self.ecl_neg * _wick_order(self.lm, recovered, -self.p.feynman)


def interacting_field(m: ModelSpec, p: PropagatorSet, f: GradedPolynomial,
                      v: GradedPolynomial) -> GradedPolynomial:
    """Relative S-matrix construction S(V)^-1 star (S(V) .T T(f))."""
    _require_interior(m, f, v)
    return _drop_corner(_MollerTwist(m, p, v).forward(f), m)


def interacting_star(m: ModelSpec, p: PropagatorSet, f: GradedPolynomial,
                     g: GradedPolynomial, v: GradedPolynomial) -> GradedPolynomial:
    """Conjugated product: untwist the star product of the twisted factors."""
    _require_interior(m, f, g, v)
    tw = _MollerTwist(m, p, v)
    prod = _cross_product(tw.lm, tw.forward(f), tw.forward(g), p.two_point)
    return _drop_corner(tw.back(prod), m)


# -- quantum BV ------------------------------------------------------------------


def quantum_bv_free(m: ModelSpec, p: PropagatorSet, x: GradedPolynomial,
                    s: ExtendedAction):
    """Conjugated operator T^-1 s0 T alongside the local formula
    s0 - i h lap; the pair must agree to the caps."""
    if not p.consistency_ok:
        raise ConsistencyUnverified(
            "run consistency_check before quantum BV operations")
    _require_interior(m, x)
    # the differential spreads support by the stencil radius, so the
    # outer orderings run on the unchecked engine; the identity needs
    # interior support only for x itself
    conjugated = _wick_order(
        m, classical_bv(_wick_order(m, x, p.feynman), s, "s0"), -p.feynman)
    ih = FormalSeries.monomial(1, 0, I, *m.caps)
    formula = classical_bv(x, s, "s0") - bv_laplacian(x) * ih
    return conjugated, formula


def quantum_bv_interacting(m: ModelSpec, p: PropagatorSet,
                           x: GradedPolynomial, s: ExtendedAction):
    """Free differential twisted by the interacting-field map, alongside
    the local formula {., S0+V} - i h lap.

    The twist is the same map interacting_field computes, so with no
    interaction it reduces to conjugation by time ordering: forward is
    S^-1 * T(exp((i/h)V) x), back is exp(-(i/h)V) T^-1(S * .).  A valid
    master equation makes the composite local, so the pair must agree to
    the caps.
    """
    if not p.consistency_ok:
        raise ConsistencyUnverified(
            "run consistency_check before quantum BV operations")
    _require_interior(m, x)
    tw = _MollerTwist(m, p, s.interaction)
    moved = classical_bv(tw.forward(x), _recap_action(s, *tw.lm.caps), "s0")
    conjugated = _drop_corner(tw.back(moved), m)
    ih = FormalSeries.monomial(1, 0, I, *m.caps)
    formula = classical_bv(x, s, "s") - bv_laplacian(x) * ih
    return conjugated, formula


def qme_check(s: ExtendedAction, m: ModelSpec) -> GradedPolynomial:
    """(1/2){S0+V, S0+V} - i h lap(S0+V), interior-supported part."""
    half = Gaussian(1) / Gaussian(2)
    ih = FormalSeries.monomial(1, 0, I, *m.caps)
    full = antibracket(s.total, s.total) * half - bv_laplacian(s.total) * ih
    inner = set(m.interior_sites())
    table = {k: c for k, c in full.terms.items()
             if all(g.site in inner for g in k)}
    return GradedPolynomial._raw(table)


# -- master Ward identity ---------------------------------------------------------


@dataclass
class MWIReport:
    entries: list

    @property
    def passed(self) -> bool:
        return all(e["pass"] for e in self.entries)

    def to_json(self):
        return list(self.entries)

    def __str__(self):
        bad = [e for e in self.entries if not e["pass"]]
        if not bad:
            return f"mwi: pass ({len(self.entries)} orders)"
        lines = [f"mwi: FAIL at {len(bad)} orders"]
        for e in bad[:6]:
            lines.append(f"  h^{e['hbar_order']} l^{e['lambda_order']}: "
                         f"{len(e['residual_terms'])} terms")
        return "\n".join(lines)


def mwi_check(m: ModelSpec, p: PropagatorSet, v: GradedPolynomial,
              f: GradedPolynomial = None) -> MWIReport:
    """Ward identity for the free differential applied to S(V) .T f.

    With f = 1 this is the plain invariance identity whose vanishing
    right-hand side is the quantum master equation; with general f it is
    the anomalous form, where on this finite lattice the anomaly term is
    the plain Laplacian derivative lap(f).
    """
    _require_interior(m, v)
    if f is not None:
        _require_interior(m, f)
    lm = _lifted(m)
    f = _one_poly(lm) if f is None else _recap(f, *lm.caps)
    v = _recap(v, *lm.caps)
    s0_poly = _recap(extended_action(m).free, *lm.caps)
    exponent = v * _i_over_h(lm)
    ecl = _exp_classical(lm, exponent)

    lhs = antibracket(time_order(lm, p, ecl * f), s0_poly)

    half = Gaussian(1) / Gaussian(2)
    ih = FormalSeries.monomial(1, 0, I, *lm.caps)
    sv = s0_poly + v
    qme_poly = antibracket(sv, sv) * half - bv_laplacian(v) * ih
    inner = (antibracket(f, sv) - bv_laplacian(f) * ih
             + f * qme_poly * _i_over_h(lm))
    # the brackets with S0 spread support by the stencil radius
    rhs = _wick_order(lm, ecl * inner, p.feynman) * _i_over_h(lm)

    diff = lhs - rhs
    entries = []
    lc = m.lambda_cap
    for h in range(-lc - 1, m.hbar_cap + 1):
        for l in range(lc + 1):
            residual = []
            for key, series in diff.terms.items():
                if series.coefficient(h, l):
                    residual.append(
                        str(GradedPolynomial._raw({key: series})))
            entries.append({
                "hbar_order": h, "lambda_order": l,
                "residual_terms": residual, "pass": not residual,
            })
    return MWIReport(entries)
