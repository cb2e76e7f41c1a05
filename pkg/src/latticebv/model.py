"""Lattice models: kinetic operators, causal Green functions, contraction
kernels, and cutoff local functionals.

A model fixes a finite chain of ``sites`` and a ``multiplet`` of named
components, each a field-type generator kind.  Flattened matrix indices are
``component * sites + site``.  The kinetic operator P is the gauge-fixed
quadratic form of the antifield-free action; K collects the coefficients of
the linearized symmetry (the antifield part of the free action).

Identities involving Green functions hold on interior rows/pairs only: the
chain has edges, and the retarded/advanced solves pin their free data at
the past/future edge respectively.  The interior is the site range with a
full stencil margin on both ends.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
import json

from .errors import (
    BadH, ConfigError, CutoffDoesNotFit, EngineError, NotRetardedInvertible,
)
from .graded import Generator, GradedPolynomial, Kind
from .linalg import Matrix, solve_constrained_multi
from .series import FormalSeries, Gaussian, I, ONE, ZERO, rat

FIELD_KIND_NAMES = {
    "field": Kind.FIELD,
    "ghost": Kind.GHOST,
    "antighost": Kind.ANTIGHOST,
    "nl_field": Kind.NL_FIELD,
}


@dataclass
class ModelSpec:
    name: str
    sites: int
    multiplet: tuple            # ((name, Kind), ...) field-type kinds only
    p_matrix: Matrix            # gauge-fixed kinetic operator
    k_matrix: Matrix            # linearized symmetry coefficients
    s00: GradedPolynomial       # antifield-free quadratic action
    theta0: GradedPolynomial    # antifield part of the free action
    interaction: GradedPolynomial
    gauge_fermion: object = None
    hbar_cap: int = 2
    lambda_cap: int = 2
    h_matrix: object = None     # optional symmetric two-point part
    # sitewise ghost self-bracket coefficients {(a, b, c): Gaussian} for
    # nonabelian symmetry algebras; both bundled models are abelian
    structure_constants: object = None

    # -- indexing ---------------------------------------------------------

    @property
    def n_comp(self) -> int:
        return len(self.multiplet)

    @property
    def dim(self) -> int:
        return self.n_comp * self.sites

    def component_index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.multiplet):
            if n == name:
                return i
        raise KeyError(f"no component named {name!r}")

    def kind_of(self, comp: int) -> Kind:
        return self.multiplet[comp][1]

    def gen(self, comp, site: int) -> Generator:
        """Field-type generator by component index or name."""
        if isinstance(comp, str):
            comp = self.component_index(comp)
        return Generator(self.kind_of(comp), comp, site)

    def flat(self, g: Generator) -> int:
        return g.component * self.sites + g.site

    def unflat(self, idx: int) -> Generator:
        comp, site = divmod(idx, self.sites)
        return Generator(self.kind_of(comp), comp, site)

    def parity_of_flat(self, idx: int) -> int:
        comp = idx // self.sites
        return Generator(self.kind_of(comp), comp, 0).parity

    def field_generators(self):
        for comp in range(self.n_comp):
            for site in range(self.sites):
                yield self.gen(comp, site)

    # -- caps and series helpers -------------------------------------------

    @property
    def caps(self):
        return (self.hbar_cap, self.lambda_cap)

    def one(self) -> FormalSeries:
        return FormalSeries.one(*self.caps)

    def scalar(self, value) -> FormalSeries:
        return FormalSeries.const(value, *self.caps)

    def gen_poly(self, comp, site: int) -> GradedPolynomial:
        return GradedPolynomial.from_generator(self.gen(comp, site), self.one())

    def poly(self, g: Generator) -> GradedPolynomial:
        return GradedPolynomial.from_generator(g, self.one())

    # -- geometry ------------------------------------------------------------

    def stencil_radius(self) -> int:
        r = 0
        n = self.sites
        for i, row in enumerate(self.p_matrix.rows):
            si = i % n
            for j, a in enumerate(row):
                if a:
                    r = max(r, abs(si - j % n))
        return r

    def interior_sites(self) -> range:
        s = self.stencil_radius()
        return range(s, self.sites - s)

    def interior_flats(self):
        inner = set(self.interior_sites())
        return [c * self.sites + x
                for c in range(self.n_comp) for x in range(self.sites)
                if x in inner]

    # -- actions ----------------------------------------------------------------

    def free_action(self) -> GradedPolynomial:
        return self.s00 + self.theta0

    def total_action(self) -> GradedPolynomial:
        return self.free_action() + self.interaction


# -- quadratic form <-> matrix --------------------------------------------------


def action_from_matrix(m: ModelSpec, p: Matrix) -> GradedPolynomial:
    """(1/2) sum_ab P[a,b] g_a g_b as a graded polynomial."""
    half = m.scalar(rat(1, 2))
    table = {}
    for a in range(m.dim):
        ga = m.unflat(a)
        row = p.rows[a]
        for b in range(m.dim):
            if not row[b]:
                continue
            key = (ga, m.unflat(b))
            coeff = half * row[b]
            prior = table.get(key)
            table[key] = coeff if prior is None else prior + coeff
    return GradedPolynomial(table)


def theta_from_matrix(m: ModelSpec, k: Matrix) -> GradedPolynomial:
    """sum_ab antifield_a K[a,b] g_b."""
    table = {}
    for a in range(m.dim):
        ga = m.unflat(a).antifield()
        row = k.rows[a]
        for b in range(m.dim):
            if not row[b]:
                continue
            key = (ga, m.unflat(b))
            coeff = m.scalar(row[b])
            prior = table.get(key)
            table[key] = coeff if prior is None else prior + coeff
    return GradedPolynomial(table)


def quadratic_matrix(m: ModelSpec, poly: GradedPolynomial) -> Matrix:
    """P[a,b] = d_r(d_l poly / d g_a) / d g_b, as exact scalars.

    Inverts action_from_matrix for graded-symmetric P; the engine's own
    derivative conventions supply all signs.
    """
    out = Matrix.zeros(m.dim, m.dim)
    for a in range(m.dim):
        da = poly.derivative(m.unflat(a), "left")
        if da.is_zero:
            continue
        for b in range(m.dim):
            ent = da.derivative(m.unflat(b), "right")
            series = ent.terms.get(())
            if series is None:
                continue
            if set(series.coeffs) - {(0, 0)}:
                raise EngineError("quadratic form has non-constant coefficients")
            out.rows[a][b] = series.constant_term()
    return out


def symmetry_matrix(m: ModelSpec, theta: GradedPolynomial) -> Matrix:
    """K[a,b] = d_r(d_l theta / d antifield_a) / d g_b."""
    out = Matrix.zeros(m.dim, m.dim)
    for a in range(m.dim):
        da = theta.derivative(m.unflat(a).antifield(), "left")
        if da.is_zero:
            continue
        for b in range(m.dim):
            ent = da.derivative(m.unflat(b), "right")
            series = ent.terms.get(())
            if series is None:
                continue
            out.rows[a][b] = series.constant_term()
    return out


# -- causal Green functions ---------------------------------------------------


def _causal_green(p: Matrix, n_comp: int, sites: int, radius: int):
    """Blockwise lower-triangular right inverse of p on future-complete rows.

    For each target column, unknowns live at sites >= the column site;
    equations are the rows whose stencil fits (site <= sites-1-radius).
    Unknowns are offered as pivots from the latest site backwards, so the
    solve's free variables sit at the earliest sites and are set to zero
    (no data in the far past).  Returns the Green matrix or the site where
    a column's system is inconsistent.
    """
    dim = n_comp * sites
    rows_kept = [c * sites + x
                 for c in range(n_comp) for x in range(sites - radius)]
    green = Matrix.zeros(dim, dim)
    for jsite in range(sites):
        unknowns = [c * sites + x
                    for c in range(n_comp) for x in range(jsite, sites)]
        order = sorted(range(len(unknowns)),
                       key=lambda u: (-(unknowns[u] % sites), unknowns[u]))
        eq_rows = [[p.rows[r][u] for u in unknowns] for r in rows_kept]
        targets = [beta * sites + jsite for beta in range(n_comp)]
        rhs_cols = [[ONE if r == t else ZERO for r in rows_kept]
                    for t in targets]
        sols = solve_constrained_multi(eq_rows, rhs_cols, order)
        if sols is None:
            return None, jsite
        for target, sol in zip(targets, sols):
            for u, val in zip(unknowns, sol):
                if val:
                    green.rows[u][target] = val
    return green, None


def _graded_transpose(m: ModelSpec, mat: Matrix) -> Matrix:
    out = Matrix.zeros(m.dim, m.dim)
    for a in range(m.dim):
        pa = m.parity_of_flat(a)
        for b in range(m.dim):
            v = mat.rows[b][a]
            if v:
                out.rows[a][b] = -v if pa and m.parity_of_flat(b) else v
    return out


class PropagatorSet:
    """Green functions and two-point kernels of a model.

    Attributes: retarded, advanced, pauli_jordan, symmetric_part, two_point,
    feynman (all Matrix), and consistency_ok, set to True only by a passing
    consistency_check run.
    """

    def __init__(self, retarded, advanced, pauli_jordan, symmetric_part,
                 two_point, feynman):
        self.retarded = retarded
        self.advanced = advanced
        self.pauli_jordan = pauli_jordan
        self.symmetric_part = symmetric_part
        self.two_point = two_point
        self.feynman = feynman
        self.consistency_ok = False


def _interior_green_residual(m: ModelSpec, green: Matrix) -> int:
    """Count deviations of P @ green from the identity on interior rows."""
    prod = m.p_matrix * green
    inner = set(m.interior_sites())
    bad = 0
    for a in range(m.dim):
        if a % m.sites not in inner:
            continue
        for b in range(m.dim):
            if prod.rows[a][b] != (ONE if a == b else ZERO):
                bad += 1
    return bad


def _graded_antisym_residual(m: ModelSpec, mat: Matrix, interior) -> int:
    bad = 0
    for a in interior:
        pa = m.parity_of_flat(a)
        for b in interior:
            pb = m.parity_of_flat(b)
            sign = -1 if (pa and pb) else 1
            if mat.rows[a][b] + sign * mat.rows[b][a]:
                bad += 1
    return bad


def _check_parity_even(m: ModelSpec, mat: Matrix, what: str):
    for a in range(m.dim):
        pa = m.parity_of_flat(a)
        for b in range(m.dim):
            if mat.rows[a][b] and pa != m.parity_of_flat(b):
                raise EngineError(
                    f"{what} mixes parities at {(m.unflat(a), m.unflat(b))}")


def build_propagators(m: ModelSpec, h: Matrix = None) -> PropagatorSet:
    """Solve the causal problems and assemble the two-point kernels.

    two_point = (i/2) pauli_jordan + H, feynman = (i/2)(adv + ret) + H.
    H defaults to the model's h_matrix or zero; it must be parity-even,
    graded-symmetric, and annihilated by P on interior rows (BadH).
    """
    radius = m.stencil_radius()
    if 2 * radius >= m.sites:
        raise EngineError("lattice too small for the stencil")
    ret, blocked = _causal_green(m.p_matrix, m.n_comp, m.sites, radius)
    if ret is None:
        raise NotRetardedInvertible(blocked)
    # For a graded-symmetric P the advanced solution is the causal
    # reflection of the retarded one, i.e. its graded transpose.  Taking
    # it by transposition (instead of a second solve) makes the
    # commutator kernel graded-antisymmetric and the symmetric kernels
    # graded-symmetric on every pair of sites, boundary included, which
    # the conjugation identities of the deformed products rely on.
    adv = _graded_transpose(m, ret)
    pa_dev = _interior_green_residual(m, adv)
    if pa_dev:
        raise EngineError(
            "transpose of the retarded solution is not an advanced Green "
            f"function: {pa_dev} interior-row deviations")

    # structural checks on the solves themselves
    sites = m.sites
    for a in range(m.dim):
        for b in range(m.dim):
            if (a % sites) < (b % sites) and ret.rows[a][b]:
                raise EngineError("retarded matrix not lower triangular")
            if (a % sites) > (b % sites) and adv.rows[a][b]:
                raise EngineError("advanced matrix not upper triangular")

    pj = ret - adv
    if _graded_antisym_residual(m, pj, range(m.dim)):
        raise EngineError("commutator function not graded-antisymmetric")

    if h is None:
        h = m.h_matrix if m.h_matrix is not None else Matrix.zeros(m.dim, m.dim)
    _validate_h(m, h)

    half_i = I * Fraction(1, 2)
    w = pj * half_i + h
    feyn = (adv + ret) * half_i + h
    for mat, name in ((pj, "pauli_jordan"), (w, "two_point"),
                      (feyn, "feynman")):
        _check_parity_even(m, mat, name)
    return PropagatorSet(ret, adv, pj, h, w, feyn)


def _validate_h(m: ModelSpec, h: Matrix):
    if h.shape != (m.dim, m.dim):
        raise BadH("H has the wrong shape")
    try:
        _check_parity_even(m, h, "H")
    except EngineError as e:
        raise BadH(str(e))
    for a in range(m.dim):
        pa = m.parity_of_flat(a)
        for b in range(m.dim):
            pb = m.parity_of_flat(b)
            sign = 1 if not (pa and pb) else -1
            if h.rows[a][b] - sign * h.rows[b][a]:
                raise BadH("H is not graded-symmetric")
    ph = m.p_matrix * h
    inner = set(m.interior_sites())
    for a in range(m.dim):
        if a % m.sites not in inner:
            continue
        if any(ph.rows[a]):
            raise BadH(f"P @ H nonzero at interior row {m.unflat(a)}")


@dataclass
class ConsistencyReport:
    residuals: dict
    passed: bool

    def __str__(self):
        lines = [f"consistency: {'pass' if self.passed else 'FAIL'}"]
        for name, (count, mag) in self.residuals.items():
            lines.append(f"  {name}: {count} nonzero entries"
                         + (f", max |entry| {mag}" if count else ""))
        return "\n".join(lines)


def consistency_check(m: ModelSpec, p: PropagatorSet) -> ConsistencyReport:
    """Compatibility of the linearized symmetry with every kernel.

    For M in {retarded, advanced, pauli_jordan, symmetric_part} the
    residual  (K M)_ab - (-1)^{|a|} (M K^T)_ab  must vanish on interior
    index pairs: the symmetry matrix intertwines each kernel with itself
    up to the Koszul sign of the row generator.  A passing run marks the
    propagator set as consistency-verified (required by the quantum layer,
    where the free symmetry differential must commute with contraction).
    """
    interior = m.interior_flats()
    kt = m.k_matrix.transpose()
    residuals = {}
    passed = True
    for name, mat in (("retarded", p.retarded), ("advanced", p.advanced),
                      ("pauli_jordan", p.pauli_jordan),
                      ("symmetric_part", p.symmetric_part)):
        km = m.k_matrix * mat
        mkt = mat * kt
        count = 0
        mag = Fraction(0)
        for a in interior:
            sign = -1 if m.parity_of_flat(a) else 1
            for b in interior:
                v = km.rows[a][b] - sign * mkt.rows[a][b]
                if v:
                    count += 1
                    mag = max(mag, v.magnitude())
        residuals[name] = (count, mag)
        if count:
            passed = False
    p.consistency_ok = passed
    return ConsistencyReport(residuals, passed)


# -- cutoff local functionals -----------------------------------------------


@dataclass
class CutoffLagrangian:
    """Family of site densities with a finite stencil radius."""

    densities: dict
    radius: int

    def weighted(self, cutoff) -> GradedPolynomial:
        """sum_x f(x) density_x for a cutoff f given as dict site -> scalar."""
        out = GradedPolynomial.zero()
        for x, w in cutoff.items():
            d = self.densities.get(x)
            if d is None or not w:
                continue
            out = out + d * w
        return out

    def window_cutoff(self, lo: int, hi: int):
        return {x: ONE for x in range(lo, hi + 1)}


def free_lagrangian(m: ModelSpec) -> CutoffLagrangian:
    """Densities (1/2) sum_alpha g_{alpha,x} (P g)_{alpha,x}."""
    radius = m.stencil_radius()
    densities = {}
    half = m.scalar(rat(1, 2))
    for x in range(m.sites):
        table = {}
        for c in range(m.n_comp):
            a = c * m.sites + x
            ga = m.unflat(a)
            for b, v in enumerate(m.p_matrix.rows[a]):
                if not v:
                    continue
                key = (ga, m.unflat(b))
                coeff = half * v
                prior = table.get(key)
                table[key] = coeff if prior is None else prior + coeff
        densities[x] = GradedPolynomial(table)
    return CutoffLagrangian(densities, radius)


def as_cutoff_lagrangian(poly: GradedPolynomial) -> CutoffLagrangian:
    """Distribute a local polynomial into site densities (by minimum site)."""
    densities = {}
    radius = 0
    for key, c in poly.terms.items():
        if not key:
            raise EngineError("constant terms have no site")
        lo = min(g.site for g in key)
        hi = max(g.site for g in key)
        radius = max(radius, hi - lo)
        densities.setdefault(lo, GradedPolynomial.zero())
        densities[lo] = densities[lo] + GradedPolynomial._raw({key: c})
    return CutoffLagrangian(densities, radius)


def delta_L(m: ModelSpec, lagrangian: CutoffLagrangian, psi) -> GradedPolynomial:
    """Relative functional L(f)[phi + psi] - L(f)[phi] for a compactly
    supported shift configuration psi (dict Generator -> scalar/series),
    with f = 1 on a window covering supp(psi) plus the stencil radius.

    The result is independent of the choice of f among admissible cutoffs;
    tests verify this with a second, wider window.  CutoffDoesNotFit when
    the window would stick out of the lattice.
    """
    return _delta_L_window(m, lagrangian, psi, extra=0)


def _delta_L_window(m: ModelSpec, lagrangian: CutoffLagrangian, psi,
                    extra: int) -> GradedPolynomial:
    supp = [g.site for g, v in psi.items() if v]
    if not supp:
        return GradedPolynomial.zero()
    r = lagrangian.radius + extra
    lo, hi = min(supp) - r, max(supp) + r
    if lo < 0 or hi > m.sites - 1:
        raise CutoffDoesNotFit(
            f"window [{lo}, {hi}] exceeds lattice [0, {m.sites - 1}]")
    lf = lagrangian.weighted(lagrangian.window_cutoff(lo, hi))
    rules = {}
    for g, v in psi.items():
        if g.parity:
            raise EngineError("shift configurations must be even")
        series = v if isinstance(v, FormalSeries) else m.scalar(v)
        rules[g] = m.poly(g) + GradedPolynomial.scalar(series)
    return lf.substitute(rules) - lf


def spacetime_support(f: GradedPolynomial):
    return f.support()


def additivity_check(m: ModelSpec, lagrangian: CutoffLagrangian, trials: int,
                     rng) -> int:
    """delta_L is additive over shifts with well-separated supports.

    Returns the number of failing trials (zero for a local density family).
    """
    gap = 2 * lagrangian.radius + 1
    failures = 0
    for _ in range(trials):
        width = rng.randint(1, 2)
        lo1 = rng.randint(lagrangian.radius,
                          m.sites - 1 - lagrangian.radius - 2 * width - gap)
        lo2 = lo1 + width + gap
        psi1, psi2 = {}, {}
        for w in range(width):
            comp = rng.randrange(m.n_comp)
            if m.kind_of(comp) in (Kind.GHOST, Kind.ANTIGHOST):
                comp = 0
            psi1[m.gen(comp, lo1 + w)] = Gaussian(rng.randint(1, 3))
            psi2[m.gen(comp, lo2 + w)] = Gaussian(rng.randint(1, 3))
        both = dict(psi1)
        both.update(psi2)
        lhs = _delta_L_window(m, lagrangian, both, extra=0)
        rhs = delta_L(m, lagrangian, psi1) + delta_L(m, lagrangian, psi2)
        if not (lhs - rhs).is_zero:
            failures += 1
    return failures


# -- bundled models ------------------------------------------------------------


def _interior_cutoff(m: ModelSpec):
    return {x: ONE for x in m.interior_sites()}


def model_a(sites: int = 16, mass=0, hbar_cap: int = 2,
            lambda_cap: int = 2) -> ModelSpec:
    """Single scalar on a chain: P = tridiag(-1, 2 - mass^2, -1), cubic
    interaction (coupling/6) sum_interior phi_x^3."""
    m = ModelSpec(
        name="A", sites=sites, multiplet=(("phi", Kind.FIELD),),
        p_matrix=Matrix.zeros(sites, sites), k_matrix=Matrix.zeros(sites, sites),
        s00=GradedPolynomial.zero(), theta0=GradedPolynomial.zero(),
        interaction=GradedPolynomial.zero(),
        hbar_cap=hbar_cap, lambda_cap=lambda_cap)
    diag = Gaussian(2) - Gaussian(mass) * Gaussian(mass)
    for x in range(sites):
        m.p_matrix.rows[x][x] = diag
        if x + 1 < sites:
            m.p_matrix.rows[x][x + 1] = Gaussian(-1)
            m.p_matrix.rows[x + 1][x] = Gaussian(-1)
    m.s00 = action_from_matrix(m, m.p_matrix)
    sixth = FormalSeries.monomial(0, 1, rat(1, 6), hbar_cap, lambda_cap)
    v = GradedPolynomial.zero()
    for x in m.interior_sites():
        g = m.gen(0, x)
        v = v + GradedPolynomial({(g, g, g): sixth})
    m.interaction = v
    return m


def nontrivial_h(m: ModelSpec) -> Matrix:
    """A nonzero admissible symmetric part for each bundled model."""
    h = Matrix.zeros(m.dim, m.dim)
    if m.name == "A":
        # harmonic in each index: annihilated by the massless P in the bulk
        for x in range(m.sites):
            for y in range(m.sites):
                h.rows[x][y] = Gaussian(x * y)
        return h
    if m.name.startswith("B"):
        q = m.component_index("q")
        r = m.component_index("r")
        quarter = rat(1, 4)
        sgn = {(q, q): ONE, (r, r): ONE,
               (q, r): -ONE, (r, q): -ONE}
        for (ca, cb), s in sgn.items():
            for x in range(m.sites):
                for y in range(m.sites):
                    h.rows[ca * m.sites + x][cb * m.sites + y] = quarter * s
        return h
    raise EngineError(f"no bundled H for model {m.name}")


def gauge_fix_rules(m: ModelSpec, psi: GradedPolynomial):
    """Canonical transformation generated by a gauge fermion:
    antifield_a -> antifield_a + d_r psi / d field_a, fields unchanged."""
    rules = {}
    for g in m.field_generators():
        d = psi.derivative(g, "right")
        if not d.is_zero:
            af = g.antifield()
            rules[af] = m.poly(af) + d
    return rules


def _model_b_raw(sites, gauge_a, gauge_mu, hbar_cap, lambda_cap):
    multiplet = (("q", Kind.FIELD), ("r", Kind.FIELD), ("c", Kind.GHOST),
                 ("cbar", Kind.ANTIGHOST), ("B", Kind.NL_FIELD))
    m = ModelSpec(
        name="B", sites=sites, multiplet=multiplet,
        p_matrix=Matrix.zeros(5 * sites, 5 * sites),
        k_matrix=Matrix.zeros(5 * sites, 5 * sites),
        s00=GradedPolynomial.zero(), theta0=GradedPolynomial.zero(),
        interaction=GradedPolynomial.zero(),
        hbar_cap=hbar_cap, lambda_cap=lambda_cap)
    one = m.one()
    half = m.scalar(rat(1, 2))

    def gp(*gens, coeff=None):
        return GradedPolynomial({tuple(gens): coeff if coeff is not None else one})

    q = lambda x: m.gen("q", x)
    r = lambda x: m.gen("r", x)
    c = lambda x: m.gen("c", x)
    cbar = lambda x: m.gen("cbar", x)
    B = lambda x: m.gen("B", x)

    # free matter action: (1/2) sum (d(q - r))_x^2, forward difference
    s00 = GradedPolynomial.zero()
    for x in range(sites - 1):
        du = (m.poly(q(x + 1)) - m.poly(q(x))
              - m.poly(r(x + 1)) + m.poly(r(x)))
        s00 = s00 + du * du * half

    # linearized shift symmetry: q and r move by the ghost; the antighost
    # pairs with the auxiliary through an i to keep the action real
    theta0 = GradedPolynomial.zero()
    for x in range(sites):
        theta0 = theta0 + (gp(q(x).antifield(), c(x))
                           + gp(r(x).antifield(), c(x))
                           + gp(cbar(x).antifield(), B(x)) * I)

    # gauge condition (a/2) B_x + (d(q + r))_x + mu (q + r)_x.  The local
    # mu term keeps every antighost row populated (a pure forward
    # difference decouples the last antighost, killing the advanced
    # solve) and must differ from 0 and 1, the values at which an edge
    # ghost mode drops out of the action.
    a_half = m.scalar(Gaussian(Fraction(gauge_a)) * rat(1, 2))
    mu = m.scalar(Gaussian(Fraction(gauge_mu)))
    psi = GradedPolynomial.zero()
    for x in range(sites):
        psi = psi + gp(cbar(x), B(x), coeff=a_half)
        psi = psi + gp(cbar(x)) * (m.poly(q(x)) + m.poly(r(x))) * mu
        if x + 1 < sites:
            grad = (m.poly(q(x + 1)) - m.poly(q(x))
                    + m.poly(r(x + 1)) - m.poly(r(x)))
            psi = psi + gp(cbar(x)) * grad

    # gauge-invariant cubic interaction in u = q - r
    sixth = FormalSeries.monomial(0, 1, rat(1, 6), hbar_cap, lambda_cap)
    v = GradedPolynomial.zero()
    for x in range(2, sites - 2):
        u = m.poly(q(x)) - m.poly(r(x))
        v = v + u * u * u * sixth

    m.s00 = s00
    m.theta0 = theta0
    m.interaction = v
    m.gauge_fermion = psi
    m.k_matrix = symmetry_matrix(m, theta0)
    m.p_matrix = quadratic_matrix(m, s00)
    return m


def model_b_ungauged(sites: int = 12, gauge_a=1, gauge_mu=2,
                     hbar_cap: int = 2, lambda_cap: int = 2) -> ModelSpec:
    """Two-component shift-gauge model before gauge fixing.  Its P is not
    retarded-invertible (the gauge direction has no kinetic term)."""
    return _model_b_raw(sites, gauge_a, gauge_mu, hbar_cap, lambda_cap)


def model_b(sites: int = 12, gauge_a=1, gauge_mu=2, hbar_cap: int = 2,
            lambda_cap: int = 2) -> ModelSpec:
    """Gauge-fixed two-component shift-gauge model."""
    m = _model_b_raw(sites, gauge_a, gauge_mu, hbar_cap, lambda_cap)
    rules = gauge_fix_rules(m, m.gauge_fermion)
    total = (m.s00 + m.theta0).substitute(rules)
    m.s00 = total.ta_part(0)
    m.theta0 = total.ta_part(1)
    m.p_matrix = quadratic_matrix(m, m.s00)
    m.k_matrix = symmetry_matrix(m, m.theta0)
    return m


# -- configuration files -----------------------------------------------------


def _reject_floats(node, path="$"):
    if isinstance(node, float):
        raise ConfigError(f"float value at {path}; use rational strings")
    if isinstance(node, dict):
        for k, v in node.items():
            _reject_floats(v, f"{path}.{k}")
    elif isinstance(node, list):
        for i, v in enumerate(node):
            _reject_floats(v, f"{path}[{i}]")


def _parse_entry(value, path):
    if isinstance(value, bool):
        raise ConfigError(f"boolean at {path}")
    if isinstance(value, int):
        return Gaussian(value)
    if isinstance(value, str):
        try:
            return Gaussian.parse(value)
        except ValueError as e:
            raise ConfigError(f"bad entry at {path}: {e}")
    raise ConfigError(f"expected rational string at {path}")


def _parse_matrix(node, dim, path):
    if not isinstance(node, list) or len(node) != dim:
        raise ConfigError(f"{path} must be a {dim}x{dim} array")
    rows = []
    for i, row in enumerate(node):
        if not isinstance(row, list) or len(row) != dim:
            raise ConfigError(f"{path}[{i}] must have {dim} entries")
        rows.append([_parse_entry(v, f"{path}[{i}][{j}]")
                     for j, v in enumerate(row)])
    return Matrix(rows)


_ALL_KIND_NAMES = {k.name.lower(): k for k in Kind}


def parse_monomials(node, m: ModelSpec, path) -> GradedPolynomial:
    if not isinstance(node, list):
        raise ConfigError(f"{path} must be a list of monomials")
    total = GradedPolynomial.zero()
    for i, mono in enumerate(node):
        here = f"{path}[{i}]"
        if not isinstance(mono, dict):
            raise ConfigError(f"{here} must be an object")
        coeff = _parse_entry(mono.get("coefficient", 1), f"{here}.coefficient")
        h = mono.get("hbar_power", 0)
        l = mono.get("lambda_power", 0)
        if not isinstance(h, int) or not isinstance(l, int):
            raise ConfigError(f"{here}: powers must be integers")
        gens = []
        for j, g in enumerate(mono.get("generators", [])):
            gp = f"{here}.generators[{j}]"
            kind = _ALL_KIND_NAMES.get(g.get("kind"))
            if kind is None:
                raise ConfigError(f"{gp}: unknown kind {g.get('kind')!r}")
            comp, site = g.get("component", 0), g.get("site")
            if not isinstance(comp, int) or not isinstance(site, int):
                raise ConfigError(f"{gp}: component and site must be integers")
            if not (0 <= comp < m.n_comp) or not (0 <= site < m.sites):
                raise ConfigError(f"{gp}: generator out of range")
            base_kind = kind if kind in FIELD_KIND_NAMES.values() \
                else Kind(kind - 4)
            if m.kind_of(comp) != base_kind:
                raise ConfigError(f"{gp}: kind does not match component {comp}")
            gens.append(Generator(kind, comp, site))
        series = FormalSeries.monomial(h, l, coeff, m.hbar_cap, m.lambda_cap,
                                       hbar_min=min(0, h))
        total = total + GradedPolynomial({tuple(gens): series})
    return total


def emit_monomials(poly: GradedPolynomial):
    out = []
    for key in sorted(poly.terms, key=lambda k: (len(k), k)):
        series = poly.terms[key]
        for (h, l) in series.orders():
            out.append({
                "coefficient": str(series.coeffs[(h, l)]),
                "hbar_power": h,
                "lambda_power": l,
                "generators": [
                    {"kind": g.kind.name.lower(), "component": g.component,
                     "site": g.site} for g in key],
            })
    return out


def from_config(doc: dict, name: str = None) -> ModelSpec:
    _reject_floats(doc)
    if not isinstance(doc, dict):
        raise ConfigError("model file must contain an object")
    for req in ("sites", "multiplet", "P", "K", "hbar_cap", "lambda_cap"):
        if req not in doc:
            raise ConfigError(f"missing required key {req!r}")
    sites = doc["sites"]
    if not isinstance(sites, int) or sites < 3:
        raise ConfigError("sites must be an integer >= 3")
    if not isinstance(doc["multiplet"], list) or not doc["multiplet"]:
        raise ConfigError("multiplet must be a nonempty list")
    multiplet = []
    for i, c in enumerate(doc["multiplet"]):
        if not isinstance(c, dict) or "name" not in c or "kind" not in c:
            raise ConfigError(f"multiplet[{i}] needs name and kind")
        kind = FIELD_KIND_NAMES.get(c["kind"])
        if kind is None:
            raise ConfigError(
                f"multiplet[{i}]: kind must be one of "
                f"{sorted(FIELD_KIND_NAMES)}")
        multiplet.append((c["name"], kind))
    for cap_key in ("hbar_cap", "lambda_cap"):
        if not isinstance(doc[cap_key], int) or doc[cap_key] < 0:
            raise ConfigError(f"{cap_key} must be a nonnegative integer")
    m = ModelSpec(
        name=name or doc.get("name", "custom"),
        sites=sites, multiplet=tuple(multiplet),
        p_matrix=Matrix.zeros(1, 1), k_matrix=Matrix.zeros(1, 1),
        s00=GradedPolynomial.zero(), theta0=GradedPolynomial.zero(),
        interaction=GradedPolynomial.zero(),
        hbar_cap=doc["hbar_cap"], lambda_cap=doc["lambda_cap"])
    m.p_matrix = _parse_matrix(doc["P"], m.dim, "$.P")
    m.k_matrix = _parse_matrix(doc["K"], m.dim, "$.K")
    if "H" in doc and doc["H"] is not None:
        m.h_matrix = _parse_matrix(doc["H"], m.dim, "$.H")
    m.s00 = action_from_matrix(m, m.p_matrix)
    m.theta0 = theta_from_matrix(m, m.k_matrix)
    if "interaction" in doc and doc["interaction"] is not None:
        m.interaction = parse_monomials(doc["interaction"], m, "$.interaction")
    if "gauge_fermion" in doc and doc["gauge_fermion"] is not None:
        m.gauge_fermion = parse_monomials(doc["gauge_fermion"], m,
                                          "$.gauge_fermion")
    return m


def to_config(m: ModelSpec) -> dict:
    doc = {
        "name": m.name,
        "sites": m.sites,
        "multiplet": [{"name": n, "kind": k.name.lower()}
                      for n, k in m.multiplet],
        "hbar_cap": m.hbar_cap,
        "lambda_cap": m.lambda_cap,
        "P": [[str(v) for v in row] for row in m.p_matrix.rows],
        "K": [[str(v) for v in row] for row in m.k_matrix.rows],
        "interaction": emit_monomials(m.interaction),
    }
    if m.h_matrix is not None:
        doc["H"] = [[str(v) for v in row] for row in m.h_matrix.rows]
    if m.gauge_fermion is not None:
        doc["gauge_fermion"] = emit_monomials(m.gauge_fermion)
    return doc


def load_model(path) -> ModelSpec:
    with open(path) as fh:
        try:
            doc = json.load(fh, parse_float=_fail_float)
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(f"invalid JSON: {e}")
    return from_config(doc)


def _fail_float(text):
    raise ConfigError(f"float literal {text} in model file; "
                      "use rational strings like '1/2'")


def save_model(m: ModelSpec, path):
    with open(path, "w") as fh:
        json.dump(to_config(m), fh, indent=2, sort_keys=True)
        fh.write("\n")
