"""Classical layer: extended actions, symmetry differentials, the master
equation, gauge fixing, the covariant bracket, free-theory homology, and
the interacting/free field redefinition maps with their exchange theorem.

Sign conventions live in conventions.py; the single place orientation
enters here is bracket_with(X, part) = {X, part}.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import (
    BadGhostNumber, BoundarySite, BoundarySupport, EngineError,
    NonQuadraticAction,
)
from .graded import Generator, GradedPolynomial, antibracket, key_gh
from .linalg import Matrix, rank, rref
from .model import ModelSpec, PropagatorSet, build_propagators, gauge_fix_rules
from .series import FormalSeries, Gaussian, ONE, ZERO

PARTS = ("s", "delta", "gamma", "s0", "delta0", "gamma0")


@dataclass
class ExtendedAction:
    """Split of a full action by polynomial degree and antifield number.

    s00: quadratic, antifield-free.  theta0: quadratic, antifield number 1.
    v0: higher-degree antifield-free interaction.  theta_int: everything
    else (higher-degree antifield terms).
    """

    s00: GradedPolynomial
    theta0: GradedPolynomial
    v0: GradedPolynomial
    theta_int: GradedPolynomial

    @classmethod
    def from_total(cls, total: GradedPolynomial) -> "ExtendedAction":
        s00 = GradedPolynomial.zero()
        theta0 = GradedPolynomial.zero()
        v0 = GradedPolynomial.zero()
        theta_int = GradedPolynomial.zero()
        for key, c in total.terms.items():
            ta = sum(g.ta for g in key)
            piece = GradedPolynomial._raw({key: c})
            if len(key) <= 2 and ta == 0:
                s00 = s00 + piece
            elif len(key) <= 2 and ta == 1:
                theta0 = theta0 + piece
            elif ta == 0:
                v0 = v0 + piece
            else:
                theta_int = theta_int + piece
        return cls(s00, theta0, v0, theta_int)

    @classmethod
    def from_model(cls, m: ModelSpec) -> "ExtendedAction":
        return cls.from_total(m.s00 + m.theta0 + m.interaction)

    @property
    def total(self) -> GradedPolynomial:
        return self.s00 + self.theta0 + self.v0 + self.theta_int

    @property
    def free(self) -> GradedPolynomial:
        return self.s00 + self.theta0

    @property
    def interaction(self) -> GradedPolynomial:
        return self.v0 + self.theta_int

    def part_poly(self, part: str) -> GradedPolynomial:
        if part == "s":
            return self.total
        if part == "delta":
            return self.s00 + self.v0
        if part == "gamma":
            return self.theta0 + self.theta_int
        if part == "s0":
            return self.free
        if part == "delta0":
            return self.s00
        if part == "gamma0":
            return self.theta0
        raise ValueError(f"unknown part {part!r}; expected one of {PARTS}")


def extended_action(m: ModelSpec) -> ExtendedAction:
    return ExtendedAction.from_model(m)


def euler_lagrange(m: ModelSpec, s_poly: GradedPolynomial, comp,
                   site: int) -> GradedPolynomial:
    """Left derivative of the action at an interior site."""
    if site not in m.interior_sites():
        raise BoundarySite(f"site {site} is not interior")
    return s_poly.derivative(m.gen(comp, site), "left")


def classical_bv(x: GradedPolynomial, s: ExtendedAction,
                 part: str = "s") -> GradedPolynomial:
    """{x, selected action part}; raises ghost number by one."""
    return antibracket(x, s.part_poly(part))


def cme_check(s: ExtendedAction, m: ModelSpec) -> GradedPolynomial:
    """{S, S} restricted to interior-supported monomials.

    Exactly zero for a valid model; boundary-supported residue (from
    symmetries broken only by the lattice edge) is discarded.
    """
    full = antibracket(s.total, s.total)
    inner = set(m.interior_sites())
    table = {k: c for k, c in full.terms.items()
             if all(g.site in inner for g in k)}
    return GradedPolynomial._raw(table)


def chevalley_ghost_term(m: ModelSpec) -> GradedPolynomial:
    """-1/2 f^a_bc c+_a c^b c^c for models with structure constants.

    Both bundled models have abelian symmetries, so this is zero for them;
    the code path exists for configurations that supply nonzero constants
    as {(a_comp, b_comp, c_comp): Gaussian} acting sitewise.
    """
    constants = m.structure_constants
    if not constants:
        return GradedPolynomial.zero()
    out = GradedPolynomial.zero()
    half = m.scalar(Gaussian(1) / Gaussian(2))
    for (ca, cb, cc), f in constants.items():
        for x in range(m.sites):
            key = (m.gen(ca, x).antifield(), m.gen(cb, x), m.gen(cc, x))
            out = out - GradedPolynomial({key: half * f})
    return out


def gauge_fix(m: ModelSpec, s: ExtendedAction, psi: GradedPolynomial,
              trials: int = 20, rng=None) -> ExtendedAction:
    """Apply the canonical substitution generated by a gauge fermion and
    re-split the result.  The fermion must be antifield-free with ghost
    number -1; the substitution is checked to preserve the antibracket on
    sampled pairs (an exact property of this class of transformations,
    recheck guards against rule-construction bugs).
    """
    if psi.is_zero:
        return ExtendedAction.from_total(s.total)
    grading = psi.grading()
    if grading is None or grading[0] != -1 or not psi.antifield_free():
        raise BadGhostNumber(
            "gauge fermion must be antifield-free with ghost number -1")
    if psi.parity() != 1:
        raise BadGhostNumber("gauge fermion must be odd")
    rules = gauge_fix_rules(m, psi)
    if trials:
        rng = rng or random.Random(0)
        _check_bracket_automorphism(m, rules, trials, rng)
    return ExtendedAction.from_total(s.total.substitute(rules))


def _random_interior_poly(m: ModelSpec, rng) -> GradedPolynomial:
    inner = list(m.interior_sites())
    out = GradedPolynomial.zero()
    for _ in range(rng.randint(1, 3)):
        gens = []
        for _ in range(rng.randint(1, 3)):
            g = m.gen(rng.randrange(m.n_comp), rng.choice(inner))
            if rng.random() < 0.5:
                g = g.antifield()
            gens.append(g)
        coeff = m.scalar(Gaussian(rng.randint(-3, 3), rng.randint(-2, 2)))
        out = out + GradedPolynomial({tuple(gens): coeff})
    return out


def _check_bracket_automorphism(m: ModelSpec, rules, trials: int, rng):
    for _ in range(trials):
        x = _random_interior_poly(m, rng)
        y = _random_interior_poly(m, rng)
        lhs = antibracket(x.substitute(rules), y.substitute(rules))
        rhs = antibracket(x, y).substitute(rules)
        if not (lhs - rhs).is_zero:
            raise EngineError(
                "gauge-fixing substitution failed to preserve the "
                "antibracket on a sampled pair")


def peierls_bracket(m: ModelSpec, p: PropagatorSet, f: GradedPolynomial,
                    g: GradedPolynomial) -> GradedPolynomial:
    """Covariant bracket sum_ab (d_r f/d phi_a) Delta_ab (d_l g/d phi_b).

    Both arguments must be supported on interior sites, where the
    commutator function satisfies its defining identities.
    """
    inner = set(m.interior_sites())
    for name, x in (("first", f), ("second", g)):
        if any(s not in inner for s in x.support()):
            raise BoundarySupport(
                f"{name} argument is not interior-supported")
    out = GradedPolynomial.zero()
    df = {}
    for ga in f.generators():
        if ga.ta:
            continue
        d = f.derivative(ga, "right")
        if not d.is_zero:
            df[m.flat(ga)] = d
    for gb in g.generators():
        if gb.ta:
            continue
        b = m.flat(gb)
        dg = g.derivative(gb, "left")
        if dg.is_zero:
            continue
        for a, da in df.items():
            w = p.pauli_jordan.rows[a][b]
            if w:
                out = out + da * dg * w
    return out


# -- free-theory homology ----------------------------------------------------


@dataclass
class HomologyReport:
    model: str
    degree_cap: int
    sectors: dict                 # (degree, gh) -> dict of dimensions
    representatives: dict         # degree -> list of gh-0 class reps
    matrices: dict = field(default_factory=dict)  # (degree, gh) -> Matrix

    def homology_dimension(self, degree: int, gh: int) -> int:
        return self.sectors.get((degree, gh), {}).get("homology", 0)

    def to_json(self):
        return {
            "model": self.model,
            "degree_cap": self.degree_cap,
            "sectors": [
                {"degree": d, "gh": g, **vals}
                for (d, g), vals in sorted(self.sectors.items())],
            "gh0_representatives": {
                str(d): [str(p) for p in reps]
                for d, reps in sorted(self.representatives.items())},
        }


def _interior_generators(m: ModelSpec, components=None):
    comps = range(m.n_comp) if components is None else components
    gens = []
    for c in comps:
        for x in m.interior_sites():
            g = m.gen(c, x)
            gens.append(g)
            gens.append(g.antifield())
    return sorted(gens)


def _monomial_basis(gens, degree):
    """Nondecreasing generator tuples of the given length, odd squares
    dropped."""
    out = []

    def walk(prefix, start):
        if len(prefix) == degree:
            out.append(tuple(prefix))
            return
        for i in range(start, len(gens)):
            g = gens[i]
            if prefix and prefix[-1] == g and g.parity:
                continue
            prefix.append(g)
            walk(prefix, i)
            prefix.pop()

    walk([], 0)
    return out


def koszul_homology(m: ModelSpec, s: ExtendedAction, degree_cap: int,
                    components=None) -> HomologyReport:
    """Homology of the free differential on interior-supported monomials.

    Per polynomial degree <= degree_cap and per ghost number, assembles the
    exact matrix of {., S00 + theta0} on the monomial basis (projected back
    to the basis: edge leakage is dropped, and nilpotency of the projected
    operator is verified before any rank is computed) and reports kernel,
    image, and homology dimensions.  Ghost-number-zero classes get explicit
    representatives.
    """
    if any(len(k) > 2 for k in s.total.terms):
        raise NonQuadraticAction(
            "homology is defined for quadratic actions only")
    s0_poly = s.free
    gens = _interior_generators(m, components)
    sectors = {}
    representatives = {}
    all_matrices = {}
    for degree in range(1, degree_cap + 1):
        basis = _monomial_basis(gens, degree)
        by_gh = {}
        for key in basis:
            by_gh.setdefault(key_gh(key), []).append(key)
        index = {key: i for g, keys in by_gh.items()
                 for i, key in enumerate(keys)}
        matrices = {}
        for g, keys in sorted(by_gh.items()):
            target = by_gh.get(g + 1, [])
            mat = Matrix.zeros(len(target), len(keys))
            for col, key in enumerate(keys):
                image = antibracket(GradedPolynomial._raw(
                    {key: FormalSeries.one(*m.caps)}), s0_poly)
                for okey, series in image.terms.items():
                    row = index.get(okey)
                    if row is None or key_gh(okey) != g + 1:
                        continue
                    if set(series.coeffs) - {(0, 0)}:
                        raise EngineError(
                            "free differential produced order-carrying "
                            "coefficients")
                    mat.rows[row][col] = series.constant_term()
            matrices[g] = mat
        for g, mat in matrices.items():
            nxt = matrices.get(g + 1)
            if nxt is not None and nxt.rows and mat.rows:
                if not (nxt * mat).is_zero():
                    raise EngineError(
                        f"projected differential not nilpotent at degree "
                        f"{degree}, gh {g}: edge leakage is not confined")
        for g, mat in matrices.items():
            all_matrices[(degree, g)] = mat
        for g, keys in sorted(by_gh.items()):
            out_rank = rank(matrices[g]) if matrices[g].rows else 0
            in_mat = matrices.get(g - 1)
            in_rank = rank(in_mat) if in_mat is not None and in_mat.rows \
                else 0
            dim = len(keys)
            kernel = dim - out_rank
            sectors[(degree, g)] = {
                "dim": dim, "kernel": kernel, "image_in": in_rank,
                "homology": kernel - in_rank,
            }
            if g == 0:
                representatives.setdefault(degree, [])
                reps = _quotient_representatives(
                    matrices[0], matrices.get(-1), keys, m)
                representatives[degree] = reps
    return HomologyReport(m.name, degree_cap, sectors, representatives,
                          all_matrices)


def _quotient_representatives(out_mat, in_mat, keys, m):
    """Kernel vectors of out_mat that extend a basis of the image of
    in_mat, returned as polynomials."""
    from .linalg import kernel_basis
    if not out_mat.rows:
        kernel = [[ONE if i == j else ZERO for j in range(len(keys))]
                  for i in range(len(keys))]
    else:
        kernel = kernel_basis(out_mat)
    image_cols = []
    if in_mat is not None and in_mat.rows:
        red, pivots = rref(in_mat)
        image_cols = [[in_mat.rows[r][c] for r in range(len(in_mat.rows))]
                      for c in pivots]
    reps = []
    span = [list(v) for v in image_cols]
    for v in kernel:
        trial = Matrix(span + [list(v)])
        if rank(trial) > len(span):
            span.append(list(v))
            poly = GradedPolynomial.zero()
            for i, c in enumerate(v):
                if c:
                    poly = poly + GradedPolynomial(
                        {keys[i]: m.scalar(c)})
            reps.append(poly)
    return reps


# -- interacting/free field redefinition ----------------------------------------


@dataclass
class MollerSeries:
    """Substitution rules on field generators; antifields map to
    themselves.  direction is "forward" (free to interacting solution) or
    "inverse" (the one-shot closed form)."""

    model: ModelSpec
    direction: str
    rules: dict = field(default_factory=dict)

    def apply(self, x: GradedPolynomial) -> GradedPolynomial:
        return x.substitute(self.rules)


def _interaction_gradient(m: ModelSpec):
    """d_l V / d phi_b for every flat index b, as polynomials."""
    v = m.interaction
    grad = {}
    for g in v.generators():
        if g.ta:
            continue
        d = v.derivative(g, "left")
        if not d.is_zero:
            grad[m.flat(g)] = d
    return grad


def moller_inverse(m: ModelSpec, g: Generator,
                   retarded: Matrix = None) -> GradedPolynomial:
    """Rule for one interior field generator:
    g + sum_b retarded[g, b] d_l V/d phi_b."""
    if g.site not in m.interior_sites():
        raise BoundarySite(f"site {g.site} is not interior")
    if g.ta:
        return m.poly(g)
    if retarded is None:
        retarded = build_propagators(m).retarded
    grad = _interaction_gradient(m)
    return _inverse_rule(m, g, retarded, grad)


def _inverse_rule(m, g, retarded, grad):
    out = m.poly(g)
    a = m.flat(g)
    for b, db in grad.items():
        w = retarded.rows[a][b]
        if w:
            out = out + db * w
    return out


def moller_inverse_map(m: ModelSpec, retarded: Matrix = None) -> MollerSeries:
    """Rules at every site (identities hold on interior-supported input,
    but the substitution itself is defined globally)."""
    if retarded is None:
        retarded = build_propagators(m).retarded
    grad = _interaction_gradient(m)
    rules = {}
    for g in m.field_generators():
        rule = _inverse_rule(m, g, retarded, grad)
        if rule.nonzero_monomials() != 1:
            rules[g] = rule
    return MollerSeries(m, "inverse", rules)


def moller_forward(m: ModelSpec, order: int = None,
                   retarded: Matrix = None) -> MollerSeries:
    """Fixed-point iteration g -> g - retarded . grad V evaluated on the
    previous iterate; iteration k is exact to coupling order k."""
    if order is None:
        order = m.lambda_cap
    if retarded is None:
        retarded = build_propagators(m).retarded
    grad = _interaction_gradient(m)
    rules = {}
    for _ in range(order):
        new_rules = {}
        for g in m.field_generators():
            a = m.flat(g)
            out = m.poly(g)
            for b, db in grad.items():
                w = retarded.rows[a][b]
                if w:
                    out = out - db.substitute(rules) * w
            if out.nonzero_monomials() != 1 or () in out.terms:
                new_rules[g] = out
        rules = new_rules
    return MollerSeries(m, "forward", rules)


# -- the exchange theorem ---------------------------------------------------


@dataclass
class TheoremReport:
    entries: list

    @property
    def passed(self) -> bool:
        return all(e["pass"] for e in self.entries)

    def to_json(self):
        return list(self.entries)

    def __str__(self):
        lines = []
        for e in self.entries:
            status = "pass" if e["pass"] else "FAIL"
            lines.append(f"{e['identity']} (order {e['order']}): {status}"
                         + ("" if e["pass"]
                            else f" [{len(e['residual_terms'])} terms]"))
        return "\n".join(lines)


def _per_order_entries(identity: str, diff: GradedPolynomial, order: int,
                       entries: list):
    for k in range(order + 1):
        residual = []
        for key, series in diff.terms.items():
            if any(l == k for (h, l) in series.coeffs):
                residual.append(str(GradedPolynomial._raw({key: series})))
        entries.append({
            "identity": identity, "order": k,
            "residual_terms": residual, "pass": not residual,
        })


def _correction(m: ModelSpec, x: GradedPolynomial, b: GradedPolynomial,
                inv: MollerSeries, retarded: Matrix) -> GradedPolynomial:
    """sum_gb inv(d_r x/d phi_g) retarded[g, b] (d_l b/d phi_b)."""
    out = GradedPolynomial.zero()
    if b.is_zero:
        return out
    dxs = {}
    for gg in x.generators():
        if gg.ta:
            continue
        d = x.derivative(gg, "right")
        if not d.is_zero:
            dxs[m.flat(gg)] = inv.apply(d)
    for gb in b.generators():
        if gb.ta:
            continue
        col = m.flat(gb)
        db = b.derivative(gb, "left")
        if db.is_zero:
            continue
        for row, dx in dxs.items():
            w = retarded.rows[row][col]
            if w:
                out = out + dx * db * w
    return out


def verify_moller_theorem(m: ModelSpec, x: GradedPolynomial,
                          order: int = None,
                          retarded: Matrix = None) -> TheoremReport:
    """Exchange identities between the free and interacting structures.

    Checks, with exact per-coupling-order residuals:
      part-1:  inv{x, S00}      = {inv x, S00+V} - corr((1/2){S00+V, S00+V})
      part-2:  inv{x, theta0}   = {inv x, theta0} - corr({V, theta0})
      combined: inv{x, S00+theta0} = {inv x, S_total} - corr((1/2){S, S})
      intertwine(ta=1): inv({g, S00}) = {inv g, S00+v0} on every generator
    plus the hypothesis entry (1/2){S0, S0} = 0 (free master equation).
    """
    if order is None:
        order = m.lambda_cap
    s = extended_action(m)
    if retarded is None:
        retarded = build_propagators(m).retarded
    inv = moller_inverse_map(m, retarded)
    v = s.interaction
    entries = []

    free_cme = antibracket(s.free, s.free)
    entries.append({
        "identity": "free-master-equation", "order": 0,
        "residual_terms": [] if free_cme.is_zero else [str(free_cme)],
        "pass": free_cme.is_zero,
    })

    half = Gaussian(1) / Gaussian(2)
    sv = s.s00 + v
    b1 = antibracket(sv, sv) * half
    diff1 = (inv.apply(antibracket(x, s.s00))
             - antibracket(inv.apply(x), sv)
             + _correction(m, x, b1, inv, retarded))
    _per_order_entries("part-1", diff1, order, entries)

    b2 = antibracket(v, s.theta0)
    diff2 = (inv.apply(antibracket(x, s.theta0))
             - antibracket(inv.apply(x), s.theta0)
             + _correction(m, x, b2, inv, retarded))
    _per_order_entries("part-2", diff2, order, entries)

    b3 = antibracket(s.total, s.total) * half
    diff3 = (inv.apply(antibracket(x, s.free))
             - antibracket(inv.apply(x), s.total)
             + _correction(m, x, b3, inv, retarded))
    _per_order_entries("combined", diff3, order, entries)

    # the plain intertwining (no correction term) holds only for
    # antifield-free interactions
    if s.theta_int.is_zero:
        delta_full = s.s00 + s.v0
        inner = set(m.interior_sites())
        bad = []
        for g in m.field_generators():
            if g.site not in inner:
                continue
            for gen in (g, g.antifield()):
                lhs = inv.apply(antibracket(m.poly(gen), s.s00))
                rhs = antibracket(inv.apply(m.poly(gen)), delta_full)
                if not (lhs - rhs).is_zero:
                    bad.append(str(gen))
        entries.append({
            "identity": "intertwine-ta1", "order": order,
            "residual_terms": bad, "pass": not bad,
        })
    return TheoremReport(entries)
