"""Models, causal Green functions, kernels, cutoff functionals, config IO."""

import json
import random
from fractions import Fraction

import pytest

from latticebv.errors import (
    BadH, ConfigError, CutoffDoesNotFit, NotRetardedInvertible,
)
from latticebv.graded import GradedPolynomial, Kind
from latticebv.linalg import Matrix
from latticebv.model import (
    CutoffLagrangian, action_from_matrix, additivity_check,
    as_cutoff_lagrangian, build_propagators, consistency_check, delta_L,
    free_lagrangian, from_config, load_model, model_a, model_b,
    model_b_ungauged, nontrivial_h, quadratic_matrix, save_model,
    symmetry_matrix, theta_from_matrix, to_config,
)
from latticebv.series import FormalSeries, Gaussian, I, ONE, ZERO, rat


def marching_oracle_a(n, mass):
    """Independent retarded solve for the tridiagonal chain, in plain
    Fractions: row x reads -G[x-1] + (2 - mass^2) G[x] - G[x+1] = delta_xj
    and is marched forward from zero data at the past edge."""
    diag = Fraction(2) - Fraction(mass) ** 2
    g = [[Fraction(0)] * n for _ in range(n)]
    for j in range(n):
        for x in range(n - 1):
            left = g[x - 1][j] if x >= 1 else Fraction(0)
            rhs = Fraction(1) if x == j else Fraction(0)
            g[x + 1][j] = diag * g[x][j] - left - rhs
    return g


def test_model_a_retarded_matches_marching_oracle():
    for mass in (0, Fraction(1, 2)):
        m = model_a(10, mass=mass)
        p = build_propagators(m)
        oracle = marching_oracle_a(10, mass)
        for i in range(10):
            for j in range(10):
                assert p.retarded.rows[i][j] == Gaussian(oracle[i][j])


def test_model_a_retarded_closed_form_massless():
    m = model_a(16)
    p = build_propagators(m)
    for i in range(16):
        for j in range(16):
            want = Gaussian(-(i - j)) if i >= j else Gaussian(0)
            assert p.retarded.rows[i][j] == want


def test_model_a_advanced_is_reflected_retarded():
    # the tridiagonal operator is reflection symmetric
    m = model_a(9, mass=Fraction(1, 3))
    p = build_propagators(m)
    n = m.sites
    for i in range(n):
        for j in range(n):
            assert p.advanced.rows[i][j] == \
                p.retarded.rows[n - 1 - i][n - 1 - j]


def _green_identity_rows(m, p):
    n, dim = m.sites, m.dim
    s = m.stencil_radius()
    pr = m.p_matrix * p.retarded
    pa = m.p_matrix * p.advanced
    for a in range(dim):
        site = a % n
        row_id = [ONE if a == b else ZERO for b in range(dim)]
        if site <= n - 1 - s:
            assert pr.rows[a] == row_id
        if s <= site <= n - 1 - s:
            assert pa.rows[a] == row_id


def test_green_identities_model_a():
    m = model_a(10, mass=Fraction(1, 2))
    _green_identity_rows(m, build_propagators(m))


def test_green_identities_model_b():
    m = model_b(8)
    _green_identity_rows(m, build_propagators(m))


def test_commutator_function_kernel_rows():
    # P annihilates the commutator function on interior rows
    m = model_b(8)
    p = build_propagators(m)
    pd = m.p_matrix * p.pauli_jordan
    inner = set(m.interior_sites())
    for a in range(m.dim):
        if a % m.sites in inner:
            assert not any(pd.rows[a])


def test_kernel_graded_symmetry_everywhere():
    # the advanced solution is the graded transpose of the retarded one,
    # so the commutator kernel is graded-antisymmetric and the
    # time-ordered kernel graded-symmetric on every pair of indices,
    # boundary sites included (the conjugation identities need this)
    m = model_b(8)
    p = build_propagators(m)
    for a in range(m.dim):
        pa = m.parity_of_flat(a)
        for b in range(m.dim):
            odd = pa and m.parity_of_flat(b)
            sign = -1 if odd else 1
            assert p.advanced.rows[a][b] == sign * p.retarded.rows[b][a]
            assert p.pauli_jordan.rows[a][b] == \
                -sign * p.pauli_jordan.rows[b][a]
            assert p.feynman.rows[a][b] == sign * p.feynman.rows[b][a]


def test_triangularity():
    m = model_b(8)
    p = build_propagators(m)
    n = m.sites
    for a in range(m.dim):
        for b in range(m.dim):
            if a % n < b % n:
                assert not p.retarded.rows[a][b]
            if a % n > b % n:
                assert not p.advanced.rows[a][b]


def test_graded_antisymmetry_interior():
    m = model_b(8)
    p = build_propagators(m)
    interior = m.interior_flats()
    for a in interior:
        pa = m.parity_of_flat(a)
        for b in interior:
            pb = m.parity_of_flat(b)
            sign = -1 if (pa and pb) else 1
            assert p.pauli_jordan.rows[a][b] + \
                sign * p.pauli_jordan.rows[b][a] == ZERO


def test_ghost_sector_propagates():
    # the odd-odd block of the commutator function must be nonzero, or the
    # quantum layer's odd contractions would be vacuously untested
    m = model_b(8)
    p = build_propagators(m)
    n = m.sites
    cc = m.component_index("c")
    cb = m.component_index("cbar")
    assert any(p.pauli_jordan.rows[cc * n + x][cb * n + y]
               for x in range(n) for y in range(n))


def test_kernel_assembly():
    m = model_b(8)
    p = build_propagators(m, nontrivial_h(m))
    half_i = I * Fraction(1, 2)
    assert p.two_point == p.pauli_jordan * half_i + p.symmetric_part
    assert p.feynman == (p.advanced + p.retarded) * half_i + p.symmetric_part
    # time-ordered minus positive-frequency kernel is i * advanced
    assert p.feynman - p.two_point == p.advanced * I


def test_ungauged_model_not_causally_invertible():
    with pytest.raises(NotRetardedInvertible) as exc:
        build_propagators(model_b_ungauged(8))
    assert isinstance(exc.value.site, int)


def test_consistency_passes_bundled_models():
    for m, h in ((model_a(10), None), (model_a(10), nontrivial_h(model_a(10))),
                 (model_b(8), None), (model_b(8), nontrivial_h(model_b(8)))):
        p = build_propagators(m, h)
        assert not p.consistency_ok
        rep = consistency_check(m, p)
        assert rep.passed, str(rep)
        assert p.consistency_ok


def test_consistency_detects_broken_symmetry():
    m = model_b(8)
    p = build_propagators(m)
    # corrupt the symmetry matrix at an interior pair: residual must show up
    m.k_matrix.rows[3][2 * m.sites + 5] += ONE
    rep = consistency_check(m, p)
    assert not rep.passed
    assert not p.consistency_ok


def test_bad_h_rejected():
    m = model_b(8)
    good = nontrivial_h(m)

    wrong_shape = Matrix.zeros(3, 3)
    with pytest.raises(BadH):
        build_propagators(m, wrong_shape)

    mixes_parity = Matrix.zeros(m.dim, m.dim)
    c = m.component_index("c") * m.sites + 4
    q = m.component_index("q") * m.sites + 4
    mixes_parity.rows[q][c] = ONE
    mixes_parity.rows[c][q] = -ONE
    with pytest.raises(BadH):
        build_propagators(m, mixes_parity)

    asym = good.copy()
    asym.rows[5][m.sites + 5] += ONE
    with pytest.raises(BadH, match="graded-symmetric"):
        build_propagators(m, asym)

    # symmetric, parity-even, but not annihilated by P
    not_harmonic = good.copy()
    not_harmonic.rows[5][m.sites + 5] += ONE
    not_harmonic.rows[m.sites + 5][5] += ONE
    with pytest.raises(BadH, match="interior row"):
        build_propagators(m, not_harmonic)


def test_quadratic_matrix_round_trip():
    for m in (model_a(8, mass=Fraction(1, 2)), model_b(8)):
        assert quadratic_matrix(m, m.s00) == m.p_matrix
        assert action_from_matrix(m, m.p_matrix) == m.s00
        assert symmetry_matrix(m, m.theta0) == m.k_matrix
        assert theta_from_matrix(m, m.k_matrix) == m.theta0


def test_stencil_radius():
    assert model_a(8).stencil_radius() == 1
    assert model_b(8).stencil_radius() == 1
    assert list(model_a(8).interior_sites()) == list(range(1, 7))


# -- cutoff functionals -------------------------------------------------------


def _random_shift(rng, m, lo, hi):
    shift = {}
    for _ in range(rng.randint(1, 3)):
        comp = rng.randrange(m.n_comp)
        while m.kind_of(comp) in (Kind.GHOST, Kind.ANTIGHOST):
            comp = rng.randrange(m.n_comp)
        shift[m.gen(comp, rng.randint(lo, hi))] = Gaussian(rng.randint(1, 4))
    return shift


def test_delta_l_matches_global_difference():
    rng = random.Random(21)
    for m in (model_a(10, mass=Fraction(1, 2)), model_b(8)):
        lag = free_lagrangian(m)
        for _ in range(5):
            shift = _random_shift(rng, m, 2, m.sites - 3)
            got = delta_L(m, lag, shift)
            rules = {g: m.poly(g) + GradedPolynomial.scalar(m.scalar(v))
                     for g, v in shift.items()}
            want = m.s00.substitute(rules) - m.s00
            assert (got - want).is_zero


def test_delta_l_window_independent():
    # summing the densities over a wider admissible window changes nothing
    m = model_a(12)
    lag = free_lagrangian(m)
    shift = {m.gen(0, 5): Gaussian(3)}
    base = delta_L(m, lag, shift)
    wide = lag.weighted(lag.window_cutoff(2, 9))
    rules = {m.gen(0, 5): m.poly(m.gen(0, 5))
             + GradedPolynomial.scalar(m.scalar(Gaussian(3)))}
    assert (wide.substitute(rules) - wide - base).is_zero


def test_delta_l_cutoff_does_not_fit():
    m = model_a(8)
    lag = free_lagrangian(m)
    with pytest.raises(CutoffDoesNotFit):
        delta_L(m, lag, {m.gen(0, 0): Gaussian(1)})
    with pytest.raises(CutoffDoesNotFit):
        delta_L(m, lag, {m.gen(0, 7): Gaussian(1)})


def test_additivity():
    rng = random.Random(22)
    m = model_a(16)
    assert additivity_check(m, free_lagrangian(m), 10, rng) == 0
    mb = model_b(12)
    assert additivity_check(mb, free_lagrangian(mb), 6, rng) == 0


def test_as_cutoff_lagrangian_reassembles():
    m = model_a(10)
    lag = as_cutoff_lagrangian(m.interaction)
    assert lag.radius == 0
    everywhere = {x: ONE for x in range(m.sites)}
    assert (lag.weighted(everywhere) - m.interaction).is_zero
    assert m.interaction.support() == list(m.interior_sites())


# -- config files -------------------------------------------------------------


def test_config_round_trip(tmp_path):
    for m in (model_a(8, mass=Fraction(1, 2)), model_b(8)):
        path = tmp_path / f"{m.name}.json"
        save_model(m, path)
        back = load_model(path)
        assert back.sites == m.sites
        assert back.multiplet == m.multiplet
        assert back.p_matrix == m.p_matrix
        assert back.k_matrix == m.k_matrix
        assert (back.s00 - m.s00).is_zero
        assert (back.theta0 - m.theta0).is_zero
        assert (back.interaction - m.interaction).is_zero
        assert back.caps == m.caps
        if m.gauge_fermion is not None:
            assert (back.gauge_fermion - m.gauge_fermion).is_zero


def test_config_rejects_floats(tmp_path):
    doc = to_config(model_a(8))
    doc["P"][0][0] = 0.5
    with pytest.raises(ConfigError, match="float"):
        from_config(doc)
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(to_config(model_a(8))).replace('"2"', "2.0", 1))
    with pytest.raises(ConfigError):
        load_model(path)


def test_config_rejects_decimal_strings():
    doc = to_config(model_a(8))
    doc["P"][0][0] = "0.5"
    with pytest.raises(ConfigError, match=r"\$\.P\[0\]\[0\]"):
        from_config(doc)


def test_config_validates_structure():
    doc = to_config(model_a(8))
    del doc["K"]
    with pytest.raises(ConfigError, match="missing required key"):
        from_config(doc)

    doc = to_config(model_a(8))
    doc["multiplet"][0]["kind"] = "antifield"
    with pytest.raises(ConfigError, match="kind"):
        from_config(doc)

    doc = to_config(model_a(8))
    doc["P"][0] = doc["P"][0][:-1]
    with pytest.raises(ConfigError, match="entries"):
        from_config(doc)

    doc = to_config(model_a(8))
    doc["interaction"][0]["generators"][0]["site"] = 99
    with pytest.raises(ConfigError, match="out of range"):
        from_config(doc)


def test_config_monomials_support_antifields_and_orders():
    m = model_a(8)
    doc = to_config(m)
    doc["interaction"] = [{
        "coefficient": "1/2+3i",
        "hbar_power": 1,
        "lambda_power": 1,
        "generators": [{"kind": "antifield", "component": 0, "site": 3},
                       {"kind": "field", "component": 0, "site": 4}],
    }]
    back = from_config(doc)
    key = (m.gen(0, 3).antifield(), m.gen(0, 4))
    series = back.interaction.coefficient(key)
    assert series.coefficient(1, 1) == Gaussian(Fraction(1, 2), Fraction(3))
