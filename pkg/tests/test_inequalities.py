import numpy as np
import pytest

from picone_lab import (ExponentField, HypothesisError, InvalidInputError,
                        ScalarField, build_grid, euclidean_frame, full_mask,
                        grushin_frame)
from picone_lab.eigen import minimize_principal, p2_dirichlet_solve
from picone_lab.inequalities import (caccioppoli_constants, caccioppoli_verify,
                                     hardy_verify, log_caccioppoli_verify,
                                     weak_form_residual)


def p2_setup(n=33):
    g = build_grid([(0, 1), (0, 1)], [n, n])
    m = full_mask(g)
    return g, m, ExponentField.constant(g, 2.0), ScalarField.constant(g, 1.0)


def sine_bump(g):
    return ScalarField.from_function(
        g, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))


@pytest.fixture(scope="module")
def p2_eigenpair():
    g, m, p2, one = p2_setup(33)
    res = minimize_principal(p2, one, euclidean_frame(2), m)
    assert res.converged
    return g, m, p2, one, res


# ------------------------------------------------------------------ constants


def test_caccioppoli_constants_sub_case_pinned():
    c_grad, c_weight = caccioppoli_constants(2.0, 2.0, 2.0, 2.0, 1.0, "sub")
    assert c_grad == 4.0
    assert c_weight == 2.0


def test_caccioppoli_constants_weightless_corollary():
    for pp in (2.0, 2.5, 3.0):
        c_grad, c_weight = caccioppoli_constants(pp, pp, pp, pp, 0.0, "sub")
        assert c_grad == pp ** pp
        assert c_weight == 0.0


def test_caccioppoli_constants_sup_log_case():
    c_grad, c_weight = caccioppoli_constants(2.0, 2.0, 0.0, 0.0, 1.0, "sup")
    assert c_grad == 4.0
    assert c_weight == -2.0


def test_caccioppoli_constants_reject_bad_hypotheses():
    with pytest.raises(InvalidInputError):
        caccioppoli_constants(2.0, 2.0, 0.5, 0.5, 1.0, "sub")
    with pytest.raises(InvalidInputError):
        caccioppoli_constants(2.0, 2.0, 1.5, 1.5, 1.0, "sup")
    with pytest.raises(InvalidInputError):
        caccioppoli_constants(2.0, 2.0, 2.0, 2.0, 1.0, "both")


# ---------------------------------------------------------------------- hardy


def test_hardy_near_equality_at_eigenfunction(p2_eigenpair):
    g, m, p2, one, res = p2_eigenpair
    mu = res.eigenvalue * (1 - 1e-3)
    rep = hardy_verify(res.eigenfunction, p2, one, mu, euclidean_frame(2), m)
    assert rep.holds
    assert rep.slack <= 2e-3 * rep.rhs  # near-sharp at the eigenfunction


def test_hardy_flags_deliberate_violation(p2_eigenpair):
    g, m, p2, one, res = p2_eigenpair
    rep = hardy_verify(res.eigenfunction, p2, one, 1.05 * res.eigenvalue,
                       euclidean_frame(2), m)
    assert not rep.holds
    assert rep.slack < 0


def test_hardy_with_zero_mu_always_holds():
    g, m, p2, one = p2_setup(17)
    rng = np.random.default_rng(3)
    for _ in range(10):
        u = ScalarField(g, np.where(m.interior, rng.uniform(0, 1, g.shape), 0.0))
        assert hardy_verify(u, p2, one, 0.0, euclidean_frame(2), m).holds


def test_hardy_random_sweep_below_eigenvalue(p2_eigenpair):
    g, m, p2, one, res = p2_eigenpair
    mu = 0.999 * res.eigenvalue
    rng = np.random.default_rng(29)
    for _ in range(100):
        u = ScalarField(g, np.where(m.interior, rng.uniform(0, 1, g.shape), 0.0))
        assert hardy_verify(u, p2, one, mu, euclidean_frame(2), m).holds


def test_hardy_rejects_bad_inputs():
    g, m, p2, one = p2_setup(9)
    bump = ScalarField(g, np.where(m.interior, 1.0, 0.0))
    with pytest.raises(InvalidInputError):
        hardy_verify(bump, p2, ScalarField.constant(g, 0.0), 1.0,
                     euclidean_frame(2), m)
    with pytest.raises(InvalidInputError):
        hardy_verify(ScalarField.constant(g, 1.0), p2, one, 1.0,
                     euclidean_frame(2), m)


def test_hardy_report_carries_named_integrals(p2_eigenpair):
    g, m, p2, one, res = p2_eigenpair
    rep = hardy_verify(res.eigenfunction, p2, one, 1.0, euclidean_frame(2), m)
    assert rep.values["gradient_integral"] == rep.rhs
    assert rep.values["weighted_integral"] == pytest.approx(rep.lhs, rel=1e-12)


# ----------------------------------------------------------------- caccioppoli


def test_caccioppoli_eigenfunction_sub_case(p2_eigenpair):
    g, m, p2, one, res = p2_eigenpair
    phi = sine_bump(g)
    rep = caccioppoli_verify(res.eigenfunction, phi, p2, p2, res.eigenvalue,
                             one, euclidean_frame(2), m, case="sub")
    assert rep.holds
    assert rep.constant_used == 4.0
    assert rep.values["weight_constant"] == pytest.approx(2 * res.eigenvalue)


def test_caccioppoli_harmonic_classical_case():
    g, m, p2, _ = p2_setup(33)
    zero = ScalarField.constant(g, 0.0)
    boundary = ScalarField.from_function(g, lambda x, y: 1 + (x + y) / 4)
    v = p2_dirichlet_solve(euclidean_frame(2), m, zero, boundary)
    assert v.values[m.included].min() > 0
    phi = sine_bump(g)
    rep = caccioppoli_verify(v, phi, p2, p2, 0.0, zero, euclidean_frame(2), m,
                             case="sub")
    assert rep.holds
    assert rep.rhs == pytest.approx(4.0 * rep.values["gradient_term"])


def test_caccioppoli_is_scale_monotone_in_lambda(p2_eigenpair):
    g, m, p2, one, res = p2_eigenpair
    phi = sine_bump(g)
    slacks = []
    for lam in (res.eigenvalue, 2 * res.eigenvalue, 4 * res.eigenvalue):
        rep = caccioppoli_verify(res.eigenfunction, phi, p2, p2, lam, one,
                                 euclidean_frame(2), m, case="sub")
        slacks.append(rep.slack)
    assert slacks[0] < slacks[1] < slacks[2]


def test_caccioppoli_rejects_uncertified_solution():
    g, m, p2, one = p2_setup(17)
    # superharmonic profile: the weak pairing is strictly positive, so it
    # cannot be a sub-solution at lambda = 0
    v = ScalarField.from_function(
        g, lambda x, y: 1 + np.sin(np.pi * x) * np.sin(np.pi * y))
    phi = sine_bump(g)
    with pytest.raises(HypothesisError):
        caccioppoli_verify(v, phi, p2, p2, 0.0, one, euclidean_frame(2), m,
                           case="sub")


def test_caccioppoli_rejects_orthogonality_violation(p2_eigenpair):
    g, m, _, one, res = p2_eigenpair
    p_var = ExponentField.from_field(
        ScalarField.from_function(g, lambda x, y: 2 + x / 5), m)
    phi = sine_bump(g)
    with pytest.raises(HypothesisError):
        caccioppoli_verify(res.eigenfunction, phi, p_var, p_var,
                           res.eigenvalue, one, euclidean_frame(2), m,
                           case="sub")


def test_caccioppoli_rejects_nonpositive_v():
    g, m, p2, one = p2_setup(9)
    phi = sine_bump(g)
    with pytest.raises(HypothesisError):
        caccioppoli_verify(ScalarField.constant(g, 0.0), phi, p2, p2, 1.0,
                           one, euclidean_frame(2), m, case="sub")


def test_sup_case_at_zero_q_matches_log_path():
    g, m, p2, _ = p2_setup(33)
    zero = ScalarField.constant(g, 0.0)
    one = ScalarField.constant(g, 1.0)
    v = p2_dirichlet_solve(euclidean_frame(2), m, one)  # torsion, superharmonic
    v_pos = ScalarField(g, np.where(m.included, v.values + 0.05, 1.0))
    phi = sine_bump(g)
    sup = caccioppoli_verify(v_pos, phi, p2, zero, 0.0, zero,
                             euclidean_frame(2), m, case="sup")
    log = log_caccioppoli_verify(v_pos, phi, p2, euclidean_frame(2), m)
    assert sup.lhs == pytest.approx(log.lhs, rel=1e-12)
    assert sup.rhs == pytest.approx(log.rhs, rel=1e-12)
    assert sup.holds and log.holds


# ------------------------------------------------------------- log-caccioppoli


def test_log_caccioppoli_constant_field_trivial():
    g, m, p2, _ = p2_setup(17)
    phi = sine_bump(g)
    rep = log_caccioppoli_verify(ScalarField.constant(g, 1.0), phi, p2,
                                 euclidean_frame(2), m)
    assert rep.lhs == 0.0
    assert rep.holds


def test_log_caccioppoli_torsion_function():
    g, m, p2, one = p2_setup(33)
    v = p2_dirichlet_solve(euclidean_frame(2), m, one)
    v_pos = ScalarField(g, np.where(m.included, v.values + 0.02, 1.0))
    phi = sine_bump(g)
    rep = log_caccioppoli_verify(v_pos, phi, p2, euclidean_frame(2), m)
    assert rep.holds
    assert rep.constant_used == 4.0


def test_log_caccioppoli_variable_exponent_grushin():
    # monotone profile along the nondegenerate direction: the flux is
    # constant in x, so the weak pairing vanishes identically and the
    # superharmonicity certificate is exact even though p varies in y
    g = build_grid([(-1, 1), (0, 1)], [33, 33])
    m = full_mask(g)
    p_var = ExponentField.from_field(
        ScalarField.from_function(g, lambda x, y: 2 + y ** 2 / 2), m)
    v = ScalarField.from_function(g, lambda x, y: 2 - x / 2)
    phi = ScalarField.from_function(
        g, lambda x, y: np.sin(np.pi * (x + 1) / 2) * np.sin(np.pi * y))
    rep = log_caccioppoli_verify(v, phi, p_var, grushin_frame(), m)
    assert rep.holds
    assert rep.constant_used == pytest.approx(2.5 ** 2.5)
    assert rep.lhs > 0.01  # genuinely two-sided, not vacuous


def test_log_caccioppoli_rejects_vanishing_v():
    g, m, p2, _ = p2_setup(9)
    phi = sine_bump(g)
    with pytest.raises(HypothesisError):
        log_caccioppoli_verify(ScalarField.constant(g, 0.0), phi, p2,
                               euclidean_frame(2), m)


def test_log_caccioppoli_reports_offending_node():
    g, m, p2, _ = p2_setup(17)
    # a dip is subharmonic: the pairing with interior hats is negative there
    v = ScalarField.from_function(
        g, lambda x, y: 1 - 0.5 * np.sin(np.pi * x) * np.sin(np.pi * y))
    phi = sine_bump(g)
    with pytest.raises(HypothesisError) as err:
        log_caccioppoli_verify(v, phi, p2, euclidean_frame(2), m)
    assert "node" in str(err.value)


# ------------------------------------------------------------- weak residuals


def test_weak_residual_signs_for_eigenfunction(p2_eigenpair):
    g, m, p2, one, res = p2_eigenpair
    r = weak_form_residual(res.eigenfunction, p2, res.eigenvalue, one,
                           euclidean_frame(2), m)
    scale = np.abs(weak_form_residual(res.eigenfunction, p2, 0.0, None,
                                      euclidean_frame(2), m).values).max()
    assert np.abs(r.values).max() <= 1e-5 * scale
