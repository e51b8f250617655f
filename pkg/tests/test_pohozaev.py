import dataclasses
import math

import numpy as np
import pytest

from doublephase.errors import NotApplicable, NumericError
from doublephase.fields import CoefficientField, PowerNonlinearity
from doublephase.params import ProblemParams, validate_structure
from doublephase.pohozaev import (
    NonexistenceCase,
    evaluate_identity,
    nonexistence_threshold,
    nonexistence_verdict,
    small_norm_radius,
)
from doublephase.radial_solver import RadialSolution, solve_radial_bvp

F_ONE = PowerNonlinearity.constant(1.0)
A_ZERO = CoefficientField.constant(0.0)
A_ONE = CoefficientField.constant(1.0)


@pytest.fixture(scope="module")
def torsion_solution():
    P = ProblemParams(N=3, p=2, q=2.5)
    return solve_radial_bvp(P, A_ZERO, F_ONE, grid_size=4096)


def test_torsion_identity_values(torsion_solution):
    rep = evaluate_identity(torsion_solution)
    want = 56.0 * math.pi / 675.0
    assert rep.lhs_total == pytest.approx(want, rel=1e-6)
    assert rep.rhs == pytest.approx(want, rel=1e-6)
    assert rep.residual_rel <= 1e-6
    # itemized terms: (1/2 - 1/2.5) * 4 pi/45 and the boundary flux piece
    assert rep.term_grad_p == pytest.approx(0.1 * 4.0 * math.pi / 45.0, rel=1e-9)
    assert rep.term_grad_a == 0.0
    assert rep.term_boundary == pytest.approx(2.0 * math.pi / 27.0, rel=1e-9)


def test_identity_refinement_order(torsion_solution):
    P = ProblemParams(N=3, p=2, q=2.5)
    rels = []
    for g in (512, 1024, 2048):
        sol = solve_radial_bvp(P, A_ZERO, F_ONE, grid_size=g)
        rels.append(evaluate_identity(sol).residual_rel)
    assert rels[0] / rels[1] >= 3.0
    assert rels[1] / rels[2] >= 3.0


def test_zero_solution_identity():
    P = ProblemParams(N=3, p=2, q=2.5)
    sol = solve_radial_bvp(P, A_ZERO, PowerNonlinearity.constant(0.0), grid_size=512)
    rep = evaluate_identity(sol)
    assert rep.lhs_total == 0.0
    assert rep.rhs == 0.0
    assert rep.residual_rel == 0.0


def test_constant_weight_drops_gradient_weight_term():
    P = ProblemParams(N=3, p=2, q=2.5)
    sol = solve_radial_bvp(P, A_ONE, F_ONE, grid_size=1024)
    rep = evaluate_identity(sol)
    assert rep.term_grad_a == 0.0
    assert rep.residual_rel <= 1e-6


def test_nondecreasing_weight_terms_nonnegative():
    # starshaped ball with radially nondecreasing a: the dropped terms of the
    # inequality direction are nonnegative
    P = ProblemParams(N=3, p=2, q=2.5)
    a_field = CoefficientField.power(0.5, 0.25, 2.0)
    assert a_field.nondecreasing_on(1.0)
    sol = solve_radial_bvp(P, a_field, F_ONE, grid_size=1024)
    rep = evaluate_identity(sol)
    assert rep.term_grad_a >= 0.0
    assert rep.term_boundary >= 0.0
    assert rep.residual_rel <= 1e-6
    assert rep.lhs_total >= rep.term_grad_p


def test_identity_refuses_unsolved_input(torsion_solution):
    bad = RadialSolution(
        grid=torsion_solution.grid,
        u=torsion_solution.u * 1.05,
        du=torsion_solution.du,
        flux=torsion_solution.flux * 1.05,
        shooting_value=torsion_solution.shooting_value,
        residual=math.nan,
        params=torsion_solution.params,
        a_field=torsion_solution.a_field,
        nonlinearity=torsion_solution.nonlinearity,
    )
    with pytest.raises(NumericError, match="refusing"):
        evaluate_identity(bad)


# nonexistence predicates


def _nonex_params(**kw):
    base = dict(N=3, p=2, q=2.5, r=2.0, mu=-1.0, b_inf=0.5, a0=1.0, c_inf=1.0)
    base.update(kw)
    return ProblemParams(**base)


def test_threshold_value(table_p2_q25_n3):
    thr = nonexistence_threshold(_nonex_params(), table_p2_q25_n3)
    assert thr == pytest.approx(math.pi**2 * 1.5 / 6.5, abs=1e-6)


def test_verdict_small_positive_c(table_p2_q25_n3):
    v = nonexistence_verdict(_nonex_params(c_inf=2.0), table_p2_q25_n3, False)
    assert v.applicable and v.case is NonexistenceCase.NONEX_II
    assert v.threshold_value == pytest.approx(2.2776, abs=1e-4)


def test_verdict_nonpositive_c(table_p2_q25_n3):
    v = nonexistence_verdict(_nonex_params(), table_p2_q25_n3, False, c_nonpositive=True)
    assert v.applicable and v.case is NonexistenceCase.NONEX_I


def test_verdict_threshold_equality_needs_strict_starshape(table_p2_q25_n3):
    thr = nonexistence_threshold(_nonex_params(), table_p2_q25_n3)
    P = _nonex_params(c_inf=thr)
    v1 = nonexistence_verdict(P, table_p2_q25_n3, strictly_starshaped=True)
    assert v1.applicable and v1.case is NonexistenceCase.NONEX_III
    v2 = nonexistence_verdict(P, table_p2_q25_n3, strictly_starshaped=False)
    assert not v2.applicable


def test_verdict_positive_mu_not_applicable(table_p2_q25_n3):
    v = nonexistence_verdict(_nonex_params(mu=0.1), table_p2_q25_n3, False)
    assert not v.applicable
    assert "mu <= 0" in v.failed_hypotheses


def test_verdict_r_above_p_with_positive_c(table_p2_q25_n3):
    v = nonexistence_verdict(_nonex_params(r=3.0, c_inf=1.0), table_p2_q25_n3, False)
    assert not v.applicable


def test_verdict_r_range_hypothesis(table_p2_q25_n3):
    v = nonexistence_verdict(_nonex_params(r=20.0), table_p2_q25_n3, False)
    assert not v.applicable
    assert any("q*" in h for h in v.failed_hypotheses)


# small-norm certificates


def _small_params(**kw):
    base = dict(N=3, p=2, q=2.5, r=3.0, mu=0.5, b_inf=0.5, a0=1.0, c_inf=1.0, sigma=3.0)
    base.update(kw)
    return ProblemParams(**base)


def test_small_norm_case_i_positive(table_p2_q25_n3):
    cert = small_norm_radius(_small_params(), table_p2_q25_n3, gamma=30.0)
    assert cert.case is NonexistenceCase.SMALL_I
    assert cert.kappa > 0.0


def test_small_norm_monotone_in_coefficients(table_p2_q25_n3):
    base = small_norm_radius(_small_params(), table_p2_q25_n3, gamma=30.0).kappa
    for kw in (dict(c_inf=2.0), dict(mu=1.5), dict(b_inf=1.5)):
        other = small_norm_radius(_small_params(**kw), table_p2_q25_n3, gamma=30.0).kappa
        assert other <= base + 1e-15


def test_small_norm_grows_for_tiny_coefficients(table_p2_q25_n3):
    tiny = small_norm_radius(
        _small_params(c_inf=1e-30, mu=0.0, b_inf=0.0), table_p2_q25_n3, gamma=30.0
    )
    big = small_norm_radius(_small_params(), table_p2_q25_n3, gamma=30.0)
    assert tiny.kappa > 100.0 * big.kappa
    assert tiny.rho_star == pytest.approx(1e12, rel=1e-6)  # the bisection cap


def test_small_norm_rejects_r_equal_p(table_p2_q25_n3):
    with pytest.raises(NotApplicable):
        small_norm_radius(_small_params(r=2.0), table_p2_q25_n3, gamma=30.0)


def test_small_norm_gamma_validation(table_p2_q25_n3):
    with pytest.raises(ValueError):
        small_norm_radius(_small_params(), table_p2_q25_n3, gamma=10.0)


def test_small_norm_case_iii(table_p2_q25_n3):
    P = _small_params(r=8.0)  # p* = 6 < r < q* = 15
    cert = small_norm_radius(P, table_p2_q25_n3, gamma=31.0,
                             embedding_constants={"a0_prime": 0.5})
    assert cert.case is NonexistenceCase.SMALL_III
    assert cert.kappa > 0.0


def test_small_norm_case_ii_needs_constant(table_p2_q25_n3):
    P = _small_params(r=8.0, C_hp=1.0)
    with pytest.raises(NotApplicable, match="C_prime"):
        small_norm_radius(P, table_p2_q25_n3, gamma=31.0)
    cert = small_norm_radius(P, table_p2_q25_n3, gamma=31.0,
                             embedding_constants={"C_prime": 2.0})
    assert cert.case is NonexistenceCase.SMALL_II
    assert 0.0 < cert.kappa <= 1.0


def test_small_norm_intermediate_without_structure(table_p2_q25_n3):
    with pytest.raises(NotApplicable):
        small_norm_radius(_small_params(r=8.0), table_p2_q25_n3, gamma=31.0)


def test_weighted_critical_power_exceeds_q_on_valid_params():
    # p q*/q > q follows from q/p < 1 + 1/N; this is what makes the
    # b-term superlinear in the norm
    rng = np.random.default_rng(3)
    for _ in range(200):
        N = int(rng.integers(2, 10))
        p = rng.uniform(1.05, N - 0.2)
        q = p * rng.uniform(1.0 + 1e-6, 1.0 + 1.0 / N - 1e-9)
        if q >= N:
            continue
        P = ProblemParams(N=N, p=p, q=q)
        if validate_structure(P):
            continue
        assert P.p * P.q_star / P.q > P.q
