import numpy as np
import pytest

from doublephase.bubbles import (
    RateFit,
    bubble_norms,
    compose_ratio_rate,
    cross_gradient_rate,
    fit_rate,
    gradient_deficit_exponent,
    kappa_window,
    make_bubble,
    mass_rate,
    ratio_limits,
)
from doublephase.constants import best_sobolev_constant
from doublephase.errors import RegimeError
from doublephase.params import ProblemParams

EPS_GRID = np.logspace(-3, -1, 8)[::-1]


def test_normalization_is_one():
    P = ProblemParams(N=4, p=2, q=2.4)
    b = make_bubble("p", 1e-2, 1.0, 1.0, P)
    val = bubble_norms(b, {"m": ("power", b.m_star)})["m"]
    assert val == pytest.approx(1.0, abs=1e-9)


def test_peak_scaling_under_halved_eps():
    P = ProblemParams(N=4, p=2, q=2.4)
    b1 = make_bubble("p", 0.02, 1.0, 1.0, P)
    b2 = make_bubble("p", 0.01, 1.0, 1.0, P)
    want = 2.0 ** ((P.N - P.p) / (P.p - 1.0))
    assert b2.unnormalized_peak() / b1.unnormalized_peak() == pytest.approx(want, rel=1e-14)


def test_support_radius_scales_with_delta():
    P = ProblemParams(N=5, p=3, q=3.5)
    b = make_bubble("q", 1e-3, 0.25, 1.0, P)
    assert b.support_radius == pytest.approx(0.25)
    assert b.profile(0.26) == 0.0
    assert b.profile(0.24) > 0.0


def test_p_gradient_near_best_constant():
    P = ProblemParams(N=4, p=2, q=2.4)
    s_p = best_sobolev_constant(2, 4)
    g = bubble_norms(make_bubble("p", 1e-3, 1.0, 1.0, P), {"g": ("grad", 2.0)})["g"]
    assert abs(g - s_p) <= 1e-4
    assert g > s_p  # deficit approaches from above


def test_q_gradient_near_best_constant():
    # fast-decay fixture: (N - q)/(q - 1) = 2 makes the deficit ~ 1e-6 at 1e-3;
    # the wide cutoff shrinks the tail constant
    P = ProblemParams(N=7, p=2.7, q=3.0)
    s_q = best_sobolev_constant(3.0, 7)
    g = bubble_norms(make_bubble("q", 1e-3, 1.0, 4.0, P), {"g": ("grad", 3.0)})["g"]
    assert abs(g - s_q) <= 1e-4
    assert g > s_q


def test_quadrature_self_consistency():
    P = ProblemParams(N=5, p=3, q=3.5)
    b = make_bubble("q", 1e-3, 1.0, 1.0, P)
    reqs = {"g": ("grad", 3.0), "m": ("power", 11.0)}
    lo = bubble_norms(b, reqs, order=32)
    hi = bubble_norms(b, reqs, order=64)
    for k in reqs:
        assert lo[k] == pytest.approx(hi[k], rel=1e-9)


def test_deficit_positive_and_decreasing():
    P = ProblemParams(N=4, p=2, q=2.4)
    s_p = best_sobolev_constant(2, 4)
    defs = [
        bubble_norms(make_bubble("p", e, 1.0, 1.0, P), {"g": ("grad", 2.0)})["g"] - s_p
        for e in EPS_GRID
    ]
    assert all(d > 0 for d in defs)
    assert all(a > b for a, b in zip(defs, defs[1:]))


# rate fitting


def test_fit_rate_pure_power():
    f = fit_rate(list(zip(EPS_GRID, EPS_GRID**2)), theoretical_slope=2.0)
    assert f.fitted_slope == pytest.approx(2.0, abs=1e-10)
    assert not f.log_factor_detected


def test_fit_rate_power_times_log():
    vals = EPS_GRID**2 * np.abs(np.log(EPS_GRID))
    f = fit_rate(list(zip(EPS_GRID, vals)), theoretical_slope=2.0)
    assert f.log_factor_detected and f.log_sign == 1
    assert f.fitted_slope == pytest.approx(2.0, abs=1e-10)


def test_fit_rate_power_over_log():
    vals = EPS_GRID**1.5 / np.abs(np.log(EPS_GRID))
    f = fit_rate(list(zip(EPS_GRID, vals)))
    assert f.log_factor_detected and f.log_sign == -1
    assert f.fitted_slope == pytest.approx(1.5, abs=1e-10)


def test_fit_rate_rejects_nonpositive():
    with pytest.raises(ValueError):
        fit_rate(list(zip(EPS_GRID, np.concatenate([[-1.0], EPS_GRID[1:] ** 2]))))


def test_fit_rate_needs_four_points():
    with pytest.raises(ValueError):
        fit_rate([(0.1, 1.0), (0.05, 0.5), (0.01, 0.1)])


def test_rate_fit_grid_validation():
    with pytest.raises(ValueError):
        RateFit((0.1, 0.2, 0.05, 0.01), (1, 1, 1, 1), 1.0, False, 0, None, None)


def test_measured_deficit_slope():
    P = ProblemParams(N=4, p=2, q=2.4)
    s_p = best_sobolev_constant(2, 4)
    grid = [
        (e, bubble_norms(make_bubble("p", e, 1.0, 1.0, P), {"g": ("grad", 2.0)})["g"] - s_p)
        for e in EPS_GRID
    ]
    f = fit_rate(grid, theoretical_slope=gradient_deficit_exponent(4, 2.0))
    assert f.relative_slope_error <= 0.10
    assert not f.log_factor_detected


def test_fitted_exponent_independent_of_cutoff_radius():
    P = ProblemParams(N=4, p=2, q=2.4)
    s_p = best_sobolev_constant(2, 4)
    slopes = []
    for rho in (1.0, 2.0):
        grid = [
            (e, bubble_norms(make_bubble("p", e, 1.0, rho, P), {"g": ("grad", 2.0)})["g"] - s_p)
            for e in EPS_GRID
        ]
        slopes.append(fit_rate(grid).fitted_slope)
    assert slopes[0] == pytest.approx(2.0, rel=0.10)
    assert slopes[1] == pytest.approx(2.0, rel=0.10)


# rate-law branch formulas


def test_mass_rate_branches():
    # boundary r = N(p-1)/(N-p) = 2 at (N, m) = (4, 2)
    assert mass_rate(4, 2.0, 3.0) == ((8 - 2 * 3) / 2.0, 0.0, 0)
    assert mass_rate(4, 2.0, 2.0) == (2.0, 0.0, 1)
    e, d, lg = mass_rate(4, 2.0, 1.5)
    assert (e, lg) == (2 * 1.5 / 2.0, 0)
    assert d == pytest.approx((4 - 2 * 1.5) / 1.0)


def test_ratio_rate_composition_matches_direct_formula():
    # top branch: [(N-p)(p-1)r - (Np-2N+p)p] / (p(p-1))
    for (N, p, r) in [(5, 2.0, 2.0), (4, 2.0, 3.0), (3, 2.0, 3.5), (5, 3.0, 3.2)]:
        num = gradient_deficit_exponent(N, p)
        got, log_sign = compose_ratio_rate((num, 0.0, 0), mass_rate(N, p, r), 0.0)
        boundary = N * (p - 1.0) / (N - p)
        if r > boundary:
            want = ((N - p) * (p - 1) * r - (N * p - 2 * N + p) * p) / (p * (p - 1))
        elif r == boundary:
            want = (N - p * p) / (p * (p - 1))
        else:
            want = (N - p) * (p - r) / (p * (p - 1))
        assert got == pytest.approx(want, rel=1e-12)
        assert log_sign == (-1 if r == boundary else 0)


def test_cross_gradient_rate_branches():
    # boundary p = N(q-1)/(N-1) = 3.125 at (N, q) = (5, 3.5)
    e, d, lg = cross_gradient_rate(5, 3.3, 3.5)
    assert (e, d, lg) == (pytest.approx(5 * 0.2 / 3.5), 0.0, 0)
    e, d, lg = cross_gradient_rate(5, 3.125, 3.5)
    assert (e, lg) == (pytest.approx(15 / 28), 1)
    e, d, lg = cross_gradient_rate(5, 3.0, 3.5)
    assert e == pytest.approx(18 / 35)
    assert d == pytest.approx((5 * 2.5 - 4 * 3) / 2.5)


# kappa window


def test_kappa_window_fixture():
    P = ProblemParams(N=5, p=3, q=3.5, s=11)
    lo, hi, nonempty = kappa_window(P)
    assert lo == pytest.approx(-2.0 / 1.75, abs=1e-10)
    assert hi == pytest.approx(2.75 / 5.25, abs=1e-10)
    assert nonempty


def test_kappa_window_boundary_degenerates():
    s_b = 25 * 2.5 / (4 * 1.5)
    P = ProblemParams(N=5, p=3, q=3.5, s=s_b)
    lo, hi, nonempty = kappa_window(P)
    assert lo == pytest.approx(hi, abs=1e-12)
    assert not nonempty


def test_kappa_window_regime_error():
    with pytest.raises(RegimeError):
        kappa_window(ProblemParams(N=5, p=3.2, q=3.5, s=11))


def test_kappa_window_matches_s_inequalities():
    # nonempty iff the three small-p case inequalities on s hold
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(400):
        N = int(rng.integers(4, 9))
        q = rng.uniform((N + 1) / 2 + 0.05, N - 0.5)
        p = rng.uniform(q * N / (N + 1) + 1e-3, N * (q - 1) / (N - 1) - 1e-3)
        if not (1 < p < q):
            continue
        s = rng.uniform(2.0, N * q / (N - q))
        P = ProblemParams(N=N, p=p, q=q, s=s)
        try:
            lo, hi, nonempty = kappa_window(P)
        except RegimeError:
            continue
        s1 = N**2 * (q - 1) / ((N - 1) * (N - q))          # kappa_low < kappa_high
        s2 = N * p / (N - q)                                # kappa_low < 1
        s3 = s1 - (N - q) / ((N - 1) * (q - 1))             # kappa_high > 0
        want = (s > s1) and (s > s2) and (s > s3)
        assert nonempty == want, (N, p, q, s)
        checked += 1
    assert checked > 100


# concentration ratios


def test_ratio_limits_p_phase_decays():
    # the r = p case of the first existence regime: rate eps^1, slowly clean
    P = ProblemParams(N=5, p=2, q=2.2, r=2)
    (rep,) = ratio_limits(P, EPS_GRID, which="p_phase")
    assert rep.theoretical_exponent == pytest.approx(1.0)
    assert rep.tends_to_zero
    assert rep.fit.relative_slope_error <= 0.25  # preasymptotic on this window


def test_ratio_limits_p_phase_top_branch_tight():
    P = ProblemParams(N=5, p=2, q=2.2, r=3)
    (rep,) = ratio_limits(P, EPS_GRID, which="p_phase")
    assert rep.theoretical_exponent == pytest.approx(2.5)
    assert rep.tends_to_zero
    assert rep.fit.relative_slope_error <= 0.10


def test_ratio_limits_p_phase_log_branch():
    # N = p^2 with r = p: ratio ~ 1/|log eps|
    P = ProblemParams(N=4, p=2, q=2.4, r=2)
    (rep,) = ratio_limits(P, EPS_GRID, which="p_phase")
    assert rep.theoretical_exponent == pytest.approx(0.0, abs=1e-14)
    assert rep.theoretical_log_sign == -1
    assert rep.monotone_decreasing
    assert rep.fit.log_factor_detected and rep.fit.log_sign == -1
    assert abs(rep.fit.fitted_slope) <= 0.05


def test_ratio_limits_p_phase_divergent_branch():
    # below the superlinearity window the ratio does not tend to zero
    P = ProblemParams(N=3, p=2, q=2.2, r=3.5)
    (rep,) = ratio_limits(P, EPS_GRID, which="p_phase")
    assert rep.theoretical_exponent < 0.0
    assert not rep.tends_to_zero


def test_ratio_limits_q_phase_auto_kappa():
    P = ProblemParams(N=5, p=3, q=3.5, s=11)
    reps = ratio_limits(P, EPS_GRID, which="q_phase", delta_rule="auto")
    names = {r.name for r in reps}
    assert names == {"cross_gradient_over_mass", "q_deficit_over_mass"}
    for rep in reps:
        assert rep.theoretical_exponent > 0.0
        assert rep.tends_to_zero, rep.name


def test_ratio_limits_q_phase_delta_one():
    P = ProblemParams(N=5, p=3.2, q=3.5, s=11)
    reps = ratio_limits(P, EPS_GRID, which="q_phase", delta_rule="one")
    for rep in reps:
        assert rep.theoretical_exponent > 0.0
        assert rep.tends_to_zero, rep.name
