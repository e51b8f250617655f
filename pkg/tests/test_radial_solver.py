import math

import numpy as np
import pytest

from doublephase.constants import flux_forward, invert_flux
from doublephase.errors import NoSolutionFound
from doublephase.fields import CoefficientField, PowerNonlinearity, PowerTerm
from doublephase.params import ProblemParams
from doublephase.quadrature import panel_rule
from doublephase.radial_solver import (
    RadialSolution,
    residual_check,
    solve_radial_bvp,
    torsion_profile,
)

F_ONE = PowerNonlinearity.constant(1.0)
A_ZERO = CoefficientField.constant(0.0)
A_ONE = CoefficientField.constant(1.0)


def _params(p, q, N, R=1.0):
    return ProblemParams(N=N, p=p, q=q, domain_radius=R)


def test_torsion_p2_profile_and_peak():
    P = _params(2, 2.5, 3)
    sol = solve_radial_bvp(P, A_ZERO, F_ONE, grid_size=1024)
    assert sol.shooting_value == pytest.approx(1.0 / 6.0, abs=1e-10)
    want = (1.0 - sol.grid**2) / 6.0
    assert np.max(np.abs(sol.u - want)) <= 1e-9


def test_torsion_p3_peak():
    P = _params(3, 3.5, 3)
    sol = solve_radial_bvp(P, A_ZERO, F_ONE, grid_size=1024)
    assert sol.shooting_value == pytest.approx((2.0 / 3.0) * 3.0**-0.5, abs=1e-7)


def test_torsion_closed_form_helper():
    assert torsion_profile(2, 3, 1.0) == pytest.approx(1.0 / 6.0, rel=1e-15)
    assert torsion_profile(3, 3, 1.0) == pytest.approx((2.0 / 3.0) * 3.0**-0.5, rel=1e-15)


def test_double_phase_torsion_flux_and_peak():
    P = _params(2, 2.5, 3)
    sol = solve_radial_bvp(P, A_ONE, F_ONE, grid_size=1024)
    # the conserved flux integrates in closed form: W = -r/3
    assert np.max(np.abs(sol.flux + sol.grid / 3.0)) <= 1e-12
    nodes, weights = panel_rule(np.linspace(0.0, 1.0, 33), order=32)
    vals = np.array([invert_flux(t / 3.0, 1.0, 2.0, 2.5) for t in nodes])
    direct = float(np.dot(weights, vals))
    assert sol.shooting_value == pytest.approx(direct, rel=1e-8)


def test_flux_consistency_along_profile():
    P = _params(2, 2.5, 3)
    sol = solve_radial_bvp(P, A_ONE, F_ONE, grid_size=512)
    a_vals = A_ONE.value(sol.grid)
    back = np.array(
        [flux_forward(d, a, P.p, P.q) for d, a in zip(sol.du, a_vals)]
    )
    assert np.max(np.abs(back - sol.flux)) <= 1e-12 * max(1.0, np.max(np.abs(sol.flux)))


def test_boundary_and_origin_conditions():
    P = _params(2, 2.5, 3)
    sol = solve_radial_bvp(P, A_ZERO, F_ONE, grid_size=512)
    assert abs(sol.u[-1]) <= 1e-10 * np.max(np.abs(sol.u))
    assert sol.du[0] == 0.0
    assert sol.flux[0] == 0.0


def test_residual_small_and_second_order():
    P = _params(2, 2.5, 3)
    res = {}
    for g in (1024, 2048, 4096):
        res[g] = solve_radial_bvp(P, A_ZERO, F_ONE, grid_size=g).residual
    assert res[4096] <= 1e-6
    assert res[1024] / res[2048] == pytest.approx(4.0, rel=0.2)
    assert res[2048] / res[4096] == pytest.approx(4.0, rel=0.2)


def test_zero_source_gives_zero_solution():
    P = _params(2, 2.5, 3)
    sol = solve_radial_bvp(P, A_ZERO, PowerNonlinearity.constant(0.0), grid_size=512)
    assert np.all(sol.u == 0.0)
    assert sol.residual == 0.0


def test_positive_source_solution_positive_monotone():
    P = _params(2.2, 2.6, 4)
    f = PowerNonlinearity(
        source=CoefficientField.constant(1.0),
        terms=(PowerTerm(CoefficientField.constant(0.5), 2.0),),
    )
    sol = solve_radial_bvp(P, A_ONE, f, grid_size=512)
    assert np.all(sol.u[:-1] > 0.0)
    assert np.all(np.diff(sol.u) <= 1e-12)


def test_fixed_step_convergence_order_at_least_two():
    # p = 1.8 torsion: u ~ 1 - r^{2.25}, so the fixed-step scheme sees a
    # mildly singular sixth derivative and lands around order 2.25
    P = _params(1.8, 2.1, 3)
    want = torsion_profile(1.8, 3, 1.0)
    errs = []
    for g in (256, 512, 1024):
        sol = solve_radial_bvp(P, A_ZERO, F_ONE, grid_size=g, adaptive=False)
        errs.append(abs(sol.shooting_value - want))
    order1 = math.log2(errs[0] / errs[1])
    order2 = math.log2(errs[1] / errs[2])
    assert order1 >= 2.0
    assert order2 >= 2.0


def test_nonlinear_source_term_shooting():
    # f = 1 + 0.3|u|^{0.5} u: genuine shooting (secant alone cannot land)
    P = _params(2, 2.5, 3)
    f = PowerNonlinearity(
        source=CoefficientField.constant(1.0),
        terms=(PowerTerm(CoefficientField.constant(0.3), 2.5),),
    )
    sol = solve_radial_bvp(P, A_ZERO, f, grid_size=512)
    assert sol.residual <= 1e-5
    assert sol.shooting_value > torsion_profile(2, 3, 1.0)  # extra source mass


def test_no_solution_status():
    P = _params(2, 2.5, 3)
    with pytest.raises(NoSolutionFound):
        solve_radial_bvp(P, A_ZERO, PowerNonlinearity.constant(-1.0), grid_size=512)


def test_grid_size_validation():
    P = _params(2, 2.5, 3)
    with pytest.raises(ValueError):
        solve_radial_bvp(P, A_ZERO, F_ONE, grid_size=128)
    with pytest.raises(ValueError):
        solve_radial_bvp(P, A_ZERO, F_ONE, grid_size=511)


def test_csv_roundtrip_exact():
    P = _params(2, 2.5, 3)
    sol = solve_radial_bvp(P, A_ONE, F_ONE, grid_size=256)
    text = sol.to_csv()
    r, u, du, flux = RadialSolution.columns_from_csv(text)
    assert np.array_equal(r, sol.grid)
    assert np.array_equal(u, sol.u)
    assert np.array_equal(du, sol.du)
    assert np.array_equal(flux, sol.flux)


def test_residual_check_detects_corruption():
    P = _params(2, 2.5, 3)
    sol = solve_radial_bvp(P, A_ZERO, F_ONE, grid_size=512)
    bad = RadialSolution(
        grid=sol.grid,
        u=sol.u * 1.05,
        du=sol.du,
        flux=sol.flux * 1.05,
        shooting_value=sol.shooting_value,
        residual=math.nan,
        params=sol.params,
        a_field=sol.a_field,
        nonlinearity=sol.nonlinearity,
    )
    assert residual_check(bad) > 1e-3
