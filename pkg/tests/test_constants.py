import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import jn_zeros

from doublephase.constants import (
    best_sobolev_constant,
    extremal_rayleigh_quotient,
    first_eigenvalue_p,
    flux_forward,
    invert_flux,
    talenti_constant,
    ConstantsTable,
)


def test_best_constant_n3_closed_value():
    # independent closed form for (m, N) = (2, 3): 3 (pi/2)^{4/3}
    want = 3.0 * (math.pi / 2.0) ** (4.0 / 3.0)
    assert best_sobolev_constant(2, 3) == pytest.approx(want, rel=1e-12)
    assert want == pytest.approx(5.4779, abs=5e-5)


@pytest.mark.parametrize("m,N", [(2, 3), (2, 4), (2.5, 3), (3.5, 5), (2.2, 5)])
def test_dual_route_agreement(m, N):
    quad = extremal_rayleigh_quotient(m, N)
    closed = talenti_constant(m, N)
    assert quad == pytest.approx(closed, rel=1e-8)


def test_rayleigh_quotient_dilation_invariant():
    a = extremal_rayleigh_quotient(2, 3, eps=1.0)
    b = extremal_rayleigh_quotient(2, 3, eps=0.5)
    assert abs(a - b) < 1e-10 * a


def test_eigenvalue_laplacian_ball_n3():
    assert first_eigenvalue_p(2, 3, 1.0) == pytest.approx(math.pi**2, abs=1e-6)


def test_eigenvalue_laplacian_ball_n4_bessel_oracle():
    # radial Laplacian eigenfunction on the unit ball in R^4 vanishes at the
    # first zero of J_1
    want = jn_zeros(1, 1)[0] ** 2
    assert first_eigenvalue_p(2, 4, 1.0) == pytest.approx(want, rel=1e-8)


def test_eigenvalue_radius_rescaling():
    assert first_eigenvalue_p(2, 3, 2.0) == pytest.approx(math.pi**2 / 4.0, rel=1e-8)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_eigenvalue_scaling_ratio(p):
    lam_1 = first_eigenvalue_p(p, 3, 1.0)
    lam_2 = first_eigenvalue_p(p, 3, 2.0)
    assert lam_1 / lam_2 == pytest.approx(2.0**p, rel=1e-8)


def test_eigenvalue_monotone_in_radius():
    vals = [first_eigenvalue_p(2.5, 3, R) for R in (0.5, 1.0, 2.0, 4.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_eigenvalue_scale_product_constant():
    vals = [first_eigenvalue_p(2.5, 3, R) * R**2.5 for R in (0.5, 1.0, 2.0)]
    assert max(vals) - min(vals) <= 1e-8 * max(vals)


def test_invert_flux_p_reduction():
    for w in (-3.0, -0.2, 0.0, 0.7, 5.0):
        assert invert_flux(w, 0.0, 2.5, 3.0) == pytest.approx(
            math.copysign(abs(w) ** (1 / 1.5), w), rel=1e-14, abs=1e-300
        )


def test_invert_flux_integer_case():
    assert invert_flux(2.0, 1.0, 2.0, 4.0) == pytest.approx(1.0, rel=1e-13)


def test_invert_flux_roundtrip_grid():
    rng = np.random.default_rng(2024)
    s = rng.uniform(-10, 10, size=1000)
    for a, p, q in [(0.5, 2.0, 2.5), (3.0, 1.5, 4.0), (1.0, 3.0, 3.6)]:
        w = np.array([flux_forward(x, a, p, q) for x in s])
        back = invert_flux(w, a, p, q)
        assert np.max(np.abs(back - s)) <= 1e-10


def test_invert_flux_odd():
    for w in (0.3, 1.7, 42.0):
        assert invert_flux(-w, 2.0, 1.8, 2.6) == -invert_flux(w, 2.0, 1.8, 2.6)


def test_invert_flux_residual_contract():
    rng = np.random.default_rng(7)
    for _ in range(200):
        w = rng.uniform(-50, 50)
        a = rng.uniform(0, 5)
        p = rng.uniform(1.2, 3.5)
        q = p + rng.uniform(0.1, 2.0)
        s = invert_flux(w, a, p, q)
        g = flux_forward(s, a, p, q)
        assert abs(g - w) <= 1e-12 * max(1.0, abs(w))


@settings(deadline=None, max_examples=60)
@given(
    w=st.floats(-1e4, 1e4),
    a=st.floats(0.0, 10.0),
    p=st.floats(1.2, 3.0),
    dq=st.floats(0.1, 2.0),
)
def test_invert_flux_roundtrip_property(w, a, p, dq):
    q = p + dq
    s = invert_flux(w, a, p, q)
    assert abs(flux_forward(s, a, p, q) - w) <= 1e-12 * max(1.0, abs(w))


def test_invert_flux_rejects_bad_exponents():
    with pytest.raises(ValueError):
        invert_flux(1.0, 0.5, 1.0, 2.0)
    with pytest.raises(ValueError):
        invert_flux(1.0, -0.1, 2.0, 2.5)


def test_constants_table_cache_roundtrip(tmp_path, table_p2_q25_n3):
    t1 = ConstantsTable.compute(2.0, 2.5, 3, 1.0, cache_dir=tmp_path)
    t2 = ConstantsTable.compute(2.0, 2.5, 3, 1.0, cache_dir=tmp_path)
    assert t1 == t2
    assert t1.S_p == table_p2_q25_n3.S_p
    assert list(tmp_path.glob("constants_*.json"))


def test_constants_table_positive(table_p2_q25_n3):
    C = table_p2_q25_n3
    assert C.S_p > 0 and C.S_q > 0 and C.lambda1_p > 0
