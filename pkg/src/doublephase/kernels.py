"""Hot numeric kernels: flux map inversion and adaptive RK shooting loops.

Everything here is scalar-loop code compiled with numba (or run as plain
Python when ``DOUBLEPHASE_NUMBA=0``; see ``_accel``).  The radial state is
(u, W) where W = |u'|^{p-2}u' + a(r)|u'|^{q-2}u' is the scalar flux; the
conserved quantity r^{N-1} W obeys (r^{N-1} W)' = -r^{N-1} f, which in W-form
reads W' = -f - (N-1) W / r and stays regular down to the origin where
W = O(r).

Radial coefficient fields are encoded as (kind, c0, c1, k):
  kind 0 -> c0              (constant)
  kind 1 -> c0 + c1 * r**k  (power profile)
"""

from __future__ import annotations

import numpy as np

from ._accel import maybe_njit

# Dormand-Prince 5(4) tableau
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


@maybe_njit(cache=True)
def _sgn(x):
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


@maybe_njit(cache=True)
def flux_forward(s, a, p, q):
    """|s|^{p-2} s + a |s|^{q-2} s."""
    if s == 0.0:
        return 0.0
    m = abs(s)
    return _sgn(s) * (m ** (p - 1.0) + a * m ** (q - 1.0))


@maybe_njit(cache=True)
def flux_invert(w, a, p, q):
    """Unique s with |s|^{p-2}s + a|s|^{q-2}s = w (odd by sign split).

    Safeguarded Newton on [0, |w|^{1/(p-1)}]; the bracket is valid because
    the map dominates s^{p-1}.  Terminates at |g(s)-w| <= 1e-13 max(1,|w|)
    or a relative s-step below 1e-16.
    """
    if w == 0.0:
        return 0.0
    aw = abs(w)
    if a == 0.0:
        return _sgn(w) * aw ** (1.0 / (p - 1.0))
    hi = aw ** (1.0 / (p - 1.0))
    s_q = (aw / a) ** (1.0 / (q - 1.0))
    s = hi if hi < s_q else s_q
    lo = 0.0
    ftol = 1e-13 * max(1.0, aw)
    for _ in range(200):
        g = s ** (p - 1.0) + a * s ** (q - 1.0)
        f = g - aw
        if f > 0.0:
            hi = s
        else:
            lo = s
        if abs(f) <= ftol:
            break
        gp = (p - 1.0) * s ** (p - 2.0) + a * (q - 1.0) * s ** (q - 2.0)
        s_new = s - f / gp
        if not (lo < s_new < hi):
            s_new = 0.5 * (lo + hi)
        if abs(s_new - s) <= 1e-16 * s:
            s = s_new
            break
        s = s_new
    return _sgn(w) * s


@maybe_njit(cache=True)
def flux_invert_array(w, a, p, q):
    out = np.empty_like(w)
    for i in range(w.shape[0]):
        out[i] = flux_invert(w[i], a[i], p, q)
    return out


@maybe_njit(cache=True)
def _field_val(kind, c0, c1, k, r):
    if kind == 0:
        return c0
    return c0 + c1 * r ** k


@maybe_njit(cache=True)
def _eigen_rhs_u(W, p):
    if W == 0.0:
        return 0.0
    return _sgn(W) * abs(W) ** (1.0 / (p - 1.0))


@maybe_njit(cache=True)
def eigen_shoot(p, n_dim, radius, lam, rtol, atol):
    """Integrate the p-Laplacian eigen-ODE with u(0)=1, u'(0)=0; return u(R).

    Shooting residual for the eigenvalue bisection: u(R) changes sign at the
    first Dirichlet eigenvalue.  Early exit once u is decisively negative.
    Returns NaN if the step controller stalls.
    """
    r0 = radius * 1e-8
    pm1 = p - 1.0
    # series start: u = 1 - ((lam/N)^{1/(p-1)} (p-1)/p) r^{p/(p-1)}
    u = 1.0 - (lam / n_dim) ** (1.0 / pm1) * r0 ** (p / pm1) * pm1 / p
    W = -lam * r0 / n_dim
    r = r0
    h = radius * 1e-4
    nm1 = n_dim - 1.0
    for _ in range(2000000):
        if r >= radius:
            break
        if h > radius - r:
            h = radius - r
        # stage 1
        k1u = _eigen_rhs_u(W, p)
        k1w = -lam * _sgn(u) * abs(u) ** pm1 - nm1 * W / r
        r2 = r + _A21 * h
        u2 = u + h * _A21 * k1u
        w2 = W + h * _A21 * k1w
        k2u = _eigen_rhs_u(w2, p)
        k2w = -lam * _sgn(u2) * abs(u2) ** pm1 - nm1 * w2 / r2
        r3 = r + 0.3 * h
        u3 = u + h * (_A31 * k1u + _A32 * k2u)
        w3 = W + h * (_A31 * k1w + _A32 * k2w)
        k3u = _eigen_rhs_u(w3, p)
        k3w = -lam * _sgn(u3) * abs(u3) ** pm1 - nm1 * w3 / r3
        r4 = r + 0.8 * h
        u4 = u + h * (_A41 * k1u + _A42 * k2u + _A43 * k3u)
        w4 = W + h * (_A41 * k1w + _A42 * k2w + _A43 * k3w)
        k4u = _eigen_rhs_u(w4, p)
        k4w = -lam * _sgn(u4) * abs(u4) ** pm1 - nm1 * w4 / r4
        r5 = r + 8.0 / 9.0 * h
        u5 = u + h * (_A51 * k1u + _A52 * k2u + _A53 * k3u + _A54 * k4u)
        w5 = W + h * (_A51 * k1w + _A52 * k2w + _A53 * k3w + _A54 * k4w)
        k5u = _eigen_rhs_u(w5, p)
        k5w = -lam * _sgn(u5) * abs(u5) ** pm1 - nm1 * w5 / r5
        r6 = r + h
        u6 = u + h * (_A61 * k1u + _A62 * k2u + _A63 * k3u + _A64 * k4u + _A65 * k5u)
        w6 = W + h * (_A61 * k1w + _A62 * k2w + _A63 * k3w + _A64 * k4w + _A65 * k5w)
        k6u = _eigen_rhs_u(w6, p)
        k6w = -lam * _sgn(u6) * abs(u6) ** pm1 - nm1 * w6 / r6
        un = u + h * (_B1 * k1u + _B3 * k3u + _B4 * k4u + _B5 * k5u + _B6 * k6u)
        wn = W + h * (_B1 * k1w + _B3 * k3w + _B4 * k4w + _B5 * k5w + _B6 * k6w)
        k7u = _eigen_rhs_u(wn, p)
        k7w = -lam * _sgn(un) * abs(un) ** pm1 - nm1 * wn / r6
        eu = h * (_E1 * k1u + _E3 * k3u + _E4 * k4u + _E5 * k5u + _E6 * k6u + _E7 * k7u)
        ew = h * (_E1 * k1w + _E3 * k3w + _E4 * k4w + _E5 * k5w + _E6 * k6w + _E7 * k7w)
        su = atol + rtol * max(abs(u), abs(un))
        sw = atol + rtol * max(abs(W), abs(wn))
        err = np.sqrt(0.5 * ((eu / su) ** 2 + (ew / sw) ** 2))
        if err <= 1.0:
            r = r6
            u = un
            W = wn
            if u < 0.0:
                # u decreases from 1 while lam < lambda_1, so any crossing
                # settles the bisection predicate
                return u
        if err == 0.0:
            fac = 5.0
        else:
            fac = 0.9 * err ** -0.2
            if fac < 0.2:
                fac = 0.2
            elif fac > 5.0:
                fac = 5.0
        h *= fac
        if h < radius * 1e-15:
            return np.nan
    return u


@maybe_njit(cache=True)
def bvp_integrate(
    p,
    q,
    n_dim,
    eta,
    grid,
    a_kind,
    a_c0,
    a_c1,
    a_k,
    f0_kind,
    f0_c0,
    f0_c1,
    f0_k,
    gammas,
    t_kinds,
    t_c0,
    t_c1,
    t_k,
    rtol,
    atol,
    adaptive,
):
    """Integrate the radial double phase BVP state (u, W) over the output grid.

    grid[0] must be 0; integration starts from a series seed at r0 = R*1e-8
    and lands exactly on every node.  With adaptive=False each interval is a
    single RK step (fixed-step mode for convergence-order studies).
    Returns (u_nodes, W_nodes, ok).
    """
    m = grid.shape[0]
    radius = grid[m - 1]
    u_out = np.zeros(m)
    w_out = np.zeros(m)
    nterms = gammas.shape[0]
    nm1 = n_dim - 1.0
    pm1 = p - 1.0

    r0 = radius * 1e-8
    f00 = _field_val(f0_kind, f0_c0, f0_c1, f0_k, 0.0)
    for j in range(nterms):
        if eta != 0.0:
            f00 += _field_val(t_kinds[j], t_c0[j], t_c1[j], t_k[j], 0.0) * _sgn(eta) * abs(eta) ** (
                gammas[j] - 1.0
            )
    w_seed = -f00 * r0 / n_dim
    u_seed = eta + pm1 / p * r0 * flux_invert(w_seed, _field_val(a_kind, a_c0, a_c1, a_k, r0), p, q)

    u_out[0] = eta
    w_out[0] = 0.0

    u = u_seed
    W = w_seed
    r = r0
    ok = True
    for i in range(1, m):
        target = grid[i]
        if adaptive:
            h = (target - r) * 0.1
        else:
            h = target - r
        guard = 0
        while r < target:
            guard += 1
            if guard > 2000000:
                ok = False
                break
            if h > target - r:
                h = target - r
            # 7-stage Dormand-Prince step on (u, W)
            a_r = _field_val(a_kind, a_c0, a_c1, a_k, r)
            fv = _field_val(f0_kind, f0_c0, f0_c1, f0_k, r)
            for j in range(nterms):
                if u != 0.0:
                    fv += _field_val(t_kinds[j], t_c0[j], t_c1[j], t_k[j], r) * _sgn(u) * abs(u) ** (
                        gammas[j] - 1.0
                    )
            k1u = flux_invert(W, a_r, p, q)
            k1w = -fv - nm1 * W / r

            rr = r + _A21 * h
            uu = u + h * _A21 * k1u
            ww = W + h * _A21 * k1w
            a_r = _field_val(a_kind, a_c0, a_c1, a_k, rr)
            fv = _field_val(f0_kind, f0_c0, f0_c1, f0_k, rr)
            for j in range(nterms):
                if uu != 0.0:
                    fv += _field_val(t_kinds[j], t_c0[j], t_c1[j], t_k[j], rr) * _sgn(uu) * abs(uu) ** (
                        gammas[j] - 1.0
                    )
            k2u = flux_invert(ww, a_r, p, q)
            k2w = -fv - nm1 * ww / rr

            rr = r + 0.3 * h
            uu = u + h * (_A31 * k1u + _A32 * k2u)
            ww = W + h * (_A31 * k1w + _A32 * k2w)
            a_r = _field_val(a_kind, a_c0, a_c1, a_k, rr)
            fv = _field_val(f0_kind, f0_c0, f0_c1, f0_k, rr)
            for j in range(nterms):
                if uu != 0.0:
                    fv += _field_val(t_kinds[j], t_c0[j], t_c1[j], t_k[j], rr) * _sgn(uu) * abs(uu) ** (
                        gammas[j] - 1.0
                    )
            k3u = flux_invert(ww, a_r, p, q)
            k3w = -fv - nm1 * ww / rr

            rr = r + 0.8 * h
            uu = u + h * (_A41 * k1u + _A42 * k2u + _A43 * k3u)
            ww = W + h * (_A41 * k1w + _A42 * k2w + _A43 * k3w)
            a_r = _field_val(a_kind, a_c0, a_c1, a_k, rr)
            fv = _field_val(f0_kind, f0_c0, f0_c1, f0_k, rr)
            for j in range(nterms):
                if uu != 0.0:
                    fv += _field_val(t_kinds[j], t_c0[j], t_c1[j], t_k[j], rr) * _sgn(uu) * abs(uu) ** (
                        gammas[j] - 1.0
                    )
            k4u = flux_invert(ww, a_r, p, q)
            k4w = -fv - nm1 * ww / rr

            rr = r + 8.0 / 9.0 * h
            uu = u + h * (_A51 * k1u + _A52 * k2u + _A53 * k3u + _A54 * k4u)
            ww = W + h * (_A51 * k1w + _A52 * k2w + _A53 * k3w + _A54 * k4w)
            a_r = _field_val(a_kind, a_c0, a_c1, a_k, rr)
            fv = _field_val(f0_kind, f0_c0, f0_c1, f0_k, rr)
            for j in range(nterms):
                if uu != 0.0:
                    fv += _field_val(t_kinds[j], t_c0[j], t_c1[j], t_k[j], rr) * _sgn(uu) * abs(uu) ** (
                        gammas[j] - 1.0
                    )
            k5u = flux_invert(ww, a_r, p, q)
            k5w = -fv - nm1 * ww / rr

            rr = r + h
            uu = u + h * (_A61 * k1u + _A62 * k2u + _A63 * k3u + _A64 * k4u + _A65 * k5u)
            ww = W + h * (_A61 * k1w + _A62 * k2w + _A63 * k3w + _A64 * k4w + _A65 * k5w)
            a_r = _field_val(a_kind, a_c0, a_c1, a_k, rr)
            fv = _field_val(f0_kind, f0_c0, f0_c1, f0_k, rr)
            for j in range(nterms):
                if uu != 0.0:
                    fv += _field_val(t_kinds[j], t_c0[j], t_c1[j], t_k[j], rr) * _sgn(uu) * abs(uu) ** (
                        gammas[j] - 1.0
                    )
            k6u = flux_invert(ww, a_r, p, q)
            k6w = -fv - nm1 * ww / rr

            un = u + h * (_B1 * k1u + _B3 * k3u + _B4 * k4u + _B5 * k5u + _B6 * k6u)
            wn = W + h * (_B1 * k1w + _B3 * k3w + _B4 * k4w + _B5 * k5w + _B6 * k6w)
            if not adaptive:
                r = rr
                u = un
                W = wn
                continue
            a_r = _field_val(a_kind, a_c0, a_c1, a_k, rr)
            fv = _field_val(f0_kind, f0_c0, f0_c1, f0_k, rr)
            for j in range(nterms):
                if un != 0.0:
                    fv += _field_val(t_kinds[j], t_c0[j], t_c1[j], t_k[j], rr) * _sgn(un) * abs(un) ** (
                        gammas[j] - 1.0
                    )
            k7u = flux_invert(wn, a_r, p, q)
            k7w = -fv - nm1 * wn / rr
            eu = h * (_E1 * k1u + _E3 * k3u + _E4 * k4u + _E5 * k5u + _E6 * k6u + _E7 * k7u)
            ew = h * (_E1 * k1w + _E3 * k3w + _E4 * k4w + _E5 * k5w + _E6 * k6w + _E7 * k7w)
            su = atol + rtol * max(abs(u), abs(un))
            sw = atol + rtol * max(abs(W), abs(wn))
            err = np.sqrt(0.5 * ((eu / su) ** 2 + (ew / sw) ** 2))
            if err <= 1.0:
                r = rr
                u = un
                W = wn
            if err == 0.0:
                fac = 5.0
            else:
                fac = 0.9 * err ** -0.2
                if fac < 0.2:
                    fac = 0.2
                elif fac > 5.0:
                    fac = 5.0
            h *= fac
            if h < radius * 1e-15:
                ok = False
                break
        if not ok:
            break
        u_out[i] = u
        w_out[i] = W
    return u_out, w_out, ok
