"""Analytic constants: best Sobolev constants, p-Laplacian eigenvalues, flux inversion.

The best constant S_m of the embedding D^{1,m}(R^N) -> L^{m*}(R^N) is
computed two independent ways and cross-checked:

  * radial quadrature of the Rayleigh quotient on the extremal profile
    U(x) = (eps^{m/(m-1)} + |x|^{m/(m-1)})^{-(N-m)/m}, and
  * the classical closed form via gamma functions.

The first Dirichlet eigenvalue of the p-Laplacian on a ball is obtained by
shooting on the radial ODE (r^{N-1} |u'|^{p-2} u')' = -lam r^{N-1} |u|^{p-2} u
with u'(0) = 0, bisecting lam on the sign of u(R).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from . import kernels
from .errors import NumericError

__all__ = [
    "ConstantsTable",
    "best_sobolev_constant",
    "talenti_constant",
    "extremal_rayleigh_quotient",
    "first_eigenvalue_p",
    "invert_flux",
    "flux_forward",
]

_EIGEN_RTOL = 3e-12
_EIGEN_ATOL = 1e-14


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere S^{N-1}."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


def _integral_0_inf(f, epsrel: float = 1e-13) -> float:
    """Adaptive quadrature over (0, inf), split at 1 with a 1/r fold."""
    head, _ = quad(f, 0.0, 1.0, epsabs=0.0, epsrel=epsrel, limit=400)
    tail, _ = quad(lambda s: f(1.0 / s) / s**2, 0.0, 1.0, epsabs=0.0, epsrel=epsrel, limit=400)
    return head + tail


def extremal_rayleigh_quotient(m: float, N: int, eps: float = 1.0) -> float:
    """Rayleigh quotient of the dilated extremal profile (dilation invariant)."""
    if not (1.0 < m < N):
        raise ValueError(f"need 1 < m < N, got m={m}, N={N}")
    mp = m / (m - 1.0)
    am = (N - m) / (m - 1.0)
    m_star = N * m / (N - m)
    omega = sphere_area(N)

    # |U'|^m = am^m r^{mp} (eps^{mp} + r^{mp})^{-N}; U^{m*} has the same -N power
    def grad_integrand(r):
        return am**m * r**mp * (eps**mp + r**mp) ** (-N) * r ** (N - 1.0)

    def star_integrand(r):
        return (eps**mp + r**mp) ** (-N) * r ** (N - 1.0)

    i_grad = _integral_0_inf(grad_integrand)
    i_star = _integral_0_inf(star_integrand)
    return omega ** (1.0 - m / m_star) * i_grad / i_star ** (m / m_star)


def talenti_constant(m: float, N: int) -> float:
    """Closed-form best constant, independent of the quadrature route."""
    if not (1.0 < m < N):
        raise ValueError(f"need 1 < m < N, got m={m}, N={N}")
    log_gamma_ratio = (
        gammaln(1.0 + N / 2.0) + gammaln(N) - gammaln(N / m) - gammaln(1.0 + N - N / m)
    )
    log_c = (
        -0.5 * math.log(math.pi)
        - math.log(N) / m
        + (1.0 - 1.0 / m) * math.log((m - 1.0) / (N - m))
        + log_gamma_ratio / N
    )
    return math.exp(-m * log_c)


def best_sobolev_constant(m: float, N: int, cross_check_tol: float = 1e-8) -> float:
    """S_m by extremal-profile quadrature, cross-checked against the closed form."""
    s_quad = extremal_rayleigh_quotient(m, N, eps=1.0)
    s_closed = talenti_constant(m, N)
    rel = abs(s_quad - s_closed) / abs(s_closed)
    if rel > cross_check_tol:
        raise NumericError(
            f"Sobolev constant routes disagree: quadrature={s_quad!r}, "
            f"closed form={s_closed!r}, rel={rel:.3e}",
            quadrature=s_quad,
            closed_form=s_closed,
            achieved=rel,
        )
    return s_quad


def first_eigenvalue_p(p: float, N: int, R: float, rel_tol: float = 1e-13) -> float:
    """First Dirichlet eigenvalue of the p-Laplacian on the ball of radius R."""
    if not (p > 1.0 and N >= 2 and R > 0.0):
        raise ValueError("need p > 1, N >= 2, R > 0")

    def end_value(lam: float) -> float:
        val = kernels.eigen_shoot(p, float(N), R, lam, _EIGEN_RTOL, _EIGEN_ATOL)
        if np.isnan(val):
            raise NumericError(f"eigen shooting stalled at lam={lam!r}")
        return val

    lo = 1.0 / R**p
    while end_value(lo) <= 0.0:
        lo *= 0.5
        if lo < 1e-300:
            raise NumericError("failed to bracket eigenvalue from below")
    hi = 2.0 * lo
    while end_value(hi) > 0.0:
        hi *= 2.0
        if hi > 1e300:
            raise NumericError("failed to bracket eigenvalue from above")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if end_value(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def flux_forward(s, a_val: float, p: float, q: float):
    """|s|^{p-2}s + a |s|^{q-2}s, elementwise."""
    if np.ndim(s) == 0:
        return kernels.flux_forward(float(s), float(a_val), float(p), float(q))
    s = np.asarray(s, dtype=float)
    a_arr = np.full_like(s, float(a_val))
    out = np.empty_like(s)
    for i, (si, ai) in enumerate(zip(s.ravel(), a_arr.ravel())):
        out.ravel()[i] = kernels.flux_forward(si, ai, p, q)
    return out


def invert_flux(w, a_val: float, p: float, q: float):
    """Unique s solving |s|^{p-2}s + a|s|^{q-2}s = w (odd, elementwise).

    Residual |g(s) - w| <= 1e-12 max(1, |w|).
    """
    if not (p > 1.0 and q > 1.0):
        raise ValueError("need p, q > 1")
    if a_val < 0.0:
        raise ValueError("flux weight must be nonnegative")
    if np.ndim(w) == 0:
        return kernels.flux_invert(float(w), float(a_val), float(p), float(q))
    w = np.ascontiguousarray(np.asarray(w, dtype=float))
    a_arr = np.full_like(w, float(a_val))
    return kernels.flux_invert_array(w, a_arr, p, q)


@dataclass(frozen=True)
class ConstantsTable:
    S_p: float
    S_q: float
    lambda1_p: float
    radius: float
    method_tags: tuple = ()
    tolerances: tuple = ()

    def to_json_dict(self) -> dict:
        return {
            "format_version": 1,
            "S_p": self.S_p,
            "S_q": self.S_q,
            "lambda1_p": self.lambda1_p,
            "radius": self.radius,
            "method_tags": list(self.method_tags),
            "tolerances": list(self.tolerances),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ConstantsTable":
        return cls(
            S_p=float(data["S_p"]),
            S_q=float(data["S_q"]),
            lambda1_p=float(data["lambda1_p"]),
            radius=float(data["radius"]),
            method_tags=tuple(tuple(t) for t in data.get("method_tags", ())),
            tolerances=tuple(tuple(t) for t in data.get("tolerances", ())),
        )

    @classmethod
    def compute(
        cls, p: float, q: float, N: int, R: float, cache_dir: str | Path | None = None
    ) -> "ConstantsTable":
        """Build (or load from cache) the table for exponents (p, q) on B_R."""
        cache_path = None
        if cache_dir is not None:
            key = json.dumps([repr(float(p)), repr(float(q)), int(N), repr(float(R))])
            digest = hashlib.sha256(key.encode()).hexdigest()[:24]
            cache_path = Path(cache_dir) / f"constants_{digest}.json"
            if cache_path.exists():
                return cls.from_json_dict(json.loads(cache_path.read_text()))
        table = cls(
            S_p=best_sobolev_constant(p, N),
            S_q=best_sobolev_constant(q, N),
            lambda1_p=first_eigenvalue_p(p, N, R),
            radius=float(R),
            method_tags=(
                ("S_p", "extremal quadrature + closed-form cross-check"),
                ("S_q", "extremal quadrature + closed-form cross-check"),
                ("lambda1_p", "radial shooting + bisection"),
            ),
            tolerances=(
                ("S_p", 1e-8),
                ("S_q", 1e-8),
                ("lambda1_p", 1e-10),
            ),
        )
        if cache_path is not None:
            cache_path.parent.mkdir(parents=True, exist_ok=True)
            cache_path.write_text(json.dumps(table.to_json_dict(), sort_keys=True, indent=1))
        return table
