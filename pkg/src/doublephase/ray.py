"""Mountain-pass ray analysis.

For a direction v, the energy along the ray t -> E(t v) reduces to

    phi(t) = (t^p/p) A_p + (t^q/q) A_q - (t^e/e) B_sub
             - (t^{p*}/p*) M_pstar - (t^{q*}/q*) M_qstar,

with coefficients given by quadrature norms of v (profile module).  The
existence arguments need max_{t>=0} phi to sit strictly below the
single-phase threshold (1/N) S_p^{N/p} / mu^{(N-p)/p} (p-concentration with
a lambda |u|^r perturbation) or (1/N) (a0 S_q)^{N/q} / b_inf^{(N-q)/q}
(q-concentration with a c0 |u|^s perturbation); the subcritical term is what
buys strictness for small concentration scales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bubbles
from .constants import ConstantsTable
from .errors import RegimeError
from .params import CaseTag, ExistenceCase, ProblemParams, classify_existence_case
from .threshold import beta_lower_bound_b, beta_lower_bound_mu

__all__ = [
    "RayEnergy",
    "RayMaxResult",
    "energy_along_ray",
    "ray_derivative",
    "maximize_ray",
    "critical_scale_t0",
    "verify_below_threshold",
]


@dataclass(frozen=True)
class RayEnergy:
    A_p: float
    A_q: float = 0.0
    B_sub: float = 0.0
    M_pstar: float = 0.0
    M_qstar: float = 0.0
    p: float = 2.0
    q: float = 2.5
    sub_exponent: float = 2.0
    p_star: float = 4.0
    q_star: float = 10.0

    def __post_init__(self):
        if self.A_p < 0.0 or self.A_q < 0.0:
            raise ValueError("gradient coefficients must be nonnegative")
        if self.M_pstar < 0.0 or self.M_qstar < 0.0:
            raise ValueError("critical coefficients must be nonnegative")

    @property
    def has_critical_term(self) -> bool:
        return self.M_pstar > 0.0 or self.M_qstar > 0.0


def energy_along_ray(E: RayEnergy, t) -> float:
    """phi(t); terms with zero coefficient are omitted."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("ray parameter must be nonnegative")
    out = np.zeros_like(t)
    if E.A_p:
        out = out + t**E.p / E.p * E.A_p
    if E.A_q:
        out = out + t**E.q / E.q * E.A_q
    if E.B_sub:
        out = out - t**E.sub_exponent / E.sub_exponent * E.B_sub
    if E.M_pstar:
        out = out - t**E.p_star / E.p_star * E.M_pstar
    if E.M_qstar:
        out = out - t**E.q_star / E.q_star * E.M_qstar
    return float(out) if out.ndim == 0 else out


def ray_derivative(E: RayEnergy, t) -> float:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    if E.A_p:
        out = out + t ** (E.p - 1.0) * E.A_p
    if E.A_q:
        out = out + t ** (E.q - 1.0) * E.A_q
    if E.B_sub:
        out = out - t ** (E.sub_exponent - 1.0) * E.B_sub
    if E.M_pstar:
        out = out - t ** (E.p_star - 1.0) * E.M_pstar
    if E.M_qstar:
        out = out - t ** (E.q_star - 1.0) * E.M_qstar
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RayMaxResult:
    t_max: float
    phi_max: float
    bracket: tuple
    status: str = "bounded"
    threshold: float | None = None
    below_threshold: bool | None = None
    margin: float | None = None
    epsilon: float | None = None


def _reference_scale(E: RayEnergy) -> float:
    pairs = []
    for a_coef, a_exp in ((E.A_p, E.p), (E.A_q, E.q)):
        for m_coef, m_exp in ((E.M_pstar, E.p_star), (E.M_qstar, E.q_star)):
            if a_coef > 0.0 and m_coef > 0.0 and m_exp > a_exp:
                pairs.append((a_coef / m_coef) ** (1.0 / (m_exp - a_exp)))
    if not pairs:
        return 1.0
    return max(pairs)


def maximize_ray(E: RayEnergy, grid_points: int = 512) -> RayMaxResult:
    """Global maximum of phi over t >= 0.

    Locates every sign change of phi' on a log grid spanning
    [1e-6 t_ref, 1e3 t_ref] (t_ref the dominant two-term stationary scale)
    and polishes each by bisection; several critical points can coexist when
    subcritical and critical terms compete, so all are compared.  Rays with
    no critical term are unbounded above and reported as such.
    """
    if not E.has_critical_term:
        return RayMaxResult(math.inf, math.inf, (0.0, math.inf), status="unbounded")
    t_ref = _reference_scale(E)
    lo, hi = 1e-6 * t_ref, 1e3 * t_ref
    grid = np.geomspace(lo, hi, grid_points)
    with np.errstate(over="ignore"):
        dphi = ray_derivative(E, grid)
    best_t, best_phi = 0.0, 0.0
    sign = np.sign(dphi)
    for i in np.nonzero(sign[:-1] * sign[1:] < 0.0)[0]:
        a, b = grid[i], grid[i + 1]
        fa = dphi[i]
        for _ in range(200):
            mid = 0.5 * (a + b)
            fm = ray_derivative(E, mid)
            if fm == 0.0:
                a = b = mid
                break
            if fa * fm < 0.0:
                b = mid
            else:
                a, fa = mid, fm
            if b - a <= 1e-16 * b:
                break
        t_c = 0.5 * (a + b)
        phi_c = energy_along_ray(E, t_c)
        if phi_c > best_phi:
            best_t, best_phi = t_c, phi_c
    # exact stationary points on the grid ends are covered by the scan; t = 0
    # (phi = 0) is the remaining candidate and is the default best
    return RayMaxResult(best_t, best_phi, (lo, hi))


def critical_scale_t0(kind: str, C: ConstantsTable, P: ProblemParams) -> float:
    """Stationary scale of the pure two-term energy for either phase."""
    if kind == "p_phase":
        if P.mu <= 0.0:
            raise ValueError("p-phase scale needs mu > 0")
        return (C.S_p / P.mu) ** ((P.N - P.p) / P.p**2)
    if kind == "q_phase":
        if P.b_inf <= 0.0 or P.a0 <= 0.0:
            raise ValueError("q-phase scale needs b_inf > 0 and a0 > 0")
        return (P.a0 * C.S_q / P.b_inf) ** ((P.N - P.q) / P.q**2)
    raise ValueError("kind must be 'p_phase' or 'q_phase'")


def _assemble_lemma3(P: ProblemParams, eps: float, rho: float) -> RayEnergy:
    b = bubbles.make_bubble("p", eps, 1.0, rho, P)
    norms = bubbles.bubble_norms(b, {"grad_p": ("grad", P.p), "mass_r": ("power", P.r)})
    return RayEnergy(
        A_p=norms["grad_p"],
        A_q=0.0,
        B_sub=P.lam * norms["mass_r"],
        M_pstar=P.mu,
        M_qstar=0.0,
        p=P.p,
        q=P.q,
        sub_exponent=P.r,
        p_star=P.p_star,
        q_star=P.q_star,
    )


def _assemble_lemma4(P: ProblemParams, eps: float, delta: float, rho: float) -> RayEnergy:
    b = bubbles.make_bubble("q", eps, delta, rho, P)
    norms = bubbles.bubble_norms(
        b, {"grad_p": ("grad", P.p), "grad_q": ("grad", P.q), "mass_s": ("power", P.s)}
    )
    return RayEnergy(
        A_p=norms["grad_p"],
        A_q=P.a0 * norms["grad_q"],
        B_sub=P.c0 * norms["mass_s"],
        M_pstar=0.0,  # dropping the -mu t^{p*} term upper-bounds the energy for mu >= 0
        M_qstar=P.b_inf,
        p=P.p,
        q=P.q,
        sub_exponent=P.s,
        p_star=P.p_star,
        q_star=P.q_star,
    )


def verify_below_threshold(
    P: ProblemParams,
    C: ConstantsTable,
    eps_grid,
    which: str,
    rho: float | None = None,
    case: CaseTag | None = None,
) -> list:
    """Per-eps strict-inequality report for the concentration rays.

    For each eps the profile norms assemble the ray energy, the global ray
    maximum is computed, and the margin against the matching single-phase
    threshold is reported (positive margin = strictly below).
    """
    rho = P.domain_radius if rho is None else rho
    case = case if case is not None else classify_existence_case(P)
    if which == "lemma3":
        if case.theorem not in (ExistenceCase.THM1_I, ExistenceCase.THM1_II, ExistenceCase.THM1_III):
            raise RegimeError(f"p-concentration ray check needs an r-based case, got {case.theorem}")
        threshold = beta_lower_bound_mu(P.mu, C, P)
    elif which == "lemma4":
        if case.theorem not in (ExistenceCase.THM2_I, ExistenceCase.THM2_II):
            raise RegimeError(f"q-concentration ray check needs an s-based case, got {case.theorem}")
        threshold = beta_lower_bound_b(P.b_inf, P.a0, C, P)
        if case.theorem == ExistenceCase.THM2_I:
            k_lo, k_hi, nonempty = bubbles.kappa_window(P)
            if not nonempty:
                raise RegimeError("empty kappa window in the small-p case")
            kappa = 0.5 * (max(0.0, k_lo) + min(1.0, k_hi))
        else:
            kappa = 0.0
    else:
        raise ValueError("which must be 'lemma3' or 'lemma4'")

    out = []
    for eps in sorted(eps_grid, reverse=True):
        if which == "lemma3":
            E = _assemble_lemma3(P, float(eps), rho)
        else:
            delta = float(eps) ** kappa if kappa > 0.0 else 1.0
            E = _assemble_lemma4(P, float(eps), delta, rho)
        res = maximize_ray(E)
        margin = threshold - res.phi_max
        out.append(
            RayMaxResult(
                t_max=res.t_max,
                phi_max=res.phi_max,
                bracket=res.bracket,
                status=res.status,
                threshold=threshold,
                below_threshold=bool(margin > 0.0),
                margin=margin,
                epsilon=float(eps),
            )
        )
    return out
