"""Pohozaev-type identity evaluation and the nonexistence predicates.

On a ball of radius R with radial a and solution u of the double phase
problem, the identity reads

    (1/p - 1/q) int |grad u|^p
  + (1/(Nq))   int |grad u|^q (a'(r) r)
  + (1/N)      int_{boundary} [(1-1/p)|du|^p + (1-1/q) a |du|^q] (x . nu)
  = int [ F(x,u) - f(x,u) u / q* ].

All volume terms reduce to radial quadrature on the solution grid (composite
Simpson); the boundary term is exact from u'(R).  The identity is evaluated
only on inputs that actually solve the equation (discrete residual gate).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .constants import ConstantsTable
from .errors import NotApplicable, NumericError
from .fields import CoefficientField, PowerNonlinearity
from .params import ProblemParams, validate_structure
from .radial_solver import RadialSolution, residual_check

__all__ = [
    "PohozaevReport",
    "NonexistenceCase",
    "NonexistenceVerdict",
    "SmallNormCertificate",
    "evaluate_identity",
    "nonexistence_threshold",
    "nonexistence_verdict",
    "small_norm_radius",
]

_RESIDUAL_GATE = 1e-5


def _sphere_area(N: int) -> float:
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


def _simpson(values: np.ndarray, h: float) -> float:
    n = values.size
    if n % 2 == 0:
        raise ValueError("Simpson rule needs an odd number of nodes")
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(h / 3.0 * np.dot(w, values))


@dataclass(frozen=True)
class PohozaevReport:
    term_grad_p: float
    term_grad_a: float
    term_boundary: float
    rhs: float
    residual_abs: float
    residual_rel: float

    @property
    def lhs_total(self) -> float:
        return self.term_grad_p + self.term_grad_a + self.term_boundary

    def to_json_dict(self) -> dict:
        return {
            "format_version": 1,
            "term_grad_p": self.term_grad_p,
            "term_grad_a": self.term_grad_a,
            "term_boundary": self.term_boundary,
            "lhs_total": self.lhs_total,
            "rhs": self.rhs,
            "residual_abs": self.residual_abs,
            "residual_rel": self.residual_rel,
        }


def evaluate_identity(
    sol: RadialSolution,
    P: ProblemParams | None = None,
    a_field: CoefficientField | None = None,
    f_spec: PowerNonlinearity | None = None,
    residual_gate: float = _RESIDUAL_GATE,
) -> PohozaevReport:
    """Itemized identity terms and the residual between the two sides."""
    P = P or sol.params
    a_field = a_field or sol.a_field
    f_spec = f_spec or sol.nonlinearity
    res = residual_check(sol, P, a_field, f_spec)
    if not (res <= residual_gate):
        raise NumericError(
            f"refusing identity evaluation: discrete solution residual {res:.3e} "
            f"exceeds the gate {residual_gate:.0e}",
            residual=res,
        )

    r = sol.grid
    h = float(r[1] - r[0])
    if not np.allclose(np.diff(r), h, rtol=1e-12, atol=1e-15 * r[-1]):
        raise ValueError("identity quadrature expects a uniform grid")
    omega = _sphere_area(P.N)
    radial_weight = r ** (P.N - 1.0)
    R = float(r[-1])

    grad_p = omega * _simpson(np.abs(sol.du) ** P.p * radial_weight, h)
    grad_a_weighted = omega * _simpson(
        np.abs(sol.du) ** P.q * a_field.derivative(r) * r * radial_weight, h
    )
    du_R = abs(float(sol.du[-1]))
    a_R = float(a_field.value(R))
    boundary_density = (1.0 - 1.0 / P.p) * du_R**P.p + (1.0 - 1.0 / P.q) * a_R * du_R**P.q
    term_boundary = boundary_density * R * omega * R ** (P.N - 1.0) / P.N

    q_star = P.q_star
    rhs_integrand = (
        f_spec.primitive(r, sol.u) - f_spec(r, sol.u) * sol.u / q_star
    ) * radial_weight
    rhs = omega * _simpson(rhs_integrand, h)

    term_grad_p = (1.0 / P.p - 1.0 / P.q) * grad_p
    term_grad_a = grad_a_weighted / (P.N * P.q)
    lhs = term_grad_p + term_grad_a + term_boundary
    residual_abs = abs(lhs - rhs)
    residual_rel = residual_abs / max(abs(lhs), abs(rhs), 1e-300)
    return PohozaevReport(
        term_grad_p=term_grad_p,
        term_grad_a=term_grad_a,
        term_boundary=term_boundary,
        rhs=rhs,
        residual_abs=residual_abs,
        residual_rel=residual_rel,
    )


class NonexistenceCase(str, enum.Enum):
    NONEX_I = "nonex_i"
    NONEX_II = "nonex_ii"
    NONEX_III = "nonex_iii"
    SMALL_I = "small_i"
    SMALL_II = "small_ii"
    SMALL_III = "small_iii"
    NONE = "none"


@dataclass(frozen=True)
class NonexistenceVerdict:
    applicable: bool
    case: NonexistenceCase
    threshold_value: float | None
    margin: float
    failed_hypotheses: tuple = ()

    def to_json_dict(self) -> dict:
        return {
            "format_version": 1,
            "applicable": self.applicable,
            "case": self.case.value,
            "threshold_value": self.threshold_value,
            "margin": self.margin,
            "failed_hypotheses": list(self.failed_hypotheses),
        }


def nonexistence_threshold(P: ProblemParams, C: ConstantsTable) -> float:
    """lambda_1(p) N(q-p) / (N(q-p) + pq), the r = p smallness bound on c."""
    nqp = P.N * (P.q - P.p)
    return C.lambda1_p * nqp / (nqp + P.p * P.q)


def nonexistence_verdict(
    P: ProblemParams,
    C: ConstantsTable,
    strictly_starshaped: bool,
    c_nonpositive: bool = False,
) -> NonexistenceVerdict:
    """Match the data against the three nonexistence cases for
    f = c|u|^{r-2}u + mu|u|^{p*-2}u + b|u|^{q*-2}u with mu <= 0.

    The coefficient a is assumed radial and radially nondecreasing (the
    solver-side CoefficientField check); c_nonpositive declares c <= 0 a.e.
    with |c| bounded by c_inf.
    """
    failed = []
    violations = validate_structure(P)
    if violations:
        failed.extend(f"structure: {v.condition}" for v in violations)
    if P.mu > 0.0:
        failed.append("mu <= 0")
    if not (P.p <= P.r < P.q_star):
        failed.append("p <= r < q*")
    if failed:
        return NonexistenceVerdict(False, NonexistenceCase.NONE, None, 0.0, tuple(failed))

    c_is_nonpositive = c_nonpositive or P.c_inf == 0.0
    r_is_p = abs(P.r - P.p) <= 1e-12
    thr = nonexistence_threshold(P, C) if r_is_p else None

    if c_is_nonpositive:
        return NonexistenceVerdict(True, NonexistenceCase.NONEX_I, thr, 0.0)
    if r_is_p and 0.0 < P.c_inf < thr:
        return NonexistenceVerdict(True, NonexistenceCase.NONEX_II, thr, thr - P.c_inf)
    if strictly_starshaped and r_is_p and abs(P.c_inf - thr) <= 1e-12 * max(1.0, thr):
        return NonexistenceVerdict(True, NonexistenceCase.NONEX_III, thr, 0.0)

    if not r_is_p:
        failed.append("r = p (with c > 0 somewhere)")
    else:
        failed.append("||c|| below (or exactly at, for strictly starshaped) the threshold")
    return NonexistenceVerdict(False, NonexistenceCase.NONE, thr, 0.0, tuple(failed))


@dataclass(frozen=True)
class SmallNormCertificate:
    kappa: float
    case: NonexistenceCase
    rho_star: float
    coefficients: dict

    def to_json_dict(self) -> dict:
        return {
            "format_version": 1,
            "kappa": self.kappa,
            "case": self.case.value,
            "rho_star": self.rho_star,
            "coefficients": {k: v for k, v in sorted(self.coefficients.items())},
        }


def _ball_volume(N: int, R: float) -> float:
    return _sphere_area(N) * R**N / N


def small_norm_radius(
    P: ProblemParams,
    C: ConstantsTable,
    gamma: float,
    embedding_constants: dict | None = None,
) -> SmallNormCertificate:
    """Certified radius kappa: no solution with ||u|| <= kappa exists.

    Works with the modular t = int(|grad u|^p + a|grad u|^q): the identity
    chain bounds (1/q* - 1/gamma) t by a sum of powers of t strictly above 1,

        K_c t^{e_c} + K_mu t^{p*/p} + K_b t^{q*/q},

    so the largest t where the bound fails is found by monotone bisection and
    converted to a norm radius via min/max modular-norm comparison.  All
    embedding constants default to explicit ball-domain instantiations; the
    purely Musielak constant of the intermediate-exponent case must be
    supplied by the caller.
    """
    emb = dict(embedding_constants or {})
    if gamma <= P.q_star:
        raise ValueError(f"gamma must exceed q* = {P.q_star}")
    failed = []
    if validate_structure(P):
        failed.append("structure")
    if P.mu < 0.0:
        failed.append("mu >= 0")
    if P.c_inf <= 0.0:
        failed.append("c nonzero and nonnegative")
    if P.b_inf > 0.0 and P.a0 <= 0.0:
        failed.append("a0 > 0 on supp(b)")
    if failed:
        raise NotApplicable("small-norm hypotheses fail", failed)

    p_star, q_star = P.p_star, P.q_star
    vol = _ball_volume(P.N, P.domain_radius)
    lhs_coef = 1.0 / q_star - 1.0 / gamma
    rho_cap = 1e12

    if P.p < P.r <= p_star:
        case = NonexistenceCase.SMALL_I
        c_r = emb.get("C_r", vol ** (1.0 - P.r / p_star) * C.S_p ** (-P.r / P.p))
        k_c = P.c_inf * (1.0 / P.r - 1.0 / gamma) * c_r
        e_c = P.r / P.p
    elif p_star < P.r < q_star:
        a0_prime = emb.get("a0_prime", 0.0)
        if a0_prime > 0.0:
            case = NonexistenceCase.SMALL_III
            c_r = emb.get(
                "C_r",
                vol ** (1.0 - P.r / q_star) * C.S_q ** (-P.r / P.q) * a0_prime ** (-P.r / P.q),
            )
            k_c = P.c_inf * (1.0 / P.r - 1.0 / gamma) * c_r
            e_c = P.r / P.q
        elif P.C_hp > 0.0:
            case = NonexistenceCase.SMALL_II
            if "C_prime" not in emb:
                raise NotApplicable(
                    "intermediate-exponent case needs the Musielak embedding "
                    "constant C_prime in embedding_constants",
                    ["C_prime"],
                )
            if not (P.q < P.sigma < p_star):
                raise NotApplicable("sigma must lie in (q, p*)", ["sigma"])
            k_c = (1.0 / P.r - 1.0 / gamma) * emb["C_prime"]
            e_c = P.sigma / P.q
            rho_cap = 1.0  # the norm <= 1 step of the chain
        else:
            raise NotApplicable(
                "r above p* needs either a0' > 0 on supp(c) or the weight bound "
                "c <= C a^{r/q}",
                ["a0_prime or C_hp"],
            )
    else:
        if abs(P.r - P.p) <= 1e-12:
            raise NotApplicable("small-norm cases need r > p (r = p is the eigenvalue regime)", ["r > p"])
        raise NotApplicable(f"r={P.r} outside (p, q*)", ["p < r < q*"])

    k_mu = P.mu * (1.0 / p_star - 1.0 / gamma) / C.S_p ** (p_star / P.p)
    k_b = (1.0 / q_star - 1.0 / gamma) * P.b_inf / (P.a0 * C.S_q) ** (q_star / P.q) if P.b_inf > 0.0 else 0.0

    terms = ((k_c, e_c), (k_mu, p_star / P.p), (k_b, q_star / P.q))

    def rhs_over_t(t: float) -> float:
        return sum(k * t ** (e - 1.0) for k, e in terms if k > 0.0)

    if rhs_over_t(rho_cap) <= lhs_coef:
        rho_star = rho_cap
    else:
        lo, hi = 0.0, rho_cap
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if rhs_over_t(mid) < lhs_coef:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * max(hi, 1.0):
                break
        rho_star = lo
    if rho_star <= 0.0:
        raise NumericError("degenerate small-norm certificate (rho_star = 0)")
    kappa = rho_star ** (1.0 / P.p) if rho_star <= 1.0 else rho_star ** (1.0 / P.q)
    return SmallNormCertificate(
        kappa=kappa,
        case=case,
        rho_star=rho_star,
        coefficients={"K_c": k_c, "K_mu": k_mu, "K_b": k_b, "lhs": lhs_coef},
    )
