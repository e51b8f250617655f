"""Problem data, exponent algebra, structural validation, and case classifiers.

One ProblemParams record carries every scalar a pipeline run needs:

    N                 space dimension (ball domain of radius domain_radius)
    p, q              growth exponents of the operator, 1 < p < q < N,
                      q/p < 1 + 1/N
    r                 subcritical exponent of the lambda-perturbed problem
    s                 exponent of the weighted perturbation problem
    sigma             exponent used by the superlinearity (AR-type) checker
    lam               coefficient of the |u|^{r-2}u term (lambda)
    mu                coefficient of the |u|^{p*-2}u term (signed only for
                      nonexistence checks)
    b_inf             sup norm of the q*-weight b
    a0                essential infimum of the operator weight a on supp(b)
    c0                lower bound of the s-term weight on the inner ball
    c_inf             sup norm of the s/r-term weight c
    C_hp              constant in the bound c(x) <= C a(x)^{s/q}
    domain_radius     radius of the ball domain
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, fields as dc_fields

import numpy as np

from .fields import PowerNonlinearity

__all__ = [
    "ProblemParams",
    "StructuralCheck",
    "ExistenceCase",
    "CaseTag",
    "ARCheckResult",
    "sobolev_conjugate",
    "validate_structure",
    "superlinearity_threshold",
    "classify_existence_case",
    "check_ar_condition",
]

BOUNDARY_TOL = 1e-12

_JSON_KEYS = (
    "N",
    "p",
    "q",
    "r",
    "s",
    "sigma",
    "lambda",
    "mu",
    "b_inf",
    "a0",
    "c0",
    "c_inf",
    "C_hp",
    "domain_radius",
)


def sobolev_conjugate(m: float, N: int) -> float:
    """Critical exponent N m / (N - m) of the W^{1,m} embedding."""
    if not (1.0 < m < N):
        raise ValueError(f"need 1 < m < N, got m={m}, N={N}")
    return N * m / (N - m)


def superlinearity_threshold(N: int, p: float) -> float:
    """(Np - 2N + p) p / ((N - p)(p - 1)); exceeds p exactly when N < p^2."""
    return (N * p - 2.0 * N + p) * p / ((N - p) * (p - 1.0))


@dataclass(frozen=True)
class ProblemParams:
    N: int
    p: float
    q: float
    r: float = 2.0
    s: float = 4.0
    sigma: float = 0.0
    lam: float = 0.0
    mu: float = 0.0
    b_inf: float = 0.0
    a0: float = 1.0
    c0: float = 0.0
    c_inf: float = 0.0
    C_hp: float = 0.0
    domain_radius: float = 1.0

    @property
    def p_star(self) -> float:
        return sobolev_conjugate(self.p, self.N)

    @property
    def q_star(self) -> float:
        return sobolev_conjugate(self.q, self.N)

    def to_json_dict(self) -> dict:
        out = {}
        for f, key in zip(dc_fields(self), _JSON_KEYS):
            val = getattr(self, f.name)
            out[key] = int(val) if key == "N" else float(val)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, data: dict) -> "ProblemParams":
        unknown = set(data) - set(_JSON_KEYS)
        if unknown:
            raise ValueError(f"unknown ProblemParams keys: {sorted(unknown)}")
        missing = set(_JSON_KEYS) - set(data)
        if missing:
            raise ValueError(f"missing ProblemParams keys: {sorted(missing)}")
        kwargs = {}
        for f, key in zip(dc_fields(cls), _JSON_KEYS):
            kwargs[f.name] = int(data[key]) if key == "N" else float(data[key])
        return cls(**kwargs)

    @classmethod
    def from_json(cls, text: str) -> "ProblemParams":
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class StructuralCheck:
    condition: str
    margin: float
    boundary: bool = False


def _strict(condition: str, margin: float, out: list) -> None:
    # strict inequalities: equality (within BOUNDARY_TOL) counts as a violation
    if margin <= BOUNDARY_TOL:
        out.append(StructuralCheck(condition, margin, boundary=abs(margin) <= BOUNDARY_TOL))


def validate_structure(P: ProblemParams) -> list:
    """All violated structural inequalities with their signed slack.

    Empty list means the record is admissible problem data.  Violations are
    data, not errors.
    """
    v: list = []
    if int(P.N) != P.N or P.N < 2:
        v.append(StructuralCheck("N integer >= 2", P.N - 2.0))
    _strict("p > 1", P.p - 1.0, v)
    _strict("p < q", P.q - P.p, v)
    _strict("q < N", P.N - P.q, v)
    if P.p > 1.0:
        _strict("q/p < 1 + 1/N", (1.0 + 1.0 / P.N) - P.q / P.p, v)
    if P.lam < 0.0:
        v.append(StructuralCheck("lambda >= 0", P.lam))
    if P.b_inf < 0.0:
        v.append(StructuralCheck("b_inf >= 0", P.b_inf))
    if P.b_inf > 0.0:
        _strict("a0 > 0 when b_inf > 0", P.a0, v)
    if P.c_inf < 0.0:
        v.append(StructuralCheck("c_inf >= 0", P.c_inf))
    if P.c0 < 0.0:
        v.append(StructuralCheck("c0 >= 0", P.c0))
    _strict("domain_radius > 0", P.domain_radius, v)
    return v


class ExistenceCase(str, enum.Enum):
    THM1_I = "Thm1_i"
    THM1_II = "Thm1_ii"
    THM1_III = "Thm1_iii"
    THM2_I = "Thm2_i"
    THM2_II = "Thm2_ii"
    NONE = "None"


@dataclass(frozen=True)
class CaseTag:
    theorem: ExistenceCase
    conditions: tuple = ()  # (condition id, signed margin, ok) triples

    @property
    def violated_conditions(self) -> tuple:
        return tuple(c for c in self.conditions if not c[2])

    def to_json_dict(self) -> dict:
        return {
            "theorem": self.theorem.value,
            "conditions": [
                {"condition": cid, "margin": margin, "ok": ok}
                for (cid, margin, ok) in self.conditions
            ],
        }


def _cond_strict(cid: str, margin: float):
    return (cid, float(margin), margin > BOUNDARY_TOL)


def _cond_loose(cid: str, margin: float):
    return (cid, float(margin), margin >= -BOUNDARY_TOL)


def _cond_equal(cid: str, deviation: float):
    return (cid, -abs(float(deviation)), abs(deviation) <= BOUNDARY_TOL)


def classify_existence_case(P: ProblemParams, lambda1: float | None = None) -> CaseTag:
    """Match P against the existence cases of the two main theorems.

    The r-based cases need mu > 0 and lam > 0; the s-based cases need
    b_inf > 0 and c0 > 0.  ``lambda1`` is the first Dirichlet p-Laplacian
    eigenvalue on the ball of radius domain_radius; it is computed on demand
    when the r = p case requires it.
    """
    violations = validate_structure(P)
    if violations:
        raise ValueError(f"structurally invalid parameters: {violations}")

    p_star = P.p_star
    q_star = P.q_star

    # r-based branch
    if P.mu > 0.0 and P.lam > 0.0:
        conds = [
            _cond_strict("mu > 0", P.mu),
            _cond_strict("lambda > 0", P.lam),
            _cond_strict("r < p*", p_star - P.r),
        ]
        r_is_p = abs(P.r - P.p) <= BOUNDARY_TOL
        if r_is_p:
            conds.append(_cond_equal("r = p", P.r - P.p))
            conds.append(_cond_loose("N >= p^2", P.N - P.p**2))
            if lambda1 is None:
                from .constants import first_eigenvalue_p

                lambda1 = first_eigenvalue_p(P.p, P.N, P.domain_radius)
            conds.append(_cond_strict("lambda < lambda1(p)", lambda1 - P.lam))
            if all(ok for _, _, ok in conds):
                return CaseTag(ExistenceCase.THM1_I, tuple(conds))
        elif P.N >= P.p**2:
            conds.append(_cond_loose("N >= p^2", P.N - P.p**2))
            conds.append(_cond_strict("r > p", P.r - P.p))
            if all(ok for _, _, ok in conds):
                return CaseTag(ExistenceCase.THM1_II, tuple(conds))
        else:
            thr = superlinearity_threshold(P.N, P.p)
            conds.append(_cond_strict("N < p^2", P.p**2 - P.N))
            conds.append(_cond_strict("r > superlinearity threshold", P.r - thr))
            if all(ok for _, _, ok in conds):
                return CaseTag(ExistenceCase.THM1_III, tuple(conds))
        thm1_conds = conds
    else:
        thm1_conds = [
            _cond_strict("mu > 0", P.mu),
            _cond_strict("lambda > 0", P.lam),
        ]

    # s-based branch
    p_split = P.N * (P.q - 1.0) / (P.N - 1.0)
    if P.b_inf > 0.0 and P.c0 > 0.0:
        conds = [
            _cond_strict("b_inf > 0", P.b_inf),
            _cond_strict("c0 > 0", P.c0),
            _cond_strict("s < q*", q_star - P.s),
            _cond_loose("mu >= 0", P.mu),
        ]
        if P.p < p_split:
            s_low = P.N**2 * (P.q - 1.0) / ((P.N - 1.0) * (P.N - P.q))
            conds.append(_cond_strict("p < N(q-1)/(N-1)", p_split - P.p))
            conds.append(_cond_strict("s > N^2(q-1)/((N-1)(N-q))", P.s - s_low))
            if all(ok for _, _, ok in conds):
                return CaseTag(ExistenceCase.THM2_I, tuple(conds))
        else:
            s_low = P.N * P.p / (P.N - P.q)
            conds.append(_cond_loose("p >= N(q-1)/(N-1)", P.p - p_split))
            conds.append(_cond_strict("s > Np/(N-q)", P.s - s_low))
            if all(ok for _, _, ok in conds):
                return CaseTag(ExistenceCase.THM2_II, tuple(conds))
        thm2_conds = conds
    else:
        thm2_conds = [
            _cond_strict("b_inf > 0", P.b_inf),
            _cond_strict("c0 > 0", P.c0),
        ]

    all_conds = tuple(thm1_conds) + tuple(thm2_conds)
    return CaseTag(ExistenceCase.NONE, all_conds)


@dataclass(frozen=True)
class ARCheckResult:
    satisfied: bool
    c3: float
    t_span: float
    worst_gap: float

    def __bool__(self) -> bool:  # pragma: no cover - convenience
        return self.satisfied


def check_ar_condition(
    P: ProblemParams,
    nonlinearity: PowerNonlinearity,
    t_grid,
    x_samples,
    stabilization_tol: float = 1e-9,
    max_doublings: int = 60,
) -> ARCheckResult:
    """Superlinearity compactness check for the subcritical part g.

    Verifies that G(x,t) - (t/sigma) g(x,t) <= mu (1/sigma - 1/p*) |t|^{p*} + c3
    holds with a finite c3: the left-minus-right gap, clipped at zero and
    maximized over samples, must stabilize as the t-range is doubled (two
    successive doublings changing it by less than the tolerance).  x_samples
    are radii at which the coefficient fields are evaluated.
    """
    if not (P.q < P.sigma < P.p_star):
        raise ValueError(f"sigma={P.sigma} outside (q, p*) = ({P.q}, {P.p_star})")
    if P.mu < 0.0:
        raise ValueError("mu must be nonnegative for the superlinearity check")

    t0 = np.asarray(t_grid, dtype=float)
    t0 = t0[np.abs(t0) > 0.0]
    if t0.size == 0:
        raise ValueError("t_grid must contain nonzero values")
    radii = np.asarray(x_samples, dtype=float)
    p_star = P.p_star
    coeff = P.mu * (1.0 / P.sigma - 1.0 / p_star)

    def band_max(t: np.ndarray) -> float:
        worst = -np.inf
        for rr in radii:
            g = nonlinearity(rr, t)
            big_g = nonlinearity.primitive(rr, t)
            gap = big_g - t / P.sigma * g - coeff * np.abs(t) ** p_star
            worst = max(worst, float(np.max(gap)))
        return worst

    # the grid only ever widens: the inner samples stay at full resolution and
    # each doubling contributes just the new outer band, so c3 is nondecreasing
    scale = 1.0
    c3 = max(0.0, band_max(t0))
    stable_rounds = 0
    for _ in range(max_doublings):
        scale *= 2.0
        band = t0 * scale
        c3_next = max(c3, band_max(band))
        if abs(c3_next - c3) < stabilization_tol * max(1.0, abs(c3)):
            stable_rounds += 1
        else:
            stable_rounds = 0
        c3 = c3_next
        if stable_rounds >= 2:
            return ARCheckResult(True, c3, float(np.max(np.abs(t0))) * scale, c3)
    return ARCheckResult(False, c3, float(np.max(np.abs(t0))) * scale, c3)
