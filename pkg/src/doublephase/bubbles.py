"""Cut-off extremal test profiles and their scaling laws.

The profile of base exponent m (= p or q) and concentration eps is

    u(x) = psi_eff(|x|) (eps^{m'} + |x|^{m'})^{-(N-m)/m},   m' = m/(m-1),

with psi_eff(r) = psi(r / delta) and psi the C^2 quintic cutoff equal to 1 on
[0, rho/2] and 0 outside [0, rho].  The normalized profile v = u / ||u||_{m*}
concentrates the gradient m-energy at the best Sobolev constant as eps -> 0;
the deficits and the subcritical masses follow piecewise power laws in eps
(and delta), which this module measures by radial quadrature and fits in
log-log coordinates, including detection of |log eps| factors at branch
boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RegimeError
from .params import ProblemParams, sobolev_conjugate
from .quadrature import layered_knots, panel_rule

__all__ = [
    "BubbleProfile",
    "RateFit",
    "make_bubble",
    "bubble_norms",
    "fit_rate",
    "kappa_window",
    "ratio_limits",
    "mass_rate",
    "cross_gradient_rate",
    "gradient_deficit_exponent",
    "compose_ratio_rate",
]

_SPHERE = {}


def _omega(N: int) -> float:
    if N not in _SPHERE:
        _SPHERE[N] = 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)
    return _SPHERE[N]


def _cutoff(t):
    """Quintic C^2 step: 1 on t <= 1/2, 0 on t >= 1 (t = r / rho)."""
    t = np.asarray(t, dtype=float)
    s = np.clip((t - 0.5) * 2.0, 0.0, 1.0)
    return 1.0 - s**3 * (10.0 - 15.0 * s + 6.0 * s**2)


def _cutoff_deriv(t):
    t = np.asarray(t, dtype=float)
    s = np.clip((t - 0.5) * 2.0, 0.0, 1.0)
    inside = (t > 0.5) & (t < 1.0)
    return np.where(inside, -2.0 * 30.0 * s**2 * (s - 1.0) ** 2, 0.0)


@dataclass(frozen=True)
class BubbleProfile:
    kind: str  # "p" or "q"
    epsilon: float
    delta: float
    rho: float
    m: float
    N: int
    normalization: float  # L^{m*} norm of the unnormalized profile
    quad_order: int = 32

    @property
    def m_star(self) -> float:
        return sobolev_conjugate(self.m, self.N)

    @property
    def support_radius(self) -> float:
        return self.rho * self.delta

    def unnormalized_peak(self) -> float:
        return self.epsilon ** (-(self.N - self.m) / (self.m - 1.0))

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        mp = self.m / (self.m - 1.0)
        core = (self.epsilon**mp + r**mp) ** (-(self.N - self.m) / self.m)
        return _cutoff(r / (self.rho * self.delta)) * core

    def profile_gradient(self, r):
        """Radial derivative of the unnormalized profile (sign included)."""
        r = np.asarray(r, dtype=float)
        mp = self.m / (self.m - 1.0)
        am = (self.N - self.m) / (self.m - 1.0)
        base = self.epsilon**mp + r**mp
        core = base ** (-(self.N - self.m) / self.m)
        dcore = -am * r ** (mp - 1.0) * base ** (-(self.N - self.m) / self.m - 1.0)
        scale = self.rho * self.delta
        psi = _cutoff(r / scale)
        dpsi = _cutoff_deriv(r / scale) / scale
        return dpsi * core + psi * dcore

    def _knots(self):
        return layered_knots(self.epsilon, self.rho * self.delta)

    def raw_power_integral(self, gamma: float, order: int | None = None) -> float:
        nodes, weights = panel_rule(self._knots(), order or self.quad_order)
        vals = self.profile(nodes) ** gamma * nodes ** (self.N - 1.0)
        return _omega(self.N) * float(np.dot(weights, vals))

    def raw_gradient_integral(self, gamma: float, order: int | None = None) -> float:
        nodes, weights = panel_rule(self._knots(), order or self.quad_order)
        vals = np.abs(self.profile_gradient(nodes)) ** gamma * nodes ** (self.N - 1.0)
        return _omega(self.N) * float(np.dot(weights, vals))


def make_bubble(kind: str, epsilon: float, delta: float, rho: float, P: ProblemParams,
                quad_order: int = 32) -> BubbleProfile:
    """Build a normalized profile; norm computed by layered radial quadrature."""
    if kind not in ("p", "q"):
        raise ValueError("kind must be 'p' or 'q'")
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    if kind == "p":
        if delta != 1.0:
            raise ValueError("p-profiles carry no delta rescaling (delta = 1)")
        m = P.p
    else:
        if not (0.0 < delta <= 1.0):
            raise ValueError("delta must lie in (0, 1]")
        m = P.q
    prof = BubbleProfile(kind, float(epsilon), float(delta), float(rho), float(m), int(P.N),
                         normalization=1.0, quad_order=quad_order)
    m_star = prof.m_star
    norm = prof.raw_power_integral(m_star) ** (1.0 / m_star)
    return BubbleProfile(kind, float(epsilon), float(delta), float(rho), float(m), int(P.N),
                         normalization=norm, quad_order=quad_order)


def bubble_norms(b: BubbleProfile, requests: dict, order: int | None = None) -> dict:
    """Quadrature norms of the normalized profile v = u / ||u||_{m*}.

    requests maps a label to ("grad", gamma) or ("power", gamma); the result
    holds integral |grad v|^gamma resp. integral v^gamma over the ball.
    """
    out = {}
    for name, (what, gamma) in requests.items():
        gamma = float(gamma)
        if what == "grad":
            raw = b.raw_gradient_integral(gamma, order)
        elif what == "power":
            raw = b.raw_power_integral(gamma, order)
        else:
            raise ValueError(f"unknown norm request kind {what!r}")
        out[name] = raw / b.normalization**gamma
    return out


# ---------------------------------------------------------------------------
# theoretical rate laws (eps- and delta-exponents, |log| factors)


def gradient_deficit_exponent(N: int, m: float) -> float:
    """Decay exponent of the gradient-m deficit against S_m (in eps/delta)."""
    return (N - m) / (m - 1.0)


def mass_rate(N: int, m: float, r: float, tol: float = 1e-12):
    """(eps_exponent, delta_exponent, log_sign) for integral v^r of an m-profile.

    log_sign +1 marks an extra |log(eps/delta)| factor on the boundary branch.
    """
    boundary = N * (m - 1.0) / (N - m)
    if abs(r - boundary) <= tol * max(1.0, boundary):
        return N / m, 0.0, 1
    if r > boundary:
        return (N * m - (N - m) * r) / m, 0.0, 0
    return (N - m) * r / (m * (m - 1.0)), (N * (m - 1.0) - (N - m) * r) / (m - 1.0), 0


def cross_gradient_rate(N: int, p: float, q: float, tol: float = 1e-12):
    """(eps_exponent, delta_exponent, log_sign) for integral |grad v|^p of a q-profile."""
    boundary = N * (q - 1.0) / (N - 1.0)
    if abs(p - boundary) <= tol * max(1.0, boundary):
        return N * (N - q) / ((N - 1.0) * q), 0.0, 1
    if p > boundary:
        return N * (q - p) / q, 0.0, 0
    return (N - q) * p / (q * (q - 1.0)), (N * (q - 1.0) - (N - 1.0) * p) / (q - 1.0), 0


def compose_ratio_rate(numer, denom, kappa: float):
    """Effective eps-exponent and log sign of a ratio when delta = eps^kappa."""
    e_num = numer[0] + kappa * numer[1]
    e_den = denom[0] + kappa * denom[1]
    return e_num - e_den, numer[2] - denom[2]


def kappa_window(P: ProblemParams):
    """Admissible window (kappa_low, kappa_high) for delta = eps^kappa.

    Empty precisely when s falls at or below N^2(q-1)/((N-1)(N-q)); the
    denominator N(q-1) - (N-1)p must be positive (small-p existence regime).
    """
    N, p, q, s = P.N, P.p, P.q, P.s
    denom = N * (q - 1.0) - (N - 1.0) * p
    if denom <= 0.0:
        raise RegimeError(
            f"kappa window needs p < N(q-1)/(N-1); got p={p}, bound={N*(q-1.0)/(N-1.0)}"
        )
    kappa_low = (N * q * (q - 1.0) - (N - q) * (q - 1.0) * s - (N - q) * p) / (denom * q)
    kappa_high = ((N - q) * (q - 1.0) * s - (N * q - 2.0 * N + q) * q) / ((N - q) * q)
    nonempty = max(0.0, kappa_low) < min(1.0, kappa_high)
    return kappa_low, kappa_high, nonempty


# ---------------------------------------------------------------------------
# log-log regression with |log| factor detection


@dataclass(frozen=True)
class RateFit:
    exponent_grid: tuple
    values: tuple
    fitted_slope: float
    log_factor_detected: bool
    log_sign: int
    theoretical_slope: float | None
    relative_slope_error: float | None
    dropped_points: int = 0

    def __post_init__(self):
        eps = np.asarray(self.exponent_grid)
        if eps.size < 4:
            raise ValueError("rate fit needs at least 4 grid points")
        if np.any(np.diff(eps) >= 0.0):
            raise ValueError("exponent grid must be strictly decreasing")


def _lstsq_slope(L, Ly):
    A = np.column_stack([np.ones_like(L), L])
    coef, *_ = np.linalg.lstsq(A, Ly, rcond=None)
    resid = Ly - A @ coef
    return coef[1], float(np.dot(resid, resid))


def fit_rate(
    grid,
    theoretical_slope: float | None = None,
    curvature_tol: float = 0.35,
    log_improvement: float = 0.25,
) -> RateFit:
    """Least-squares slope in log-log coordinates with |log eps| detection.

    Fits y ~ C eps^k, y ~ C eps^k |log eps| and y ~ C eps^k / |log eps|; a
    log factor is reported when the better log model cuts the pure-power fit
    residual by at least 25%.  Up to two largest-eps points are dropped when
    the local log-log curvature exceeds the tolerance (pre-asymptotic
    contamination).
    """
    pts = sorted(((float(e), float(v)) for e, v in grid), key=lambda t: -t[0])
    eps = np.array([t[0] for t in pts])
    val = np.array([t[1] for t in pts])
    if np.any(val <= 0.0):
        raise ValueError("rate fit requires strictly positive values")
    if eps.size < 4:
        raise ValueError("rate fit needs at least 4 grid points")

    dropped = 0
    while dropped < 2 and eps.size > 4:
        L = np.log(eps)
        Ly = np.log(val)
        d1 = np.diff(Ly) / np.diff(L)
        curv = abs(d1[1] - d1[0]) / max(abs(np.median(d1)), 1e-12)
        if curv > curvature_tol:
            eps = eps[1:]
            val = val[1:]
            dropped += 1
        else:
            break

    L = np.log(eps)
    Ly = np.log(val)
    loglog = np.log(np.abs(L))
    k_a, ssr_a = _lstsq_slope(L, Ly)
    k_b, ssr_b = _lstsq_slope(L, Ly - loglog)
    k_c, ssr_c = _lstsq_slope(L, Ly + loglog)

    log_detected = False
    log_sign = 0
    slope = k_a
    if min(ssr_b, ssr_c) <= (1.0 - log_improvement) * ssr_a:
        log_detected = True
        if ssr_b <= ssr_c:
            log_sign, slope = 1, k_b
        else:
            log_sign, slope = -1, k_c

    rel_err = None
    if theoretical_slope is not None:
        rel_err = abs(slope - theoretical_slope) / max(abs(theoretical_slope), 1e-300)
    return RateFit(
        exponent_grid=tuple(eps),
        values=tuple(val),
        fitted_slope=float(slope),
        log_factor_detected=log_detected,
        log_sign=log_sign,
        theoretical_slope=theoretical_slope,
        relative_slope_error=rel_err,
        dropped_points=dropped,
    )


# ---------------------------------------------------------------------------
# ratio reports


@dataclass(frozen=True)
class RatioReport:
    name: str
    epsilons: tuple
    values: tuple
    fit: RateFit
    theoretical_exponent: float
    theoretical_log_sign: int
    monotone_decreasing: bool
    tends_to_zero: bool


def ratio_limits(P: ProblemParams, eps_grid, which: str = "p_phase",
                 delta_rule="auto", rho: float = 1.0) -> list:
    """Concentration ratios that gate the mountain-pass strictness arguments.

    which = "p_phase": eps^{(N-p)/(p-1)} / integral v^r for the p-profile.
    which = "q_phase": both integral |grad v|^p / integral v^s and
    (eps/delta)^{(N-q)/(q-1)} / integral v^s for the q-profile, with
    delta = eps^kappa (kappa from the admissible window, or given, or 0).
    """
    eps = np.asarray(sorted(eps_grid, reverse=True), dtype=float)
    reports = []
    if which == "p_phase":
        num_exp = gradient_deficit_exponent(P.N, P.p)
        values = []
        for e in eps:
            b = make_bubble("p", e, 1.0, rho, P)
            mass = bubble_norms(b, {"mass": ("power", P.r)})["mass"]
            values.append(e**num_exp / mass)
        theo, log_sign = compose_ratio_rate((num_exp, 0.0, 0), mass_rate(P.N, P.p, P.r), 0.0)
        fit = fit_rate(list(zip(eps, values)), theoretical_slope=theo)
        values = np.asarray(values)
        reports.append(
            RatioReport(
                "p_deficit_over_mass",
                tuple(eps),
                tuple(values),
                fit,
                theo,
                log_sign,
                bool(np.all(np.diff(values) < 0.0)),
                bool(np.all(np.diff(values) < 0.0) and theo > 0.0),
            )
        )
        return reports

    if which != "q_phase":
        raise ValueError("which must be 'p_phase' or 'q_phase'")

    if delta_rule == "auto":
        k_lo, k_hi, nonempty = kappa_window(P)
        if not nonempty:
            raise RegimeError("empty kappa window; no admissible delta = eps^kappa")
        kappa = 0.5 * (max(0.0, k_lo) + min(1.0, k_hi))
    elif delta_rule == "one":
        kappa = 0.0
    else:
        kappa = float(delta_rule)

    grad_vals = []
    mass_vals = []
    core_vals = []
    for e in eps:
        d = e**kappa if kappa > 0.0 else 1.0
        b = make_bubble("q", e, d, rho, P)
        norms = bubble_norms(b, {"grad_p": ("grad", P.p), "mass": ("power", P.s)})
        grad_vals.append(norms["grad_p"])
        mass_vals.append(norms["mass"])
        core_vals.append((e / d) ** gradient_deficit_exponent(P.N, P.q))
    grad_vals = np.asarray(grad_vals)
    mass_vals = np.asarray(mass_vals)
    core_vals = np.asarray(core_vals)

    mass = mass_rate(P.N, P.q, P.s)
    grad = cross_gradient_rate(P.N, P.p, P.q)
    # (eps/delta)^k carries eps-exponent k and delta-exponent -k
    k_def = gradient_deficit_exponent(P.N, P.q)
    deficit = (k_def, -k_def, 0)

    for name, values, numer in (
        ("cross_gradient_over_mass", grad_vals / mass_vals, grad),
        ("q_deficit_over_mass", core_vals / mass_vals, deficit),
    ):
        theo, log_sign = compose_ratio_rate(numer, mass, kappa)
        fit = fit_rate(list(zip(eps, values)), theoretical_slope=theo)
        reports.append(
            RatioReport(
                name,
                tuple(eps),
                tuple(values),
                fit,
                theo,
                log_sign,
                bool(np.all(np.diff(values) < 0.0)),
                bool(np.all(np.diff(values) < 0.0) and theo > 0.0),
            )
        )
    return reports
