"""Panelized Gauss-Legendre quadrature for radial integrals.

The bubble profiles have an O(eps) core layer and a cutoff transition layer,
so integrands are piecewise-analytic once the panel knots resolve those
scales; fixed-order Gauss per panel then converges geometrically.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["panel_rule", "integrate_panels", "layered_knots"]


@lru_cache(maxsize=32)
def _gauss(order: int):
    return np.polynomial.legendre.leggauss(order)


def panel_rule(knots, order: int = 32):
    """Nodes and weights of composite Gauss-Legendre on consecutive knots."""
    knots = np.asarray(knots, dtype=float)
    if knots.ndim != 1 or knots.size < 2:
        raise ValueError("need at least two quadrature knots")
    if np.any(np.diff(knots) <= 0):
        raise ValueError("quadrature knots must be strictly increasing")
    x, w = _gauss(order)
    a = knots[:-1][:, None]
    b = knots[1:][:, None]
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * x[None, :]
    weights = 0.5 * (b - a) * w[None, :]
    return nodes.ravel(), weights.ravel()


def integrate_panels(f, knots, order: int = 32) -> float:
    nodes, weights = panel_rule(knots, order)
    return float(np.dot(weights, f(nodes)))


def layered_knots(layer: float, outer: float, inner_fraction: float = 0.0625) -> np.ndarray:
    """Knots resolving a boundary layer of width ``layer`` inside [0, outer].

    Geometric ladder from layer*inner_fraction up to outer, plus a subdivided
    top panel; suitable for bubble-profile integrands.
    """
    if not (0.0 < layer):
        raise ValueError("layer scale must be positive")
    pts = [0.0]
    r = layer * inner_fraction
    while r < 0.5 * outer:
        pts.append(r)
        r *= 2.0
    pts.extend([0.5 * outer, 0.625 * outer, 0.75 * outer, 0.875 * outer, outer])
    return np.unique(np.asarray(pts))
