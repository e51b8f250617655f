"""Radial coefficient fields and power-sum nonlinearities.

A field is r -> c0 + c1 * r**k (constant when c1 = 0); this closed-form
family covers every coefficient the solvers and identity checks need while
staying encodable for the compiled kernels.  A nonlinearity is

    f(r, u) = source(r) + sum_j coeff_j(r) * |u|^{gamma_j - 2} u,

with primitive F(r, u) = source(r) u + sum_j coeff_j(r) |u|^{gamma_j} / gamma_j.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["CoefficientField", "PowerTerm", "PowerNonlinearity"]


@dataclass(frozen=True)
class CoefficientField:
    c0: float
    c1: float = 0.0
    exponent: float = 1.0

    @classmethod
    def constant(cls, c: float) -> "CoefficientField":
        return cls(float(c))

    @classmethod
    def power(cls, c0: float, c1: float, exponent: float) -> "CoefficientField":
        if exponent <= 0:
            raise ValueError("power-field exponent must be positive")
        return cls(float(c0), float(c1), float(exponent))

    @property
    def kind(self) -> int:
        return 0 if self.c1 == 0.0 else 1

    def value(self, r):
        if self.kind == 0:
            return self.c0 + np.zeros_like(np.asarray(r, dtype=float))
        return self.c0 + self.c1 * np.asarray(r, dtype=float) ** self.exponent

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == 0:
            return np.zeros_like(r)
        return self.c1 * self.exponent * r ** (self.exponent - 1.0)

    def encode(self):
        return self.kind, self.c0, self.c1, self.exponent

    def nonnegative_on(self, radius: float, samples: int = 257) -> bool:
        r = np.linspace(0.0, radius, samples)
        return bool(np.all(self.value(r) >= -1e-15))

    def nondecreasing_on(self, radius: float, samples: int = 257) -> bool:
        r = np.linspace(1e-12 * radius, radius, samples)
        return bool(np.all(self.derivative(r) >= -1e-15))

    def to_json_dict(self) -> dict:
        return {"c0": self.c0, "c1": self.c1, "exponent": self.exponent}

    @classmethod
    def from_json_dict(cls, data: dict) -> "CoefficientField":
        unknown = set(data) - {"c0", "c1", "exponent"}
        if unknown:
            raise ValueError(f"unknown CoefficientField keys: {sorted(unknown)}")
        return cls(float(data.get("c0", 0.0)), float(data.get("c1", 0.0)),
                   float(data.get("exponent", 1.0)))


@dataclass(frozen=True)
class PowerTerm:
    coefficient: CoefficientField
    exponent: float  # growth exponent gamma; the term is coeff * |u|^{gamma-2} u

    def __post_init__(self):
        if self.exponent <= 1.0:
            raise ValueError("growth exponent must exceed 1")


@dataclass(frozen=True)
class PowerNonlinearity:
    source: CoefficientField = field(default_factory=lambda: CoefficientField(0.0))
    terms: tuple = ()

    @classmethod
    def constant(cls, value: float) -> "PowerNonlinearity":
        return cls(source=CoefficientField.constant(value))

    def __call__(self, r, u):
        r = np.asarray(r, dtype=float)
        u = np.asarray(u, dtype=float)
        out = self.source.value(r) + np.zeros_like(u)
        for term in self.terms:
            out = out + term.coefficient.value(r) * np.sign(u) * np.abs(u) ** (term.exponent - 1.0)
        return out

    def primitive(self, r, u):
        """F(r, u) = integral of f(r, .) from 0 to u (closed form)."""
        r = np.asarray(r, dtype=float)
        u = np.asarray(u, dtype=float)
        out = self.source.value(r) * u
        for term in self.terms:
            out = out + term.coefficient.value(r) * np.abs(u) ** term.exponent / term.exponent
        return out

    def encode(self):
        """Flat arrays consumed by the compiled BVP kernel."""
        f0_kind, f0_c0, f0_c1, f0_k = self.source.encode()
        n = len(self.terms)
        gammas = np.empty(n)
        kinds = np.empty(n, dtype=np.int64)
        c0 = np.empty(n)
        c1 = np.empty(n)
        k = np.empty(n)
        for j, term in enumerate(self.terms):
            gammas[j] = term.exponent
            kinds[j], c0[j], c1[j], k[j] = term.coefficient.encode()
        return (f0_kind, f0_c0, f0_c1, f0_k, gammas, kinds, c0, c1, k)

    def to_json_dict(self) -> dict:
        return {
            "source": self.source.to_json_dict(),
            "terms": [
                {"coefficient": t.coefficient.to_json_dict(), "exponent": t.exponent}
                for t in self.terms
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "PowerNonlinearity":
        source = CoefficientField.from_json_dict(data.get("source", {"c0": 0.0}))
        terms = tuple(
            PowerTerm(CoefficientField.from_json_dict(t["coefficient"]), float(t["exponent"]))
            for t in data.get("terms", ())
        )
        return cls(source=source, terms=terms)
