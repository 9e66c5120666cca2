"""Radial power sums c_1 |x|^a_1 + ... + c_k |x|^a_k."""

from __future__ import annotations

import numpy as np

from .errors import DomainError


class PowerSum:
    """Radial function Σ c |x|^α; coefficients may have either sign."""

    def __init__(self, terms=()):
        parsed = []
        for term in terms:
            if isinstance(term, dict):
                unknown = set(term) - {"coef", "exp"}
                if unknown:
                    raise DomainError(f"unknown density term field(s) {sorted(unknown)}")
                coef, exp = term["coef"], term["exp"]
            else:
                coef, exp = term
            coef, exp = float(coef), float(exp)
            if not (np.isfinite(coef) and np.isfinite(exp)):
                raise DomainError("density terms must be finite")
            parsed.append((coef, exp))
        self.terms = tuple(parsed)

    @property
    def continuous(self):
        """True when every exponent is non-negative (continuous at the origin)."""
        return all(exp >= 0 for coef, exp in self.terms if coef != 0)

    @property
    def is_zero(self):
        return all(coef == 0 for coef, _ in self.terms)

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for coef, exp in self.terms:
            out = out + coef * r**exp
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.radial(np.linalg.norm(x, axis=-1))

    def scaled(self, factor):
        return type(self)([(factor * c, a) for c, a in self.terms])

    def to_spec(self):
        return [{"coef": c, "exp": a} for c, a in self.terms]

    def __eq__(self, other):
        return isinstance(other, PowerSum) and sorted(self.terms) == sorted(other.terms)

    def __hash__(self):
        return hash(tuple(sorted(self.terms)))

    def __repr__(self):
        body = " + ".join(f"{c:g}|x|^{a:g}" for c, a in self.terms) or "0"
        return f"{type(self).__name__}({body})"


class Density(PowerSum):
    """Nonnegative even density; every coefficient must be >= 0."""

    def __init__(self, terms=()):
        super().__init__(terms)
        if any(coef < 0 for coef, _ in self.terms):
            raise DomainError("density coefficients must be non-negative")
        if self.is_zero:
            raise DomainError("density must have a positive term")


def power(coef, exp):
    return Density([(coef, exp)])


LEBESGUE = Density([(1.0, 0.0)])
