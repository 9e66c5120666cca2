"""Origin-symmetric star bodies described by their radial functions.

Every body exposes a vectorized ``radial(v)`` taking an array of unit
vectors of shape ``(..., n)``.  Presets are even by construction; tabulated
bodies are checked for evenness when they are built.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import AccuracyError, DimensionMismatchError, DomainError, UnsupportedDimensionError
from .harmonics import gegenbauer_table
from .quadrature import build_sphere_quadrature, subsphere_nodes_batch

K_MINUS_L = "K_minus_L"
L_MINUS_K = "L_minus_K"
DEGENERACY_RTOL = 1e-12
UNIT_TOL = 1e-12


def as_direction(v, dim=None):
    """Validate a unit vector and return it as a float array."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise DomainError("a direction is a single vector")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatchError(f"direction has dimension {v.shape[0]}, expected {dim}")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > UNIT_TOL:
        raise DomainError(f"direction is not normalized (|v| = {norm!r})")
    return v


def normalize(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


class StarBody:
    """Base class; subclasses implement `_radial` on arrays of unit vectors."""

    kind = "abstract"

    def __init__(self, dim):
        if dim < 3:
            raise UnsupportedDimensionError(f"dimension {dim} < 3 is not supported")
        self.dim = int(dim)

    def radial(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dim:
            raise DimensionMismatchError(f"{self.kind} body has dimension {self.dim}, got vectors of size {v.shape[-1]}")
        return self._radial(v)

    __call__ = radial

    def _radial(self, v):
        raise NotImplementedError

    def to_spec(self):
        raise NotImplementedError

    def scaled(self, factor):
        return ScaledBody(self, factor)

    def __repr__(self):
        return f"{type(self).__name__}({self.to_spec()!r}, dim={self.dim})"


class Ball(StarBody):
    kind = "ball"

    def __init__(self, dim, r=1.0):
        super().__init__(dim)
        if not r > 0:
            raise DomainError("ball radius must be positive")
        self.r = float(r)

    def _radial(self, v):
        return np.full(v.shape[:-1], self.r)

    def to_spec(self):
        return {"kind": "ball", "r": self.r}


class Ellipsoid(StarBody):
    kind = "ellipsoid"

    def __init__(self, dim, semiaxes):
        super().__init__(dim)
        semiaxes = np.asarray(semiaxes, dtype=float)
        if semiaxes.shape != (dim,):
            raise DimensionMismatchError(f"ellipsoid needs {dim} semiaxes, got {semiaxes.shape[0]}")
        if np.any(semiaxes <= 0):
            raise DomainError("ellipsoid semiaxes must be positive")
        self.semiaxes = semiaxes

    def _radial(self, v):
        return 1.0 / np.sqrt(np.sum((v / self.semiaxes) ** 2, axis=-1))

    def to_spec(self):
        return {"kind": "ellipsoid", "semiaxes": self.semiaxes.tolist()}


class LpBall(StarBody):
    """Radius-r ball of the l_p norm; ``p = inf`` is the cube [-r, r]^n."""

    kind = "lp_ball"

    def __init__(self, dim, p, r=1.0):
        super().__init__(dim)
        p = float(p)
        if not p > 0:
            raise DomainError("l_p exponent must be positive")
        if not r > 0:
            raise DomainError("radius must be positive")
        self.p, self.r = p, float(r)

    def _radial(self, v):
        a = np.abs(v)
        if math.isinf(self.p):
            return self.r / a.max(axis=-1)
        # scale by the max entry to keep large p finite
        top = a.max(axis=-1, keepdims=True)
        norm = top[..., 0] * np.sum((a / top) ** self.p, axis=-1) ** (1.0 / self.p)
        return self.r / norm

    def to_spec(self):
        return {"kind": "lp_ball", "p": "inf" if math.isinf(self.p) else self.p, "r": self.r}


@dataclass(frozen=True)
class ZonalTerm:
    degree: int
    eps: float
    axis: tuple


class PerturbedBall(StarBody):
    """ρ(v) = r (1 + Σ eps_j P_{m_j}(<v, u_j>)) with even degrees m_j.

    ``P_m`` is the Gegenbauer profile normalized to ``P_m(1) = 1``.
    Positivity is checked on a product grid at construction.
    """

    kind = "perturbed_ball"

    def __init__(self, dim, r=1.0, terms=(), check_resolution=24):
        super().__init__(dim)
        if not r > 0:
            raise DomainError("radius must be positive")
        self.r = float(r)
        parsed = []
        for term in terms:
            if isinstance(term, ZonalTerm):
                parsed.append(term)
                continue
            degree = int(term["degree"])
            axis = np.asarray(term.get("axis", [0.0] * (dim - 1) + [1.0]), dtype=float)
            if axis.shape != (dim,):
                raise DimensionMismatchError(f"perturbation axis must have {dim} entries")
            parsed.append(ZonalTerm(degree, float(term["eps"]), tuple(normalize(axis).tolist())))
        for term in parsed:
            if term.degree < 0 or term.degree % 2:
                raise DomainError(f"perturbation degree must be even and non-negative, got {term.degree}")
        self.terms = tuple(parsed)
        if sum(abs(t.eps) for t in self.terms) >= 1.0:
            grid = build_sphere_quadrature(dim, check_resolution).nodes
            if np.min(self._radial(grid)) <= 0:
                raise DomainError("perturbed ball radial function is not positive")

    def _radial(self, v):
        out = np.ones(v.shape[:-1])
        for term in self.terms:
            t = np.clip(v @ np.asarray(term.axis), -1.0, 1.0)
            out = out + term.eps * gegenbauer_table(self.dim, term.degree, t)[term.degree]
        return self.r * out

    def to_spec(self):
        return {
            "kind": "perturbed_ball",
            "r": self.r,
            "terms": [{"degree": t.degree, "eps": t.eps, "axis": list(t.axis)} for t in self.terms],
        }


def hyperspherical_angles(v):
    """Angles (θ_1, ..., θ_{n-2}, φ) with θ_i in [0, π] and φ in [0, 2π)."""
    v = np.asarray(v, dtype=float)
    n = v.shape[-1]
    angles = []
    for i in range(n - 2):
        tail = np.sqrt(np.sum(v[..., i:] ** 2, axis=-1))
        ratio = np.divide(v[..., i], tail, out=np.ones_like(tail), where=tail > 0)
        angles.append(np.arccos(np.clip(ratio, -1.0, 1.0)))
    angles.append(np.mod(np.arctan2(v[..., -1], v[..., -2]), 2.0 * math.pi))
    return np.stack(angles, axis=-1)


def angles_to_vectors(angles):
    angles = np.asarray(angles, dtype=float)
    n = angles.shape[-1] + 1
    out = np.empty(angles.shape[:-1] + (n,))
    s = np.ones(angles.shape[:-1])
    for i in range(n - 2):
        out[..., i] = s * np.cos(angles[..., i])
        s = s * np.sin(angles[..., i])
    out[..., -2] = s * np.cos(angles[..., -1])
    out[..., -1] = s * np.sin(angles[..., -1])
    return out


class TabulatedBody(StarBody):
    """Radial values on a structured hyperspherical-angle grid, linearly interpolated.

    ``axes`` holds n-1 increasing 1-D arrays: n-2 polar grids covering
    [0, π] and one azimuth grid covering [0, 2π].  ``values`` has one entry
    per grid node.
    """

    kind = "tabulated"

    def __init__(self, dim, axes, values, even_rtol=1e-9):
        super().__init__(dim)
        axes = [np.asarray(a, dtype=float) for a in axes]
        values = np.asarray(values, dtype=float)
        if len(axes) != dim - 1:
            raise DimensionMismatchError(f"tabulated body in dimension {dim} needs {dim - 1} angle axes")
        if values.shape != tuple(len(a) for a in axes):
            raise DimensionMismatchError(f"values shape {values.shape} does not match the grid")
        for a in axes[:-1]:
            if abs(a[0]) > 1e-12 or abs(a[-1] - math.pi) > 1e-12:
                raise DomainError("polar angle grids must span [0, pi]")
        if abs(axes[-1][0]) > 1e-12 or abs(axes[-1][-1] - 2.0 * math.pi) > 1e-12:
            raise DomainError("azimuth grid must span [0, 2 pi]")
        if np.any(values <= 0) or not np.all(np.isfinite(values)):
            raise DomainError("tabulated radial values must be positive and finite")
        self.axes = axes
        self.values = values
        self._interp = RegularGridInterpolator(axes, values, method="linear")
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        flipped = self._radial(-angles_to_vectors(mesh))
        if np.max(np.abs(flipped - values)) > even_rtol * np.max(values):
            raise DomainError("tabulated radial values are not even")

    def _radial(self, v):
        angles = hyperspherical_angles(v)
        return self._interp(angles.reshape(-1, self.dim - 1)).reshape(v.shape[:-1])

    def to_spec(self):
        return {"kind": "tabulated", "grid": {"axes": [a.tolist() for a in self.axes], "values": self.values.tolist()}}


def tabulate(body, shape):
    """Sample ``body`` on a uniform angle grid with ``shape`` nodes per axis."""
    n = body.dim
    if len(shape) != n - 1:
        raise DimensionMismatchError("one grid size per angle is required")
    axes = [np.linspace(0.0, math.pi, k) for k in shape[:-1]]
    axes.append(np.linspace(0.0, 2.0 * math.pi, shape[-1]))
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return TabulatedBody(n, axes, body.radial(angles_to_vectors(mesh)))


class ScaledBody(StarBody):
    kind = "scaled"

    def __init__(self, body, factor):
        super().__init__(body.dim)
        if not factor > 0:
            raise DomainError("scale factor must be positive")
        self.body, self.factor = body, float(factor)

    def _radial(self, v):
        return self.factor * self.body._radial(v)

    def to_spec(self):
        return {"kind": "scaled", "factor": self.factor, "body": self.body.to_spec()}


class SectionMomentBody(StarBody):
    """The body K with ρ_K(v)^{-1} = ∫_{M ∩ v^⊥} |x|^2 dx.

    In polar coordinates the section integral equals
    ``R(ρ_M^{n+1})(v) / (n + 1)``, evaluated with a subsphere rule.
    """

    kind = "section_moment"

    def __init__(self, generator, resolution=32, rtol=1e-8):
        super().__init__(generator.dim)
        self.generator = generator
        self.resolution = int(resolution)
        probes = normalize(np.vstack([np.eye(self.dim), np.ones(self.dim), np.arange(1.0, self.dim + 1)]))
        fine = self._radial(probes)
        coarse = self._radial(probes, max(2, self.resolution // 2))
        err = np.max(np.abs(fine - coarse) / fine)
        if err > rtol:
            raise AccuracyError(f"subsphere resolution {self.resolution} too coarse (estimated rel. error {err:.2e})")

    def _radial(self, v, resolution=None):
        flat = v.reshape(-1, self.dim)
        nodes, weights = subsphere_nodes_batch(flat, resolution or self.resolution)
        moment = (self.generator._radial(nodes) ** (self.dim + 1)) @ weights / (self.dim + 1)
        return (1.0 / moment).reshape(v.shape[:-1])

    def to_spec(self):
        return {"kind": "section_moment", "body": self.generator.to_spec(), "resolution": self.resolution}


def second_moment_section_body(generator, resolution=32):
    return SectionMomentBody(generator, resolution)


_PRESETS = {"ball", "ellipsoid", "lp_ball", "perturbed_ball", "tabulated", "scaled", "section_moment"}


def body_from_spec(spec, dim):
    """Build a body from its scenario JSON description."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise DomainError("body spec must be an object with a 'kind'")
    kind = spec["kind"]
    allowed = {
        "ball": {"kind", "r"},
        "ellipsoid": {"kind", "semiaxes"},
        "lp_ball": {"kind", "p", "r"},
        "perturbed_ball": {"kind", "r", "terms"},
        "tabulated": {"kind", "grid"},
        "scaled": {"kind", "factor", "body"},
        "section_moment": {"kind", "body", "resolution"},
    }
    if kind not in _PRESETS:
        raise DomainError(f"unknown body kind {kind!r}")
    extra = set(spec) - allowed[kind]
    if extra:
        raise DomainError(f"unknown field(s) for {kind}: {sorted(extra)}")
    if kind == "ball":
        return Ball(dim, spec.get("r", 1.0))
    if kind == "ellipsoid":
        return Ellipsoid(dim, spec["semiaxes"])
    if kind == "lp_ball":
        p = spec["p"]
        return LpBall(dim, math.inf if p in ("inf", "Infinity", None) else p, spec.get("r", 1.0))
    if kind == "perturbed_ball":
        return PerturbedBall(dim, spec.get("r", 1.0), spec.get("terms", []))
    if kind == "tabulated":
        grid = spec["grid"]
        return TabulatedBody(dim, grid["axes"], grid["values"])
    if kind == "scaled":
        return ScaledBody(body_from_spec(spec["body"], dim), spec["factor"])
    return SectionMomentBody(body_from_spec(spec["body"], dim), spec.get("resolution", 32))


def radial_eval(body, v):
    v = as_direction(v, body.dim)
    return float(body.radial(v))


def minkowski_functional(body, x):
    """Gauge ‖x‖_body = |x| / ρ_body(x / |x|)."""
    x = np.asarray(x, dtype=float)
    norm = np.linalg.norm(x, axis=-1)
    if np.any(norm == 0):
        raise DomainError("the Minkowski functional is undefined at the origin")
    out = norm / body.radial(x / norm[..., None])
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RaySegment:
    direction: np.ndarray
    lo: float
    hi: float
    region: str


def ray_segments(K, L, v, rtol=DEGENERACY_RTOL):
    """Vectorized ray decomposition of K Δ L.

    Returns ``(rho_K, rho_L, sign)`` where ``sign`` is +1 on K∖L rays, -1 on
    L∖K rays and 0 where the radial values agree within ``rtol``.
    """
    if K.dim != L.dim:
        raise DimensionMismatchError(f"bodies have dimensions {K.dim} and {L.dim}")
    rk, rl = K.radial(v), L.radial(v)
    gap = rk - rl
    sign = np.where(np.abs(gap) <= rtol * np.maximum(rk, rl), 0, np.sign(gap)).astype(int)
    return rk, rl, sign


def symmetric_difference_ray(K, L, v, rtol=DEGENERACY_RTOL):
    v = as_direction(v, K.dim)
    rk, rl, sign = ray_segments(K, L, v, rtol)
    if sign == 0:
        return None
    lo, hi = float(min(rk, rl)), float(max(rk, rl))
    return RaySegment(v, lo, hi, K_MINUS_L if sign > 0 else L_MINUS_K)
