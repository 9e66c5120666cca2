"""Deterministic quadrature on spheres, great subspheres and radial intervals.

The product rule on S^{n-1} is built recursively: a point is written as
``(t, sqrt(1 - t^2) w)`` with ``w`` on S^{n-2}, and the surface measure
factors as ``(1 - t^2)^((n-3)/2) dt dw``.  The ``t`` integral uses
Gauss-Jacobi nodes for that weight and the circle at the bottom of the
recursion uses the midpoint (trapezoid) rule, so a resolution ``k`` rule
integrates every polynomial of degree ``<= 2k - 1`` exactly.  Both
ingredients are symmetric, which makes the node set antipodally symmetric
without any post-processing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
import math

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import roots_jacobi, roots_legendre

from .errors import DomainError, IntegrandSingularityError, UnsupportedDimensionError

PRODUCT = "product"
MONTE_CARLO = "mc"

MIN_DIM = 3


def sphere_area(n):
    """Surface area of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(frozen=True, eq=False)
class SphericalQuadrature:
    dim: int
    nodes: np.ndarray
    weights: np.ndarray
    scheme: str
    resolution: int
    seed: int | None = None

    def __len__(self):
        return len(self.weights)

    @property
    def exact_degree(self):
        """Highest polynomial degree integrated exactly (-1 for Monte Carlo)."""
        return 2 * self.resolution - 1 if self.scheme == PRODUCT else -1

    def integrate(self, f):
        return integrate_sphere(f, self)

    @cached_property
    def half(self):
        """Indices of one node from each antipodal pair."""
        return np.flatnonzero(hemisphere_mask(self.nodes))

    @cached_property
    def antipode(self):
        """``antipode[i]`` is the index of ``-nodes[i]``."""
        dist, out = cKDTree(self.nodes).query(-self.nodes)
        if np.max(dist) > 1e-10:
            raise AssertionError("quadrature node set is not antipodally symmetric")
        return out


def hemisphere_mask(points, tol=1e-12):
    """True for points whose first non-negligible coordinate is positive."""
    points = np.asarray(points, dtype=float)
    mask = np.zeros(points.shape[:-1], dtype=bool)
    undecided = np.ones_like(mask)
    for i in range(points.shape[-1]):
        c = points[..., i]
        decided = undecided & (np.abs(c) > tol)
        mask |= decided & (c > 0)
        undecided &= ~decided
    return mask


@dataclass(frozen=True, eq=False)
class SubsphereQuadrature:
    """Quadrature on the great subsphere S^{n-1} ∩ axis^⊥."""

    axis: np.ndarray
    basis: np.ndarray  # shape (n-1, n), orthonormal rows spanning axis^⊥
    inner: SphericalQuadrature
    nodes: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return self.axis.shape[0]

    @property
    def weights(self):
        return self.inner.weights

    def integrate(self, f):
        return integrate_subsphere(f, self)


@dataclass(frozen=True)
class RadialRule:
    """Gauss-Legendre rule of a given order, mapped affinely onto [lo, hi]."""

    order: int

    @property
    def reference(self):
        return _legendre(self.order)

    def map(self, lo, hi):
        """Return nodes and weights for (possibly arrays of) intervals.

        With array endpoints of shape ``s`` the result has shape
        ``s + (order,)``.
        """
        x, w = self.reference
        lo = np.asarray(lo, dtype=float)[..., None]
        hi = np.asarray(hi, dtype=float)[..., None]
        half = 0.5 * (hi - lo)
        return lo + half * (x + 1.0), half * w


@lru_cache(maxsize=None)
def _legendre(order):
    x, w = roots_legendre(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


@lru_cache(maxsize=None)
def _product_rule(dim, resolution):
    if dim == 2:
        count = 2 * resolution
        phi = (np.arange(count) + 0.5) * (2.0 * math.pi / count)
        nodes = np.column_stack([np.cos(phi), np.sin(phi)])
        weights = np.full(count, 2.0 * math.pi / count)
        return nodes, weights
    alpha = (dim - 3) / 2.0
    t, wt = roots_jacobi(resolution, alpha, alpha)
    inner_nodes, inner_weights = _product_rule(dim - 1, resolution)
    s = np.sqrt(1.0 - t * t)
    nodes = np.concatenate(
        [np.column_stack([np.full(len(inner_weights), ti), si * inner_nodes]) for ti, si in zip(t, s)]
    )
    weights = np.concatenate([wi * inner_weights for wi in wt])
    return nodes, weights


def _monte_carlo_rule(dim, resolution, seed):
    half = resolution ** (dim - 1)
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((half, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    nodes = np.concatenate([g, -g])
    weights = np.full(2 * half, sphere_area(dim) / (2 * half))
    return nodes, weights


def build_sphere_quadrature(n, resolution, scheme=PRODUCT, seed=0):
    """Build an antipodally symmetric quadrature rule on S^{n-1}.

    Parameters
    ----------
    n : int
        Ambient dimension, at least 3.
    resolution : int
        Number of Gauss-Jacobi nodes per polar angle (product scheme), or
        the per-coordinate sample budget for Monte Carlo, which draws
        ``resolution**(n-1)`` points and adds their antipodes.
    scheme : {"product", "mc"}
    seed : int
        Only used by the Monte Carlo scheme.
    """
    if n < MIN_DIM:
        raise UnsupportedDimensionError(f"dimension {n} < {MIN_DIM} is not supported")
    return _sphere_rule(n, resolution, scheme, seed)


def _sphere_rule(n, resolution, scheme, seed=0):
    if resolution < 1:
        raise DomainError(f"resolution must be positive, got {resolution}")
    if scheme == PRODUCT:
        nodes, weights = _product_rule(n, resolution)
        return SphericalQuadrature(n, nodes, weights, PRODUCT, resolution)
    if scheme in (MONTE_CARLO, "monte_carlo"):
        nodes, weights = _monte_carlo_rule(n, resolution, seed)
        return SphericalQuadrature(n, nodes, weights, MONTE_CARLO, resolution, seed)
    raise DomainError(f"unknown quadrature scheme {scheme!r}")


def householder_basis(axis):
    """Orthonormal basis (rows) of axis^⊥ from the reflection sending e_n to axis."""
    axis = np.asarray(axis, dtype=float)
    n = axis.shape[0]
    u = -axis.copy()
    u[-1] += 1.0
    norm2 = u @ u
    if norm2 < 1e-30:
        h = np.eye(n)
    else:
        h = np.eye(n) - (2.0 / norm2) * np.outer(u, u)
    return h[:, : n - 1].T.copy()


def build_subsphere_quadrature(xi, resolution):
    xi = np.asarray(xi, dtype=float)
    norm = np.linalg.norm(xi)
    if abs(norm - 1.0) > 1e-12:
        raise DomainError(f"axis must be a unit vector, |xi| = {norm!r}")
    n = xi.shape[0]
    if n < MIN_DIM:
        raise UnsupportedDimensionError(f"dimension {n} < {MIN_DIM} is not supported")
    basis = householder_basis(xi)
    inner = _sphere_rule(n - 1, resolution, PRODUCT)
    return SubsphereQuadrature(xi, basis, inner, inner.nodes @ basis)


def subsphere_nodes_batch(xis, resolution):
    """Subsphere nodes for many axes at once.

    Returns ``(nodes, weights)`` with nodes of shape ``(len(xis), m, n)``;
    the weights are shared by every axis.
    """
    xis = np.atleast_2d(np.asarray(xis, dtype=float))
    n = xis.shape[1]
    inner = _sphere_rule(n - 1, resolution, PRODUCT)
    u = -xis.copy()
    u[:, -1] += 1.0
    norm2 = np.einsum("ij,ij->i", u, u)
    scale = np.where(norm2 < 1e-30, 0.0, 2.0 / np.where(norm2 < 1e-30, 1.0, norm2))
    # H = I - scale u u^T; only the first n-1 columns are needed.
    w = inner.nodes  # (m, n-1)
    proj = w @ u[:, : n - 1].T  # (m, k): <w, u[:n-1]>
    nodes = np.zeros((xis.shape[0], w.shape[0], n))
    nodes[:, :, : n - 1] = w[None, :, :]
    nodes -= (scale[:, None, None] * proj.T[:, :, None]) * u[:, None, :]
    return nodes, inner.weights


def _check_finite(values, nodes):
    bad = ~np.isfinite(values)
    if bad.any():
        idx = np.flatnonzero(bad.reshape(-1))[0]
        node = np.asarray(nodes).reshape(-1, np.asarray(nodes).shape[-1])[idx]
        raise IntegrandSingularityError(f"integrand is not finite at node {idx} = {node.tolist()}", node)


def _values(f, nodes):
    if callable(f):
        values = np.asarray(f(nodes), dtype=float)
        if values.ndim == 0:
            values = np.full(nodes.shape[0], float(values))
    else:
        values = np.asarray(f, dtype=float)
    _check_finite(values, nodes)
    return values


def integrate_sphere(f, quad):
    """Integrate ``f`` (vectorized callable or sampled values) over S^{n-1}."""
    values = _values(f, quad.nodes)
    # numpy's contiguous sum is a fixed pairwise reduction
    return float(np.sum(quad.weights * values))


def integrate_subsphere(f, subquad):
    values = _values(f, subquad.nodes)
    return float(np.sum(subquad.weights * values))


def integrate_radial(g, lo, hi, rule):
    r, w = rule.map(lo, hi)
    values = np.asarray(g(r), dtype=float)
    _check_finite(values, r[..., None])
    return np.sum(w * values, axis=-1) if np.ndim(lo) else float(np.sum(w * values))
