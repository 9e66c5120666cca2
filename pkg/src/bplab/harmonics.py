"""Zonal Gegenbauer kernels and degree-wise spherical-harmonic projections.

Projections are kept as sampled functions.  Given a rule ``(w_j, u_j)`` on
S^{n-1}, the degree-m projection of f is

    (Π_m f)(v) = dim(n, m) / |S^{n-1}| * Σ_j w_j P_m(<v, u_j>) f(u_j)

with ``P_m`` the Gegenbauer polynomial normalized to ``P_m(1) = 1``.  This
is exact whenever the rule integrates degree ``m + deg f`` polynomials.

Only even degrees are ever needed.  For even m the kernel is even, so the
sum folds onto one node per antipodal pair with weight
``w_j (f(u_j) + f(-u_j))``, and the result at ``-v`` equals the result at
``v``.  Both facts cut the work by four.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import AccuracyError, DomainError, UnsupportedDimensionError
from .quadrature import PRODUCT, sphere_area

DEFAULT_TRUNCATION = 8
DEFAULT_TAIL_THRESHOLD = 1e-2

_CHUNK_ENTRIES = 1 << 21


def harmonic_dimension(n, m):
    """Dimension of the space of degree-m spherical harmonics on S^{n-1}."""
    if m < 0:
        return 0
    if m == 0:
        return 1
    return comb(m + n - 1, n - 1) - comb(m + n - 3, n - 1)


def _dimension_by_recurrence(n, m):
    # dim(n, m) = dim(n-1, m) + dim(n, m-1), with dim(2, m) = 2 for m >= 1
    table = {}
    for k in range(2, n + 1):
        for j in range(m + 1):
            if j == 0:
                table[k, j] = 1
            elif k == 2:
                table[k, j] = 2
            else:
                table[k, j] = table[k - 1, j] + table[k, j - 1]
    return table[n, m]


def _self_check(max_n=8, max_m=16):
    for n in range(3, max_n + 1):
        for m in range(max_m + 1):
            if harmonic_dimension(n, m) != _dimension_by_recurrence(n, m):
                raise AssertionError(f"harmonic dimension mismatch at n={n}, m={m}")


_self_check()


def gegenbauer_table(n, max_degree, t):
    """Normalized Gegenbauer values P_0..P_max_degree at ``t``.

    Returns an array of shape ``(max_degree + 1,) + t.shape``.  Uses

        (m + n - 2) P_{m+1} = (2m + n - 2) t P_m - m P_{m-1}.
    """
    if n < 3:
        raise UnsupportedDimensionError(f"dimension {n} < 3 is not supported")
    t = np.asarray(t, dtype=float)
    out = np.empty((max_degree + 1,) + t.shape)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = t
    for m in range(1, max_degree):
        out[m + 1] = ((2 * m + n - 2) * t * out[m] - m * out[m - 1]) / (m + n - 2)
    return out


def gegenbauer_zonal(n, m, t):
    """Gegenbauer polynomial C_m^{(n-2)/2}(t) / C_m^{(n-2)/2}(1)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(np.abs(t_arr) > 1.0 + 1e-12):
        raise DomainError("gegenbauer_zonal needs |t| <= 1")
    if m < 0:
        raise DomainError("degree must be non-negative")
    values = gegenbauer_table(n, m, np.clip(t_arr, -1.0, 1.0))[m]
    return float(values) if np.ndim(t) == 0 else values


def kernel_sums(nodes, weighted, points, max_degree):
    """Σ_j P_m(<x, u_j>) weighted_j for every point x and every m <= max_degree.

    Returns shape ``(max_degree + 1, len(points))``.  The recurrence runs
    over row chunks so memory stays bounded for large grids.
    """
    n = nodes.shape[1]
    points = np.asarray(points, dtype=float).reshape(-1, n)
    out = np.empty((max_degree + 1, points.shape[0]))
    step = max(1, _CHUNK_ENTRIES // max(1, len(nodes)))
    for start in range(0, points.shape[0], step):
        rows = slice(start, start + step)
        t = np.clip(points[rows] @ nodes.T, -1.0, 1.0)
        prev, cur = np.ones_like(t), t
        out[0, rows] = prev @ weighted
        if max_degree >= 1:
            out[1, rows] = cur @ weighted
        for m in range(1, max_degree):
            prev, cur = cur, ((2 * m + n - 2) * t * cur - m * prev) / (m + n - 2)
            out[m + 1, rows] = cur @ weighted
    return out


def _check_resolution(quad, m):
    if quad.scheme == PRODUCT and quad.resolution < m:
        raise AccuracyError(f"resolution {quad.resolution} cannot resolve degree {m}; need at least {m}")


def sample(f, quad):
    """Values of ``f`` on the nodes of ``quad``; ``f`` may already be sampled."""
    if callable(f):
        values = np.asarray(f(quad.nodes), dtype=float)
        if values.ndim == 0:
            values = np.full(len(quad), float(values))
        return values
    values = np.asarray(f, dtype=float)
    if values.shape != (len(quad),):
        raise DomainError(f"sampled function has shape {values.shape}, expected ({len(quad)},)")
    return values


class EvenSource:
    """Folded quadrature data for the even part of a sphere function."""

    def __init__(self, f, quad):
        values = sample(f, quad)
        if not np.all(np.isfinite(values)):
            raise DomainError("function is not finite on the quadrature nodes")
        half = quad.half
        self.quad = quad
        self.values = values
        self.nodes = quad.nodes[half]
        self.weighted = quad.weights[half] * (values[half] + values[quad.antipode[half]])

    @property
    def dim(self):
        return self.quad.dim

    def sums(self, points, max_degree):
        """Kernel sums at ``points``; odd-degree rows are meaningless."""
        points = np.asarray(points, dtype=float).reshape(-1, self.dim)
        return kernel_sums(self.nodes, self.weighted, points, max_degree)

    def sums_on(self, quad, max_degree):
        """Kernel sums on every node of a symmetric rule, computed on half of it."""
        half = quad.half
        partial = self.sums(quad.nodes[half], max_degree)
        out = np.empty((max_degree + 1, len(quad)))
        out[:, half] = partial
        out[:, quad.antipode[half]] = partial
        return out


def _degree_scale(n, m):
    return harmonic_dimension(n, m) / sphere_area(n)


class Projection:
    """A degree-m projection that can be evaluated anywhere on the sphere."""

    def __init__(self, source, m, samples):
        self.source = source
        self.m = m
        self.samples = samples

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        values = _degree_scale(self.source.dim, self.m) * self.source.sums(points, self.m)[self.m]
        return values.reshape(points.shape[:-1])


def degree_projection(f, m, quad):
    """Project ``f`` onto degree-m harmonics; returns a callable `Projection`.

    ``samples`` holds the projection on the nodes of ``quad``.
    """
    if m % 2:
        raise DomainError("only even degrees are supported")
    _check_resolution(quad, m)
    source = EvenSource(f, quad)
    samples = _degree_scale(quad.dim, m) * source.sums_on(quad, m)[m]
    return Projection(source, m, samples)


@dataclass
class HarmonicExpansion:
    """Even-degree projections of a sphere function up to ``max_degree``.

    The projections are integrated with ``quad`` and stored as samples on
    the nodes of ``sample_quad`` (the same rule unless requested otherwise).
    Odd degrees are stored as exact zeros.
    """

    dim: int
    max_degree: int
    quad: object
    sample_quad: object
    values: np.ndarray
    components: dict
    tail_energy: float
    tail_flagged: bool = False
    source: EvenSource = field(default=None, repr=False)

    @property
    def even_degrees(self):
        return range(0, self.max_degree + 1, 2)

    def projection(self, m):
        return Projection(self.source, m, self.components[m])

    def reconstruct(self):
        return sum(self.components[m] for m in self.even_degrees)

    def norm_sq(self, samples=None):
        samples = self.values if samples is None else samples
        return float(np.sum(self.sample_quad.weights * samples * samples))

    def combine(self, multipliers):
        """Σ_m c_m Π_m f sampled on the sample nodes."""
        return sum(multipliers[m] * self.components[m] for m in self.even_degrees)

    def evaluate(self, points, multipliers=None):
        """Evaluate Σ_m c_m Π_m f at arbitrary points (c_m = 1 by default)."""
        points = np.asarray(points, dtype=float)
        coeffs = np.zeros(self.max_degree + 1)
        for m in self.even_degrees:
            coeffs[m] = (1.0 if multipliers is None else multipliers[m]) * _degree_scale(self.dim, m)
        values = coeffs @ self.source.sums(points, self.max_degree)
        return values.reshape(points.shape[:-1])


def expand(f, max_degree, quad, tail_threshold=DEFAULT_TAIL_THRESHOLD, sample_quad=None):
    """Expand an even sphere function into degrees 0, 2, ..., max_degree.

    ``tail_energy`` is ``|f - Σ Π_m f|^2 / |f|^2`` measured with the sample
    rule; when it exceeds ``tail_threshold`` the expansion is flagged.
    """
    if max_degree % 2:
        raise DomainError("truncation degree must be even")
    _check_resolution(quad, max_degree)
    sample_quad = quad if sample_quad is None else sample_quad
    if sample_quad is not quad and not callable(f):
        raise DomainError("a separate sample rule needs a callable function")
    source = EvenSource(f, quad)
    values = source.values if sample_quad is quad else sample(f, sample_quad)
    sums = source.sums_on(sample_quad, max_degree)
    components = {}
    for m in range(max_degree + 1):
        components[m] = np.zeros(len(sample_quad)) if m % 2 else _degree_scale(quad.dim, m) * sums[m]
    even_values = 0.5 * (values + values[sample_quad.antipode])
    residual = even_values - sum(components[m] for m in range(0, max_degree + 1, 2))
    w = sample_quad.weights
    total = float(np.sum(w * values * values))
    tail = float(np.sum(w * residual * residual)) / total if total > 0 else 0.0
    return HarmonicExpansion(
        dim=quad.dim,
        max_degree=max_degree,
        quad=quad,
        sample_quad=sample_quad,
        values=values,
        components=components,
        tail_energy=tail,
        tail_flagged=tail > tail_threshold,
        source=source,
    )
