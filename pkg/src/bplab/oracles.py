"""Brute-force reference computations used by the tests and the ``oracle`` command.

Nothing in the verification pipeline imports this module.

The Fourier oracle pairs (E_{-1} g)^ with the test functions

    φ_{u,k}(x) = exp(-|x|^2 / 2σ^2) <x, u>^{2k},

whose transforms are Hermite-Gaussians.  Writing (E_{-1} g)^ = |ξ|^{1-n} γ(ξ/|ξ|),
the identity <f^, φ> = <f, φ^> gives the moments ∫ γ(θ) <θ, u>^{2k} dθ for
k = 0..K.  These determine the even degrees 0..2K of γ through a
triangular Funk-Hecke system; no Fourier multiplier formula is used.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from numpy.polynomial import hermite_e
from scipy.special import gammaln, roots_jacobi

from .errors import DomainError
from .geometry import K_MINUS_L, L_MINUS_K, ray_segments
from .harmonics import gegenbauer_table
from .quadrature import householder_basis, sphere_area

SIGMA_RANGE = (0.1, 10.0)
_CHUNK = 1 << 16


@dataclass(frozen=True)
class MCEstimate:
    value: float
    std_error: float
    samples: int
    seed: int

    def agrees(self, exact, sigmas=3.0):
        return abs(self.value - exact) <= sigmas * self.std_error


def _uniform_directions(rng, count, dim):
    g = rng.standard_normal((count, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _polar_mc(region, density, K, L, samples, seed, dim, power, area, embed=None):
    target = {K_MINUS_L: 1, L_MINUS_K: -1}.get(region)
    if target is None:
        raise DomainError(f"unknown region {region!r}")
    total = 0.0
    total_sq = 0.0
    done = 0
    chunk = 0
    while done < samples:
        count = min(_CHUNK, samples - done)
        rng = np.random.default_rng([seed, chunk])
        v = _uniform_directions(rng, count, dim)
        if embed is not None:
            v = v @ embed
        u = rng.random(count)
        rk, rl, sign = ray_segments(K, L, v)
        lo, hi = np.minimum(rk, rl), np.maximum(rk, rl)
        on = sign == target
        r = lo + (hi - lo) * u
        x = np.where(on, area * (hi - lo) * r**power * density.radial(np.where(on, r, 1.0)), 0.0)
        total += float(np.sum(x))
        total_sq += float(np.sum(x * x))
        done += count
        chunk += 1
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return MCEstimate(mean, math.sqrt(var / max(samples - 1, 1)), samples, seed)


def mc_region_measure(region, density, K, L, samples=1_000_000, seed=0):
    """Polar Monte Carlo estimate of ∫_region density dx.

    Draws v uniform on S^{n-1} and r uniform on the ray segment.
    """
    n = K.dim
    return _polar_mc(region, density, K, L, samples, seed, n, n - 1, sphere_area(n))


def mc_section_measure(region, density, xi, K, L, samples=1_000_000, seed=0):
    """Polar Monte Carlo estimate of ∫_{region ∩ ξ^⊥} density."""
    n = K.dim
    xi = np.asarray(xi, dtype=float)
    xi = xi / np.linalg.norm(xi)
    basis = householder_basis(xi)
    return _polar_mc(region, density, K, L, samples, seed, n - 1, n - 2, sphere_area(n - 1), basis)


def _half_gaussian_moment(p, sigma):
    """∫_0^∞ r^p exp(-r^2 / 2σ^2) dr."""
    return math.exp((p - 1) / 2 * math.log(2.0) + gammaln((p + 1) / 2) + (p + 1) * math.log(sigma))


def _funk_hecke_table(n, K):
    """A[k, j] = |S^{n-2}| ∫ t^{2k} P_{2j}(t) (1-t^2)^{(n-3)/2} dt."""
    alpha = (n - 3) / 2.0
    t, w = roots_jacobi(2 * K + 2, alpha, alpha)
    P = gegenbauer_table(n, 2 * K, t)
    A = np.zeros((K + 1, K + 1))
    for k in range(K + 1):
        for j in range(k + 1):
            A[k, j] = sphere_area(n - 1) * np.sum(w * t ** (2 * k) * P[2 * j])
    return A


class OracleDensity:
    """The recovered γ as a callable on unit vectors, with its degree pieces."""

    def __init__(self, dim, degrees, pieces_fn):
        self.dim = dim
        self.degrees = degrees
        self._pieces = pieces_fn

    def components(self, points):
        """Array of shape (K + 1, len(points)): the degree-0, 2, ..., 2K parts."""
        return self._pieces(np.atleast_2d(points))

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        flat = points.reshape(-1, self.dim)
        return self.components(flat).sum(axis=0).reshape(points.shape[:-1])


def distributional_ft_oracle(g, sigma, quad, max_degree=8):
    """Density γ of (E_{-1} g)^ recovered from Gaussian-Hermite pairings.

    ``g`` is a callable on unit vectors (or samples on ``quad``'s nodes);
    ``quad`` must integrate g·t^{max_degree} exactly for band-limited g.
    """
    if not (SIGMA_RANGE[0] <= sigma <= SIGMA_RANGE[1]):
        raise DomainError(f"test scale σ = {sigma} is outside the stable range {SIGMA_RANGE}")
    if max_degree % 2:
        raise DomainError("max_degree must be even")
    n = quad.dim
    K = max_degree // 2
    values = np.asarray(g(quad.nodes) if callable(g) else g, dtype=float)
    weighted = quad.weights * values
    A = _funk_hecke_table(n, K)

    # pairing coefficients: RHS_k(u) = Σ_j c[k, j] ∫ g(θ) <θ,u>^j dθ
    c = np.zeros((K + 1, 2 * K + 1))
    lhs_scale = np.zeros(K + 1)
    for k in range(K + 1):
        herm = hermite_e.herme2poly([0] * (2 * k) + [1])
        pref = (2 * math.pi * sigma**2) ** (n / 2) * (-1) ** k * sigma ** (2 * k)
        for j, coef in enumerate(herm):
            if coef:
                c[k, j] = pref * coef * sigma**j * _half_gaussian_moment(n - 2 + j, 1.0 / sigma)
        lhs_scale[k] = _half_gaussian_moment(2 * k, sigma)

    def pieces(points):
        t = points @ quad.nodes.T
        powers = np.empty((2 * K + 1, len(points)))
        tj = np.ones_like(t)
        for j in range(2 * K + 1):
            powers[j] = tj @ weighted
            tj = tj * t
        moments = (c @ powers) / lhs_scale[:, None]
        # γ moments against t^{2k} = Σ_{j<=k} A[k, j] Π_{2j} γ
        return np.linalg.solve(A, moments) if K else moments / A[0, 0]

    return OracleDensity(n, list(range(0, max_degree + 1, 2)), pieces)
