"""Funk transform, degree -1 Fourier multipliers and the positive-definiteness test.

On degree-m harmonics ``Y`` (m even) the Funk transform acts by

    R Y = |S^{n-2}| P_m(0) Y

and the Fourier transform of the degree -1 extension obeys

    (|x|^{-1} Y(x/|x|))^ = mu(n, m) |ξ|^{1-n} Y(ξ/|ξ|),
    mu(n, m) = 2^{n-1} π^{n/2} (-1)^{m/2} Γ((m+n-1)/2) / Γ((m+1)/2).

Fourier inversion ties the two together: mu(n, m) π λ(n, m) = (2π)^n.
`MultiplierTable` checks this identity on construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math
import warnings

import numpy as np
from scipy.optimize import minimize
from scipy.special import roots_jacobi

from .errors import DomainError
from .harmonics import (
    DEFAULT_TAIL_THRESHOLD,
    DEFAULT_TRUNCATION,
    expand,
    gegenbauer_table,
    harmonic_dimension,
)
from .quadrature import (
    build_sphere_quadrature,
    build_subsphere_quadrature,
    integrate_subsphere,
    sphere_area,
)

POSITIVE_DEFINITE = "positive_definite"
NOT_POSITIVE_DEFINITE = "not_positive_definite"
INCONCLUSIVE = "inconclusive"

DEFAULT_TOL_PD = 1e-7
INVERSION_RTOL = 1e-10

# integration / sampling resolutions for the PD test, by dimension
DEFAULT_RESOLUTION = {3: 32, 4: 16, 5: 12}
DEFAULT_SAMPLE_RESOLUTION = {3: 24, 4: 10, 5: 6}


def default_resolution(n, M=DEFAULT_TRUNCATION):
    return max(DEFAULT_RESOLUTION.get(n, 8), M + 1)


def default_sample_resolution(n, M=DEFAULT_TRUNCATION):
    return max(DEFAULT_SAMPLE_RESOLUTION.get(n, 6), M // 2 + 2)


def funk_lambda(n, m):
    """Eigenvalue of the Funk transform on degree-m harmonics in R^n."""
    if m % 2:
        return 0.0
    return sphere_area(n - 1) * float(gegenbauer_table(n, m, np.array(0.0))[m])


def ft_multiplier(n, m):
    """Multiplier taking E_{-1} Y_m to E_{1-n} Y_m under the Fourier transform.

    Odd degrees are annihilated by the even transform, so they return 0.
    """
    if m % 2:
        return 0.0
    log_ratio = math.lgamma((m + n - 1) / 2.0) - math.lgamma((m + 1) / 2.0)
    return (-1) ** (m // 2) * 2.0 ** (n - 1) * math.pi ** (n / 2.0) * math.exp(log_ratio)


@dataclass(frozen=True)
class MultiplierTable:
    dim: int
    max_degree: int
    funk: tuple
    fourier: tuple

    @property
    def funk_lambda(self):
        return dict(enumerate(self.funk))

    @property
    def ft_mu(self):
        return dict(enumerate(self.fourier))


@lru_cache(maxsize=None)
def multiplier_table(n, max_degree):
    """Validated multipliers for degrees 0..max_degree."""
    funk = tuple(funk_lambda(n, m) for m in range(max_degree + 1))
    fourier = tuple(ft_multiplier(n, m) for m in range(max_degree + 1))
    target = (2.0 * math.pi) ** n
    for m in range(0, max_degree + 1, 2):
        if funk[m] == 0.0:
            continue
        defect = abs(fourier[m] * math.pi * funk[m] - target) / target
        if defect > INVERSION_RTOL:
            raise AssertionError(f"inversion identity fails at n={n}, m={m} (defect {defect:.2e})")
    return MultiplierTable(n, max_degree, funk, fourier)


def funk_transform_direct(f, xi, subquad=None, resolution=64):
    """∫_{S^{n-1} ∩ ξ^⊥} f(w) dw by subsphere quadrature."""
    if subquad is None:
        subquad = build_subsphere_quadrature(np.asarray(xi, dtype=float), resolution)
    return integrate_subsphere(f, subquad)


class SpectralTransform:
    """Σ_m c_m Π_m f for a fixed multiplier sequence, callable on points."""

    def __init__(self, expansion, multipliers):
        self.expansion = expansion
        self.multipliers = multipliers
        self.tail_energy = expansion.tail_energy
        self.warning = (
            f"tail energy {expansion.tail_energy:.3e} above threshold" if expansion.tail_flagged else None
        )

    def __call__(self, points):
        return self.expansion.evaluate(points, self.multipliers)

    @property
    def samples(self):
        return self.expansion.combine(self.multipliers)


def funk_transform_spectral(f, M, quad, tail_threshold=DEFAULT_TAIL_THRESHOLD, sample_quad=None):
    """Funk transform through the degree-wise eigenvalues (exact on degrees <= M).

    Projections are integrated with ``quad``.  For a callable ``f`` they are
    stored on the smaller default sample rule unless ``sample_quad`` says
    otherwise; sampled input keeps ``quad`` as its sample rule.
    """
    if sample_quad is None and callable(f):
        sample_quad = build_sphere_quadrature(quad.dim, default_sample_resolution(quad.dim, M))
    expansion = expand(f, M, quad, tail_threshold, sample_quad=sample_quad)
    table = multiplier_table(quad.dim, M)
    transform = SpectralTransform(expansion, table.funk_lambda)
    if transform.warning:
        warnings.warn(transform.warning, RuntimeWarning, stacklevel=2)
    return transform


@lru_cache(maxsize=None)
def positive_kernel_weights(n, M):
    """Degree-wise eigenvalues of a nonnegative zonal kernel of degree M.

    The kernel is the square of the reproducing kernel of polynomials of
    degree <= M/2, so it is pointwise nonnegative.  Averaging a nonnegative
    measure against it always gives a nonnegative function, and its
    eigenvalues vanish above degree M.  Normalized so the degree-0 value is 1.
    """
    t, w = roots_jacobi(2 * M + 4, (n - 3) / 2.0, (n - 3) / 2.0)
    P = gegenbauer_table(n, M, t)
    reproducing = sum(harmonic_dimension(n, k) * P[k] for k in range(M // 2 + 1))
    kernel = reproducing * reproducing
    out = []
    for m in range(M + 1):
        coeff = np.sum(kernel * P[m] * w) / np.sum(P[m] * P[m] * w)
        out.append(coeff / harmonic_dimension(n, m))
    out = np.asarray(out)
    return tuple((out / out[0]).tolist())


@dataclass
class PDReport:
    """Outcome of the positive-definiteness test of E_{-1} g.

    ``transformed_density`` is the truncated density of γ₀ sampled at
    ``sample_nodes``; ``smoothed_density`` is the same density averaged
    against a nonnegative kernel.  ``basis`` says which of the two decided
    the verdict and ``min_value`` is the minimum of that one.
    """

    verdict: str
    transformed_density: np.ndarray
    min_value: float
    tail_energy: float
    dim: int = 0
    max_degree: int = 0
    raw_min: float = 0.0
    smoothed_min: float = 0.0
    smoothed_density: np.ndarray = field(default=None, repr=False)
    sample_nodes: np.ndarray = field(default=None, repr=False)
    sample_weights: np.ndarray = field(default=None, repr=False)
    scale: float = 0.0
    tail_margin: float = 0.0
    quad_error: float = 0.0
    tol: float = DEFAULT_TOL_PD
    tail_threshold: float = DEFAULT_TAIL_THRESHOLD
    basis: str = "raw"
    argmin: list = field(default_factory=list)

    def summary(self):
        return {
            "verdict": self.verdict,
            "basis": self.basis,
            "min_value": self.min_value,
            "raw_min": self.raw_min,
            "smoothed_min": self.smoothed_min,
            "scale": self.scale,
            "tail_energy": self.tail_energy,
            "tail_margin": self.tail_margin,
            "quad_error": self.quad_error,
            "tol": self.tol,
            "tail_threshold": self.tail_threshold,
            "max_degree": self.max_degree,
            "argmin": self.argmin,
        }


def _polish_minimum(func, candidates, maxiter):
    """Local minimization of a smooth sphere function from a few starting points."""
    best_value, best_point = np.inf, None
    for start in candidates:
        res = minimize(
            lambda x: float(func((x / np.linalg.norm(x))[None, :])[0]),
            start,
            method="Nelder-Mead",
            options={"maxiter": maxiter, "xatol": 1e-7, "fatol": 1e-12},
        )
        point = res.x / np.linalg.norm(res.x)
        value = float(func(point[None, :])[0])
        if value < best_value:
            best_value, best_point = value, point
    return best_value, best_point


def _lowest_starts(values, nodes, count):
    order = np.argsort(values, kind="stable")
    return [nodes[i] for i in order[:count]]


def pd_test(
    g,
    M=DEFAULT_TRUNCATION,
    quad=None,
    tol_pd=DEFAULT_TOL_PD,
    tail_threshold=DEFAULT_TAIL_THRESHOLD,
    *,
    dim=None,
    sample_resolution=None,
    coarse_resolution=None,
    starts=4,
):
    """Decide whether E_{-1} g is a positive-definite distribution.

    ``g`` is an even positive sphere function (callable on arrays of unit
    vectors).  The γ₀ density is reconstructed degree-wise up to ``M``.

    Two certificates are combined:

    * the raw truncated density, trusted when the tail of ``g`` beyond
      degree ``M`` is small;
    * the same density averaged against a nonnegative kernel of degree
      ``M``.  This average needs no tail control (the kernel is band
      limited), and a positive-definite g can never make it negative, so a
      clearly negative value certifies failure.  When the raw minimum is
      inside the tail band, a nonnegative average is accepted as a pass.

    Anything between the decision bands is reported as inconclusive.
    """
    if quad is None:
        if dim is None:
            raise DomainError("pd_test needs a quadrature rule or a dimension")
        quad = build_sphere_quadrature(dim, default_resolution(dim, M))
    n = quad.dim
    if M % 2:
        raise DomainError("truncation degree must be even")
    sample_quad = build_sphere_quadrature(n, sample_resolution or default_sample_resolution(n, M))
    expansion = expand(g, M, quad, tail_threshold, sample_quad=sample_quad)
    table = multiplier_table(n, M)
    kappa = positive_kernel_weights(n, M)
    raw_mult = table.ft_mu
    smooth_mult = {m: kappa[m] * table.ft_mu[m] for m in range(M + 1)}

    raw = expansion.combine(raw_mult)
    smoothed = expansion.combine(smooth_mult)
    half = sample_quad.half
    nodes = sample_quad.nodes[half]
    maxiter = 60 * n
    raw_min, raw_at = _polish_minimum(
        lambda x: expansion.evaluate(x, raw_mult), _lowest_starts(raw[half], nodes, starts), maxiter
    )
    smooth_min, smooth_at = _polish_minimum(
        lambda x: expansion.evaluate(x, smooth_mult), _lowest_starts(smoothed[half], nodes, starts), maxiter
    )
    raw_min = min(raw_min, float(raw.min()))
    smooth_min = min(smooth_min, float(smoothed.min()))

    # quadrature error estimate: redo the integrals on a coarser rule at the minimizers
    coarse_res = coarse_resolution or max(M + 1, (2 * quad.resolution) // 3)
    coarse_quad = build_sphere_quadrature(n, coarse_res, quad.scheme, quad.seed or 0)
    coarse = expand(g, M, coarse_quad, tail_threshold, sample_quad=sample_quad)
    probe = np.vstack([raw_at, smooth_at])
    quad_error = float(
        max(
            abs(coarse.evaluate(probe[:1], raw_mult)[0] - expansion.evaluate(probe[:1], raw_mult)[0]),
            abs(coarse.evaluate(probe[1:], smooth_mult)[0] - expansion.evaluate(probe[1:], smooth_mult)[0]),
        )
    )

    scale = float(np.max(np.abs(raw)))
    smooth_scale = float(np.max(np.abs(smoothed)))
    tol_abs = tol_pd * scale
    tol_smooth = tol_pd * smooth_scale
    g_norm = math.sqrt(max(expansion.norm_sq(), 0.0))
    tail = expansion.tail_energy
    tail_margin = math.sqrt(tail) * g_norm * max(abs(table.ft_mu[m]) for m in range(0, M + 1, 2))

    if tail <= tail_threshold and raw_min >= -tol_abs:
        verdict, basis, min_value = POSITIVE_DEFINITE, "raw", raw_min
    elif raw_min < -(tol_abs + tail_margin + quad_error):
        verdict, basis, min_value = NOT_POSITIVE_DEFINITE, "raw", raw_min
    elif smooth_min < -(tol_smooth + quad_error):
        verdict, basis, min_value = NOT_POSITIVE_DEFINITE, "smoothed", smooth_min
    elif tail <= tail_threshold and smooth_min >= -tol_smooth:
        verdict, basis, min_value = POSITIVE_DEFINITE, "smoothed", smooth_min
    else:
        verdict, basis, min_value = INCONCLUSIVE, "raw", raw_min

    return PDReport(
        verdict=verdict,
        transformed_density=raw,
        min_value=float(min_value),
        tail_energy=tail,
        dim=n,
        max_degree=M,
        raw_min=float(raw_min),
        smoothed_min=float(smooth_min),
        smoothed_density=smoothed,
        sample_nodes=sample_quad.nodes,
        sample_weights=sample_quad.weights,
        scale=scale,
        tail_margin=float(tail_margin),
        quad_error=quad_error,
        tol=tol_pd,
        tail_threshold=tail_threshold,
        basis=basis,
        argmin=(smooth_at if basis == "smoothed" else raw_at).tolist(),
    )


def pd_crossover(family, lo, hi, dim, M=DEFAULT_TRUNCATION, resolution=None, xtol=1e-4, **kwargs):
    """Bisect for the parameter where ``pd_test(family(t))`` stops being positive definite.

    ``family(lo)`` must pass and ``family(hi)`` must fail.  Inconclusive
    verdicts count as failures.  Returns the midpoint of the final bracket.
    """
    quad = build_sphere_quadrature(dim, resolution or default_resolution(dim, M))

    def passes(t):
        return pd_test(family(t), M, quad, **kwargs).verdict == POSITIVE_DEFINITE

    if not passes(lo) or passes(hi):
        raise DomainError("the bracket does not straddle a verdict change")
    while hi - lo > xtol * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def parseval_check(f, g, M, quad):
    """Largest degree-wise defect of ⟨T g, f⟩ = ⟨g, T f⟩ with T = (E_{1-n} ·)^∧.

    T acts on degree m by π λ(n, m); the two sides are assembled from
    separately sampled transforms, so the defect measures how well the
    quadrature keeps the projections self-adjoint and orthogonal.
    """
    n = quad.dim
    table = multiplier_table(n, M)
    ef = expand(f, M, quad)
    eg = expand(g, M, quad)
    w = quad.weights
    fv, gv = ef.values, eg.values
    t_f = ef.combine({m: math.pi * table.funk[m] for m in range(M + 1)})
    floor = max(abs(math.pi * table.funk[m]) for m in range(0, M + 1, 2))
    floor *= math.sqrt(np.sum(w * fv * fv) * np.sum(w * gv * gv))
    worst = 0.0
    for m in range(0, M + 1, 2):
        lhs = math.pi * table.funk[m] * float(np.sum(w * eg.components[m] * fv))
        rhs = float(np.sum(w * eg.components[m] * t_f))
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs), floor))
    return worst


def spherical_parseval_sides(f, g, M, quad):
    """Both sides of ∫ (E_{1-n} g)^∧ dγ₀ = (2π)^n ∫ g f for band-limited f, g.

    γ₀ is the truncated transform density of E_{-1} f.
    """
    n = quad.dim
    table = multiplier_table(n, M)
    ef = expand(f, M, quad)
    eg = expand(g, M, quad)
    gamma = ef.combine(table.ft_mu)
    g_hat = eg.combine({m: math.pi * table.funk[m] for m in range(M + 1)})
    lhs = float(np.sum(quad.weights * g_hat * gamma))
    rhs = (2.0 * math.pi) ** n * float(np.sum(quad.weights * eg.values * ef.values))
    return lhs, rhs
