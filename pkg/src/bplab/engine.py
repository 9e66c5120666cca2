"""Verification pipeline for the measure-theoretic Busemann-Petty statement.

Everything is computed in one fixed labeling: K is the body whose
sections are claimed larger, the hypothesis margins are

    μ_{n-1}((K∖L) ∩ ξ^⊥) - ν_{n-1}((L∖K) ∩ ξ^⊥)

and the conclusion compares ν_n(L∖K) with μ_n(K∖L).  The zvavitch mode
with decreasing h is mapped onto this labeling by swapping the bodies (see
`oriented`).

Radial integrals of power-sum densities are done in closed form, so the
only discretization is on the sphere and on the great subspheres.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
import os

import numpy as np

from .densities import Density, PowerSum
from .errors import BPError, ContinuityError, DegenerateScenarioError, DomainError, IntegrandSingularityError
from .geometry import K_MINUS_L, L_MINUS_K, ray_segments, symmetric_difference_ray
from .harmonics import DEFAULT_TAIL_THRESHOLD, DEFAULT_TRUNCATION
from .quadrature import RadialRule, build_sphere_quadrature, subsphere_nodes_batch
from .transforms import DEFAULT_TOL_PD, INCONCLUSIVE, NOT_POSITIVE_DEFINITE, POSITIVE_DEFINITE, pd_test

MAIN = "main_theorem"
ZVAVITCH = "zvavitch"
DECREASING = "decreasing"
INCREASING = "increasing"

VERIFIED = "theorem instance verified"
VACUOUS = "vacuous"
VIOLATED = "implication violated (investigate)"
HYPOTHESIS_FAILS = "hypothesis not satisfied"
PD_INCONCLUSIVE = "positive-definiteness inconclusive"
NOT_APPLICABLE = "theorem assumptions not met"

EXIT_CODES = {
    VERIFIED: 0,
    VACUOUS: 0,
    PD_INCONCLUSIVE: 2,
    HYPOTHESIS_FAILS: 3,
    VIOLATED: 4,
    NOT_APPLICABLE: 5,
}

DENSITY_KEYS = ("f_n", "f_n_minus_1", "g_n", "g_n_minus_1")

_XI_CHUNK = 32


def worker_count():
    """Worker threads allowed by BP_THREADS (default 1)."""
    raw = os.environ.get("BP_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise DomainError(f"BP_THREADS must be an integer, got {raw!r}") from None


def _parallel_map(func, items):
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


# radial profiles -----------------------------------------------------------


def radial_moment(density, p, lo, hi, rule=None):
    """∫_lo^hi r^p density(r) dr, elementwise over arrays of endpoints.

    Power sums are integrated in closed form; any other callable of r uses
    the Gauss-Legendre ``rule`` (order 16 when none is given).
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if isinstance(density, PowerSum) and rule is None:
        out = np.zeros(np.broadcast(lo, hi).shape)
        empty = hi <= lo
        safe_lo = np.where(empty, 1.0, lo)
        safe_hi = np.where(empty, 1.0, hi)
        if np.any(safe_lo <= 0):
            raise IntegrandSingularityError("radial segment touches the origin")
        log_lo = np.log(safe_lo)
        # log(hi / lo) without cancellation on thin shells
        log_ratio = np.log1p((safe_hi - safe_lo) / safe_lo)
        for coef, exp in density.terms:
            k = p + exp + 1.0
            if k == 0:
                term = log_ratio
            else:
                # stable form of (hi^k - lo^k) / k
                term = np.exp(k * log_lo) * np.expm1(k * log_ratio) / k
            out = out + coef * term
        return np.where(empty, 0.0, out)
    rule = rule or RadialRule(16)
    r, w = rule.map(lo, np.maximum(hi, lo))
    values = r**p * np.asarray(density(r) if not isinstance(density, PowerSum) else density.radial(r))
    if not np.all(np.isfinite(values)):
        raise IntegrandSingularityError("radial integrand is not finite")
    return np.sum(w * values, axis=-1)


class PiecewiseRadial:
    """Radial function with one profile on K∖L rays and one on L∖K rays.

    Profiles are `PowerSum` objects or vectorized callables of r.
    """

    def __init__(self, k_minus_l, l_minus_k=None):
        self.k_minus_l = k_minus_l
        self.l_minus_k = k_minus_l if l_minus_k is None else l_minus_k

    @staticmethod
    def _eval(profile, r):
        if isinstance(profile, PowerSum):
            return profile.radial(r)
        return np.asarray(profile(r), dtype=float) * np.ones_like(r)

    def __call__(self, r, sign):
        r = np.asarray(r, dtype=float)
        sign = np.broadcast_to(np.asarray(sign), r.shape)
        out = np.empty_like(r)
        on_k = sign >= 0
        if on_k.any():
            out[on_k] = self._eval(self.k_minus_l, r[on_k])
        if (~on_k).any():
            out[~on_k] = self._eval(self.l_minus_k, r[~on_k])
        return out

    @property
    def uniform(self):
        return self.k_minus_l is self.l_minus_k or (
            isinstance(self.k_minus_l, PowerSum) and self.k_minus_l == self.l_minus_k
        )

    def to_spec(self):
        for profile in (self.k_minus_l, self.l_minus_k):
            if not isinstance(profile, PowerSum):
                return {"kind": "callable"}
        if self.uniform:
            return self.k_minus_l.to_spec()
        return {K_MINUS_L: self.k_minus_l.to_spec(), L_MINUS_K: self.l_minus_k.to_spec()}


ZERO = PowerSum([])


def h_profile(densities):
    """h as a `PiecewiseRadial`: (1/r) f_{n-1}/f_n on K∖L and g_{n-1}/g_n on L∖K."""

    def ratio(num, den):
        def h(r):
            d = den.radial(r)
            if np.any(d == 0):
                raise ZeroDivisionError(f"density {den!r} vanishes at r = {float(r[d == 0][0])!r}")
            return num.radial(r) / (r * d)

        return h

    return PiecewiseRadial(
        ratio(densities["f_n_minus_1"], densities["f_n"]),
        ratio(densities["g_n_minus_1"], densities["g_n"]),
    )


def h_eval(x, K, L, densities):
    """h at a point of K Δ L."""
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0:
        raise DomainError("h is undefined at the origin")
    v = x / r
    seg = symmetric_difference_ray(K, L, v)
    if seg is None or not (seg.lo <= r <= seg.hi):
        raise DomainError(f"point {x.tolist()} is not in K Δ L")
    sign = 1 if seg.region == K_MINUS_L else -1
    return float(h_profile(densities)(np.array([r]), sign)[0])


@dataclass
class MonotonePair:
    """h = a + b with a radially non-decreasing and b radially non-increasing."""

    a: PiecewiseRadial
    b: PiecewiseRadial

    def to_spec(self):
        return {"a": self.a.to_spec(), "b": self.b.to_spec()}


@dataclass
class DecompositionCheck:
    ok: bool
    violations: list
    violation_count: int
    max_sum_defect: float
    rays_checked: int

    def summary(self):
        return {
            "ok": self.ok,
            "violation_count": self.violation_count,
            "violations": self.violations,
            "max_sum_defect": self.max_sum_defect,
            "rays_checked": self.rays_checked,
        }


def _ray_grid(K, L, directions, r_samples):
    rk, rl, sign = ray_segments(K, L, directions)
    keep = sign != 0
    lo, hi = np.minimum(rk, rl)[keep], np.maximum(rk, rl)[keep]
    s = np.linspace(0.0, 1.0, r_samples)
    r = lo[:, None] + (hi - lo)[:, None] * s[None, :]
    return directions[keep], r, sign[keep][:, None] * np.ones_like(r, dtype=int)


def check_decomposition(pair, K, L, ray_samples, r_samples=33, h=None, rtol=1e-10, max_reported=20):
    """Sample rays of K Δ L and test monotonicity, signs and a + b = h.

    ``ray_samples`` is an array of directions.  Violations carry the ray,
    the radius and the size of the defect.
    """
    dirs, r, sign = _ray_grid(K, L, np.asarray(ray_samples, dtype=float), r_samples)
    if len(dirs) == 0:
        return DecompositionCheck(True, [], 0, 0.0, 0)
    a = pair.a(r, sign)
    b = pair.b(r, sign)
    scale = max(float(np.max(np.abs(a + b))), np.finfo(float).tiny)
    found = []

    def record(kind, mask, magnitude):
        for i, j in zip(*np.nonzero(mask)):
            found.append((float(magnitude[i, j]), kind, i, j))

    da, db = np.diff(a, axis=1), np.diff(b, axis=1)
    record("a_decreasing", da < -rtol * scale, -da)
    record("b_increasing", db > rtol * scale, db)
    record("a_negative", a < -rtol * scale, -a)
    record("b_negative", b < -rtol * scale, -b)
    max_defect = 0.0
    if h is not None:
        hv = h(r, sign)
        defect = np.abs(a + b - hv) / np.maximum(np.abs(hv), np.finfo(float).tiny)
        max_defect = float(np.max(defect))
        record("sum_defect", defect > rtol, defect)
    found.sort(key=lambda item: -item[0])
    violations = [
        {"kind": kind, "direction": dirs[i].tolist(), "r": float(r[i, j]), "magnitude": mag}
        for mag, kind, i, j in found[:max_reported]
    ]
    return DecompositionCheck(not found, violations, len(found), max_defect, len(dirs))


def endpoint_values(pair, K, L, directions):
    """a(ρ_K v) + b(ρ_L v) with the region tag of each ray (ties count as K∖L)."""
    rk, rl, sign = ray_segments(K, L, directions)
    tag = np.where(sign == 0, 1, sign)
    return pair.a(rk, tag) + pair.b(rl, tag), rk, rl, sign


def F_on_sphere(pair, K, L):
    """G(v) = 1 / (a(ρ_K(v) v) + b(ρ_L(v) v)), the sphere restriction of F."""

    def G(v):
        v = np.asarray(v, dtype=float)
        den, *_ = endpoint_values(pair, K, L, v)
        if np.any(~(den > 0)):
            bad = np.flatnonzero(~(den.reshape(-1) > 0))[0]
            raise DegenerateScenarioError(
                f"a(ρ_K v) + b(ρ_L v) is not positive at v = {v.reshape(-1, K.dim)[bad].tolist()}"
            )
        return 1.0 / den

    return G


def endpoint_bound_check(pair, K, L, samples=10_000, seed=0):
    """Check a(rv)+b(rv) against a(ρ_K v)+b(ρ_L v) on random points of K Δ L.

    On K∖L rays the value at r must not exceed the endpoint value; on L∖K
    rays it must not fall below it.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((samples, K.dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    bound, rk, rl, sign = endpoint_values(pair, K, L, v)
    keep = sign != 0
    lo, hi = np.minimum(rk, rl), np.maximum(rk, rl)
    r = lo + (hi - lo) * rng.random(samples)
    value = pair.a(r, np.where(keep, sign, 1)) + pair.b(r, np.where(keep, sign, 1))
    excess = np.where(sign > 0, value - bound, bound - value)
    tol = 1e-12 * np.maximum(np.abs(bound), np.abs(value))
    bad = keep & (excess > tol)
    out = {
        "checked": int(np.sum(keep)),
        "violations": int(np.sum(bad)),
        "worst_excess": float(np.max(excess[keep])) if keep.any() else 0.0,
        "k_minus_l": int(np.sum(sign > 0)),
        "l_minus_k": int(np.sum(sign < 0)),
    }
    return out


# measures ------------------------------------------------------------------


def _region_sign(region):
    if region == K_MINUS_L:
        return 1
    if region == L_MINUS_K:
        return -1
    raise DomainError(f"unknown region {region!r}")


def _segment_moments(region, density, p, K, L, directions, rule=None):
    rk, rl, sign = ray_segments(K, L, directions)
    target = _region_sign(region)
    on = sign == target
    lo = np.where(on, np.minimum(rk, rl), 1.0)
    hi = np.where(on, np.maximum(rk, rl), 1.0)
    moments = radial_moment(density, p, lo, hi, rule)
    if not np.all(np.isfinite(moments)):
        idx = np.flatnonzero(~np.isfinite(moments.reshape(-1)))[0]
        node = directions.reshape(-1, K.dim)[idx]
        raise IntegrandSingularityError(f"integrand is not finite along direction {node.tolist()}", node)
    return np.where(on, moments, 0.0)


def section_measures(region, density, xis, K, L, resolution, rule=None):
    """Section measures for many normals at once (shape ``(len(xis),)``)."""
    xis = np.atleast_2d(np.asarray(xis, dtype=float))
    chunks = [xis[i : i + _XI_CHUNK] for i in range(0, len(xis), _XI_CHUNK)]

    def work(chunk):
        nodes, weights = subsphere_nodes_batch(chunk, resolution)
        return _segment_moments(region, density, K.dim - 2, K, L, nodes, rule) @ weights

    parts = _parallel_map(work, chunks)
    return np.concatenate(parts) if parts else np.zeros(0)


def section_measure(region, density, xi, K, L, subquad=None, radial_rule=None, resolution=64):
    """∫ over (region) ∩ ξ^⊥ of the density, in polar coordinates on ξ^⊥."""
    if subquad is not None:
        moments = _segment_moments(region, density, K.dim - 2, K, L, subquad.nodes, radial_rule)
        return float(np.sum(subquad.weights * moments))
    return float(section_measures(region, density, [xi], K, L, resolution, radial_rule)[0])


def region_measure(region, density, K, L, quad, radial_rule=None):
    """∫ over the region of the density: Σ_j w_j ∫_segment r^{n-1} density dr."""
    moments = _segment_moments(region, density, K.dim - 1, K, L, quad.nodes, radial_rule)
    return float(np.sum(quad.weights * moments))


# scenarios -----------------------------------------------------------------


SECTION_RESOLUTION = {3: 64, 4: 24, 5: 10}
HYPERPLANE_RESOLUTION = {3: 16, 4: 8, 5: 6}
SPHERE_RESOLUTION = {3: 48, 4: 24, 5: 12}
RAY_RESOLUTION = {3: 12, 4: 6, 5: 4}


@dataclass
class Settings:
    """Resolved numerical configuration; every field is serialized in reports."""

    dim: int
    scheme: str = "product"
    seed: int = 0
    radial_order: int = 0
    sphere_resolution: int = 0
    section_resolution: int = 0
    hyperplane_resolution: int = 0
    refine_hyperplanes: bool = True
    ray_resolution: int = 0
    radial_samples: int = 33
    endpoint_samples: int = 10_000
    truncation: int = DEFAULT_TRUNCATION
    pd_resolution: int = 0
    tail_threshold: float = DEFAULT_TAIL_THRESHOLD
    tol_pd: float = DEFAULT_TOL_PD
    tol_hyp: float = 1e-7
    tol_conc: float = 1e-7
    tol_decomposition: float = 1e-10

    def __post_init__(self):
        from .transforms import default_resolution

        n = self.dim
        self.sphere_resolution = self.sphere_resolution or SPHERE_RESOLUTION.get(n, 10)
        self.section_resolution = self.section_resolution or SECTION_RESOLUTION.get(n, 8)
        self.hyperplane_resolution = self.hyperplane_resolution or HYPERPLANE_RESOLUTION.get(n, 4)
        self.ray_resolution = self.ray_resolution or RAY_RESOLUTION.get(n, 4)
        self.pd_resolution = self.pd_resolution or default_resolution(n, self.truncation)

    @property
    def radial_rule(self):
        """None selects closed-form radial integrals."""
        return RadialRule(self.radial_order) if self.radial_order else None

    def to_spec(self):
        return dict(self.__dict__)


@dataclass
class Scenario:
    """A fully materialized verification problem.

    In zvavitch mode the four densities satisfy f = g and ``pair`` is
    derived from h: with orientation "decreasing" K is the body with the PD
    property and the smaller sections (a = 0, b = h after swapping the
    bodies); with "increasing", a = h and b = 0 in the given labeling.
    """

    dim: int
    K: object
    L: object
    densities: dict
    mode: str = MAIN
    pair: MonotonePair | None = None
    orientation: str | None = None
    settings: Settings = None
    name: str = ""
    spec: dict = field(default=None, repr=False)

    def __post_init__(self):
        if self.settings is None:
            self.settings = Settings(self.dim)
        for key in DENSITY_KEYS:
            if not isinstance(self.densities.get(key), Density):
                raise DomainError(f"density {key} is missing or not a Density")
        if self.mode == ZVAVITCH:
            d = self.densities
            if d["f_n"] != d["g_n"] or d["f_n_minus_1"] != d["g_n_minus_1"]:
                raise DomainError("zvavitch mode needs f_n = g_n and f_n_minus_1 = g_n_minus_1")
            if self.orientation not in (DECREASING, INCREASING):
                raise DomainError("zvavitch mode needs orientation 'decreasing' or 'increasing'")
            if self.pair is not None:
                raise DomainError("zvavitch mode derives the decomposition from h")
        elif self.mode == MAIN:
            if self.pair is None:
                raise DomainError("main_theorem mode needs a decomposition (a, b)")
            if self.orientation is not None:
                raise DomainError("orientation only applies to zvavitch mode")
        else:
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.K.dim != self.dim or self.L.dim != self.dim:
            raise DomainError("body dimensions do not match the scenario dimension")


@dataclass
class Oriented:
    K: object
    L: object
    densities: dict
    pair: MonotonePair
    swapped: bool


def oriented(scenario):
    """Map a scenario onto the main labeling used by every check."""
    h = h_profile(scenario.densities)
    if scenario.mode == MAIN:
        return Oriented(scenario.K, scenario.L, scenario.densities, scenario.pair, False)
    zero = PiecewiseRadial(ZERO)
    if scenario.orientation == DECREASING:
        return Oriented(scenario.L, scenario.K, scenario.densities, MonotonePair(zero, h), True)
    return Oriented(scenario.K, scenario.L, scenario.densities, MonotonePair(h, zero), False)


def hyperplane_normals(dim, resolution):
    """One normal per antipodal pair of product-rule nodes."""
    quad = build_sphere_quadrature(dim, resolution)
    return quad.nodes[quad.half]


def hypothesis_margins(problem, xis, resolution, rule=None):
    d = problem.densities
    plus = section_measures(K_MINUS_L, d["f_n_minus_1"], xis, problem.K, problem.L, resolution, rule)
    minus = section_measures(L_MINUS_K, d["g_n_minus_1"], xis, problem.K, problem.L, resolution, rule)
    return plus - minus, plus, minus


def verify_hypothesis(scenario, xis=None):
    """Margins μ_{n-1}((K∖L)∩ξ^⊥) - ν_{n-1}((L∖K)∩ξ^⊥) for each ξ."""
    s = scenario.settings
    xis = hyperplane_normals(scenario.dim, s.hyperplane_resolution) if xis is None else np.atleast_2d(xis)
    margins, _, _ = hypothesis_margins(oriented(scenario), xis, s.section_resolution, s.radial_rule)
    return margins


def conclusion_values(problem, quad, rule=None):
    d = problem.densities
    lhs = region_measure(L_MINUS_K, d["g_n"], problem.K, problem.L, quad, rule)
    rhs = region_measure(K_MINUS_L, d["f_n"], problem.K, problem.L, quad, rule)
    return lhs, rhs


def verify_conclusion(scenario):
    """(ν_n(L∖K), μ_n(K∖L), ok) in the main labeling."""
    s = scenario.settings
    quad = build_sphere_quadrature(scenario.dim, s.sphere_resolution, s.scheme, s.seed)
    lhs, rhs = conclusion_values(oriented(scenario), quad, s.radial_rule)
    return lhs, rhs, lhs <= rhs + s.tol_conc * max(lhs, rhs)


@dataclass
class VerificationReport:
    verdict: str
    hypothesis_margins: np.ndarray
    hypothesis_ok: bool
    pd_report: object
    decomposition_ok: bool
    conclusion_lhs: float
    conclusion_rhs: float
    conclusion_ok: bool
    details: dict = field(default_factory=dict)

    @property
    def exit_code(self):
        return EXIT_CODES[self.verdict]

    def to_dict(self):
        margins = self.hypothesis_margins
        return {
            "verdict": self.verdict,
            "exit_code": self.exit_code,
            "decomposition_ok": self.decomposition_ok,
            "pd": self.pd_report.summary(),
            "hypothesis_ok": self.hypothesis_ok,
            "hypothesis": {
                "min_margin": float(np.min(margins)) if len(margins) else 0.0,
                "max_margin": float(np.max(margins)) if len(margins) else 0.0,
                "margins": [float(m) for m in margins],
                **self.details.get("hypothesis", {}),
            },
            "conclusion_ok": self.conclusion_ok,
            "conclusion": {
                "lhs": self.conclusion_lhs,
                "rhs": self.conclusion_rhs,
                **self.details.get("conclusion", {}),
            },
            "decomposition": self.details.get("decomposition", {}),
            "endpoint_bound": self.details.get("endpoint_bound", {}),
            "orientation": self.details.get("orientation", {}),
        }


class StageError(BPError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, error):
        super().__init__(f"stage {stage!r} failed: {type(error).__name__}: {error}")
        self.stage = stage
        self.error = error


def _stage(name, func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except StageError:
        raise
    except (BPError, ArithmeticError, ValueError) as exc:
        raise StageError(name, exc) from exc


def _hypothesis_stage(problem, s):
    xis = hyperplane_normals(problem.K.dim, s.hyperplane_resolution)
    margins, plus, minus = hypothesis_margins(problem, xis, s.section_resolution, s.radial_rule)
    scale = float(np.max(plus + minus)) if len(xis) else 0.0
    tol = s.tol_hyp * scale
    info = {"grid_resolution": s.hyperplane_resolution, "grid_size": len(xis), "tol": tol, "scale": scale}
    ok = bool(np.min(margins) >= -tol)
    if s.refine_hyperplanes:
        fine_res = s.hyperplane_resolution + (s.hyperplane_resolution + 1) // 2
        fine_xis = hyperplane_normals(problem.K.dim, fine_res)
        fine, fplus, fminus = hypothesis_margins(problem, fine_xis, s.section_resolution, s.radial_rule)
        fine_tol = s.tol_hyp * float(np.max(fplus + fminus))
        info["refinement"] = {
            "grid_resolution": fine_res,
            "grid_size": len(fine_xis),
            "min_margin": float(np.min(fine)),
            "ok": bool(np.min(fine) >= -fine_tol),
        }
        ok = ok and info["refinement"]["ok"]
    return margins, ok, info


def _conclusion_stage(problem, s):
    quad = build_sphere_quadrature(problem.K.dim, s.sphere_resolution, s.scheme, s.seed)
    lhs, rhs = conclusion_values(problem, quad, s.radial_rule)
    # discretization error estimate from a coarser rule
    coarse = build_sphere_quadrature(problem.K.dim, max(2, (2 * s.sphere_resolution) // 3), s.scheme, s.seed + 1)
    clhs, crhs = conclusion_values(problem, coarse, s.radial_rule)
    err = abs(clhs - lhs) + abs(crhs - rhs)
    tol = s.tol_conc * max(lhs, rhs)
    ok = lhs <= rhs + tol + err
    rk, rl, sign = ray_segments(problem.K, problem.L, quad.nodes)
    info = {"tol": tol, "error_estimate": err, "slack": rhs - lhs, "rays_in_difference": int(np.sum(sign != 0))}
    return lhs, rhs, bool(ok), info


def _validate_geometry(problem):
    negative = any(exp < 0 for d in problem.densities.values() for c, exp in d.terms if c)
    probe = build_sphere_quadrature(problem.K.dim, 8).nodes
    for name, body in (("K", problem.K), ("L", problem.L)):
        rho = body.radial(probe)
        if np.min(rho) <= 0 or (negative and np.min(rho) < 1e-6):
            raise DomainError(f"body {name} degenerates toward the origin")


def run_scenario(scenario):
    """Run every check and assemble a `VerificationReport`."""
    s = scenario.settings
    problem = oriented(scenario)
    _stage("validation", _validate_geometry, problem)
    h = h_profile(problem.densities)
    rays = hyperplane_normals(scenario.dim, s.ray_resolution)
    rays = np.vstack([rays, -rays])
    decomposition = _stage(
        "decomposition",
        check_decomposition,
        problem.pair,
        problem.K,
        problem.L,
        rays,
        s.radial_samples,
        h,
        s.tol_decomposition,
    )
    endpoint = _stage("endpoint_bound", endpoint_bound_check, problem.pair, problem.K, problem.L, s.endpoint_samples, s.seed)
    G = F_on_sphere(problem.pair, problem.K, problem.L)
    pd_quad = build_sphere_quadrature(scenario.dim, s.pd_resolution)
    pd = _stage("pd_test", pd_test, G, s.truncation, pd_quad, s.tol_pd, s.tail_threshold)
    margins, hyp_ok, hyp_info = _stage("hypothesis", _hypothesis_stage, problem, s)
    lhs, rhs, conc_ok, conc_info = _stage("conclusion", _conclusion_stage, problem, s)

    empty = conc_info["rays_in_difference"] == 0 and not np.any(margins)
    if empty:
        verdict = VACUOUS
    elif not decomposition.ok or pd.verdict == NOT_POSITIVE_DEFINITE:
        verdict = NOT_APPLICABLE
    elif pd.verdict == INCONCLUSIVE:
        verdict = PD_INCONCLUSIVE
    elif not hyp_ok:
        verdict = HYPOTHESIS_FAILS
    elif conc_ok:
        verdict = VERIFIED
    else:
        verdict = VIOLATED
    assert verdict != VERIFIED or pd.verdict == POSITIVE_DEFINITE
    details = {
        "hypothesis": hyp_info,
        "conclusion": conc_info,
        "decomposition": decomposition.summary(),
        "endpoint_bound": endpoint,
        "orientation": {
            "mode": scenario.mode,
            "orientation": scenario.orientation,
            "bodies_swapped": problem.swapped,
            "a": problem.pair.a.to_spec() if scenario.mode == MAIN else ("zero" if problem.swapped else "h"),
            "b": problem.pair.b.to_spec() if scenario.mode == MAIN else ("h" if problem.swapped else "zero"),
        },
    }
    return VerificationReport(verdict, margins, hyp_ok, pd, decomposition.ok, lhs, rhs, conc_ok, details)


# continuity of the split integral ------------------------------------------------


def q_profile(K, L, f, g, v_samples):
    """Q(v) = ∫_{ρ_L(v)}^{ρ_K(v)} q(rv) dr with q = f on K∖L and g on L∖K.

    Negative on rays where ρ_L > ρ_K.  Needs continuous densities.
    """
    for name, d in (("f", f), ("g", g)):
        if not d.continuous:
            raise ContinuityError(f"density {name} = {d!r} is not continuous at the origin")
    v = np.asarray(v_samples, dtype=float)
    rk, rl, sign = ray_segments(K, L, v)
    lo, hi = np.minimum(rk, rl), np.maximum(rk, rl)
    plus = radial_moment(f, 0, lo, hi)
    minus = radial_moment(g, 0, lo, hi)
    return np.where(sign > 0, plus, np.where(sign < 0, -minus, 0.0))


def great_circle(dim, u, w, count):
    """``count`` equally spaced points on the great circle spanned by u, w."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    u = u / np.linalg.norm(u)
    w = w - (w @ u) * u
    w = w / np.linalg.norm(w)
    t = np.arange(count) * (2.0 * math.pi / count)
    return np.cos(t)[:, None] * u + np.sin(t)[:, None] * w


def q_profile_jumps(K, L, f, g, u, w, levels=(64, 128, 256, 512)):
    """Largest neighbor difference of Q on nested great-circle grids."""
    out = []
    for count in levels:
        values = q_profile(K, L, f, g, great_circle(K.dim, u, w, count))
        out.append(float(np.max(np.abs(np.diff(np.append(values, values[0]))))))
    return out
