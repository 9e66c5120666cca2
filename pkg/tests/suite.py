"""Randomized scenario generator for the soundness sweep.

Bodies come from the presets.  Densities follow the example families: on
each side f_n = c |x|^p and f_{n-1} = c |x|^{p+1} h(|x|), so that h is the
same prescribed power sum on both regions while μ and ν differ.  The
decomposition puts the non-negative powers of h into a and the negative
ones into b.  L is then rescaled by bisection until the hypothesis is
nearly tight on the hyperplane grid.
"""

from __future__ import annotations

import numpy as np

from bplab.engine import DECREASING, INCREASING, MAIN, ZVAVITCH, hypothesis_margins, hyperplane_normals, oriented
from bplab.scenario import SCHEMA, parse_scenario

MODES = ((MAIN, None), (ZVAVITCH, DECREASING), (ZVAVITCH, INCREASING))


def _terms(pairs):
    return [{"coef": float(c), "exp": float(a)} for c, a in pairs]


def random_body(rng, n):
    kind = rng.choice(["ball", "ellipsoid", "lp_ball", "perturbed_ball"])
    if kind == "ball":
        return {"kind": "ball", "r": float(rng.uniform(0.8, 1.2))}
    if kind == "ellipsoid":
        return {"kind": "ellipsoid", "semiaxes": rng.uniform(0.8, 1.3, n).tolist()}
    if kind == "lp_ball":
        p = rng.choice([1.5, 2.0, 3.0, 4.0, 8.0, "inf"])
        return {"kind": "lp_ball", "p": p if p == "inf" else float(p), "r": 1.0}
    axis = rng.standard_normal(n)
    terms = [{"degree": int(rng.choice([2, 4])), "eps": float(rng.uniform(-0.15, 0.15)), "axis": (axis / np.linalg.norm(axis)).tolist()}]
    return {"kind": "perturbed_ball", "r": 1.0, "terms": terms}


def random_h(rng, n, mode, orientation):
    """Power sum h(r) = Σ c r^β as (c, β) pairs, monotone as the mode requires."""
    family = rng.choice(["ex31", "ex32", "ex33", "lebesgue", "powers"])
    if mode == ZVAVITCH:
        family = {DECREASING: rng.choice(["lebesgue", "powers"]), INCREASING: rng.choice(["ex31", "ex32", "powers"])}[orientation]
    if family == "ex31":
        return [(1.0, 1.0)]
    if family == "ex32":
        return [(1.0, float(n - 1))]
    if family == "ex33":
        return [(float(rng.uniform(0.05, 0.5)), 1.0), (1.0, -1.0)]
    if family == "lebesgue":
        return [(1.0, -1.0)]
    count = int(rng.integers(1, 3))
    if mode == ZVAVITCH and orientation == DECREASING:
        betas = rng.choice([-3.0, -2.0, -1.0, -0.5], count, replace=False)
    elif mode == ZVAVITCH:
        betas = rng.choice([0.5, 1.0, 2.0, 3.0], count, replace=False)
    else:
        betas = rng.choice([-2.0, -1.0, 0.0, 1.0, 2.0], count, replace=False)
    return [(float(rng.uniform(0.2, 2.0)), float(b)) for b in betas]


def side_densities(rng, n, h, allow_negative=True):
    p = float(rng.choice([-n, 0, 1, 2, 3] if allow_negative else [0, 1, 2, 3]))
    c = float(rng.uniform(0.5, 2.0))
    return _terms([(c, p)]), _terms([(c * k, p + 1 + beta) for k, beta in h])


def base_spec(rng, n, mode, orientation):
    h = random_h(rng, n, mode, orientation)
    f_n, f_n1 = side_densities(rng, n, h)
    if mode == MAIN:
        g_n, g_n1 = side_densities(rng, n, h)
    else:
        g_n, g_n1 = f_n, f_n1
    spec = {
        "schema": SCHEMA,
        "dim": n,
        "mode": mode,
        "bodies": {"K": random_body(rng, n), "L": random_body(rng, n)},
        "densities": {"f_n": f_n, "f_n_minus_1": f_n1, "g_n": g_n, "g_n_minus_1": g_n1},
    }
    if mode == MAIN:
        spec["decomposition"] = {
            "a": _terms([(k, b) for k, b in h if b >= 0]),
            "b": _terms([(k, b) for k, b in h if b < 0]),
        }
    else:
        spec["orientation"] = orientation
    return spec


def _min_margin(spec, factor):
    trial = dict(spec)
    trial["bodies"] = dict(spec["bodies"])
    trial["bodies"]["L"] = {"kind": "scaled", "factor": factor, "body": spec["bodies"]["L"]}
    scenario = parse_scenario(trial)
    s = scenario.settings
    xis = hyperplane_normals(scenario.dim, s.hyperplane_resolution)
    margins, _, _ = hypothesis_margins(oriented(scenario), xis, s.section_resolution)
    # in the swapped orientation a larger L means a smaller "small" body
    return float(np.min(margins)), trial


def tighten(spec, rng, steps=24):
    """Scale L so that the smallest grid margin is close to zero from above."""
    swapped = spec["mode"] == ZVAVITCH and spec["orientation"] == DECREASING
    lo, hi = 0.4, 2.5

    def ok(t):
        m, _ = _min_margin(spec, t)
        return m >= 0

    # margins decrease as L grows (or increase, when the roles are swapped)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if ok(mid) != swapped:
            lo = mid
        else:
            hi = mid
    edge = lo if not swapped else hi
    slack = float(rng.choice([0.0, 1e-3, 1e-2, 5e-2]))
    factor = edge * (1 - slack) if not swapped else edge * (1 + slack)
    return _min_margin(spec, factor)[1]


def random_scenario_spec(seed, mode, orientation, n=3):
    rng = np.random.default_rng(seed)
    return tighten(base_spec(rng, n, mode, orientation), rng)
