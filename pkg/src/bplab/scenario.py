"""Scenario files (schema "bp/1"), canonical serialization and built-in examples.

A scenario file looks like::

    {
      "schema": "bp/1",
      "name": "shell",
      "dim": 3,
      "mode": "main_theorem",
      "bodies": {"K": {"kind": "ball", "r": 2.0}, "L": {"kind": "ball", "r": 1.0}},
      "densities": {"f_n": [{"coef": 1, "exp": 0}], "f_n_minus_1": [...],
                    "g_n": [...], "g_n_minus_1": [...]},
      "decomposition": {"a": [], "b": [{"coef": 1, "exp": -1}]},
      "truncation_degree": 8,
      "quadrature": {"resolution": 48, "section_resolution": 64},
      "pd": {"tol": 1e-7, "tail_threshold": 0.01},
      "tolerances": {"hypothesis": 1e-7, "conclusion": 1e-7}
    }

Every numeric setting is optional; ``quadrature``, ``pd``, ``tolerances``
and ``checks`` group them (see `SETTINGS_GROUPS`).

Densities are lists of ``{"coef", "exp"}`` terms.  A decomposition
function is either such a list or ``{"K_minus_L": [...], "L_minus_K": [...]}``.
In zvavitch mode there is no decomposition, ``orientation`` is required and
``g_n``/``g_n_minus_1`` may be omitted (they must equal the f densities).
Unknown fields are rejected everywhere.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .densities import Density, PowerSum
from .engine import (
    DECREASING,
    DENSITY_KEYS,
    INCREASING,
    MAIN,
    ZVAVITCH,
    MonotonePair,
    PiecewiseRadial,
    Scenario,
    Settings,
    hyperplane_normals,
)
from .errors import BPError, ScenarioError
from .geometry import K_MINUS_L, L_MINUS_K, Ball, Ellipsoid, LpBall, PerturbedBall, body_from_spec
from .quadrature import subsphere_nodes_batch

SCHEMA = "bp/1"
TOP_LEVEL = {"schema", "name", "dim", "mode", "orientation", "bodies", "densities", "decomposition", "truncation_degree"} | set(
    ("quadrature", "pd", "tolerances", "checks")
)
BUILTINS = ("example-3.1", "example-3.2", "example-3.3", "zvavitch-lebesgue")


# serialization -------------------------------------------------------------


def _encode(obj, indent, level):
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," + pad if indent else ", "
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return '"nan"'
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        return format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = (json.dumps(str(k), ensure_ascii=False) + ": " + _encode(v, indent, level + 1) for k, v in obj.items())
        return "{" + pad + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, bool) for x in obj):
            return "[" + ", ".join(_encode(x, indent, level + 1) for x in obj) + "]"
        return "[" + pad + sep.join(_encode(x, indent, level + 1) for x in obj) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    """JSON text with every float written to 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


# parsing -------------------------------------------------------------------


def _require(obj, field, kind=dict):
    if not isinstance(obj, kind):
        raise ScenarioError(f"expected {kind.__name__}, got {type(obj).__name__}", field)
    return obj


def _density(spec, field, signed=False):
    _require(spec, field, list)
    try:
        return (PowerSum if signed else Density)(spec)
    except (BPError, KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(str(exc), field) from None


def _profile(spec, field):
    if isinstance(spec, dict):
        extra = set(spec) - {K_MINUS_L, L_MINUS_K}
        if extra:
            raise ScenarioError(f"unknown field(s) {sorted(extra)}", field)
        if set(spec) != {K_MINUS_L, L_MINUS_K}:
            raise ScenarioError(f"needs both {K_MINUS_L} and {L_MINUS_K}", field)
        return PiecewiseRadial(
            _density(spec[K_MINUS_L], f"{field}.{K_MINUS_L}", True),
            _density(spec[L_MINUS_K], f"{field}.{L_MINUS_K}", True),
        )
    return PiecewiseRadial(_density(spec, field, True))


# JSON group -> {JSON key: Settings field}
SETTINGS_GROUPS = {
    "quadrature": {
        "scheme": "scheme",
        "resolution": "sphere_resolution",
        "seed": "seed",
        "radial_order": "radial_order",
        "section_resolution": "section_resolution",
        "hyperplane_resolution": "hyperplane_resolution",
        "refine_hyperplanes": "refine_hyperplanes",
        "ray_resolution": "ray_resolution",
    },
    "pd": {"tol": "tol_pd", "tail_threshold": "tail_threshold", "resolution": "pd_resolution"},
    "tolerances": {"hypothesis": "tol_hyp", "conclusion": "tol_conc", "decomposition": "tol_decomposition"},
    "checks": {"radial_samples": "radial_samples", "endpoint_samples": "endpoint_samples"},
}


def _setting_value(key, value, where):
    expected = type(Settings.__dataclass_fields__[key].default)
    if expected is bool:
        if not isinstance(value, bool):
            raise ScenarioError("expected a boolean", where)
        return value
    if expected is str:
        if not isinstance(value, str):
            raise ScenarioError("expected a string", where)
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError("expected a number", where)
    if expected is int and not isinstance(value, int):
        raise ScenarioError("expected an integer", where)
    if value < 0 or not math.isfinite(value):
        raise ScenarioError("must be finite and non-negative", where)
    return float(value) if expected is float else value


def _settings(spec, dim):
    values = {}
    for group, keys in SETTINGS_GROUPS.items():
        if group not in spec:
            continue
        body = _require(spec[group], group)
        extra = set(body) - set(keys)
        if extra:
            raise ScenarioError(f"unknown field(s) {sorted(extra)}", group)
        for key, value in body.items():
            values[keys[key]] = _setting_value(keys[key], value, f"{group}.{key}")
    if "truncation_degree" in spec:
        values["truncation"] = _setting_value("truncation", spec["truncation_degree"], "truncation_degree")
        if values["truncation"] % 2:
            raise ScenarioError("truncation degree must be even", "truncation_degree")
    if values.get("scheme", "product") not in ("product", "mc"):
        raise ScenarioError("scheme must be 'product' or 'mc'", "quadrature.scheme")
    return Settings(dim, **values)


def settings_spec(settings):
    out = {"truncation_degree": settings.truncation}
    for group, keys in SETTINGS_GROUPS.items():
        out[group] = {key: getattr(settings, attr) for key, attr in keys.items()}
    return out


def parse_scenario(spec):
    """Validate a scenario dict and materialize a `Scenario`."""
    _require(spec, "<root>")
    extra = set(spec) - TOP_LEVEL
    if extra:
        raise ScenarioError(f"unknown field(s) {sorted(extra)}", "<root>")
    if spec.get("schema") != SCHEMA:
        raise ScenarioError(f"expected {SCHEMA!r}, got {spec.get('schema')!r}", "schema")
    dim = spec.get("dim")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 3:
        raise ScenarioError("dimension must be an integer >= 3", "dim")
    mode = spec.get("mode", MAIN)
    if mode not in (MAIN, ZVAVITCH):
        raise ScenarioError(f"must be {MAIN!r} or {ZVAVITCH!r}", "mode")
    orientation = spec.get("orientation")
    if mode == ZVAVITCH and orientation not in (DECREASING, INCREASING):
        raise ScenarioError(f"zvavitch mode needs {DECREASING!r} or {INCREASING!r}", "orientation")
    if mode == MAIN and orientation is not None:
        raise ScenarioError("only allowed in zvavitch mode", "orientation")

    bodies = _require(spec.get("bodies"), "bodies")
    if set(bodies) != {"K", "L"}:
        raise ScenarioError("needs exactly the bodies 'K' and 'L'", "bodies")
    built = {}
    for key in ("K", "L"):
        try:
            built[key] = body_from_spec(bodies[key], dim)
        except (BPError, KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"{type(exc).__name__}: {exc}", f"bodies.{key}") from None

    dens_spec = _require(spec.get("densities"), "densities")
    extra = set(dens_spec) - set(DENSITY_KEYS)
    if extra:
        raise ScenarioError(f"unknown field(s) {sorted(extra)}", "densities")
    densities = {}
    for key in DENSITY_KEYS:
        if key in dens_spec:
            densities[key] = _density(dens_spec[key], f"densities.{key}")
        elif mode == ZVAVITCH and key.startswith("g"):
            densities[key] = densities["f" + key[1:]]
        else:
            raise ScenarioError("missing", f"densities.{key}")
    if mode == ZVAVITCH:
        for key in ("g_n", "g_n_minus_1"):
            if densities[key] != densities["f" + key[1:]]:
                raise ScenarioError("zvavitch mode needs g = f", f"densities.{key}")

    pair = None
    if mode == MAIN:
        dec = _require(spec.get("decomposition"), "decomposition")
        if set(dec) != {"a", "b"}:
            raise ScenarioError("needs exactly 'a' and 'b'", "decomposition")
        pair = MonotonePair(_profile(dec["a"], "decomposition.a"), _profile(dec["b"], "decomposition.b"))
    elif "decomposition" in spec:
        raise ScenarioError("zvavitch mode derives the decomposition from h", "decomposition")

    settings = _settings(spec, dim)
    name = spec.get("name", "")
    if not isinstance(name, str):
        raise ScenarioError("expected a string", "name")
    try:
        scenario = Scenario(dim, built["K"], built["L"], densities, mode, pair, orientation, settings, name)
    except BPError as exc:
        raise ScenarioError(str(exc), "<root>") from None
    scenario.spec = canonical_spec(scenario)
    return scenario


def loads_scenario(text):
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_scenario(spec)


def load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        return loads_scenario(fh.read())


def canonical_spec(scenario):
    """Scenario dict with every default materialized."""
    out = {"schema": SCHEMA, "name": scenario.name, "dim": scenario.dim, "mode": scenario.mode}
    if scenario.mode == ZVAVITCH:
        out["orientation"] = scenario.orientation
    out["bodies"] = {"K": scenario.K.to_spec(), "L": scenario.L.to_spec()}
    out["densities"] = {key: scenario.densities[key].to_spec() for key in DENSITY_KEYS}
    if scenario.pair is not None:
        out["decomposition"] = scenario.pair.to_spec()
    out.update(settings_spec(scenario.settings))
    return out


def serialize(scenario):
    return dumps(canonical_spec(scenario))


# built-in examples -----------------------------------------------------------


def _terms(*pairs):
    return [{"coef": float(c), "exp": float(a)} for c, a in pairs]


def body_sections(body, xis, resolution):
    """Lebesgue measure of the central sections body ∩ ξ^⊥."""
    nodes, weights = subsphere_nodes_batch(xis, resolution)
    n = body.dim
    return (body.radial(nodes) ** (n - 1) / (n - 1)) @ weights


def section_ratio(numerator, denominator, dim, hyperplane_resolution=24, section_resolution=64):
    """max over a fine ξ-grid of |numerator ∩ ξ^⊥| / |denominator ∩ ξ^⊥|."""
    xis = hyperplane_normals(dim, hyperplane_resolution)
    return float(np.max(body_sections(numerator, xis, section_resolution) / body_sections(denominator, xis, section_resolution)))


def builtin_spec(example_id, dim=3, eps=0.1):
    """Scenario dict for a built-in example id ("3.1" is accepted for "example-3.1")."""
    if example_id in ("3.1", "3.2", "3.3"):
        example_id = "example-" + example_id
    n = dim
    base = {"schema": SCHEMA, "name": example_id, "dim": n}
    if example_id == "example-3.1":
        generator = {"kind": "ball", "r": 1.0}
        K = {"kind": "section_moment", "body": generator, "resolution": 32}
        return {
            **base,
            "mode": MAIN,
            "bodies": {"K": K, "L": {"kind": "scaled", "factor": 0.9, "body": K}},
            "densities": {
                "f_n": _terms((1, 0)),
                "f_n_minus_1": _terms((1, 2)),
                "g_n": _terms((1, 0)),
                "g_n_minus_1": _terms((1, 2)),
            },
            "decomposition": {"a": _terms((1, 1)), "b": []},
        }
    if example_id == "example-3.2":
        axis = [0.0] * (n - 1) + [1.0]
        bump = PerturbedBall(n, 1.0, [{"degree": 2, "eps": 0.2, "axis": axis}])
        # shrink until every central section is smaller than the unit ball's
        factor = (1.0 / section_ratio(bump, Ball(n, 1.0), n)) ** (1.0 / (n - 1)) * (1.0 - 1e-3)
        return {
            **base,
            "mode": MAIN,
            "bodies": {"K": {"kind": "ball", "r": 1.0}, "L": {"kind": "scaled", "factor": factor, "body": bump.to_spec()}},
            "densities": {
                "f_n": _terms((1, -n)),
                "f_n_minus_1": _terms((1, 0)),
                "g_n": _terms((1, -n)),
                "g_n_minus_1": _terms((1, 0)),
            },
            "decomposition": {"a": _terms((1, n - 1)), "b": []},
        }
    if example_id == "example-3.3":
        if not eps > 0:
            raise ScenarioError("epsilon must be positive", "eps")
        return {
            **base,
            "mode": MAIN,
            "bodies": {"K": {"kind": "ball", "r": 1.1}, "L": {"kind": "ball", "r": 1.0}},
            "densities": {
                "f_n": _terms((1, 1)),
                "f_n_minus_1": _terms((eps, 3), (1, 1)),
                "g_n": _terms((1, 3)),
                "g_n_minus_1": _terms((eps, 5), (1, 3)),
            },
            "decomposition": {"a": _terms((eps, 1)), "b": _terms((1, -1))},
        }
    if example_id == "zvavitch-lebesgue":
        # K: an ellipsoid (an intersection body); L: an l4 ball grown until
        # every central section of K is smaller than the matching one of L
        K = Ellipsoid(n, [1.0] * (n - 1) + [1.25])
        L = LpBall(n, 4.0, 1.0)
        factor = section_ratio(K, L, n) ** (1.0 / (n - 1)) * (1.0 + 1e-3)
        return {
            **base,
            "mode": ZVAVITCH,
            "orientation": DECREASING,
            "bodies": {"K": K.to_spec(), "L": {"kind": "lp_ball", "p": 4.0, "r": factor}},
            "densities": {"f_n": _terms((1, 0)), "f_n_minus_1": _terms((1, 0))},
        }
    raise ScenarioError(f"unknown example id {example_id!r}; choose from {', '.join(BUILTINS)}", "id")


def builtin_scenario(example_id, dim=3, eps=0.1):
    return parse_scenario(builtin_spec(example_id, dim, eps))
