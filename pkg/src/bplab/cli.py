"""``bp`` command-line front end.

Exit codes:

    0  theorem instance verified, or vacuous (K Δ L empty)
    1  input error: unreadable file, invalid JSON, schema violation, unknown id
    2  positive-definiteness inconclusive
    3  section hypothesis not satisfied
    4  implication violated (should never happen)
    5  decomposition invalid or the PD object is not positive definite
    6  a numerical stage failed (diagnostic names the stage)
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import engine
from .errors import BPError, ScenarioError
from .geometry import K_MINUS_L, L_MINUS_K, body_from_spec
from .quadrature import build_sphere_quadrature
from .scenario import BUILTINS, builtin_spec, dumps, load_scenario, parse_scenario
from .transforms import DEFAULT_TAIL_THRESHOLD, DEFAULT_TOL_PD, POSITIVE_DEFINITE, default_resolution, pd_test

EXIT_INPUT = 1
EXIT_STAGE = 6
REPORT_SCHEMA = "bp-report/1"


def _fail(message, code):
    print(f"error: {message}", file=sys.stderr)
    return code


def _parse_overrides(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ScenarioError(f"override {item!r} must look like key=value", "--set")
        key, raw = item.split("=", 1)
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _load(path, overrides):
    if not overrides:
        return load_scenario(path)
    with open(path, encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_scenario(_apply_overrides(spec, overrides))


def _apply_overrides(spec, overrides):
    """Apply ``group.key=value`` (or ``truncation_degree=value``) overrides."""
    if overrides and isinstance(spec, dict):
        spec = dict(spec)
        for dotted, value in overrides.items():
            if "." in dotted:
                group, key = dotted.split(".", 1)
                spec[group] = {**spec.get(group, {}), key: value}
            else:
                spec[dotted] = value
    return spec


def report_dict(scenario, report):
    return {"schema": REPORT_SCHEMA, "scenario": scenario.spec, **report.to_dict()}


def run_check(scenario, out=None, quiet=False):
    try:
        report = engine.run_scenario(scenario)
    except BPError as exc:
        return _fail(str(exc), EXIT_STAGE)
    text = dumps(report_dict(scenario, report))
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    if not quiet:
        d = report.to_dict()
        print(f"scenario: {scenario.name or '(unnamed)'}  n={scenario.dim}  mode={scenario.mode}")
        print(f"decomposition ok: {report.decomposition_ok}")
        print(f"pd: {d['pd']['verdict']} (min {d['pd']['min_value']:.6g}, tail {d['pd']['tail_energy']:.3g})")
        print(f"hypothesis ok: {report.hypothesis_ok} (min margin {d['hypothesis']['min_margin']:.6g})")
        print(f"conclusion: {report.conclusion_lhs:.10g} <= {report.conclusion_rhs:.10g}: {report.conclusion_ok}")
        print(f"verdict: {report.verdict}")
    return report.exit_code


def cmd_check(args):
    try:
        scenario = _load(args.file, _parse_overrides(args.set))
    except (OSError, BPError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    return run_check(scenario, args.out, args.quiet)


def cmd_example(args):
    try:
        spec = builtin_spec(args.id, args.dim, args.eps)
        scenario = parse_scenario(_apply_overrides(spec, _parse_overrides(args.set)))
    except BPError as exc:
        return _fail(str(exc), EXIT_INPUT)
    return run_check(scenario, args.out, args.quiet)


def _read_spec(text):
    """Inline JSON or a path to a JSON file."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    with open(text, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def sphere_function_from_spec(spec):
    """``{"dim": n, "body": {...}, "power": p}`` describes g = ρ_body^p (p = 1 by default)."""
    if not isinstance(spec, dict):
        raise ScenarioError("expected an object", "<root>")
    extra = set(spec) - {"dim", "body", "power"}
    if extra:
        raise ScenarioError(f"unknown field(s) {sorted(extra)}", "<root>")
    dim = spec.get("dim")
    if isinstance(dim, bool) or not isinstance(dim, int):
        raise ScenarioError("dimension must be an integer", "dim")
    power = spec.get("power", 1.0)
    try:
        body = body_from_spec(spec.get("body"), dim)
    except (BPError, KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"{type(exc).__name__}: {exc}", "body") from None
    return dim, (lambda v: body.radial(v) ** power), {"dim": dim, "body": body.to_spec(), "power": float(power)}


def cmd_pd_test(args):
    try:
        dim, g, resolved = sphere_function_from_spec(_read_spec(args.spec))
    except (OSError, BPError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    resolution = args.resolution or default_resolution(dim, args.truncation)
    try:
        quad = build_sphere_quadrature(dim, resolution)
        report = pd_test(g, args.truncation, quad, args.tol, args.tail_threshold)
    except BPError as exc:
        return _fail(str(exc), EXIT_STAGE)
    print(f"verdict: {report.verdict}")
    print(f"min_value: {report.min_value:.17g}")
    print(f"tail_energy: {report.tail_energy:.17g}")
    if args.out:
        payload = {
            "schema": REPORT_SCHEMA,
            "function": resolved,
            "truncation": args.truncation,
            "resolution": resolution,
            "pd": report.summary(),
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(dumps(payload))
    return 0 if report.verdict == POSITIVE_DEFINITE else (2 if report.verdict == "inconclusive" else 5)


def section_profile_rows(scenario, resolution=None):
    """(index, ξ, margin) rows in the fixed order of the hyperplane grid."""
    s = scenario.settings
    xis = engine.hyperplane_normals(scenario.dim, resolution or s.hyperplane_resolution)
    margins = engine.verify_hypothesis(scenario, xis)
    return [(i, xi, m) for i, (xi, m) in enumerate(zip(xis, margins))]


def cmd_section_profile(args):
    try:
        scenario = _load(args.file, _parse_overrides(args.set))
    except (OSError, BPError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    try:
        rows = section_profile_rows(scenario, args.resolution)
    except BPError as exc:
        return _fail(str(exc), EXIT_STAGE)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["xi_index"] + [f"xi_{k + 1}" for k in range(scenario.dim)] + ["margin"])
        for i, xi, margin in rows:
            writer.writerow([i] + [format(float(c), ".17g") for c in xi] + [format(float(margin), ".17g")])
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_oracle(args):
    from . import oracles

    try:
        if args.sub == "ft":
            dim, g, resolved = sphere_function_from_spec(_read_spec(args.spec))
            quad = build_sphere_quadrature(dim, args.resolution or default_resolution(dim, args.truncation))
            density = oracles.distributional_ft_oracle(g, args.sigma, quad, args.truncation)
            probe = build_sphere_quadrature(dim, args.probe_resolution)
            values = density(probe.nodes)
            payload = {"function": resolved, "sigma": args.sigma, "min": float(values.min()), "max": float(values.max())}
        else:
            scenario = _load(args.file, None)
            problem = engine.oriented(scenario)
            density = problem.densities[args.density]
            if args.sub == "region":
                est = oracles.mc_region_measure(args.region, density, problem.K, problem.L, args.samples, args.seed)
            else:
                xi = np.array([float(c) for c in args.xi.split(",")])
                est = oracles.mc_section_measure(args.region, density, xi, problem.K, problem.L, args.samples, args.seed)
            payload = {"value": est.value, "std_error": est.std_error, "samples": est.samples, "seed": est.seed}
    except (OSError, BPError, ValueError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    sys.stdout.write(dumps(payload))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="bp", description="Numerical checks of Busemann-Petty type comparison theorems.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out", help="write the JSON report here")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a setting, e.g. pd.tol=1e-6 (repeatable)")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("check", help="verify a scenario file")
    p.add_argument("file")
    add_common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("example", help="run a built-in example")
    p.add_argument("id", help=f"one of {', '.join(BUILTINS)} (or 3.1, 3.2, 3.3)")
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--eps", type=float, default=0.1, help="epsilon of example-3.3")
    add_common(p)
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("pd-test", help="positive-definiteness test of |x|^-1 g(x/|x|)")
    p.add_argument("spec", help='JSON text or file: {"dim": n, "body": {...}, "power": p}')
    p.add_argument("--truncation", type=int, default=8)
    p.add_argument("--resolution", type=int, default=0)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL_PD)
    p.add_argument("--tail-threshold", type=float, default=DEFAULT_TAIL_THRESHOLD)
    p.add_argument("--out")
    p.set_defaults(func=cmd_pd_test)

    p = sub.add_parser("section-profile", help="per-hyperplane hypothesis margins as CSV")
    p.add_argument("file")
    p.add_argument("--out", required=True)
    p.add_argument("--resolution", type=int, default=0, help="hyperplane grid resolution")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_section_profile)

    p = sub.add_parser("oracle", help="Monte Carlo and distributional reference values")
    osub = p.add_subparsers(dest="sub", required=True)
    for name in ("region", "section"):
        q = osub.add_parser(name)
        q.add_argument("file")
        q.add_argument("--region", choices=[K_MINUS_L, L_MINUS_K], default=K_MINUS_L)
        q.add_argument("--density", choices=list(engine.DENSITY_KEYS), default="f_n" if name == "region" else "f_n_minus_1")
        q.add_argument("--samples", type=int, default=1_000_000)
        q.add_argument("--seed", type=int, default=0)
        if name == "section":
            q.add_argument("--xi", required=True, help="comma-separated normal vector")
    q = osub.add_parser("ft")
    q.add_argument("spec")
    q.add_argument("--sigma", type=float, default=1.0)
    q.add_argument("--truncation", type=int, default=8)
    q.add_argument("--resolution", type=int, default=0)
    q.add_argument("--probe-resolution", type=int, default=12)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
