"""Scenario-driven command line front end.

Usage:

    rayreduce list
    rayreduce run <scenario> [--seed N] [--dt X] [--t-final X] [--samples N]
                             [--out-dir DIR] [--format csv|json]
                             [--expect constant|non_constant]

``<scenario>`` is either a JSON file or a built-in name such as
``rayleigh4-simulate`` or ``s7-weighted:1:2-einstein-check``.  Outputs are
written atomically (temp file + rename) into --out-dir, which defaults to
$RAYREDUCE_OUT_DIR or the working directory.  Exit codes: 0 success, 2
when the method itself says no (reduction hypotheses fail, an Einstein
verdict contradicts --expect, an infeasible level set), 1 for usage or
parse errors.  Diagnostics are single-line JSON records on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import algebra as alg_mod
from . import einstein as einstein_mod
from . import spheres as sphere_mod
from .equilibria import re_residual, solve_re, verify_re_flow
from .errors import InfeasibleLevelSetError, RayReduceError
from .integrate import (
    IntegratorSpec,
    decay_residual,
    dissipation_check,
    integrate,
    trajectory_header,
    trajectory_rows,
)
from .phase import PhasePoint
from .reduction import rayleigh4_scenario, reduction_report, transversality_check
from .systems import make_system


def _diag(code: str, message: str, context: dict | None = None):
    record = {"code": code, "message": message, "context": context or {}}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".rayreduce-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_line(record: dict) -> str:
    return json.dumps(record, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# built-in scenarios
# ---------------------------------------------------------------------------

_S7_UNWEIGHTED = [[-1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]]


def _s7_weighted(l0: float, l1: float):
    return [[l0, 0.0, 0.0, 0.0], [0.0, l1, 0.0, 0.0]]


def builtin_scenarios() -> dict:
    return {
        "rayleigh4-simulate": {
            "name": "rayleigh4-simulate",
            "kind": "simulate",
            "system": "rayleigh4",
            "x0": {"q": [1.0, 0.0, 0.0, 1.0], "p": [0.0, 1.0, -1.0, 0.0]},
            "integrator": {"method": "rk4", "dt": 1e-3, "t_final": 2.0},
        },
        "harmonic:2:1-simulate": {
            "name": "harmonic:2:1-simulate",
            "kind": "simulate",
            "system": "harmonic:2:1",
            "x0": {"q": [1.0, 0.0], "p": [0.0, 1.0]},
            "integrator": {"method": "conformal_split", "dt": 1e-2,
                           "t_final": 5.0},
        },
        "rayleigh4-reduce": {
            "name": "rayleigh4-reduce",
            "kind": "reduce",
            "system": "rayleigh4",
            "mu": [0.0, 1.0],
            "x0": {"q": [1.0, 0.3, 0.7, -0.2], "p": [0.5, 0.15, 0.2, 0.7]},
            "integrator": {"method": "rk4", "dt": 1e-3, "t_final": 1.0},
            "sampling": {"count": 100, "seed": 42},
        },
        "rayleigh4-equilibria": {
            "name": "rayleigh4-equilibria",
            "kind": "equilibria",
            "system": "rayleigh4",
            "mu": [0.0, 1.0],
            "sampling": {"count": 5, "seed": 7},
        },
        "sl2-lie-analyze": {
            "name": "sl2-lie-analyze",
            "kind": "lie-analyze",
            "algebra": "sl2",
            "mu": [0.0, 1.0, 0.0],
        },
        "so3-lie-analyze": {
            "name": "so3-lie-analyze",
            "kind": "lie-analyze",
            "algebra": "so3",
            "mu": [0.0, 0.0, 1.0],
        },
        "abelian:4-lie-analyze": {
            "name": "abelian:4-lie-analyze",
            "kind": "lie-analyze",
            "algebra": "abelian:4",
            "mu": [0.0, 0.0, 0.0, 1.0],
        },
        "s7-unweighted-einstein-check": {
            "name": "s7-unweighted-einstein-check",
            "kind": "einstein-check",
            "sphere": {"m": 4, "weights": _S7_UNWEIGHTED},
            "mu": [1.0, 1.0],
            "sampling": {"count": 1000, "seed": 1},
        },
        "s7-weighted:1:2-einstein-check": {
            "name": "s7-weighted:1:2-einstein-check",
            "kind": "einstein-check",
            "sphere": {"m": 4, "weights": _s7_weighted(1.0, 2.0)},
            "mu": [1.0, 1.0],
            "sampling": {"count": 1000, "seed": 1},
        },
        "s3-cone-check": {
            "name": "s3-cone-check",
            "kind": "cone-check",
            "sphere": {"m": 2, "weights": [[1.0, 1.0]]},
            "mu": [1.0],
            "sampling": {"count": 100, "seed": 7},
        },
    }


def _resolve_parametrized(name: str) -> dict | None:
    """Resolve harmonic:<n>:<k>-simulate and s7-weighted:<a>:<b>-einstein-check."""
    if name.startswith("harmonic:") and name.endswith("-simulate"):
        key = name[: -len("-simulate")]
        parts = key.split(":")
        if len(parts) == 3:
            n, k = int(parts[1]), float(parts[2])
            method = "conformal_split" if k != 0 else "rk4"
            q0 = [0.0] * n
            p0 = [0.0] * n
            q0[0] = 1.0
            p0[-1] = 1.0
            return {
                "name": name,
                "kind": "simulate",
                "system": key,
                "x0": {"q": q0, "p": p0},
                "integrator": {"method": method, "dt": 1e-2, "t_final": 5.0},
            }
    if name.startswith("s7-weighted:") and name.endswith("-einstein-check"):
        key = name[: -len("-einstein-check")]
        parts = key.split(":")
        if len(parts) == 3:
            l0, l1 = float(parts[1]), float(parts[2])
            return {
                "name": name,
                "kind": "einstein-check",
                "sphere": {"m": 4, "weights": _s7_weighted(l0, l1)},
                "mu": [1.0, 1.0],
                "sampling": {"count": 1000, "seed": 1},
            }
    return None


def list_catalog() -> str:
    return "\n".join(sorted(builtin_scenarios())) + "\n"


# ---------------------------------------------------------------------------
# scenario loading and validation
# ---------------------------------------------------------------------------

_KINDS = ("simulate", "reduce", "equilibria", "lie-analyze",
          "einstein-check", "cone-check")

_REQUIRED = {
    "simulate": ("system", "x0", "integrator"),
    "reduce": ("system", "mu", "x0", "integrator", "sampling"),
    "equilibria": ("system", "mu", "sampling"),
    "lie-analyze": ("algebra", "mu"),
    "einstein-check": ("sphere", "mu", "sampling"),
    "cone-check": ("sphere", "mu", "sampling"),
}


class ScenarioError(Exception):
    pass


def load_scenario(source: str) -> dict:
    catalog = builtin_scenarios()
    if source in catalog:
        return catalog[source]
    parametrized = _resolve_parametrized(source)
    if parametrized is not None:
        return parametrized
    if not os.path.exists(source):
        raise ScenarioError(
            f"{source!r} is neither a catalog scenario nor an existing file"
        )
    with open(source) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(
                f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}"
            )
    validate_scenario(data, source)
    return data


def validate_scenario(data: dict, source: str = "<scenario>"):
    if not isinstance(data, dict):
        raise ScenarioError(f"{source}: scenario must be a JSON object")
    kind = data.get("kind")
    if kind not in _KINDS:
        raise ScenarioError(
            f"{source}: 'kind' must be one of {_KINDS}, got {kind!r}"
        )
    for key in _REQUIRED[kind]:
        if key not in data:
            raise ScenarioError(f"{source}: kind {kind!r} requires field {key!r}")
    if "name" not in data:
        data["name"] = os.path.splitext(os.path.basename(source))[0]
    integ = data.get("integrator")
    if integ is not None:
        for key in ("method", "dt", "t_final"):
            if key not in integ:
                raise ScenarioError(f"{source}: integrator requires {key!r}")


def _apply_overrides(data: dict, args) -> dict:
    data = json.loads(json.dumps(data))  # deep copy
    if args.seed is not None:
        data.setdefault("sampling", {})["seed"] = args.seed
    if args.samples is not None:
        data.setdefault("sampling", {})["count"] = args.samples
    if args.dt is not None and "integrator" in data:
        data["integrator"]["dt"] = args.dt
    if args.t_final is not None and "integrator" in data:
        data["integrator"]["t_final"] = args.t_final
    if args.expect is not None:
        data["expect"] = args.expect
    return data


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def _build_sphere(spec: dict) -> sphere_mod.ContactSphere:
    return sphere_mod.ContactSphere(int(spec["m"]), np.asarray(spec["weights"]))


def _build_system(spec):
    if isinstance(spec, str):
        return make_system(spec)
    if isinstance(spec, dict) and "custom" in spec:
        from .systems import custom
        c = spec["custom"]
        return custom(int(c["n"]), c["h_terms"], c["f_terms"],
                      c.get("generators"))
    raise ScenarioError(f"unrecognized system spec: {spec!r}")


def _build_x0(spec: dict) -> PhasePoint:
    return PhasePoint(np.asarray(spec["q"], float), np.asarray(spec["p"], float))


def _run_simulate(data: dict, out_dir: str, fmt: str) -> int:
    system = _build_system(data["system"])
    x0 = _build_x0(data["x0"])
    integ = data["integrator"]
    spec = IntegratorSpec(integ["method"], float(integ["dt"]),
                          float(integ["t_final"]))
    traj = integrate(system, x0, spec)
    name = data["name"]
    header = trajectory_header(system)
    rows = trajectory_rows(system, traj)
    if fmt == "csv":
        lines = [",".join(header)]
        lines += [",".join(f"{v:.17g}" for v in row) for row in rows]
        _atomic_write(os.path.join(out_dir, f"{name}.csv"),
                      "\n".join(lines) + "\n")
    else:
        payload = [dict(zip(header, [float(v) for v in row])) for row in rows]
        _atomic_write(os.path.join(out_dir, f"{name}.json"),
                      json.dumps(payload, sort_keys=True) + "\n")
    report = {
        "scenario": name,
        "system": system.name,
        "method": spec.method,
        "dt": spec.dt,
        "t_final": spec.t_final,
        "decay_residual": decay_residual(system, traj),
        "dissipation_error": dissipation_check(system, traj),
    }
    _atomic_write(os.path.join(out_dir, f"{name}-report.json"),
                  _json_line(report))
    return 0


def _run_reduce(data: dict, out_dir: str, fmt: str) -> int:
    system = _build_system(data["system"])
    scenario = rayleigh4_scenario(system, np.asarray(data["mu"], float))
    x0 = _build_x0(data["x0"])
    integ = data["integrator"]
    spec = IntegratorSpec(integ["method"], float(integ["dt"]),
                          float(integ["t_final"]))
    sampling = data["sampling"]
    report = reduction_report(scenario, x0, spec,
                              int(sampling["count"]), int(sampling["seed"]))
    report["transversal_at_x0"] = transversality_check(scenario.constraint, x0)
    _atomic_write(os.path.join(out_dir, f"{data['name']}-report.json"),
                  _json_line(report))
    ok = (report["hypotheses"]["sum_condition_holds"]
          and report["transversal_at_x0"])
    if not ok:
        _diag("hypotheses-failed", "ray reduction hypotheses do not hold",
              {"scenario": data["name"]})
        return 2
    return 0


def _run_equilibria(data: dict, out_dir: str, fmt: str) -> int:
    system = _build_system(data["system"])
    mu = np.asarray(data["mu"], float)
    sampling = data["sampling"]
    count = int(sampling["count"])
    seed = int(sampling["seed"])
    rng = np.random.default_rng(seed)
    base_q = np.array([0.0, 0.0, 0.0, 1.0])
    base_p = np.array([0.0, 0.0, -1.0, 0.0])
    lines = []
    found = 0
    for _ in range(count):
        q = base_q + 0.3 * rng.normal(size=system.n)
        p = base_p + 0.3 * rng.normal(size=system.n)
        xi = np.array([0.0, 1.0]) + 0.1 * rng.normal(size=system.k)
        try:
            re = solve_re(system, mu, PhasePoint(q, p), xi)
        except RayReduceError as exc:
            lines.append(_json_line({"error": str(exc)}))
            continue
        flow_err = verify_re_flow(system, re, t_final=1.0)
        found += 1
        lines.append(_json_line({
            "x": {"q": re.x.q.tolist(), "p": re.x.p.tolist()},
            "xi": re.xi.tolist(),
            "residual": re.residual,
            "flow_error": flow_err,
        }))
    _atomic_write(os.path.join(out_dir, f"{data['name']}-equilibria.jsonl"),
                  "".join(lines))
    return 0 if found else 2


def _run_lie_analyze(data: dict, out_dir: str, fmt: str) -> int:
    spec = data["algebra"]
    if isinstance(spec, str):
        algebra = alg_mod.load_algebra(spec)
    else:
        algebra = alg_mod.algebra_from_dict(spec)
    mu = np.asarray(data["mu"], float)
    hyp = alg_mod.check_reduction_hypotheses(algebra, mu)
    report = {
        "scenario": data["name"],
        "dim": algebra.dim,
        "mu": mu.tolist(),
        **hyp.as_dict(),
        "cone_orbit_tangent_dim": alg_mod.cone_orbit_tangent_dim(algebra, mu),
    }
    _atomic_write(os.path.join(out_dir, f"{data['name']}-report.json"),
                  _json_line(report))
    if not hyp.sum_condition_holds:
        _diag("hypotheses-failed",
              "ker(mu) + isotropy does not span the algebra",
              {"scenario": data["name"]})
        return 2
    return 0


def _run_einstein(data: dict, out_dir: str, fmt: str) -> int:
    sphere = _build_sphere(data["sphere"])
    mu = np.asarray(data["mu"], float)
    sampling = data["sampling"]
    verdict = einstein_mod.einstein_verdict(
        sphere, mu, int(sampling["count"]), int(sampling["seed"]))
    basis = alg_mod.kernel_algebra(alg_mod.abelian(sphere.k), mu).basis
    report = {
        "scenario": data["name"],
        "mu": mu.tolist(),
        "kernel_basis": [row.tolist() for row in basis],
        **verdict.as_dict(),
    }
    _atomic_write(os.path.join(out_dir, f"{data['name']}-report.json"),
                  _json_line(report))
    if data.get("emit_samples"):
        samples = einstein_mod.sample_ray_level(
            sphere, mu, int(sampling["count"]), int(sampling["seed"]))
        header = [f"z{j}" for j in range(2 * sphere.m)] + ["norm"]
        lines = [",".join(header)]
        for pt, norm in zip(samples.points, verdict.norm_values):
            lines.append(",".join(f"{v:.17g}" for v in (*pt, norm)))
        _atomic_write(os.path.join(out_dir, f"{data['name']}-samples.csv"),
                      "\n".join(lines) + "\n")
    expect = data.get("expect")
    if expect is not None and expect != verdict.verdict:
        _diag("verdict-mismatch",
              f"expected {expect}, got {verdict.verdict}",
              {"scenario": data["name"],
               "relative_std": verdict.relative_std})
        return 2
    return 0


def _run_cone_check(data: dict, out_dir: str, fmt: str) -> int:
    sphere = _build_sphere(data["sphere"])
    mu = np.asarray(data["mu"], float)
    sampling = data["sampling"]
    result = sphere_mod.cone_compatibility_error(
        sphere, mu, int(sampling["count"]), int(sampling["seed"]))
    report = {
        "scenario": data["name"],
        "mu": mu.tolist(),
        "samples": result.samples,
        "cone_compatibility_error": result.form_error,
        "homogeneity_ratio_error": result.homogeneity_error,
    }
    _atomic_write(os.path.join(out_dir, f"{data['name']}-report.json"),
                  _json_line(report))
    return 0


_DISPATCH = {
    "simulate": _run_simulate,
    "reduce": _run_reduce,
    "equilibria": _run_equilibria,
    "lie-analyze": _run_lie_analyze,
    "einstein-check": _run_einstein,
    "cone-check": _run_cone_check,
}


def run(scenario_source: str, args) -> int:
    try:
        data = load_scenario(scenario_source)
    except ScenarioError as exc:
        _diag("scenario-error", str(exc), {"source": scenario_source})
        return 1
    data = _apply_overrides(data, args)
    out_dir = args.out_dir or os.environ.get("RAYREDUCE_OUT_DIR") or "."
    fmt = args.format
    try:
        return _DISPATCH[data["kind"]](data, out_dir, fmt)
    except InfeasibleLevelSetError as exc:
        _diag("infeasible-level-set", str(exc), {"scenario": data.get("name")})
        return 2
    except RayReduceError as exc:
        _diag(type(exc).__name__, str(exc), {"scenario": data.get("name")})
        return 1
    except (ValueError, KeyError) as exc:
        _diag("invalid-scenario", str(exc), {"scenario": data.get("name")})
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rayreduce",
        description="conformal Hamiltonian dynamics and momentum-ray reduction",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list built-in scenarios")
    runp = sub.add_parser("run", help="run a scenario file or catalog name")
    runp.add_argument("scenario")
    runp.add_argument("--seed", type=int, default=None)
    runp.add_argument("--dt", type=float, default=None)
    runp.add_argument("--t-final", type=float, default=None)
    runp.add_argument("--samples", type=int, default=None)
    runp.add_argument("--out-dir", default=None)
    runp.add_argument("--format", choices=("csv", "json"), default="csv")
    runp.add_argument("--expect", choices=("constant", "non_constant"),
                      default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        sys.stdout.write(list_catalog())
        return 0
    return run(args.scenario, args)


if __name__ == "__main__":
    sys.exit(main())
