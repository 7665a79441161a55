"""Command-line front end: ``talenti-lab run | mesh | oracle``.

Exit codes: 0 all checks pass, 2 an asserted check fails, 3 configuration
or hypothesis error, 4 convergence error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema

from .errors import (
    ConfigurationError,
    ContractError,
    ConvergenceError,
    FormatError,
    HypothesisError,
    ParameterError,
    ValidationError,
)
from .mesh import DomainSpec, build_mesh, export_mesh
from .radial import FStarSpec, radial_distribution, solve_radial, solve_radial_eigen
from .scenario import DOMAIN_SCHEMA, emit_report, execute_scenario, parse_scenario, write_table

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CONVERGENCE = 0, 2, 3, 4

ORACLE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["p", "R0"],
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "n": {"type": "integer", "minimum": 2},
        "p": {"type": "number", "exclusiveMinimum": 1},
        "beta": {"type": "number", "exclusiveMinimum": 0},
        "R0": {"type": "number", "exclusiveMinimum": 0},
        "R1": {"type": "number", "minimum": 0},
        "fstar": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["constant", "table"]},
                "value": {"type": "number", "minimum": 0},
                "s": {"type": "array", "items": {"type": "number"}},
                "values": {"type": "array", "items": {"type": "number"}},
            },
        },
        "grid": {"type": "integer", "minimum": 16},
        "eigen": {"type": "boolean"},
        "eigen_grid": {"type": "integer", "minimum": 3},
    },
}


def _load_json(path, schema):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"invalid JSON at line {e.lineno}: {e.msg}") from None
    err = jsonschema.exceptions.best_match(jsonschema.Draft7Validator(schema).iter_errors(data))
    if err is not None:
        raise ConfigurationError(err.message, "/" + "/".join(str(p) for p in err.absolute_path))
    return data


def _run_one(path, args) -> int:
    try:
        scen = parse_scenario(path)
        if args.resolution:
            scen = scen.with_resolution(args.resolution)
        result = execute_scenario(scen)
    except (ConfigurationError, HypothesisError, ParameterError) as e:
        print(f"{path}: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as e:
        print(f"{path}: convergence error: {e}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (FormatError, ValidationError, ContractError) as e:
        print(f"{path}: input error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    rep = result.report
    emit_report(rep, scen.outputs, args.out, result.mu, result.profile)
    asserts = [r for r in rep.records if r.kind == "assert"]
    status = "PASS" if rep.passed else "FAIL"
    print(f"{scen.name}: {status} ({sum(r.passed for r in asserts)}/{len(asserts)} asserted checks)")
    for r in rep.failures():
        print(f"  failed {r.check} k={r.k} t={r.t}: left={r.left!r} right={r.right!r}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_run(args) -> int:
    paths = []
    if args.scenario:
        paths.append(Path(args.scenario))
    if args.batch:
        paths += sorted(Path(args.batch).glob("*.json"))
    if not paths:
        print("run: give a scenario file or --batch DIR", file=sys.stderr)
        return EXIT_CONFIG
    return max(_run_one(p, args) for p in paths)


def cmd_mesh(args) -> int:
    try:
        data = _load_json(args.spec, DOMAIN_SCHEMA)
        res = data.pop("resolution", None)
        if res is not None:
            data["n_radial"], data["n_angular"] = res
        mesh = build_mesh(DomainSpec(**data))
    except (ConfigurationError, ParameterError, FormatError, ValidationError) as e:
        print(f"mesh: {e}", file=sys.stderr)
        return EXIT_CONFIG
    export_mesh(mesh, args.out)
    print(f"wrote {args.out}: {mesh.n_vertices} vertices, {mesh.n_triangles} triangles, {mesh.hole_count} holes")
    return EXIT_OK


def cmd_oracle(args) -> int:
    try:
        d = _load_json(args.params, ORACLE_SCHEMA)
        fs = d.get("fstar", {"kind": "constant", "value": 1.0})
        fstar = FStarSpec(fs["kind"], fs.get("value", 1.0), tuple(fs.get("s", ())), tuple(fs.get("values", ())))
        n, p, beta = int(d.get("n", 2)), float(d["p"]), float(d.get("beta", 1.0))
        R0, R1 = float(d["R0"]), float(d.get("R1", 0.0))
        prof = solve_radial(n, p, beta, R0, R1, fstar, int(d.get("grid", 4096)))
        phi = radial_distribution(prof)
        summary = {"n": n, "p": p, "beta": beta, "R0": R0, "R1": R1, "v_boundary": prof.v_boundary,
                   "c_bar": prof.c_bar, "v_m": prof.v_m, "l1_norm": phi.integral()}
        if d.get("eigen", False):
            summary["lambda"] = solve_radial_eigen(n, p, beta, R0, R1, int(d.get("eigen_grid", 2000))).lam
    except (ConfigurationError, ParameterError) as e:
        print(f"oracle: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as e:
        print(f"oracle: {e}", file=sys.stderr)
        return EXIT_CONVERGENCE
    name = d.get("name", Path(args.params).stem)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_table(out / f"{name}_profile.csv", ("r", "v"), prof.table())
    write_table(out / f"{name}_mu.csv", ("t", "mu"), phi.table())
    (out / f"{name}_oracle.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="talenti-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run scenario files and write reports")
    run.add_argument("scenario", nargs="?", help="scenario JSON file")
    run.add_argument("--out", default=".", help="output directory (default: current)")
    run.add_argument("--batch", help="directory whose *.json scenarios are all run")
    run.add_argument("--resolution", type=int, help="override generated meshes with (k, 4k) rings x angles")
    run.set_defaults(func=cmd_run)
    mesh = sub.add_parser("mesh", help="generate a mesh from a domain JSON")
    mesh.add_argument("spec")
    mesh.add_argument("--out", required=True)
    mesh.set_defaults(func=cmd_mesh)
    orc = sub.add_parser("oracle", help="radial-only tables for the symmetrized problem")
    orc.add_argument("params")
    orc.add_argument("--out", default=".")
    orc.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "resolution", None) is not None and args.resolution < 2:
        print("--resolution must be at least 2", file=sys.stderr)
        return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
