"""Scenario files: schema, parsing with fail-fast hypothesis gates, and the full pipeline."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import jsonschema

from .comparison import (
    CheckRecord,
    ComparisonReport,
    KGrid,
    calibrate,
    check_hypotheses,
    k_max,
    symmetrized_profile,
    verify_differential_inequality,
    verify_lorentz_comparisons,
    verify_optimality,
    verify_pointwise,
)
from .errors import ConfigurationError, ConvergenceError, HypothesisError, ParameterError
from .fem import Field, SolveParams, SourceSpec, hole_flux, solve_state
from .mesh import DomainKind, DomainSpec, Mesh, build_mesh, region_metrics
from .radial import RadialProfile, fstar_from_source
from .rearrangement import DistributionFunction, distribution_function_p1

__all__ = [
    "DOMAIN_SCHEMA",
    "OUTPUT_KINDS",
    "SCENARIO_SCHEMA",
    "Scenario",
    "ScenarioResult",
    "emit_report",
    "execute_scenario",
    "parse_scenario",
    "parse_scenario_dict",
    "run_scenario",
    "write_table",
]

OUTPUT_KINDS = ("report_json", "report_csv", "mu_csv", "profile_csv")
_CHECKS = ("thm1", "cor12", "thm2i", "thm2ii", "diffineq", "torsion", "eigen")

DOMAIN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": [k.value for k in DomainKind]},
        "R0": {"type": "number", "exclusiveMinimum": 0},
        "R1": {"type": "number", "minimum": 0},
        "d": {"type": "number", "minimum": 0},
        "mesh_path": {"type": "string", "minLength": 1},
        "resolution": {
            "type": "array",
            "items": [{"type": "integer", "minimum": 2}, {"type": "integer", "minimum": 8}],
            "minItems": 2,
            "maxItems": 2,
        },
    },
}

_NUM_LIST = {"type": "array", "items": {"type": "number"}, "minItems": 1}

SCENARIO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "domain", "p", "source", "checks"],
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "domain": DOMAIN_SCHEMA,
        "p": {"type": "number", "exclusiveMinimum": 1, "maximum": 10},
        "n": {"type": "integer", "minimum": 2},
        "beta": {"type": "number", "exclusiveMinimum": 0},
        "source": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["constant", "radial_profile", "per_triangle"]},
                "value": {"type": "number", "minimum": 0},
                "radii": _NUM_LIST,
                "values": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
                "center": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            },
        },
        "checks": {"type": "array", "items": {"enum": list(_CHECKS)}, "minItems": 1, "uniqueItems": True},
        "kgrid": {"oneOf": [{"const": "auto"},
                            {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1}]},
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "epsilon_schedule": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                                     "minItems": 1},
                "newton_tol": {"type": "number", "exclusiveMinimum": 0},
                "max_newton_iters": {"type": "integer", "minimum": 1},
                "ls_factor": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "ls_max_steps": {"type": "integer", "minimum": 1},
                "max_eigen_iters": {"type": "integer", "minimum": 1},
            },
        },
        "radial_grid": {"type": "integer", "minimum": 16},
        "calibrate": {"type": "boolean"},
        "outputs": {"type": "array", "items": {"enum": list(OUTPUT_KINDS)}, "uniqueItems": True},
    },
}


@dataclass(frozen=True)
class Scenario:
    name: str
    domain: DomainSpec
    p: float
    source: SourceSpec
    checks: tuple
    n: int = 2
    beta: float = 1.0
    kgrid: object = "auto"
    solver: SolveParams = field(default_factory=SolveParams)
    outputs: tuple = ("report_json", "report_csv")
    radial_grid: int = 4096
    calibrate: bool = True

    def kgrid_for(self, selector: str) -> KGrid:
        return KGrid.for_check(selector, self.n, self.p, None if self.kgrid == "auto" else self.kgrid)

    def with_resolution(self, k: int) -> "Scenario":
        """Generated domains at n_radial = k, n_angular = 4k; imported meshes are unchanged."""
        if self.domain.kind is DomainKind.EXTERNAL_MESH:
            return self
        return replace(self, domain=replace(self.domain, n_radial=int(k), n_angular=4 * int(k)))


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path)


def _schema_error(err: jsonschema.ValidationError) -> ConfigurationError:
    path = list(err.absolute_path)
    if err.validator == "additionalProperties":
        allowed = set(err.schema.get("properties", {}))
        extra = sorted(set(err.instance) - allowed)
        if extra:
            path.append(extra[0])
            return ConfigurationError(f"unknown key {extra[0]!r}", _pointer(path))
    return ConfigurationError(err.message, _pointer(path))


def parse_scenario_dict(data: dict, base_dir: Path | None = None) -> Scenario:
    """Validate a scenario document, fill defaults, and gate every selected check."""
    validator = jsonschema.Draft7Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        raise _schema_error(jsonschema.exceptions.best_match(errors))
    dom = dict(data["domain"])
    res = dom.pop("resolution", None)
    if res is not None:
        dom["n_radial"], dom["n_angular"] = res
    if dom.get("mesh_path") and base_dir is not None and not Path(dom["mesh_path"]).is_absolute():
        dom["mesh_path"] = str(Path(base_dir) / dom["mesh_path"])
    try:
        domain = DomainSpec(**dom)
    except ParameterError as e:
        raise ConfigurationError(str(e), "/domain") from None
    try:
        source = SourceSpec(**{k: tuple(v) if isinstance(v, list) else v for k, v in data["source"].items()})
    except ParameterError as e:
        raise ConfigurationError(str(e), "/source") from None
    n = int(data.get("n", 2))
    if n != 2:
        raise ConfigurationError("finite-element scenarios are two-dimensional; use the oracle command for n > 2",
                                 "/n")
    p, beta = float(data["p"]), float(data.get("beta", 1.0))
    try:
        solver = SolveParams(p=p, beta=beta, **{k: tuple(v) if isinstance(v, list) else v
                                                for k, v in data.get("solver", {}).items()})
    except ParameterError as e:
        raise ConfigurationError(str(e), "/solver") from None
    kg = data.get("kgrid", "auto")
    scen = Scenario(
        name=data["name"], domain=domain, p=p, source=source, checks=tuple(data["checks"]), n=n, beta=beta,
        kgrid="auto" if kg == "auto" else tuple(float(k) for k in kg), solver=solver,
        outputs=tuple(data.get("outputs", ("report_json", "report_csv"))),
        radial_grid=int(data.get("radial_grid", 4096)), calibrate=bool(data.get("calibrate", True)),
    )
    _gate(scen)
    return scen


def _gate(s: Scenario) -> None:
    unit = s.source.is_unit
    for check in s.checks:
        check_hypotheses(check, s.n, s.p, None, unit)
        if check in ("thm1", "thm2ii"):
            ks = KGrid.auto(k_max(check, s.n, s.p)).values if s.kgrid == "auto" else s.kgrid
            check_hypotheses(check, s.n, s.p, ks, unit)


def parse_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"invalid JSON at line {e.lineno}: {e.msg}", "") from None
    return parse_scenario_dict(data, base_dir=path.parent)


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    report: ComparisonReport
    mesh: Mesh
    state: Field
    profile: RadialProfile
    mu: DistributionFunction


def _flux_records(u: Field, params: SolveParams, source: SourceSpec) -> list:
    recs = []
    for hole in range(1, u.mesh.hole_count + 1):
        flux, src = hole_flux(u, params, source, hole)
        recs.append(CheckRecord("flux_compatibility", flux, src, 1e-6 * (1 + abs(src)), 0.0, "eq", "assert",
                                k=None, t=float(hole), hypothesis="converged state solve",
                                anchor="hole flux equals the source mass inside the hole"))
    return recs


def execute_scenario(s: Scenario) -> ScenarioResult:
    """mesh -> state -> distribution -> symmetrized oracle -> selected checks, deterministically.

    Convergence and hypothesis errors are re-raised with the scenario name prefixed.
    """
    try:
        return _execute(s)
    except ConvergenceError as e:
        err = type(e)(f"scenario {s.name}: {e}")
        err.residual = e.residual
        raise err from e
    except HypothesisError as e:
        raise HypothesisError(f"scenario {s.name}: {e}") from e


def _execute(s: Scenario) -> ScenarioResult:
    mesh = build_mesh(s.domain)
    params = s.solver
    u = solve_state(mesh, params, s.source)
    profile = symmetrized_profile(mesh, s.p, s.beta, s.source, s.radial_grid)
    cal = calibrate(mesh, params, s.source) if s.calibrate else None
    rel_tol = max(1e-3, 3.0 * cal["estimate"]) if cal else 1e-3
    rm = region_metrics(mesh)
    prov = {
        "mesh": {"vertices": int(mesh.n_vertices), "triangles": int(mesh.n_triangles),
                 "holes": int(mesh.hole_count),
                 "resolution": list(mesh.resolution) if mesh.resolution else None,
                 "area": rm.area_total, "hole_area": rm.hole_area_total, "perimeter": rm.perimeter_exterior},
        "solver": {"residual": u.diagnostics["residual"],
                   "newton_iterations": [st["iterations"] for st in u.diagnostics["stages"]],
                   "epsilon_schedule": list(params.epsilon_schedule)},
        "oracle": {"R0_sharp": profile.R0, "RS_sharp": profile.R1, "v_boundary": profile.v_boundary,
                   "c_bar": profile.c_bar, "grid": s.radial_grid},
        "rel_tol": rel_tol,
        "calibration": cal,
        "p": s.p, "n": s.n, "beta": s.beta,
    }
    report = ComparisonReport(s.name, tuple(_flux_records(u, params, s.source)), prov)
    for check in s.checks:
        if check in ("thm1", "thm2ii"):
            sub = verify_lorentz_comparisons(u, profile, s.p, s.n, s.kgrid_for(check), check, rel_tol, s.name)
        elif check == "cor12":
            sub = verify_lorentz_comparisons(u, profile, s.p, s.n, KGrid.auto(1.0), "cor12", rel_tol, s.name)
        elif check == "thm2i":
            sub = verify_pointwise(u, profile, s.p, s.n, rel_tol, scenario=s.name)
        elif check == "diffineq":
            fstar = fstar_from_source(mesh, s.source)
            sub = verify_differential_inequality(u, s.p, s.n, s.beta, fstar, rel_tol, scenario=s.name)
            sub = ComparisonReport(s.name, sub.records, {"diffineq": sub.provenance})
            rad = verify_differential_inequality(profile, s.p, s.n, s.beta, scenario=s.name)
            sub = sub.merged(ComparisonReport(s.name, rad.records, {"diffineq_radial": rad.provenance}))
        elif check == "torsion":
            if "eigen" in s.checks:
                continue
            sub = _optimality(s, mesh, u, params, rel_tol, cal, eigen=False)
        else:  # eigen
            sub = _optimality(s, mesh, u, params, rel_tol, cal, eigen=True,
                              include_torsion="torsion" in s.checks)
        report = report.merged(sub)
    return ScenarioResult(report, mesh, u, profile, distribution_function_p1(u))


def _optimality(s, mesh, u, params, rel_tol, cal, eigen, include_torsion=True):
    state = u if s.source.is_unit else None
    cal_unit = cal if s.source.is_unit else None
    sub = verify_optimality(mesh, s.p, s.n, s.beta, params, eigen=eigen, rel_tol=rel_tol, calibration=cal_unit,
                            torsion_state=state, include_torsion=include_torsion, scenario=s.name)
    prov = {"optimality": {k: v for k, v in sub.provenance.items() if k != "calibration"}}
    return ComparisonReport(s.name, sub.records, prov)


def run_scenario(s: Scenario) -> ComparisonReport:
    return execute_scenario(s).report


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) for x in row])


def emit_report(report: ComparisonReport, outputs, out_dir, mu: DistributionFunction | None = None,
                profile: RadialProfile | None = None) -> list:
    """Write the requested artifacts into ``out_dir``; returns the written paths."""
    out_dir = Path(out_dir)
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"{out_dir}: cannot create output directory ({e.strerror or e})") from e
    for kind in outputs:
        if kind not in OUTPUT_KINDS:
            raise ParameterError(f"unknown output kind {kind!r}")
        path = out_dir / {"report_json": f"{report.scenario}_report.json",
                          "report_csv": f"{report.scenario}_report.csv",
                          "mu_csv": f"{report.scenario}_mu.csv",
                          "profile_csv": f"{report.scenario}_profile.csv"}[kind]
        try:
            if kind == "report_json":
                path.write_text(report.to_json())
            elif kind == "report_csv":
                path.write_text(report.to_csv())
            elif kind == "mu_csv":
                if mu is None:
                    raise ParameterError("mu_csv requested without a distribution function")
                write_table(path, ("t", "mu"), mu.table())
            else:
                if profile is None:
                    raise ParameterError("profile_csv requested without a radial profile")
                write_table(path, ("r", "v"), profile.table())
        except OSError as e:
            raise OSError(f"{path}: {e.strerror or e}") from e
        written.append(path)
    return written
