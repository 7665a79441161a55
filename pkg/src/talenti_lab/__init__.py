"""Robin p-Laplace comparison laboratory on multiply connected planar domains."""

from .comparison import (
    ComparisonReport,
    KGrid,
    verify_differential_inequality,
    verify_lorentz_comparisons,
    verify_optimality,
    verify_pointwise,
)
from .fem import SolveParams, SourceSpec, hole_flux, solve_eigen, solve_state, torsion
from .mesh import DomainSpec, build_mesh, import_mesh, region_metrics
from .radial import FStarSpec, radial_distribution, solve_radial, solve_radial_eigen
from .rearrangement import LorentzParams, distribution_function_p1, lorentz_norm, quantile
from .scenario import parse_scenario, run_scenario

__version__ = "0.1.0"

__all__ = [
    "ComparisonReport",
    "DomainSpec",
    "FStarSpec",
    "KGrid",
    "LorentzParams",
    "SolveParams",
    "SourceSpec",
    "build_mesh",
    "distribution_function_p1",
    "hole_flux",
    "import_mesh",
    "lorentz_norm",
    "parse_scenario",
    "quantile",
    "radial_distribution",
    "region_metrics",
    "run_scenario",
    "solve_eigen",
    "solve_radial",
    "solve_radial_eigen",
    "solve_state",
    "torsion",
    "verify_differential_inequality",
    "verify_lorentz_comparisons",
    "verify_optimality",
    "verify_pointwise",
]
