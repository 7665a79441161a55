"""P1 finite elements for the Robin p-Laplacian with hole-constant constraints.

The constrained space (gradient vanishing on every hole) is realised by
collapsing all vertices of a closed hole onto one degree of freedom. The
state problem minimises

    F_eps(w) = 1/p int (eps^2 + |grad w|^2)^(p/2) + beta/p int_{dOmega0} |w|^p - int f w

over that space with damped Newton and a decreasing ``eps`` continuation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from ._newton import newton_minimize
from .errors import ContractError, ConvergenceError, DiagnosticError, ParameterError, ValidationError
from .mesh import Mesh

__all__ = [
    "DofMap",
    "Field",
    "SolveParams",
    "SourceSpec",
    "build_dof_map",
    "constrained_residual",
    "energy_value",
    "field_from_nodal",
    "hole_flux",
    "minimum_on_exterior",
    "p1_power_integral",
    "rayleigh_quotient",
    "solve_eigen",
    "solve_state",
    "torsion",
    "torsion_rayleigh_value",
    "total_source",
]

# Gauss-Legendre on [0, 1]
_GL4_X, _GL4_W = np.polynomial.legendre.leggauss(4)
_GL4_X = 0.5 * (_GL4_X + 1.0)
_GL4_W = 0.5 * _GL4_W


@dataclass(frozen=True)
class SolveParams:
    p: float = 2.0
    beta: float = 1.0
    epsilon_schedule: tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4)
    newton_tol: float = 1e-10
    max_newton_iters: int = 100
    ls_factor: float = 0.5
    ls_max_steps: int = 30
    max_eigen_iters: int = 500

    def __post_init__(self):
        object.__setattr__(self, "epsilon_schedule", tuple(float(e) for e in self.epsilon_schedule))
        if not 1.0 < self.p <= 10.0:
            raise ParameterError(f"p must lie in (1, 10], got {self.p}")
        if not self.beta > 0:
            raise ParameterError(f"beta must be positive, got {self.beta}")
        eps = self.epsilon_schedule
        if not eps or eps[-1] <= 0 or any(a <= b for a, b in zip(eps, eps[1:])):
            raise ParameterError(f"epsilon_schedule must be strictly decreasing and positive, got {eps}")
        if not self.newton_tol > 0 or self.max_newton_iters < 1:
            raise ParameterError("newton_tol must be positive and max_newton_iters >= 1")
        if not 0 < self.ls_factor < 1 or self.ls_max_steps < 1:
            raise ParameterError("line search needs factor in (0, 1) and at least one step")

    @property
    def epsilon_min(self) -> float:
        return self.epsilon_schedule[-1]


@dataclass(frozen=True)
class SourceSpec:
    """Non-negative source term.

    ``kind`` is one of ``constant`` (uses ``value``), ``radial_profile``
    (piecewise-linear table ``values`` over ``radii`` in ``|x - center|``,
    constant beyond the last radius) or ``per_triangle`` (``values`` holds
    one value per triangle).
    """

    kind: str = "constant"
    value: float = 1.0
    radii: tuple[float, ...] = ()
    values: tuple[float, ...] = ()
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.kind == "constant":
            if not self.value >= 0:
                raise ParameterError(f"source must be non-negative, got {self.value}")
        elif self.kind == "radial_profile":
            if len(self.radii) < 2 or len(self.radii) != len(self.values):
                raise ParameterError("radial_profile needs matching radii/values tables of length >= 2")
            if any(b <= a for a, b in zip(self.radii, self.radii[1:])) or self.radii[0] < 0:
                raise ParameterError("radial_profile radii must be increasing and non-negative")
            if min(self.values) < 0:
                raise ParameterError("source must be non-negative")
        elif self.kind == "per_triangle":
            if not self.values or min(self.values) < 0:
                raise ParameterError("per_triangle source needs non-negative values")
        else:
            raise ParameterError(f"unknown source kind {self.kind!r}")

    @classmethod
    def constant(cls, value=1.0):
        return cls("constant", value=value)

    @property
    def is_unit(self) -> bool:
        return self.kind == "constant" and self.value == 1.0

    def midpoint_values(self, mesh: Mesh) -> np.ndarray:
        """f at the three edge midpoints of each triangle, shape (nt, 3).

        Column ``a`` is the midpoint of the edge from local vertex ``a`` to ``a+1``.
        """
        nt = mesh.n_triangles
        if self.kind == "constant":
            return np.full((nt, 3), self.value)
        if self.kind == "per_triangle":
            if len(self.values) != nt:
                raise ContractError(f"per_triangle source has {len(self.values)} values for {nt} triangles")
            return np.repeat(np.asarray(self.values)[:, None], 3, axis=1)
        p = mesh.vertices[mesh.triangles]
        mids = 0.5 * (p + np.roll(p, -1, axis=1))
        r = np.hypot(mids[..., 0] - self.center[0], mids[..., 1] - self.center[1])
        return np.interp(r, self.radii, self.values)


@dataclass(frozen=True, eq=False)
class DofMap:
    node_to_dof: np.ndarray
    hole_dofs: tuple[int, ...]
    free_count: int


@dataclass(frozen=True, eq=False)
class Field:
    """Coefficients of a P1 function that is constant on every closed hole."""

    mesh: Mesh
    dofmap: DofMap
    dof_values: np.ndarray
    params: SolveParams | None = None
    source: SourceSpec | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.array(self.dof_values, dtype=float)
        if vals.shape != (self.dofmap.free_count,):
            raise ContractError(f"expected {self.dofmap.free_count} dof values, got shape {vals.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "dof_values", vals)

    @property
    def nodal(self) -> np.ndarray:
        return self.dof_values[self.dofmap.node_to_dof]

    @property
    def hole_constants(self) -> np.ndarray:
        return self.dof_values[list(self.dofmap.hole_dofs)]


def build_dof_map(mesh: Mesh) -> DofMap:
    m = mesh.hole_count
    owner = np.zeros(mesh.n_vertices, dtype=np.int64)
    for r in range(1, m + 1):
        tris = mesh.triangles[mesh.regions == r]
        if len(tris) == 0:
            raise ValidationError(f"hole {r} has no triangles")
        verts = np.unique(tris)
        clash = verts[owner[verts] != 0]
        if clash.size:
            raise ValidationError(f"vertex {clash[0]} belongs to holes {owner[clash[0]]} and {r}")
        owner[verts] = r
    free = owner == 0
    n_free_vertices = int(free.sum())
    node_to_dof = np.empty(mesh.n_vertices, dtype=np.int64)
    node_to_dof[free] = np.arange(n_free_vertices)
    hole_dofs = tuple(n_free_vertices + r for r in range(m))
    for r in range(1, m + 1):
        node_to_dof[owner == r] = hole_dofs[r - 1]
    node_to_dof.setflags(write=False)
    return DofMap(node_to_dof, hole_dofs, n_free_vertices + m)


def field_from_nodal(mesh: Mesh, nodal, dofmap: DofMap | None = None, **kw) -> Field:
    """Field from vertex values; hole vertices must already agree."""
    dofmap = dofmap or build_dof_map(mesh)
    nodal = np.asarray(nodal, dtype=float)
    vals = np.zeros(dofmap.free_count)
    vals[dofmap.node_to_dof] = nodal
    if not np.allclose(vals[dofmap.node_to_dof], nodal, rtol=0, atol=1e-12 * (1 + np.abs(nodal).max(initial=0))):
        raise ContractError("nodal values are not constant on every hole")
    return Field(mesh, dofmap, vals, **kw)


class _Assembler:
    """Vectorised energy / gradient / Hessian of F_eps in dof coordinates."""

    def __init__(self, mesh: Mesh, dofmap: DofMap, p: float, beta: float):
        self.mesh = mesh
        self.dofmap = dofmap
        self.p = float(p)
        self.beta = float(beta)
        self.n = dofmap.free_count
        bulk = mesh.regions == 0
        self.tri_dofs = dofmap.node_to_dof[mesh.triangles]
        self.bulk_dofs = self.tri_dofs[bulk]
        self.grads = mesh.shape_gradients[bulk]
        self.areas = mesh.areas[bulk]
        self.hole_area = float(mesh.areas[~bulk].sum())
        ext = mesh.edge_tags == 0
        self.edge_dofs = dofmap.node_to_dof[mesh.boundary_edges[ext]]
        self.edge_len = mesh.edge_lengths[ext]
        # shape function values at the Gauss points, (q, 2)
        self.N = np.stack([1.0 - _GL4_X, _GL4_X], axis=1)
        nb = len(self.bulk_dofs)
        self._tri_rows = np.repeat(self.bulk_dofs, 3, axis=1).ravel()
        self._tri_cols = np.tile(self.bulk_dofs, (1, 3)).ravel()
        self._edge_rows = np.repeat(self.edge_dofs, 2, axis=1).ravel()
        self._edge_cols = np.tile(self.edge_dofs, (1, 2)).ravel()
        self._nb = nb

    # -- pieces
    def _tri_grad(self, x):
        return np.einsum("ta,tad->td", x[self.bulk_dofs], self.grads)

    def _trace(self, x):
        return x[self.edge_dofs] @ self.N.T  # (ne, q)

    def gradient_energy(self, x, eps):
        g = self._tri_grad(x)
        s = eps * eps + np.einsum("td,td->t", g, g)
        return float(self.areas @ s ** (self.p / 2)) / self.p + self.hole_area * eps**self.p / self.p

    def boundary_energy(self, x):
        w = np.abs(self._trace(x))
        return self.beta / self.p * float(self.edge_len @ (w**self.p @ _GL4_W))

    def energy(self, x, load, eps):
        return self.gradient_energy(x, eps) + self.boundary_energy(x) - float(load @ x)

    def stiffness_gradient(self, x, eps):
        """Gradient of the non-load part of F_eps."""
        g = self._tri_grad(x)
        s = eps * eps + np.einsum("td,td->t", g, g)
        coef = self.areas * s ** (self.p / 2 - 1)
        local = coef[:, None] * np.einsum("td,tad->ta", g, self.grads)
        out = np.bincount(self.bulk_dofs.ravel(), weights=local.ravel(), minlength=self.n)
        w = self._trace(x)
        wp = np.abs(w) ** (self.p - 2) * w if self.p != 2 else w
        elocal = self.beta * self.edge_len[:, None] * ((wp * _GL4_W) @ self.N)
        out += np.bincount(self.edge_dofs.ravel(), weights=elocal.ravel(), minlength=self.n)
        return out

    def gradient(self, x, load, eps):
        return self.stiffness_gradient(x, eps) - load

    def hessian(self, x, eps):
        g = self._tri_grad(x)
        s = eps * eps + np.einsum("td,td->t", g, g)
        gg = np.einsum("tad,tbd->tab", self.grads, self.grads)
        local = (self.areas * s ** (self.p / 2 - 1))[:, None, None] * gg
        if self.p != 2:
            gphi = np.einsum("td,tad->ta", g, self.grads)
            local += ((self.p - 2) * self.areas * s ** (self.p / 2 - 2))[:, None, None] * (
                gphi[:, :, None] * gphi[:, None, :])
        w = np.abs(self._trace(x))
        if self.p < 2:
            w = np.maximum(w, 1e-12 * (1.0 + w.max(initial=0.0)))
        wq = (self.p - 1) * w ** (self.p - 2) * _GL4_W if self.p != 2 else np.broadcast_to(_GL4_W, w.shape)
        elocal = self.beta * self.edge_len[:, None, None] * np.einsum("eq,qa,qb->eab", wq, self.N, self.N)
        rows = np.concatenate([self._tri_rows, self._edge_rows])
        cols = np.concatenate([self._tri_cols, self._edge_cols])
        data = np.concatenate([local.ravel(), elocal.ravel()])
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def with_exponent(self, p):
        return _Assembler(self.mesh, self.dofmap, p, self.beta)

    def p_energy(self, x):
        """int |grad w|^p + beta int_{dOmega0} |w|^p (no regularisation)."""
        return self.p * (self.gradient_energy(x, 0.0) + self.boundary_energy(x))

    def eigen_load(self, x, lam):
        """lam times the gradient of (1/p) power_integral at x."""
        return self.load_from_midpoints(lam * np.abs(self.midpoint_trace(x)) ** (self.p - 1.0))

    # -- loads and integrals
    def load_from_midpoints(self, fmid):
        """Dof load vector for int f w with f sampled at edge midpoints."""
        A = self.mesh.areas
        # vertex a touches the midpoints of edges (a, a+1) and (a-1, a)
        local = (A / 6.0)[:, None] * (fmid + np.roll(fmid, 1, axis=1))
        return np.bincount(self.tri_dofs.ravel(), weights=local.ravel(), minlength=self.n)

    def midpoint_trace(self, x):
        v = x[self.tri_dofs]
        return 0.5 * (v + np.roll(v, -1, axis=1))

    def power_integral(self, x, p=None):
        """int |w|^p over Omega_0 with the edge-midpoint rule."""
        p = self.p if p is None else p
        return float(self.mesh.areas @ (np.abs(self.midpoint_trace(x)) ** p).sum(axis=1)) / 3.0


def _assembler(mesh, dofmap, params):
    return _Assembler(mesh, dofmap, params.p, params.beta)


def energy_value(field: Field, params: SolveParams, f: SourceSpec, epsilon: float) -> float:
    if epsilon < 0:
        raise ParameterError("epsilon must be non-negative")
    asm = _assembler(field.mesh, field.dofmap, params)
    load = asm.load_from_midpoints(f.midpoint_values(field.mesh))
    return asm.energy(field.dof_values, load, float(epsilon))


def constrained_residual(field: Field, params: SolveParams, f: SourceSpec, epsilon: float | None = None) -> np.ndarray:
    """Gradient of F_eps with respect to every constrained basis function."""
    eps = params.epsilon_min if epsilon is None else epsilon
    asm = _assembler(field.mesh, field.dofmap, params)
    load = asm.load_from_midpoints(f.midpoint_values(field.mesh))
    return asm.gradient(field.dof_values, load, eps)


def _initial_guess(asm, load):
    """Linear (p = 2) solution rescaled to minimise F_0 along its ray."""
    lin = asm.with_exponent(2.0)
    w2 = sp.linalg.spsolve(sp.csc_matrix(lin.hessian(np.zeros(asm.n), 0.0)), load)
    if asm.p == 2.0:
        return w2
    a = asm.p_energy(w2)
    b = float(load @ w2)
    return (b / a) ** (1.0 / (asm.p - 1.0)) * w2


def _minimize(asm, load, params, x0, schedule):
    stages = []
    x = x0
    info = None
    for eps in schedule:
        x, info = newton_minimize(
            lambda y: asm.energy(y, load, eps),
            lambda y: asm.gradient(y, load, eps),
            lambda y: asm.hessian(y, eps),
            x, params.newton_tol, params.max_newton_iters, params.ls_factor, params.ls_max_steps,
        )
        stages.append({"epsilon": eps, "iterations": info.iterations, "residual": info.residual,
                       "converged": info.converged, "energies": info.energies,
                       "steepest_descent_steps": info.steepest_descent_steps})
    if not info.converged:
        raise ConvergenceError(
            f"Newton did not converge at epsilon={schedule[-1]:g} within {params.max_newton_iters} iterations",
            residual=info.residual)
    return x, stages


def solve_state(mesh: Mesh, params: SolveParams, f: SourceSpec, dofmap: DofMap | None = None) -> Field:
    """Minimiser of F_eps over the hole-constant space, continued down ``epsilon_schedule``."""
    dofmap = dofmap or build_dof_map(mesh)
    fmid = f.midpoint_values(mesh)
    if np.any(fmid < 0):
        raise ParameterError("source takes negative values")
    asm = _assembler(mesh, dofmap, params)
    load = asm.load_from_midpoints(fmid)
    if not np.any(load > 0):
        return Field(mesh, dofmap, np.zeros(dofmap.free_count), params, f,
                     {"stages": [], "residual": 0.0, "energy": 0.0, "min_on_boundary": True})
    x0 = _initial_guess(asm, load)
    x, stages = _minimize(asm, load, params, x0, params.epsilon_schedule)
    nodal = x[dofmap.node_to_dof]
    ext_nodes = np.unique(mesh.exterior_edges())
    diag = {
        "stages": stages,
        "residual": stages[-1]["residual"],
        "energy": asm.energy(x, load, params.epsilon_min),
        "min_value": float(nodal.min()),
        "min_on_boundary": bool(nodal[ext_nodes].min() <= nodal.min() + 1e-12 * abs(nodal).max()),
    }
    return Field(mesh, dofmap, x, params, f, diag)


def hole_flux(field: Field, params: SolveParams, f: SourceSpec, hole: int) -> tuple[float, float]:
    """(flux into hole ``hole``, int of f over that hole); holes are numbered from 1.

    The flux is the variationally consistent one: the stiffness residual
    tested against the hole indicator basis function, minus the load
    carried by that function outside the hole.
    """
    m = field.mesh.hole_count
    if not 1 <= hole <= m:
        raise ParameterError(f"hole index {hole} out of range 1..{m}")
    mesh = field.mesh
    asm = _assembler(mesh, field.dofmap, params)
    fmid = f.midpoint_values(mesh)
    dof = field.dofmap.hole_dofs[hole - 1]
    stiff = asm.stiffness_gradient(field.dof_values, params.epsilon_min)[dof]
    in_hole = mesh.regions == hole
    source = float((mesh.areas[in_hole] / 3.0) @ fmid[in_hole].sum(axis=1))
    outside = fmid.copy()
    outside[in_hole] = 0.0
    layer = asm.load_from_midpoints(outside)[dof]
    return float(stiff - layer), source


def torsion(field: Field) -> float:
    """int of the constant extension over Omega_0 (exact for P1)."""
    return float(field.mesh.areas @ field.nodal[field.mesh.triangles].mean(axis=1))


def torsion_rayleigh_value(field: Field, params: SolveParams | None = None) -> float:
    """(int w)^p / (int |grad w|^p + beta int |w|^p); equals (int w)^(p-1) at the torsion state."""
    params = params or field.params
    asm = _assembler(field.mesh, field.dofmap, params)
    return torsion(field) ** params.p / asm.p_energy(field.dof_values)


def rayleigh_quotient(field: Field, params: SolveParams | None = None) -> float:
    params = params or field.params
    asm = _assembler(field.mesh, field.dofmap, params)
    x = field.dof_values
    return asm.p_energy(x) / asm.power_integral(x)


def solve_eigen(mesh: Mesh, params: SolveParams, seed_field: Field | None = None) -> tuple[float, Field]:
    """First Robin p-eigenpair on the hole-constant space by inverse (Picard) iteration.

    Each step solves the state problem with source lambda_k u_k^(p-1),
    where the load is the gradient of (1/p) int u^p under the same
    quadrature as the denominator of the Rayleigh quotient, so that fixed
    points are exactly the critical points of the discrete quotient.
    """
    dofmap = seed_field.dofmap if seed_field is not None else build_dof_map(mesh)
    asm = _assembler(mesh, dofmap, params)
    if seed_field is None:
        x = np.ones(dofmap.free_count)
    else:
        if seed_field.mesh is not mesh:
            raise ContractError("seed field lives on a different mesh")
        x = np.array(seed_field.dof_values, dtype=float)
        if np.any(x < 0) or not np.any(x > 0):
            raise ParameterError("seed field must be non-negative and not identically zero")
    lam, x, history = picard_eigen(asm, params, x)
    return lam, Field(mesh, dofmap, x, params, None,
                      {"lambda_history": history, "iterations": len(history) - 1})


def picard_eigen(asm, params: SolveParams, x):
    """Inverse iteration u_{k+1} = argmin F with load lam_k grad(B/p)(u_k), L^p-normalised.

    ``asm`` supplies energy/gradient/hessian, ``power_integral`` (B),
    ``p_energy`` and ``eigen_load``. Returns (lambda, x, lambda history).
    """
    x = x / asm.power_integral(x) ** (1.0 / params.p)
    lam = asm.p_energy(x)
    history = [lam]
    # allow for rounding in the quotient and eps-regularisation of the inner solves
    slack = max(1e-9, 100.0 * params.newton_tol)
    for it in range(params.max_eigen_iters):
        load = asm.eigen_load(x, lam)
        schedule = params.epsilon_schedule if it == 0 else (params.epsilon_min,)
        y0 = _initial_guess(asm, load) if it == 0 else x
        y, _ = _minimize(asm, load, params, y0, schedule)
        y = np.abs(y)
        y /= asm.power_integral(y) ** (1.0 / params.p)
        lam_new = asm.p_energy(y)
        history.append(lam_new)
        if lam_new > lam * (1.0 + slack):
            raise DiagnosticError(f"eigenvalue iteration increased lambda from {lam:.12g} to {lam_new:.12g}")
        x, lam_old, lam = y, lam, lam_new
        if abs(lam - lam_old) <= params.newton_tol * lam:
            return lam, x, history
    raise ConvergenceError(f"eigenvalue iteration did not converge in {params.max_eigen_iters} steps",
                           residual=abs(history[-1] - history[-2]) / history[-1])


def p1_power_integral(mesh: Mesh, nodal, p: float) -> float:
    """Exact int |w|^p over Omega_0 for integer p; 7-point-per-subtriangle quadrature otherwise."""
    v = np.abs(np.asarray(nodal, dtype=float)[mesh.triangles])
    A = mesh.areas
    if float(p).is_integer():
        k = int(p)
        # complete homogeneous symmetric polynomial h_k(v1, v2, v3)
        h = np.zeros(len(v))
        for i in range(k + 1):
            for j in range(k + 1 - i):
                h += v[:, 0] ** i * v[:, 1] ** j * v[:, 2] ** (k - i - j)
        return float(A @ h) * 2.0 / ((k + 1) * (k + 2))
    return float(A @ _triangle_rule(v, p))


def _triangle_rule(v, p):
    # Duffy-collapsed Gauss rule, 12 x 12 points; |w|^p is smooth unless w vanishes
    x, w = np.polynomial.legendre.leggauss(12)
    x = 0.5 * (x + 1)
    w = 0.5 * w
    a, b = np.meshgrid(x, x, indexing="ij")
    l1 = a.ravel()
    l2 = ((1 - a) * b).ravel()
    wt = (np.outer(w, w) * (1 - a)).ravel() * 2.0
    vals = v[:, :1] * (1 - l1 - l2) + v[:, 1:2] * l1 + v[:, 2:3] * l2
    return (np.abs(vals) ** p) @ wt


def total_source(mesh: Mesh, f: SourceSpec) -> float:
    return float((mesh.areas / 3.0) @ f.midpoint_values(mesh).sum(axis=1))


def minimum_on_exterior(field: Field) -> float:
    return float(field.nodal[np.unique(field.mesh.exterior_edges())].min())


def scaled_source(f: SourceSpec, s: float) -> SourceSpec:
    if f.kind == "constant":
        return replace(f, value=f.value * s)
    return replace(f, values=tuple(s * v for v in f.values))

