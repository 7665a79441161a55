"""Semi-analytic solution of the symmetrized annulus problem.

On the annulus ``R1 < |x| < R0`` in n dimensions, with the hole of radius
``R1`` carrying a constant and absorbing the rearranged source inside it,
radial integration of ``-Delta_p v = f#`` gives::

    |v'(r)|  = [F(w_n r^n) / (n w_n r^(n-1))]^(1/(p-1))
    v(R0)    = [F(w_n R0^n) / (n w_n R0^(n-1) beta)]^(1/(p-1))
    v(r)     = v(R0) + int_r^R0 |v'|

where ``F(s) = int_0^s f*``. The module also provides a 1D finite-element
Robin eigen-solver on the same annulus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ContractError, ConvergenceError, ParameterError
from .fem import SolveParams, picard_eigen
from .rearrangement import DistributionFunction

__all__ = [
    "FStarSpec",
    "RadialEigenResult",
    "RadialProfile",
    "ball_volume",
    "cumulative_f_star",
    "fstar_from_source",
    "gamma_n",
    "radial_boundary_flux_integral",
    "radial_distribution",
    "solve_radial",
    "solve_radial_eigen",
]


def ball_volume(n: int) -> float:
    """Volume w_n of the unit ball in R^n."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def gamma_n(n: int, p: float) -> float:
    """Isoperimetric constant (n w_n^(1/n))^(p/(p-1)) of the level-set inequality."""
    return (n * ball_volume(n) ** (1.0 / n)) ** (p / (p - 1.0))


@dataclass(frozen=True)
class FStarSpec:
    """Decreasing rearrangement f* of a source on (0, measure).

    ``kind="constant"`` uses ``value``; ``kind="table"`` is the
    piecewise-linear interpolant of ``(s, values)``. Repeated ``s`` nodes
    encode jumps (the right-hand value wins).
    """

    kind: str = "constant"
    value: float = 1.0
    s: tuple = ()
    values: tuple = ()
    measure: float | None = None

    def __post_init__(self):
        if self.kind == "constant":
            if not self.value >= 0:
                raise ParameterError("f* must be non-negative")
        elif self.kind == "table":
            s, v = np.asarray(self.s, float), np.asarray(self.values, float)
            if s.ndim != 1 or s.shape != v.shape or len(s) < 2:
                raise ParameterError("table needs matching s and values with at least 2 nodes")
            if s[0] != 0 or np.any(np.diff(s) < 0):
                raise ParameterError("table nodes must start at 0 and be non-decreasing")
            if np.any(v < 0) or np.any(np.diff(v) > 0):
                raise ParameterError("f* must be non-negative and non-increasing")
            object.__setattr__(self, "s", tuple(s.tolist()))
            object.__setattr__(self, "values", tuple(v.tolist()))
            if self.measure is None:
                object.__setattr__(self, "measure", float(s[-1]))
        else:
            raise ParameterError(f"unknown f* kind {self.kind!r}")

    @classmethod
    def constant(cls, value: float = 1.0, measure: float | None = None) -> "FStarSpec":
        return cls("constant", value=float(value), measure=measure)

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "constant":
            return np.full_like(s, self.value)
        sn, vn = np.asarray(self.s), np.asarray(self.values)
        # right-continuous at repeated nodes
        j = np.clip(np.searchsorted(sn, s, side="right") - 1, 0, len(sn) - 2)
        h = sn[j + 1] - sn[j]
        with np.errstate(invalid="ignore", divide="ignore"):
            lam = np.where(h > 0, (s - sn[j]) / np.where(h > 0, h, 1.0), 0.0)
        out = vn[j] + lam * (vn[j + 1] - vn[j])
        return np.where(s >= sn[-1], vn[-1], out)


def cumulative_f_star(spec: FStarSpec, s):
    """F(s) = int_0^s f* exactly; non-decreasing and concave."""
    s_arr = np.asarray(s, dtype=float)
    limit = spec.measure
    if np.any(s_arr < 0) or (limit is not None and np.any(s_arr > limit * (1 + 1e-12))):
        raise ParameterError(f"s must lie in [0, {limit}]")
    if spec.kind == "constant":
        out = spec.value * s_arr
    else:
        sn, vn = np.asarray(spec.s), np.asarray(spec.values)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(sn) * (vn[:-1] + vn[1:]))])
        j = np.clip(np.searchsorted(sn, s_arr, side="right") - 1, 0, len(sn) - 2)
        x = s_arr - sn[j]
        h = sn[j + 1] - sn[j]
        slope = np.where(h > 0, (vn[j + 1] - vn[j]) / np.where(h > 0, h, 1.0), 0.0)
        out = cum[j] + x * (vn[j] + 0.5 * slope * x)
        out = np.where(s_arr >= sn[-1], cum[-1] + (s_arr - sn[-1]) * vn[-1], out)
    return out if out.ndim else float(out)


def fstar_from_source(mesh, source) -> FStarSpec:
    """f* of a source given by its per-triangle midpoint-rule average on ``mesh``."""
    total = float(mesh.areas.sum())
    if source.kind == "constant":
        return FStarSpec.constant(source.value, measure=total)
    vals = source.midpoint_values(mesh).mean(axis=1)
    order = np.argsort(-vals, kind="stable")
    v, a = vals[order], mesh.areas[order]
    edges = np.concatenate([[0.0], np.cumsum(a)])
    # step function: each triangle is a flat piece, joined by vertical jumps
    s = np.repeat(edges, 2)[1:-1]
    values = np.repeat(v, 2)
    return FStarSpec("table", s=tuple(s), values=tuple(values), measure=total)


def _simpson_adaptive(fun, a, b, tol, max_depth=50):
    """Vectorised adaptive Simpson of ``fun`` over each interval [a_i, b_i]."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    out = np.zeros_like(a)
    owner = np.arange(len(a))
    fa, fb = fun(a), fun(b)
    m = 0.5 * (a + b)
    fm = fun(m)
    whole = (b - a) / 6.0 * (fa + 4 * fm + fb)
    tol = np.broadcast_to(np.asarray(tol, float), a.shape).copy()
    for _ in range(max_depth):
        if len(a) == 0:
            return out
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = fun(lm), fun(rm)
        left = (m - a) / 6.0 * (fa + 4 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4 * frm + fb)
        err = left + right - whole
        done = np.abs(err) <= 15.0 * tol
        np.add.at(out, owner[done], (left + right + err / 15.0)[done])
        keep = ~done
        owner = np.concatenate([owner[keep], owner[keep]])
        a, b = np.concatenate([a[keep], m[keep]]), np.concatenate([m[keep], b[keep]])
        fa, fb = np.concatenate([fa[keep], fm[keep]]), np.concatenate([fm[keep], fb[keep]])
        whole = np.concatenate([left[keep], right[keep]])
        fm = np.concatenate([flm[keep], frm[keep]])
        m = 0.5 * (a + b)
        tol = np.concatenate([tol[keep], tol[keep]]) / 2.0
    if len(a):
        raise ConvergenceError("adaptive Simpson did not reach its tolerance; refine the radial grid",
                               residual=float(np.max(np.abs(whole))))
    return out


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Solution of the symmetrized problem sampled on [R1, R0]."""

    n: int
    p: float
    beta: float
    R0: float
    R1: float
    fstar: FStarSpec
    r: np.ndarray
    v: np.ndarray
    tol: float = 1e-10
    diagnostics: dict = field(default_factory=dict)

    @property
    def omega(self) -> float:
        return ball_volume(self.n)

    @property
    def c_bar(self) -> float:
        return float(self.v[0])

    @property
    def v_boundary(self) -> float:
        return float(self.v[-1])

    @property
    def v_m(self) -> float:
        return float(self.v[-1])

    @property
    def total_mass(self) -> float:
        return self.omega * self.R0**self.n

    @property
    def hole_mass(self) -> float:
        return self.omega * self.R1**self.n

    @property
    def perimeter(self) -> float:
        return self.n * self.omega * self.R0 ** (self.n - 1)

    def fstar_cum(self, s):
        return cumulative_f_star(self.fstar, s)

    def slope(self, r):
        """|v'(r)| (zero inside the hole)."""
        r = np.asarray(r, dtype=float)
        return np.where(r < self.R1, 0.0, _abs_slope(self.n, self.p, self.fstar, np.maximum(r, 0.0)))

    def __call__(self, r):
        """Constant extension: v(r) on [R1, R0], c_bar on [0, R1)."""
        scalar = np.ndim(r) == 0
        rc = np.clip(np.atleast_1d(np.asarray(r, dtype=float)), self.R1, self.R0)
        j = np.clip(np.searchsorted(self.r, rc, side="right") - 1, 0, len(self.r) - 2)
        upper = self.r[j + 1]
        seg = np.zeros_like(rc)
        on_node = rc == self.r[j]
        need = (rc < upper) & ~on_node
        if np.any(need):
            fun = lambda x: _abs_slope(self.n, self.p, self.fstar, x)  # noqa: E731
            seg[need] = _simpson_adaptive(fun, rc[need], upper[need], self.tol * max(self.c_bar, 1e-300))
        out = np.where(on_node, self.v[j], self.v[j + 1] + seg)
        return float(out[0]) if scalar else out

    def table(self) -> np.ndarray:
        return np.stack([self.r, self.v], axis=1)


def _abs_slope(n, p, fstar, r):
    r = np.asarray(r, dtype=float)
    w = ball_volume(n)
    F = cumulative_f_star(fstar, np.minimum(w * r**n, fstar.measure if fstar.measure else np.inf))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(r > 0, F / (n * w * np.where(r > 0, r, 1.0) ** (n - 1)), 0.0)
    return np.maximum(ratio, 0.0) ** (1.0 / (p - 1.0))


def _radial_grid(R0, R1, grid):
    # geometric clustering towards R1, where |v'| varies fastest for small p - 1
    u = np.linspace(0.0, 1.0, grid)
    kappa = 4.0
    return R1 + (R0 - R1) * np.expm1(kappa * u) / np.expm1(kappa)


def _check_radii(n, p, beta, R0, R1):
    if n < 2 or int(n) != n:
        raise ParameterError("dimension n must be an integer >= 2")
    if not p > 1:
        raise ParameterError("p must exceed 1")
    if not beta > 0:
        raise ParameterError("beta must be positive")
    if not 0 <= R1 < R0:
        raise ParameterError("need 0 <= R1 < R0")


def solve_radial(n: int, p: float, beta: float, R0: float, R1: float, spec: FStarSpec,
                 grid: int = 4096, tol: float = 1e-10) -> RadialProfile:
    _check_radii(n, p, beta, R0, R1)
    if grid < 2:
        raise ParameterError("radial grid needs at least 2 points")
    w = ball_volume(n)
    if spec.measure is not None and w * R0**n > spec.measure * (1 + 1e-9):
        raise ParameterError("f* is not defined on the whole symmetrized domain")
    if spec.measure is None:
        spec = FStarSpec(spec.kind, spec.value, spec.s, spec.values, measure=w * R0**n)
    r = _radial_grid(R0, R1, grid)
    F_total = cumulative_f_star(spec, w * R0**n)
    vR0 = (F_total / (n * w * R0 ** (n - 1) * beta)) ** (1.0 / (p - 1.0))
    fun = lambda x: _abs_slope(n, p, spec, x)  # noqa: E731
    scale = max(vR0, float(fun(np.array([R0]))[0]) * (R0 - R1), 1e-300)
    pieces = _simpson_adaptive(fun, r[:-1], r[1:], tol * scale / grid)
    v = vR0 + np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])
    return RadialProfile(n, p, beta, R0, R1, spec, r, v, tol,
                         {"grid": grid, "F_total": float(F_total)})


def radial_boundary_flux_integral(profile: RadialProfile) -> float:
    """int_0^inf tau^(p-1) (int over the outer sphere where v > tau of 1/v) dtau, in closed form."""
    if profile.v_m <= 0:
        return 0.0
    return profile.perimeter * profile.v_m ** (profile.p - 1.0) / profile.p


def radial_distribution(profile: RadialProfile) -> DistributionFunction:
    """phi(t) = |{v~ > t}| as a piecewise quadratic, node-exact at every sample."""
    v, r = profile.v, profile.r
    w, n = profile.omega, profile.n
    if profile.c_bar <= 0:
        return DistributionFunction(np.zeros(1), np.zeros((0, 3)), profile.total_mass)
    if np.any(np.diff(v) >= 0):
        raise ContractError("radial samples are not strictly decreasing; refine or check the source")
    rmid = 0.5 * (r[:-1] + r[1:])
    vmid = profile(rmid)
    # increasing t order: reverse the radial ordering
    t_lo, t_hi = v[1:][::-1], v[:-1][::-1]
    t_mid = vmid[::-1]
    phi_lo, phi_hi = (w * r[1:] ** n)[::-1], (w * r[:-1] ** n)[::-1]
    phi_mid = (w * rmid**n)[::-1]
    h = t_hi - t_lo
    x = t_mid - t_lo
    # quadratic through (0, phi_lo), (x, phi_mid), (h, phi_hi_left)
    d1 = (phi_mid - phi_lo) / x
    d2 = (phi_hi - phi_mid) / (h - x)
    a = (d2 - d1) / h
    b = d1 - a * x
    c = phi_lo
    bp = np.concatenate([[0.0, v[-1]], t_hi])
    coeffs = np.concatenate([[[profile.total_mass, 0.0, 0.0]], np.stack([c, b, a], axis=1)])
    if v[-1] <= 0:
        bp, coeffs = bp[1:], coeffs[1:]
    return DistributionFunction(bp, coeffs, profile.total_mass)


class _RadialAssembler:
    """1D P1 Robin energy on [R1, R0] with the plateau [0, R1] folded into node 0."""

    def __init__(self, n, p, beta, r):
        self.dim, self.p, self.beta, self.r = n, float(p), float(beta), r
        self.n = len(r)
        w = ball_volume(n)
        self.h = np.diff(r)
        self.W = w * (r[1:] ** n - r[:-1] ** n)
        self.plateau = w * r[0] ** n
        self.bnd = n * w * r[-1] ** (n - 1)
        x, q = np.polynomial.legendre.leggauss(4)
        self.xq = 0.5 * (x + 1)
        rq = r[:-1, None] + self.h[:, None] * self.xq[None]
        self.mass_w = n * w * self.h[:, None] * 0.5 * q[None] * rq ** (n - 1)
        idx = np.arange(self.n - 1)
        self._rows = np.concatenate([idx, idx, idx + 1, idx + 1])
        self._cols = np.concatenate([idx, idx + 1, idx, idx + 1])

    def with_exponent(self, p):
        return _RadialAssembler(self.dim, p, self.beta, self.r)

    def _slope(self, x):
        return np.diff(x) / self.h

    def energy(self, x, load, eps):
        s = eps * eps + self._slope(x) ** 2
        grad = float(self.W @ s ** (self.p / 2)) / self.p
        return grad + self.beta * self.bnd * abs(x[-1]) ** self.p / self.p - float(load @ x)

    def gradient(self, x, load, eps):
        g = self._slope(x)
        c = self.W * (eps * eps + g * g) ** (self.p / 2 - 1) * g / self.h
        out = np.zeros(self.n)
        out[:-1] -= c
        out[1:] += c
        out[-1] += self.beta * self.bnd * abs(x[-1]) ** (self.p - 2) * x[-1]
        return out - load

    def hessian(self, x, eps):
        g = self._slope(x)
        s = eps * eps + g * g
        curv = s ** (self.p / 2 - 1)
        if self.p != 2:
            curv = curv + (self.p - 2) * s ** (self.p / 2 - 2) * g * g
        k = self.W * curv / self.h**2
        data = np.concatenate([k, -k, -k, k])
        H = sp.csr_matrix((data, (self._rows, self._cols)), shape=(self.n, self.n)).tolil()
        xb = max(abs(x[-1]), 1e-12) if self.p < 2 else abs(x[-1])
        H[self.n - 1, self.n - 1] += self.beta * self.bnd * (self.p - 1) * xb ** (self.p - 2)
        return H.tocsr()

    def _values_at_q(self, x):
        return x[:-1, None] * (1 - self.xq) + x[1:, None] * self.xq

    def power_integral(self, x):
        return float(np.sum(self.mass_w * np.abs(self._values_at_q(x)) ** self.p)
                     + self.plateau * abs(x[0]) ** self.p)

    def p_energy(self, x):
        return float(self.W @ np.abs(self._slope(x)) ** self.p) + self.beta * self.bnd * abs(x[-1]) ** self.p

    def eigen_load(self, x, lam):
        y = np.abs(self._values_at_q(x)) ** (self.p - 1)
        loc = self.mass_w * y
        out = np.zeros(self.n)
        out[:-1] += loc @ (1 - self.xq)
        out[1:] += loc @ self.xq
        out[0] += self.plateau * abs(x[0]) ** (self.p - 1)
        return lam * out


@dataclass(frozen=True)
class RadialEigenResult:
    lam: float
    r: np.ndarray
    phi: np.ndarray
    history: tuple


def solve_radial_eigen(n: int, p: float, beta: float, R0: float, R1: float, grid: int = 2000,
                       params: SolveParams | None = None) -> RadialEigenResult:
    """First Robin p-eigenvalue of the annulus (ball when R1 = 0), plateau extended on [0, R1]."""
    _check_radii(n, p, beta, R0, R1)
    if grid < 3:
        raise ParameterError("radial eigen grid needs at least 3 points")
    params = params or SolveParams(p=p, beta=beta)
    if params.p != p or params.beta != beta:
        raise ParameterError("solver parameters disagree with (p, beta)")
    r = np.linspace(R1, R0, grid)
    asm = _RadialAssembler(n, p, beta, r)
    lam, phi, history = picard_eigen(asm, params, np.ones(grid))
    return RadialEigenResult(float(lam), r, phi, tuple(history))
